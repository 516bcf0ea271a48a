//! Sample access with draw accounting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distribution::{DiscreteDistribution, Point};
use crate::error::{Error, Result};

/// Name of the generator behind every [`SampleSource`], recorded in reports.
pub const RNG_NAME: &str = "chacha8";

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0;

/// Anything that hands out i.i.d. draws and counts them.
pub trait Sampler {
    type Item;

    fn draw(&mut self) -> Result<Self::Item>;

    /// Total number of successful draws so far.
    fn draws_taken(&self) -> u64;

    fn seed(&self) -> Option<u64> {
        None
    }

    fn map_draws<U, F>(&mut self, f: F) -> Mapped<'_, Self, F>
    where
        Self: Sized,
        F: FnMut(Self::Item) -> Result<U>,
    {
        Mapped { inner: self, f }
    }
}

impl<S: Sampler + ?Sized> Sampler for &mut S {
    type Item = S::Item;

    fn draw(&mut self) -> Result<S::Item> {
        (**self).draw()
    }

    fn draws_taken(&self) -> u64 {
        (**self).draws_taken()
    }

    fn seed(&self) -> Option<u64> {
        (**self).seed()
    }
}

enum Backing<T> {
    Table { items: Vec<T>, cumulative: Vec<f64> },
    Stream(std::vec::IntoIter<T>),
}

/// A single-owner stream of draws, either from an explicit weight table
/// (seeded ChaCha8) or replayed from a recorded sample list.
pub struct SampleSource<T> {
    backing: Backing<T>,
    rng: ChaCha8Rng,
    seed: Option<u64>,
    draws: u64,
    budget: Option<u64>,
}

impl<T: Clone> SampleSource<T> {
    /// Draws `items[i]` with probability proportional to `weights[i]`.
    /// Zero weights are dropped.
    pub fn from_weights(items: Vec<T>, weights: &[f64], seed: u64) -> Result<Self> {
        if items.len() != weights.len() {
            return Err(Error::Param(format!(
                "{} items but {} weights",
                items.len(),
                weights.len()
            )));
        }
        let mut kept = Vec::with_capacity(items.len());
        let mut cumulative = Vec::with_capacity(items.len());
        let mut acc = 0.0;
        for (item, &w) in items.into_iter().zip(weights) {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Param(format!("invalid weight {w}")));
            }
            if w > 0.0 {
                acc += w;
                kept.push(item);
                cumulative.push(acc);
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptyInput);
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Ok(SampleSource {
            backing: Backing::Table { items: kept, cumulative },
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed: Some(seed),
            draws: 0,
            budget: None,
        })
    }

    /// Replays a recorded sample list; drawing past its end is an error.
    pub fn from_stream(samples: Vec<T>) -> Self {
        SampleSource {
            backing: Backing::Stream(samples.into_iter()),
            rng: ChaCha8Rng::seed_from_u64(0),
            seed: None,
            draws: 0,
            budget: None,
        }
    }

    /// Selects an independent ChaCha stream for the same seed. Call before
    /// drawing.
    pub fn on_stream(mut self, stream: u64) -> Self {
        self.rng.set_stream(stream);
        self
    }

    /// Caps the number of draws; further draws fail with `BudgetExceeded`.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }
}

impl SampleSource<Point> {
    pub fn from_distribution(dist: &DiscreteDistribution, seed: u64) -> Self {
        let (items, weights): (Vec<Point>, Vec<f64>) = dist.support().iter().cloned().unzip();
        Self::from_weights(items, &weights, seed).expect("distribution support is non-empty")
    }
}

impl<T: Clone> Sampler for SampleSource<T> {
    type Item = T;

    fn draw(&mut self) -> Result<T> {
        if let Some(budget) = self.budget {
            if self.draws >= budget {
                return Err(Error::BudgetExceeded { budget });
            }
        }
        let item = match &mut self.backing {
            Backing::Table { items, cumulative } => {
                let u: f64 = self.rng.gen();
                let i = cumulative.partition_point(|&c| c <= u).min(items.len() - 1);
                items[i].clone()
            }
            Backing::Stream(it) => it.next().ok_or(Error::StreamExhausted { taken: self.draws })?,
        };
        self.draws += 1;
        Ok(item)
    }

    fn draws_taken(&self) -> u64 {
        self.draws
    }

    fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// A sampler whose draws are passed through `f`; counts delegate to the
/// inner sampler.
pub struct Mapped<'a, S, F> {
    inner: &'a mut S,
    f: F,
}

impl<S, U, F> Sampler for Mapped<'_, S, F>
where
    S: Sampler,
    F: FnMut(S::Item) -> Result<U>,
{
    type Item = U;

    fn draw(&mut self) -> Result<U> {
        let x = self.inner.draw()?;
        (self.f)(x)
    }

    fn draws_taken(&self) -> u64 {
        self.inner.draws_taken()
    }

    fn seed(&self) -> Option<u64> {
        self.inner.seed()
    }
}

/// Takes `count` draws.
pub fn draw_n<S: Sampler>(src: &mut S, count: u64) -> Result<Vec<S::Item>> {
    (0..count).map(|_| src.draw()).collect()
}
