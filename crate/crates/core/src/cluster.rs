//! Closeness testing for clusterable supports: reduce to ℓ1 testing over
//! the cluster centers, finding the centers first when they are unknown.

use serde::{Deserialize, Serialize};

use crate::budget;
use crate::distribution::{Domain, Point};
use crate::error::{Error, Result};
use crate::l1::{l1_test_collision, L1TesterConfig};
use crate::sampling::Sampler;
use crate::verdict::{Decision, SamplesUsed, TestParams, TestVerdict};

/// Failure probability handed to the center-level ℓ1 tester.
pub const CENTER_TEST_DELTA: f64 = 1.0 / 3.0;

/// Centers of a clustering, its cluster diameter bound `b` and the mass `γ`
/// allowed to lie outside every cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centers: Vec<Point>,
    pub diameter: f64,
    pub unclustered_mass: f64,
}

impl ClusterModel {
    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = self.centers.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Param("cluster centers must be distinct".into()));
        }
        if !(self.diameter >= 0.0) || !(0.0..=1.0).contains(&self.unclustered_mass) {
            return Err(Error::Param("need diameter >= 0 and unclustered mass in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterTestConfig {
    pub dim: usize,
    pub span: f64,
    pub eps: f64,
    /// Budget multiplier for the center-level ℓ1 tester.
    pub c: f64,
    /// Budget multiplier for representative search.
    pub c_reps: f64,
}

impl ClusterTestConfig {
    pub fn new(dim: usize, span: f64, eps: f64) -> Self {
        ClusterTestConfig { dim, span, eps, c: 1.0, c_reps: 1.0 }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_c_reps(mut self, c_reps: f64) -> Self {
        self.c_reps = c_reps;
        self
    }

    fn domain(&self) -> Result<Domain> {
        Domain::new(self.dim, self.span).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        let dom = self.domain()?;
        if !(self.eps > 0.0 && self.eps < 2.0 * dom.diameter()) {
            return Err(Error::Config(format!("eps must be in (0, 2dΔ), got {}", self.eps)));
        }
        if !(self.c > 0.0 && self.c_reps > 0.0) {
            return Err(Error::Config("budget multipliers must be positive".into()));
        }
        Ok(())
    }

    /// ℓ1 tester over `k` centers at distance `ε/(dΔ)`.
    pub fn center_config(&self, k: usize) -> L1TesterConfig {
        L1TesterConfig::new(k as f64, self.eps / (self.dim as f64 * self.span), CENTER_TEST_DELTA)
            .with_c(self.c)
    }

    /// Draws per source of the known-centers tester with `k` centers.
    pub fn known_centers_budget(&self, k: usize) -> u64 {
        self.center_config(k).collision_budget()
    }

    /// `b = ε/4` used when searching for centers.
    pub fn search_radius(&self) -> f64 {
        self.eps / 4.0
    }

    /// `γ = ε/(4dΔ)`.
    pub fn search_gamma(&self) -> f64 {
        self.eps / (4.0 * self.dim as f64 * self.span)
    }

    /// Draws from the merged stream during representative search.
    pub fn representatives_budget(&self, k: usize) -> u64 {
        budget::representatives(k, self.search_gamma(), self.c_reps)
    }

    fn params(&self) -> TestParams {
        TestParams { eps: self.eps, delta: None, dim: Some(self.dim), span: Some(self.span) }
    }
}

/// Index of the ℓ1-nearest center; ties go to the lowest index.
pub fn assign_to_centers(point: &Point, centers: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = point.l1(c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn test_over_centers<S, R>(
    src_p: &mut S,
    src_q: &mut R,
    centers: &[Point],
    declared_k: usize,
    cfg: &ClusterTestConfig,
) -> Result<TestVerdict>
where
    S: Sampler<Item = Point>,
    R: Sampler<Item = Point>,
{
    let l1cfg = cfg.center_config(declared_k);
    let mut cp = src_p.map_draws(|x| Ok(assign_to_centers(&x, centers)));
    let mut cq = src_q.map_draws(|x| Ok(assign_to_centers(&x, centers)));
    let v = l1_test_collision(&mut cp, &mut cq, &l1cfg)?;
    Ok(TestVerdict { params: cfg.params(), ..v })
}

/// Known-centers tester: map every draw to its nearest center and run the
/// collision ℓ1 tester over the `k` centers at distance `ε/(dΔ)`.
///
/// The guarantee needs the combined support to split into `k` clusters of
/// diameter `ε/2` around `centers`; without it the run still completes.
pub fn emd_test_clustered_known<S, R>(
    src_p: &mut S,
    src_q: &mut R,
    centers: &[Point],
    cfg: &ClusterTestConfig,
) -> Result<TestVerdict>
where
    S: Sampler<Item = Point>,
    R: Sampler<Item = Point>,
{
    cfg.validate()?;
    if centers.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dom = cfg.domain()?;
    for c in centers {
        dom.check(c)?;
    }
    test_over_centers(src_p, src_q, centers, centers.len(), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Representatives {
    Found(Vec<Point>),
    Reject,
}

/// Greedy representative search over `⌈c·k·lg k/γ⌉` draws: a draw farther
/// than `2b` from every representative so far becomes a new one; `k + 1`
/// representatives means reject. The whole budget is always drawn.
pub fn find_representatives<S>(src: &mut S, k: usize, b: f64, gamma: f64, c: f64) -> Result<Representatives>
where
    S: Sampler<Item = Point>,
{
    if k == 0 || !(b > 0.0) || !(gamma > 0.0 && gamma < 1.0) || !(c > 0.0) {
        return Err(Error::Param("need k >= 1, b > 0, gamma in (0, 1), c > 0".into()));
    }
    let m = budget::representatives(k, gamma, c);
    let mut reps: Vec<Point> = Vec::new();
    let mut overflow = false;
    for _ in 0..m {
        let x = src.draw()?;
        if overflow || reps.iter().any(|r| r.l1(&x) <= 2.0 * b) {
            continue;
        }
        reps.push(x);
        overflow = reps.len() > k;
    }
    Ok(if overflow { Representatives::Reject } else { Representatives::Found(reps) })
}

/// Interleaves draws from two samplers, starting with the first.
pub struct Alternating<'a, S, R> {
    first: &'a mut S,
    second: &'a mut R,
    next_first: bool,
}

impl<'a, S, R> Alternating<'a, S, R> {
    pub fn new(first: &'a mut S, second: &'a mut R) -> Self {
        Alternating { first, second, next_first: true }
    }
}

impl<S, R> Sampler for Alternating<'_, S, R>
where
    S: Sampler,
    R: Sampler<Item = S::Item>,
{
    type Item = S::Item;

    fn draw(&mut self) -> Result<S::Item> {
        let x = if self.next_first { self.first.draw()? } else { self.second.draw()? };
        self.next_first = !self.next_first;
        Ok(x)
    }

    fn draws_taken(&self) -> u64 {
        self.first.draws_taken() + self.second.draws_taken()
    }
}

/// Unknown-centers tester: find at most `k` representatives at radius
/// `b = ε/4` with slack `γ = ε/(4dΔ)` on the alternating p/q stream, then run
/// the known-centers tester around them. Representative rejection rejects.
///
/// Draws: `⌈m/2⌉` from p and `⌊m/2⌋` from q during the search, plus the
/// known-centers budget for `k` centers from each source when the search
/// succeeds.
pub fn emd_test_clustered_unknown<S, R>(
    src_p: &mut S,
    src_q: &mut R,
    k: usize,
    cfg: &ClusterTestConfig,
) -> Result<TestVerdict>
where
    S: Sampler<Item = Point>,
    R: Sampler<Item = Point>,
{
    cfg.validate()?;
    let (p0, q0) = (src_p.draws_taken(), src_q.draws_taken());
    let reps = {
        let mut merged = Alternating::new(src_p, src_q);
        find_representatives(&mut merged, k, cfg.search_radius(), cfg.search_gamma(), cfg.c_reps)?
    };
    let decision = match reps {
        Representatives::Reject => Decision::Reject,
        Representatives::Found(centers) => test_over_centers(src_p, src_q, &centers, k, cfg)?.decision,
    };
    Ok(TestVerdict {
        decision,
        params: cfg.params(),
        samples_used: SamplesUsed { p: src_p.draws_taken() - p0, q: src_q.draws_taken() - q0 },
    })
}
