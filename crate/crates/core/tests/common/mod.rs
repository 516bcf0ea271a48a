//! Independent oracles and instance builders shared by integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use emdtest::{DiscreteDistribution, Point};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimum transport cost between integer masses `a` (rows) and `b`
/// (columns) with equal totals, by exhaustive search over integral flows.
///
/// Transportation polytopes with integral margins have integral vertices,
/// so the optimum over integral flows equals the LP optimum.
pub fn brute_force_cost(cost: &[Vec<f64>], a: &[u32], b: &[u32]) -> f64 {
    assert_eq!(a.iter().sum::<u32>(), b.iter().sum::<u32>());
    let mut memo = HashMap::new();
    solve_row(0, b.to_vec(), cost, a, &mut memo)
}

fn solve_row(i: usize, remaining: Vec<u32>, cost: &[Vec<f64>], a: &[u32], memo: &mut HashMap<(usize, Vec<u32>), f64>) -> f64 {
    if i == a.len() {
        return if remaining.iter().all(|&r| r == 0) { 0.0 } else { f64::INFINITY };
    }
    if let Some(&v) = memo.get(&(i, remaining.clone())) {
        return v;
    }
    let mut best = f64::INFINITY;
    let mut alloc = vec![0u32; remaining.len()];
    compositions(0, a[i], &remaining, &mut alloc, &mut |x| {
        let here: f64 = x.iter().zip(&cost[i]).map(|(&u, &c)| u as f64 * c).sum();
        let rest: Vec<u32> = remaining.iter().zip(x).map(|(r, u)| r - u).collect();
        let v = here + solve_row(i + 1, rest, cost, a, memo);
        if v < best {
            best = v;
        }
    });
    memo.insert((i, remaining), best);
    best
}

// Every way to split `left` units over columns `j..` within their caps.
fn compositions(j: usize, left: u32, caps: &[u32], alloc: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
    if j == caps.len() {
        if left == 0 {
            visit(alloc);
        }
        return;
    }
    let room: u32 = caps[j + 1..].iter().sum();
    let lo = left.saturating_sub(room);
    for u in lo..=left.min(caps[j]) {
        alloc[j] = u;
        compositions(j + 1, left - u, caps, alloc, visit);
    }
    alloc[j] = 0;
}

/// A random instance with rational weights `count/total`.
#[derive(Debug, Clone)]
pub struct IntInstance {
    pub dim: usize,
    pub span: f64,
    pub p_points: Vec<Point>,
    pub p_counts: Vec<u32>,
    pub q_points: Vec<Point>,
    pub q_counts: Vec<u32>,
    pub total: u32,
}

impl IntInstance {
    pub fn p(&self) -> DiscreteDistribution {
        self.build(&self.p_points, &self.p_counts)
    }

    pub fn q(&self) -> DiscreteDistribution {
        self.build(&self.q_points, &self.q_counts)
    }

    fn build(&self, pts: &[Point], counts: &[u32]) -> DiscreteDistribution {
        let t = self.total as f64;
        DiscreteDistribution::new(pts.iter().cloned().zip(counts.iter().map(|&c| c as f64 / t)), self.dim, self.span)
            .unwrap()
    }

    /// Brute-force EMD by the integer oracle.
    pub fn oracle_emd(&self) -> f64 {
        let cost: Vec<Vec<f64>> = self
            .p_points
            .iter()
            .map(|x| self.q_points.iter().map(|y| l1(x, y)).collect())
            .collect();
        brute_force_cost(&cost, &self.p_counts, &self.q_counts) / self.total as f64
    }

    /// `‖p − q‖₁` computed from the integer counts.
    pub fn oracle_l1(&self) -> f64 {
        let mut diff: Vec<(Point, i64)> = Vec::new();
        for (x, &c) in self.p_points.iter().zip(&self.p_counts) {
            diff.push((x.clone(), c as i64));
        }
        for (y, &c) in self.q_points.iter().zip(&self.q_counts) {
            match diff.iter_mut().find(|(x, _)| x == y) {
                Some(e) => e.1 -= c as i64,
                None => diff.push((y.clone(), -(c as i64))),
            }
        }
        diff.iter().map(|(_, d)| d.unsigned_abs() as f64).sum::<f64>() / self.total as f64
    }
}

pub fn l1(x: &Point, y: &Point) -> f64 {
    x.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs()).sum()
}

/// `total` units split into `parts` positive counts.
pub fn random_counts(r: &mut ChaCha8Rng, parts: usize, total: u32) -> Vec<u32> {
    assert!(parts >= 1 && parts as u32 <= total);
    let mut cuts: Vec<u32> = (1..total).collect();
    cuts.shuffle(r);
    let mut cuts = cuts[..parts - 1].to_vec();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain([total]) {
        out.push(c - prev);
        prev = c;
    }
    out
}

/// Distinct points on the lattice `(span/steps)·ℤ^d ∩ [0, span]^d`.
pub fn random_points(r: &mut ChaCha8Rng, count: usize, dim: usize, span: f64, steps: u32) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::new();
    while pts.len() < count {
        let x = Point::new((0..dim).map(|_| r.gen_range(0..=steps) as f64 * span / steps as f64).collect());
        if !pts.contains(&x) {
            pts.push(x);
        }
    }
    pts
}

/// Up to `max_support` points per side, some shared between p and q so
/// zero-cost edges occur.
pub fn random_instance(r: &mut ChaCha8Rng, max_support: usize, dim: usize, span: f64, total: u32) -> IntInstance {
    let sp = r.gen_range(1..=max_support);
    let sq = r.gen_range(1..=max_support);
    let steps = 8;
    let p_points = random_points(r, sp, dim, span, steps);
    let mut q_points = random_points(r, sq, dim, span, steps);
    for y in q_points.iter_mut() {
        if r.gen_bool(0.3) {
            *y = p_points.choose(r).unwrap().clone();
        }
    }
    q_points.sort();
    q_points.dedup();
    let p_counts = random_counts(r, p_points.len(), total);
    let q_counts = random_counts(r, q_points.len(), total);
    IntInstance { dim, span, p_points, p_counts, q_points, q_counts, total }
}

/// `count` wins out of `trials` with a fixed threshold, formatted for logs.
pub fn rate(count: usize, trials: usize) -> String {
    format!("{count}/{trials}")
}

/// `P(X ≤ k)` for `X ~ Binomial(n, p)`.
pub fn binomial_cdf(k: usize, n: usize, p: f64) -> f64 {
    let mut log_choose = 0.0;
    let mut total = 0.0;
    for i in 0..=k.min(n) {
        if i > 0 {
            log_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        total += (log_choose + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp();
    }
    total.min(1.0)
}

/// One-sided binomial check at significance 0.01: `successes` out of
/// `trials` is consistent with a true rate of at least `rate`.
pub fn consistent_with_rate(successes: usize, trials: usize, rate: f64) -> bool {
    binomial_cdf(successes, trials, rate) >= 0.01
}
