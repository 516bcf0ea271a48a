//! Exact EMD as the minimum cost of a satisfying flow.

pub mod net;
pub mod transport;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::distribution::{check_same_domain, l1_distance, DiscreteDistribution, NORMALIZATION_TOL};
use crate::error::{Error, Result};

pub use net::EpsilonNet;
pub use transport::{FlowEntry, FlowNetwork, FlowResult, FEASIBILITY_TOL};

/// Supply/demand network between two point distributions under ℓ1.
/// Rows index `p.support()`, columns index `q.support()`.
pub fn l1_network(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<FlowNetwork> {
    check_same_domain(p, q)?;
    let cost = p
        .support()
        .iter()
        .map(|(x, _)| q.support().iter().map(|(y, _)| x.l1(y)).collect())
        .collect();
    let mut zero_edges = Vec::new();
    let (ps, qs) = (p.support(), q.support());
    let (mut i, mut j) = (0, 0);
    while i < ps.len() && j < qs.len() {
        match ps[i].0.cmp(&qs[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                zero_edges.push((i, j));
                i += 1;
                j += 1;
            }
        }
    }
    Ok(FlowNetwork {
        supply: ps.iter().map(|(_, w)| *w).collect(),
        demand: qs.iter().map(|(_, w)| *w).collect(),
        cost,
        zero_edges,
    })
}

/// EMD between two distributions on `[0, span]^dim` under ℓ1.
pub fn emd_exact(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p == q {
        return Ok(0.0);
    }
    Ok(l1_network(p, q)?.solve()?.cost)
}

/// An optimal flow with every zero-cost edge saturated.
pub fn optimal_flow(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<FlowResult> {
    l1_network(p, q)?.solve_saturated()
}

/// Smallest distance between distinct points of the combined support and
/// the diameter of the combined support. `(0, 0)` for a single point.
pub fn support_geometry(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<(f64, f64)> {
    check_same_domain(p, q)?;
    let mut pts: Vec<_> = p.points().chain(q.points()).collect();
    pts.sort();
    pts.dedup();
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for (a, x) in pts.iter().enumerate() {
        for y in &pts[a + 1..] {
            let d = x.l1(y);
            min = min.min(d);
            max = max.max(d);
        }
    }
    Ok((if min.is_finite() { min } else { 0.0 }, max))
}

/// `(‖p−q‖₁/2 · min_dist, ‖p−q‖₁/2 · diameter)`.
pub fn emd_bounds(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    min_dist: f64,
    diameter: f64,
) -> Result<(f64, f64)> {
    if !(min_dist >= 0.0 && diameter >= min_dist) {
        return Err(Error::Param(format!(
            "need 0 <= min_dist <= diameter, got {min_dist}, {diameter}"
        )));
    }
    let half = l1_distance(p, q)? / 2.0;
    Ok((half * min_dist, half * diameter))
}

/// An EMD instance over an explicit finite metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixInstance {
    pub dist: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl MatrixInstance {
    fn validate(&self) -> Result<()> {
        let n = self.dist.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if self.dist.iter().any(|r| r.len() != n) {
            return Err(Error::Param("distance matrix must be square".into()));
        }
        if self.p.len() != n || self.q.len() != n {
            return Err(Error::DomainMismatch(format!(
                "matrix has {n} points, p has {}, q has {}",
                self.p.len(),
                self.q.len()
            )));
        }
        for (i, row) in self.dist.iter().enumerate() {
            if row[i] != 0.0 || row.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                return Err(Error::Param(format!("row {i} is not a valid distance row")));
            }
        }
        for w in [&self.p, &self.q] {
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Param("weights must be non-negative".into()));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Normalization { sum: s, tol: NORMALIZATION_TOL });
            }
        }
        Ok(())
    }

    /// Network restricted to points carrying mass, plus the row and column
    /// index maps back into the matrix.
    pub fn network(&self) -> Result<(FlowNetwork, Vec<usize>, Vec<usize>)> {
        self.validate()?;
        let rows: Vec<usize> = (0..self.p.len()).filter(|&i| self.p[i] > 0.0).collect();
        let cols: Vec<usize> = (0..self.q.len()).filter(|&j| self.q[j] > 0.0).collect();
        let cost = rows
            .iter()
            .map(|&i| cols.iter().map(|&j| self.dist[i][j]).collect())
            .collect();
        let zero_edges = rows
            .iter()
            .enumerate()
            .filter_map(|(a, i)| cols.iter().position(|j| j == i).map(|b| (a, b)))
            .collect();
        let net = FlowNetwork {
            supply: rows.iter().map(|&i| self.p[i]).collect(),
            demand: cols.iter().map(|&j| self.q[j]).collect(),
            cost,
            zero_edges,
        };
        Ok((net, rows, cols))
    }

    pub fn emd(&self) -> Result<f64> {
        Ok(self.network()?.0.solve()?.cost)
    }

    /// Saturated optimal flow with indices into the matrix.
    pub fn optimal_flow(&self) -> Result<FlowResult> {
        let (net, rows, cols) = self.network()?;
        let mut r = net.solve_saturated()?;
        for e in &mut r.entries {
            e.from = rows[e.from];
            e.to = cols[e.to];
        }
        Ok(r)
    }
}
