//! Snapping onto a grid fine enough to act as an ε/4-net under ℓ1.

use crate::coarsening::{grid_coord, MAX_LEVEL};
use crate::distribution::{DiscreteDistribution, Domain, Point};
use crate::error::{Error, Result};

/// Dyadic grid at level `⌈log₂(4dΔ/ε)⌉`; every point snaps to the center of
/// its cell. Cell ℓ1 diameter is at most ε/4, so snapping moves each point
/// by at most ε/8 and changes any EMD by at most ε/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonNet {
    pub domain: Domain,
    pub eps: f64,
    pub level: u32,
}

impl EpsilonNet {
    pub fn new(domain: Domain, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Param(format!("eps must be positive, got {eps}")));
        }
        let ratio = 4.0 * domain.dim as f64 * domain.span / eps;
        let level = if ratio <= 1.0 { 0 } else { (ratio.log2() - 1e-12).ceil() as u32 };
        if level > MAX_LEVEL {
            return Err(Error::Param(format!("eps = {eps} is too fine for the grid")));
        }
        Ok(EpsilonNet { domain, eps, level })
    }

    /// Side length of a net cell.
    pub fn spacing(&self) -> f64 {
        self.domain.span / 2f64.powi(self.level as i32)
    }

    /// Largest ℓ1 displacement caused by snapping.
    pub fn max_shift(&self) -> f64 {
        self.domain.dim as f64 * self.spacing() / 2.0
    }

    /// Guaranteed bound on |EMD(p, q) − EMD(snap p, snap q)| budgeted by the
    /// tester reduction.
    pub fn emd_perturbation_bound(&self) -> f64 {
        self.eps / 2.0
    }

    pub fn snap(&self, point: &Point) -> Result<Point> {
        self.domain.check(point)?;
        let side = self.spacing();
        Ok(Point::new(
            point
                .coords()
                .iter()
                .map(|&x| (grid_coord(x, self.domain.span, self.level) as f64 + 0.5) * side)
                .collect(),
        ))
    }

    pub fn snap_distribution(&self, p: &DiscreteDistribution) -> Result<DiscreteDistribution> {
        if p.domain() != self.domain {
            return Err(Error::DomainMismatch("distribution and net domains differ".into()));
        }
        let snapped = p
            .support()
            .iter()
            .map(|(x, w)| Ok((self.snap(x)?, *w)))
            .collect::<Result<Vec<_>>>()?;
        DiscreteDistribution::new(snapped, self.domain.dim, self.domain.span)
    }
}
