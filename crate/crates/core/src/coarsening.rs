//! Dyadic grid hierarchy over `[0, span]^dim`.
//!
//! Level `i` cuts every axis into `2^i` slabs `[kΔ/2^i, (k+1)Δ/2^i)`; the
//! last slab is closed at Δ. Each level-`i` cell is the union of `2^dim`
//! level-`(i+1)` cells.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distribution::{check_same_domain, l1_between, DiscreteDistribution, Domain, Point};
use crate::error::{Error, Result};

/// Deepest supported level (cell coordinates are `u64`).
pub const MAX_LEVEL: u32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub level: u32,
    pub coords: Vec<u64>,
}

impl CellIndex {
    /// The enclosing cell one level up.
    pub fn parent(&self) -> Option<CellIndex> {
        (self.level > 1).then(|| CellIndex {
            level: self.level - 1,
            coords: self.coords.iter().map(|k| k / 2).collect(),
        })
    }
}

// `x / span` is computed once and then scaled by an exact power of two, so
// the slab index at level i is always twice-or-twice-plus-one the index at
// level i-1.
pub(crate) fn grid_coord(x: f64, span: f64, level: u32) -> u64 {
    let cells = 1u64 << level;
    let scaled = (x / span) * cells as f64;
    (scaled.floor() as u64).min(cells - 1)
}

pub fn cell_of(point: &Point, level: u32, domain: Domain) -> Result<CellIndex> {
    if level == 0 || level > MAX_LEVEL {
        return Err(Error::Param(format!("level must be in 1..={MAX_LEVEL}, got {level}")));
    }
    domain.check(point)?;
    Ok(CellIndex {
        level,
        coords: point.coords().iter().map(|&x| grid_coord(x, domain.span, level)).collect(),
    })
}

/// The distribution induced on level-`level` cells. Only occupied cells are
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseningLevel {
    pub level: u32,
    pub cells: BTreeMap<CellIndex, f64>,
}

impl CoarseningLevel {
    pub fn l1(&self, other: &CoarseningLevel) -> f64 {
        l1_between(&self.cells, &other.cells)
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.values().sum()
    }
}

pub fn coarsen(p: &DiscreteDistribution, level: u32) -> Result<CoarseningLevel> {
    let mut cells = BTreeMap::new();
    for (x, w) in p.support() {
        *cells.entry(cell_of(x, level, p.domain())?).or_insert(0.0) += w;
    }
    Ok(CoarseningLevel { level, cells })
}

/// Number of grid levels, `⌈log₂(2Δd/ε)⌉`, or 0 when `ε ≥ 2Δd`.
pub fn level_count(domain: Domain, eps: f64) -> Result<u32> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Param(format!("eps must be positive, got {eps}")));
    }
    let ratio = 2.0 * domain.span * domain.dim as f64 / eps;
    if ratio <= 1.0 {
        return Ok(0);
    }
    let levels = (ratio.log2() - 1e-12).ceil().max(0.0) as u32;
    if levels > MAX_LEVEL {
        return Err(Error::Param(format!("eps = {eps} needs {levels} grid levels")));
    }
    Ok(levels)
}

/// `d·Σ_{i=1}^{L} (Δ/2^{i−1})·‖p^{(i)} − q^{(i)}‖₁ + ε/2`, an upper bound on
/// EMD(p, q).
pub fn coarsening_bound(p: &DiscreteDistribution, q: &DiscreteDistribution, eps: f64) -> Result<f64> {
    check_same_domain(p, q)?;
    let domain = p.domain();
    let mut sum = 0.0;
    for i in 1..=level_count(domain, eps)? {
        let side = domain.span / 2f64.powi(i as i32 - 1);
        sum += side * coarsen(p, i)?.l1(&coarsen(q, i)?);
    }
    Ok(domain.dim as f64 * sum + eps / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    #[test]
    fn origin_is_cell_zero() {
        let dom = Domain::new(2, 3.0).unwrap();
        for i in 1..10 {
            assert_eq!(cell_of(&pt(&[0.0, 0.0]), i, dom).unwrap().coords, vec![0, 0]);
        }
    }

    #[test]
    fn half_open_boundaries() {
        let dom = Domain::new(1, 1.0).unwrap();
        assert_eq!(cell_of(&pt(&[0.5]), 1, dom).unwrap().coords, vec![1]);
        assert_eq!(cell_of(&pt(&[1.0]), 1, dom).unwrap().coords, vec![1]);
        assert_eq!(cell_of(&pt(&[1.0]), 5, dom).unwrap().coords, vec![31]);
    }

    #[test]
    fn two_dim_example() {
        let dom = Domain::new(2, 4.0).unwrap();
        assert_eq!(cell_of(&pt(&[3.2, 0.1]), 2, dom).unwrap().coords, vec![3, 0]);
    }

    #[test]
    fn cell_of_errors() {
        let dom = Domain::new(1, 1.0).unwrap();
        assert!(matches!(cell_of(&pt(&[1.5]), 1, dom), Err(Error::Domain(_))));
        assert!(matches!(cell_of(&pt(&[0.5]), 0, dom), Err(Error::Param(_))));
    }

    #[test]
    fn nesting() {
        let dom = Domain::new(1, 0.7).unwrap();
        for k in 0..=700 {
            let x = pt(&[k as f64 * 0.7 / 700.0]);
            for i in 2..20 {
                let c = cell_of(&x, i, dom).unwrap();
                assert_eq!(c.parent().unwrap(), cell_of(&x, i - 1, dom).unwrap());
            }
        }
    }

    #[test]
    fn low_corner_mass_is_one_cell() {
        let p = DiscreteDistribution::new(
            [(pt(&[0.1, 0.2]), 0.5), (pt(&[0.4, 0.49]), 0.5)],
            2,
            1.0,
        )
        .unwrap();
        let c = coarsen(&p, 1).unwrap();
        assert_eq!(c.cells.len(), 1);
        assert_eq!(c.total_mass(), 1.0);
    }

    #[test]
    fn levels() {
        let d1 = Domain::new(1, 1.0).unwrap();
        assert_eq!(level_count(d1, 0.25).unwrap(), 3);
        assert_eq!(level_count(d1, 0.1).unwrap(), 5);
        assert_eq!(level_count(d1, 0.5).unwrap(), 2);
        assert_eq!(level_count(d1, 2.0).unwrap(), 0);
        assert_eq!(level_count(d1, 3.0).unwrap(), 0);
        assert!(level_count(d1, 0.0).is_err());
    }

    #[test]
    fn bound_of_equal_is_half_eps() {
        let p = DiscreteDistribution::new([(pt(&[0.1]), 0.5), (pt(&[0.9]), 0.5)], 1, 1.0).unwrap();
        assert_eq!(coarsening_bound(&p, &p, 0.2).unwrap(), 0.1);
    }
}
