//! Points of the box `[0, span]^dim`, finite distributions over them and
//! empirical histograms built from draws.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|sum(w) - 1|` accepted by constructors.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A point of `[0, span]^dim`.
///
/// Equality and ordering are by coordinate bit pattern (with `-0.0` folded
/// into `0.0`), so points can key ordered maps. Coordinates are finite by
/// construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords.into_iter().map(|c| if c == 0.0 { 0.0 } else { c }).collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point::new(v)
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Point {}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or_else(|| self.0.len().cmp(&other.0.len()))
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for c in &self.0 {
            c.to_bits().hash(state);
        }
    }
}

/// The ambient box: dimension `dim` and side length `span` (Δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub dim: usize,
    pub span: f64,
}

impl Domain {
    pub fn new(dim: usize, span: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::Domain(format!("span must be positive, got {span}")));
        }
        Ok(Domain { dim, span })
    }

    pub fn check(&self, point: &Point) -> Result<()> {
        if point.dim() != self.dim {
            return Err(Error::Domain(format!(
                "point has {} coordinates, domain dimension is {}",
                point.dim(),
                self.dim
            )));
        }
        for &c in point.coords() {
            if !(c.is_finite() && (0.0..=self.span).contains(&c)) {
                return Err(Error::Domain(format!("coordinate {c} outside [0, {}]", self.span)));
            }
        }
        Ok(())
    }

    /// ℓ1 diameter of the box.
    pub fn diameter(&self) -> f64 {
        self.dim as f64 * self.span
    }
}

/// A finitely supported probability distribution on a [`Domain`].
///
/// Immutable after construction; the support is kept sorted by point with
/// strictly positive weights that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    domain: Domain,
    support: Vec<(Point, f64)>,
}

impl DiscreteDistribution {
    /// Builds a distribution, merging duplicate points.
    pub fn new<I>(points_with_weights: I, dim: usize, span: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, f64)>,
    {
        let domain = Domain::new(dim, span)?;
        let mut merged: BTreeMap<Point, f64> = BTreeMap::new();
        for (point, w) in points_with_weights {
            domain.check(&point)?;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Domain(format!("weight must be positive, got {w}")));
            }
            *merged.entry(point).or_insert(0.0) += w;
        }
        if merged.is_empty() {
            return Err(Error::EmptyInput);
        }
        let sum: f64 = merged.values().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization { sum, tol: NORMALIZATION_TOL });
        }
        let support = merged.into_iter().map(|(p, w)| (p, w / sum)).collect();
        Ok(DiscreteDistribution { domain, support })
    }

    pub fn point_mass(point: Point, dim: usize, span: f64) -> Result<Self> {
        Self::new([(point, 1.0)], dim, span)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn support(&self) -> &[(Point, f64)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn weight_of(&self, point: &Point) -> f64 {
        self.support
            .binary_search_by(|(p, _)| p.cmp(point))
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.support.iter().map(|(p, _)| p)
    }

    pub fn to_file(&self) -> DistributionFile {
        DistributionFile {
            d: self.domain.dim,
            delta: self.domain.span,
            points: self
                .support
                .iter()
                .map(|(p, w)| WeightedPoint { coords: p.coords().to_vec(), w: *w })
                .collect(),
        }
    }

    pub fn from_file(file: &DistributionFile) -> Result<Self> {
        Self::new(
            file.points.iter().map(|wp| (Point::new(wp.coords.clone()), wp.w)),
            file.d,
            file.delta,
        )
    }
}

/// On-disk JSON layout of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub d: usize,
    pub delta: f64,
    pub points: Vec<WeightedPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub coords: Vec<f64>,
    pub w: f64,
}

/// Empirical distribution of a sample: weight = multiplicity / count.
pub fn empirical(samples: &[Point], dim: usize, span: f64) -> Result<DiscreteDistribution> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hist: Histogram<Point> = samples.iter().cloned().collect();
    DiscreteDistribution::new(hist.frequencies(), dim, span)
}

pub(crate) fn check_same_domain(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if p.domain != q.domain {
        return Err(Error::DomainMismatch(format!(
            "(d={}, span={}) vs (d={}, span={})",
            p.domain.dim, p.domain.span, q.domain.dim, q.domain.span
        )));
    }
    Ok(())
}

/// `Σ_x |p(x) − q(x)|` over the union of supports.
pub fn l1_distance(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_same_domain(p, q)?;
    Ok(merge_l1(
        p.support.iter().map(|(x, w)| (x, *w)),
        q.support.iter().map(|(x, w)| (x, *w)),
    ))
}

/// ℓ1 distance between two weight maps over an ordered index set.
pub fn l1_between<T: Ord>(p: &BTreeMap<T, f64>, q: &BTreeMap<T, f64>) -> f64 {
    merge_l1(p.iter().map(|(k, w)| (k, *w)), q.iter().map(|(k, w)| (k, *w)))
}

// Both iterators must be sorted by key.
fn merge_l1<'a, T: Ord + 'a>(
    p: impl Iterator<Item = (&'a T, f64)>,
    q: impl Iterator<Item = (&'a T, f64)>,
) -> f64 {
    let mut p = p.peekable();
    let mut q = q.peekable();
    let mut total = 0.0;
    loop {
        match (p.peek(), q.peek()) {
            (Some((a, wa)), Some((b, wb))) => match a.cmp(b) {
                Ordering::Less => {
                    total += wa;
                    p.next();
                }
                Ordering::Greater => {
                    total += wb;
                    q.next();
                }
                Ordering::Equal => {
                    total += (wa - wb).abs();
                    p.next();
                    q.next();
                }
            },
            (Some((_, wa)), None) => {
                total += wa;
                p.next();
            }
            (None, Some((_, wb))) => {
                total += wb;
                q.next();
            }
            (None, None) => return total,
        }
    }
}

/// Occurrence counts over an ordered element type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram<T: Ord> {
    counts: BTreeMap<T, u64>,
    total: u64,
}

impl<T: Ord> Default for Histogram<T> {
    fn default() -> Self {
        Histogram { counts: BTreeMap::new(), total: 0 }
    }
}

impl<T: Ord> Histogram<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, item: T) {
        *self.counts.entry(item).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, item: &T) -> u64 {
        self.counts.get(item).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<T, u64> {
        &self.counts
    }

    pub fn frequency(&self, item: &T) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(item) as f64 / self.total as f64
        }
    }

    /// Number of unordered pairs of equal draws.
    pub fn self_collisions(&self) -> u64 {
        self.counts.values().map(|&c| c * c.saturating_sub(1) / 2).sum()
    }

    /// Number of (x, y) pairs, x from `self` and y from `other`, with x = y.
    pub fn cross_collisions(&self, other: &Histogram<T>) -> u64 {
        self.counts
            .iter()
            .map(|(k, &c)| c * other.count(k))
            .sum()
    }
}

impl<T: Ord + Clone> Histogram<T> {
    pub fn frequencies(&self) -> BTreeMap<T, f64> {
        let n = self.total as f64;
        self.counts.iter().map(|(k, &c)| (k.clone(), c as f64 / n)).collect()
    }
}

impl<T: Ord> FromIterator<T> for Histogram<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut h = Histogram::new();
        for x in iter {
            h.add(x);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    #[test]
    fn fair_pair_is_valid() {
        let p = DiscreteDistribution::new([(pt(&[0.0]), 0.5), (pt(&[1.0]), 0.5)], 1, 1.0).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.weight_of(&pt(&[1.0])), 0.5);
    }

    #[test]
    fn point_mass_is_valid() {
        let p = DiscreteDistribution::point_mass(pt(&[0.0]), 1, 1.0).unwrap();
        assert_eq!(p.support(), &[(pt(&[0.0]), 1.0)]);
    }

    #[test]
    fn duplicates_merge() {
        let p = DiscreteDistribution::new([(pt(&[0.0]), 0.5), (pt(&[0.0]), 0.5)], 1, 1.0).unwrap();
        assert_eq!(p.support(), &[(pt(&[0.0]), 1.0)]);
    }

    #[test]
    fn negative_zero_merges_with_zero() {
        let p = DiscreteDistribution::new([(pt(&[-0.0]), 0.5), (pt(&[0.0]), 0.5)], 1, 1.0).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn rejects_unnormalized() {
        let err = DiscreteDistribution::new([(pt(&[0.0]), 0.5), (pt(&[1.0]), 0.4)], 1, 1.0);
        assert!(matches!(err, Err(Error::Normalization { .. })));
    }

    #[test]
    fn rejects_out_of_domain() {
        let err = DiscreteDistribution::new([(pt(&[1.5]), 1.0)], 1, 1.0);
        assert!(matches!(err, Err(Error::Domain(_))));
        let err = DiscreteDistribution::new([(pt(&[0.5, 0.5]), 1.0)], 1, 1.0);
        assert!(matches!(err, Err(Error::Domain(_))));
        let err = DiscreteDistribution::new([(pt(&[0.5]), 1.0)], 0, 1.0);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let err = DiscreteDistribution::new([(pt(&[0.0]), 1.0), (pt(&[1.0]), 0.0)], 1, 1.0);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn empirical_counts() {
        let a = pt(&[0.25]);
        let b = pt(&[0.75]);
        let e = empirical(&[a.clone(), a.clone(), b.clone(), b.clone()], 1, 1.0).unwrap();
        assert_eq!(e.weight_of(&a), 0.5);
        assert_eq!(e.weight_of(&b), 0.5);
        let e = empirical(&[a.clone()], 1, 1.0).unwrap();
        assert_eq!(e.weight_of(&a), 1.0);
        assert_eq!(empirical(&[], 1, 1.0), Err(Error::EmptyInput));
    }

    #[test]
    fn l1_basic_cases() {
        let p = DiscreteDistribution::new([(pt(&[0.0]), 0.5), (pt(&[1.0]), 0.5)], 1, 1.0).unwrap();
        assert_eq!(l1_distance(&p, &p).unwrap(), 0.0);
        let q = DiscreteDistribution::point_mass(pt(&[0.5]), 1, 1.0).unwrap();
        assert_eq!(l1_distance(&p, &q).unwrap(), 2.0);
        // biased endpoint pair with eps = 0.1, span = 1
        let q = DiscreteDistribution::new([(pt(&[0.0]), 0.6), (pt(&[1.0]), 0.4)], 1, 1.0).unwrap();
        assert!((l1_distance(&p, &q).unwrap() - 0.2).abs() < 1e-15);
        let r = DiscreteDistribution::point_mass(pt(&[0.0, 0.0]), 2, 1.0).unwrap();
        assert!(matches!(l1_distance(&p, &r), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn file_round_trip() {
        let p = DiscreteDistribution::new([(pt(&[0.0, 1.0]), 0.25), (pt(&[1.0, 0.5]), 0.75)], 2, 1.0)
            .unwrap();
        let json = serde_json::to_string(&p.to_file()).unwrap();
        let back: DistributionFile = serde_json::from_str(&json).unwrap();
        assert_eq!(DiscreteDistribution::from_file(&back).unwrap(), p);
    }

    #[test]
    fn histogram_collisions() {
        let h: Histogram<u32> = [1, 1, 1, 2, 3, 3].into_iter().collect();
        assert_eq!(h.self_collisions(), 3 + 1);
        let g: Histogram<u32> = [1, 3, 4].into_iter().collect();
        assert_eq!(h.cross_collisions(&g), 3 + 2);
        assert_eq!(h.frequency(&1), 0.5);
    }
}
