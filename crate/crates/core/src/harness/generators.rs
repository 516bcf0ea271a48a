//! Instance generators: adversarial lower-bound pairs and planted clusters.

use crate::distribution::{DiscreteDistribution, Domain, Point};
use crate::error::{Error, Result};

fn positive_part(pairs: Vec<(Point, f64)>) -> impl Iterator<Item = (Point, f64)> {
    pairs.into_iter().filter(|(_, w)| *w > 0.0)
}

/// The biased endpoint pair on `[0, Δ]`: `p` splits evenly between 0 and Δ,
/// `q` moves `ε/Δ` of the mass at Δ over to 0, so `EMD(p, q) = ε`.
pub fn gen_hard_pair_1d(span: f64, eps: f64) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    Domain::new(1, span).map_err(|e| Error::Param(e.to_string()))?;
    if !(eps >= 0.0 && eps <= span / 2.0) {
        return Err(Error::Param(format!("need 0 <= eps <= span/2, got eps={eps}, span={span}")));
    }
    let lo = Point::new(vec![0.0]);
    let hi = Point::new(vec![span]);
    let p = DiscreteDistribution::new([(lo.clone(), 0.5), (hi.clone(), 0.5)], 1, span)?;
    let shift = eps / span;
    let q = DiscreteDistribution::new(positive_part(vec![(lo, 0.5 + shift), (hi, 0.5 - shift)]), 1, span)?;
    Ok((p, q))
}

/// The first `n` points of the lattice with spacing `Δ·n^{−1/d}` in
/// `[0, Δ]^d`, in mixed-radix order.
pub fn injection_points(n: usize, dim: usize, span: f64) -> Result<Vec<Point>> {
    Domain::new(dim, span).map_err(|e| Error::Param(e.to_string()))?;
    if n == 0 {
        return Err(Error::Param("need n >= 1".into()));
    }
    let side = span * (n as f64).powf(-1.0 / dim as f64);
    let per_axis = ((n as f64).powf(1.0 / dim as f64) + 1e-9).floor() as u64 + 1;
    let capacity = per_axis.checked_pow(dim as u32);
    if capacity.map_or(false, |c| (n as u64) > c) {
        return Err(Error::Param(format!("{n} points exceed the lattice capacity {per_axis}^{dim}")));
    }
    Ok((0..n as u64)
        .map(|mut j| {
            let coords = (0..dim)
                .map(|_| {
                    let digit = j % per_axis;
                    j /= per_axis;
                    (digit as f64 * side).min(span)
                })
                .collect();
            Point::new(coords)
        })
        .collect())
}

/// Places abstract distributions over `[n]` on a grid of side `Δ·n^{−1/d}`
/// through a fixed injection. ℓ1 distances carry over unchanged, and any
/// two image points are at least one grid side apart.
pub fn gen_grid_injection(
    p_abstract: &[f64],
    q_abstract: &[f64],
    n: usize,
    dim: usize,
    span: f64,
) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    if p_abstract.len() != n || q_abstract.len() != n {
        return Err(Error::Param(format!(
            "abstract distributions must have {n} entries, got {} and {}",
            p_abstract.len(),
            q_abstract.len()
        )));
    }
    let points = injection_points(n, dim, span)?;
    let lift = |w: &[f64]| {
        let pairs = points.iter().cloned().zip(w.iter().copied()).collect();
        DiscreteDistribution::new(positive_part(pairs), dim, span)
    };
    Ok((lift(p_abstract)?, lift(q_abstract)?))
}

/// Output of [`gen_clustered`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredInstance {
    pub p: DiscreteDistribution,
    pub q: DiscreteDistribution,
    pub centers: Vec<Point>,
    pub b: f64,
}

// Corner `i` of the cube: 0 is all-zero, 1 is all-Δ, the rest follow the
// binary order of the remaining corners.
fn corner(i: usize, dim: usize, span: f64) -> Point {
    let full = (1u64 << dim) - 1;
    let mask = match i {
        0 => 0,
        1 => full,
        _ => i as u64 - 1,
    };
    Point::new((0..dim).map(|j| if mask >> j & 1 == 1 { span } else { 0.0 }).collect())
}

/// Planted `(k, b)`-clusterable pair with centers on cube corners.
///
/// Each cluster holds its center (half the cluster mass) and one point per
/// axis moved `b/2` inward (the other half, split evenly). Both `p` and `q`
/// give every cluster mass `1/k`, except that `q` moves `imbalance` of
/// cluster 0's mass to cluster 1, point for point.
pub fn gen_clustered(k: usize, b: f64, dim: usize, span: f64, imbalance: f64) -> Result<ClusteredInstance> {
    Domain::new(dim, span).map_err(|e| Error::Param(e.to_string()))?;
    if k == 0 || dim >= 63 || k as u64 > 1u64 << dim {
        return Err(Error::Param(format!("{k} clusters do not fit on the corners of a {dim}-cube")));
    }
    if !(b > 0.0 && b <= span) {
        return Err(Error::Param(format!("need 0 < b <= span, got {b}")));
    }
    if k >= 2 && !(span > 4.0 * b) {
        return Err(Error::Param(format!("corners at distance {span} are not farther apart than 4b = {}", 4.0 * b)));
    }
    let share = 1.0 / k as f64;
    if !(imbalance >= 0.0 && imbalance <= share) || (k == 1 && imbalance > 0.0) {
        return Err(Error::Param(format!("imbalance must lie in [0, 1/k] with k >= 2, got {imbalance}")));
    }
    let centers: Vec<Point> = (0..k).map(|i| corner(i, dim, span)).collect();
    let cluster = |c: &Point| -> Vec<(Point, f64)> {
        let mut pts = vec![(c.clone(), 0.5)];
        for j in 0..dim {
            let mut x = c.coords().to_vec();
            x[j] += if x[j] == 0.0 { b / 2.0 } else { -b / 2.0 };
            pts.push((Point::new(x), 0.5 / dim as f64));
        }
        pts
    };
    let mut p = Vec::new();
    let mut q = Vec::new();
    for (i, c) in centers.iter().enumerate() {
        let mass_q = match i {
            0 => share - imbalance,
            1 => share + imbalance,
            _ => share,
        };
        for (x, w) in cluster(c) {
            p.push((x.clone(), w * share));
            q.push((x, w * mass_q));
        }
    }
    Ok(ClusteredInstance {
        p: DiscreteDistribution::new(p, dim, span)?,
        q: DiscreteDistribution::new(positive_part(q), dim, span)?,
        centers,
        b,
    })
}
