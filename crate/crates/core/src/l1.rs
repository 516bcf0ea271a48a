//! ℓ1 closeness and identity testers over an abstract finite domain, and
//! the empirical distribution estimator they share.
//!
//! Domain elements are any `Ord` type; only elements actually drawn are
//! materialized, so the declared domain size `n` may be astronomically large
//! (e.g. `2^{di}` grid cells).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::budget;
use crate::distribution::{l1_between, Histogram, NORMALIZATION_TOL};
use crate::error::{Error, Result};
use crate::sampling::Sampler;
use crate::verdict::{Decision, SamplesUsed, TestParams, TestVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1TesterConfig {
    /// Declared domain size.
    pub n: f64,
    /// ℓ1 distance parameter.
    pub eps: f64,
    /// Failure probability.
    pub delta: f64,
    /// Budget multiplier.
    pub c: f64,
    /// `C` in the collision tester's heavy-element threshold `ε/(C·n^{2/3})`.
    pub heavy_const: f64,
}

impl L1TesterConfig {
    pub fn new(n: f64, eps: f64, delta: f64) -> Self {
        L1TesterConfig { n, eps, delta, c: 1.0, heavy_const: 1.0 }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return Err(Error::Config(format!("domain size must be >= 1, got {}", self.n)));
        }
        if !(self.eps > 0.0 && self.eps <= 2.0) {
            return Err(Error::Config(format!("eps must be in (0, 2], got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must be in (0, 1), got {}", self.delta)));
        }
        if !(self.c > 0.0 && self.c.is_finite() && self.heavy_const > 0.0) {
            return Err(Error::Config("constant multipliers must be positive".into()));
        }
        Ok(())
    }

    pub fn collision_budget(&self) -> u64 {
        budget::collision(self.n, self.eps, self.delta, self.c)
    }

    pub fn plugin_budget(&self) -> u64 {
        budget::plugin(self.n, self.eps, self.delta, self.c)
    }

    pub fn known_budget(&self) -> u64 {
        budget::known(self.n, self.eps, self.delta, self.c)
    }

    /// Heavy-element threshold of the collision tester.
    pub fn heavy_threshold(&self) -> f64 {
        self.eps / (self.heavy_const * self.n.powf(2.0 / 3.0))
    }

    /// Floor `t = ε/(4n)` used by the plug-in tester.
    pub fn plugin_floor(&self) -> f64 {
        self.eps / (4.0 * self.n)
    }

    fn params(&self) -> TestParams {
        TestParams { eps: self.eps, delta: Some(self.delta), dim: None, span: None }
    }
}

fn histogram<S: Sampler>(src: &mut S, count: u64) -> Result<Histogram<S::Item>>
where
    S::Item: Ord,
{
    let mut h = Histogram::new();
    for _ in 0..count {
        h.add(src.draw()?);
    }
    Ok(h)
}

fn pairs(m: u64) -> f64 {
    m as f64 * (m as f64 - 1.0) / 2.0
}

/// Empirical estimate of the sampled distribution from
/// `⌈c·t^{−1}ε^{−2}·lg n·lg(1/δ)⌉` draws.
pub fn l1_estimate<S>(src: &mut S, n: f64, eps: f64, delta: f64, floor: f64, c: f64) -> Result<BTreeMap<S::Item, f64>>
where
    S: Sampler,
    S::Item: Ord + Clone,
{
    if !(floor > 0.0 && eps > 0.0 && delta > 0.0 && delta < 1.0 && n >= 1.0 && c > 0.0) {
        return Err(Error::Config("l1_estimate needs t, eps, c > 0, n >= 1 and delta in (0, 1)".into()));
    }
    let m = budget::estimation(n, eps, delta, floor, c);
    Ok(histogram(src, m)?.frequencies())
}

/// Collision-based closeness tester.
///
/// Half the budget locates heavy elements (empirical mass ≥ `ε/(C n^{2/3})`
/// in either sample) and compares them directly; the other half runs an
/// unbiased collision estimate of `‖p_L − q_L‖₂²` on the light elements.
/// Rejects when the heavy ℓ1 exceeds ε/4 or the light ℓ2² exceeds ε²/(8n).
pub fn l1_test_collision<S, R>(src_p: &mut S, src_q: &mut R, cfg: &L1TesterConfig) -> Result<TestVerdict>
where
    S: Sampler,
    R: Sampler<Item = S::Item>,
    S::Item: Ord + Clone,
{
    cfg.validate()?;
    let (p0, q0) = (src_p.draws_taken(), src_q.draws_taken());
    let m = cfg.collision_budget();
    let m_heavy = m / 2;
    let m_light = m - m_heavy;

    let hp = histogram(src_p, m_heavy)?;
    let hq = histogram(src_q, m_heavy)?;
    let tau = cfg.heavy_threshold();
    let heavy: std::collections::BTreeSet<S::Item> = hp
        .counts()
        .keys()
        .chain(hq.counts().keys())
        .filter(|x| hp.frequency(x) >= tau || hq.frequency(x) >= tau)
        .cloned()
        .collect();
    let heavy_l1: f64 = heavy.iter().map(|x| (hp.frequency(x) - hq.frequency(x)).abs()).sum();

    let mut lp = Histogram::new();
    let mut lq = Histogram::new();
    for _ in 0..m_light {
        let x = src_p.draw()?;
        if !heavy.contains(&x) {
            lp.add(x);
        }
        let y = src_q.draw()?;
        if !heavy.contains(&y) {
            lq.add(y);
        }
    }
    let light_l2 = if m_light >= 2 {
        let pp = lp.self_collisions() as f64 / pairs(m_light);
        let qq = lq.self_collisions() as f64 / pairs(m_light);
        let pq = lp.cross_collisions(&lq) as f64 / (m_light as f64 * m_light as f64);
        pp + qq - 2.0 * pq
    } else {
        0.0
    };

    let reject = heavy_l1 > cfg.eps / 4.0 || light_l2 > cfg.eps * cfg.eps / (8.0 * cfg.n);
    Ok(TestVerdict {
        decision: if reject { Decision::Reject } else { Decision::Accept },
        params: cfg.params(),
        samples_used: SamplesUsed { p: src_p.draws_taken() - p0, q: src_q.draws_taken() - q0 },
    })
}

/// Empirical ℓ1 distance between plug-in estimates of p and q, each from
/// the plug-in budget.
pub fn l1_plugin_distance<S, R>(src_p: &mut S, src_q: &mut R, cfg: &L1TesterConfig) -> Result<(f64, SamplesUsed)>
where
    S: Sampler,
    R: Sampler<Item = S::Item>,
    S::Item: Ord + Clone,
{
    cfg.validate()?;
    let (p0, q0) = (src_p.draws_taken(), src_q.draws_taken());
    let m = cfg.plugin_budget();
    let p_hat = histogram(src_p, m)?.frequencies();
    let q_hat = histogram(src_q, m)?.frequencies();
    let used = SamplesUsed { p: src_p.draws_taken() - p0, q: src_q.draws_taken() - q0 };
    Ok((l1_between(&p_hat, &q_hat), used))
}

/// Plug-in closeness tester: accept iff `‖p̃ − q̃‖₁ ≤ ε/2`.
pub fn l1_test_plugin<S, R>(src_p: &mut S, src_q: &mut R, cfg: &L1TesterConfig) -> Result<TestVerdict>
where
    S: Sampler,
    R: Sampler<Item = S::Item>,
    S::Item: Ord + Clone,
{
    let (dist, samples_used) = l1_plugin_distance(src_p, src_q, cfg)?;
    Ok(TestVerdict {
        decision: plugin_decision(dist, cfg.eps),
        params: cfg.params(),
        samples_used,
    })
}

/// Plug-in decision rule; a tie at ε/2 accepts.
pub fn plugin_decision(estimated_l1: f64, eps: f64) -> Decision {
    if estimated_l1 <= eps / 2.0 {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

/// Identity tester against an explicitly known `q`.
///
/// Elements outside `supp(q)` are merged into one bucket, which preserves
/// ℓ1 distances to `q` exactly and shrinks the effective domain to
/// `n' = min(n, |supp q| + 1)`. The statistic is the unbiased estimate
/// `Ẑ_pp − 2⟨p̂, q⟩ + ‖q‖₂²` of `‖p − q‖₂²`; accept iff it is at most
/// `ε²/(2n')`.
pub fn l1_test_known<S>(q_known: &BTreeMap<S::Item, f64>, src_p: &mut S, cfg: &L1TesterConfig) -> Result<TestVerdict>
where
    S: Sampler,
    S::Item: Ord + Clone,
{
    cfg.validate()?;
    if q_known.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: f64 = q_known.values().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL || q_known.values().any(|&w| w < 0.0) {
        return Err(Error::Normalization { sum: total, tol: NORMALIZATION_TOL });
    }
    let p0 = src_p.draws_taken();
    let m = cfg.known_budget();
    if m < 2 {
        return Err(Error::Config(format!("identity tester budget {m} is below two draws")));
    }
    let mut h: Histogram<Option<S::Item>> = Histogram::new();
    for _ in 0..m {
        let x = src_p.draw()?;
        h.add(q_known.contains_key(&x).then_some(x));
    }
    let zpp = h.self_collisions() as f64 / pairs(m);
    let inner: f64 = q_known
        .iter()
        .map(|(x, qx)| qx * h.count(&Some(x.clone())) as f64 / m as f64)
        .sum();
    let q_sq: f64 = q_known.values().map(|w| w * w).sum();
    let stat = zpp - 2.0 * inner + q_sq;
    let n_eff = cfg.n.min(q_known.len() as f64 + 1.0);
    let accept = stat <= cfg.eps * cfg.eps / (2.0 * n_eff);
    Ok(TestVerdict {
        decision: if accept { Decision::Accept } else { Decision::Reject },
        params: cfg.params(),
        samples_used: SamplesUsed { p: src_p.draws_taken() - p0, q: 0 },
    })
}
