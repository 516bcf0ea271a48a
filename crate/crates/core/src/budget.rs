//! Closed-form sample budgets.
//!
//! Every budget is `⌈c · f(params)⌉` for an explicit constant multiplier `c`.
//! Logarithms are base 2 and floored at 1 so that tiny domains and large
//! failure probabilities never collapse a budget to zero.

/// `max(log₂ x, 1)`.
pub fn lg(x: f64) -> f64 {
    x.log2().max(1.0)
}

/// Ceiling with a relative slack of 1e-12, so products that are integers
/// up to rounding (e.g. `(4/0.2)^3`) do not round up by one.
pub fn ceil_budget(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    (x * (1.0 - 1e-12)).ceil() as u64
}

/// Collision-based ℓ1 closeness: `⌈c·n^{2/3}·ε^{−4}·lg n·lg(1/δ)⌉` per source.
pub fn collision(n: f64, eps: f64, delta: f64, c: f64) -> u64 {
    ceil_budget(c * n.powf(2.0 / 3.0) * eps.powi(-4) * lg(n) * lg(1.0 / delta))
}

/// Plug-in ℓ1 closeness: `⌈c·n·ε^{−2}·lg n·lg(1/δ)⌉` per source.
pub fn plugin(n: f64, eps: f64, delta: f64, c: f64) -> u64 {
    ceil_budget(c * n * eps.powi(-2) * lg(n) * lg(1.0 / delta))
}

/// Identity testing against a known distribution:
/// `⌈c·n^{1/2}·ε^{−2}·lg n·lg(1/δ)⌉`.
pub fn known(n: f64, eps: f64, delta: f64, c: f64) -> u64 {
    ceil_budget(c * n.sqrt() * eps.powi(-2) * lg(n) * lg(1.0 / delta))
}

/// Distribution estimation above a floor `t`: `⌈c·t^{−1}·ε^{−2}·lg n·lg(1/δ)⌉`.
pub fn estimation(n: f64, eps: f64, delta: f64, floor: f64, c: f64) -> u64 {
    ceil_budget(c / floor * eps.powi(-2) * lg(n) * lg(1.0 / delta))
}

/// Grid estimator: `⌈c·(4dΔ/ε)^{d+2}⌉` per source.
pub fn grid_estimate(dim: usize, span: f64, eps: f64, c: f64) -> u64 {
    ceil_budget(c * (4.0 * dim as f64 * span / eps).powi(dim as i32 + 2))
}

/// Representative points: `⌈c·k·lg k/γ⌉`.
pub fn representatives(k: usize, gamma: f64, c: f64) -> u64 {
    ceil_budget(c * k as f64 * lg(k as f64) / gamma)
}

/// Tree estimator: `⌈c·(W·n/ε)²·lg(n/δ)⌉` per source.
pub fn tree(max_weight: f64, nodes: usize, eps: f64, delta: f64, c: f64) -> u64 {
    ceil_budget(c * (max_weight * nodes as f64 / eps).powi(2) * lg(nodes as f64 / delta))
}
