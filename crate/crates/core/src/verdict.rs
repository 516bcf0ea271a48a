use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_accept(self) -> bool {
        self == Decision::Accept
    }
}

/// Draws consumed from each input source during one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplesUsed {
    pub p: u64,
    pub q: u64,
}

impl SamplesUsed {
    pub fn total(&self) -> u64 {
        self.p + self.q
    }
}

impl std::ops::Add for SamplesUsed {
    type Output = SamplesUsed;

    fn add(self, rhs: SamplesUsed) -> SamplesUsed {
        SamplesUsed { p: self.p + rhs.p, q: self.q + rhs.q }
    }
}

impl std::ops::AddAssign for SamplesUsed {
    fn add_assign(&mut self, rhs: SamplesUsed) {
        *self = *self + rhs;
    }
}

/// Parameters a test ran under. Unused fields stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TestParams {
    pub eps: f64,
    pub delta: Option<f64>,
    pub dim: Option<usize>,
    pub span: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub decision: Decision,
    pub params: TestParams,
    pub samples_used: SamplesUsed,
}

impl TestVerdict {
    pub fn accepted(&self) -> bool {
        self.decision.is_accept()
    }
}

/// Output of an additive-error estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    /// Declared additive error target.
    pub eps: f64,
    pub samples_used: SamplesUsed,
    /// Side of the snapping grid, when one is used.
    pub grid_side: Option<f64>,
    pub seed: Option<u64>,
}
