//! Seeded trial batteries and their reports.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::generators::{gen_clustered, gen_grid_injection, gen_hard_pair_1d};
use super::HarnessError;
use crate::cluster::{emd_test_clustered_known, emd_test_clustered_unknown, ClusterTestConfig};
use crate::distribution::{DiscreteDistribution, DistributionFile, Domain, Point};
use crate::emd_test::{emd_closeness_test, emd_closeness_test_known, emd_estimate, EmdTestConfig, Strategy};
use crate::error::Error;
use crate::exact::emd_exact;
use crate::sampling::{SampleSource, RNG_NAME};
use crate::tree::{hard_line_instance, tree_budget, tree_emd_estimate, tree_emd_exact, TreeFile, WeightedTree};
use crate::verdict::{Decision, SamplesUsed};

type HResult<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Estimate,
    Test,
    TestKnown,
    TestCluster,
    Tree,
}

/// Where an experiment's pair of distributions comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSpec {
    /// Two distribution files.
    Files { p: PathBuf, q: PathBuf },
    /// Distributions given inline.
    Inline { p: DistributionFile, q: DistributionFile },
    /// `p = q =` a point mass.
    PointMass { coords: Vec<f64> },
    /// Biased endpoint pair on `[0, Δ]` with EMD `gap`.
    #[serde(rename = "hard-pair-1d")]
    HardPair1d { gap: f64 },
    /// Abstract distributions over `[n]` injected into the grid.
    GridInjection { p: Vec<f64>, q: Vec<f64> },
    /// Planted clusters on cube corners.
    Clustered { k: usize, b: f64, imbalance: f64 },
    /// A tree instance file (see [`TreeInstance`]).
    TreeFile { path: PathBuf },
    /// A tree and two node distributions, inline.
    Tree { tree: TreeFile, p: Vec<f64>, q: Vec<f64> },
    /// Endpoint-biased pair on the unit-weight path with tree EMD `gap`.
    HardLine { n: usize, gap: f64 },
}

/// On-disk tree instance: `{ "tree": { "n", "edges" }, "p": [...], "q": [...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeInstance {
    pub tree: TreeFile,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Centers for `test-cluster` mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CenterSpec {
    /// Centers given explicitly.
    Known { centers: Vec<Vec<f64>> },
    /// The centers planted by a `clustered` instance.
    Planted,
    /// Search for at most `k` representatives first.
    Unknown { k: usize },
}

fn default_delta() -> f64 {
    1.0 / 3.0
}

fn default_trials() -> u64 {
    1
}

fn default_c() -> f64 {
    1.0
}

fn default_rng() -> String {
    RNG_NAME.to_string()
}

fn default_strategy() -> Strategy {
    Strategy::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub instance: InstanceSpec,
    pub eps: f64,
    /// Failure probability; only the tree estimator reads it.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub dim: usize,
    #[serde(default)]
    pub span: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_c")]
    pub c_mult: f64,
    /// Multiplier for representative search in unknown-center runs;
    /// defaults to `c_mult`.
    #[serde(default)]
    pub c_reps: Option<f64>,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub centers: Option<CenterSpec>,
    #[serde(default = "default_rng")]
    pub rng: String,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, instance: InstanceSpec, eps: f64) -> Self {
        ExperimentConfig {
            mode,
            instance,
            eps,
            delta: default_delta(),
            dim: 1,
            span: 1.0,
            trials: 1,
            seed: 0,
            c_mult: 1.0,
            c_reps: None,
            strategy: Strategy::Auto,
            centers: None,
            rng: default_rng(),
            output: None,
        }
    }

    pub fn validate(&self) -> HResult<()> {
        let bad = |m: String| Err(HarnessError::Param(Error::Config(m)));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.rng != RNG_NAME {
            return bad(format!("unsupported rng {:?}; only {RNG_NAME:?} is available", self.rng));
        }
        for (name, v) in [("eps", self.eps), ("delta", self.delta), ("c_mult", self.c_mult)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.c_reps.is_some_and(|c| !(c.is_finite() && c > 0.0)) {
            return bad("c_reps must be positive".into());
        }
        if self.mode != Mode::Tree {
            Domain::new(self.dim, self.span).map_err(HarnessError::Param)?;
        }
        Ok(())
    }
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> HResult<T> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))
}

pub fn load_distribution(path: &Path) -> HResult<DiscreteDistribution> {
    let file: DistributionFile = load_json(path)?;
    DiscreteDistribution::from_file(&file).map_err(HarnessError::Param)
}

/// A resolved instance.
#[derive(Debug, Clone)]
pub enum Instance {
    Geometric {
        p: DiscreteDistribution,
        q: DiscreteDistribution,
        planted: Option<Vec<Point>>,
    },
    Tree {
        tree: WeightedTree,
        p: Vec<f64>,
        q: Vec<f64>,
    },
}

impl Instance {
    /// Exact EMD between the two distributions.
    pub fn oracle(&self) -> HResult<f64> {
        match self {
            Instance::Geometric { p, q, .. } => emd_exact(p, q),
            Instance::Tree { tree, p, q } => tree_emd_exact(tree, p, q),
        }
        .map_err(HarnessError::Param)
    }
}

fn geometric(p: DiscreteDistribution, q: DiscreteDistribution) -> Instance {
    Instance::Geometric { p, q, planted: None }
}

pub fn resolve_instance(cfg: &ExperimentConfig) -> HResult<Instance> {
    let param = HarnessError::Param;
    let inst = match &cfg.instance {
        InstanceSpec::Files { p, q } => geometric(load_distribution(p)?, load_distribution(q)?),
        InstanceSpec::Inline { p, q } => geometric(
            DiscreteDistribution::from_file(p).map_err(param)?,
            DiscreteDistribution::from_file(q).map_err(param)?,
        ),
        InstanceSpec::PointMass { coords } => {
            let p = DiscreteDistribution::point_mass(Point::new(coords.clone()), cfg.dim, cfg.span).map_err(param)?;
            geometric(p.clone(), p)
        }
        InstanceSpec::HardPair1d { gap } => {
            let (p, q) = gen_hard_pair_1d(cfg.span, *gap).map_err(param)?;
            geometric(p, q)
        }
        InstanceSpec::GridInjection { p, q } => {
            let (p, q) = gen_grid_injection(p, q, p.len(), cfg.dim, cfg.span).map_err(param)?;
            geometric(p, q)
        }
        InstanceSpec::Clustered { k, b, imbalance } => {
            let c = gen_clustered(*k, *b, cfg.dim, cfg.span, *imbalance).map_err(param)?;
            Instance::Geometric { p: c.p, q: c.q, planted: Some(c.centers) }
        }
        InstanceSpec::TreeFile { path } => {
            let t: TreeInstance = load_json(path)?;
            Instance::Tree { tree: WeightedTree::from_file(&t.tree).map_err(param)?, p: t.p, q: t.q }
        }
        InstanceSpec::Tree { tree, p, q } => Instance::Tree {
            tree: WeightedTree::from_file(tree).map_err(param)?,
            p: p.clone(),
            q: q.clone(),
        },
        InstanceSpec::HardLine { n, gap } => {
            let (tree, p, q) = hard_line_instance(*n, *gap).map_err(param)?;
            Instance::Tree { tree, p, q }
        }
    };
    match (&inst, cfg.mode) {
        (Instance::Tree { .. }, Mode::Tree) => {}
        (Instance::Tree { .. }, _) => return Err(param(Error::Config("tree instances need mode \"tree\"".into()))),
        (Instance::Geometric { .. }, Mode::Tree) => {
            return Err(param(Error::Config("mode \"tree\" needs a tree instance".into())))
        }
        (Instance::Geometric { p, q, .. }, _) => {
            let dom = Domain::new(cfg.dim, cfg.span).map_err(param)?;
            if p.domain() != dom || q.domain() != dom {
                return Err(param(Error::DomainMismatch(format!(
                    "instance lives on {:?}/{:?}, config declares dim={} span={}",
                    p.domain(),
                    q.domain(),
                    cfg.dim,
                    cfg.span
                ))));
            }
        }
    }
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    /// `|estimate − oracle|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
    pub samples_used: SamplesUsed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accept_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reject_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_estimate: Option<f64>,
    /// Fraction of trials with `|estimate − oracle| ≤ ε`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_eps_rate: Option<f64>,
    pub mean_samples: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: ExperimentConfig,
    pub rng: String,
    /// Exact EMD of the instance.
    pub oracle_emd: f64,
    /// Closed-form draws per trial, when they do not depend on the outcome.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<SamplesUsed>,
    pub aggregate: Aggregate,
    pub trials: Vec<TrialRecord>,
}

/// Seed of trial `t`.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    base.wrapping_add(trial)
}

fn emd_config(cfg: &ExperimentConfig) -> EmdTestConfig {
    EmdTestConfig::new(cfg.dim, cfg.span, cfg.eps).with_c(cfg.c_mult).with_strategy(cfg.strategy)
}

fn cluster_config(cfg: &ExperimentConfig) -> ClusterTestConfig {
    ClusterTestConfig::new(cfg.dim, cfg.span, cfg.eps)
        .with_c(cfg.c_mult)
        .with_c_reps(cfg.c_reps.unwrap_or(cfg.c_mult))
}

enum Centers {
    Known(Vec<Point>),
    Unknown(usize),
}

fn resolve_centers(cfg: &ExperimentConfig, inst: &Instance) -> HResult<Centers> {
    let planted = match inst {
        Instance::Geometric { planted, .. } => planted.clone(),
        Instance::Tree { .. } => None,
    };
    match (&cfg.centers, planted) {
        (Some(CenterSpec::Known { centers }), _) => {
            Ok(Centers::Known(centers.iter().map(|c| Point::new(c.clone())).collect()))
        }
        (Some(CenterSpec::Unknown { k }), _) => Ok(Centers::Unknown(*k)),
        (Some(CenterSpec::Planted) | None, Some(c)) => Ok(Centers::Known(c)),
        (Some(CenterSpec::Planted) | None, None) => Err(HarnessError::Param(Error::Config(
            "test-cluster needs explicit centers, a k, or a clustered instance".into(),
        ))),
    }
}

/// Draws per trial when they are fixed in advance.
pub fn expected_budget(cfg: &ExperimentConfig, inst: &Instance) -> HResult<Option<SamplesUsed>> {
    let both = |m: u64| Some(SamplesUsed { p: m, q: m });
    let param = HarnessError::Param;
    Ok(match cfg.mode {
        Mode::Estimate => both(emd_config(cfg).estimate_budget()),
        Mode::Test => both(emd_config(cfg).closeness_budget().map_err(param)?),
        Mode::TestKnown => Some(SamplesUsed { p: emd_config(cfg).known_budget().map_err(param)?, q: 0 }),
        Mode::TestCluster => match resolve_centers(cfg, inst)? {
            Centers::Known(c) => both(cluster_config(cfg).known_centers_budget(c.len())),
            Centers::Unknown(_) => None,
        },
        Mode::Tree => match inst {
            Instance::Tree { tree, .. } => both(tree_budget(tree, cfg.eps, cfg.delta, cfg.c_mult)),
            Instance::Geometric { .. } => None,
        },
    })
}

fn run_trial(cfg: &ExperimentConfig, inst: &Instance, centers: Option<&Centers>, oracle: f64, trial: u64) -> HResult<TrialRecord> {
    let seed = trial_seed(cfg.seed, trial);
    let param = HarnessError::Param;
    let mut record = TrialRecord { trial, seed, decision: None, estimate: None, abs_error: None, samples_used: SamplesUsed::default() };
    let set_estimate = |r: &mut TrialRecord, est: f64, used: SamplesUsed| {
        r.estimate = Some(est);
        r.abs_error = Some((est - oracle).abs());
        r.samples_used = used;
    };
    match inst {
        Instance::Geometric { p, q, .. } => {
            let mut sp = SampleSource::from_distribution(p, seed).on_stream(0);
            let mut sq = SampleSource::from_distribution(q, seed).on_stream(1);
            let verdict = match cfg.mode {
                Mode::Estimate => {
                    let r = emd_estimate(&mut sp, &mut sq, &emd_config(cfg)).map_err(param)?;
                    set_estimate(&mut record, r.estimate, r.samples_used);
                    return Ok(record);
                }
                Mode::Test => emd_closeness_test(&mut sp, &mut sq, &emd_config(cfg)),
                Mode::TestKnown => emd_closeness_test_known(q, &mut sp, &emd_config(cfg)),
                Mode::TestCluster => match centers.expect("centers resolved for test-cluster") {
                    Centers::Known(c) => emd_test_clustered_known(&mut sp, &mut sq, c, &cluster_config(cfg)),
                    Centers::Unknown(k) => emd_test_clustered_unknown(&mut sp, &mut sq, *k, &cluster_config(cfg)),
                },
                Mode::Tree => unreachable!("checked by resolve_instance"),
            }
            .map_err(param)?;
            record.decision = Some(verdict.decision);
            record.samples_used = verdict.samples_used;
        }
        Instance::Tree { tree, p, q } => {
            let nodes: Vec<usize> = (0..tree.nodes()).collect();
            let mut sp = SampleSource::from_weights(nodes.clone(), p, seed).map_err(param)?.on_stream(0);
            let mut sq = SampleSource::from_weights(nodes, q, seed).map_err(param)?.on_stream(1);
            let r = tree_emd_estimate(&mut sp, &mut sq, tree, cfg.eps, cfg.delta, cfg.c_mult).map_err(param)?;
            set_estimate(&mut record, r.estimate, r.samples_used);
        }
    }
    Ok(record)
}

fn aggregate(trials: &[TrialRecord], eps: f64) -> Aggregate {
    let n = trials.len() as f64;
    let rate = |f: &dyn Fn(&TrialRecord) -> Option<bool>| -> Option<f64> {
        let hits: Option<Vec<bool>> = trials.iter().map(f).collect();
        hits.map(|h| h.iter().filter(|&&x| x).count() as f64 / n)
    };
    let estimates: Option<Vec<f64>> = trials.iter().map(|t| t.estimate).collect();
    Aggregate {
        trials: trials.len() as u64,
        accept_rate: rate(&|t| t.decision.map(|d| d == Decision::Accept)),
        reject_rate: rate(&|t| t.decision.map(|d| d == Decision::Reject)),
        mean_estimate: estimates.map(|e| e.iter().sum::<f64>() / n),
        within_eps_rate: rate(&|t| t.abs_error.map(|e| e <= eps)),
        mean_samples: trials.iter().map(|t| t.samples_used.total() as f64).sum::<f64>() / n,
    }
}

/// Runs `cfg.trials` independently seeded trials in parallel. Trial `t` uses
/// seed `cfg.seed + t`; records come back in trial order, so identical
/// configs give identical reports.
pub fn run_experiment(cfg: &ExperimentConfig) -> HResult<TrialReport> {
    cfg.validate()?;
    let inst = resolve_instance(cfg)?;
    let oracle = inst.oracle()?;
    let centers = match cfg.mode {
        Mode::TestCluster => Some(resolve_centers(cfg, &inst)?),
        _ => None,
    };
    let budget = expected_budget(cfg, &inst)?;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &inst, centers.as_ref(), oracle, t))
        .collect::<HResult<Vec<_>>>()?;
    Ok(TrialReport {
        config: cfg.clone(),
        rng: RNG_NAME.to_string(),
        oracle_emd: oracle,
        budget,
        aggregate: aggregate(&trials, cfg.eps),
        trials,
    })
}

impl TrialReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// One CSV row per trial.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.trials {
            w.serialize(CsvRow {
                trial: t.trial,
                seed: t.seed,
                decision: t.decision.map(|d| if d.is_accept() { "accept" } else { "reject" }),
                estimate: t.estimate,
                abs_error: t.abs_error,
                samples_p: t.samples_used.p,
                samples_q: t.samples_used.q,
            })
            .expect("csv rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }
}

#[derive(Serialize)]
struct CsvRow {
    trial: u64,
    seed: u64,
    decision: Option<&'static str>,
    estimate: Option<f64>,
    abs_error: Option<f64>,
    samples_p: u64,
    samples_q: u64,
}

/// One row of a rate table produced by `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub name: String,
    pub mode: Mode,
    pub eps: f64,
    pub trials: u64,
    pub oracle_emd: f64,
    pub accept_rate: Option<f64>,
    pub reject_rate: Option<f64>,
    pub within_eps_rate: Option<f64>,
    pub mean_samples: f64,
}

/// A named list of experiments for `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub name: String,
    #[serde(flatten)]
    pub config: ExperimentConfig,
}

pub fn run_bench(entries: &[BenchEntry]) -> HResult<Vec<RateRow>> {
    entries
        .iter()
        .map(|e| {
            let r = run_experiment(&e.config)?;
            Ok(RateRow {
                name: e.name.clone(),
                mode: e.config.mode,
                eps: e.config.eps,
                trials: r.aggregate.trials,
                oracle_emd: r.oracle_emd,
                accept_rate: r.aggregate.accept_rate,
                reject_rate: r.aggregate.reject_rate,
                within_eps_rate: r.aggregate.within_eps_rate,
                mean_samples: r.aggregate.mean_samples,
            })
        })
        .collect()
}

pub fn rate_table_csv(rows: &[RateRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("csv rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}
