use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use emdtest::distribution::DistributionFile;
use emdtest::emd_test::Strategy;
use emdtest::error::Error;
use emdtest::harness::experiment::{
    load_json, rate_table_csv, run_bench, BenchEntry, CenterSpec, TreeInstance,
};
use emdtest::harness::{
    gen_clustered, gen_grid_injection, gen_hard_pair_1d, run_experiment, ExperimentConfig, HarnessError,
    InstanceSpec, Mode,
};
use emdtest::tree::hard_line_instance;

type CliResult<T> = std::result::Result<T, HarnessError>;

#[derive(Parser)]
#[command(name = "emdtest", version, about = "Sample-based EMD closeness testing and estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Additive EMD estimate between two distributions.
    Estimate(RunArgs),
    /// EMD closeness test between two sampled distributions.
    Test(RunArgs),
    /// EMD closeness test of a sampled p against a known q (the second --in).
    TestKnown(RunArgs),
    /// Closeness test for clusterable supports.
    TestCluster(RunArgs),
    /// Tree EMD estimate; --in takes one tree instance file.
    TreeEmd(RunArgs),
    /// Write a generated instance to a directory.
    Gen(GenArgs),
    /// Run a list of named experiments and print a rate table.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Plugin,
    Collision,
    Auto,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    /// Experiment config (JSON); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Side length Δ of the domain box.
    #[arg(long)]
    span: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    c_mult: Option<f64>,
    /// Input files: p then q, or one tree instance for tree-emd.
    #[arg(long = "in")]
    inputs: Vec<PathBuf>,
    /// Centers file (JSON list of coordinate lists) for test-cluster.
    #[arg(long)]
    centers: Option<PathBuf>,
    /// Number of clusters when centers are unknown.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    HardPair,
    GridInjection,
    Clustered,
    HardLine,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    /// EMD gap for hard-pair and hard-line.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    span: f64,
    /// Abstract pair for grid-injection: JSON `{ "p": [...], "q": [...] }`.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    imbalance: f64,
    /// Path length for hard-line.
    #[arg(long)]
    nodes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON list of experiment configs, each with a `name`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Deserialize, Serialize)]
struct AbstractPair {
    p: Vec<f64>,
    q: Vec<f64>,
}

fn param(msg: impl Into<String>) -> HarnessError {
    HarnessError::Param(Error::Config(msg.into()))
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    write_output(Some(path), &text)
}

fn build_config(mode: Mode, a: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let mut cfg: ExperimentConfig = load_json(path)?;
            cfg.mode = mode;
            cfg
        }
        None => {
            let instance = match (mode, a.inputs.as_slice()) {
                (Mode::Tree, [path]) => InstanceSpec::TreeFile { path: path.clone() },
                (Mode::Tree, _) => return Err(param("tree-emd needs exactly one --in tree instance")),
                (_, [p, q]) => InstanceSpec::Files { p: p.clone(), q: q.clone() },
                _ => return Err(param("pass --config or two --in files (p then q)")),
            };
            let eps = a.eps.ok_or_else(|| param("--eps is required without --config"))?;
            let mut cfg = ExperimentConfig::new(mode, instance, eps);
            if let InstanceSpec::Files { p, .. } = &cfg.instance {
                let file: DistributionFile = load_json(p)?;
                cfg.dim = file.d;
                cfg.span = file.delta;
            }
            cfg
        }
    };
    if let Some(v) = a.eps {
        cfg.eps = v;
    }
    if let Some(v) = a.delta {
        cfg.delta = v;
    }
    if let Some(v) = a.dim {
        cfg.dim = v;
    }
    if let Some(v) = a.span {
        cfg.span = v;
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.c_mult {
        cfg.c_mult = v;
    }
    if let Some(s) = a.strategy {
        cfg.strategy = match s {
            StrategyArg::Plugin => Strategy::Plugin,
            StrategyArg::Collision => Strategy::Collision,
            StrategyArg::Auto => Strategy::Auto,
        };
    }
    if let Some(path) = &a.centers {
        cfg.centers = Some(CenterSpec::Known { centers: load_json(path)? });
    } else if let Some(k) = a.k {
        cfg.centers = Some(CenterSpec::Unknown { k });
    }
    if let Some(out) = &a.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn run(mode: Mode, a: &RunArgs) -> CliResult<()> {
    let cfg = build_config(mode, a)?;
    let report = run_experiment(&cfg)?;
    let text = match a.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    write_output(cfg.output.as_deref(), &text)
}

fn generate(a: &GenArgs) -> CliResult<()> {
    fs::create_dir_all(&a.out).map_err(|e| HarnessError::Io(format!("{}: {e}", a.out.display())))?;
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| param(format!("{flag} is required")));
    let (p, q) = match a.kind {
        GenKind::HardPair => gen_hard_pair_1d(a.span, need(a.eps, "--eps")?)?,
        GenKind::GridInjection => {
            let path = a.input.as_deref().ok_or_else(|| param("--in is required"))?;
            let pair: AbstractPair = load_json(path)?;
            gen_grid_injection(&pair.p, &pair.q, pair.p.len(), a.dim, a.span)?
        }
        GenKind::Clustered => {
            let k = a.k.ok_or_else(|| param("--k is required"))?;
            let inst = gen_clustered(k, need(a.b, "--b")?, a.dim, a.span, a.imbalance)?;
            let centers: Vec<Vec<f64>> = inst.centers.iter().map(|c| c.coords().to_vec()).collect();
            write_json(&a.out.join("centers.json"), &centers)?;
            (inst.p, inst.q)
        }
        GenKind::HardLine => {
            let n = a.nodes.ok_or_else(|| param("--nodes is required"))?;
            let (tree, p, q) = hard_line_instance(n, need(a.eps, "--eps")?)?;
            return write_json(&a.out.join("instance.json"), &TreeInstance { tree: tree.to_file(), p, q });
        }
    };
    write_json(&a.out.join("p.json"), &p.to_file())?;
    write_json(&a.out.join("q.json"), &q.to_file())
}

fn bench(a: &BenchArgs) -> CliResult<()> {
    let entries: Vec<BenchEntry> = load_json(&a.config)?;
    let rows = run_bench(&entries)?;
    let text = match a.format {
        Format::Csv => rate_table_csv(&rows),
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    };
    write_output(a.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => run(Mode::Estimate, a),
        Command::Test(a) => run(Mode::Test, a),
        Command::TestKnown(a) => run(Mode::TestKnown, a),
        Command::TestCluster(a) => run(Mode::TestCluster, a),
        Command::TreeEmd(a) => run(Mode::Tree, a),
        Command::Gen(a) => generate(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("emdtest: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
