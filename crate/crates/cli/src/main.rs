use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use teamform::counterexample::{build_tree, count_all, count_by_height, low_height_fraction, walk_hitting_times};
use teamform::dynamics::{run, RecordMode, SimConfig, StopRule};
use teamform::experiments::{
    self, emit_chart, load_spec, run_fig4, run_fig5, run_verify, verify_instance, ChartKind, ExperimentKind,
    ExperimentSpec,
};
use teamform::matching::{empty_matching, load_matching, save_matching, write_matching};
use teamform::network::{
    gen_bounded_planted, gen_counterexample, gen_random, load_network, write_network, BipartiteNetwork,
    ConstraintRule,
};
use teamform::oracle::best_matching;

#[derive(Parser)]
#[command(name = "teamform", version, about = "Leader/follower team formation: simulation and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network file.
    Gen(GenArgs),
    /// Exact best matching of a network.
    Oracle(OracleArgs),
    /// Simulate the protocol and write the trajectory CSV.
    Run(RunArgs),
    /// Convergence times on the triangular networks G_n.
    Fig4(ExperimentArgs),
    /// Approximation times on random networks.
    Fig5(ExperimentArgs),
    /// Height counts of deficit-one matchings of G_n.
    Count(CountArgs),
    /// Hitting-time samples of the random walk on T*_m.
    Tree(TreeArgs),
    /// Run the verification suites, or check one network/matching.
    Verify(VerifyArgs),
    /// Render an experiment CSV as an SVG line chart.
    Chart(ChartArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Counterexample,
    Random,
    Planted,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long)]
    n: usize,
    /// Followers (random and planted).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// `capped` or `fixed:<c>`.
    #[arg(long, default_value = "capped")]
    constraint: String,
    /// Leader degree (planted).
    #[arg(long, default_value_t = 4)]
    max_degree: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    network: PathBuf,
    /// Where to write the witness matching.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stop {
    Stable,
    /// d - d* < eps * m
    Approx,
    Fixed,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    network: PathBuf,
    /// Initial matching; empty if absent.
    #[arg(long)]
    matching: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long)]
    q_matched: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_rounds: u64,
    #[arg(long, value_enum, default_value_t = Stop::Stable)]
    stop: Stop,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Record only rounds where the state changes.
    #[arg(long)]
    changes_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the final matching.
    #[arg(long)]
    final_matching: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// `key = value` spec file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_rounds: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Comma-separated list.
    #[arg(long)]
    eps: Option<String>,
    /// Sizes, e.g. `4..16:2` (fig4).
    #[arg(long)]
    n: Option<String>,
    /// Pairs, e.g. `100x200,100x300` (fig5).
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    networks: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    time_budget_secs: Option<f64>,
    /// Also write an SVG chart here.
    #[arg(long)]
    chart: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    walks: usize,
    /// Start at the deepest node instead of the root's child.
    #[arg(long)]
    deepest: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run only these suites (repeatable).
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Check this network instead of running the suites.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long, requires = "network")]
    matching: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChartArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::Lines)]
    kind: Kind,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Lines,
    LogLines,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_network(path: &Path) -> Result<Arc<BipartiteNetwork>> {
    Ok(Arc::new(load_network(path).with_context(|| format!("reading {}", path.display()))?))
}

fn parse_rule(s: &str) -> Result<ConstraintRule> {
    match s.split_once(':') {
        None if s == "capped" => Ok(ConstraintRule::CappedRatio),
        Some(("fixed", c)) => Ok(ConstraintRule::Fixed(c.trim().parse().context("fixed constraint")?)),
        _ => bail!("constraint must be `capped` or `fixed:<c>`"),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let net = match a.family {
        Family::Counterexample => gen_counterexample(a.n)?,
        Family::Random => {
            let m = a.m.context("--m is required")?;
            gen_random(a.n, m, a.rho, a.seed, parse_rule(&a.constraint)?)?
        }
        Family::Planted => {
            let m = a.m.context("--m is required")?;
            gen_bounded_planted(a.n, m, a.max_degree, a.seed)?
        }
    };
    emit(a.out.as_deref(), &write_network(&net))
}

fn oracle(a: OracleArgs) -> Result<()> {
    let net = read_network(&a.network)?;
    let best = best_matching(&net);
    println!("d_star {}", best.d_star);
    println!("stable_exists {}", best.stable_exists);
    match a.out {
        Some(path) => save_matching(&best.witness, &path)?,
        None => print!("{}", write_matching(&best.witness)),
    }
    Ok(())
}

fn simulate(a: RunArgs) -> Result<()> {
    let net = read_network(&a.network)?;
    let start = match &a.matching {
        Some(path) => load_matching(&net, path)?,
        None => empty_matching(&net),
    };
    let stop = match a.stop {
        Stop::Stable => StopRule::Stable,
        Stop::Fixed => StopRule::FixedRounds,
        Stop::Approx => {
            let d_star = best_matching(&net).d_star;
            StopRule::DeficitBelow(a.eps * net.num_followers() as f64 + d_star as f64)
        }
    };
    let mut cfg = SimConfig::new(a.p, a.q, a.seed)?
        .with_max_rounds(a.max_rounds)
        .with_stop(stop)
        .with_record(if a.changes_only { RecordMode::Changes } else { RecordMode::EveryRound });
    if let Some(qm) = a.q_matched {
        cfg = cfg.with_q_matched(qm)?;
    }
    let traj = run(&start, &cfg);
    if let Some(path) = &a.final_matching {
        save_matching(&traj.final_matching, path)?;
    }
    emit(a.out.as_deref(), &traj.to_csv())
}

fn experiment_spec(a: &ExperimentArgs, kind: ExperimentKind) -> Result<ExperimentSpec> {
    let mut spec = match &a.config {
        Some(path) => load_spec(path, Some(kind))?,
        None => ExperimentSpec::default_for(kind),
    };
    if spec.kind != kind {
        bail!("config describes {}, not {}", spec.kind.as_str(), kind.as_str());
    }
    let mut overrides = String::new();
    let mut set = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            overrides.push_str(&format!("{key} = {v}\n"));
        }
    };
    set("seed", a.seed.map(|v| v.to_string()));
    set("max_rounds", a.max_rounds.map(|v| v.to_string()));
    set("p", a.p.map(|v| v.to_string()));
    set("q", a.q.map(|v| v.to_string()));
    set("eps", a.eps.clone());
    set("n", a.n.clone());
    set("pairs", a.pairs.clone());
    set("rho", a.rho.map(|v| v.to_string()));
    set("networks", a.networks.map(|v| v.to_string()));
    set("runs", a.runs.map(|v| v.to_string()));
    set("time_budget_secs", a.time_budget_secs.map(|v| v.to_string()));
    experiments::apply_config(&mut spec, &overrides)?;
    if a.out.is_some() {
        spec.out = a.out.clone();
    }
    if a.chart.is_some() {
        spec.chart = a.chart.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn figure(a: ExperimentArgs, kind: ExperimentKind) -> Result<()> {
    let spec = experiment_spec(&a, kind)?;
    let (csv, chart_kind) = match kind {
        ExperimentKind::Fig4Counterexample => (run_fig4(&spec)?.csv, ChartKind::LogLines),
        _ => (run_fig5(&spec)?.csv, ChartKind::Lines),
    };
    emit(spec.out.as_deref(), &csv)?;
    if let Some(path) = &spec.chart {
        fs::write(path, emit_chart(&csv, chart_kind)?)?;
    }
    Ok(())
}

fn count(a: CountArgs) -> Result<()> {
    println!("j,count");
    for j in 0..a.n {
        println!("{j},{}", count_by_height(a.n, j)?);
    }
    println!("# total {}", count_all(a.n)?);
    if let Some(gamma) = a.gamma {
        println!("# low_height_fraction gamma={gamma} {}", low_height_fraction(a.n, gamma)?);
    }
    Ok(())
}

fn tree(a: TreeArgs) -> Result<()> {
    let tree = build_tree(a.m)?;
    let start = if a.deepest { tree.deepest() } else { tree.node(tree.root()).children[0] };
    let samples = walk_hitting_times(&tree, start, a.seed, a.walks)?;
    let mut csv = String::from("walk,steps\n");
    for (i, s) in samples.iter().enumerate() {
        csv.push_str(&format!("{i},{s}\n"));
    }
    csv.push_str(&format!(
        "# m={} nodes={} start_depth={} seed={} rng=chacha8\n",
        a.m,
        tree.len(),
        tree.node(start).depth,
        a.seed
    ));
    emit(a.out.as_deref(), &csv)
}

fn verify(a: VerifyArgs) -> Result<bool> {
    if let Some(path) = &a.network {
        let net = read_network(path)?;
        let matching = match &a.matching {
            Some(mp) => Some(load_matching(&net, mp)?),
            None => None,
        };
        let out = verify_instance(&net, matching.as_ref(), a.eps);
        emit(a.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&out)?))?;
        return Ok(out.passed);
    }
    let mut spec = match &a.config {
        Some(path) => load_spec(path, Some(ExperimentKind::VerifySuite))?,
        None => ExperimentSpec::verify(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if !a.suites.is_empty() {
        spec.suites = a.suites.clone();
    }
    let report = run_verify(&spec)?;
    for s in &report.suites {
        eprintln!("{} {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail);
    }
    emit(a.out.as_deref(), &format!("{}\n", report.to_json()))?;
    Ok(report.passed)
}

fn chart(a: ChartArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let kind = match a.kind {
        Kind::Lines => ChartKind::Lines,
        Kind::LogLines => ChartKind::LogLines,
    };
    emit(a.out.as_deref(), &emit_chart(&text, kind)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Oracle(a) => oracle(a).map(|_| true),
        Command::Run(a) => simulate(a).map(|_| true),
        Command::Fig4(a) => figure(a, ExperimentKind::Fig4Counterexample).map(|_| true),
        Command::Fig5(a) => figure(a, ExperimentKind::Fig5RandomSweep).map(|_| true),
        Command::Count(a) => count(a).map(|_| true),
        Command::Tree(a) => tree(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Chart(a) => chart(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
