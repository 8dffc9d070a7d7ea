//! `schauder-lab`: run experiments from config files and compare their manifests.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use schauder_core::error::LabError;
use schauder_core::experiments::{compare, run, ExperimentConfig, ExperimentKind, RunManifest, Verdict};

#[derive(Parser)]
#[command(name = "schauder-lab", version, about = "Numerical experiments on stable kernels, Hölder flows and frozen-proxy solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `output` from the config, else `runs/<kind>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Heat kernel densities, normalization and optional Monte-Carlo check.
    Kernel(RunArgs),
    /// Smoothing exponents of derivative moments, or a divergence certificate.
    Pbeta(RunArgs),
    /// Pointwise derivative envelopes.
    Kolokoltsov(RunArgs),
    /// Flow stability ratio and mollification bound.
    Flow(RunArgs),
    /// Frozen semigroup smoothing rates and the Duhamel residual.
    Proxy(RunArgs),
    /// Fixed-point solver against the vanishing-viscosity reference.
    Solve(RunArgs),
    /// Empirical Schauder ratios across drift offsets.
    Schauder(RunArgs),
    /// Hölder bound for fractional operators.
    Fracop(RunArgs),
    /// Compare two run manifests (files or run directories).
    Compare { a: PathBuf, b: PathBuf },
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("manifest.json")
    } else {
        p.to_path_buf()
    }
}

fn fail(e: &LabError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_validation() { 2 } else { 1 })
}

fn run_kind(kind: ExperimentKind, args: RunArgs) -> ExitCode {
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if cfg.kind != kind {
        eprintln!("error: config `kind` is `{}` but the subcommand is `{}`", cfg.kind.name(), kind.name());
        return ExitCode::from(2);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = args
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(kind.name()));
    let manifest = match run(&cfg, &out) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    for c in &manifest.checks {
        let metrics: Vec<String> = c.metrics.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        println!("{:<10} {:<28} {}", format!("{:?}", c.verdict).to_uppercase(), c.name, metrics.join(" "));
    }
    println!("{} artifacts in {} ({:.1} s)", manifest.artifacts.len(), out.display(), manifest.wall_time_seconds);
    if manifest.any_fail() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run_compare(a: &Path, b: &Path) -> ExitCode {
    let load = |p: &Path| RunManifest::load(&manifest_path(p));
    let (ma, mb) = match (load(a), load(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return fail(&e),
    };
    let rep = match compare(&ma, &mb) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let show = |v: Option<Verdict>| v.map(|v| format!("{v:?}").to_uppercase()).unwrap_or_else(|| "-".into());
    let diffs = rep.differences();
    if diffs.is_empty() {
        println!("no differences");
    }
    for d in diffs {
        let deltas: Vec<String> = d.metric_deltas.iter().filter(|(_, v)| **v != 0.0).map(|(k, v)| format!("Δ{k}={v:+.3e}")).collect();
        println!("{:<28} {} -> {} {}", d.name, show(d.verdict_a), show(d.verdict_b), deltas.join(" "));
    }
    if rep.pass_flipped {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Kernel(a) => run_kind(ExperimentKind::Kernel, a),
        Command::Pbeta(a) => run_kind(ExperimentKind::Pbeta, a),
        Command::Kolokoltsov(a) => run_kind(ExperimentKind::Kolokoltsov, a),
        Command::Flow(a) => run_kind(ExperimentKind::Flow, a),
        Command::Proxy(a) => run_kind(ExperimentKind::Proxy, a),
        Command::Solve(a) => run_kind(ExperimentKind::Solve, a),
        Command::Schauder(a) => run_kind(ExperimentKind::Schauder, a),
        Command::Fracop(a) => run_kind(ExperimentKind::Fracop, a),
        Command::Compare { a, b } => run_compare(&a, &b),
    }
}
