use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use bosonlab::cache::{OperatorCache, CACHE_ENV};
use bosonlab::effective::{gradient_flow_a_star, townes_ground_state};
use bosonlab::harness::{
    emit_plots, experiments::default_output_dir, run, Envelope, ExperimentConfig, ExperimentKind, ProfileSpec,
    RunOptions, RunSummary, DEFAULT_SEED,
};
use bosonlab::spectral::TorusGrid;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "lab", version, about = "Focusing 2D Bose gas laboratory")]
struct Cli {
    /// Worker threads for independent runs (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Largest Fock basis dimension any run may allocate.
    #[arg(long, global = true)]
    basis_cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvelopeArg {
    Tiny,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Artifact directory (default: the config's output or runs/<kind>-<hash>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the identity and oracle suites.
    Verify {
        #[arg(long, value_enum, default_value = "tiny")]
        envelope: EnvelopeArg,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write gnuplot data and scripts for an artifact directory.
    Plot { dir: PathBuf },
    /// Compute the Townes soliton and the sharp Gagliardo–Nirenberg constant.
    Townes {
        /// Bisection tolerance on Q(0).
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Side of the periodic box for the gradient-flow cross-check.
        #[arg(long, default_value_t = 24.0)]
        length: f64,
        /// Grid points per side for the gradient-flow cross-check.
        #[arg(long, default_value_t = 128)]
        points: usize,
    },
}

fn report(summary: &RunSummary, dir: &std::path::Path) -> ExitCode {
    for a in &summary.assertions {
        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    println!("artifacts: {}", dir.display());
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        let failed: Vec<&str> = summary.failed().map(|a| a.name.as_str()).collect();
        eprintln!("assertion failure: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}

fn options(cli: &Cli) -> Result<RunOptions> {
    let cache = OperatorCache::from_env().with_context(|| format!("opening the cache named by {CACHE_ENV}"))?;
    Ok(RunOptions {
        workers: cli.workers,
        basis_cap: cli.basis_cap,
        cache,
    })
}

fn main() -> Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
            let dir = match out {
                Some(dir) => dir.clone(),
                None => default_output_dir(&cfg)?,
            };
            let summary = run(&cfg, &dir, &options(&cli)?)?;
            Ok(report(&summary, &dir))
        }
        Command::Verify { envelope, seed, out } => {
            let mut cfg = ExperimentConfig::new(
                ExperimentKind::Verify,
                ProfileSpec::Disk {
                    coupling: -5.850448262280,
                    radius: 1.0,
                },
            );
            cfg.experiment.seed = *seed;
            cfg.experiment.envelope = match envelope {
                EnvelopeArg::Tiny => Envelope::Tiny,
                EnvelopeArg::Full => Envelope::Full,
            };
            let dir = match out {
                Some(dir) => dir.clone(),
                None => default_output_dir(&cfg)?,
            };
            let summary = run(&cfg, &dir, &options(&cli)?)?;
            Ok(report(&summary, &dir))
        }
        Command::Plot { dir } => {
            for path in emit_plots(dir)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Townes { tol, length, points } => {
            let q = townes_ground_state(*tol)?;
            let gn = (q.kinetic * q.a_star - 0.5 * q.a_star * q.quartic).abs() / (q.kinetic * q.a_star);
            println!("a* (shooting)        = {:.12}", q.a_star);
            println!("Q(0)                 = {:.12}", q.center);
            println!("GN identity residual = {gn:.3e}");
            let flow = gradient_flow_a_star(TorusGrid::new(*length, *points)?, 1e-12, 5000)?;
            println!(
                "a* (gradient flow)   = {:.12}  (relative difference {:.3e}, {} iterations)",
                flow.a_star,
                (flow.a_star - q.a_star).abs() / q.a_star,
                flow.iterations
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
