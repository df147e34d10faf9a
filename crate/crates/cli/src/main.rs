use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use smoothsearch::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "smoothsearch", version, about = "Adaptive search experiments for regime-switching discrete stochastic optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured algorithms and write trace and summary CSVs.
    Run(Common),
    /// Convergence percentages per (lambda, S) cell and checkpoint.
    Table1(Common),
    /// Forced-jump traces and the efficiency-vs-epsilon sweep.
    Example2 {
        #[command(flatten)]
        common: Common,
        /// Run the sweep at 10^6 iterations per run.
        #[arg(long)]
        full_scale: bool,
    },
    /// Compare ensemble regret against the limit ODE over a step-size sweep.
    OdeCheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; the built-in default for the subcommand if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Base seed (overrides report.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Replications (overrides report.replications).
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads, 0 for all cores (overrides report.threads).
    #[arg(long)]
    threads: Option<usize>,
}

fn load(common: &Common, builtin: &str) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::from_toml_str(builtin).context("built-in config")?,
    };
    if let Some(seed) = common.seed {
        cfg.report.seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.report.replications = reps;
    }
    if let Some(threads) = common.threads {
        cfg.report.threads = threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run<R, F>(common: &Common, builtin: &str, edit: impl FnOnce(&mut ExperimentConfig), job: F) -> Result<R>
where
    R: Send,
    F: FnOnce(&ExperimentConfig, &Path) -> smoothsearch::Result<R> + Send,
{
    let mut cfg = load(common, builtin)?;
    edit(&mut cfg);
    let out = common.out.as_path();
    Ok(harness::with_threads(cfg.report.threads, || job(&cfg, out))??)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(c) => {
            let r = run(&c, include_str!("../../../configs/run.toml"), |_| {}, harness::run_experiment)?;
            print!("{r}");
            report_files(&r.files);
        }
        Command::Table1(c) => {
            let r = run(&c, include_str!("../../../configs/table1.toml"), |_| {}, harness::table1)?;
            print!("{r}");
            report_files(&r.files);
        }
        Command::Example2 { common, full_scale } => {
            let edit = |cfg: &mut ExperimentConfig| cfg.report.full_scale |= full_scale;
            let r = run(&common, include_str!("../../../configs/example2.toml"), edit, harness::example2)?;
            print!("{r}");
            report_files(&r.files);
        }
        Command::OdeCheck(c) => {
            let r = run(&c, include_str!("../../../configs/ode_check.toml"), |_| {}, harness::ode_check)?;
            print!("{r}");
            report_files(&r.files);
            if !r.passed() {
                std::process::exit(2);
            }
        }
    }
    Ok(())
}
