use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use otfs_isac::fnn::FnnModel;
use otfs_isac::harness::{self, MetricRow, SimConfig};
use otfs_isac::selftest;

/// Monte Carlo experiments for RCP-OTFS channel estimation, sensing and detection.
#[derive(Debug, Parser)]
#[command(name = "otfs-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment description (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV destination; overrides `run.output`. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trials per sweep point; overrides `run.trials`.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Channel-estimation NMSE against SNR_p or N.
    ChestSweep,
    /// Uncoded BER and IMFC iterations against E_b/N0, the IMFC threshold or N.
    BerSweep,
    /// Range and velocity RMSE against radar SNR.
    SensingSweep,
    /// Path-count detection by classifier and stopping rule.
    DetectEval {
        /// Classifier file; defaults to `fnn.model`. Without one only the stopping rule runs.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Generates the training set and trains the path-count classifier.
    FnnTrain {
        /// Where to write the model; defaults to `fnn.model`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Classifier accuracy on fresh samples at each SNR_p of the sweep.
    FnnEval {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Operator-algebra oracle and property checks.
    Selftest,
}

fn load_config(cli: &Cli) -> Result<SimConfig> {
    let path = cli.config.as_ref().context("--config <path> is required for this subcommand")?;
    let mut cfg = SimConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.run.trials = trials;
    }
    if let Some(out) = &cli.out {
        cfg.run.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &SimConfig, rows: &[MetricRow]) -> Result<()> {
    match &cfg.run.output {
        Some(path) => {
            harness::write_csv(path, rows)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => std::io::stdout().write_all(harness::to_csv(rows).as_bytes())?,
    }
    Ok(())
}

fn model_path(flag: &Option<PathBuf>, cfg: &SimConfig) -> Option<PathBuf> {
    flag.clone().or_else(|| cfg.fnn.model.clone()).or_else(|| cfg.estimation.model.clone())
}

fn load_model(path: &Path) -> Result<FnnModel> {
    FnnModel::load(path).with_context(|| format!("loading classifier {}", path.display()))
}

fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    match &cli.command {
        Command::Selftest => {
            let checks = selftest::run_all(cli.seed.unwrap_or(0))?;
            let failed = checks.iter().filter(|c| !c.passed()).count();
            for c in &checks {
                println!("{c}");
            }
            eprintln!("{} checks, {failed} failed, {:.1} s", checks.len(), started.elapsed().as_secs_f64());
            if failed > 0 {
                bail!("{failed} selftest checks failed");
            }
        }
        Command::ChestSweep => {
            let cfg = load_config(cli)?;
            emit(&cfg, &harness::chest_sweep(&cfg)?)?;
        }
        Command::BerSweep => {
            let cfg = load_config(cli)?;
            emit(&cfg, &harness::ber_sweep(&cfg)?)?;
        }
        Command::SensingSweep => {
            let cfg = load_config(cli)?;
            emit(&cfg, &harness::sensing_sweep(&cfg)?)?;
        }
        Command::DetectEval { model } => {
            let cfg = load_config(cli)?;
            let model = model_path(model, &cfg).map(|p| load_model(&p)).transpose()?;
            emit(&cfg, &harness::detect_eval(&cfg, model.as_ref())?)?;
        }
        Command::FnnTrain { model } => {
            let cfg = load_config(cli)?;
            let path = model.clone().or_else(|| cfg.fnn.model.clone()).context("no model destination: pass --model or set fnn.model")?;
            let (outcome, rows) = harness::train_classifier(&cfg)?;
            outcome.model.save(&path)?;
            eprintln!("saved classifier to {} (validation accuracy {:.3})", path.display(), outcome.model.meta.validation_accuracy);
            emit(&cfg, &rows)?;
        }
        Command::FnnEval { model } => {
            let cfg = load_config(cli)?;
            let path = model_path(model, &cfg).context("no classifier: pass --model or set fnn.model")?;
            emit(&cfg, &harness::evaluate_classifier(&cfg, &load_model(&path)?)?)?;
        }
    }
    eprintln!("done in {:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
