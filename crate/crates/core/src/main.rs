use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use progressftx::bounds::calibrate;
use progressftx::gains::GainTable;
use progressftx::harness::{emit_csv, run_sweep, ExperimentConfig};
use progressftx::selftest::{run_all, Status};
use progressftx::stopping::gain_profile;
use progressftx::Result;

#[derive(Parser)]
#[command(name = "progressftx", version, about = "Progressive feature transmission simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file and write CSV output.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; the per-dimension table goes next to it as `<stem>_txprob.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the calibrated envelope constants for a model state.
    Calibrate {
        /// Model and channel to use; defaults apply without one.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Current differential distance.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        delta1: f64,
        /// Number of top-gain features already received.
        #[arg(long, default_value_t = 0)]
        received: usize,
    },
    /// Run the acceptance suite.
    Selftest,
}

fn load(config: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match config {
        Some(p) => ExperimentConfig::read(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep {
            config,
            seed,
            out,
            workers,
        } => {
            let mut cfg = load(Some(&config))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let out = out.or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("sweep.csv"));
            let result = run_sweep(&cfg)?;
            emit_csv(&result, &out)?;
            eprintln!("wrote {} rows to {}", result.rows.len(), out.display());
            Ok(true)
        }
        Command::Calibrate {
            config,
            delta1,
            received,
        } => {
            let cfg = load(config.as_ref())?;
            let model = cfg.build_model()?;
            let table = GainTable::new(&model);
            let y0 = cfg.channel.features_per_slot()?;
            let mut mask = vec![false; table.dim()];
            table.order().iter().take(received).for_each(|&n| mask[n] = true);
            let profile = gain_profile(&table, &mask, y0, cfg.horizon);
            let bound = calibrate(cfg.bound_fit, delta1, &profile, cfg.quad_tol)?;
            println!("fit = {}", cfg.bound_fit);
            println!("delta1 = {delta1}");
            println!("Y0 = {y0}");
            println!("c1 = {}", bound.c1);
            println!("c2 = {}", bound.c2);
            println!("k,G,E_H_ub,tilde_H");
            for (k, (g, e)) in bound.grid.iter().zip(&bound.expected).enumerate() {
                println!("{k},{g},{e},{}", bound.tilde_h(*g));
            }
            Ok(true)
        }
        Command::Selftest => {
            let reports = run_all();
            for r in &reports {
                println!("{}", r.line());
            }
            Ok(reports.iter().all(|r| r.status == Status::Pass))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
