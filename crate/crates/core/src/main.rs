use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blurmm::commands::{self, Run};
use blurmm::config::RunConfig;
use blurmm::Result;

#[derive(Parser)]
#[command(name = "blurmm", version, about = "Blur simulation, sharpness routing and multi-model evaluation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic corpus (or tiles cut from configured rasters) and its manifest.
    GenCorpus,
    /// Measure the LV-vs-σ curve and derive routing thresholds.
    Calibrate {
        /// AUC table (sigma,<model>...) to take σ cut-offs from.
        #[arg(long)]
        auc_curves: Option<PathBuf>,
    },
    /// Train the configured feature models on the corpus and write roster.json.
    Train,
    /// Score every predictor on fixed-σ blurred copies of the corpus.
    Sweep,
    /// Compare routed multi-model and base-model AUC across blur scenarios.
    Scenarios,
    /// Route and score the corpus as-is, writing scores and the routing trace.
    Route {
        /// thresholds.json written by `calibrate`.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Find σ cut-offs in an AUC table (default: the shipped slide-level table).
    Report {
        #[arg(long)]
        auc_curves: Option<PathBuf>,
        /// LV curve CSV to map the cut-offs onto LV thresholds.
        #[arg(long)]
        lv_curve: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<String> {
    let mut config = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        config.master_seed = seed;
    }
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| blurmm::Error::Config(format!("thread pool: {e}")))?;
    }
    let run = Run::new(config, cli.common.out);
    Ok(match cli.command {
        Command::GenCorpus => format!("wrote {} tiles", commands::gen_corpus(&run)?),
        Command::Calibrate { auc_curves } => {
            let d = commands::calibrate(&run, auc_curves.as_deref())?;
            for w in &d.warnings {
                eprintln!("warning: {w}");
            }
            format!(
                "theta_hi = {} (sigma {}), theta_lo = {} (sigma {})",
                d.policy.theta_hi, d.sigma_cutoffs[0], d.policy.theta_lo, d.sigma_cutoffs[1]
            )
        }
        Command::Train => format!("trained {} models", commands::train(&run)?.len()),
        Command::Sweep => format!("{} report rows", commands::sweep(&run)?.rows.len()),
        Command::Scenarios => format!("{} report rows", commands::scenarios(&run)?.rows.len()),
        Command::Route { thresholds } => {
            let s = commands::route(&run, thresholds.as_deref())?;
            format!("routed {} tiles: {:?}", s.tiles, s.band_counts)
        }
        Command::Report { auc_curves, lv_curve } => {
            let r = commands::report(&run, auc_curves.as_deref(), lv_curve.as_deref())?;
            format!("sigma cut-offs {:?}", r.sigma_cutoffs)
        }
    })
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
