use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use varanneal::config::{Config, Section};
use varanneal::experiments::{
    bipartite, histogram, kappa, lmg, spinglass, twoqubit, Output, Report,
};

/// Variational quantum-annealing experiments.
#[derive(Debug, Parser)]
#[command(name = "varanneal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Config file with a section per command.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed (spin-glass commands); overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the config value or 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-qubit final-distance scan over catalyst strength and annealing time.
    TwoqubitScan(Common),
    /// Bipartite model scan over catalyst strength and number of extra levels.
    BipartiteScan(Common),
    /// LMG scan over annealing times.
    LmgScan(Common),
    /// Annealing traces of one spin-glass instance.
    SpinglassRun(Common),
    /// Final-distance statistics over a disorder ensemble.
    SpinglassHistogram {
        #[command(flatten)]
        common: Common,
        /// Ignore checkpoints of earlier runs.
        #[arg(long)]
        fresh: bool,
    },
    /// Kappa bound and measured deviations on a product manifold.
    KappaReport(Common),
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::TwoqubitScan(c) => (twoqubit::COMMAND, c),
        Command::BipartiteScan(c) => (bipartite::COMMAND, c),
        Command::LmgScan(c) => (lmg::COMMAND, c),
        Command::SpinglassRun(c) => (spinglass::COMMAND, c),
        Command::SpinglassHistogram { common, .. } => (histogram::COMMAND, common),
        Command::KappaReport(c) => (kappa::COMMAND, c),
    };
    let config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let section: Section = config.section(name);
    let workers = match common.workers {
        Some(w) => w,
        None => section.get("workers", 1usize)?,
    };
    anyhow::ensure!(workers >= 1, "--workers must be at least 1");
    let out = Output::new(&common.out, common.plots);
    let files = match &cli.command {
        Command::TwoqubitScan(_) => {
            let p = twoqubit::Params::from_section(&section)?;
            twoqubit::run(&p, workers)?.write(&out)?
        }
        Command::BipartiteScan(_) => {
            let p = bipartite::Params::from_section(&section)?;
            bipartite::run(&p, workers)?.write(&out)?
        }
        Command::LmgScan(_) => {
            let p = lmg::Params::from_section(&section)?;
            lmg::run(&p, workers)?.write(&out)?
        }
        Command::SpinglassRun(_) => {
            let p = spinglass::Params::from_section(&section, common.seed)?;
            spinglass::run(&p, workers)?.write(&out)?
        }
        Command::SpinglassHistogram { fresh, .. } => {
            let p = histogram::Params::from_section(&section, common.seed)?;
            let checkpoints = common.out.join("checkpoints");
            if *fresh && checkpoints.exists() {
                std::fs::remove_dir_all(&checkpoints)
                    .with_context(|| format!("removing {}", checkpoints.display()))?;
            }
            histogram::run(&p, workers, Some(&checkpoints))?.write(&out)?
        }
        Command::KappaReport(_) => {
            let p = kappa::Params::from_section(&section)?;
            kappa::run(&p, workers)?.write(&out)?
        }
    };
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}
