use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lanewar_core::config::ExperimentConfig;
use lanewar_core::experiment::{analyze, run_eval, run_experiment, Mode, RunSummary};

#[derive(Parser)]
#[command(name = "lanewar", about = "Lane-defense co-training experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; omitted fields use defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Episode budget override.
    #[arg(long)]
    episodes: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(episodes) = self.episodes {
            cfg.episodes = episodes;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Attacker,
    Defender,
}

#[derive(Subcommand)]
enum Command {
    /// Co-train both sides with PPO.
    Train(CommonArgs),
    /// Run both-random episodes with no learning.
    Baseline(CommonArgs),
    /// Train one side against the random opponent.
    Ablate {
        /// Which side keeps learning.
        #[arg(long, value_enum)]
        side: Side,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Play a saved policy checkpoint against the random opponent.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Aggregate strategy statistics over a directory of trace files.
    Analyze {
        #[arg(long)]
        traces: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn report(summary: &RunSummary) {
    println!(
        "{}: {} episodes, avg length {:.2}, attacker win rate {:.1}%, {:.1}s",
        summary.mode,
        summary.episodes,
        summary.avg_episode_length,
        summary.attacker_win_rate * 100.0,
        summary.wall_clock_seconds
    );
    print!("{}", summary.strategies.table_text());
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train(common) => {
            let cfg = common.resolve()?;
            report(&run_experiment(&cfg, Mode::CoTrain)?);
        }
        Command::Baseline(common) => {
            let cfg = common.resolve()?;
            report(&run_experiment(&cfg, Mode::Baseline)?);
        }
        Command::Ablate { side, common } => {
            let cfg = common.resolve()?;
            let mode = match side {
                Side::Defender => Mode::AblateDefender,
                Side::Attacker => Mode::AblateAttacker,
            };
            report(&run_experiment(&cfg, mode)?);
        }
        Command::Eval { checkpoint, common } => {
            let cfg = common.resolve()?;
            report(&run_eval(&cfg, &checkpoint)?);
        }
        Command::Analyze { traces, common } => {
            let cfg = common.resolve()?;
            let report = analyze(&traces)?;
            if report.skipped > 0 {
                eprintln!("{} unreadable trace file(s) skipped", report.skipped);
            }
            print!("{}", report.stats.table_text());
            std::fs::create_dir_all(&cfg.out_dir)?;
            std::fs::write(cfg.out_dir.join("analysis.csv"), report.stats.csv_text())?;
        }
    }
    Ok(())
}
