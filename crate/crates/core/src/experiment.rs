//! Experiment orchestration: co-training, baselines, ablations, checkpoint
//! evaluation, and offline trace analysis. Every mode is reproducible from
//! the master seed alone.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::engine::{AttackerAction, DefenderAction, Terminal, DEFENDER_ACTIONS};
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate_counts, episode_counts, read_trace, write_trace, EpisodeCounts, EpisodeTrace,
    StatsReport,
};
use crate::net::{attacker_head_sizes, load_checkpoint, save_checkpoint, DEFENDER_HEAD_SIZES};
use crate::ppo::{
    episode_seed, ppo_update, random_attacker_policy_with_prob, Arena, AttackerCtl, DefenderCtl,
    Learner, RolloutBuffer, StopRule, UpdateStats,
};

/// Experiment modes. Eval and Analyze are driven through [`run_eval`] and
/// [`analyze`] since they need extra inputs (a checkpoint, a trace dir).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Both sides learn.
    CoTrain,
    /// Both sides random; no learning.
    Baseline,
    /// Defenders learn against the random attacker.
    AblateDefender,
    /// Attacker learns against random defenders.
    AblateAttacker,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::CoTrain => "cotrain",
            Mode::Baseline => "baseline",
            Mode::AblateDefender => "ablate_defender",
            Mode::AblateAttacker => "ablate_attacker",
        }
    }

    fn defender_learns(self) -> bool {
        matches!(self, Mode::CoTrain | Mode::AblateDefender)
    }

    fn attacker_learns(self) -> bool {
        matches!(self, Mode::CoTrain | Mode::AblateAttacker)
    }
}

/// Uniform over the six defender actions, energy-blind.
pub fn random_defender_policy(rng: &mut impl Rng) -> DefenderAction {
    DEFENDER_ACTIONS[rng.gen_range(0..DEFENDER_ACTIONS.len())]
}

/// Uniform spawn coin and uniform unit fields.
pub fn random_attacker_policy(rng: &mut impl Rng, lanes: usize) -> AttackerAction {
    random_attacker_policy_with_prob(rng, lanes, 0.5)
}

/// One row of episodes.csv.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: u64,
    pub seed: u64,
    pub length: usize,
    pub outcome: String,
    pub kills: u32,
    pub spreading: usize,
    pub focusing: usize,
    pub flanking: usize,
    pub tandem: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpdateRow {
    pub update: u64,
    pub side: String,
    #[serde(flatten)]
    pub stats: UpdateStats,
}

/// Final artifact of a run, also written to summary.json.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: String,
    pub episodes: u64,
    pub wall_clock_seconds: f64,
    pub avg_episode_length: f64,
    pub attacker_win_rate: f64,
    pub truncation_rate: f64,
    /// Per-episode lengths in completion order.
    pub episode_lengths: Vec<usize>,
    pub strategies: StatsReport,
    pub updates: u64,
    pub config: ExperimentConfig,
}

fn outcome_name(t: Terminal) -> &'static str {
    match t {
        Terminal::AttackerWinBreach => "attacker_win_breach",
        Terminal::AttackerWinDefenderDown => "attacker_win_defender_down",
        Terminal::Truncated => "truncated",
    }
}

fn write_episodes_csv(path: &Path, rows: &[EpisodeRow]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "episode,seed,length,outcome,kills,spreading,focusing,flanking,tandem"
    )?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            r.episode, r.seed, r.length, r.outcome, r.kills, r.spreading, r.focusing, r.flanking,
            r.tandem
        )?;
    }
    Ok(())
}

fn write_updates_csv(path: &Path, rows: &[UpdateRow]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "update,side,policy_loss,value_loss,entropy,clip_fraction,approx_kl,minibatches"
    )?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.update,
            r.side,
            r.stats.policy_loss,
            r.stats.value_loss,
            r.stats.entropy,
            r.stats.clip_fraction,
            r.stats.approx_kl,
            r.stats.minibatches
        )?;
    }
    Ok(())
}

/// Shared episode bookkeeping across all modes.
struct Recorder<'a> {
    cfg: &'a ExperimentConfig,
    rows: Vec<EpisodeRow>,
    counts: Vec<EpisodeCounts>,
    lengths: Vec<usize>,
    wins: u64,
    truncations: u64,
    kills_total: u64,
    trace_dir: PathBuf,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a ExperimentConfig, out_dir: &Path) -> Result<Self> {
        let trace_dir = out_dir.join("traces");
        std::fs::create_dir_all(&trace_dir)?;
        Ok(Self {
            cfg,
            rows: Vec::new(),
            counts: Vec::new(),
            lengths: Vec::new(),
            wins: 0,
            truncations: 0,
            kills_total: 0,
            trace_dir,
        })
    }

    fn done(&self) -> bool {
        self.rows.len() as u64 >= self.cfg.episodes
    }

    fn record(&mut self, trace: &EpisodeTrace) -> Result<()> {
        if self.done() {
            return Ok(());
        }
        let episode = self.rows.len() as u64;
        let counts = episode_counts(trace);
        let outcome = trace.outcome().ok_or_else(|| {
            Error::Format(format!("episode {episode} trace has no terminal record"))
        })?;
        match outcome {
            Terminal::Truncated => self.truncations += 1,
            _ => self.wins += 1,
        }
        let kills: u32 = trace.records.iter().map(|r| r.kills).sum();
        self.kills_total += u64::from(kills);
        if episode % self.cfg.trace_every == 0 {
            write_trace(&self.trace_dir.join(format!("ep_{episode}.log")), trace)?;
        }
        self.rows.push(EpisodeRow {
            episode,
            seed: trace.header.seed,
            length: trace.len(),
            outcome: outcome_name(outcome).to_string(),
            kills,
            spreading: counts.spreading,
            focusing: counts.focusing,
            flanking: counts.flanking,
            tandem: counts.tandem,
        });
        self.lengths.push(trace.len());
        self.counts.push(counts);
        Ok(())
    }
}

fn save_side(
    dir: &Path,
    side: &str,
    episode: u64,
    learner: Option<&Learner>,
) -> Result<()> {
    if let Some(l) = learner {
        save_checkpoint(&l.policy, &dir.join(format!("{side}_{episode}.bin")))?;
    }
    Ok(())
}

/// Runs one experiment mode to its episode budget and writes all artifacts
/// (traces, episodes.csv, updates.csv for learning modes, checkpoints, and
/// summary.json) under `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, mode: Mode) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let out_dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&out_dir)?;
    let ckpt_dir = out_dir.join("checkpoints");
    let learning = mode.defender_learns() || mode.attacker_learns();
    if learning {
        std::fs::create_dir_all(&ckpt_dir)?;
    }

    // Separate streams for weight init and minibatch shuffling so episode
    // play (seeded per episode) is unaffected by learner count.
    let mut init_rng = ChaCha8Rng::seed_from_u64(episode_seed(cfg.master_seed, u64::MAX));
    let mut update_rng = ChaCha8Rng::seed_from_u64(episode_seed(cfg.master_seed, u64::MAX - 1));
    let mut defender = mode
        .defender_learns()
        .then(|| Learner::defender(cfg.ppo.learning_rate, &mut init_rng));
    let mut attacker = mode
        .attacker_learns()
        .then(|| Learner::attacker(cfg.rules.grid.lanes, cfg.ppo.learning_rate, &mut init_rng));

    let mut arena = Arena::new(cfg.rules.clone(), cfg.rewards.clone(), cfg.master_seed)?;
    let mut recorder = Recorder::new(cfg, &out_dir)?;
    let mut updates: Vec<UpdateRow> = Vec::new();
    let mut next_ckpt = cfg.checkpoint_every;

    while !recorder.done() {
        let stop = if learning {
            StopRule::Transitions(cfg.ppo.horizon)
        } else {
            StopRule::Episodes(cfg.episodes - recorder.rows.len() as u64)
        };
        let out = {
            let mut def_ctl = match defender.as_ref() {
                Some(l) => DefenderCtl::Learned(l),
                None => DefenderCtl::Random,
            };
            let mut atk_ctl = match attacker.as_ref() {
                Some(l) => AttackerCtl::Learned(l),
                None => AttackerCtl::Random {
                    spawn_prob: cfg.random_spawn_prob,
                },
            };
            arena.collect(&mut def_ctl, &mut atk_ctl, stop)?
        };
        for trace in &out.completed {
            recorder.record(trace)?;
        }

        let apply = |learner: &mut Learner,
                         buffer: Option<&RolloutBuffer>,
                         side: &str,
                         updates: &mut Vec<UpdateRow>,
                         rng: &mut ChaCha8Rng|
         -> Result<()> {
            let buffer = buffer.expect("learning side always has a buffer");
            let stats = ppo_update(learner, buffer, &cfg.ppo, rng).map_err(|e| {
                Error::Training(format!(
                    "{side} update {} after {} episodes: {e}",
                    updates.len(),
                    recorder_len_hint(buffer)
                ))
            })?;
            updates.push(UpdateRow {
                update: updates.len() as u64,
                side: side.to_string(),
                stats,
            });
            Ok(())
        };
        if let Some(l) = defender.as_mut() {
            apply(l, out.defender_buffer.as_ref(), "defender", &mut updates, &mut update_rng)?;
        }
        if let Some(l) = attacker.as_mut() {
            apply(l, out.attacker_buffer.as_ref(), "attacker", &mut updates, &mut update_rng)?;
        }

        if learning && cfg.checkpoint_every > 0 {
            while next_ckpt <= recorder.rows.len() as u64 {
                save_side(&ckpt_dir, "defender", next_ckpt, defender.as_ref())?;
                save_side(&ckpt_dir, "attacker", next_ckpt, attacker.as_ref())?;
                next_ckpt += cfg.checkpoint_every;
            }
        }
    }

    if learning {
        let final_ep = recorder.rows.len() as u64;
        save_side(&ckpt_dir, "defender", final_ep, defender.as_ref())?;
        save_side(&ckpt_dir, "attacker", final_ep, attacker.as_ref())?;
    }

    write_episodes_csv(&out_dir.join("episodes.csv"), &recorder.rows)?;
    if learning {
        write_updates_csv(&out_dir.join("updates.csv"), &updates)?;
    }

    let strategies = aggregate_counts(&recorder.counts)?;
    let n = recorder.rows.len() as f64;
    let summary = RunSummary {
        mode: mode.name().to_string(),
        episodes: recorder.rows.len() as u64,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        avg_episode_length: recorder.lengths.iter().sum::<usize>() as f64 / n,
        attacker_win_rate: recorder.wins as f64 / n,
        truncation_rate: recorder.truncations as f64 / n,
        episode_lengths: recorder.lengths.clone(),
        strategies,
        updates: updates.len() as u64,
        config: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(out_dir.join("summary.json"), json)?;
    Ok(summary)
}

fn recorder_len_hint(buffer: &RolloutBuffer) -> usize {
    buffer.segments.len()
}

/// Which side a policy checkpoint belongs to, inferred from its head shape.
pub fn checkpoint_side(cfg: &ExperimentConfig, heads: &[usize]) -> Result<&'static str> {
    if heads == DEFENDER_HEAD_SIZES {
        Ok("defender")
    } else if heads == attacker_head_sizes(cfg.rules.grid.lanes).as_slice() {
        Ok("attacker")
    } else {
        Err(Error::Format(format!(
            "checkpoint head shape {heads:?} matches neither side"
        )))
    }
}

/// Evaluates a saved policy checkpoint against the random opponent for
/// `cfg.episodes` episodes, writing the usual run artifacts.
pub fn run_eval(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let net = load_checkpoint(checkpoint)?;
    let side = checkpoint_side(cfg, &net.spec.heads)?;
    std::fs::create_dir_all(&cfg.out_dir)?;

    // Wrap the frozen policy in a learner shell: the value net is unused
    // during pure evaluation but keeps the rollout path uniform.
    let mut init_rng = ChaCha8Rng::seed_from_u64(episode_seed(cfg.master_seed, u64::MAX));
    let mut shell = if side == "defender" {
        Learner::defender(cfg.ppo.learning_rate, &mut init_rng)
    } else {
        Learner::attacker(cfg.rules.grid.lanes, cfg.ppo.learning_rate, &mut init_rng)
    };
    shell.policy = net;

    let mut arena = Arena::new(cfg.rules.clone(), cfg.rewards.clone(), cfg.master_seed)?;
    let mut recorder = Recorder::new(cfg, &cfg.out_dir)?;
    while !recorder.done() {
        let remaining = cfg.episodes - recorder.rows.len() as u64;
        let out = {
            let mut def_ctl = if side == "defender" {
                DefenderCtl::Learned(&shell)
            } else {
                DefenderCtl::Random
            };
            let mut atk_ctl = if side == "attacker" {
                AttackerCtl::Learned(&shell)
            } else {
                AttackerCtl::Random {
                    spawn_prob: cfg.random_spawn_prob,
                }
            };
            arena.collect(&mut def_ctl, &mut atk_ctl, StopRule::Episodes(remaining))?
        };
        for trace in &out.completed {
            recorder.record(trace)?;
        }
    }
    write_episodes_csv(&cfg.out_dir.join("episodes.csv"), &recorder.rows)?;

    let strategies = aggregate_counts(&recorder.counts)?;
    let n = recorder.rows.len() as f64;
    let summary = RunSummary {
        mode: format!("eval_{side}"),
        episodes: recorder.rows.len() as u64,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        avg_episode_length: recorder.lengths.iter().sum::<usize>() as f64 / n,
        attacker_win_rate: recorder.wins as f64 / n,
        truncation_rate: recorder.truncations as f64 / n,
        episode_lengths: recorder.lengths.clone(),
        strategies,
        updates: 0,
        config: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(cfg.out_dir.join("summary.json"), json)?;
    Ok(summary)
}

/// Result of offline trace analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub stats: StatsReport,
    /// Files that could not be parsed and were skipped.
    pub skipped: usize,
}

/// Aggregates detector statistics over every readable trace in a directory.
/// Corrupt or unreadable files are skipped and counted, not fatal.
pub fn analyze(trace_dir: &Path) -> Result<AnalysisReport> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(trace_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "log")
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("ep_"))
        })
        .collect();
    entries.sort();
    let mut counts = Vec::new();
    let mut lengths = Vec::new();
    let mut skipped = 0usize;
    for path in &entries {
        match read_trace(path) {
            Ok(trace) => {
                counts.push(episode_counts(&trace));
                lengths.push(trace.len());
            }
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", path.display());
                skipped += 1;
            }
        }
    }
    let stats = aggregate_counts(&counts)?;
    Ok(AnalysisReport { stats, skipped })
}
