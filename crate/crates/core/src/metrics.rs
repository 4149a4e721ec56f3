//! Episode traces, the four emergent-strategy detectors, and the
//! aggregation that produces strategy-frequency tables.
//!
//! Detectors are pure functions of a finished trace. "Uses" are maximal
//! qualifying runs (spreading, focusing), greedily matched spawn pairs
//! (flanking), or qualifying ticks (tandem).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{DefenderAction, Rules, Terminal, UnitSpec};
use crate::error::{Error, Result};

/// Everything observable about one tick, recorded after the step resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u32,
    pub defender_lanes: [usize; 4],
    pub defender_health: [i32; 4],
    pub defender_energy: [i32; 4],
    pub actions: [DefenderAction; 4],
    /// The unit actually created this tick, if any.
    pub spawn: Option<UnitSpec>,
    pub spawn_failed: bool,
    pub kills: u32,
    pub terminal: Option<Terminal>,
}

/// Header of a trace file: enough to replay or audit the episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub seed: u64,
    pub rules: Rules,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub records: Vec<TickRecord>,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn outcome(&self) -> Option<Terminal> {
        self.records.last().and_then(|r| r.terminal)
    }
}

/// Accumulates tick records for the episode in progress.
#[derive(Debug, Clone)]
pub struct TraceBuilder {
    header: TraceHeader,
    records: Vec<TickRecord>,
}

impl TraceBuilder {
    pub fn new(rules: Rules, seed: u64) -> Self {
        Self {
            header: TraceHeader { seed, rules },
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: TickRecord) {
        self.records.push(record);
    }

    pub fn finish(self) -> EpisodeTrace {
        EpisodeTrace {
            header: self.header,
            records: self.records,
        }
    }
}

fn lanes_pairwise_distinct(lanes: &[usize; 4]) -> bool {
    for i in 0..4 {
        for j in (i + 1)..4 {
            if lanes[i] == lanes[j] {
                return false;
            }
        }
    }
    true
}

fn some_lane_holds_three(lanes: &[usize; 4]) -> bool {
    for i in 0..4 {
        let count = lanes.iter().filter(|&&l| l == lanes[i]).count();
        if count >= 3 {
            return true;
        }
    }
    false
}

/// Counts maximal runs of at least `min_len` consecutive ticks satisfying
/// the predicate.
fn count_runs(trace: &EpisodeTrace, min_len: usize, pred: impl Fn(&TickRecord) -> bool) -> usize {
    let mut events = 0;
    let mut run = 0;
    for record in &trace.records {
        if pred(record) {
            run += 1;
        } else {
            if run >= min_len {
                events += 1;
            }
            run = 0;
        }
    }
    if run >= min_len {
        events += 1;
    }
    events
}

/// Cooperative spreading: all four defenders in pairwise-distinct lanes for
/// at least 5 consecutive ticks; each maximal run counts once.
pub fn detect_spreading(trace: &EpisodeTrace) -> usize {
    count_runs(trace, 5, |r| lanes_pairwise_distinct(&r.defender_lanes))
}

/// Cooperative focusing: at least three defenders share a lane for at least
/// 2 consecutive ticks.
pub fn detect_focusing(trace: &EpisodeTrace) -> usize {
    count_runs(trace, 2, |r| some_lane_holds_three(&r.defender_lanes))
}

/// Flanking: a far-left spawn (lane 0 or 1) paired with a far-right spawn
/// (lane 8 or 9) at most one tick apart. Each left spawn pairs greedily
/// with the earliest unpaired right spawn in its window.
pub fn detect_flanking(trace: &EpisodeTrace) -> usize {
    let lanes = trace.header.rules.grid.lanes;
    if lanes < 4 {
        return 0;
    }
    let mut lefts: Vec<i64> = Vec::new();
    let mut rights: Vec<i64> = Vec::new();
    for r in &trace.records {
        if let Some(spec) = &r.spawn {
            if spec.lane <= 1 {
                lefts.push(i64::from(r.tick));
            } else if spec.lane >= lanes - 2 {
                rights.push(i64::from(r.tick));
            }
        }
    }
    let mut used = vec![false; rights.len()];
    let mut pairs = 0;
    for &tl in &lefts {
        for (i, &tr) in rights.iter().enumerate() {
            if !used[i] && (tl - tr).abs() <= 1 {
                used[i] = true;
                pairs += 1;
                break;
            }
        }
    }
    pairs
}

/// Tandem: a spawn into a lane that also received a spawn on the previous
/// tick. Counts qualifying ticks.
pub fn detect_tandem(trace: &EpisodeTrace) -> usize {
    let mut prev: Option<(u32, usize)> = None;
    let mut events = 0;
    for r in &trace.records {
        if let Some(spec) = &r.spawn {
            if let Some((pt, pl)) = prev {
                if pl == spec.lane && r.tick == pt + 1 {
                    events += 1;
                }
            }
            prev = Some((r.tick, spec.lane));
        }
    }
    events
}

/// Detector outputs for one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeCounts {
    pub length: usize,
    pub spreading: usize,
    pub focusing: usize,
    pub flanking: usize,
    pub tandem: usize,
}

pub fn episode_counts(trace: &EpisodeTrace) -> EpisodeCounts {
    EpisodeCounts {
        length: trace.len(),
        spreading: detect_spreading(trace),
        focusing: detect_focusing(trace),
        flanking: detect_flanking(trace),
        tandem: detect_tandem(trace),
    }
}

/// Per-strategy aggregation across a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub avg_uses_per_episode: f64,
    pub usage_rate: f64,
}

/// Strategy-frequency table for one batch of episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub episodes: usize,
    pub avg_episode_length: f64,
    pub spreading: StrategyStats,
    pub focusing: StrategyStats,
    pub flanking: StrategyStats,
    pub tandem: StrategyStats,
}

fn strategy_stats(counts: &[EpisodeCounts], get: impl Fn(&EpisodeCounts) -> usize) -> StrategyStats {
    let n = counts.len() as f64;
    let total: usize = counts.iter().map(&get).sum();
    let hits = counts.iter().filter(|c| get(c) >= 1).count();
    StrategyStats {
        avg_uses_per_episode: total as f64 / n,
        usage_rate: hits as f64 / n,
    }
}

/// Aggregates detector counts into a report, in the published row order:
/// spreading, focusing, flanking, tandem.
pub fn aggregate_counts(counts: &[EpisodeCounts]) -> Result<StatsReport> {
    if counts.is_empty() {
        return Err(Error::Usage("aggregate requires at least one episode".into()));
    }
    let n = counts.len() as f64;
    Ok(StatsReport {
        episodes: counts.len(),
        avg_episode_length: counts.iter().map(|c| c.length as f64).sum::<f64>() / n,
        spreading: strategy_stats(counts, |c| c.spreading),
        focusing: strategy_stats(counts, |c| c.focusing),
        flanking: strategy_stats(counts, |c| c.flanking),
        tandem: strategy_stats(counts, |c| c.tandem),
    })
}

pub fn aggregate(traces: &[EpisodeTrace]) -> Result<StatsReport> {
    let counts: Vec<EpisodeCounts> = traces.iter().map(episode_counts).collect();
    aggregate_counts(&counts)
}

impl StatsReport {
    /// Formatted strategy-frequency table.
    pub fn table_text(&self) -> String {
        let row = |name: &str, s: &StrategyStats| {
            format!(
                "{name:<28} {:>12.4} {:>11.1}%\n",
                s.avg_uses_per_episode,
                s.usage_rate * 100.0
            )
        };
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {:>12} {:>12}\n",
            "Strategy", "Avg Uses/Ep", "Usage Rate"
        ));
        out.push_str(&row("Cooperative Spreading", &self.spreading));
        out.push_str(&row("Cooperative Focusing", &self.focusing));
        out.push_str(&row("Flanking", &self.flanking));
        out.push_str(&row("Tandem", &self.tandem));
        out.push_str(&format!(
            "Avg. Episode Length (steps): {:.2} over {} episodes\n",
            self.avg_episode_length, self.episodes
        ));
        out
    }

    pub fn csv_text(&self) -> String {
        let mut out = String::from("strategy,avg_uses_per_episode,usage_rate\n");
        for (name, s) in [
            ("spreading", &self.spreading),
            ("focusing", &self.focusing),
            ("flanking", &self.flanking),
            ("tandem", &self.tandem),
        ] {
            out.push_str(&format!("{name},{},{}\n", s.avg_uses_per_episode, s.usage_rate));
        }
        out.push_str(&format!("avg_episode_length,{},\n", self.avg_episode_length));
        out
    }
}

/// Writes a trace as line-delimited JSON: one header line, then one line
/// per tick record, in stable field order.
pub fn write_trace(path: &Path, trace: &EpisodeTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &trace.header)
        .map_err(|e| Error::Format(format!("trace header: {e}")))?;
    w.write_all(b"\n")?;
    for record in &trace.records {
        serde_json::to_writer(&mut w, record)
            .map_err(|e| Error::Format(format!("trace record: {e}")))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<EpisodeTrace> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Format(format!("empty trace file {}", path.display())))??;
    let header: TraceHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::Format(format!("bad trace header in {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TickRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("bad trace record in {}: {e}", path.display())))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Format(format!("trace {} has no records", path.display())));
    }
    Ok(EpisodeTrace { header, records })
}
