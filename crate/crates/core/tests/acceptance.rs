//! Acceptance suite: one test per release criterion. Each test prints a
//! single `ACCEPTANCE <n> ... PASS/FAIL` line with the measured numbers
//! before asserting, so a red criterion still reports its evidence.

use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lanewar_core::config::ExperimentConfig;
use lanewar_core::engine::{
    limits, spawn_cost, spawn_cost_raw, Game, GridConfig, Rules, UnitSpec,
};
use lanewar_core::experiment::{
    random_attacker_policy, random_defender_policy, run_experiment, Mode, RunSummary,
};
use lanewar_core::engine::DefenderAction;
use lanewar_core::metrics::{
    detect_flanking, detect_focusing, detect_spreading, detect_tandem, EpisodeTrace, TickRecord,
    TraceHeader,
};
use lanewar_core::net::{
    attacker_head_sizes, grad_check, sample_action, HeadMask, NetSpec,
    Network, DEFENDER_HEAD_SIZES,
};
use lanewar_core::obs::{ATTACKER_OBS_LEN, DEFENDER_OBS_LEN};
use lanewar_core::ppo::{policy_loss_and_grad, Hyperparams};

fn verdict(n: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {n} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

// ---------------------------------------------------------------------------
// Criterion 1: engine invariants over 10,000 both-random ticks, 20 seeds.
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_engine_invariants() {
    let start = std::time::Instant::now();
    let rules = Rules::default();
    let mut violations = 0usize;
    let mut ticks_total = 0usize;

    for seed in 0..20u64 {
        let mut game = Game::new(rules.clone(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut last_y: std::collections::HashMap<u64, i32> = Default::default();
        for _ in 0..500 {
            let atk_energy_before = game.state.attacker.energy;
            let atk_cap_before = game.state.attacker.max_energy;
            let def_energy_before: [i32; 4] =
                std::array::from_fn(|i| game.state.defenders[i].energy);
            let units_before = game.state.next_unit_id;

            let defs = std::array::from_fn(|_| random_defender_policy(&mut rng));
            let atk = random_attacker_policy(&mut rng, rules.grid.lanes);
            let outcome = game.step(defs, &atk).unwrap();
            ticks_total += 1;

            // Attacker energy conservation: regen to cap, then exact spawn
            // deduction when a unit was created.
            let spawned = game.state.next_unit_id > units_before;
            let mut expected = (atk_energy_before + rules.attacker_energy_regen)
                .min(atk_cap_before);
            if spawned {
                expected -= spawn_cost(&atk.spec) as i32;
            }
            if game.state.attacker.energy != expected {
                violations += 1;
            }
            if spawned && outcome.spawn_failed {
                violations += 1;
            }

            // Defender energy: regen to cap minus one legal action cost.
            for i in 0..4 {
                let with_regen = (def_energy_before[i] + rules.defender_energy_regen)
                    .min(rules.defender_max_energy);
                let delta = with_regen - game.state.defenders[i].energy;
                let legal = [0, rules.move_cost, rules.shoot_cost, rules.heal_cost,
                    rules.special_cost];
                if !legal.contains(&delta) || game.state.defenders[i].energy < 0 {
                    violations += 1;
                }
            }

            // Bounds.
            for d in &game.state.defenders {
                if d.x >= rules.grid.lanes
                    || d.health > rules.defender_max_health
                    || d.energy > rules.defender_max_energy
                {
                    violations += 1;
                }
            }
            if game.state.attacker.energy > game.state.attacker.max_energy {
                violations += 1;
            }
            for u in &game.state.units {
                if u.y < 0
                    || u.y >= rules.grid.depth as i32
                    || u.current_health < 1
                    || u.current_health > u.spec.health
                {
                    violations += 1;
                }
                // Monotone advance: y never increases for a live unit.
                if let Some(prev) = last_y.get(&u.id) {
                    if u.y > *prev {
                        violations += 1;
                    }
                }
                last_y.insert(u.id, u.y);
            }

            if outcome.terminal.is_some() {
                game = Game::new(rules.clone(), seed * 31 + 7).unwrap();
                last_y.clear();
            }
        }
    }

    // Determinism: identical seed and action stream, identical states.
    for seed in [3u64, 17] {
        let run = |seed: u64| {
            let mut game = Game::new(rules.clone(), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            let mut trace = Vec::new();
            for _ in 0..300 {
                let defs = std::array::from_fn(|_| random_defender_policy(&mut rng));
                let atk = random_attacker_policy(&mut rng, rules.grid.lanes);
                if game.step(defs, &atk).unwrap().terminal.is_some() {
                    break;
                }
                trace.push(game.state.clone());
            }
            trace
        };
        if run(seed) != run(seed) {
            violations += 1;
        }
    }

    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "engine invariants",
        violations == 0 && ticks_total == 10_000 && secs < 10.0,
        &format!("{ticks_total} ticks, {violations} violations, {secs:.2}s"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: cost-function properties.
// ---------------------------------------------------------------------------

fn field_ranges() -> [(usize, i32, i32); 11] {
    [
        (0, 1, limits::HEALTH_MAX),
        (1, 1, limits::DAMAGE_MAX),
        (2, 1, limits::SPEED_MAX),
        (3, 1, limits::RANGE_MAX),
        (4, 0, limits::REGEN_MAX),
        (5, 0, limits::LEECH_MAX),
        (6, 0, limits::DEF_MAX),
        (7, 0, limits::DEF_MAX),
        (8, 0, limits::PEN_MAX),
        (9, 0, limits::PEN_MAX),
        (10, 0, 0), // lane: cost-neutral, excluded from monotonicity
    ]
}

fn set_field(spec: &mut UnitSpec, field: usize, v: i32) {
    match field {
        0 => spec.health = v,
        1 => spec.damage = v,
        2 => spec.speed = v,
        3 => spec.range = v,
        4 => spec.regen = v,
        5 => spec.leech = v,
        6 => spec.phys_def = v,
        7 => spec.magic_def = v,
        8 => spec.phys_pen = v,
        9 => spec.magic_pen = v,
        _ => unreachable!(),
    }
}

fn get_field(spec: &UnitSpec, field: usize) -> i32 {
    match field {
        0 => spec.health,
        1 => spec.damage,
        2 => spec.speed,
        3 => spec.range,
        4 => spec.regen,
        5 => spec.leech,
        6 => spec.phys_def,
        7 => spec.magic_def,
        8 => spec.phys_pen,
        9 => spec.magic_pen,
        _ => unreachable!(),
    }
}

fn random_spec(rng: &mut ChaCha8Rng) -> UnitSpec {
    let mut spec = UnitSpec::minimal(0);
    for (field, lo, hi) in field_ranges().into_iter().take(10) {
        set_field(&mut spec, field, rng.gen_range(lo..=hi));
    }
    spec
}

#[test]
fn criterion_2_cost_properties() {
    let start = std::time::Instant::now();
    let mut failures = Vec::new();

    // Pinned hand-derived values.
    let minimal = UnitSpec::minimal(0);
    if spawn_cost(&minimal) != 11 {
        failures.push(format!("minimal cost {}", spawn_cost(&minimal)));
    }
    let mut mid = UnitSpec::minimal(0);
    mid.health = 5;
    mid.speed = 3;
    if spawn_cost(&mid) != 31 {
        failures.push(format!("mid cost {}", spawn_cost(&mid)));
    }
    if spawn_cost(&UnitSpec::maximal(0)) != 120_499 {
        failures.push(format!("maximal cost {}", spawn_cost(&UnitSpec::maximal(0))));
    }

    // Exhaustive single-field monotonicity on the raw product, from both a
    // minimal and a maximal base.
    for base in [UnitSpec::minimal(0), UnitSpec::maximal(0)] {
        for (field, lo, hi) in field_ranges().into_iter().take(10) {
            let mut prev = None;
            for v in lo..=hi {
                let mut s = base;
                set_field(&mut s, field, v);
                let c = spawn_cost_raw(&s);
                if let Some(p) = prev {
                    if c <= p {
                        failures.push(format!("field {field} not increasing at {v}"));
                    }
                }
                prev = Some(c);
            }
        }
    }

    // Superlinearity: raising two distinct fields together costs strictly
    // more than the sum of raising each alone (supermodular interaction).
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let base = random_spec(&mut rng);
        let mut fields: Vec<(usize, i32, i32)> = field_ranges()
            .into_iter()
            .take(10)
            .filter(|(f, _, hi)| get_field(&base, *f) < *hi)
            .collect();
        if fields.len() < 2 {
            continue;
        }
        let i = rng.gen_range(0..fields.len());
        let (fa, _, _) = fields.remove(i);
        let j = rng.gen_range(0..fields.len());
        let (fb, _, _) = fields[j];
        let mut a = base;
        set_field(&mut a, fa, get_field(&base, fa) + 1);
        let mut b = base;
        set_field(&mut b, fb, get_field(&base, fb) + 1);
        let mut ab = a;
        set_field(&mut ab, fb, get_field(&base, fb) + 1);
        let lhs = spawn_cost_raw(&ab) + spawn_cost_raw(&base);
        let rhs = spawn_cost_raw(&a) + spawn_cost_raw(&b);
        if lhs <= rhs {
            failures.push(format!("superlinearity violated for fields {fa},{fb}"));
        }
    }

    let secs = start.elapsed().as_secs_f64();
    verdict(
        2,
        "cost-function properties",
        failures.is_empty() && secs < 1.0,
        &format!("{} failures, {secs:.3}s: {:?}", failures.len(), failures.first()),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: detector oracle equivalence.
// ---------------------------------------------------------------------------

fn synth(lanes_per_tick: &[[usize; 4]], spawns: &[(u32, usize)]) -> EpisodeTrace {
    let records = lanes_per_tick
        .iter()
        .enumerate()
        .map(|(t, lanes)| TickRecord {
            tick: t as u32,
            defender_lanes: *lanes,
            defender_health: [100; 4],
            defender_energy: [1000; 4],
            actions: [DefenderAction::Noop; 4],
            spawn: spawns
                .iter()
                .find(|(st, _)| *st == t as u32)
                .map(|(_, lane)| UnitSpec::minimal(*lane)),
            spawn_failed: false,
            kills: 0,
            terminal: None,
        })
        .collect();
    EpisodeTrace {
        header: TraceHeader {
            seed: 0,
            rules: Rules::default(),
        },
        records,
    }
}

fn brute_runs(qualifying: &[bool], min_len: usize) -> usize {
    let mut count = 0;
    let mut run = 0;
    for &q in qualifying {
        if q {
            run += 1;
        } else {
            if run >= min_len {
                count += 1;
            }
            run = 0;
        }
    }
    if run >= min_len {
        count += 1;
    }
    count
}

fn brute_spreading(trace: &EpisodeTrace) -> usize {
    let q: Vec<bool> = trace
        .records
        .iter()
        .map(|r| {
            let l = r.defender_lanes;
            l[0] != l[1] && l[0] != l[2] && l[0] != l[3] && l[1] != l[2] && l[1] != l[3]
                && l[2] != l[3]
        })
        .collect();
    brute_runs(&q, 5)
}

fn brute_focusing(trace: &EpisodeTrace) -> usize {
    let q: Vec<bool> = trace
        .records
        .iter()
        .map(|r| {
            (0..10).any(|lane| r.defender_lanes.iter().filter(|&&x| x == lane).count() >= 3)
        })
        .collect();
    brute_runs(&q, 2)
}

fn brute_flanking(trace: &EpisodeTrace) -> usize {
    let spawns: Vec<(u32, usize)> = trace
        .records
        .iter()
        .filter_map(|r| r.spawn.as_ref().map(|s| (r.tick, s.lane)))
        .collect();
    let lefts: Vec<u32> = spawns.iter().filter(|(_, l)| *l <= 1).map(|(t, _)| *t).collect();
    let mut rights: Vec<(u32, bool)> = spawns
        .iter()
        .filter(|(_, l)| *l >= 8)
        .map(|(t, _)| (*t, false))
        .collect();
    let mut pairs = 0;
    for lt in lefts {
        if let Some(slot) = rights
            .iter_mut()
            .find(|(rt, used)| !used && lt.abs_diff(*rt) <= 1)
        {
            slot.1 = true;
            pairs += 1;
        }
    }
    pairs
}

fn brute_tandem(trace: &EpisodeTrace) -> usize {
    let mut by_tick = std::collections::HashMap::new();
    for r in &trace.records {
        if let Some(s) = &r.spawn {
            by_tick.insert(r.tick, s.lane);
        }
    }
    by_tick
        .iter()
        .filter(|(t, lane)| **t > 0 && by_tick.get(&(**t - 1)) == Some(lane))
        .count()
}

#[test]
fn criterion_3_detector_oracles() {
    let start = std::time::Instant::now();
    let mut failures = Vec::new();

    // The 12 hand-built examples (single-spawn-per-tick adaptation for the
    // simultaneous-spawn flanking example).
    let cases: Vec<(&str, EpisodeTrace, usize, fn(&EpisodeTrace) -> usize)> = vec![
        ("spreading fixed", synth(&[[1, 3, 5, 7]; 20], &[]), 1, detect_spreading as fn(&EpisodeTrace) -> usize),
        ("spreading shared", synth(&[[1, 1, 5, 7]; 20], &[]), 0, detect_spreading),
        ("spreading split", {
            let mut lanes = vec![[1usize, 3, 5, 7]; 5];
            lanes.push([1, 1, 5, 7]);
            lanes.extend(vec![[1, 3, 5, 7]; 5]);
            synth(&lanes, &[])
        }, 2, detect_spreading),
        ("focusing 2 ticks", synth(&[[4, 4, 4, 7]; 2], &[]), 1, detect_focusing),
        ("focusing 1 tick", {
            let mut lanes = vec![[4usize, 4, 4, 7]];
            lanes.push([1, 2, 3, 7]);
            synth(&lanes, &[])
        }, 0, detect_focusing),
        ("focusing all four", synth(&[[2, 2, 2, 2]; 10], &[]), 1, detect_focusing),
        ("flanking adjacent", synth(&[[0, 2, 4, 6]; 10], &[(3, 0), (4, 9)]), 1, detect_flanking),
        ("flanking far apart", synth(&[[0, 2, 4, 6]; 12], &[(3, 0), (8, 9)]), 0, detect_flanking),
        ("flanking greedy", synth(&[[0, 2, 4, 6]; 10], &[(3, 0), (4, 8), (5, 1)]), 1, detect_flanking),
        ("tandem adjacent", synth(&[[0, 2, 4, 6]; 10], &[(5, 2), (6, 2)]), 1, detect_tandem),
        ("tandem gap", synth(&[[0, 2, 4, 6]; 10], &[(5, 2), (7, 2)]), 0, detect_tandem),
        ("tandem chain", synth(&[[0, 2, 4, 6]; 10], &[(5, 2), (6, 2), (7, 2)]), 2, detect_tandem),
    ];
    for (name, trace, expected, detector) in &cases {
        let got = detector(trace);
        if got != *expected {
            failures.push(format!("{name}: got {got}, want {expected}"));
        }
    }

    // 1,000 random traces against the brute-force re-implementations.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let len = rng.gen_range(1..=300usize);
        let mut lanes = Vec::with_capacity(len);
        let mut pos = [1usize, 3, 5, 7];
        let mut spawns = Vec::new();
        for t in 0..len {
            for p in pos.iter_mut() {
                match rng.gen_range(0..3) {
                    0 => *p = p.saturating_sub(1),
                    1 => *p = (*p + 1).min(9),
                    _ => {}
                }
            }
            lanes.push(pos);
            if rng.gen_bool(0.4) {
                // Bias toward the flanks so flanking pairs actually occur.
                let lane = match rng.gen_range(0..4) {
                    0 => rng.gen_range(0..2),
                    1 => rng.gen_range(8..10),
                    _ => rng.gen_range(0..10),
                };
                spawns.push((t as u32, lane));
            }
        }
        let trace = synth(&lanes, &spawns);
        if detect_spreading(&trace) != brute_spreading(&trace)
            || detect_focusing(&trace) != brute_focusing(&trace)
            || detect_flanking(&trace) != brute_flanking(&trace)
            || detect_tandem(&trace) != brute_tandem(&trace)
        {
            mismatches += 1;
        }
    }
    if mismatches > 0 {
        failures.push(format!("{mismatches} brute-force mismatches"));
    }

    let secs = start.elapsed().as_secs_f64();
    verdict(
        3,
        "detector oracle equivalence",
        failures.is_empty() && secs < 5.0,
        &format!("{} failures, {secs:.2}s: {:?}", failures.len(), failures.first()),
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: gradient correctness.
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_gradient_correctness() {
    let start = std::time::Instant::now();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let shapes = [
        NetSpec::policy(DEFENDER_OBS_LEN, DEFENDER_HEAD_SIZES.to_vec()),
        NetSpec::policy(ATTACKER_OBS_LEN, attacker_head_sizes(10)),
    ];
    for trial in 0..10 {
        let spec = shapes[trial % 2].clone();
        let mask = if trial % 2 == 0 {
            HeadMask::All
        } else {
            HeadMask::SpawnGated
        };
        let mut net = Network::init(spec.clone(), &mut rng);
        let obs: Vec<f64> = (0..spec.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (logits, _) = net.forward(&obs).unwrap();
        let (action, old_lp) = sample_action(&logits, mask, &mut rng);
        let adv = rng.gen_range(-2.0..2.0f64);

        let err = grad_check(
            &mut net,
            |n: &Network| {
                let x = ndarray::Array2::from_shape_vec((1, obs.len()), obs.clone()).unwrap();
                let fwd = n.forward_batch(&x);
                let out = policy_loss_and_grad(
                    &fwd.logits,
                    std::slice::from_ref(&action),
                    &[old_lp + 0.05], // slightly off-policy so the clip path is live
                    &[adv],
                    0.2,
                    5e-4,
                    mask,
                );
                let grads = n.backward_batch(&x, &fwd, &out.dlogits, None);
                (out.total_loss, grads)
            },
            &mut rng,
        );
        worst = worst.max(err);
    }

    // Negative control: corrupt the analytic gradient and require the same
    // check to blow past 1e-2.
    let spec = NetSpec::policy(DEFENDER_OBS_LEN, DEFENDER_HEAD_SIZES.to_vec());
    let mut net = Network::init(spec.clone(), &mut rng);
    let obs: Vec<f64> = (0..spec.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (logits, _) = net.forward(&obs).unwrap();
    let (action, old_lp) = sample_action(&logits, HeadMask::All, &mut rng);
    let corrupted = grad_check(
        &mut net,
        |n: &Network| {
            let x = ndarray::Array2::from_shape_vec((1, obs.len()), obs.clone()).unwrap();
            let fwd = n.forward_batch(&x);
            let out = policy_loss_and_grad(
                &fwd.logits,
                std::slice::from_ref(&action),
                &[old_lp],
                &[1.0],
                0.2,
                5e-4,
                HeadMask::All,
            );
            let mut grads = n.backward_batch(&x, &fwd, &out.dlogits, None);
            grads.trunk[0].w += 0.5;
            (out.total_loss, grads)
        },
        &mut rng,
    );

    let secs = start.elapsed().as_secs_f64();
    verdict(
        4,
        "gradient correctness",
        worst < 1e-4 && corrupted > 1e-2 && secs < 30.0,
        &format!("max rel err {worst:.2e}, corrupted {corrupted:.2e}, {secs:.1}s"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: PPO sanity on a reduced single-lane game.
// ---------------------------------------------------------------------------

fn single_lane_config(seed: u64, out: std::path::PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        rules: Rules {
            grid: GridConfig {
                lanes: 1,
                depth: 10,
                max_ticks: 100,
                ..GridConfig::default()
            },
            attacker_start_energy: 3000,
            attacker_start_max_energy: 6000,
            attacker_energy_regen: 100,
            attacker_cap_growth: 0,
            ..Rules::default()
        },
        episodes: 200,
        master_seed: seed,
        out_dir: out,
        random_spawn_prob: 1.0,
        ppo: Hyperparams {
            horizon: 1024,
            ..Hyperparams::default()
        },
        trace_every: 200, // keep disk churn low; lengths come from the summary
        ..ExperimentConfig::default()
    }
}

#[test]
fn criterion_5_ppo_sanity_single_lane() {
    let start = std::time::Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut successes = 0;
    let mut details = Vec::new();
    for seed in [3u64, 4, 5] {
        let cfg = single_lane_config(seed, tmp.path().join(format!("s{seed}")));
        let summary = run_experiment(&cfg, Mode::AblateDefender).unwrap();
        let last50 = &summary.episode_lengths[150..];
        // Survival-to-cap shows up as a full-length (truncated) episode.
        let survival = last50.iter().filter(|&&l| l >= 100).count() as f64 / 50.0;
        details.push(format!("seed {seed}: {survival:.2}"));
        if survival >= 0.9 {
            successes += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        5,
        "PPO sanity (single lane)",
        successes >= 2 && secs < 300.0,
        &format!("{successes}/3 seeds ≥90% survival [{}], {secs:.0}s", details.join(", ")),
    );
}

// ---------------------------------------------------------------------------
// Shared full-scale runs for criteria 6-9.
// ---------------------------------------------------------------------------

fn run_dir() -> &'static std::path::Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| tempfile::tempdir().unwrap()).path()
}

fn full_cfg(seed: u64, name: &str) -> ExperimentConfig {
    ExperimentConfig {
        master_seed: seed,
        out_dir: run_dir().join(name),
        trace_every: 500,
        checkpoint_every: 0,
        ..ExperimentConfig::default()
    }
}

fn baseline_summary() -> &'static RunSummary {
    static CELL: OnceLock<RunSummary> = OnceLock::new();
    CELL.get_or_init(|| run_experiment(&full_cfg(1, "baseline"), Mode::Baseline).unwrap())
}

fn cotrain_summaries() -> &'static Vec<RunSummary> {
    static CELL: OnceLock<Mutex<()>> = OnceLock::new();
    static RESULT: OnceLock<Vec<RunSummary>> = OnceLock::new();
    let _guard = CELL.get_or_init(|| Mutex::new(())).lock().unwrap();
    RESULT.get_or_init(|| {
        [101u64, 202, 303]
            .iter()
            .map(|&seed| {
                run_experiment(&full_cfg(seed, &format!("cotrain_{seed}")), Mode::CoTrain).unwrap()
            })
            .collect()
    })
}

#[test]
fn criterion_6_baseline_reproduction() {
    let start = std::time::Instant::now();
    let s = baseline_summary();
    let rates = [
        ("spreading", s.strategies.spreading.usage_rate),
        ("focusing", s.strategies.focusing.usage_rate),
        ("flanking", s.strategies.flanking.usage_rate),
        ("tandem", s.strategies.tandem.usage_rate),
    ];
    let rates_ok = rates.iter().all(|(_, r)| *r <= 0.15);
    let pass = s.avg_episode_length < 40.0 && rates_ok && start.elapsed().as_secs_f64() < 120.0;
    verdict(
        6,
        "baseline reproduction",
        pass,
        &format!(
            "avg length {:.1} (<40 required), rates {:?}",
            s.avg_episode_length,
            rates.map(|(n, r)| format!("{n} {:.1}%", r * 100.0))
        ),
    );
}

#[test]
fn criterion_7_coevolution_desk_scale() {
    let start = std::time::Instant::now();
    let base = baseline_summary().avg_episode_length;
    let runs = cotrain_summaries();
    let mut successes = 0;
    let mut details = Vec::new();
    for s in runs.iter() {
        let ratio = s.avg_episode_length / base;
        let ok = ratio >= 2.0
            && s.strategies.tandem.usage_rate >= 0.5
            && s.strategies.flanking.usage_rate >= 0.5
            && s.strategies.spreading.usage_rate >= 0.4
            && s.strategies.focusing.usage_rate >= 0.4;
        details.push(format!(
            "seed {}: ratio {ratio:.2}, tandem {:.0}%, flanking {:.0}%, spreading {:.0}%, focusing {:.0}%",
            s.config.master_seed,
            s.strategies.tandem.usage_rate * 100.0,
            s.strategies.flanking.usage_rate * 100.0,
            s.strategies.spreading.usage_rate * 100.0,
            s.strategies.focusing.usage_rate * 100.0,
        ));
        if ok {
            successes += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        7,
        "co-evolution desk scale",
        successes >= 2 && secs < 3600.0,
        &format!("{successes}/3 seeds [{}], {secs:.0}s", details.join("; ")),
    );
}

#[test]
fn criterion_8_ablation_directionality() {
    let start = std::time::Instant::now();
    let base = baseline_summary().avg_episode_length;
    let aa = run_experiment(&full_cfg(1, "ablate_attacker"), Mode::AblateAttacker).unwrap();
    let ad = run_experiment(&full_cfg(1, "ablate_defender"), Mode::AblateDefender).unwrap();
    let aa_ok = aa.avg_episode_length < base
        && aa.strategies.flanking.usage_rate <= 0.30
        && aa.strategies.tandem.usage_rate <= 0.30;
    let ad_ok = ad.avg_episode_length >= 2.0 * base
        && ad.strategies.spreading.usage_rate <= 0.30
        && ad.strategies.focusing.usage_rate <= 0.30;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        8,
        "ablation directionality",
        aa_ok && ad_ok && secs < 3600.0,
        &format!(
            "baseline {base:.1}; AblateAttacker len {:.1}, flanking {:.1}%, tandem {:.1}%; \
             AblateDefender len {:.1}, spreading {:.1}%, focusing {:.1}%; {secs:.0}s",
            aa.avg_episode_length,
            aa.strategies.flanking.usage_rate * 100.0,
            aa.strategies.tandem.usage_rate * 100.0,
            ad.avg_episode_length,
            ad.strategies.spreading.usage_rate * 100.0,
            ad.strategies.focusing.usage_rate * 100.0,
        ),
    );
}

#[test]
fn criterion_9_survival_curve_shape() {
    let runs = cotrain_summaries();
    let s = &runs[0];
    let n = s.episode_lengths.len() / 10;
    let first: f64 = s.episode_lengths[..n].iter().sum::<usize>() as f64 / n as f64;
    let last: f64 =
        s.episode_lengths[s.episode_lengths.len() - n..].iter().sum::<usize>() as f64 / n as f64;
    verdict(
        9,
        "survival curve shape",
        last >= 1.5 * first,
        &format!("first decile mean {first:.1}, final decile mean {last:.1}"),
    );
}
