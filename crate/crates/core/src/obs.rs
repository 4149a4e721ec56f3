//! Observation encoders for both sides.
//!
//! Defenders see their own block, the other three defenders, and up to 16
//! nearby units — never the attacker's energy. The attacker sees the full
//! game state. All entries are normalized into [0, 1].

use crate::engine::{limits, DamageType, GameState, Role, Rules, UnitInstance};

/// Defender observation width: own block (8) + 3 other defenders (8 each)
/// + 16 unit slots (6 each).
pub const DEFENDER_OBS_LEN: usize = 8 + 3 * 8 + 16 * 6;
/// Attacker observation width: energy block (2) + 4 defenders (8 each)
/// + 16 unit slots (14 each).
pub const ATTACKER_OBS_LEN: usize = 2 + 4 * 8 + 16 * 14;

/// Number of unit slots in both encodings.
pub const UNIT_SLOTS: usize = 16;

fn role_one_hot(role: Role) -> [f64; 4] {
    let mut v = [0.0; 4];
    let idx = match role {
        Role::Mage => 0,
        Role::Healer => 1,
        Role::Tank => 2,
        Role::Sharpshooter => 3,
    };
    v[idx] = 1.0;
    v
}

fn norm(value: i32, max: i32) -> f64 {
    if max <= 0 {
        0.0
    } else {
        f64::from(value) / f64::from(max)
    }
}

fn push_defender_block(out: &mut Vec<f64>, rules: &Rules, state: &GameState, idx: usize) {
    let d = &state.defenders[idx];
    let lane_max = (rules.grid.lanes - 1).max(1) as i32;
    let row_max = (rules.grid.defender_rows - 1).max(1) as i32;
    out.push(norm(d.x as i32, lane_max));
    out.push(norm(d.y as i32, row_max));
    out.push(norm(d.health, rules.defender_max_health));
    out.push(norm(d.energy, rules.defender_max_energy));
    out.extend_from_slice(&role_one_hot(d.role));
}

/// The 16 lowest-y live units (closest threats first), stably ordered by id
/// within the same row.
fn nearest_units(state: &GameState) -> Vec<&UnitInstance> {
    let mut units: Vec<&UnitInstance> = state.units.iter().collect();
    units.sort_by_key(|u| (u.y, u.id));
    units.truncate(UNIT_SLOTS);
    units
}

/// Encodes the private observation of defender `idx`. The attacker's energy
/// is deliberately absent.
pub fn encode_defender_obs(rules: &Rules, state: &GameState, idx: usize) -> Vec<f64> {
    assert!(idx < 4, "defender index out of range");
    let mut out = Vec::with_capacity(DEFENDER_OBS_LEN);
    push_defender_block(&mut out, rules, state, idx);
    for other in 0..4 {
        if other != idx {
            push_defender_block(&mut out, rules, state, other);
        }
    }
    let lane_max = (rules.grid.lanes - 1).max(1) as i32;
    let depth_max = (rules.grid.depth - 1).max(1) as i32;
    let units = nearest_units(state);
    for slot in 0..UNIT_SLOTS {
        match units.get(slot) {
            Some(u) => {
                out.push(1.0);
                out.push(norm(u.spec.lane as i32, lane_max));
                out.push(norm(u.y, depth_max));
                out.push(norm(u.current_health, limits::HEALTH_MAX));
                out.push(norm(u.spec.damage, limits::DAMAGE_MAX));
                out.push(if u.spec.dtype == DamageType::Magic { 1.0 } else { 0.0 });
            }
            None => out.extend_from_slice(&[0.0; 6]),
        }
    }
    debug_assert_eq!(out.len(), DEFENDER_OBS_LEN);
    out
}

/// Encodes the attacker's full-state observation.
pub fn encode_attacker_obs(rules: &Rules, state: &GameState) -> Vec<f64> {
    let mut out = Vec::with_capacity(ATTACKER_OBS_LEN);
    out.push(norm(state.attacker.energy, state.attacker.max_energy));
    out.push(norm(state.attacker.max_energy, 1000));
    for idx in 0..4 {
        push_defender_block(&mut out, rules, state, idx);
    }
    let lane_max = (rules.grid.lanes - 1).max(1) as i32;
    let depth_max = (rules.grid.depth - 1).max(1) as i32;
    let units = nearest_units(state);
    for slot in 0..UNIT_SLOTS {
        match units.get(slot) {
            Some(u) => {
                out.push(1.0);
                out.push(norm(u.spec.lane as i32, lane_max));
                out.push(norm(u.y, depth_max));
                out.push(norm(u.current_health, limits::HEALTH_MAX));
                out.push(norm(u.spec.damage, limits::DAMAGE_MAX));
                out.push(norm(u.spec.speed, limits::SPEED_MAX));
                out.push(norm(u.spec.range, limits::RANGE_MAX));
                out.push(norm(u.spec.regen, limits::REGEN_MAX));
                out.push(norm(u.spec.leech, limits::LEECH_MAX));
                out.push(norm(u.spec.phys_def, limits::DEF_MAX));
                out.push(norm(u.spec.magic_def, limits::DEF_MAX));
                out.push(norm(u.spec.phys_pen, limits::PEN_MAX));
                out.push(norm(u.spec.magic_pen, limits::PEN_MAX));
                out.push(if u.spec.dtype == DamageType::Magic { 1.0 } else { 0.0 });
            }
            None => out.extend_from_slice(&[0.0; 14]),
        }
    }
    debug_assert_eq!(out.len(), ATTACKER_OBS_LEN);
    out
}
