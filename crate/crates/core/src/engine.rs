//! Deterministic tick-based game engine: grid, energy economy, unit
//! generation cost, combat resolution, and termination.
//!
//! All state is integer-valued, so trajectories are bit-identical across
//! platforms given the same seed and action sequence.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bounds of the attacker's generative parameter ranges (Table 3 of
/// the unit parameter sheet). Lower bounds are 1 for core stats and 0 for
/// the optional attributes.
pub mod limits {
    pub const HEALTH_MAX: i32 = 15;
    pub const DAMAGE_MAX: i32 = 5;
    pub const SPEED_MAX: i32 = 5;
    pub const RANGE_MAX: i32 = 25;
    pub const REGEN_MAX: i32 = 3;
    pub const LEECH_MAX: i32 = 5;
    pub const DEF_MAX: i32 = 5;
    pub const PEN_MAX: i32 = 5;
}

/// Grid dimensions and the episode truncation cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub lanes: usize,
    pub depth: usize,
    pub defender_rows: usize,
    pub max_ticks: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lanes: 10,
            depth: 30,
            defender_rows: 4,
            max_ticks: 1000,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lanes == 0 {
            return Err(Error::Config("grid must have at least one lane".into()));
        }
        if self.depth == 0 {
            return Err(Error::Config("grid depth must be positive".into()));
        }
        if self.defender_rows == 0 || self.defender_rows > self.depth {
            return Err(Error::Config(format!(
                "defender_rows {} out of range for depth {}",
                self.defender_rows, self.depth
            )));
        }
        if self.max_ticks == 0 {
            return Err(Error::Config("max_ticks must be at least 1".into()));
        }
        Ok(())
    }
}

/// The four defender roles, in fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Mage,
    Healer,
    Tank,
    Sharpshooter,
}

pub const ROLES: [Role; 4] = [Role::Mage, Role::Healer, Role::Tank, Role::Sharpshooter];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DamageType {
    Physical,
    Magic,
}

/// Combat statistics of one defender role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSheet {
    pub damage: i32,
    pub damage_type: DamageType,
    pub phys_def: i32,
    pub magic_def: i32,
    pub phys_pen: i32,
    pub magic_pen: i32,
    pub heal_amount: i32,
}

impl RoleSheet {
    pub fn validate(&self) -> Result<()> {
        if self.damage < 0
            || self.phys_def < 0
            || self.magic_def < 0
            || self.phys_pen < 0
            || self.magic_pen < 0
            || self.heal_amount < 0
        {
            return Err(Error::Config("role sheet stats must be non-negative".into()));
        }
        Ok(())
    }
}

/// Default sheets: Mage and Healer deal magic damage, Tank is armored,
/// Sharpshooter hits hard with high physical penetration.
pub fn default_role_sheets() -> [RoleSheet; 4] {
    [
        RoleSheet {
            damage: 6,
            damage_type: DamageType::Magic,
            phys_def: 0,
            magic_def: 4,
            phys_pen: 0,
            magic_pen: 2,
            heal_amount: 20,
        },
        RoleSheet {
            damage: 3,
            damage_type: DamageType::Magic,
            phys_def: 1,
            magic_def: 1,
            phys_pen: 0,
            magic_pen: 0,
            heal_amount: 20,
        },
        RoleSheet {
            damage: 5,
            damage_type: DamageType::Physical,
            phys_def: 4,
            magic_def: 0,
            phys_pen: 0,
            magic_pen: 0,
            heal_amount: 20,
        },
        RoleSheet {
            damage: 8,
            damage_type: DamageType::Physical,
            phys_def: 0,
            magic_def: 0,
            phys_pen: 5,
            magic_pen: 0,
            heal_amount: 20,
        },
    ]
}

/// Full rule set: grid, role sheets, action costs, and both energy economies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rules {
    pub grid: GridConfig,
    pub sheets: [RoleSheet; 4],
    pub move_cost: i32,
    pub shoot_cost: i32,
    pub heal_cost: i32,
    pub special_cost: i32,
    /// Health restored to the whole team by the Healer's special.
    pub special_heal: i32,
    pub tank_cannon_damage: i32,
    pub tank_cannon_pen: i32,
    pub sharpshooter_lane_damage: i32,
    pub sharpshooter_lane_pen: i32,
    pub defender_max_health: i32,
    pub defender_max_energy: i32,
    pub defender_energy_regen: i32,
    pub attacker_start_energy: i32,
    pub attacker_start_max_energy: i32,
    pub attacker_energy_regen: i32,
    pub attacker_cap_growth: i32,
}

impl Default for Rules {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            sheets: default_role_sheets(),
            move_cost: 5,
            shoot_cost: 10,
            heal_cost: 50,
            special_cost: 200,
            special_heal: 50,
            tank_cannon_damage: 12,
            tank_cannon_pen: 10,
            sharpshooter_lane_damage: 25,
            sharpshooter_lane_pen: 10,
            defender_max_health: 100,
            defender_max_energy: 1000,
            defender_energy_regen: 1,
            attacker_start_energy: 100,
            attacker_start_max_energy: 200,
            attacker_energy_regen: 2,
            attacker_cap_growth: 1,
        }
    }
}

impl Rules {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        for sheet in &self.sheets {
            sheet.validate()?;
        }
        Ok(())
    }
}

/// The attacker's 12-field generative parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitSpec {
    pub lane: usize,
    pub health: i32,
    pub damage: i32,
    pub speed: i32,
    pub range: i32,
    pub regen: i32,
    pub leech: i32,
    pub phys_def: i32,
    pub magic_def: i32,
    pub phys_pen: i32,
    pub magic_pen: i32,
    pub dtype: DamageType,
}

impl UnitSpec {
    /// Cheapest possible unit: all core stats at minimum, no extras.
    pub fn minimal(lane: usize) -> Self {
        Self {
            lane,
            health: 1,
            damage: 1,
            speed: 1,
            range: 1,
            regen: 0,
            leech: 0,
            phys_def: 0,
            magic_def: 0,
            phys_pen: 0,
            magic_pen: 0,
            dtype: DamageType::Physical,
        }
    }

    /// Every field at its upper bound.
    pub fn maximal(lane: usize) -> Self {
        use limits::*;
        Self {
            lane,
            health: HEALTH_MAX,
            damage: DAMAGE_MAX,
            speed: SPEED_MAX,
            range: RANGE_MAX,
            regen: REGEN_MAX,
            leech: LEECH_MAX,
            phys_def: DEF_MAX,
            magic_def: DEF_MAX,
            phys_pen: PEN_MAX,
            magic_pen: PEN_MAX,
            dtype: DamageType::Magic,
        }
    }

    pub fn validate(&self, lanes: usize) -> Result<()> {
        use limits::*;
        let ok = self.lane < lanes
            && (1..=HEALTH_MAX).contains(&self.health)
            && (1..=DAMAGE_MAX).contains(&self.damage)
            && (1..=SPEED_MAX).contains(&self.speed)
            && (1..=RANGE_MAX).contains(&self.range)
            && (0..=REGEN_MAX).contains(&self.regen)
            && (0..=LEECH_MAX).contains(&self.leech)
            && (0..=DEF_MAX).contains(&self.phys_def)
            && (0..=DEF_MAX).contains(&self.magic_def)
            && (0..=PEN_MAX).contains(&self.phys_pen)
            && (0..=PEN_MAX).contains(&self.magic_pen);
        if ok {
            Ok(())
        } else {
            Err(Error::Usage(format!("unit spec out of range: {self:?}")))
        }
    }
}

/// A live unit on the board.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitInstance {
    pub spec: UnitSpec,
    pub y: i32,
    pub current_health: i32,
    pub spawn_tick: u32,
    pub id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefenderState {
    pub role: Role,
    pub x: usize,
    pub y: usize,
    pub health: i32,
    pub energy: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackerState {
    pub energy: i32,
    pub max_energy: i32,
}

/// One defender's discrete action. Exactly six variants, matching the
/// 6-node policy head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefenderAction {
    MoveLeft,
    MoveRight,
    Shoot,
    Heal,
    Special,
    Noop,
}

pub const DEFENDER_ACTIONS: [DefenderAction; 6] = [
    DefenderAction::MoveLeft,
    DefenderAction::MoveRight,
    DefenderAction::Shoot,
    DefenderAction::Heal,
    DefenderAction::Special,
    DefenderAction::Noop,
];

/// The attacker either spawns a unit with the given parameters or passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackerAction {
    pub spawn: bool,
    pub spec: UnitSpec,
}

impl AttackerAction {
    pub fn pass() -> Self {
        Self {
            spawn: false,
            spec: UnitSpec::minimal(0),
        }
    }
}

/// Why an episode ended. Breach takes precedence over defender-down when
/// both occur in the same tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminal {
    AttackerWinBreach,
    AttackerWinDefenderDown,
    Truncated,
}

impl Terminal {
    pub fn is_attacker_win(self) -> bool {
        matches!(self, Terminal::AttackerWinBreach | Terminal::AttackerWinDefenderDown)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepOutcome {
    pub terminal: Option<Terminal>,
    pub kills_this_tick: u32,
    pub spawn_failed: bool,
}

/// Full Markov state of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub tick: u32,
    pub defenders: [DefenderState; 4],
    pub attacker: AttackerState,
    pub units: Vec<UnitInstance>,
    pub next_unit_id: u64,
    pub breached: bool,
    /// Deterministic stream owned by this episode; the engine itself never
    /// draws from it, but policies sampling actions for this episode do.
    pub rng: ChaCha8Rng,
}

/// Energy cost of generating a unit: strictly increasing and multiplicative
/// across all parameters, so powerful units are superlinearly expensive.
/// Pre-rounding spawn cost; exposed so multiplicative-interaction
/// properties can be checked without ceil noise.
pub fn spawn_cost_raw(spec: &UnitSpec) -> f64 {
    10.0
        * (1.0 + 0.15 * f64::from(spec.health - 1))
        * (1.0 + 0.5 * f64::from(spec.damage - 1))
        * (1.0 + 0.4 * f64::from(spec.speed - 1))
        * (1.0 + 0.05 * f64::from(spec.range))
        * (1.0 + 0.6 * f64::from(spec.regen))
        * (1.0 + 0.3 * f64::from(spec.leech))
        * (1.0 + 0.3 * f64::from(spec.phys_def))
        * (1.0 + 0.3 * f64::from(spec.magic_def))
        * (1.0 + 0.25 * f64::from(spec.phys_pen))
        * (1.0 + 0.25 * f64::from(spec.magic_pen))
}

pub fn spawn_cost(spec: &UnitSpec) -> i64 {
    spawn_cost_raw(spec).ceil() as i64
}

/// Flat-subtraction damage mitigation with a chip-damage floor of 1.
pub fn compute_damage(
    attack_damage: i32,
    dtype: DamageType,
    pen: i32,
    target_phys_def: i32,
    target_magic_def: i32,
) -> i32 {
    let defense = match dtype {
        DamageType::Physical => target_phys_def,
        DamageType::Magic => target_magic_def,
    };
    let mitigated = (defense - pen).max(0);
    (attack_damage - mitigated).max(1)
}

/// One episode: rules plus mutable state.
#[derive(Debug, Clone)]
pub struct Game {
    pub rules: Rules,
    pub state: GameState,
}

impl Game {
    /// Starts a fresh episode. Defender `i` is placed at `x = 2i + 1`
    /// (clamped to the grid) on its fixed row `y = i`.
    pub fn new(rules: Rules, seed: u64) -> Result<Self> {
        rules.validate()?;
        let mut defenders = Vec::with_capacity(4);
        for (i, role) in ROLES.iter().enumerate() {
            defenders.push(DefenderState {
                role: *role,
                x: (2 * i + 1).min(rules.grid.lanes - 1),
                y: i.min(rules.grid.defender_rows - 1),
                health: rules.defender_max_health,
                energy: rules.defender_max_energy,
            });
        }
        let state = GameState {
            tick: 0,
            defenders: defenders.try_into().expect("exactly four defenders"),
            attacker: AttackerState {
                energy: rules.attacker_start_energy,
                max_energy: rules.attacker_start_max_energy,
            },
            units: Vec::new(),
            next_unit_id: 0,
            breached: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        Ok(Self { rules, state })
    }

    pub fn terminal(&self) -> Option<Terminal> {
        check_termination(&self.rules, &self.state)
    }

    /// Advances the game one tick. Phase order: regeneration, defender
    /// actions (index order), attacker spawn, unit movement/attacks,
    /// cleanup, termination.
    pub fn step(
        &mut self,
        defender_actions: [DefenderAction; 4],
        attacker_action: &AttackerAction,
    ) -> Result<StepOutcome> {
        if self.terminal().is_some() {
            return Err(Error::Usage("step called on a terminal state".into()));
        }
        let rules = &self.rules;
        let state = &mut self.state;
        let mut outcome = StepOutcome::default();

        // Phase 1: regeneration.
        for d in state.defenders.iter_mut() {
            d.energy = (d.energy + rules.defender_energy_regen).min(rules.defender_max_energy);
        }
        state.attacker.energy =
            (state.attacker.energy + rules.attacker_energy_regen).min(state.attacker.max_energy);
        state.attacker.max_energy += rules.attacker_cap_growth;
        for u in state.units.iter_mut() {
            u.current_health = (u.current_health + u.spec.regen).min(u.spec.health);
        }

        // Phase 2: defender actions, resolved in index order. An action the
        // defender cannot pay for degrades to Noop.
        for i in 0..4 {
            let action = defender_actions[i];
            let cost = match action {
                DefenderAction::MoveLeft | DefenderAction::MoveRight => rules.move_cost,
                DefenderAction::Shoot => rules.shoot_cost,
                DefenderAction::Heal => rules.heal_cost,
                DefenderAction::Special => rules.special_cost,
                DefenderAction::Noop => 0,
            };
            if state.defenders[i].energy < cost {
                continue;
            }
            state.defenders[i].energy -= cost;
            match action {
                DefenderAction::MoveLeft => {
                    state.defenders[i].x = state.defenders[i].x.saturating_sub(1);
                }
                DefenderAction::MoveRight => {
                    state.defenders[i].x = (state.defenders[i].x + 1).min(rules.grid.lanes - 1);
                }
                DefenderAction::Shoot => {
                    let lane = state.defenders[i].x;
                    let sheet = &rules.sheets[i];
                    if let Some(target) = state
                        .units
                        .iter_mut()
                        .filter(|u| u.current_health > 0 && u.spec.lane == lane)
                        .min_by_key(|u| (u.y, u.id))
                    {
                        let pen = match sheet.damage_type {
                            DamageType::Physical => sheet.phys_pen,
                            DamageType::Magic => sheet.magic_pen,
                        };
                        let dmg = compute_damage(
                            sheet.damage,
                            sheet.damage_type,
                            pen,
                            target.spec.phys_def,
                            target.spec.magic_def,
                        );
                        target.current_health = (target.current_health - dmg).max(0);
                    }
                }
                DefenderAction::Heal => {
                    let sheet = &rules.sheets[i];
                    state.defenders[i].health =
                        (state.defenders[i].health + sheet.heal_amount).min(rules.defender_max_health);
                }
                DefenderAction::Special => Self::resolve_special(rules, state, i),
                DefenderAction::Noop => {}
            }
        }

        // Phase 3: attacker spawn.
        if attacker_action.spawn {
            attacker_action.spec.validate(rules.grid.lanes)?;
            let cost = spawn_cost(&attacker_action.spec);
            if i64::from(state.attacker.energy) >= cost {
                state.attacker.energy -= cost as i32;
                state.units.push(UnitInstance {
                    spec: attacker_action.spec,
                    y: (rules.grid.depth - 1) as i32,
                    current_health: attacker_action.spec.health,
                    spawn_tick: state.tick,
                    id: state.next_unit_id,
                });
                state.next_unit_id += 1;
            } else {
                outcome.spawn_failed = true;
            }
        }

        // Phase 4: unit advance/attack, ascending id order. Engagement is
        // checked before every tile advance; an engaged unit halts for the
        // tick and attacks only if it has not advanced yet this tick.
        'units: for ui in 0..state.units.len() {
            if state.units[ui].current_health <= 0 {
                continue;
            }
            let spec = state.units[ui].spec;
            for advanced in 0..spec.speed {
                let uy = state.units[ui].y;
                let engaged = state
                    .defenders
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.x == spec.lane && uy - d.y as i32 <= spec.range)
                    .min_by_key(|(di, d)| ((uy - d.y as i32).abs(), *di))
                    .map(|(di, _)| di);
                if let Some(di) = engaged {
                    if advanced == 0 {
                        let sheet = &rules.sheets[di];
                        let pen = match spec.dtype {
                            DamageType::Physical => spec.phys_pen,
                            DamageType::Magic => spec.magic_pen,
                        };
                        let dmg = compute_damage(
                            spec.damage,
                            spec.dtype,
                            pen,
                            sheet.phys_def,
                            sheet.magic_def,
                        );
                        state.defenders[di].health = (state.defenders[di].health - dmg).max(0);
                        let u = &mut state.units[ui];
                        u.current_health = (u.current_health + spec.leech).min(spec.health);
                    }
                    break;
                }
                if uy == 0 {
                    state.breached = true;
                    break 'units;
                }
                state.units[ui].y -= 1;
            }
        }

        // Phase 5: cleanup.
        let before = state.units.len();
        state.units.retain(|u| u.current_health > 0);
        outcome.kills_this_tick = (before - state.units.len()) as u32;

        // Phase 6: termination. Breach wins over defender-down.
        state.tick += 1;
        outcome.terminal = check_termination(rules, state);
        Ok(outcome)
    }

    fn resolve_special(rules: &Rules, state: &mut GameState, idx: usize) {
        match state.defenders[idx].role {
            Role::Mage => {
                for u in state.units.iter_mut() {
                    u.spec.phys_def = 0;
                    u.spec.magic_def = 0;
                }
            }
            Role::Healer => {
                for d in state.defenders.iter_mut() {
                    d.health = (d.health + rules.special_heal).min(rules.defender_max_health);
                }
            }
            Role::Tank => {
                let width = rules.grid.lanes.min(3);
                let last_start = rules.grid.lanes - width;
                let (mut best_start, mut best_count) = (0usize, usize::MIN);
                for start in 0..=last_start {
                    let count = state
                        .units
                        .iter()
                        .filter(|u| u.current_health > 0)
                        .filter(|u| u.spec.lane >= start && u.spec.lane < start + width)
                        .count();
                    if count > best_count {
                        best_start = start;
                        best_count = count;
                    }
                }
                for u in state.units.iter_mut() {
                    if u.current_health > 0
                        && u.spec.lane >= best_start
                        && u.spec.lane < best_start + width
                    {
                        let dmg = compute_damage(
                            rules.tank_cannon_damage,
                            DamageType::Physical,
                            rules.tank_cannon_pen,
                            u.spec.phys_def,
                            u.spec.magic_def,
                        );
                        u.current_health = (u.current_health - dmg).max(0);
                    }
                }
            }
            Role::Sharpshooter => {
                let lane = state.defenders[idx].x;
                for u in state.units.iter_mut() {
                    if u.current_health > 0 && u.spec.lane == lane {
                        let dmg = compute_damage(
                            rules.sharpshooter_lane_damage,
                            DamageType::Physical,
                            rules.sharpshooter_lane_pen,
                            u.spec.phys_def,
                            u.spec.magic_def,
                        );
                        u.current_health = (u.current_health - dmg).max(0);
                    }
                }
            }
        }
    }
}

/// Pure termination predicate, consistent with [`Game::step`]'s phase
/// ordering: breach first, then defender-down, then truncation.
pub fn check_termination(rules: &Rules, state: &GameState) -> Option<Terminal> {
    if state.breached {
        Some(Terminal::AttackerWinBreach)
    } else if state.defenders.iter().any(|d| d.health <= 0) {
        Some(Terminal::AttackerWinDefenderDown)
    } else if state.tick >= rules.grid.max_ticks {
        Some(Terminal::Truncated)
    } else {
        None
    }
}
