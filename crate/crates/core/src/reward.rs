//! Near-zero-sum reward functions. The terminal ±1.0 components cancel
//! exactly between sides; the kill bonus and failed-spawn penalty are
//! one-sided shaping terms.

use serde::{Deserialize, Serialize};

use crate::engine::StepOutcome;

/// All reward constants, overridable from the harness config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub defender_loss: f64,
    pub defender_tick: f64,
    pub defender_kill: f64,
    pub attacker_win: f64,
    pub attacker_tick: f64,
    pub attacker_spawn_fail: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            defender_loss: -1.0,
            defender_tick: 0.001,
            defender_kill: 0.05,
            attacker_win: 1.0,
            attacker_tick: -0.001,
            attacker_spawn_fail: -0.03,
        }
    }
}

/// Per-tick reward for each defender (identical across the shared-policy
/// team) and the attacker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardSample {
    pub defender_rewards: [f64; 4],
    pub attacker_reward: f64,
}

/// Computes both sides' rewards for one step. Truncation grants no terminal
/// reward; every kill is credited identically to all four defenders.
pub fn compute_rewards(cfg: &RewardConfig, outcome: &StepOutcome) -> RewardSample {
    let attacker_won = outcome.terminal.is_some_and(|t| t.is_attacker_win());
    let mut defender = cfg.defender_tick + cfg.defender_kill * f64::from(outcome.kills_this_tick);
    let mut attacker = cfg.attacker_tick;
    if attacker_won {
        defender += cfg.defender_loss;
        attacker += cfg.attacker_win;
    }
    if outcome.spawn_failed {
        attacker += cfg.attacker_spawn_fail;
    }
    RewardSample {
        defender_rewards: [defender; 4],
        attacker_reward: attacker,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Terminal;
    use approx::assert_relative_eq;

    fn cfg() -> RewardConfig {
        RewardConfig::default()
    }

    #[test]
    fn quiet_tick() {
        let r = compute_rewards(&cfg(), &StepOutcome::default());
        for d in r.defender_rewards {
            assert_relative_eq!(d, 0.001);
        }
        assert_relative_eq!(r.attacker_reward, -0.001);
    }

    #[test]
    fn attacker_win_with_one_kill() {
        let outcome = StepOutcome {
            terminal: Some(Terminal::AttackerWinBreach),
            kills_this_tick: 1,
            spawn_failed: false,
        };
        let r = compute_rewards(&cfg(), &outcome);
        for d in r.defender_rewards {
            assert_relative_eq!(d, -1.0 + 0.001 + 0.05);
        }
        assert_relative_eq!(r.attacker_reward, 1.0 - 0.001);
    }

    #[test]
    fn failed_spawn_penalty() {
        let outcome = StepOutcome {
            terminal: None,
            kills_this_tick: 0,
            spawn_failed: true,
        };
        let r = compute_rewards(&cfg(), &outcome);
        assert_relative_eq!(r.attacker_reward, -0.031);
    }

    #[test]
    fn truncation_grants_no_terminal_reward() {
        let outcome = StepOutcome {
            terminal: Some(Terminal::Truncated),
            kills_this_tick: 0,
            spawn_failed: false,
        };
        let r = compute_rewards(&cfg(), &outcome);
        assert_relative_eq!(r.defender_rewards[0], 0.001);
        assert_relative_eq!(r.attacker_reward, -0.001);
    }

    #[test]
    fn terminal_components_cancel_exactly() {
        for terminal in [Terminal::AttackerWinBreach, Terminal::AttackerWinDefenderDown] {
            let outcome = StepOutcome {
                terminal: Some(terminal),
                kills_this_tick: 0,
                spawn_failed: false,
            };
            let r = compute_rewards(&cfg(), &outcome);
            let defender_terminal = r.defender_rewards[0] - 0.001;
            let attacker_terminal = r.attacker_reward + 0.001;
            assert_relative_eq!(defender_terminal + attacker_terminal, 0.0);
        }
    }
}
