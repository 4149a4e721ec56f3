//! Deterministic lane-defense Markov game plus a self-contained PPO
//! co-training harness.
//!
//! The crate is organized around the game loop: [`engine`] owns the tick
//! simulation, [`obs`] and [`reward`] turn states into learning signals,
//! [`net`] and [`ppo`] implement the policy-gradient machinery from scratch,
//! [`metrics`] records episode traces and detects emergent strategies, and
//! [`experiment`] orchestrates full runs (co-training, random baseline,
//! ablations, evaluation, analysis).

pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod net;
pub mod obs;
pub mod ppo;
pub mod reward;

pub use engine::{
    AttackerAction, AttackerState, DefenderAction, DefenderState, Game, GameState, GridConfig,
    Role, RoleSheet, Rules, StepOutcome, Terminal, UnitInstance, UnitSpec,
};
pub use error::Error;
