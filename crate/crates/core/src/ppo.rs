//! On-policy co-training: rollout collection across episodes, generalized
//! advantage estimation, and clipped-surrogate policy updates with analytic
//! gradients.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{AttackerAction, DefenderAction, Game, GameState, Rules, Terminal, UnitSpec};
use crate::error::{Error, Result};
use crate::experiment::random_defender_policy;
use crate::metrics::{EpisodeTrace, TickRecord, TraceBuilder};
use crate::net::{
    attacker_head_sizes, log_softmax, sample_action, softmax, Adam, HeadMask, NetSpec,
    Network, DEFENDER_HEAD_SIZES,
};
use crate::obs::{encode_attacker_obs, encode_defender_obs, ATTACKER_OBS_LEN, DEFENDER_OBS_LEN};
use crate::reward::{compute_rewards, RewardConfig};

/// PPO training hyperparameters. Learning rate, batch size, clip epsilon,
/// and entropy bonus follow the published training table; the rest are
/// standard values surfaced in the config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub clip_epsilon: f64,
    pub entropy_beta: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub epochs_per_update: usize,
    /// Transitions collected per side before each update.
    pub horizon: usize,
    pub value_coef: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 3.0e-4,
            batch_size: 128,
            clip_epsilon: 0.2,
            entropy_beta: 5.0e-4,
            gamma: 0.99,
            gae_lambda: 0.95,
            epochs_per_update: 3,
            horizon: 2048,
            value_coef: 0.5,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = self.learning_rate > 0.0
            && self.batch_size > 0
            && self.clip_epsilon > 0.0
            && self.entropy_beta >= 0.0
            && self.gamma > 0.0
            && self.gae_lambda >= 0.0
            && self.epochs_per_update > 0
            && self.horizon > 0
            && self.value_coef > 0.0;
        if !positive || self.clip_epsilon >= 1.0 {
            return Err(Error::Config("invalid PPO hyperparameters".into()));
        }
        Ok(())
    }
}

/// Generalized advantage estimation over one episode segment.
///
/// `values` carries one extra trailing entry: the bootstrap value of the
/// state after the last transition (zero at terminals, the critic estimate
/// at truncations and horizon cuts).
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n + 1, "values must include the bootstrap entry");
    assert_eq!(dones.len(), n);
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let nonterminal = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * nonterminal - values[t];
        next_adv = delta + gamma * lambda * nonterminal * next_adv;
        advantages[t] = next_adv;
    }
    let returns = advantages
        .iter()
        .zip(values.iter())
        .map(|(a, v)| a + v)
        .collect();
    (advantages, returns)
}

/// One contiguous stretch of transitions from a single episode.
#[derive(Debug, Clone, Default)]
pub struct Segment {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<usize>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// True when the segment ends in a real terminal (attacker win);
    /// false at truncations and horizon cuts.
    pub terminal: bool,
    /// Critic estimate of the state after the last transition; ignored when
    /// `terminal` is true.
    pub bootstrap_value: f64,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Per-side rollout storage across possibly several episodes.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub segments: Vec<Segment>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattens all segments, running GAE per segment.
    pub fn flatten(&self, gamma: f64, lambda: f64) -> TrainBatch {
        let mut batch = TrainBatch::default();
        for seg in &self.segments {
            if seg.is_empty() {
                continue;
            }
            let mut values = seg.values.clone();
            values.push(if seg.terminal { 0.0 } else { seg.bootstrap_value });
            let mut dones = vec![false; seg.len()];
            if seg.terminal {
                *dones.last_mut().expect("non-empty segment") = true;
            }
            let (adv, ret) = compute_gae(&seg.rewards, &values, &dones, gamma, lambda);
            batch.obs.extend(seg.obs.iter().cloned());
            batch.actions.extend(seg.actions.iter().cloned());
            batch.old_log_probs.extend(&seg.log_probs);
            batch.values.extend(&seg.values);
            batch.advantages.extend(adv);
            batch.returns.extend(ret);
        }
        batch
    }
}

/// Flattened training data with advantages and returns computed.
#[derive(Debug, Clone, Default)]
pub struct TrainBatch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<usize>>,
    pub old_log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl TrainBatch {
    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    /// Normalizes advantages to zero mean and unit variance in place.
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len() as f64;
        if n < 2.0 {
            return;
        }
        let mean = self.advantages.iter().sum::<f64>() / n;
        let var = self
            .advantages
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        let denom = if std > 1e-12 { std } else { 1.0 };
        for a in self.advantages.iter_mut() {
            *a = (*a - mean) / denom;
        }
    }
}

/// Diagnostics from one PPO update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub minibatches: usize,
}

/// Clipped-surrogate policy loss over one minibatch, plus the analytic
/// logit gradients that minimize it. `dlogits` already includes the
/// entropy-bonus term.
pub struct PolicyLossOutput {
    pub policy_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub total_loss: f64,
    pub dlogits: Vec<Array2<f64>>,
}

pub fn policy_loss_and_grad(
    logits: &[Array2<f64>],
    actions: &[Vec<usize>],
    old_log_probs: &[f64],
    advantages: &[f64],
    clip_epsilon: f64,
    entropy_beta: f64,
    mask: HeadMask,
) -> PolicyLossOutput {
    let n = actions.len();
    assert!(n > 0);
    let n_f = n as f64;
    let mut dlogits: Vec<Array2<f64>> = logits.iter().map(|l| Array2::zeros(l.raw_dim())).collect();
    let mut policy_loss = 0.0;
    let mut entropy_total = 0.0;
    let mut clipped = 0usize;
    let mut approx_kl = 0.0;
    for i in 0..n {
        let active = mask.active_heads(&actions[i], logits.len());
        let mut new_lp = 0.0;
        let mut entropy_i = 0.0;
        let mut head_cache: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(active);
        for (h, l) in logits.iter().enumerate().take(active) {
            let row: Vec<f64> = l.row(i).to_vec();
            let log_p = log_softmax(&row);
            let p = softmax(&row);
            new_lp += log_p[actions[i][h]];
            entropy_i += -log_p.iter().zip(p.iter()).map(|(lp, pi)| pi * lp).sum::<f64>();
            head_cache.push((p, log_p));
        }
        let adv = advantages[i];
        let ratio = (new_lp - old_log_probs[i]).exp();
        let clipped_ratio = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
        let surr1 = ratio * adv;
        let surr2 = clipped_ratio * adv;
        policy_loss += -surr1.min(surr2) / n_f;
        entropy_total += entropy_i / n_f;
        approx_kl += (old_log_probs[i] - new_lp) / n_f;
        if (ratio - 1.0).abs() > clip_epsilon {
            clipped += 1;
        }
        // d(loss)/d(new_lp): the unclipped branch carries gradient; the
        // clipped branch is flat in the ratio.
        let dlp = if surr1 <= surr2 { -adv * ratio / n_f } else { 0.0 };
        for (h, (p, log_p)) in head_cache.iter().enumerate() {
            let a = actions[i][h];
            let h_ent: f64 = -log_p.iter().zip(p.iter()).map(|(lp, pi)| pi * lp).sum::<f64>();
            for c in 0..p.len() {
                let indicator = if c == a { 1.0 } else { 0.0 };
                // log-prob path plus the entropy bonus -beta * H.
                let mut g = dlp * (indicator - p[c]);
                g += entropy_beta / n_f * p[c] * (log_p[c] + h_ent);
                dlogits[h][[i, c]] += g;
            }
        }
    }
    let total_loss = policy_loss - entropy_beta * entropy_total;
    PolicyLossOutput {
        policy_loss,
        entropy: entropy_total,
        clip_fraction: clipped as f64 / n_f,
        approx_kl,
        total_loss,
        dlogits,
    }
}

/// One learning side: policy and value networks plus their optimizers.
#[derive(Debug, Clone)]
pub struct Learner {
    pub policy: Network,
    pub value: Network,
    pub mask: HeadMask,
    policy_opt: Adam,
    value_opt: Adam,
}

impl Learner {
    pub fn new(policy_spec: NetSpec, mask: HeadMask, learning_rate: f64, rng: &mut ChaCha8Rng) -> Self {
        let input_dim = policy_spec.input_dim;
        let policy = Network::init(policy_spec, rng);
        let value = Network::init(NetSpec::value(input_dim), rng);
        let policy_opt = Adam::new(learning_rate, policy.param_count());
        let value_opt = Adam::new(learning_rate, value.param_count());
        Self {
            policy,
            value,
            mask,
            policy_opt,
            value_opt,
        }
    }

    pub fn defender(learning_rate: f64, rng: &mut ChaCha8Rng) -> Self {
        Self::new(
            NetSpec::policy(DEFENDER_OBS_LEN, DEFENDER_HEAD_SIZES.to_vec()),
            HeadMask::All,
            learning_rate,
            rng,
        )
    }

    pub fn attacker(lanes: usize, learning_rate: f64, rng: &mut ChaCha8Rng) -> Self {
        Self::new(
            NetSpec::policy(ATTACKER_OBS_LEN, attacker_head_sizes(lanes)),
            HeadMask::SpawnGated,
            learning_rate,
            rng,
        )
    }

    fn value_of(&self, obs: &[f64]) -> f64 {
        self.value
            .forward(obs)
            .expect("value input dim")
            .1
            .expect("value head present")
    }
}

/// Runs `epochs_per_update` passes of shuffled minibatch updates over the
/// buffer, updating the learner's policy and value networks in place.
pub fn ppo_update(
    learner: &mut Learner,
    buffer: &RolloutBuffer,
    hyper: &Hyperparams,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    if buffer.is_empty() {
        return Err(Error::Usage("ppo_update on an empty buffer".into()));
    }
    let mut batch = buffer.flatten(hyper.gamma, hyper.gae_lambda);
    batch.normalize_advantages();
    let n = batch.len();
    let mut stats = UpdateStats {
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: 0.0,
        clip_fraction: 0.0,
        approx_kl: 0.0,
        minibatches: 0,
    };
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..hyper.epochs_per_update {
        // Fisher-Yates with the caller's deterministic stream.
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(hyper.batch_size) {
            let m = chunk.len();
            let input_dim = learner.policy.spec.input_dim;
            let mut x = Array2::zeros((m, input_dim));
            let mut actions = Vec::with_capacity(m);
            let mut old_lp = Vec::with_capacity(m);
            let mut adv = Vec::with_capacity(m);
            let mut ret = Vec::with_capacity(m);
            for (row, &idx) in chunk.iter().enumerate() {
                for (col, &v) in batch.obs[idx].iter().enumerate() {
                    x[[row, col]] = v;
                }
                actions.push(batch.actions[idx].clone());
                old_lp.push(batch.old_log_probs[idx]);
                adv.push(batch.advantages[idx]);
                ret.push(batch.returns[idx]);
            }

            let fwd = learner.policy.forward_batch(&x);
            let loss = policy_loss_and_grad(
                &fwd.logits,
                &actions,
                &old_lp,
                &adv,
                hyper.clip_epsilon,
                hyper.entropy_beta,
                learner.mask,
            );
            if !loss.total_loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite policy loss {} over {m} samples",
                    loss.total_loss
                )));
            }
            let grads = learner
                .policy
                .backward_batch(&x, &fwd, &loss.dlogits, None);
            learner.policy_opt.step(&mut learner.policy, &grads)?;

            let vfwd = learner.value.forward_batch(&x);
            let v = vfwd.value.as_ref().expect("value head");
            let target = Array1::from(ret);
            let err = v - &target;
            let value_loss = hyper.value_coef * err.mapv(|e| e * e).mean().unwrap_or(0.0);
            if !value_loss.is_finite() {
                return Err(Error::Training("non-finite value loss".into()));
            }
            let dvalue = err.mapv(|e| hyper.value_coef * 2.0 * e / m as f64);
            let vgrads = learner
                .value
                .backward_batch(&x, &vfwd, &[], Some(&dvalue));
            learner.value_opt.step(&mut learner.value, &vgrads)?;

            stats.policy_loss += loss.policy_loss;
            stats.value_loss += value_loss;
            stats.entropy += loss.entropy;
            stats.clip_fraction += loss.clip_fraction;
            stats.approx_kl += loss.approx_kl;
            stats.minibatches += 1;
        }
    }
    let k = stats.minibatches as f64;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    stats.clip_fraction /= k;
    stats.approx_kl /= k;
    Ok(stats)
}

/// Who drives the defender team during a rollout.
pub enum DefenderCtl<'a> {
    Learned(&'a Learner),
    Random,
}

/// Who drives the attacker during a rollout.
pub enum AttackerCtl<'a> {
    Learned(&'a Learner),
    Random { spawn_prob: f64 },
    Scripted(Box<dyn FnMut(&Rules, &GameState) -> AttackerAction + 'a>),
}

/// When a rollout stops collecting.
#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    /// Every learning side has at least this many transitions (ticks, when
    /// no side learns).
    Transitions(usize),
    /// This many episodes have completed.
    Episodes(u64),
}

/// Output of one rollout: per-side buffers (for learning sides only) and
/// the traces of episodes that completed during collection.
#[derive(Default)]
pub struct RolloutOutput {
    pub defender_buffer: Option<RolloutBuffer>,
    pub attacker_buffer: Option<RolloutBuffer>,
    pub completed: Vec<EpisodeTrace>,
    pub ticks: usize,
}

/// A persistent play loop. Episodes are seeded from `hash(master_seed,
/// episode_index)` and survive across rollout boundaries, so horizon cuts
/// never bias collection toward early-episode ticks.
pub struct Arena {
    pub rules: Rules,
    pub rewards: RewardConfig,
    pub master_seed: u64,
    pub episodes_started: u64,
    pub episodes_completed: u64,
    game: Game,
    trace: TraceBuilder,
}

/// SplitMix64-style mix of the master seed and episode index.
pub fn episode_seed(master_seed: u64, episode_index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(episode_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Arena {
    pub fn new(rules: Rules, rewards: RewardConfig, master_seed: u64) -> Result<Self> {
        let seed = episode_seed(master_seed, 0);
        let game = Game::new(rules.clone(), seed)?;
        let trace = TraceBuilder::new(rules.clone(), seed);
        Ok(Self {
            rules,
            rewards,
            master_seed,
            episodes_started: 1,
            episodes_completed: 0,
            game,
            trace,
        })
    }

    /// Collects transitions until the stop rule is satisfied (extended to
    /// the end of the current tick). Buffers are returned for learning
    /// sides; traces for episodes that completed.
    pub fn collect(
        &mut self,
        defender: &mut DefenderCtl,
        attacker: &mut AttackerCtl,
        stop: StopRule,
    ) -> Result<RolloutOutput> {
        let mut out = RolloutOutput::default();
        let defender_learns = matches!(defender, DefenderCtl::Learned(_));
        let attacker_learns = matches!(attacker, AttackerCtl::Learned(_));
        let mut def_buf = defender_learns.then(RolloutBuffer::default);
        let mut atk_buf = attacker_learns.then(RolloutBuffer::default);
        let mut def_seg: [Segment; 4] = Default::default();
        let mut atk_seg = Segment::default();
        let episodes_at_start = self.episodes_completed;

        loop {
            // Defender decisions.
            let mut def_actions = [DefenderAction::Noop; 4];
            match defender {
                DefenderCtl::Learned(learner) => {
                    for i in 0..4 {
                        let obs = encode_defender_obs(&self.rules, &self.game.state, i);
                        let (logits, _) = learner.policy.forward(&obs)?;
                        let value = learner.value_of(&obs);
                        let (indices, lp) =
                            sample_action(&logits, learner.mask, &mut self.game.state.rng);
                        def_actions[i] = crate::engine::DEFENDER_ACTIONS[indices[0]];
                        def_seg[i].obs.push(obs);
                        def_seg[i].actions.push(indices);
                        def_seg[i].log_probs.push(lp);
                        def_seg[i].values.push(value);
                    }
                }
                DefenderCtl::Random => {
                    for action in def_actions.iter_mut() {
                        *action = random_defender_policy(&mut self.game.state.rng);
                    }
                }
            }

            // Attacker decision.
            let atk_action = match attacker {
                AttackerCtl::Learned(learner) => {
                    let obs = encode_attacker_obs(&self.rules, &self.game.state);
                    let (logits, _) = learner.policy.forward(&obs)?;
                    let value = learner.value_of(&obs);
                    let (indices, lp) =
                        sample_action(&logits, learner.mask, &mut self.game.state.rng);
                    let action = attacker_action_from_indices(&indices, self.rules.grid.lanes);
                    atk_seg.obs.push(obs);
                    atk_seg.actions.push(indices);
                    atk_seg.log_probs.push(lp);
                    atk_seg.values.push(value);
                    action
                }
                AttackerCtl::Random { spawn_prob } => {
                    random_attacker_policy_with_prob(
                        &mut self.game.state.rng,
                        self.rules.grid.lanes,
                        *spawn_prob,
                    )
                }
                AttackerCtl::Scripted(f) => f(&self.rules, &self.game.state),
            };

            // Advance the world.
            let outcome = self.game.step(def_actions, &atk_action)?;
            out.ticks += 1;
            let reward = compute_rewards(&self.rewards, &outcome);
            for (i, seg) in def_seg.iter_mut().enumerate() {
                if defender_learns {
                    seg.rewards.push(reward.defender_rewards[i]);
                }
            }
            if attacker_learns {
                atk_seg.rewards.push(reward.attacker_reward);
            }

            self.trace.push(TickRecord {
                tick: self.game.state.tick - 1,
                defender_lanes: std::array::from_fn(|i| self.game.state.defenders[i].x),
                defender_health: std::array::from_fn(|i| self.game.state.defenders[i].health),
                defender_energy: std::array::from_fn(|i| self.game.state.defenders[i].energy),
                actions: def_actions,
                spawn: (atk_action.spawn && !outcome.spawn_failed).then_some(atk_action.spec),
                spawn_failed: outcome.spawn_failed,
                kills: outcome.kills_this_tick,
                terminal: outcome.terminal,
            });

            // Episode boundary.
            if let Some(terminal) = outcome.terminal {
                let truly_terminal = terminal != Terminal::Truncated;
                if let Some(buf) = def_buf.as_mut() {
                    let learner = match defender {
                        DefenderCtl::Learned(l) => l,
                        DefenderCtl::Random => unreachable!(),
                    };
                    for (i, seg) in def_seg.iter_mut().enumerate() {
                        let mut finished = std::mem::take(seg);
                        finished.terminal = truly_terminal;
                        if !truly_terminal {
                            let obs = encode_defender_obs(&self.rules, &self.game.state, i);
                            finished.bootstrap_value = learner.value_of(&obs);
                        }
                        buf.segments.push(finished);
                    }
                }
                if let Some(buf) = atk_buf.as_mut() {
                    let learner = match attacker {
                        AttackerCtl::Learned(l) => l,
                        _ => unreachable!(),
                    };
                    let mut finished = std::mem::take(&mut atk_seg);
                    finished.terminal = truly_terminal;
                    if !truly_terminal {
                        let obs = encode_attacker_obs(&self.rules, &self.game.state);
                        finished.bootstrap_value = learner.value_of(&obs);
                    }
                    buf.segments.push(finished);
                }
                self.episodes_completed += 1;
                let seed = episode_seed(self.master_seed, self.episodes_started);
                let builder = std::mem::replace(
                    &mut self.trace,
                    TraceBuilder::new(self.rules.clone(), seed),
                );
                out.completed.push(builder.finish());
                self.episodes_started += 1;
                self.game = Game::new(self.rules.clone(), seed)?;
            }

            // Stop rule.
            let done = match stop {
                StopRule::Transitions(horizon) => {
                    let def_done = def_buf
                        .as_ref()
                        .map(|b| b.len() + def_seg.iter().map(Segment::len).sum::<usize>() >= horizon);
                    let atk_done = atk_buf
                        .as_ref()
                        .map(|b| b.len() + atk_seg.len() >= horizon);
                    match (def_done, atk_done) {
                        (None, None) => out.ticks >= horizon,
                        (a, b) => a.unwrap_or(true) && b.unwrap_or(true),
                    }
                }
                StopRule::Episodes(n) => self.episodes_completed >= episodes_at_start + n,
            };
            if done {
                break;
            }
        }

        // Horizon cut mid-episode: close open segments with a critic
        // bootstrap so GAE stays well-defined.
        if let Some(buf) = def_buf.as_mut() {
            let learner = match defender {
                DefenderCtl::Learned(l) => l,
                DefenderCtl::Random => unreachable!(),
            };
            for (i, seg) in def_seg.iter_mut().enumerate() {
                if !seg.is_empty() {
                    let mut open = std::mem::take(seg);
                    open.terminal = false;
                    let obs = encode_defender_obs(&self.rules, &self.game.state, i);
                    open.bootstrap_value = learner.value_of(&obs);
                    buf.segments.push(open);
                }
            }
        }
        if let Some(buf) = atk_buf.as_mut() {
            if !atk_seg.is_empty() {
                let learner = match attacker {
                    AttackerCtl::Learned(l) => l,
                    _ => unreachable!(),
                };
                let mut open = std::mem::take(&mut atk_seg);
                open.terminal = false;
                let obs = encode_attacker_obs(&self.rules, &self.game.state);
                open.bootstrap_value = learner.value_of(&obs);
                buf.segments.push(open);
            }
        }
        out.defender_buffer = def_buf;
        out.attacker_buffer = atk_buf;
        Ok(out)
    }
}

/// Maps sampled head indices onto an attacker action. Head order matches
/// [`attacker_head_sizes`]; 1-based fields carry a +1 offset.
pub fn attacker_action_from_indices(indices: &[usize], lanes: usize) -> AttackerAction {
    use crate::engine::DamageType;
    let spawn = indices[0] == 1;
    let spec = UnitSpec {
        lane: indices[1].min(lanes - 1),
        health: indices[2] as i32 + 1,
        damage: indices[3] as i32 + 1,
        speed: indices[4] as i32 + 1,
        range: indices[5] as i32 + 1,
        regen: indices[6] as i32,
        leech: indices[7] as i32,
        phys_def: indices[8] as i32,
        magic_def: indices[9] as i32,
        phys_pen: indices[10] as i32,
        magic_pen: indices[11] as i32,
        dtype: if indices[12] == 0 {
            DamageType::Physical
        } else {
            DamageType::Magic
        },
    };
    AttackerAction { spawn, spec }
}

/// Random attacker with an explicit per-tick spawn probability.
pub fn random_attacker_policy_with_prob(
    rng: &mut impl Rng,
    lanes: usize,
    spawn_prob: f64,
) -> AttackerAction {
    use crate::engine::{limits, DamageType};
    let spawn = rng.gen_range(0.0..1.0) < spawn_prob;
    let spec = UnitSpec {
        lane: rng.gen_range(0..lanes),
        health: rng.gen_range(1..=limits::HEALTH_MAX),
        damage: rng.gen_range(1..=limits::DAMAGE_MAX),
        speed: rng.gen_range(1..=limits::SPEED_MAX),
        range: rng.gen_range(1..=limits::RANGE_MAX),
        regen: rng.gen_range(0..=limits::REGEN_MAX),
        leech: rng.gen_range(0..=limits::LEECH_MAX),
        phys_def: rng.gen_range(0..=limits::DEF_MAX),
        magic_def: rng.gen_range(0..=limits::DEF_MAX),
        phys_pen: rng.gen_range(0..=limits::PEN_MAX),
        magic_pen: rng.gen_range(0..=limits::PEN_MAX),
        dtype: if rng.gen_range(0..2) == 0 {
            DamageType::Physical
        } else {
            DamageType::Magic
        },
    };
    AttackerAction { spawn, spec }
}
