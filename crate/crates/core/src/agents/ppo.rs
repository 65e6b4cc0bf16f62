//! Clipped-surrogate policy optimisation with generalised advantage estimation.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::net::{Adam, Architecture, Policy};
use super::obs::{encode, Observation, OBS_DIM};
use crate::laws::Objective;
use crate::rewardgen::{shaped_reward, EpisodeRewardMemo, PredicateSet, ShapingConfig};
use crate::world::{Action, GameState, WorldError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("loss became non-finite at step {step}")]
    Diverged { step: u64 },
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub total_steps: u64,
    /// Transitions per update, split evenly across `envs` environments.
    pub rollout: usize,
    pub envs: usize,
    pub minibatch: usize,
    pub epochs: usize,
    pub clip: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_steps: 300_000,
            rollout: 2048,
            envs: 1,
            minibatch: 256,
            epochs: 3,
            clip: 0.2,
            gamma: 0.95,
            lambda: 0.9,
            learning_rate: 3e-4,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            hidden: 128,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.into()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must be in [0, 1]");
        }
        if self.clip <= 0.0 {
            return bad("clip must be positive");
        }
        if self.rollout == 0 || self.envs == 0 || self.minibatch == 0 || self.epochs == 0 || self.hidden == 0 {
            return bad("rollout, envs, minibatch, epochs and hidden must be positive");
        }
        if self.rollout % self.envs != 0 {
            return bad("rollout must be a multiple of envs");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        Architecture { input: OBS_DIM, hidden: self.hidden, actions: Action::COUNT }
    }
}

/// One transition prepared for an update.
#[derive(Debug, Clone)]
pub struct Sample {
    pub obs: Observation,
    pub action: usize,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

/// Mean loss over `batch` and its gradient, written into `grad`.
pub fn ppo_loss(policy: &Policy, batch: &[Sample], cfg: &TrainConfig, grad: &mut [f64]) -> Result<LossReport, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::Shape("empty batch".into()));
    }
    if grad.len() != policy.param_count() {
        return Err(TrainError::Shape(format!("gradient has {} entries, policy has {}", grad.len(), policy.param_count())));
    }
    let arch = policy.architecture;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let n = batch.len() as f64;
    let mut report = LossReport::default();
    let mut dlogits = vec![0.0; arch.actions];
    for s in batch {
        if s.action >= arch.actions || s.obs.entries.iter().any(|&(i, _)| i as usize >= arch.input) {
            return Err(TrainError::Shape("sample does not fit the architecture".into()));
        }
        let f = policy.forward(&s.obs);
        let lp = f.log_probs[s.action];
        let ratio = (lp - s.old_log_prob).exp();
        let unclipped = ratio * s.advantage;
        let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * s.advantage;
        let surrogate = unclipped.min(clipped);
        let d_lp = if unclipped <= clipped { -s.advantage * ratio } else { 0.0 };
        let entropy: f64 = -f.probs.iter().zip(&f.log_probs).map(|(p, l)| p * l).sum::<f64>();
        let verr = f.value - s.ret;
        report.policy -= surrogate / n;
        report.value += 0.5 * verr * verr / n;
        report.entropy += entropy / n;
        for k in 0..arch.actions {
            let onehot = if k == s.action { 1.0 } else { 0.0 };
            dlogits[k] = (d_lp * (onehot - f.probs[k]) + cfg.entropy_coef * f.probs[k] * (f.log_probs[k] + entropy)) / n;
        }
        policy.backward(&s.obs, &f, &dlogits, cfg.value_coef * verr / n, grad);
    }
    report.total = report.policy + cfg.value_coef * report.value - cfg.entropy_coef * report.entropy;
    Ok(report)
}

/// Advantages and returns. `dones[t]` marks that the episode ended after step `t`.
pub fn gae(rewards: &[f64], values: &[f64], dones: &[bool], last_value: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        acc = delta + gamma * lambda * live * acc;
        adv[t] = acc;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

pub fn sample_action<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub step: u64,
    pub mean_reward: f64,
    pub achievements_unlocked: usize,
}

pub fn log_to_csv(rows: &[TrainLogRow]) -> String {
    let mut s = String::from("step,mean_reward,achievements_unlocked\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.6},{}", r.step, r.mean_reward, r.achievements_unlocked);
    }
    s
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: Policy,
    pub log: Vec<TrainLogRow>,
}

/// Builds a fresh environment for an episode seed.
pub type EnvFactory<'a> = dyn Fn(u64) -> Result<GameState, WorldError> + 'a;

pub fn train(
    env_factory: &EnvFactory,
    cfg: &TrainConfig,
    shaping: &ShapingConfig,
    predicates: &PredicateSet,
    mut on_rollout: impl FnMut(&TrainLogRow),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut policy = Policy::new(cfg.architecture(), &mut rng);
    let mut log = Vec::new();
    if cfg.total_steps == 0 {
        return Ok(TrainOutcome { policy, log });
    }
    let mut env_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xe9_15_0d_e5);
    let mut envs = Vec::with_capacity(cfg.envs);
    for _ in 0..cfg.envs {
        envs.push((env_factory(env_rng.gen())?, EpisodeRewardMemo::new()));
    }
    let mut adam = Adam::new(policy.param_count());
    let mut grad = vec![0.0; policy.param_count()];
    let mut step = 0u64;
    while step < cfg.total_steps {
        let len = (cfg.total_steps - step).min(cfg.rollout as u64) as usize;
        let horizon = len.div_ceil(cfg.envs);
        let mut obs = Vec::with_capacity(len);
        let mut actions = Vec::with_capacity(len);
        let mut log_probs = Vec::with_capacity(len);
        let mut adv = Vec::with_capacity(len);
        let mut returns = Vec::with_capacity(len);
        let mut reward_sum = 0.0;
        let mut unlocked: BTreeSet<Objective> = BTreeSet::new();
        for (env, memo) in envs.iter_mut() {
            let n = horizon.min(len - obs.len());
            let mut values = Vec::with_capacity(n);
            let mut rewards = Vec::with_capacity(n);
            let mut dones = Vec::with_capacity(n);
            for _ in 0..n {
                let o = encode(env);
                let f = policy.forward(&o);
                let a = sample_action(&f.probs, &mut rng);
                let action = Action::from_index(a).expect("action index");
                let before = action.objective().map(|_| env.clone());
                let info = env.step(action)?;
                let r = shaped_reward(before.as_ref().unwrap_or(env), &info, predicates, shaping, memo);
                if let Some(g) = info.unlocked {
                    unlocked.insert(g);
                }
                obs.push(o);
                actions.push(a);
                log_probs.push(f.log_probs[a]);
                values.push(f.value);
                rewards.push(r.total);
                dones.push(info.done);
                if info.done {
                    *env = env_factory(env_rng.gen())?;
                    memo.reset();
                }
            }
            let last_value = policy.forward(&encode(env)).value;
            let (a, r) = gae(&rewards, &values, &dones, last_value, cfg.gamma, cfg.lambda);
            adv.extend(a);
            returns.extend(r);
            reward_sum += rewards.iter().sum::<f64>();
        }
        step += len as u64;
        let mean = adv.iter().sum::<f64>() / len as f64;
        let sd = (adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / len as f64).sqrt();
        for a in &mut adv {
            *a = (*a - mean) / (sd + 1e-8);
        }
        let samples: Vec<Sample> = obs
            .into_iter()
            .enumerate()
            .map(|(t, o)| Sample { obs: o, action: actions[t], old_log_prob: log_probs[t], advantage: adv[t], ret: returns[t] })
            .collect();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.minibatch) {
                let batch: Vec<Sample> = chunk.iter().map(|&i| samples[i].clone()).collect();
                let loss = ppo_loss(&policy, &batch, cfg, &mut grad)?;
                if !loss.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(TrainError::Diverged { step });
                }
                adam.step(&mut policy.params, &mut grad, cfg.learning_rate, cfg.max_grad_norm);
            }
        }
        let row = TrainLogRow { step, mean_reward: reward_sum / len as f64, achievements_unlocked: unlocked.len() };
        tracing::debug!(step, mean_reward = row.mean_reward, unlocked = row.achievements_unlocked, "rollout");
        on_rollout(&row);
        log.push(row);
    }
    Ok(TrainOutcome { policy, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gae_degenerates_to_returns_to_go() {
        let rewards = [1.0, 0.0, 2.0, 3.0];
        let (adv, ret) = gae(&rewards, &[0.0; 4], &[false, false, false, true], 5.0, 1.0, 1.0);
        assert_eq!(adv, vec![6.0, 5.0, 5.0, 3.0]);
        assert_eq!(ret, adv);
    }

    #[test]
    fn zero_steps_returns_initial_policy() {
        let cfg = TrainConfig { total_steps: 0, hidden: 4, ..TrainConfig::default() };
        let out = train(&|s| crate::world::generate_world(s, &Default::default()), &cfg, &crate::rewardgen::Preset::HealthOnly.config(), &PredicateSet::default(), |_| {}).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(out.policy, Policy::new(cfg.architecture(), &mut rng));
        assert!(out.log.is_empty());
    }

    #[test]
    fn ratio_one_makes_clipping_irrelevant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pol = Policy::new(Architecture { input: 3, hidden: 4, actions: 27 }, &mut rng);
        let obs = Observation::from_dense(&[0.5, -1.0, 2.0]);
        let lp = pol.forward(&obs).log_probs[4];
        let batch = vec![Sample { obs, action: 4, old_log_prob: lp, advantage: 1.5, ret: 0.0 }];
        let mut g1 = vec![0.0; pol.param_count()];
        let mut g2 = vec![0.0; pol.param_count()];
        let a = ppo_loss(&pol, &batch, &TrainConfig { clip: 0.2, ..TrainConfig::default() }, &mut g1).unwrap();
        let b = ppo_loss(&pol, &batch, &TrainConfig { clip: 1e6, ..TrainConfig::default() }, &mut g2).unwrap();
        assert_eq!(a, b);
        assert_eq!(g1, g2);
        assert!((a.policy + 1.5).abs() < 1e-12);
    }
}
