//! Deep deterministic policy gradient agent: actor/critic pairs with target
//! networks, ring replay, Gaussian exploration in raw (pre-squash) action
//! space, and Adam updates at the configured learning rates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::mlp::{Adam, Gradients, Mlp, OutputActivation};
use super::replay::{ReplayBuffer, Transition};
use super::RlError;

#[derive(Debug, Clone)]
pub struct DdpgConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub gamma: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Gaussian exploration stddev in raw action space, decayed linearly
    /// from initial to final over the first `noise_decay_fraction` of
    /// training.
    pub noise_std_initial: f64,
    pub noise_std_final: f64,
    pub noise_decay_fraction: f64,
    pub hidden: (usize, usize),
    /// Applied to rewards in the learning targets only; reported P&L is
    /// never scaled.
    pub reward_scale: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            actor_lr: 0.000_25,
            critic_lr: 0.002_5,
            tau: 0.005,
            gamma: 1.0,
            replay_capacity: 100_000,
            batch_size: 64,
            noise_std_initial: 0.2,
            noise_std_final: 0.02,
            noise_decay_fraction: 0.6,
            hidden: (64, 32),
            reward_scale: 1.0,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |reason: &str| Err(RlError::InvalidConfig { reason: reason.into() });
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad("replay capacity must cover the batch size");
        }
        if self.actor_lr <= 0.0 || self.critic_lr <= 0.0 {
            return bad("learning rates must be positive");
        }
        if self.reward_scale <= 0.0 || !self.reward_scale.is_finite() {
            return bad("reward scale must be positive");
        }
        Ok(())
    }

    /// Exploration stddev at training progress in [0, 1].
    pub fn noise_std(&self, progress: f64) -> f64 {
        let frac = self.noise_decay_fraction.max(1e-12);
        let t = (progress / frac).clamp(0.0, 1.0);
        self.noise_std_initial + (self.noise_std_final - self.noise_std_initial) * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    /// Mean critic value of the actor's current actions (the ascent
    /// objective).
    pub actor_objective: f64,
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub replay: ReplayBuffer,
    pub cfg: DdpgConfig,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    actor_opt: Adam,
    critic_opt: Adam,
    obs_dim: usize,
    act_dim: usize,
    rng: ChaCha8Rng,
}

impl DdpgAgent {
    pub fn new(
        obs_dim: usize,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        cfg: DdpgConfig,
        seed: u64,
    ) -> Result<Self, RlError> {
        cfg.validate()?;
        if action_low.len() != action_high.len() || action_low.is_empty() {
            return Err(RlError::ShapeMismatch);
        }
        let act_dim = action_low.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h1, h2) = cfg.hidden;
        let actor = Mlp::new(
            &[obs_dim, h1, h2, act_dim],
            OutputActivation::BoundedSquash { low: action_low.clone(), high: action_high.clone() },
            &mut rng,
        )?;
        let critic =
            Mlp::new(&[obs_dim + act_dim, h1, h2, 1], OutputActivation::Linear, &mut rng)?;
        let target_actor = actor.clone();
        let target_critic = critic.clone();
        let actor_opt = Adam::new(cfg.actor_lr, actor.param_count());
        let critic_opt = Adam::new(cfg.critic_lr, critic.param_count());
        Ok(Self {
            replay: ReplayBuffer::new(cfg.replay_capacity),
            actor,
            critic,
            target_actor,
            target_critic,
            cfg,
            action_low,
            action_high,
            actor_opt,
            critic_opt,
            obs_dim,
            act_dim,
            rng,
        })
    }

    /// Rebuild an agent from checkpointed networks. Optimizer moments and
    /// replay contents start fresh; this is an evaluation restore, not a
    /// training resume.
    #[allow(clippy::too_many_arguments)]
    pub fn from_networks(
        obs_dim: usize,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        cfg: DdpgConfig,
        actor: Mlp,
        critic: Mlp,
        target_actor: Mlp,
        target_critic: Mlp,
    ) -> Result<Self, RlError> {
        cfg.validate()?;
        let act_dim = action_low.len();
        if actor.input_dim() != obs_dim
            || actor.output_dim() != act_dim
            || critic.input_dim() != obs_dim + act_dim
            || critic.output_dim() != 1
            || target_actor.layer_sizes() != actor.layer_sizes()
            || target_critic.layer_sizes() != critic.layer_sizes()
        {
            return Err(RlError::ShapeMismatch);
        }
        let actor_opt = Adam::new(cfg.actor_lr, actor.param_count());
        let critic_opt = Adam::new(cfg.critic_lr, critic.param_count());
        Ok(Self {
            replay: ReplayBuffer::new(cfg.replay_capacity),
            actor,
            critic,
            target_actor,
            target_critic,
            cfg,
            action_low,
            action_high,
            actor_opt,
            critic_opt,
            obs_dim,
            act_dim,
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    fn squash(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(z, (l, h))| l + (h - l) * (z.tanh() + 1.0) / 2.0)
            .collect()
    }

    /// Deterministic squash of the actor output; optional Gaussian noise is
    /// added in raw space before squashing so results always stay in
    /// bounds. Returns (raw, bounded).
    pub fn select_action(
        &mut self,
        observation: &[f64],
        noise_std: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), RlError> {
        if observation.len() != self.obs_dim {
            return Err(RlError::DimensionMismatch {
                expected: self.obs_dim,
                actual: observation.len(),
            });
        }
        let (_, cache) = self.actor.forward_cached(observation)?;
        let mut raw = cache.raw_output().to_vec();
        if noise_std > 0.0 {
            let normal = Normal::new(0.0, noise_std)
                .map_err(|_| RlError::InvalidConfig { reason: "bad noise stddev".into() })?;
            for z in &mut raw {
                *z += normal.sample(&mut self.rng);
            }
        }
        let bounded = self.squash(&raw);
        Ok((raw, bounded))
    }

    /// Store a transition, enforcing the declared dimensions.
    pub fn store(&mut self, t: Transition) -> Result<(), RlError> {
        if t.observation.len() != self.obs_dim {
            return Err(RlError::DimensionMismatch {
                expected: self.obs_dim,
                actual: t.observation.len(),
            });
        }
        if let Some(next) = &t.next_observation {
            if next.len() != self.obs_dim {
                return Err(RlError::DimensionMismatch {
                    expected: self.obs_dim,
                    actual: next.len(),
                });
            }
        }
        if t.action_raw.len() != self.act_dim {
            return Err(RlError::DimensionMismatch {
                expected: self.act_dim,
                actual: t.action_raw.len(),
            });
        }
        self.replay.push(t);
        Ok(())
    }

    pub fn ready(&self) -> bool {
        self.replay.len() >= self.cfg.batch_size
    }

    /// One DDPG update on a sampled batch: critic regression toward the
    /// bootstrapped targets, actor ascent on the critic, then soft target
    /// updates.
    pub fn update(&mut self) -> Result<UpdateStats, RlError> {
        let batch: Vec<Transition> = {
            let refs = self.replay.sample(self.cfg.batch_size, &mut self.rng)?;
            refs.into_iter().cloned().collect()
        };
        self.update_on(&batch)
    }

    /// Update from an explicit batch (used by the descent-property tests).
    pub fn update_on(&mut self, batch: &[Transition]) -> Result<UpdateStats, RlError> {
        if batch.is_empty() {
            return Err(RlError::InsufficientReplay { have: 0, need: 1 });
        }
        // Critic targets: r + gamma * Q_target(s', actor_target(s')); plain
        // r on terminal transitions.
        let mut inputs = Vec::with_capacity(batch.len());
        let mut targets = Vec::with_capacity(batch.len());
        for t in batch {
            let mut y = self.cfg.reward_scale * t.reward;
            if let Some(next) = &t.next_observation {
                let (_, cache) = self.target_actor.forward_cached(next)?;
                let next_norm: Vec<f64> =
                    cache.raw_output().iter().map(|z| z.tanh()).collect();
                let mut q_in = next.clone();
                q_in.extend_from_slice(&next_norm);
                let q_next = self.target_critic.forward(&q_in)?[0];
                y += self.cfg.gamma * q_next;
            }
            let mut x = t.observation.clone();
            x.extend(t.action_normalized());
            inputs.push(x);
            targets.push(vec![y]);
        }
        let (critic_loss, critic_grads) = self.critic.squared_loss_gradient(&inputs, &targets)?;
        self.critic_opt.step(&mut self.critic, &critic_grads)?;

        // Actor ascent: maximize mean Q(s, tanh(actor_raw(s))).
        let n = batch.len() as f64;
        let mut actor_grads = Gradients::zeros_like(&self.actor);
        let mut objective = 0.0;
        for t in batch {
            let (_, actor_cache) = self.actor.forward_cached(&t.observation)?;
            let raw = actor_cache.raw_output();
            let norm: Vec<f64> = raw.iter().map(|z| z.tanh()).collect();
            let mut q_in = t.observation.clone();
            q_in.extend_from_slice(&norm);
            let (q, critic_cache) = self.critic.forward_cached(&q_in)?;
            objective += q[0];
            let (_, input_grad) = self.critic.backward(&critic_cache, &[1.0]);
            let dq_dnorm = &input_grad[self.obs_dim..];
            // Chain through tanh; minimize -Q.
            let grad_raw: Vec<f64> = dq_dnorm
                .iter()
                .zip(&norm)
                .map(|(g, t)| -g * (1.0 - t * t) / n)
                .collect();
            let (g, _) = self.actor.backward_from_raw(&actor_cache, &grad_raw);
            actor_grads.add_assign(&g);
        }
        self.actor_opt.step(&mut self.actor, &actor_grads)?;

        self.target_actor.soft_update_from(&self.actor, self.cfg.tau)?;
        self.target_critic.soft_update_from(&self.critic, self.cfg.tau)?;

        if !critic_loss.is_finite() {
            return Err(RlError::NonFiniteLoss);
        }
        Ok(UpdateStats { critic_loss, actor_objective: objective / n })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bandit_agent(seed: u64) -> DdpgAgent {
        DdpgAgent::new(
            1,
            vec![-1.0],
            vec![1.0],
            DdpgConfig { batch_size: 16, replay_capacity: 512, ..Default::default() },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn action_always_within_bounds() {
        let mut agent = DdpgAgent::new(
            3,
            vec![20.0, -200.0],
            vec![200.0, 200.0],
            DdpgConfig::default(),
            1,
        )
        .unwrap();
        for i in 0..10_000 {
            let obs = vec![i as f64, -(i as f64), 0.5];
            let (_, a) = agent.select_action(&obs, 5.0).unwrap();
            assert!(a[0] >= 20.0 && a[0] <= 200.0);
            assert!(a[1] >= -200.0 && a[1] <= 200.0);
        }
    }

    #[test]
    fn noiseless_action_is_deterministic() {
        let mut agent = bandit_agent(7);
        let (_, a) = agent.select_action(&[0.3], 0.0).unwrap();
        let (_, b) = agent.select_action(&[0.3], 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gamma_zero_terminal_batch_targets_are_rewards() {
        let mut agent = DdpgAgent::new(
            1,
            vec![-1.0],
            vec![1.0],
            DdpgConfig { gamma: 0.0, batch_size: 4, ..Default::default() },
            3,
        )
        .unwrap();
        // All-terminal batch: the critic is regressed straight toward r.
        let batch: Vec<Transition> = (0..4)
            .map(|i| Transition {
                observation: vec![0.0],
                action_raw: vec![0.1 * i as f64],
                action_bounded: vec![],
                reward: 1.0,
                next_observation: None,
            })
            .collect();
        // Drive many updates on the frozen batch; critic approaches 1.
        for _ in 0..3000 {
            agent.update_on(&batch).unwrap();
        }
        let mut q_in = vec![0.0];
        q_in.push(0.05f64.tanh());
        let q = agent.critic.forward(&q_in).unwrap()[0];
        assert!((q - 1.0).abs() < 0.05, "critic value {q}");
    }

    #[test]
    fn critic_loss_decreases_on_frozen_batch() {
        let mut ok = 0;
        for seed in 0..100 {
            let mut agent = DdpgAgent::new(
                2,
                vec![-1.0],
                vec![1.0],
                DdpgConfig {
                    batch_size: 8,
                    critic_lr: 1e-3,
                    actor_lr: 1e-6,
                    tau: 1e-4,
                    ..Default::default()
                },
                seed,
            )
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let batch: Vec<Transition> = (0..8)
                .map(|_| Transition {
                    observation: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                    action_raw: vec![rng.random_range(-1.0..1.0)],
                    action_bounded: vec![],
                    reward: rng.random_range(-1.0..1.0),
                    next_observation: None,
                })
                .collect();
            let before = agent.update_on(&batch).unwrap().critic_loss;
            let after = agent.update_on(&batch).unwrap().critic_loss;
            if after <= before {
                ok += 1;
            }
        }
        assert!(ok >= 90, "critic descended in only {ok}/100 trials");
    }

    #[test]
    fn insufficient_replay_rejected() {
        let mut agent = bandit_agent(11);
        assert!(matches!(agent.update(), Err(RlError::InsufficientReplay { .. })));
    }

    #[test]
    fn store_rejects_wrong_dimensions() {
        let mut agent = bandit_agent(12);
        let bad = Transition {
            observation: vec![1.0, 2.0],
            action_raw: vec![0.0],
            action_bounded: vec![0.0],
            reward: 0.0,
            next_observation: None,
        };
        assert!(matches!(agent.store(bad), Err(RlError::DimensionMismatch { .. })));
    }

    #[test]
    fn noise_schedule_decays_linearly() {
        let cfg = DdpgConfig::default();
        assert_eq!(cfg.noise_std(0.0), 0.2);
        assert!((cfg.noise_std(0.3) - 0.11).abs() < 1e-12);
        assert!((cfg.noise_std(0.6) - 0.02).abs() < 1e-12);
        assert!((cfg.noise_std(1.0) - 0.02).abs() < 1e-12);
    }
}
