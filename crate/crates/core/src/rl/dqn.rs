//! Action selection, TD targets, and the policy-network update.

use rand::Rng;

use super::qnet::QNetwork;
use super::replay::Transition;
use crate::adam::AdamState;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct DqnConfig {
    pub gamma: f64,
    pub lr: f64,
    pub batch: usize,
    pub memory: usize,
    pub hidden: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Multiplicative decay applied once per episode.
    pub eps_decay: f64,
    /// Target-network sync period in environment steps.
    pub target_sync: usize,
    pub episodes: usize,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            gamma: 0.9,
            lr: 0.01,
            batch: 32,
            memory: 400,
            hidden: 100,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay: 0.99,
            target_sync: 100,
            episodes: 300,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("dqn.gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("dqn.lr must be positive, got {}", self.lr)));
        }
        if self.batch == 0 || self.memory == 0 || self.hidden == 0 || self.target_sync == 0 {
            return Err(Error::Config("dqn.batch, dqn.memory, dqn.hidden and dqn.target_sync must be at least 1".into()));
        }
        if self.batch > self.memory {
            return Err(Error::Config(format!(
                "dqn.batch ({}) exceeds dqn.memory ({})",
                self.batch, self.memory
            )));
        }
        if !unit(self.eps_start) || !unit(self.eps_end) || !unit(self.eps_decay) {
            return Err(Error::Config("dqn.eps_start, dqn.eps_end and dqn.eps_decay must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Exploration rate used during episode `episode` (0-based).
    pub fn epsilon(&self, episode: usize) -> f64 {
        let decayed = self.eps_start * self.eps_decay.powi(episode.min(i32::MAX as usize) as i32);
        decayed.max(self.eps_end).min(self.eps_start.max(self.eps_end))
    }
}

/// With probability `epsilon` a uniformly random action, else the argmax
/// with ties going to select. The uniform draw is always consumed so the
/// random stream does not depend on the Q-values.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: [f64; 2], epsilon: f64, rng: &mut R) -> usize {
    let explore = rng.gen::<f64>() < epsilon;
    let random_action = rng.gen_range(0..2);
    if explore {
        random_action
    } else if q[1] >= q[0] {
        1
    } else {
        0
    }
}

pub fn td_target(reward: f64, next_q: [f64; 2], gamma: f64) -> f64 {
    reward + gamma * next_q[0].max(next_q[1])
}

/// Policy network plus its optimizer state.
#[derive(Clone, Debug)]
pub struct Learner {
    pub net: QNetwork,
    adam: AdamState,
}

impl Learner {
    pub fn new(net: QNetwork) -> Self {
        let adam = AdamState::new(net.params());
        Learner { net, adam }
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.adam.step_count()
    }

    /// Mean of `(y − Q(s, a))²` over the batch and its parameter gradients.
    /// Only the taken action's output enters the loss.
    pub fn loss_and_grads(&self, states: &[&[f64]], actions: &[usize], targets: &[f64]) -> Result<(f64, Vec<Tensor>)> {
        let b = states.len();
        if b == 0 || actions.len() != b || targets.len() != b {
            return Err(Error::Contract(format!(
                "batch of {b} states, {} actions, {} targets",
                actions.len(),
                targets.len()
            )));
        }
        let width = self.net.input_len();
        let mut flat = Vec::with_capacity(b * width);
        for s in states {
            if s.len() != width {
                return Err(Error::Contract(format!("state has {} values, network expects {width}", s.len())));
            }
            flat.extend_from_slice(s);
        }
        let mut g = Graph::new();
        let (q, params) = self.net.forward(&mut g, Tensor::new(vec![b, width], flat)?)?;
        let taken = g.gather(q, actions)?;
        let loss = g.mse(taken, Tensor::new(vec![b], targets.to_vec())?)?;
        let value = g.value(loss).item()?;
        if !value.is_finite() {
            return Err(Error::Numerical(format!("q-network loss is {value}")));
        }
        let mut grads = g.grad(loss)?;
        let out = params
            .iter()
            .zip(self.net.params().tensors())
            .map(|(&id, t)| grads.take_or_zeros(id, t))
            .collect();
        Ok((value, out))
    }

    /// One Adam step; returns the loss before the update.
    pub fn train_step(&mut self, states: &[&[f64]], actions: &[usize], targets: &[f64], lr: f64) -> Result<f64> {
        let (loss, grads) = self.loss_and_grads(states, actions, targets)?;
        self.adam.step(self.net.params_mut(), &grads, lr)?;
        Ok(loss)
    }

    /// TD targets from `target` followed by one training step on `batch`.
    pub fn train_on_batch(&mut self, batch: &[&Transition], target: &QNetwork, gamma: f64, lr: f64) -> Result<f64> {
        let mut targets = Vec::with_capacity(batch.len());
        for t in batch {
            targets.push(td_target(t.reward, target.q_values(t.next_state.as_slice())?, gamma));
        }
        let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        self.train_step(&states, &actions, &targets, lr)
    }
}

/// Copies policy weights into the target when `step` is a multiple of
/// `period`; returns whether a copy happened.
pub fn sync_target(policy: &QNetwork, target: &mut QNetwork, step: usize, period: usize) -> bool {
    if period > 0 && step.is_multiple_of(period) {
        target.copy_from(policy);
        true
    } else {
        false
    }
}
