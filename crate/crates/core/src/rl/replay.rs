//! FIFO experience replay.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;

use crate::cae::StateVector;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateVector,
}

#[derive(Clone, Debug)]
pub struct ReplayMemory {
    buffer: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be at least 1".into()));
        }
        Ok(ReplayMemory { buffer: VecDeque::with_capacity(capacity), capacity })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// Appends, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buffer.iter()
    }

    /// Uniform sample without replacement. An underfilled memory reports
    /// [`Error::WarmingUp`] so the caller can skip training.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if batch == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.buffer.len() < batch {
            return Err(Error::WarmingUp { have: self.buffer.len(), need: batch });
        }
        Ok(index::sample(rng, self.buffer.len(), batch).into_iter().map(|i| &self.buffer[i]).collect())
    }
}
