//! Deep Q-learning machinery.

pub mod dqn;
pub mod qnet;
pub mod replay;

pub use dqn::{epsilon_greedy, sync_target, td_target, DqnConfig, Learner};
pub use qnet::{QNetwork, N_ACTIONS};
pub use replay::{ReplayMemory, Transition};
