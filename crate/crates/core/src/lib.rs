//! Feature selection by a single scanning deep Q-learning agent.
//!
//! The agent visits features in information-gain order and decides to
//! select or skip each one. Its state is the latent code of a convolutional
//! auto-encoder (with spatial pyramid pooling, so the code has a fixed
//! length) over the currently selected columns, plus an encoding of the scan
//! position. Rewards are validation accuracy minus the scanned feature's
//! average absolute correlation with the others.

pub mod adam;
pub mod baselines;
pub mod cae;
pub mod classify;
pub mod config;
pub mod data;
pub mod env;
pub mod error;
pub mod graph;
pub mod harness;
pub mod ops;
pub mod params;
pub mod relevance;
pub mod report;
pub mod rl;
pub mod seed;
pub mod subset;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
