//! Scan-position encoding `z2` and state composition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexMode {
    None,
    Integer,
    OneHot,
}

impl IndexMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(IndexMode::None),
            "integer" => Ok(IndexMode::Integer),
            "one-hot" | "onehot" | "one_hot" => Ok(IndexMode::OneHot),
            other => Err(Error::Config(format!("unknown index mode {other:?} (none, integer, one-hot)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IndexMode::None => "none",
            IndexMode::Integer => "integer",
            IndexMode::OneHot => "one-hot",
        }
    }

    pub fn encoded_len(self, d: usize) -> usize {
        match self {
            IndexMode::None => 0,
            IndexMode::Integer => 1,
            IndexMode::OneHot => d,
        }
    }
}

/// Encodes feature index `i` of `d`. The integer mode is normalized to
/// `i / (d − 1)` so it stays on the scale of the tanh latent.
pub fn index_encoding(i: usize, d: usize, mode: IndexMode) -> Result<Vec<f64>> {
    if i >= d {
        return Err(Error::Contract(format!("index {i} outside {d} features")));
    }
    Ok(match mode {
        IndexMode::None => Vec::new(),
        IndexMode::Integer => vec![if d > 1 { i as f64 / (d - 1) as f64 } else { 0.0 }],
        IndexMode::OneHot => {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            v
        }
    })
}

/// DQN input: `z1` followed by `z2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn compose_state(z1: &[f64], z2: &[f64]) -> StateVector {
    let mut v = Vec::with_capacity(z1.len() + z2.len());
    v.extend_from_slice(z1);
    v.extend_from_slice(z2);
    StateVector(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodings() {
        assert_eq!(index_encoding(0, 4, IndexMode::OneHot).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(index_encoding(3, 4, IndexMode::Integer).unwrap(), vec![1.0]);
        assert!(index_encoding(2, 4, IndexMode::None).unwrap().is_empty());
        assert!(index_encoding(4, 4, IndexMode::OneHot).is_err());
    }

    #[test]
    fn composition_lengths() {
        let z1 = vec![0.5; 480];
        let z2 = index_encoding(7, 54, IndexMode::OneHot).unwrap();
        assert_eq!(compose_state(&z1, &z2).len(), 534);
        assert_eq!(compose_state(&z1, &[]).0, z1);
    }
}
