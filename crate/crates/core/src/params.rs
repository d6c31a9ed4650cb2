//! Named parameter sets and the JSON weight checkpoint format.
//!
//! A checkpoint is `{"format": "scanfs-weights", "version": 1, "params":
//! [{"name", "shape", "data"}, ...]}`. Values are written with the shortest
//! representation that parses back to the same `f64`, so a save/load cycle is
//! bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_FORMAT: &str = "scanfs-weights";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        let name = name.into();
        match self.names.iter().position(|n| *n == name) {
            Some(i) => self.tensors[i] = value,
            None => {
                self.names.push(name);
                self.tensors.push(value);
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            params: self
                .iter()
                .map(|(name, t)| CheckpointEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Load(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        let mut set = ParamSet::new();
        for entry in ckpt.params {
            if set.get(&entry.name).is_some() {
                return Err(Error::Load(format!("duplicate parameter {}", entry.name)));
            }
            set.insert(entry.name, Tensor::new(entry.shape, entry.data)?);
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_checkpoint())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_checkpoint(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub params: Vec<CheckpointEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn checkpoint_round_trips_bit_exactly(values in prop::collection::vec(-1e300f64..1e300, 1..40)) {
            let mut set = ParamSet::new();
            let n = values.len();
            set.insert("w", Tensor::new(vec![n], values).unwrap());
            set.insert("b", Tensor::new(vec![1, 1], vec![std::f64::consts::PI]).unwrap());
            let text = serde_json::to_string(&set.to_checkpoint()).unwrap();
            let back = ParamSet::from_checkpoint(serde_json::from_str(&text).unwrap()).unwrap();
            prop_assert_eq!(back.names(), set.names());
            for (a, b) in back.tensors().iter().zip(set.tensors()) {
                prop_assert_eq!(a.shape(), b.shape());
                for (x, y) in a.data().iter().zip(b.data()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn rejects_unknown_version() {
        let mut ckpt = ParamSet::new().to_checkpoint();
        ckpt.version = 99;
        assert!(ParamSet::from_checkpoint(ckpt).is_err());
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        let mut set = ParamSet::new();
        set.insert("x", Tensor::new(vec![2], vec![0.1, 1.0 / 3.0]).unwrap());
        set.save(&path).unwrap();
        assert_eq!(ParamSet::load(&path).unwrap(), set);
    }
}
