//! One-hidden-layer ReLU Q-network with two linear outputs
//! (index 0 = deselect, index 1 = select).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::ops;
use crate::params::ParamSet;
use crate::tensor::Tensor;

pub const N_ACTIONS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    params: ParamSet,
    input_len: usize,
    hidden: usize,
}

impl QNetwork {
    /// He-normal weights, zero biases.
    pub fn new(input_len: usize, hidden: usize, seed: u64) -> Result<Self> {
        if input_len == 0 || hidden == 0 {
            return Err(Error::Config(format!(
                "q-network needs positive widths, got input {input_len}, hidden {hidden}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        params.insert("hidden.w", Tensor::randn(&[input_len, hidden], (2.0 / input_len as f64).sqrt(), &mut rng));
        params.insert("hidden.b", Tensor::zeros(&[hidden]));
        params.insert("out.w", Tensor::randn(&[hidden, N_ACTIONS], (2.0 / hidden as f64).sqrt(), &mut rng));
        params.insert("out.b", Tensor::zeros(&[N_ACTIONS]));
        Ok(QNetwork { params, input_len, hidden })
    }

    pub fn from_params(params: ParamSet) -> Result<Self> {
        let shape = |n: &str| params.get(n).map(|t| t.shape().to_vec());
        match (shape("hidden.w"), shape("hidden.b"), shape("out.w"), shape("out.b")) {
            (Some(hw), Some(hb), Some(ow), Some(ob))
                if params.len() == 4
                    && hw.len() == 2
                    && hb == [hw[1]]
                    && ow == [hw[1], N_ACTIONS]
                    && ob == [N_ACTIONS] =>
            {
                Ok(QNetwork { input_len: hw[0], hidden: hw[1], params })
            }
            _ => Err(Error::Load("q-network checkpoint must hold hidden.{w,b} and out.{w,b} with matching shapes".into())),
        }
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Adds the forward pass for a `[B, input_len]` batch to `g`; returns the
    /// `[B, 2]` output node and the parameter nodes in checkpoint order.
    pub fn forward(&self, g: &mut Graph, batch: Tensor) -> Result<(NodeId, Vec<NodeId>)> {
        if batch.shape().len() != 2 || batch.shape()[1] != self.input_len {
            return Err(Error::Contract(format!(
                "q-network expects [B, {}] input, got {:?}",
                self.input_len,
                batch.shape()
            )));
        }
        let x = g.input(batch);
        let p: Vec<NodeId> = self.params.tensors().iter().map(|t| g.param(t.clone())).collect();
        let h = g.dense(x, p[0], p[1])?;
        let h = g.relu(h);
        let q = g.dense(h, p[2], p[3])?;
        Ok((q, p))
    }

    /// `(Q(s, deselect), Q(s, select))`.
    pub fn q_values(&self, state: &[f64]) -> Result<[f64; 2]> {
        if state.len() != self.input_len {
            return Err(Error::Contract(format!(
                "state has {} values, network expects {}",
                state.len(),
                self.input_len
            )));
        }
        // Same kernels as `forward`, without copying the weights into a graph.
        let p = self.params.tensors();
        let x = Tensor::new(vec![1, self.input_len], state.to_vec())?;
        let mut h = ops::dense(&x, &p[0], &p[1])?;
        h.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        let q = ops::dense(&h, &p[2], &p[3])?;
        let d = q.data();
        Ok([d[0], d[1]])
    }

    /// Bit-exact copy of `other`'s weights.
    pub fn copy_from(&mut self, other: &QNetwork) {
        self.params = other.params.clone();
        self.input_len = other.input_len;
        self.hidden = other.hidden;
    }
}
