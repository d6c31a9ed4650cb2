//! Convolutional auto-encoder whose bottleneck is a spatial pyramid pooling
//! layer, so any `n×m` input image yields a latent of fixed length.
//!
//! Encoder: conv→tanh→pool→conv→tanh→pool→conv→tanh→SPP.
//! Decoder: inverse SPP→upsample→conv→tanh→upsample→conv→tanh→conv.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spp::{bins_per_map, validate_levels};
use crate::adam::AdamState;
use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::params::ParamSet;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct CaeConfig {
    /// Encoder conv widths followed by decoder conv widths; the last is 1.
    pub filters: Vec<usize>,
    pub levels: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub steps_per_env_step: usize,
    /// Maximum rows of the data matrix fed to the auto-encoder.
    pub row_cap: usize,
}

impl Default for CaeConfig {
    fn default() -> Self {
        CaeConfig {
            filters: vec![16, 32, 16, 32, 16, 1],
            levels: vec![1, 2, 3, 4],
            epochs: 10,
            lr: 0.005,
            steps_per_env_step: 1,
            row_cap: 256,
        }
    }
}

impl CaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.filters.len() != 6 || self.filters.contains(&0) {
            return Err(Error::Config(format!(
                "cae.filters needs six positive widths, got {:?}",
                self.filters
            )));
        }
        if self.filters[5] != 1 {
            return Err(Error::Config("the last cae filter must be 1 (single-channel reconstruction)".into()));
        }
        validate_levels(&self.levels)?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("cae.lr must be positive, got {}", self.lr)));
        }
        if self.row_cap == 0 {
            return Err(Error::Config("cae.row_cap must be at least 1".into()));
        }
        Ok(())
    }
}

const PARAM_NAMES: [&str; 6] = ["enc1", "enc2", "enc3", "dec1", "dec2", "dec3"];

/// Node ids produced by one forward pass.
#[derive(Debug)]
pub struct CaeForward {
    pub latent: NodeId,
    pub reconstruction: NodeId,
    pub params: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct CaeModel {
    params: ParamSet,
    adam: AdamState,
    filters: Vec<usize>,
    levels: Vec<usize>,
}

impl CaeModel {
    /// Glorot-normal kernels, zero biases.
    pub fn new(config: &CaeConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = &config.filters;
        let channels = [(1, f[0]), (f[0], f[1]), (f[1], f[2]), (f[2], f[3]), (f[3], f[4]), (f[4], f[5])];
        let mut params = ParamSet::new();
        for (name, (cin, cout)) in PARAM_NAMES.iter().zip(channels) {
            let std = (2.0 / ((cin + cout) * 9) as f64).sqrt();
            params.insert(format!("{name}.w"), Tensor::randn(&[cout, cin, 3, 3], std, &mut rng));
            params.insert(format!("{name}.b"), Tensor::zeros(&[cout]));
        }
        Self::from_params(params, config.filters.clone(), config.levels.clone())
    }

    pub fn from_params(params: ParamSet, filters: Vec<usize>, levels: Vec<usize>) -> Result<Self> {
        validate_levels(&levels)?;
        let expected: Vec<String> = PARAM_NAMES
            .iter()
            .flat_map(|n| [format!("{n}.w"), format!("{n}.b")])
            .collect();
        if params.names() != expected.as_slice() {
            return Err(Error::Load(format!("auto-encoder parameters must be {expected:?}")));
        }
        let adam = AdamState::new(&params);
        Ok(CaeModel { params, adam, filters, levels })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Number of feature maps entering the pyramid layer.
    pub fn maps(&self) -> usize {
        self.filters[2]
    }

    pub fn latent_len(&self) -> usize {
        self.maps() * bins_per_map(&self.levels)
    }

    pub fn image(matrix: &Matrix) -> Result<Tensor> {
        Tensor::new(vec![1, matrix.rows, matrix.cols], matrix.data.clone())
    }

    fn load_params(&self, g: &mut Graph) -> Vec<NodeId> {
        self.params.tensors().iter().map(|t| g.param(t.clone())).collect()
    }

    fn encoder(&self, g: &mut Graph, x: NodeId, p: &[NodeId]) -> Result<(NodeId, [(usize, usize); 3])> {
        let (_, h0, w0) = g.value(x).chw()?;
        let a = g.conv2d_same(x, p[0], p[1])?;
        let a = g.tanh(a);
        let a = g.avg_pool2x2(a)?;
        let (_, h1, w1) = g.value(a).chw()?;
        let a = g.conv2d_same(a, p[2], p[3])?;
        let a = g.tanh(a);
        let a = g.avg_pool2x2(a)?;
        let (_, h2, w2) = g.value(a).chw()?;
        let a = g.conv2d_same(a, p[4], p[5])?;
        let a = g.tanh(a);
        let latent = g.spp(a, &self.levels)?;
        Ok((latent, [(h0, w0), (h1, w1), (h2, w2)]))
    }

    /// Full encoder/decoder pass over `image` (shape `[1, h, w]`).
    pub fn forward(&self, g: &mut Graph, image: NodeId) -> Result<CaeForward> {
        let p = self.load_params(g);
        let (latent, [(h0, w0), (h1, w1), (h2, w2)]) = self.encoder(g, image, &p)?;
        let a = g.spp_inverse(latent, &self.levels, self.maps(), h2, w2)?;
        let a = g.upsample_nearest2x(a, h1, w1)?;
        let a = g.conv2d_same(a, p[6], p[7])?;
        let a = g.tanh(a);
        let a = g.upsample_nearest2x(a, h0, w0)?;
        let a = g.conv2d_same(a, p[8], p[9])?;
        let a = g.tanh(a);
        let reconstruction = g.conv2d_same(a, p[10], p[11])?;
        Ok(CaeForward { latent, reconstruction, params: p })
    }

    /// Latent vector `z1` of a non-empty matrix.
    pub fn encode(&self, matrix: &Matrix) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let x = g.input(Self::image(matrix)?);
        let p = self.load_params(&mut g);
        let (latent, _) = self.encoder(&mut g, x, &p)?;
        Ok(g.value(latent).data().to_vec())
    }

    /// Builds the reconstruction-loss graph; returns it with the loss node.
    pub fn loss_graph(&self, matrix: &Matrix) -> Result<(Graph, NodeId, CaeForward)> {
        let mut g = Graph::new();
        let target = Self::image(matrix)?;
        let x = g.input(target.clone());
        let fwd = self.forward(&mut g, x)?;
        let loss = g.mse(fwd.reconstruction, target)?;
        Ok((g, loss, fwd))
    }

    pub fn reconstruction_loss(&self, matrix: &Matrix) -> Result<f64> {
        let (g, loss, _) = self.loss_graph(matrix)?;
        g.value(loss).item()
    }

    /// Reconstruction loss and its gradient for every parameter, in order.
    pub fn loss_and_grads(&self, matrix: &Matrix) -> Result<(f64, Vec<Tensor>)> {
        let (g, loss, fwd) = self.loss_graph(matrix)?;
        let value = g.value(loss).item()?;
        if !value.is_finite() {
            return Err(Error::Numerical(format!("auto-encoder loss is {value}")));
        }
        let mut grads = g.grad(loss)?;
        let out = fwd
            .params
            .iter()
            .zip(self.params.tensors())
            .map(|(&id, t)| grads.take_or_zeros(id, t))
            .collect();
        Ok((value, out))
    }

    /// One Adam step on the reconstruction loss; returns the loss before it.
    pub fn train_step(&mut self, matrix: &Matrix, lr: f64) -> Result<f64> {
        let (loss, grads) = self.loss_and_grads(matrix)?;
        self.adam.step(&mut self.params, &grads, lr)?;
        Ok(loss)
    }

    /// Runs `epochs` Adam steps over the image. The history holds the loss
    /// before each step followed by the final loss, so it has `epochs + 1`
    /// entries.
    pub fn train(&mut self, matrix: &Matrix, epochs: usize, lr: f64) -> Result<Vec<f64>> {
        let mut history = Vec::with_capacity(epochs + 1);
        for _ in 0..epochs {
            history.push(self.train_step(matrix, lr)?);
        }
        let last = self.reconstruction_loss(matrix)?;
        if !last.is_finite() {
            return Err(Error::Numerical(format!("auto-encoder loss is {last}")));
        }
        history.push(last);
        Ok(history)
    }
}

/// `z1` for the selected columns: the encoder output, or zeros when nothing
/// is selected.
pub fn encode_state(selected: Option<&Matrix>, model: &CaeModel) -> Result<Vec<f64>> {
    match selected {
        Some(m) if m.cols > 0 && m.rows > 0 => model.encode(m),
        _ => Ok(vec![0.0; model.latent_len()]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small_config() -> CaeConfig {
        CaeConfig { filters: vec![3, 4, 2, 4, 3, 1], ..CaeConfig::default() }
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn latent_length_is_fixed() {
        let model = CaeModel::new(&CaeConfig::default(), 1).unwrap();
        assert_eq!(model.latent_len(), 480);
        for (r, c) in [(1, 1), (7, 3), (40, 15), (2, 9)] {
            assert_eq!(model.encode(&random_matrix(r, c, 3)).unwrap().len(), 480);
        }
    }

    #[test]
    fn empty_subset_encodes_to_zeros() {
        let model = CaeModel::new(&small_config(), 1).unwrap();
        let z = encode_state(None, &model).unwrap();
        assert_eq!(z, vec![0.0; model.latent_len()]);
    }

    #[test]
    fn encoding_is_deterministic() {
        let model = CaeModel::new(&small_config(), 4).unwrap();
        let m = random_matrix(9, 5, 2);
        assert_eq!(model.encode(&m).unwrap(), model.encode(&m).unwrap());
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let mut model = CaeModel::new(&small_config(), 5).unwrap();
        let before = model.params().clone();
        let m = random_matrix(6, 4, 1);
        let history = model.train(&m, 0, 0.005).unwrap();
        assert_eq!(history, vec![model.reconstruction_loss(&m).unwrap()]);
        assert_eq!(model.params(), &before);
    }

    #[test]
    fn rejects_bad_filters() {
        let cfg = CaeConfig { filters: vec![16, 32, 16, 32, 16, 2], ..CaeConfig::default() };
        assert!(CaeModel::new(&cfg, 0).is_err());
    }
}
