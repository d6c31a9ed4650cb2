use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::tensor::Tensor;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Moment accumulators for an Adam optimizer over one [`ParamSet`].
#[derive(Clone, Debug)]
pub struct AdamState {
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        AdamState {
            first: zeros.clone(),
            second: zeros,
            step: 0,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update. A non-finite gradient aborts the step
    /// before any parameter or accumulator is touched.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor], lr: f64) -> Result<()> {
        if grads.len() != params.len() || grads.len() != self.first.len() {
            return Err(Error::Shape(format!(
                "{} gradients for {} parameters ({} accumulators)",
                grads.len(),
                params.len(),
                self.first.len()
            )));
        }
        for (i, (g, p)) in grads.iter().zip(params.tensors()).enumerate() {
            if g.shape() != p.shape() {
                return Err(Error::Shape(format!(
                    "gradient {i} has shape {:?}, parameter {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
            if !g.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite gradient for parameter {}",
                    params.names()[i]
                )));
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let correction1 = 1.0 - self.beta1.powi(t);
        let correction2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .tensors_mut()
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            for (((w, g), m), v) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                *w -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_set(v: f64) -> ParamSet {
        let mut set = ParamSet::new();
        set.insert("w", Tensor::scalar(v));
        set
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut params = scalar_set(1.25);
        let mut state = AdamState::new(&params);
        state.step(&mut params, &[Tensor::scalar(0.0)], 0.1).unwrap();
        assert_eq!(params.get("w").unwrap().data(), &[1.25]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = scalar_set(0.0);
        let mut state = AdamState::new(&params);
        state.step(&mut params, &[Tensor::scalar(1.0)], 0.01).unwrap();
        let w = params.get("w").unwrap().data()[0];
        // m_hat = 1, v_hat = 1 → Δ = lr / (1 + ε)
        assert!((w + 0.01 / (1.0 + EPSILON)).abs() < 1e-15);
    }

    #[test]
    fn descends_quadratic_towards_minimum() {
        let mut params = scalar_set(0.0);
        let mut state = AdamState::new(&params);
        let mut distances = vec![2.0];
        for _ in 0..10 {
            let w = params.get("w").unwrap().data()[0];
            state.step(&mut params, &[Tensor::scalar(2.0 * (w - 2.0))], 0.1).unwrap();
            distances.push((params.get("w").unwrap().data()[0] - 2.0).abs());
        }
        assert!(distances.windows(2).all(|d| d[1] < d[0]), "{distances:?}");
    }

    #[test]
    fn non_finite_gradient_aborts_without_update() {
        let mut params = scalar_set(3.0);
        let mut state = AdamState::new(&params);
        let bad = Tensor::from_parts(vec![1], vec![f64::INFINITY]);
        assert!(matches!(state.step(&mut params, &[bad], 0.1), Err(Error::Numerical(_))));
        assert_eq!(params.get("w").unwrap().data(), &[3.0]);
        assert_eq!(state.step_count(), 0);
    }
}
