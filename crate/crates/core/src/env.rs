//! The scanning environment: visits features in a fixed order, applies
//! select/skip actions, and scores the selected subset.

use serde::{Deserialize, Serialize};

use crate::cae::{compose_state, encode_state, index_encoding, CaeModel, IndexMode, StateVector};
use crate::classify::SubsetEvaluator;
use crate::config::RunConfig;
use crate::data::{row_subsample, scale_to_range, split, Dataset, Matrix, Split};
use crate::error::{Error, Result};
use crate::relevance::{scan_order, RedundancyTable, RelevanceRanking};
use crate::seed::{derive_seed, STREAM_CAE_INIT, STREAM_ROWS, STREAM_SPLIT};
use crate::subset::FeatureSet;

pub const DESELECT: usize = 0;
pub const SELECT: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Validation accuracy of the subset after the action.
    pub ac: f64,
    /// Redundancy penalty actually applied (0 when the penalty is disabled).
    pub rd: f64,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next_state: StateVector,
    pub reward: RewardBreakdown,
    /// Feature scanned by this step.
    pub feature: usize,
    pub done: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardFlags {
    pub redundancy: bool,
    pub deselect_zero: bool,
}

/// Everything a run derives from the data before the first episode.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub split: Split,
    /// Ranking computed on the training rows.
    pub ranking: RelevanceRanking,
    /// Scan order actually used: by relevance, or file order.
    pub order: Vec<usize>,
    pub redundancy: RedundancyTable,
    /// Scaled, row-capped data matrix fed to the auto-encoder.
    pub image: Matrix,
}

impl Prepared {
    pub fn new(dataset: &Dataset, config: &RunConfig) -> Result<Self> {
        let split = split(
            dataset.labels(),
            dataset.n_classes(),
            config.train_fraction,
            derive_seed(config.seed, STREAM_SPLIT),
        )?;
        let train = dataset.subset_rows(&split.train);
        let ranking = scan_order(&train, config.bins);
        let order = if config.order_relevance {
            ranking.order.clone()
        } else {
            (0..dataset.n_features()).collect()
        };
        let redundancy = RedundancyTable::build(&train);
        let image = row_subsample(
            &scale_to_range(&dataset.to_matrix()),
            config.cae.row_cap,
            derive_seed(config.seed, STREAM_ROWS),
        )?;
        Ok(Prepared { split, ranking, order, redundancy, image })
    }
}

#[derive(Debug)]
pub struct ScanEnv {
    order: Vec<usize>,
    rd: Vec<f64>,
    evaluator: SubsetEvaluator,
    image: Matrix,
    cae: CaeModel,
    cae_lr: f64,
    cae_steps: usize,
    index_mode: IndexMode,
    flags: RewardFlags,
    selected: FeatureSet,
    /// Selected features in the order they were added.
    selected_order: Vec<usize>,
    pointer: usize,
    active: bool,
}

impl ScanEnv {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        order: Vec<usize>,
        rd: Vec<f64>,
        evaluator: SubsetEvaluator,
        image: Matrix,
        cae: CaeModel,
        cae_lr: f64,
        cae_steps: usize,
        index_mode: IndexMode,
        flags: RewardFlags,
    ) -> Result<Self> {
        let d = order.len();
        let mut seen = vec![false; d];
        for &f in &order {
            if f >= d || std::mem::replace(&mut seen[f], true) {
                return Err(Error::Contract(format!("scan order {order:?} is not a permutation")));
            }
        }
        if d == 0 || rd.len() != d || image.cols != d || evaluator.train_set().n_features() != d {
            return Err(Error::Shape(format!(
                "order covers {d} features, redundancy {}, image {}, data {}",
                rd.len(),
                image.cols,
                evaluator.train_set().n_features()
            )));
        }
        Ok(ScanEnv {
            order,
            rd,
            evaluator,
            image,
            cae,
            cae_lr,
            cae_steps,
            index_mode,
            flags,
            selected: FeatureSet::empty(d),
            selected_order: Vec::new(),
            pointer: 0,
            active: false,
        })
    }

    /// Builds the environment from a prepared run; the auto-encoder is
    /// initialized from the run seed but not yet trained.
    pub fn from_config(dataset: &Dataset, prepared: &Prepared, config: &RunConfig) -> Result<Self> {
        let evaluator = SubsetEvaluator::new(
            dataset,
            &prepared.split,
            config.reward_classifier,
            config.classifier_settings(),
        )?;
        let cae = CaeModel::new(&config.cae, derive_seed(config.seed, STREAM_CAE_INIT))?;
        ScanEnv::new(
            prepared.order.clone(),
            prepared.redundancy.rd.clone(),
            evaluator,
            prepared.image.clone(),
            cae,
            config.cae.lr,
            config.cae.steps_per_env_step,
            config.index_mode,
            RewardFlags { redundancy: config.reward_redundancy, deselect_zero: config.deselect_zero },
        )
    }

    pub fn n_features(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn state_len(&self) -> usize {
        self.cae.latent_len() + self.index_mode.encoded_len(self.n_features())
    }

    pub fn selected(&self) -> &FeatureSet {
        &self.selected
    }

    pub fn pointer(&self) -> usize {
        self.pointer
    }

    pub fn cae(&self) -> &CaeModel {
        &self.cae
    }

    pub fn image(&self) -> &Matrix {
        &self.image
    }

    pub fn evaluator(&self) -> &SubsetEvaluator {
        &self.evaluator
    }

    pub fn evaluator_mut(&mut self) -> &mut SubsetEvaluator {
        &mut self.evaluator
    }

    /// Trains the auto-encoder on every column of the image; returns the
    /// loss history.
    pub fn pretrain_cae(&mut self, epochs: usize) -> Result<Vec<f64>> {
        self.cae.train(&self.image, epochs, self.cae_lr)
    }

    fn state(&self, position: usize) -> Result<StateVector> {
        let image = (!self.selected_order.is_empty()).then(|| self.image.select_columns(&self.selected_order));
        let z1 = encode_state(image.as_ref(), &self.cae)?;
        let z2 = index_encoding(self.order[position], self.n_features(), self.index_mode)?;
        Ok(compose_state(&z1, &z2))
    }

    /// Starts an episode with nothing selected, pointing at the first
    /// feature of the scan order.
    pub fn reset(&mut self) -> Result<StateVector> {
        self.selected = FeatureSet::empty(self.n_features());
        self.selected_order.clear();
        self.pointer = 0;
        self.active = true;
        self.state(0)
    }

    /// Applies `action` to the feature under the pointer.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if !self.active {
            return Err(Error::Contract("step called on a finished episode; call reset first".into()));
        }
        if action > SELECT {
            return Err(Error::Contract(format!("action must be 0 or 1, got {action}")));
        }
        let feature = self.order[self.pointer];
        if action == SELECT {
            self.selected.insert(feature);
            self.selected_order.push(feature);
        }
        let ac = self.evaluator.accuracy(&self.selected);
        let rd = if self.flags.redundancy { self.rd[feature] } else { 0.0 };
        let reward = if action == DESELECT && self.flags.deselect_zero {
            RewardBreakdown { ac, rd: 0.0, r: 0.0 }
        } else {
            RewardBreakdown { ac, rd, r: ac - rd }
        };

        if !self.selected_order.is_empty() && self.cae_steps > 0 {
            let current = self.image.select_columns(&self.selected_order);
            for _ in 0..self.cae_steps {
                self.cae.train_step(&current, self.cae_lr)?;
            }
        }

        let done = self.pointer + 1 == self.n_features();
        let next_position = if done { self.pointer } else { self.pointer + 1 };
        let next_state = self.state(next_position)?;
        self.pointer += 1;
        self.active = !done;
        Ok(StepOutcome { next_state, reward, feature, done })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cae::CaeConfig;

    fn tiny_env(flags: RewardFlags) -> (ScanEnv, Dataset) {
        // f1 equals the label, f0 is constant, f2 is noise.
        let labels: Vec<i64> = (0..20).map(|i| (i % 2) as i64).collect();
        let cols = vec![
            vec![1.0; 20],
            labels.iter().map(|&l| l as f64).collect(),
            (0..20).map(|i| ((i * 7) % 5) as f64).collect(),
        ];
        let ds = Dataset::from_columns(cols, &labels).unwrap();
        let config = RunConfig {
            cae: CaeConfig { filters: vec![2, 2, 2, 2, 2, 1], ..CaeConfig::default() },
            reward_redundancy: flags.redundancy,
            deselect_zero: flags.deselect_zero,
            train_fraction: 0.5,
            ..RunConfig::default()
        };
        let prepared = Prepared::new(&ds, &config).unwrap();
        (ScanEnv::from_config(&ds, &prepared, &config).unwrap(), ds)
    }

    #[test]
    fn reset_and_first_feature() {
        let (mut env, _) = tiny_env(RewardFlags { redundancy: true, deselect_zero: false });
        let s = env.reset().unwrap();
        assert_eq!(s.len(), env.state_len());
        assert!(env.selected().is_empty());
        assert_eq!(env.order()[0], 1);
        assert!(s.as_slice()[..env.cae().latent_len()].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn perfect_feature_gives_full_accuracy() {
        let (mut env, _) = tiny_env(RewardFlags { redundancy: false, deselect_zero: false });
        env.reset().unwrap();
        let out = env.step(SELECT).unwrap();
        assert_eq!(out.feature, 1);
        assert_eq!(out.reward.ac, 1.0);
        assert_eq!(out.reward.rd, 0.0);
    }

    #[test]
    fn episode_ends_after_every_feature() {
        let (mut env, _) = tiny_env(RewardFlags { redundancy: true, deselect_zero: true });
        let start = env.reset().unwrap();
        let mut steps = 0;
        loop {
            let out = env.step(DESELECT).unwrap();
            assert_eq!(out.reward.r, 0.0);
            assert_eq!(out.next_state.len(), start.len());
            steps += 1;
            if out.done {
                break;
            }
        }
        assert_eq!(steps, 3);
        assert!(matches!(env.step(SELECT), Err(Error::Contract(_))));
    }
}
