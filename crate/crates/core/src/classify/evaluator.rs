//! Validation accuracy of a classifier restricted to a feature subset.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::forest::{train_forest, ForestParams};
use super::metrics::{accuracy, metrics, MetricSet};
use super::tree::{argmax_count, train_tree, TreeParams};
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::subset::FeatureSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Tree,
    Forest,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Tree => "tree",
            ClassifierKind::Forest => "forest",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "tree" => Ok(ClassifierKind::Tree),
            "forest" => Ok(ClassifierKind::Forest),
            other => Err(Error::Config(format!("unknown classifier {other:?} (expected tree or forest)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierSettings {
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub forest_seed: u64,
}

/// Trains `kind` on the training rows of `subset` and predicts the
/// validation rows. An empty subset predicts the training majority class.
pub fn predict_validation(
    train: &Dataset,
    valid: &Dataset,
    subset: &FeatureSet,
    kind: ClassifierKind,
    settings: &ClassifierSettings,
) -> Vec<usize> {
    let features = subset.indices();
    if features.is_empty() {
        let mut counts = vec![0usize; train.n_classes()];
        for &l in train.labels() {
            counts[l] += 1;
        }
        return vec![argmax_count(&counts); valid.n_samples()];
    }
    let columns: Vec<&[f64]> = features.iter().map(|&k| train.column(k)).collect();
    let rows = (0..valid.n_samples()).map(|r| features.iter().map(|&k| valid.column(k)[r]).collect::<Vec<f64>>());
    match kind {
        ClassifierKind::Tree => {
            let tree = train_tree(&columns, train.labels(), train.n_classes(), &settings.tree);
            rows.map(|row| tree.predict_row(&row)).collect()
        }
        ClassifierKind::Forest => {
            let forest = train_forest(&columns, train.labels(), train.n_classes(), &settings.forest, settings.forest_seed);
            rows.map(|row| forest.predict_row(&row)).collect()
        }
    }
}

/// Memoized `AC_E` over a fixed split and classifier.
#[derive(Debug)]
pub struct SubsetEvaluator {
    train: Dataset,
    valid: Dataset,
    kind: ClassifierKind,
    settings: ClassifierSettings,
    cache: HashMap<FeatureSet, f64>,
}

impl SubsetEvaluator {
    pub fn new(dataset: &Dataset, split: &Split, kind: ClassifierKind, settings: ClassifierSettings) -> Result<Self> {
        if split.train.is_empty() || split.valid.is_empty() {
            return Err(Error::Config("both train and validation splits must be non-empty".into()));
        }
        Ok(SubsetEvaluator {
            train: dataset.subset_rows(&split.train),
            valid: dataset.subset_rows(&split.valid),
            kind,
            settings,
            cache: HashMap::new(),
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    pub fn valid_set(&self) -> &Dataset {
        &self.valid
    }

    pub fn accuracy(&mut self, subset: &FeatureSet) -> f64 {
        if let Some(&acc) = self.cache.get(subset) {
            return acc;
        }
        let pred = predict_validation(&self.train, &self.valid, subset, self.kind, &self.settings);
        let acc = accuracy(&pred, self.valid.labels());
        self.cache.insert(subset.clone(), acc);
        acc
    }

    pub fn cached_subsets(&self) -> usize {
        self.cache.len()
    }

    /// Full metric set for `subset` under any classifier kind, uncached.
    pub fn metrics(&self, subset: &FeatureSet, kind: ClassifierKind, positive: usize) -> Result<MetricSet> {
        let pred = predict_validation(&self.train, &self.valid, subset, kind, &self.settings);
        metrics(&pred, self.valid.labels(), self.valid.n_classes(), positive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::forest::ForestParams;

    fn settings() -> ClassifierSettings {
        ClassifierSettings {
            tree: TreeParams::default(),
            forest: ForestParams { n_trees: 5, ..ForestParams::default() },
            forest_seed: 1,
        }
    }

    #[test]
    fn empty_subset_uses_majority_class() {
        let labels: Vec<i64> = (0..20).map(|i| i % 2).collect();
        let noise: Vec<f64> = (0..20).map(|i| ((i * 7) % 11) as f64).collect();
        let ds = Dataset::from_columns(vec![noise], &labels).unwrap();
        let split = crate::data::split(ds.labels(), 2, 0.5, 4).unwrap();
        let mut ev = SubsetEvaluator::new(&ds, &split, ClassifierKind::Tree, settings()).unwrap();
        assert_eq!(ev.accuracy(&FeatureSet::empty(1)), 0.5);
    }

    #[test]
    fn label_copy_feature_is_perfect_and_cached() {
        let labels: Vec<i64> = (0..30).map(|i| (i * 5 % 3 == 0) as i64).collect();
        let copy: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let noise: Vec<f64> = (0..30).map(|i| ((i * 13) % 7) as f64).collect();
        let ds = Dataset::from_columns(vec![noise, copy], &labels).unwrap();
        let split = crate::data::split(ds.labels(), 2, 0.7, 2).unwrap();
        let mut ev = SubsetEvaluator::new(&ds, &split, ClassifierKind::Tree, settings()).unwrap();
        let s = FeatureSet::from_indices(2, [1]);
        assert_eq!(ev.accuracy(&s), 1.0);
        assert_eq!(ev.accuracy(&s), 1.0);
        assert_eq!(ev.cached_subsets(), 1);
    }
}
