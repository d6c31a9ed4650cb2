use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::{argmax_count, Columns, DecisionTree, TreeBuilder, TreeParams};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaxFeatures {
    /// `ceil(sqrt(D))` features per split.
    Sqrt,
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            tree: TreeParams { max_depth: None, min_leaf: 1 },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    pub tree_seeds: Vec<u64>,
    pub features_per_split: usize,
}

impl Forest {
    /// Majority vote over trees, lowest class index on ties.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let n_classes = self.trees.first().map_or(1, |t| t.n_classes);
        let mut votes = vec![0usize; n_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1;
        }
        argmax_count(&votes)
    }
}

pub fn train_forest(
    columns: &Columns<'_>,
    labels: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> Forest {
    let d = columns.len();
    let n = labels.len();
    let features_per_split = match params.max_features {
        MaxFeatures::Sqrt => ((d as f64).sqrt().ceil() as usize).clamp(1, d),
        MaxFeatures::All => d,
    };
    let n_trees = params.n_trees.max(1);
    let mut trees = Vec::with_capacity(n_trees);
    let mut tree_seeds = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let tree_seed = derive_seed(seed, t as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
        let samples: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut builder = TreeBuilder {
            columns,
            labels,
            n_classes,
            params: &params.tree,
            feature_sampler: Some((features_per_split, &mut rng)),
        };
        trees.push(builder.build(samples));
        tree_seeds.push(tree_seed);
    }
    Forest { trees, tree_seeds, features_per_split }
}
