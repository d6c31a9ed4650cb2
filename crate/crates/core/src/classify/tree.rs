//! CART decision tree with Gini impurity.

use rand::seq::index;
use rand::Rng;

/// Training data viewed column-wise: `columns[k][sample]`.
pub type Columns<'a> = [&'a [f64]];

#[derive(Clone, Debug, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: Some(8), min_leaf: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Leaf {
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub n_classes: usize,
}

/// Index of the largest count, lowest index on ties.
pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

impl DecisionTree {
    /// Predicts one sample, given its feature values in training column order.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { counts } => return argmax_count(counts),
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

fn class_counts(labels: &[usize], samples: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &s in samples {
        counts[labels[s]] += 1;
    }
    counts
}

/// `Σ c²/n`; larger is purer. Weighted child impurity is minimized exactly
/// when the sum of this quantity over the children is maximized.
fn purity(counts: &[usize], n: usize) -> f64 {
    counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n as f64
}

pub(crate) struct TreeBuilder<'a, 'r, R: Rng> {
    pub columns: &'a Columns<'a>,
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub params: &'a TreeParams,
    /// Per-split feature subsample size and its RNG; `None` considers all.
    pub feature_sampler: Option<(usize, &'r mut R)>,
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
    split_at: usize,
    order: Vec<usize>,
}

impl<R: Rng> TreeBuilder<'_, '_, R> {
    pub fn build(&mut self, samples: Vec<usize>) -> DecisionTree {
        let root = self.grow(samples, 0);
        DecisionTree { root, n_classes: self.n_classes }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.columns.len();
        match &mut self.feature_sampler {
            Some((k, rng)) if *k < d => {
                let mut f = index::sample(*rng, d, *k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> TreeNode {
        let counts = class_counts(self.labels, &samples, self.n_classes);
        let n = samples.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|m| depth >= m);
        let min_leaf = self.params.min_leaf.max(1);
        if pure || depth_capped || n < 2 * min_leaf {
            return TreeNode::Leaf { counts };
        }

        let parent_score = purity(&counts, n);
        let mut best: Option<Candidate> = None;
        for feature in self.candidate_features() {
            let col = self.columns[feature];
            let mut order = samples.clone();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut left = vec![0usize; self.n_classes];
            let mut right = counts.clone();
            let mut local: Option<(f64, usize)> = None;
            for p in 1..n {
                let moved = self.labels[order[p - 1]];
                left[moved] += 1;
                right[moved] -= 1;
                if p < min_leaf || n - p < min_leaf || col[order[p - 1]] == col[order[p]] {
                    continue;
                }
                let score = purity(&left, p) + purity(&right, n - p);
                if local.is_none_or(|(s, _)| score > s) {
                    local = Some((score, p));
                }
            }
            if let Some((score, p)) = local {
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let lo = col[order[p - 1]];
                    let hi = col[order[p]];
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Candidate { score, feature, threshold, split_at: p, order });
                }
            }
        }

        match best {
            Some(c) if c.score > parent_score + 1e-12 => {
                let mut order = c.order;
                let right_samples = order.split_off(c.split_at);
                let left = self.grow(order, depth + 1);
                let right = self.grow(right_samples, depth + 1);
                TreeNode::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            _ => TreeNode::Leaf { counts },
        }
    }
}

/// Greedy CART training over all features. Ties between candidate splits go
/// to the lower feature index, then the lower threshold.
pub fn train_tree(columns: &Columns<'_>, labels: &[usize], n_classes: usize, params: &TreeParams) -> DecisionTree {
    let samples = (0..labels.len()).collect();
    let mut builder: TreeBuilder<'_, '_, rand_chacha::ChaCha8Rng> = TreeBuilder {
        columns,
        labels,
        n_classes,
        params,
        feature_sampler: None,
    };
    builder.build(samples)
}
