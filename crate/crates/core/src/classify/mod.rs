//! Decision tree and random forest classifiers, subset evaluation, metrics.

pub mod evaluator;
pub mod forest;
pub mod metrics;
pub mod tree;

pub use evaluator::{predict_validation, ClassifierKind, ClassifierSettings, SubsetEvaluator};
pub use forest::{train_forest, Forest, ForestParams, MaxFeatures};
pub use metrics::{metrics, MetricSet};
pub use tree::{train_tree, DecisionTree, TreeNode, TreeParams};
