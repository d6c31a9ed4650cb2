//! Entropy-based feature relevance and Pearson-based feature redundancy.

use serde::Serialize;

use crate::data::{discretize, Dataset};
use crate::error::{Error, Result};

fn counts(values: &[usize]) -> Vec<usize> {
    let mut c = vec![0usize; values.iter().max().map_or(0, |m| m + 1)];
    for &v in values {
        c[v] += 1;
    }
    c
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    let total = total as f64;
    -counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Shannon entropy of the label distribution, in bits.
pub fn entropy(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    entropy_of_counts(counts(labels).into_iter(), labels.len())
}

/// `H(c | f)` for a discretized feature, in bits.
pub fn conditional_entropy(feature_binned: &[usize], labels: &[usize]) -> Result<f64> {
    if feature_binned.len() != labels.len() {
        return Err(Error::Contract(format!(
            "feature has {} values, labels {}",
            feature_binned.len(),
            labels.len()
        )));
    }
    let n = labels.len();
    if n == 0 {
        return Ok(0.0);
    }
    let n_values = feature_binned.iter().max().map_or(0, |m| m + 1);
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; n_values * n_classes];
    for (&v, &c) in feature_binned.iter().zip(labels) {
        joint[v * n_classes + c] += 1;
    }
    let mut h = 0.0;
    for v in 0..n_values {
        let row = &joint[v * n_classes..(v + 1) * n_classes];
        let total: usize = row.iter().sum();
        if total == 0 {
            continue;
        }
        h += total as f64 / n as f64 * entropy_of_counts(row.iter().copied(), total);
    }
    Ok(h)
}

/// `IG = H(c) − H(c | f)`, with rounding noise below zero clamped away.
pub fn information_gain(feature_binned: &[usize], labels: &[usize]) -> Result<f64> {
    let ig = entropy(labels) - conditional_entropy(feature_binned, labels)?;
    Ok(ig.max(0.0))
}

/// Information-gain scores and the scan order they induce.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelevanceRanking {
    pub ig_scores: Vec<f64>,
    /// Feature indices by non-increasing IG, ties by ascending index.
    pub order: Vec<usize>,
}

impl RelevanceRanking {
    pub fn from_scores(ig_scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..ig_scores.len()).collect();
        order.sort_by(|&a, &b| ig_scores[b].total_cmp(&ig_scores[a]).then(a.cmp(&b)));
        RelevanceRanking { ig_scores, order }
    }

    /// 1-based rank of each feature.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len()];
        for (pos, &f) in self.order.iter().enumerate() {
            ranks[f] = pos + 1;
        }
        ranks
    }
}

/// IG of every feature after equal-width discretization into `bins` bins.
pub fn ig_scores(dataset: &Dataset, bins: usize) -> Vec<f64> {
    dataset
        .columns()
        .iter()
        .map(|col| information_gain(&discretize(col, bins), dataset.labels()).expect("column length matches labels"))
        .collect()
}

pub fn scan_order(dataset: &Dataset, bins: usize) -> RelevanceRanking {
    RelevanceRanking::from_scores(ig_scores(dataset, bins))
}

/// Pearson correlation with population moments; 0 when either column is
/// constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "pearson needs equal-length columns");
    let n = a.len() as f64;
    if a.len() < 2 {
        return 0.0;
    }
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// `Rd(f_k)`: mean absolute correlation of `k` with every other feature.
pub fn global_redundancy(k: usize, corr: &[Vec<f64>]) -> f64 {
    let d = corr.len();
    if d <= 1 {
        return 0.0;
    }
    let sum: f64 = (0..d).filter(|&j| j != k).map(|j| corr[k][j].abs()).sum();
    (sum / (d - 1) as f64).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RedundancyTable {
    pub corr: Vec<Vec<f64>>,
    pub rd: Vec<f64>,
}

impl RedundancyTable {
    #[allow(clippy::needless_range_loop)] // symmetric fill reads clearer indexed
    pub fn build(dataset: &Dataset) -> Self {
        let d = dataset.n_features();
        let mut corr = vec![vec![0.0; d]; d];
        for k in 0..d {
            let col = dataset.column(k);
            let constant = col.iter().all(|&v| v == col[0]);
            corr[k][k] = if constant { 0.0 } else { 1.0 };
            for j in k + 1..d {
                let r = pearson(col, dataset.column(j));
                corr[k][j] = r;
                corr[j][k] = r;
            }
        }
        let rd = (0..d).map(|k| global_redundancy(k, &corr)).collect();
        RedundancyTable { corr, rd }
    }
}
