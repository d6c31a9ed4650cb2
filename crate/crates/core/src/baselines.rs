//! Filter and wrapper baselines: information-gain top-K, mRMR, and
//! sequential forward selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{MetricSet, SubsetEvaluator};
use crate::error::{Error, Result};
use crate::subset::FeatureSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    IgTopk,
    Mrmr,
    Sfs,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "ig_topk" | "ig-topk" => Ok(Method::IgTopk),
            "mrmr" => Ok(Method::Mrmr),
            "sfs" => Ok(Method::Sfs),
            other => Err(Error::Config(format!("unknown baseline {other:?} (ig_topk, mrmr, sfs)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::IgTopk => "ig_topk",
            Method::Mrmr => "mrmr",
            Method::Sfs => "sfs",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub method: Method,
    pub k: usize,
    pub features: Vec<String>,
    pub indices: Vec<usize>,
    /// Order in which the method picked features.
    pub pick_order: Vec<usize>,
    pub metrics: BTreeMap<String, MetricSet>,
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::Config(format!("K must lie in 1..={d}, got {k}")));
    }
    Ok(())
}

/// The `k` highest-IG features, ties by ascending index, best first.
pub fn ig_topk(ig: &[f64], k: usize) -> Result<Vec<usize>> {
    check_k(k, ig.len())?;
    let mut order: Vec<usize> = (0..ig.len()).collect();
    order.sort_by(|&a, &b| ig[b].total_cmp(&ig[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

/// Greedy mRMR: the first pick maximizes IG, later picks maximize
/// `IG(f) − mean_{s ∈ S} |ρ(f, s)|`. Ties go to the lower index.
pub fn mrmr(ig: &[f64], corr: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    let d = ig.len();
    check_k(k, d)?;
    if corr.len() != d || corr.iter().any(|row| row.len() != d) {
        return Err(Error::Shape(format!("correlation table must be {d}x{d}")));
    }
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    let mut taken = vec![false; d];
    while picked.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for f in (0..d).filter(|&f| !taken[f]) {
            let redundancy = if picked.is_empty() {
                0.0
            } else {
                picked.iter().map(|&s| corr[f][s].abs()).sum::<f64>() / picked.len() as f64
            };
            let score = ig[f] - redundancy;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((f, score));
            }
        }
        let (f, _) = best.expect("an unpicked feature remains");
        taken[f] = true;
        picked.push(f);
    }
    Ok(picked)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfsTrace {
    /// Features in the order they were added.
    pub order: Vec<usize>,
    /// Accuracy after each addition.
    pub accuracies: Vec<f64>,
    /// Length of the best prefix (the shortest one on ties).
    pub best_len: usize,
}

impl SfsTrace {
    pub fn best_subset(&self, d: usize) -> FeatureSet {
        FeatureSet::from_indices(d, self.order[..self.best_len].iter().copied())
    }
}

/// Sequential forward selection up to `max_k` features, adding at each step
/// the feature that maximizes validation accuracy (ties to the lower index).
pub fn sfs(evaluator: &mut SubsetEvaluator, max_k: usize) -> Result<SfsTrace> {
    let d = evaluator.train_set().n_features();
    check_k(max_k, d)?;
    let mut current = FeatureSet::empty(d);
    let mut order = Vec::with_capacity(max_k);
    let mut accuracies = Vec::with_capacity(max_k);
    for _ in 0..max_k {
        let mut best: Option<(usize, f64)> = None;
        for f in (0..d).filter(|&f| !current.contains(f)) {
            let acc = evaluator.accuracy(&current.with(f));
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((f, acc));
            }
        }
        let (f, acc) = best.expect("an unselected feature remains");
        current.insert(f);
        order.push(f);
        accuracies.push(acc);
    }
    let mut best_len = 1;
    for (i, &a) in accuracies.iter().enumerate() {
        if a > accuracies[best_len - 1] {
            best_len = i + 1;
        }
    }
    Ok(SfsTrace { order, accuracies, best_len })
}
