//! Independent oracles and helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scanfs::data::Dataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a − b| / max(|a|, |b|, floor)`. The floor keeps gradients that are
/// essentially zero from turning rounding noise into huge ratios.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central difference of `f` at `x[i]` with step `h`.
pub fn central_diff(x: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let up = f(x);
    x[i] = orig - h;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * h)
}

// --- information-theory oracles, written from the definitions ---

pub fn oracle_entropy(labels: &[usize]) -> f64 {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let n = labels.len() as f64;
    -counts.values().map(|&c| {
        let p = c as f64 / n;
        p * p.log2()
    }).sum::<f64>()
}

pub fn oracle_conditional_entropy(feature: &[usize], labels: &[usize]) -> f64 {
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut marginal: HashMap<usize, usize> = HashMap::new();
    for (&f, &l) in feature.iter().zip(labels) {
        *joint.entry((f, l)).or_default() += 1;
        *marginal.entry(f).or_default() += 1;
    }
    let n = labels.len() as f64;
    let mut h = 0.0;
    for (&(f, _), &c) in &joint {
        let p_joint = c as f64 / n;
        let p_cond = c as f64 / marginal[&f] as f64;
        h -= p_joint * p_cond.log2();
    }
    h
}

/// Equal-width bins with boundaries `min + k·(max − min)/bins`.
pub fn oracle_bins(column: &[f64], bins: usize) -> Vec<usize> {
    let min = column.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return vec![0; column.len()];
    }
    let width = (max - min) / bins as f64;
    column
        .iter()
        .map(|&v| {
            if v == max {
                return bins - 1;
            }
            (0..bins).rev().find(|&k| v >= min + k as f64 * width).unwrap_or(0)
        })
        .collect()
}

pub fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
    let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va.sqrt() * vb.sqrt())
    }
}

pub fn oracle_rd(k: usize, columns: &[Vec<f64>]) -> f64 {
    let d = columns.len();
    if d == 1 {
        return 0.0;
    }
    (0..d)
        .filter(|&j| j != k)
        .map(|j| oracle_pearson(&columns[k], &columns[j]).abs())
        .sum::<f64>()
        / (d - 1) as f64
}

/// A small random table: integer-valued, continuous and occasionally
/// constant columns, with `classes` label values.
pub fn random_table(seed: u64, max_n: usize, max_d: usize, classes: usize) -> Dataset {
    let mut r = rng(seed);
    let n = r.gen_range(8..=max_n);
    let d = r.gen_range(2..=max_d);
    let labels: Vec<i64> = (0..n).map(|i| if i < classes { i as i64 } else { r.gen_range(0..classes as i64) }).collect();
    let columns: Vec<Vec<f64>> = (0..d)
        .map(|_| match r.gen_range(0..6) {
            0 => vec![r.gen_range(-3.0..3.0); n],
            1 | 2 => (0..n).map(|_| r.gen_range(0..5) as f64).collect(),
            3 => labels.iter().map(|&l| l as f64 + r.gen_range(-0.6..0.6)).collect(),
            _ => (0..n).map(|_| r.gen_range(-10.0..10.0)).collect(),
        })
        .collect();
    Dataset::from_columns(columns, &labels).unwrap()
}
