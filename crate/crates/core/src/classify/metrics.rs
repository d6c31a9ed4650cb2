//! Accuracy, precision, recall and F-measure.
//!
//! Two-class problems use the confusion counts of the configured positive
//! class directly. With more classes, accuracy is correct/total and the other
//! three are macro averages over every class seen in truth or predictions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tp: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tn: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fp: Option<usize>,
    #[serde(rename = "fn", skip_serializing_if = "Option::is_none")]
    pub fn_: Option<usize>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub averaging: String,
    pub samples: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl MetricSet {
    pub fn from_confusion(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        MetricSet {
            tp: Some(tp),
            tn: Some(tn),
            fp: Some(fp),
            fn_: Some(fn_),
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            precision,
            recall,
            f_measure: harmonic(precision, recall),
            averaging: "binary".into(),
            samples: tp + tn + fp + fn_,
        }
    }
}

/// Fraction of matching entries.
pub fn accuracy(predictions: &[usize], truth: &[usize]) -> f64 {
    let correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    ratio(correct, truth.len())
}

pub fn metrics(predictions: &[usize], truth: &[usize], n_classes: usize, positive: usize) -> Result<MetricSet> {
    if predictions.len() != truth.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if let Some(bad) = predictions.iter().chain(truth).find(|&&c| c >= n_classes) {
        return Err(Error::Contract(format!("class {bad} outside {n_classes} known classes")));
    }
    if n_classes == 2 {
        if positive >= 2 {
            return Err(Error::Contract(format!("positive class {positive} outside 2 classes")));
        }
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (&p, &t) in predictions.iter().zip(truth) {
            match (p == positive, t == positive) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        return Ok(MetricSet::from_confusion(tp, fp, fn_, tn));
    }

    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut f_measure = 0.0;
    let mut present = 0usize;
    for c in 0..n_classes {
        let tp = predictions.iter().zip(truth).filter(|(&p, &t)| p == c && t == c).count();
        let predicted = predictions.iter().filter(|&&p| p == c).count();
        let actual = truth.iter().filter(|&&t| t == c).count();
        if predicted == 0 && actual == 0 {
            continue;
        }
        present += 1;
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        precision += p;
        recall += r;
        f_measure += harmonic(p, r);
    }
    let k = present.max(1) as f64;
    Ok(MetricSet {
        tp: None,
        tn: None,
        fp: None,
        fn_: None,
        accuracy: accuracy(predictions, truth),
        precision: precision / k,
        recall: recall / k,
        f_measure: f_measure / k,
        averaging: "macro".into(),
        samples: truth.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 1, 0, 1];
        let m = metrics(&y, &y, 2, 1).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f_measure), (1.0, 1.0, 1.0, 1.0));
        let y = [0, 1, 2, 2, 1];
        let m = metrics(&y, &y, 3, 0).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f_measure), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn confusion_example() {
        let m = MetricSet::from_confusion(3, 1, 2, 4);
        assert!((m.accuracy - 0.7).abs() < 1e-12);
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.6).abs() < 1e-12);
        assert!((m.f_measure - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-12);
    }

    #[test]
    fn unknown_class_is_rejected() {
        assert!(metrics(&[0, 3], &[0, 1], 2, 1).is_err());
    }

    #[test]
    fn f_measure_zero_without_hits() {
        let m = metrics(&[0, 0], &[1, 1], 2, 1).unwrap();
        assert_eq!(m.f_measure, 0.0);
    }

    proptest! {
        #[test]
        fn binary_matches_confusion_counts(pairs in prop::collection::vec((0usize..2, 0usize..2), 1..60)) {
            let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let m = metrics(&pred, &truth, 2, 1).unwrap();
            let count = |p: usize, t: usize| pred.iter().zip(&truth).filter(|(&a, &b)| a == p && b == t).count();
            prop_assert_eq!(m.tp, Some(count(1, 1)));
            prop_assert_eq!(m.fp, Some(count(1, 0)));
            prop_assert_eq!(m.fn_, Some(count(0, 1)));
            prop_assert_eq!(m.tn, Some(count(0, 0)));
        }

        #[test]
        fn metrics_bounded(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60)) {
            let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let m = metrics(&pred, &truth, 4, 0).unwrap();
            for v in [m.accuracy, m.precision, m.recall, m.f_measure] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let m2 = metrics(&pred.iter().map(|&p| p % 2).collect::<Vec<_>>(), &truth.iter().map(|&t| t % 2).collect::<Vec<_>>(), 2, 1).unwrap();
            prop_assert!(m2.f_measure <= m2.precision.max(m2.recall) + 1e-12);
        }
    }
}
