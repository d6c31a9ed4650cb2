//! Tabular data loading, stratified splitting, scaling and discretization.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use log::warn;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which CSV column holds the class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// A bare non-negative integer is an index, anything else a header name.
    pub fn parse(spec: &str) -> Self {
        match spec.trim().parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(spec.trim().to_string()),
        }
    }
}

/// Samples × features matrix with integer-coded class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Feature-major storage: `columns[k][row]`.
    columns: Vec<Vec<f64>>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_values: Vec<String>,
}

impl Dataset {
    pub fn new(
        columns: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_values: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::Load(format!("need at least 2 samples, got {n}")));
        }
        if columns.is_empty() {
            return Err(Error::Load("need at least one feature column".into()));
        }
        if feature_names.len() != columns.len() {
            return Err(Error::Load(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                columns.len()
            )));
        }
        for (k, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Load(format!("feature {k} has {} values, expected {n}", col.len())));
            }
            if let Some(r) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Load(format!("feature {k} row {r} is not finite")));
            }
        }
        if let Some(bad) = labels.iter().find(|&&c| c >= class_values.len()) {
            return Err(Error::Load(format!(
                "label index {bad} outside {} classes",
                class_values.len()
            )));
        }
        Ok(Dataset { columns, labels, feature_names, class_values })
    }

    /// Builds a dataset from integer labels, naming classes by their value.
    pub fn from_columns(columns: Vec<Vec<f64>>, labels: &[i64]) -> Result<Self> {
        let mut distinct: Vec<i64> = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let coded = labels
            .iter()
            .map(|l| distinct.binary_search(l).expect("label present"))
            .collect();
        let names = (0..columns.len()).map(|k| format!("f{k}")).collect();
        let classes = distinct.iter().map(|v| v.to_string()).collect();
        Dataset::new(columns, coded, names, classes)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_values.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_values(&self) -> &[String] {
        &self.class_values
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Row-restricted copy, keeping rows in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            feature_names: self.feature_names.clone(),
            class_values: self.class_values.clone(),
        }
    }

    /// Row-major `n × D` matrix of all features.
    pub fn to_matrix(&self) -> Matrix {
        let (n, d) = (self.n_samples(), self.n_features());
        let mut data = Vec::with_capacity(n * d);
        for r in 0..n {
            data.extend(self.columns.iter().map(|c| c[r]));
        }
        Matrix { rows: n, cols: d, data }
    }

    /// Writes the dataset as CSV with a header, label in the last column.
    pub fn save_csv(&self, path: &Path, label_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.feature_names.clone();
        header.push(label_name.to_string());
        w.write_record(&header)?;
        for r in 0..self.n_samples() {
            let mut rec: Vec<String> = self.columns.iter().map(|c| c[r].to_string()).collect();
            rec.push(self.class_values[self.labels[r]].clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Orders class labels numerically when every label parses as a number,
/// lexicographically otherwise.
fn sort_classes(values: &mut [String]) {
    let numeric: Option<Vec<f64>> = values.iter().map(|v| v.parse::<f64>().ok()).collect();
    if numeric.is_some() {
        values.sort_by(|a, b| {
            let (x, y) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
            x.total_cmp(&y).then_with(|| a.cmp(b))
        });
    } else {
        values.sort();
    }
}

pub fn load_csv(path: &Path, label: &LabelColumn, has_header: bool) -> Result<Dataset> {
    let mut text = String::new();
    File::open(path)
        .map_err(|e| Error::Load(format!("{}: {e}", path.display())))?
        .read_to_string(&mut text)?;
    parse_csv(&text, label, has_header)
}

pub fn parse_csv(text: &str, label: &LabelColumn, has_header: bool) -> Result<Dataset> {
    if text.trim().is_empty() {
        return Err(Error::Load("empty file".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let mut first_line = 1;
    let header: Option<Vec<String>> = if has_header {
        first_line = 2;
        let rec = records.next().ok_or_else(|| Error::Load("empty file".into()))??;
        let names: Vec<String> = rec.iter().map(|s| s.trim().to_string()).collect();
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Load(format!("duplicate header name {name:?}")));
            }
        }
        Some(names)
    } else {
        None
    };

    let rows: Vec<csv::StringRecord> = records.collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::Load("no data rows".into()));
    }
    let width = header.as_ref().map_or(rows[0].len(), Vec::len);
    let label_idx = match (label, &header) {
        (LabelColumn::Index(i), _) => *i,
        (LabelColumn::Name(name), Some(h)) => h
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Load(format!("label column {name:?} not in header")))?,
        (LabelColumn::Name(name), None) => {
            return Err(Error::Load(format!("label column {name:?} given by name but file has no header")))
        }
    };
    if label_idx >= width {
        return Err(Error::Load(format!("label column {label_idx} outside {width} columns")));
    }

    let feature_cols: Vec<usize> = (0..width).filter(|&c| c != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(Error::Load("no feature columns besides the label".into()));
    }
    let feature_names = match &header {
        Some(h) => feature_cols.iter().map(|&c| h[c].clone()).collect(),
        None => feature_cols.iter().map(|&c| format!("col{c}")).collect(),
    };

    let mut columns = vec![Vec::with_capacity(rows.len()); feature_cols.len()];
    let mut raw_labels = Vec::with_capacity(rows.len());
    for (r, rec) in rows.iter().enumerate() {
        let line = r + first_line;
        if rec.len() != width {
            return Err(Error::Load(format!("line {line}: {} cells, expected {width}", rec.len())));
        }
        for (k, &c) in feature_cols.iter().enumerate() {
            let cell = rec[c].trim();
            let value: f64 = cell.parse().map_err(|_| {
                Error::Load(format!("line {line}, column {c}: cannot parse {cell:?} as a number"))
            })?;
            if !value.is_finite() {
                return Err(Error::Load(format!("line {line}, column {c}: non-finite value")));
            }
            columns[k].push(value);
        }
        let lab = rec[label_idx].trim();
        if lab.is_empty() {
            return Err(Error::Load(format!("line {line}, column {label_idx}: empty label")));
        }
        raw_labels.push(lab.to_string());
    }

    let mut class_values: Vec<String> = raw_labels.iter().cloned().collect::<HashSet<_>>().into_iter().collect();
    sort_classes(&mut class_values);
    let labels = raw_labels
        .iter()
        .map(|l| class_values.iter().position(|c| c == l).expect("class collected"))
        .collect();
    Dataset::new(columns, labels, feature_names, class_values)
}

/// Disjoint train/validation row indices, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
}

/// Stratified split. The validation total is `round(n·(1−f))`, shared among
/// classes by largest remainder; classes with fewer than two samples go
/// entirely to training.
pub fn split(labels: &[usize], n_classes: usize, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let n = labels.len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let valid_fraction = 1.0 - train_fraction;
    let target_valid = (n as f64 * valid_fraction).round() as usize;

    let eligible: Vec<usize> = (0..n_classes).filter(|&c| by_class[c].len() >= 2).collect();
    for (c, rows) in by_class.iter().enumerate() {
        if rows.len() == 1 {
            warn!("class {c} has a single sample; keeping it in the training split");
        }
    }
    let eligible_total: usize = eligible.iter().map(|&c| by_class[c].len()).sum();
    let mut quota = vec![0usize; n_classes];
    let mut remainders = Vec::new();
    if eligible_total > 0 {
        let target = target_valid.min(eligible_total);
        let mut assigned = 0;
        for &c in &eligible {
            let exact = target as f64 * by_class[c].len() as f64 / eligible_total as f64;
            quota[c] = exact.floor() as usize;
            assigned += quota[c];
            remainders.push((exact - exact.floor(), c));
        }
        remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, c) in &remainders {
            if assigned >= target {
                break;
            }
            if quota[c] + 1 < by_class[c].len() {
                quota[c] += 1;
                assigned += 1;
            }
        }
        for &c in &eligible {
            quota[c] = quota[c].min(by_class[c].len() - 1);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(n);
    let mut valid = Vec::new();
    for (c, rows) in by_class.iter_mut().enumerate() {
        rows.shuffle(&mut rng);
        valid.extend_from_slice(&rows[..quota[c]]);
        train.extend_from_slice(&rows[quota[c]..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    Ok(Split { train, valid })
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Shape(format!("{rows}x{cols} matrix with {} values", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Matrix { rows: self.rows, cols: cols.len(), data }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        Matrix { rows: rows.len(), cols: self.cols, data }
    }
}

/// Per-column affine map sending the column minimum to −1 and maximum to +1.
/// Constant columns map to 0.
pub fn scale_to_range(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for c in 0..m.cols {
        let (lo, hi) = (0..m.rows).map(|r| m.get(r, c)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        let span = hi - lo;
        for r in 0..m.rows {
            let v = &mut out.data[r * m.cols + c];
            *v = if span > 0.0 { (*v - lo) / span * 2.0 - 1.0 } else { 0.0 };
        }
    }
    out
}

/// Seeded uniform row sample without replacement, original order kept.
pub fn row_subsample(m: &Matrix, cap: usize, seed: u64) -> Result<Matrix> {
    if cap == 0 {
        return Err(Error::Config("row cap must be at least 1".into()));
    }
    if m.rows <= cap {
        return Ok(m.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = index::sample(&mut rng, m.rows, cap).into_vec();
    rows.sort_unstable();
    Ok(m.select_rows(&rows))
}

/// Equal-width binning over `[min, max]`; the maximum falls in the last bin
/// and a constant column is all zeros.
pub fn discretize(column: &[f64], bins: usize) -> Vec<usize> {
    assert!(bins >= 2, "bin count must be at least 2");
    let (lo, hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        return vec![0; column.len()];
    }
    column
        .iter()
        .map(|&v| (((v - lo) / span * bins as f64).floor() as usize).min(bins - 1))
        .collect()
}
