//! Command implementations shared by the binary and the tests.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{ig_topk, mrmr, sfs, Method, SubsetResult};
use crate::cae::IndexMode;
use crate::classify::{ClassifierKind, MetricSet, SubsetEvaluator};
use crate::config::RunConfig;
use crate::data::{load_csv, split, Dataset};
use crate::error::{Error, Result};
use crate::relevance::{scan_order, RedundancyTable};
use crate::report::RunReport;
use crate::seed::{derive_seed, STREAM_SPLIT};
use crate::subset::FeatureSet;
use crate::train::{positive_class, run_training};

pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let path = config
        .data_path
        .as_ref()
        .ok_or_else(|| Error::Config("data.path is required".into()))?;
    load_csv(path, &config.label_column(), config.header)
}

/// Subset file written next to every report and read by `eval`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskFile {
    pub n_features: usize,
    pub features: Vec<String>,
    pub indices: Vec<usize>,
    pub accuracy: Option<f64>,
}

impl MaskFile {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Resolves the mask against `dataset`, preferring feature names.
    pub fn to_feature_set(&self, dataset: &Dataset) -> Result<FeatureSet> {
        let d = dataset.n_features();
        if self.n_features != d {
            return Err(Error::Load(format!("mask covers {} features, dataset has {d}", self.n_features)));
        }
        let indices = if self.features.is_empty() {
            self.indices.clone()
        } else {
            self.features
                .iter()
                .map(|n| {
                    dataset
                        .feature_index(n)
                        .ok_or_else(|| Error::Load(format!("mask names unknown feature {n:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        if let Some(&bad) = indices.iter().find(|&&i| i >= d) {
            return Err(Error::Load(format!("mask index {bad} is out of range")));
        }
        Ok(FeatureSet::from_indices(d, indices))
    }
}

fn output_dir(config: &RunConfig) -> Result<PathBuf> {
    config
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("output.dir is required".into()))
}

/// Trains and writes the run directory:
/// `config.txt`, `report.json`, `episodes.csv`, `best_mask.json`, and
/// `checkpoints/{cae,policy,target}.json`.
pub fn cmd_select(config: &RunConfig) -> Result<RunReport> {
    let dataset = load_dataset(config)?;
    let dir = output_dir(config)?;
    fs::create_dir_all(dir.join("checkpoints"))?;
    fs::write(dir.join("config.txt"), config.to_text())?;
    let run = run_training(&dataset, config)?;
    run.report.save(&dir.join("report.json"))?;
    run.report.write_episode_csv(&dir.join("episodes.csv"))?;
    let mask = match &run.report.best {
        Some(b) => MaskFile {
            n_features: dataset.n_features(),
            features: b.features.clone(),
            indices: b.indices.clone(),
            accuracy: Some(b.accuracy),
        },
        None => MaskFile { n_features: dataset.n_features(), features: vec![], indices: vec![], accuracy: None },
    };
    fs::write(dir.join("best_mask.json"), serde_json::to_string_pretty(&mask)?)?;
    run.cae.params().save(&dir.join("checkpoints/cae.json"))?;
    run.policy.params().save(&dir.join("checkpoints/policy.json"))?;
    run.target.params().save(&dir.join("checkpoints/target.json"))?;
    Ok(run.report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub features: Vec<String>,
    /// Accuracy under the configured reward classifier.
    pub accuracy: f64,
    pub metrics: BTreeMap<String, MetricSet>,
}

/// Re-scores a saved mask on the run's split, without any training.
pub fn cmd_eval(config: &RunConfig, mask: &MaskFile) -> Result<EvalOutput> {
    let dataset = load_dataset(config)?;
    eval_mask(&dataset, config, &mask.to_feature_set(&dataset)?)
}

pub fn eval_mask(dataset: &Dataset, config: &RunConfig, subset: &FeatureSet) -> Result<EvalOutput> {
    let split = split(
        dataset.labels(),
        dataset.n_classes(),
        config.train_fraction,
        derive_seed(config.seed, STREAM_SPLIT),
    )?;
    let mut evaluator = SubsetEvaluator::new(dataset, &split, config.reward_classifier, config.classifier_settings())?;
    let positive = positive_class(dataset, config.positive.as_deref())?;
    let mut metrics = BTreeMap::new();
    for kind in [ClassifierKind::Tree, ClassifierKind::Forest] {
        metrics.insert(kind.name().to_string(), evaluator.metrics(subset, kind, positive)?);
    }
    Ok(EvalOutput {
        features: subset.indices().iter().map(|&i| dataset.feature_names()[i].clone()).collect(),
        accuracy: evaluator.accuracy(subset),
        metrics,
    })
}

/// Writes `ranking.csv` (feature_name, ig_score, rank) and
/// `correlation.csv` computed on the training rows.
pub fn cmd_rank(config: &RunConfig, dir: &Path) -> Result<()> {
    let dataset = load_dataset(config)?;
    let split = split(
        dataset.labels(),
        dataset.n_classes(),
        config.train_fraction,
        derive_seed(config.seed, STREAM_SPLIT),
    )?;
    let train = dataset.subset_rows(&split.train);
    let ranking = scan_order(&train, config.bins);
    let table = RedundancyTable::build(&train);
    fs::create_dir_all(dir)?;
    let names = dataset.feature_names();

    let mut w = csv::Writer::from_path(dir.join("ranking.csv"))?;
    w.write_record(["feature_name", "ig_score", "rank", "redundancy"])?;
    let ranks = ranking.ranks();
    for &f in &ranking.order {
        w.write_record([
            names[f].clone(),
            ranking.ig_scores[f].to_string(),
            ranks[f].to_string(),
            table.rd[f].to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("correlation.csv"))?;
    let mut header = vec![String::new()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (k, row) in table.corr.iter().enumerate() {
        let mut rec = vec![names[k].clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs one baseline on the run's split. `k` is the subset size for the
/// top-K methods and the maximum size for SFS (all features by default).
pub fn run_baseline(dataset: &Dataset, config: &RunConfig, method: Method, k: Option<usize>) -> Result<SubsetResult> {
    let d = dataset.n_features();
    let split = split(
        dataset.labels(),
        dataset.n_classes(),
        config.train_fraction,
        derive_seed(config.seed, STREAM_SPLIT),
    )?;
    let mut evaluator = SubsetEvaluator::new(dataset, &split, config.reward_classifier, config.classifier_settings())?;
    let train = evaluator.train_set().clone();
    let (pick_order, mask) = match method {
        Method::IgTopk | Method::Mrmr => {
            let k = k.ok_or_else(|| Error::Config(format!("{} needs K", method.name())))?;
            let ig = scan_order(&train, config.bins).ig_scores;
            let picks = if method == Method::IgTopk {
                ig_topk(&ig, k)?
            } else {
                mrmr(&ig, &RedundancyTable::build(&train).corr, k)?
            };
            let mask = FeatureSet::from_indices(d, picks.iter().copied());
            (picks, mask)
        }
        Method::Sfs => {
            let trace = sfs(&mut evaluator, k.unwrap_or(d))?;
            let mask = trace.best_subset(d);
            (trace.order, mask)
        }
    };
    let positive = positive_class(dataset, config.positive.as_deref())?;
    let mut metrics = BTreeMap::new();
    for &kind in &config.report_classifiers {
        metrics.insert(kind.name().to_string(), evaluator.metrics(&mask, kind, positive)?);
    }
    let indices = mask.indices();
    Ok(SubsetResult {
        method,
        k: indices.len(),
        features: indices.iter().map(|&i| dataset.feature_names()[i].clone()).collect(),
        indices,
        pick_order,
        metrics,
    })
}

/// `K` defaults to the size of a previous run's best subset.
pub fn cmd_baseline(config: &RunConfig, method: Method, k: Option<usize>, report: Option<&Path>) -> Result<SubsetResult> {
    let dataset = load_dataset(config)?;
    let k = match (k, report) {
        (Some(k), _) => Some(k),
        (None, Some(path)) => {
            let report = RunReport::load(path)?;
            let best = report
                .best
                .ok_or_else(|| Error::Config("the report has no best subset to size K from".into()))?;
            Some(best.indices.len())
        }
        (None, None) => None,
    };
    run_baseline(&dataset, config, method, k)
}

/// One cell of the comparison grids.
#[derive(Clone, Debug, PartialEq)]
pub struct ReproCase {
    pub grid: &'static str,
    pub name: &'static str,
    pub order_relevance: bool,
    pub reward_redundancy: bool,
    pub index_mode: IndexMode,
}

/// The four relevance/redundancy cases and the three index encodings.
pub fn repro_cases() -> Vec<ReproCase> {
    let ablation = |name, order_relevance, reward_redundancy| ReproCase {
        grid: "ablation",
        name,
        order_relevance,
        reward_redundancy,
        index_mode: IndexMode::OneHot,
    };
    let index = |name, index_mode| ReproCase {
        grid: "index",
        name,
        order_relevance: true,
        reward_redundancy: true,
        index_mode,
    };
    vec![
        ablation("Nvd", false, false),
        ablation("Rv", true, false),
        ablation("Rd", false, true),
        ablation("Rv+Rd", true, true),
        index("none", IndexMode::None),
        index("integer", IndexMode::Integer),
        index("one-hot", IndexMode::OneHot),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproRow {
    pub grid: String,
    pub case: String,
    pub seed: u64,
    pub best_accuracy: Option<f64>,
    pub subset_size: usize,
    pub metrics: BTreeMap<String, MetricSet>,
}

impl ReproCase {
    pub fn apply(&self, base: &RunConfig, seed: u64) -> RunConfig {
        RunConfig {
            seed,
            order_relevance: self.order_relevance,
            reward_redundancy: self.reward_redundancy,
            index_mode: self.index_mode,
            ..base.clone()
        }
    }
}

/// Runs every grid cell for every seed. Cells whose effective configuration
/// coincides (Rv+Rd and the one-hot encoding) share one training run.
pub fn repro_grid(dataset: &Dataset, base: &RunConfig, seeds: &[u64]) -> Result<Vec<ReproRow>> {
    let mut cache: HashMap<String, ReproRow> = HashMap::new();
    let mut rows = Vec::new();
    for case in repro_cases() {
        for &seed in seeds {
            let config = case.apply(base, seed);
            let key = config.to_text();
            let row = match cache.get(&key) {
                Some(row) => row.clone(),
                None => {
                    let report = run_training(dataset, &config)?.report;
                    log::info!("{} / {} seed {seed}: best {:?}", case.grid, case.name, report.best.as_ref().map(|b| b.accuracy));
                    let row = ReproRow {
                        grid: String::new(),
                        case: String::new(),
                        seed,
                        best_accuracy: report.best.as_ref().map(|b| b.accuracy),
                        subset_size: report.best.as_ref().map_or(0, |b| b.indices.len()),
                        metrics: report.best_metrics,
                    };
                    cache.insert(key, row.clone());
                    row
                }
            };
            rows.push(ReproRow { grid: case.grid.into(), case: case.name.into(), ..row });
        }
    }
    Ok(rows)
}

pub fn write_repro_csv(rows: &[ReproRow], kinds: &[ClassifierKind], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["grid", "case", "seed", "best_accuracy", "subset_size"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for k in kinds {
        for m in ["accuracy", "precision", "recall", "f_measure"] {
            header.push(format!("{}_{m}", k.name()));
        }
    }
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![
            row.grid.clone(),
            row.case.clone(),
            row.seed.to_string(),
            row.best_accuracy.map(|a| a.to_string()).unwrap_or_default(),
            row.subset_size.to_string(),
        ];
        for k in kinds {
            match row.metrics.get(k.name()) {
                Some(m) => rec.extend([m.accuracy, m.precision, m.recall, m.f_measure].map(|v| v.to_string())),
                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs both grids over `seeds` and writes `repro.csv` into the output directory.
pub fn cmd_repro(config: &RunConfig, seeds: &[u64]) -> Result<Vec<ReproRow>> {
    if seeds.is_empty() {
        return Err(Error::Config("repro needs at least one seed".into()));
    }
    let dataset = load_dataset(config)?;
    let dir = output_dir(config)?;
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.txt"), config.to_text())?;
    let rows = repro_grid(&dataset, config, seeds)?;
    write_repro_csv(&rows, &config.report_classifiers, &dir.join("repro.csv"))?;
    Ok(rows)
}
