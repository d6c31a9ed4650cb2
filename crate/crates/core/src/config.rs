//! Flat `key=value` run configuration.
//!
//! Text files hold one `key = value` pair per line; `#` starts a comment.
//! Overrides (from command-line flags) are applied after the file, so they
//! win. Every key is validated before any computation starts and unknown keys
//! are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::cae::{CaeConfig, IndexMode};
use crate::classify::{ClassifierKind, ClassifierSettings, ForestParams, TreeParams};
use crate::data::LabelColumn;
use crate::error::{Error, Result};
use crate::rl::DqnConfig;
use crate::seed::{derive_seed, STREAM_FOREST};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data_path: Option<PathBuf>,
    pub label: String,
    pub header: bool,
    pub train_fraction: f64,
    /// Equal-width bins used before entropy computations.
    pub bins: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub dqn: DqnConfig,
    pub cae: CaeConfig,
    pub index_mode: IndexMode,
    /// Scan in descending information gain (on) or file order (off).
    pub order_relevance: bool,
    /// Subtract the scanned feature's redundancy from the reward.
    pub reward_redundancy: bool,
    /// Give deselect steps zero reward instead of the accuracy-minus-redundancy form.
    pub deselect_zero: bool,
    pub reward_classifier: ClassifierKind,
    pub report_classifiers: Vec<ClassifierKind>,
    pub tree: TreeParams,
    pub forest_trees: usize,
    /// Positive class value for binary metrics; the last class when unset.
    pub positive: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_path: None,
            label: "label".into(),
            header: true,
            train_fraction: 0.9,
            bins: 10,
            seed: 0,
            output_dir: None,
            dqn: DqnConfig::default(),
            cae: CaeConfig::default(),
            index_mode: IndexMode::OneHot,
            order_relevance: true,
            reward_redundancy: true,
            deselect_zero: false,
            reward_classifier: ClassifierKind::Tree,
            report_classifiers: vec![ClassifierKind::Tree, ClassifierKind::Forest],
            tree: TreeParams::default(),
            forest_trees: 100,
            positive: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "data.path",
    "data.label",
    "data.header",
    "data.train_fraction",
    "data.bins",
    "seed",
    "output.dir",
    "dqn.gamma",
    "dqn.lr",
    "dqn.batch",
    "dqn.memory",
    "dqn.hidden",
    "dqn.eps_start",
    "dqn.eps_end",
    "dqn.eps_decay",
    "dqn.target_sync",
    "dqn.episodes",
    "cae.levels",
    "cae.filters",
    "cae.epochs",
    "cae.lr",
    "cae.steps_per_env_step",
    "cae.row_cap",
    "state.index_mode",
    "order.relevance",
    "reward.redundancy",
    "reward.deselect_zero",
    "classifier.reward",
    "classifier.report",
    "tree.max_depth",
    "tree.min_leaf",
    "forest.trees",
    "metrics.positive",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?} as a number")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected on/off, got {value:?}"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|v| parse_num(key, v))
        .collect()
}

fn on_off(b: bool) -> String {
    if b { "on" } else { "off" }.into()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Splits `key=value` lines, skipping blanks and `#` comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    /// Defaults, then `file`, then `overrides` (each `key=value`), validated.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_pairs(&parse_pairs(&text)?)?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_pairs(&parse_pairs(text)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_pairs(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Sets one key. Range checks that involve several keys happen in
    /// [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "data.path" => self.data_path = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "data.label" => self.label = v.to_string(),
            "data.header" => self.header = parse_bool(key, v)?,
            "data.train_fraction" => self.train_fraction = parse_num(key, v)?,
            "data.bins" => self.bins = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "output.dir" => self.output_dir = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "dqn.gamma" => self.dqn.gamma = parse_num(key, v)?,
            "dqn.lr" => self.dqn.lr = parse_num(key, v)?,
            "dqn.batch" => self.dqn.batch = parse_num(key, v)?,
            "dqn.memory" => self.dqn.memory = parse_num(key, v)?,
            "dqn.hidden" => self.dqn.hidden = parse_num(key, v)?,
            "dqn.eps_start" => self.dqn.eps_start = parse_num(key, v)?,
            "dqn.eps_end" => self.dqn.eps_end = parse_num(key, v)?,
            "dqn.eps_decay" => self.dqn.eps_decay = parse_num(key, v)?,
            "dqn.target_sync" => self.dqn.target_sync = parse_num(key, v)?,
            "dqn.episodes" => self.dqn.episodes = parse_num(key, v)?,
            "cae.levels" => self.cae.levels = parse_list(key, v)?,
            "cae.filters" => self.cae.filters = parse_list(key, v)?,
            "cae.epochs" => self.cae.epochs = parse_num(key, v)?,
            "cae.lr" => self.cae.lr = parse_num(key, v)?,
            "cae.steps_per_env_step" => self.cae.steps_per_env_step = parse_num(key, v)?,
            "cae.row_cap" => self.cae.row_cap = parse_num(key, v)?,
            "state.index_mode" => self.index_mode = IndexMode::parse(v)?,
            "order.relevance" => self.order_relevance = parse_bool(key, v)?,
            "reward.redundancy" => self.reward_redundancy = parse_bool(key, v)?,
            "reward.deselect_zero" => self.deselect_zero = parse_bool(key, v)?,
            "classifier.reward" => self.reward_classifier = ClassifierKind::parse(v)?,
            "classifier.report" => {
                self.report_classifiers = v.split(',').map(ClassifierKind::parse).collect::<Result<_>>()?
            }
            "tree.max_depth" => {
                self.tree.max_depth = if v == "none" { None } else { Some(parse_num(key, v)?) }
            }
            "tree.min_leaf" => self.tree.min_leaf = parse_num(key, v)?,
            "forest.trees" => self.forest_trees = parse_num(key, v)?,
            "metrics.positive" => self.positive = if v.is_empty() { None } else { Some(v.to_string()) },
            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "data.train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.bins < 2 {
            return Err(Error::Config(format!("data.bins must be at least 2, got {}", self.bins)));
        }
        if self.label.is_empty() {
            return Err(Error::Config("data.label must not be empty".into()));
        }
        self.dqn.validate()?;
        self.cae.validate()?;
        if self.report_classifiers.is_empty() {
            return Err(Error::Config("classifier.report needs at least one classifier".into()));
        }
        if self.tree.min_leaf == 0 {
            return Err(Error::Config("tree.min_leaf must be at least 1".into()));
        }
        if self.tree.max_depth == Some(0) {
            return Err(Error::Config("tree.max_depth must be at least 1 (or none)".into()));
        }
        if self.forest_trees == 0 {
            return Err(Error::Config("forest.trees must be at least 1".into()));
        }
        Ok(())
    }

    pub fn label_column(&self) -> LabelColumn {
        LabelColumn::parse(&self.label)
    }

    pub fn classifier_settings(&self) -> ClassifierSettings {
        ClassifierSettings {
            tree: self.tree.clone(),
            forest: ForestParams { n_trees: self.forest_trees, ..ForestParams::default() },
            forest_seed: derive_seed(self.seed, STREAM_FOREST),
        }
    }

    /// Every key with its effective value, in [`KEYS`] order.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let pairs: Vec<(&str, String)> = vec![
            ("data.path", path(&self.data_path)),
            ("data.label", self.label.clone()),
            ("data.header", on_off(self.header)),
            ("data.train_fraction", self.train_fraction.to_string()),
            ("data.bins", self.bins.to_string()),
            ("seed", self.seed.to_string()),
            ("output.dir", path(&self.output_dir)),
            ("dqn.gamma", self.dqn.gamma.to_string()),
            ("dqn.lr", self.dqn.lr.to_string()),
            ("dqn.batch", self.dqn.batch.to_string()),
            ("dqn.memory", self.dqn.memory.to_string()),
            ("dqn.hidden", self.dqn.hidden.to_string()),
            ("dqn.eps_start", self.dqn.eps_start.to_string()),
            ("dqn.eps_end", self.dqn.eps_end.to_string()),
            ("dqn.eps_decay", self.dqn.eps_decay.to_string()),
            ("dqn.target_sync", self.dqn.target_sync.to_string()),
            ("dqn.episodes", self.dqn.episodes.to_string()),
            ("cae.levels", join(&self.cae.levels)),
            ("cae.filters", join(&self.cae.filters)),
            ("cae.epochs", self.cae.epochs.to_string()),
            ("cae.lr", self.cae.lr.to_string()),
            ("cae.steps_per_env_step", self.cae.steps_per_env_step.to_string()),
            ("cae.row_cap", self.cae.row_cap.to_string()),
            ("state.index_mode", self.index_mode.name().into()),
            ("order.relevance", on_off(self.order_relevance)),
            ("reward.redundancy", on_off(self.reward_redundancy)),
            ("reward.deselect_zero", on_off(self.deselect_zero)),
            ("classifier.reward", self.reward_classifier.name().into()),
            (
                "classifier.report",
                self.report_classifiers.iter().map(|k| k.name()).collect::<Vec<_>>().join(","),
            ),
            ("tree.max_depth", self.tree.max_depth.map_or("none".into(), |d| d.to_string())),
            ("tree.min_leaf", self.tree.min_leaf.to_string()),
            ("forest.trees", self.forest_trees.to_string()),
            ("metrics.positive", self.positive.clone().unwrap_or_default()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// `key = value` text that [`RunConfig::from_text`] reads back.
    pub fn to_text(&self) -> String {
        let echo = self.echo();
        KEYS.iter().map(|k| format!("{k} = {}\n", echo[*k])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_has_defaults() {
        let c = RunConfig::from_text("").unwrap();
        assert_eq!(c.dqn.gamma, 0.9);
        assert_eq!(c.dqn.lr, 0.01);
        assert_eq!(c.dqn.batch, 32);
        assert_eq!(c.dqn.memory, 400);
        assert_eq!(c.dqn.hidden, 100);
        assert_eq!(c.cae.epochs, 10);
        assert_eq!(c.cae.lr, 0.005);
        assert_eq!(c.cae.levels, vec![1, 2, 3, 4]);
        assert_eq!(c.train_fraction, 0.9);
    }

    #[test]
    fn range_and_unknown_keys() {
        assert!(matches!(RunConfig::from_text("dqn.gamma=1.5"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_text("dqn.gama=0.5"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_text("dqn.batch=abc"), Err(Error::Config(_))));
    }

    #[test]
    fn override_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\ndqn.episodes = 7\nseed=3\n").unwrap();
        let c = RunConfig::load(Some(&path), &["dqn.episodes=9".into()]).unwrap();
        assert_eq!(c.dqn.episodes, 9);
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.set("tree.max_depth", "none").unwrap();
        c.set("cae.levels", "1,2").unwrap();
        c.set("metrics.positive", "yes").unwrap();
        c.set("data.path", "/tmp/x.csv").unwrap();
        assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
        assert_eq!(c.echo().len(), KEYS.len());
    }
}
