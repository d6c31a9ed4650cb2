//! Persisted run report.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::MetricSet;
use crate::env::RewardBreakdown;
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub feature: usize,
    pub action: usize,
    #[serde(flatten)]
    pub reward: RewardBreakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub epsilon: f64,
    pub total_reward: f64,
    pub subset_size: usize,
    /// Reward-classifier validation accuracy of the final subset.
    pub subset_accuracy: f64,
    pub best_acc_so_far: Option<f64>,
    /// Final subset as ascending feature indices.
    pub selected: Vec<usize>,
    pub steps: Vec<StepRecord>,
}

/// Highest-accuracy non-empty subset seen at any step of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub features: Vec<String>,
    pub indices: Vec<usize>,
    pub accuracy: f64,
    pub episode: usize,
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub class_values: Vec<String>,
    pub train_rows: usize,
    pub valid_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub env_steps: usize,
    pub optimizer_steps: u64,
    pub target_syncs: usize,
    pub cached_subsets: usize,
    pub cae_pretrain_loss: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: BTreeMap<String, String>,
    pub dataset: DatasetSummary,
    /// Feature indices in scan order.
    pub scan_order: Vec<usize>,
    pub ig_scores: Vec<f64>,
    pub redundancy: Vec<f64>,
    pub state_len: usize,
    pub episodes: Vec<EpisodeRecord>,
    pub best: Option<BestRecord>,
    /// Metrics of the best subset under each report classifier.
    pub best_metrics: BTreeMap<String, MetricSet>,
    pub training: TrainingStats,
    /// Excluded from determinism comparisons.
    pub wall_clock_seconds: f64,
    /// Peak resident set size in KiB, when the platform reports it.
    pub peak_memory_kib: Option<u64>,
}

impl RunReport {
    /// Copy with the timing and memory fields zeroed, for comparisons.
    pub fn without_timing(&self) -> RunReport {
        RunReport { wall_clock_seconds: 0.0, peak_memory_kib: None, ..self.clone() }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Fraction of the last `window` episodes whose final subset contains
    /// each feature.
    pub fn selection_frequency(&self, window: usize) -> Vec<f64> {
        let d = self.dataset.n_features;
        let start = self.episodes.len().saturating_sub(window);
        let tail = &self.episodes[start..];
        let mut freq = vec![0.0; d];
        for ep in tail {
            for &f in &ep.selected {
                freq[f] += 1.0;
            }
        }
        if !tail.is_empty() {
            freq.iter_mut().for_each(|v| *v /= tail.len() as f64);
        }
        freq
    }

    /// Episode curve CSV: episode, total_reward, best_acc_so_far, subset_size, epsilon.
    pub fn write_episode_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["episode", "total_reward", "best_acc_so_far", "subset_size", "epsilon"])?;
        for ep in &self.episodes {
            w.write_record([
                ep.episode.to_string(),
                ep.total_reward.to_string(),
                ep.best_acc_so_far.map(|a| a.to_string()).unwrap_or_default(),
                ep.subset_size.to_string(),
                ep.epsilon.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Peak resident set size of this process (Linux only).
pub fn peak_memory_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}
