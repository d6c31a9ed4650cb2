//! The full training loop: episodes of scanning, replay, TD updates and
//! target syncs, with best-subset tracking.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cae::CaeModel;
use crate::classify::SubsetEvaluator;
use crate::config::RunConfig;
use crate::data::Dataset;
use crate::env::{Prepared, ScanEnv};
use crate::error::{Error, Result};
use crate::report::{
    peak_memory_kib, BestRecord, DatasetSummary, EpisodeRecord, RunReport, StepRecord, TrainingStats, SCHEMA_VERSION,
};
use crate::rl::{epsilon_greedy, sync_target, Learner, QNetwork, ReplayMemory, Transition};
use crate::seed::{derive_seed, STREAM_POLICY, STREAM_QNET_INIT, STREAM_REPLAY, STREAM_TARGET_INIT};
use crate::subset::FeatureSet;

/// A finished run: the report plus the trained networks for checkpointing.
#[derive(Debug)]
pub struct TrainedRun {
    pub report: RunReport,
    pub policy: QNetwork,
    pub target: QNetwork,
    pub cae: CaeModel,
}

/// Index of the positive class: the configured value, else the last class.
pub fn positive_class(dataset: &Dataset, positive: Option<&str>) -> Result<usize> {
    match positive {
        None => Ok(dataset.n_classes() - 1),
        Some(p) => dataset
            .class_values()
            .iter()
            .position(|c| c == p)
            .ok_or_else(|| Error::Config(format!("metrics.positive {p:?} is not one of {:?}", dataset.class_values()))),
    }
}

fn at(episode: usize, step: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtStep { episode, step, source: Box::new(e) }
}

pub fn run_training(dataset: &Dataset, config: &RunConfig) -> Result<TrainedRun> {
    config.validate()?;
    let started = Instant::now();
    let positive = positive_class(dataset, config.positive.as_deref())?;
    let prepared = Prepared::new(dataset, config)?;
    let mut env = ScanEnv::from_config(dataset, &prepared, config)?;
    let cae_pretrain_loss = env.pretrain_cae(config.cae.epochs)?;

    let dqn = &config.dqn;
    let state_len = env.state_len();
    let mut learner = Learner::new(QNetwork::new(state_len, dqn.hidden, derive_seed(config.seed, STREAM_QNET_INIT))?);
    let mut target = QNetwork::new(state_len, dqn.hidden, derive_seed(config.seed, STREAM_TARGET_INIT))?;
    let mut memory = ReplayMemory::new(dqn.memory)?;
    let mut policy_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_POLICY));
    let mut replay_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_REPLAY));

    let mut episodes = Vec::with_capacity(dqn.episodes);
    let mut best: Option<(FeatureSet, f64, usize, usize)> = None;
    let mut env_steps = 0usize;
    let mut target_syncs = 0usize;

    for episode in 0..dqn.episodes {
        let epsilon = dqn.epsilon(episode);
        let mut state = env.reset().map_err(at(episode, 0))?;
        let mut steps = Vec::with_capacity(env.n_features());
        let mut total_reward = 0.0;
        for step in 0.. {
            let q = learner.net.q_values(state.as_slice()).map_err(at(episode, step))?;
            let action = epsilon_greedy(q, epsilon, &mut policy_rng);
            let out = env.step(action).map_err(at(episode, step))?;
            total_reward += out.reward.r;
            steps.push(StepRecord { feature: out.feature, action, reward: out.reward });

            if !env.selected().is_empty() && best.as_ref().is_none_or(|b| out.reward.ac > b.1) {
                best = Some((env.selected().clone(), out.reward.ac, episode, step));
            }

            memory.push(Transition {
                state: std::mem::replace(&mut state, out.next_state.clone()),
                action,
                reward: out.reward.r,
                next_state: out.next_state,
            });
            env_steps += 1;

            match memory.sample(dqn.batch, &mut replay_rng) {
                Ok(batch) => {
                    learner
                        .train_on_batch(&batch, &target, dqn.gamma, dqn.lr)
                        .map_err(at(episode, step))?;
                }
                Err(Error::WarmingUp { .. }) => {}
                Err(e) => return Err(at(episode, step)(e)),
            }
            if sync_target(&learner.net, &mut target, env_steps, dqn.target_sync) {
                target_syncs += 1;
            }
            if out.done {
                break;
            }
        }
        let selected = env.selected().clone();
        let subset_accuracy = env.evaluator_mut().accuracy(&selected);
        let record = EpisodeRecord {
            episode,
            epsilon,
            total_reward,
            subset_size: selected.count(),
            subset_accuracy,
            best_acc_so_far: best.as_ref().map(|b| b.1),
            selected: selected.indices(),
            steps,
        };
        log::debug!(
            "episode {episode}: reward {:.4}, |E| = {}, acc {:.4}, eps {:.3}",
            record.total_reward,
            record.subset_size,
            record.subset_accuracy,
            epsilon
        );
        episodes.push(record);
    }

    let names = dataset.feature_names();
    let mut best_metrics = BTreeMap::new();
    let best = match best {
        Some((mask, accuracy, episode, step)) => {
            for &kind in &config.report_classifiers {
                best_metrics.insert(kind.name().to_string(), env.evaluator().metrics(&mask, kind, positive)?);
            }
            let indices = mask.indices();
            Some(BestRecord {
                features: indices.iter().map(|&i| names[i].clone()).collect(),
                indices,
                accuracy,
                episode,
                step,
            })
        }
        None => None,
    };
    if let Some(b) = &best {
        log::info!("best subset {:?} with validation accuracy {:.4}", b.features, b.accuracy);
    }

    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.echo(),
        dataset: DatasetSummary {
            n_samples: dataset.n_samples(),
            n_features: dataset.n_features(),
            n_classes: dataset.n_classes(),
            feature_names: names.to_vec(),
            class_values: dataset.class_values().to_vec(),
            train_rows: prepared.split.train.len(),
            valid_rows: prepared.split.valid.len(),
        },
        scan_order: prepared.order.clone(),
        ig_scores: prepared.ranking.ig_scores.clone(),
        redundancy: prepared.redundancy.rd.clone(),
        state_len,
        episodes,
        best,
        best_metrics,
        training: TrainingStats {
            env_steps,
            optimizer_steps: learner.optimizer_steps(),
            target_syncs,
            cached_subsets: env.evaluator().cached_subsets(),
            cae_pretrain_loss,
        },
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        peak_memory_kib: peak_memory_kib(),
    };
    Ok(TrainedRun { report, policy: learner.net, target, cae: env.cae().clone() })
}

/// Reward-classifier validation accuracy of `mask` under `config`'s split,
/// computed from scratch.
pub fn reevaluate(dataset: &Dataset, config: &RunConfig, mask: &FeatureSet) -> Result<f64> {
    let prepared = Prepared::new(dataset, config)?;
    let mut evaluator =
        SubsetEvaluator::new(dataset, &prepared.split, config.reward_classifier, config.classifier_settings())?;
    Ok(evaluator.accuracy(mask))
}
