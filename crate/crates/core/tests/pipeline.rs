mod common;

use scanfs::cae::{CaeConfig, CaeModel};
use scanfs::classify::{predict_validation, ClassifierKind};
use scanfs::config::RunConfig;
use scanfs::data::{split, Dataset};
use scanfs::env::{Prepared, ScanEnv, DESELECT, SELECT};
use scanfs::params::ParamSet;
use scanfs::rl::QNetwork;
use scanfs::seed::{derive_seed, STREAM_SPLIT};
use scanfs::subset::FeatureSet;
use scanfs::synthetic::planted;
use scanfs::train::{reevaluate, run_training};

fn small_config(seed: u64, episodes: usize) -> RunConfig {
    let mut c = RunConfig {
        seed,
        cae: CaeConfig { filters: vec![2, 2, 2, 2, 2, 1], epochs: 1, row_cap: 32, ..CaeConfig::default() },
        report_classifiers: vec![ClassifierKind::Tree],
        ..RunConfig::default()
    };
    c.dqn.episodes = episodes;
    c.dqn.hidden = 8;
    c.dqn.batch = 4;
    c.dqn.memory = 40;
    c.dqn.target_sync = 7;
    c
}

fn data() -> Dataset {
    planted(60, 2, 4).unwrap()
}

#[test]
fn zero_episodes_give_an_empty_report() {
    let run = run_training(&data(), &small_config(0, 0)).unwrap();
    assert!(run.report.episodes.is_empty());
    assert!(run.report.best.is_none());
    assert_eq!(run.report.training.env_steps, 0);
}

#[test]
fn same_seed_same_report() {
    let ds = data();
    let a = run_training(&ds, &small_config(3, 4)).unwrap().report.without_timing();
    let b = run_training(&ds, &small_config(3, 4)).unwrap().report.without_timing();
    assert_eq!(a, b);
    let c = run_training(&ds, &small_config(4, 4)).unwrap().report.without_timing();
    assert_ne!(a.episodes, c.episodes);
}

#[test]
fn episodes_scan_every_feature_once() {
    let ds = data();
    let report = run_training(&ds, &small_config(1, 5)).unwrap().report;
    let d = ds.n_features();
    assert_eq!(report.training.env_steps, 5 * d);
    for ep in &report.episodes {
        assert_eq!(ep.steps.len(), d);
        let scanned: Vec<usize> = ep.steps.iter().map(|s| s.feature).collect();
        assert_eq!(scanned, report.scan_order);
        let picked: Vec<usize> = ep.steps.iter().filter(|s| s.action == SELECT).map(|s| s.feature).collect();
        let mut sorted = picked.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, ep.selected);
        assert_eq!(ep.subset_size, picked.len());
    }
}

#[test]
fn scripted_all_select_matches_independent_rewards() {
    let ds = planted(40, 2, 11).unwrap();
    assert_eq!(ds.n_features(), 5);
    let config = small_config(2, 1);
    let prepared = Prepared::new(&ds, &config).unwrap();
    let mut env = ScanEnv::from_config(&ds, &prepared, &config).unwrap();
    env.reset().unwrap();

    let sp = split(ds.labels(), ds.n_classes(), config.train_fraction, derive_seed(config.seed, STREAM_SPLIT)).unwrap();
    let train = ds.subset_rows(&sp.train);
    let valid = ds.subset_rows(&sp.valid);
    let train_cols: Vec<Vec<f64>> = train.columns().to_vec();

    let mut chosen = FeatureSet::empty(5);
    for (t, &f) in prepared.order.iter().enumerate() {
        let out = env.step(SELECT).unwrap();
        assert_eq!(out.feature, f);
        assert_eq!(out.done, t == 4);
        chosen.insert(f);
        let pred = predict_validation(&train, &valid, &chosen, ClassifierKind::Tree, &config.classifier_settings());
        let ac = pred.iter().zip(valid.labels()).filter(|(p, l)| p == l).count() as f64 / valid.n_samples() as f64;
        let rd = common::oracle_rd(f, &train_cols);
        assert_eq!(out.reward.ac, ac, "step {t}");
        assert!((out.reward.rd - rd).abs() < 1e-12, "step {t}: {} vs {rd}", out.reward.rd);
        assert!((out.reward.r - (ac - rd)).abs() < 1e-12);
    }
    assert!(env.step(SELECT).is_err());
}

#[test]
fn redundancy_off_zeroes_the_penalty_and_keeps_states() {
    let ds = data();
    let on = small_config(5, 1);
    let off = RunConfig { reward_redundancy: false, ..on.clone() };
    let mut envs: Vec<ScanEnv> = [&on, &off]
        .iter()
        .map(|c| ScanEnv::from_config(&ds, &Prepared::new(&ds, c).unwrap(), c).unwrap())
        .collect();
    let s0: Vec<_> = envs.iter_mut().map(|e| e.reset().unwrap()).collect();
    assert_eq!(s0[0], s0[1]);
    for t in 0..ds.n_features() {
        let action = if t % 3 == 0 { SELECT } else { DESELECT };
        let a = envs[0].step(action).unwrap();
        let b = envs[1].step(action).unwrap();
        assert_eq!(a.next_state, b.next_state, "step {t}");
        assert_eq!(a.reward.ac, b.reward.ac);
        assert_eq!(b.reward.rd, 0.0);
        assert_eq!(b.reward.r, b.reward.ac);
    }

    let report = run_training(&ds, &RunConfig { dqn: scanfs::rl::DqnConfig { episodes: 3, ..off.dqn.clone() }, ..off })
        .unwrap()
        .report;
    assert_eq!(report.config["reward.redundancy"], "off");
    assert!(report.episodes.iter().flat_map(|e| &e.steps).all(|s| s.reward.rd == 0.0));
}

#[test]
fn best_record_is_the_best_non_empty_step() {
    let ds = data();
    let config = small_config(6, 6);
    let report = run_training(&ds, &config).unwrap().report;
    let best = report.best.as_ref().expect("some feature was selected");

    let mut top = f64::NEG_INFINITY;
    let mut running = Vec::new();
    for ep in &report.episodes {
        let mut any = false;
        for s in &ep.steps {
            any |= s.action == SELECT;
            if any {
                top = top.max(s.reward.ac);
            }
        }
        running.push(ep.best_acc_so_far.unwrap_or(f64::NEG_INFINITY));
    }
    assert_eq!(best.accuracy, top);
    assert!(running.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*running.last().unwrap(), top);

    let mask = FeatureSet::from_indices(ds.n_features(), best.indices.iter().copied());
    assert_eq!(reevaluate(&ds, &config, &mask).unwrap(), best.accuracy);
    let names: Vec<&str> = best.indices.iter().map(|&i| ds.feature_names()[i].as_str()).collect();
    assert_eq!(best.features, names);
    assert!(report.best_metrics.contains_key("tree"));
}

#[test]
fn checkpoints_reload_to_identical_networks() {
    let ds = data();
    let config = small_config(7, 2);
    let run = run_training(&ds, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let path = dir.path().join("policy.json");
    run.policy.params().save(&path).unwrap();
    let policy = QNetwork::from_params(ParamSet::load(&path).unwrap()).unwrap();
    let state: Vec<f64> = (0..run.report.state_len).map(|i| (i as f64 * 0.37).sin()).collect();
    assert_eq!(policy.q_values(&state).unwrap(), run.policy.q_values(&state).unwrap());

    let path = dir.path().join("cae.json");
    run.cae.params().save(&path).unwrap();
    let cae = CaeModel::from_params(ParamSet::load(&path).unwrap(), config.cae.filters.clone(), config.cae.levels.clone())
        .unwrap();
    let image = Prepared::new(&ds, &config).unwrap().image;
    assert_eq!(cae.encode(&image).unwrap(), run.cae.encode(&image).unwrap());
}
