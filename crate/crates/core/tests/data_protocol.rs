//! Ingestion, cross-subject folds, episode sampling, augmentation and the
//! synthetic generator.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use common::{central, dataset, energy, rng, synth};
use eeg_fewshot::data::{
    augment_frequency_swap, augment_pool, augment_time_recombination, format_trial_samples, generate_synthetic_dataset,
    load_dataset, make_folds, make_test_split, sample_training_episode, synthesize_trials, AugmentConfig, ClassPools,
    DataError, EpisodeSpec, Label, Trial, TrialOrigin, MANIFEST_HEADER, N_ELECTRODES, TRIAL_SAMPLES,
};
use eeg_fewshot::harness::stats;
use proptest::prelude::*;

fn write_manifest(dir: &Path, rows: &[(&str, &str)]) -> std::path::PathBuf {
    let mut text = format!("@sample_rate_hz=250\n@window_s=3.5,7\n{MANIFEST_HEADER}\n");
    for (i, (file, label)) in rows.iter().enumerate() {
        text.push_str(&format!("{file},S01,A,t{i},{label},false\n"));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, text).unwrap();
    path
}

fn trial_text(rows: usize) -> String {
    let samples: Vec<f64> = (0..rows * N_ELECTRODES).map(|i| (i as f64 * 0.37).sin()).collect();
    format_trial_samples(&samples)
}

#[test]
fn manifest_with_two_valid_trials_loads_both() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), trial_text(TRIAL_SAMPLES)).unwrap();
    std::fs::write(dir.path().join("b.csv"), trial_text(TRIAL_SAMPLES)).unwrap();
    let ds = load_dataset(&write_manifest(dir.path(), &[("a.csv", "L"), ("b.csv", "R")])).unwrap();
    assert_eq!(ds.trials.len(), 2);
    assert_eq!(ds.trials[1].label, Label::Right);
}

#[test]
fn short_trial_file_is_a_row_count_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), trial_text(TRIAL_SAMPLES - 1)).unwrap();
    let err = load_dataset(&write_manifest(dir.path(), &[("a.csv", "L")])).unwrap_err();
    assert!(err.to_string().contains("expected 875 rows"), "{err}");
}

#[test]
fn missing_trial_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_dataset(&write_manifest(dir.path(), &[("gone.csv", "L")])).unwrap_err();
    assert!(matches!(err, DataError::MissingFile { .. }), "{err}");
    assert!(err.to_string().contains("gone.csv"));
}

#[test]
fn nine_subjects_give_nine_distinct_folds_without_leakage() {
    let ds = dataset(3, 9, 10);
    let folds = make_folds(&ds).unwrap();
    assert_eq!(folds.len(), 9);
    let tests: BTreeSet<_> = folds.iter().map(|f| f.test_subject.clone()).collect();
    assert_eq!(tests.len(), 9);
    for f in &folds {
        assert_eq!(f.train_subjects.len(), 8);
        let reachable = f.episode_pool(&ds);
        assert!(reachable.iter().all(|t| t.subject_id != f.test_subject));
        assert!(f.test_trials(&ds).iter().all(|t| t.subject_id == f.test_subject));
        let train: BTreeSet<_> = f.train_trials(&ds).iter().map(|t| t.trial_id.clone()).collect();
        assert!(f.val_trials(&ds).iter().all(|t| !train.contains(&t.trial_id)));
    }
}

#[test]
fn two_subjects_split_four_sessions_and_one() {
    let ds = dataset(3, 2, 10);
    let folds = make_folds(&ds).unwrap();
    assert_eq!(folds.len(), 2);
    for f in &folds {
        let other = &f.train_subjects[0];
        assert_eq!(f.train_sessions[other].len(), 4);
        assert!(!f.train_sessions[other].contains(&f.val_sessions[other]));
    }
}

#[test]
fn test_split_of_120_trials() {
    let ds = dataset(3, 2, 60);
    let trials = ds.trials_of("S01");
    let mut supports = BTreeSet::new();
    for seed in 0..10 {
        let split = make_test_split(&trials, 2, 20, &mut rng(seed)).unwrap();
        assert_eq!(split.support.iter().map(Vec::len).collect::<Vec<_>>(), vec![20, 20]);
        assert_eq!(split.queries.len(), 80);
        assert_eq!(split.queries.iter().filter(|t| t.class_index() == 0).count(), 40);
        let ids: BTreeSet<_> = split.support.iter().flatten().map(|t| t.trial_id.clone()).collect();
        assert!(split.queries.iter().all(|q| !ids.contains(&q.trial_id)));
        supports.insert(ids);
    }
    assert_eq!(supports.len(), 10);
}

#[test]
fn sampling_is_reproducible_under_a_seed() {
    let ds = dataset(3, 3, 20);
    assert_eq!(make_folds(&ds).unwrap(), make_folds(&ds).unwrap());
    let fold = &make_folds(&ds).unwrap()[1];
    let pools = ClassPools::new(2, fold.episode_pool(&ds));
    let draw = |seed| {
        let mut r = rng(seed);
        let mut ids = Vec::new();
        for _ in 0..50 {
            let ep = sample_training_episode(&pools, &EpisodeSpec::two_way(5), &mut r).unwrap();
            ids.extend(ep.support.iter().flatten().map(|t| t.trial_id.clone()));
            ids.push(ep.query.trial_id.clone());
        }
        let split = make_test_split(&fold.test_trials(&ds), 2, 5, &mut r).unwrap();
        ids.extend(split.queries.iter().map(|t| t.trial_id.clone()));
        ids
    };
    assert_eq!(draw(4), draw(4));
    assert_ne!(draw(4), draw(5));
}

#[test]
fn recombination_slots_come_from_one_source() {
    let ds = dataset(5, 2, 4);
    let left: Vec<Arc<Trial>> = ds.trials.iter().filter(|t| t.label == Label::Left).take(2).cloned().collect();
    let seg = TRIAL_SAMPLES / 5;
    for seed in 0..20 {
        let out = augment_time_recombination(&left, 5, &mut rng(seed)).unwrap();
        assert_eq!(out.samples().len(), TRIAL_SAMPLES * N_ELECTRODES);
        assert_eq!(out.label, Label::Left);
        for slot in 0..5 {
            let range = slot * seg * N_ELECTRODES..(slot + 1) * seg * N_ELECTRODES;
            let got = &out.samples()[range.clone()];
            assert!(left.iter().any(|s| s.samples()[range.clone()] == *got), "seed {seed} slot {slot}");
        }
    }
    let one = augment_time_recombination(&left[..1], 5, &mut rng(0)).unwrap();
    assert_eq!(one.samples(), left[0].samples());
}

#[test]
fn frequency_swap_carries_the_donor_band() {
    let ds = dataset(5, 2, 4);
    let right: Vec<&Arc<Trial>> = ds.trials.iter().filter(|t| t.label == Label::Right).collect();
    let (base, donor) = (right[0], right[1]);
    for band in 0..3 {
        let out = augment_frequency_swap(base, donor, band).unwrap();
        // By construction: output minus the kept bands is the donor band.
        let mut rest = out.samples().to_vec();
        for b in (0..3).filter(|&b| b != band) {
            for (r, v) in rest.iter_mut().zip(base.bands().band(b)) {
                *r -= v;
            }
        }
        let want = donor.bands().band(band);
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(rest.iter().zip(want).all(|(r, w)| (r - w).abs() <= 1e-6 * scale));
        let (got, reference) = (energy(central(&rest)), energy(central(want)));
        assert!((got / reference - 1.0).abs() <= 0.05, "band {band}: {:.3}", got / reference);
    }
    let same = augment_frequency_swap(base, base, 1).unwrap();
    let sum = base.bands().reconstruct();
    assert!(same.samples().iter().zip(&sum).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn augmented_pool_stays_in_class_and_training_subjects() {
    let ds = dataset(5, 3, 6);
    let fold = &make_folds(&ds).unwrap()[0];
    let cfg = AugmentConfig {
        per_group: 3,
        ..AugmentConfig::default()
    };
    let extra = augment_pool(&fold.train_trials(&ds), &cfg, &mut rng(1)).unwrap();
    assert_eq!(extra.len(), 2 * 2 * 3);
    for t in &extra {
        assert_ne!(t.subject_id, fold.test_subject);
        let sources: Vec<&String> = match &t.origin {
            TrialOrigin::FrequencySwap { base, donor, .. } => vec![base, donor],
            TrialOrigin::TimeRecombination { segment_sources } => segment_sources.iter().collect(),
            TrialOrigin::Recorded => panic!("{} is not augmented", t.trial_id),
        };
        for id in sources {
            // A swap base may itself be recombined; its id starts with the first recorded source.
            let root = id.split('+').next().unwrap();
            let original = ds.trials.iter().find(|o| o.trial_id == root).unwrap();
            assert_eq!(original.label, t.label);
            assert_ne!(original.subject_id, fold.test_subject);
        }
    }
}

fn mu_power_c3(t: &Trial) -> f64 {
    let mu = t.bands().band(1);
    let c3: Vec<f64> = (0..TRIAL_SAMPLES).map(|i| mu[i * N_ELECTRODES]).collect();
    energy(central(&c3)) / (TRIAL_SAMPLES / 2) as f64
}

fn class_powers(trials: &[Trial]) -> [Vec<f64>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for t in trials {
        out[t.class_index()].push(mu_power_c3(t));
    }
    out
}

#[test]
fn synthetic_classes_differ_in_mu_power() {
    let [left, right] = class_powers(&synthesize_trials(&synth(2, 3, 40)).unwrap());
    let (l, r) = (stats::mean(&left), stats::mean(&right));
    assert!(l.max(r) / l.min(r) >= 2.0, "left {l}, right {r}");
}

#[test]
fn noise_only_classes_are_indistinguishable() {
    let cfg = eeg_fewshot::data::SynthConfig {
        snr_db: f64::NEG_INFINITY,
        ..synth(2, 3, 40)
    };
    let [left, right] = class_powers(&synthesize_trials(&cfg).unwrap());
    let (_, p_less) = stats::welch_less(&left, &right);
    let two_sided = 2.0 * p_less.min(1.0 - p_less);
    assert!(two_sided > 0.01, "p = {two_sided}");
}

#[test]
fn same_seed_gives_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = synth(11, 2, 3);
    generate_synthetic_dataset(&cfg, a.path()).unwrap();
    generate_synthetic_dataset(&cfg, b.path()).unwrap();
    let list = |root: &Path| {
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(dir).unwrap() {
                let p = entry.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    files.push(p.strip_prefix(root).unwrap().to_path_buf());
                }
            }
        }
        files.sort();
        files
    };
    let files = list(a.path());
    assert_eq!(files, list(b.path()));
    assert_eq!(files.len(), 2 * 2 * 3 + 1);
    for f in files {
        assert_eq!(std::fs::read(a.path().join(&f)).unwrap(), std::fs::read(b.path().join(&f)).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn episodes_are_well_formed(seed in any::<u64>(), k in 1usize..=20, fold in 0usize..3) {
        let ds = dataset(9, 3, 30);
        let plan = &make_folds(&ds).unwrap()[fold];
        let pools = ClassPools::new(2, plan.episode_pool(&ds));
        let mut r = rng(seed);
        for _ in 0..50 {
            let ep = sample_training_episode(&pools, &EpisodeSpec::two_way(k), &mut r).unwrap();
            prop_assert!(ep.validate().is_ok());
            prop_assert!(ep.query_label < 2 && ep.query.class_index() == ep.query_label);
            for (c, class) in ep.support.iter().enumerate() {
                prop_assert_eq!(class.len(), k);
                prop_assert!(class.iter().all(|t| t.class_index() == c && t.subject_id != plan.test_subject));
            }
            prop_assert!(ep.support.iter().flatten().all(|t| t.trial_id != ep.query.trial_id));
        }
    }
}
