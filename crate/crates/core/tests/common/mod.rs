//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use eeg_fewshot::data::{synthesize_trials, Dataset, Episode, Label, SynthConfig, Trial, N_ELECTRODES, TRIAL_SAMPLES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn synth(seed: u64, subjects: usize, per_class: usize) -> SynthConfig {
    SynthConfig {
        seed,
        n_subjects: subjects,
        trials_per_class: per_class,
        ..SynthConfig::default()
    }
}

pub fn dataset(seed: u64, subjects: usize, per_class: usize) -> Dataset {
    Dataset::from_trials(synthesize_trials(&synth(seed, subjects, per_class)).unwrap())
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn random_trial(rng: &mut ChaCha8Rng, label: Label, id: &str) -> Trial {
    Trial::new(uniform(rng, TRIAL_SAMPLES * N_ELECTRODES, -1.0, 1.0), label, "S00", "A", id).unwrap()
}

pub fn random_episode(rng: &mut ChaCha8Rng, k: usize, query_label: usize) -> Episode {
    let support = Label::ALL
        .iter()
        .map(|&label| {
            (0..k)
                .map(|j| Arc::new(random_trial(rng, label, &format!("{label:?}-{j}"))))
                .collect()
        })
        .collect();
    Episode {
        support,
        query: Arc::new(random_trial(rng, Label::ALL[query_label], "query")),
        query_label,
    }
}

/// Sinusoid sampled at 250 Hz.
pub fn sine(freq_hz: f64, n: usize, amplitude: f64) -> Vec<f64> {
    (0..n)
        .map(|t| amplitude * (2.0 * std::f64::consts::PI * freq_hz * t as f64 / 250.0).sin())
        .collect()
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Central half of a signal, away from filter edge effects.
pub fn central(x: &[f64]) -> &[f64] {
    &x[x.len() / 4..3 * x.len() / 4]
}
