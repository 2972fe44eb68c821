//! Trains with and without attention while a share of every support set
//! is replaced by rhythm-free noise, then compares the attention each
//! model gives to noise and to genuine support trials.
//!
//! `cargo run --release --example attention_ablation -- [iterations]`

use std::sync::Arc;

use anyhow::{Context, Result};
use eeg_fewshot::data::{make_folds, noise_trials, synthesize_trials, Dataset, SynthConfig, Trial};
use eeg_fewshot::harness::{probe_corrupted_support, stats, train, TrainConfig};
use eeg_fewshot::model::ModelConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FRACTION: f64 = 0.3;

fn main() -> Result<()> {
    let iterations: u64 = match std::env::args().nth(1) {
        Some(s) => s.parse().context("iterations must be an integer")?,
        None => 250,
    };
    let ds = Dataset::from_trials(synthesize_trials(&SynthConfig {
        seed: 7,
        n_subjects: 4,
        trials_per_class: 40,
        ..SynthConfig::default()
    })?);
    let fold = &make_folds(&ds)?[0];
    let test = fold.test_trials(&ds);
    let noise: Vec<Arc<Trial>> = noise_trials(128, 99)?.into_iter().map(Arc::new).collect();
    let cfg = TrainConfig {
        batch_episodes: 8,
        lr0: 1e-3,
        max_iterations: iterations,
        eval_every: 20,
        val_episodes: 40,
        k_shot: 5,
        seed: 1,
        support_noise: FRACTION,
        ..TrainConfig::default()
    };
    for attention in [true, false] {
        let model = ModelConfig {
            attention_enabled: attention,
            ..ModelConfig::reduced()
        };
        let out = train(&ds, fold, &model, &cfg, &mut |_| Ok(()))?;
        let probe = probe_corrupted_support(&out.best, &test, 5, FRACTION, &noise, 200, &mut ChaCha8Rng::seed_from_u64(3))?;
        print!("attention {:<5} accuracy {:.3}", attention, probe.accuracy());
        if attention {
            let (t, p) = stats::welch_less(&probe.corrupted_scores, &probe.clean_scores);
            print!(
                "  weight on noise {:.3}, on clean {:.3} (t {t:.1}, p {p:.1e})",
                stats::mean(&probe.corrupted_scores),
                stats::mean(&probe.clean_scores)
            );
        }
        println!();
    }
    Ok(())
}
