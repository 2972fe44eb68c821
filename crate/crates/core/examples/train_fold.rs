//! Trains the reduced network on one leave-one-subject-out fold of a
//! synthetic dataset and evaluates the held-out subject at 1, 5 and 20
//! shots.
//!
//! `cargo run --release --example train_fold -- [iterations]`

use anyhow::{Context, Result};
use eeg_fewshot::data::{make_folds, synthesize_trials, Dataset, SynthConfig};
use eeg_fewshot::harness::{evaluate_subject, train, EvalConfig, TrainConfig};
use eeg_fewshot::model::ModelConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let iterations: u64 = match std::env::args().nth(1) {
        Some(s) => s.parse().context("iterations must be an integer")?,
        None => 60,
    };
    let ds = Dataset::from_trials(synthesize_trials(&SynthConfig {
        seed: 7,
        n_subjects: 4,
        trials_per_class: 40,
        ..SynthConfig::default()
    })?);
    let fold = &make_folds(&ds)?[0];
    let cfg = TrainConfig {
        batch_episodes: 8,
        lr0: 1e-3,
        max_iterations: iterations,
        eval_every: 10,
        val_episodes: 40,
        k_shot: 5,
        seed: 1,
        ..TrainConfig::default()
    };
    let out = train(&ds, fold, &ModelConfig::reduced(), &cfg, &mut |r| {
        if let Some(v) = r.val_loss {
            println!("iter {:>4}  lr {:.3e}  train {:.4}  val {v:.4}", r.iteration, r.lr, r.train_loss);
        }
        Ok(())
    })?;
    println!("best validation loss {:.4} at iteration {}", out.best_val_loss, out.best_iteration);

    let test = fold.test_trials(&ds);
    for k in [1, 5, 20] {
        let eval = EvalConfig {
            k_shot: k,
            ..EvalConfig::default()
        };
        let report = evaluate_subject(&out.best, &test, &eval, &mut ChaCha8Rng::seed_from_u64(0))?;
        println!("{} {k:>2}-shot accuracy {:.3}", fold.test_subject, report.accuracy);
    }
    Ok(())
}
