//! Leave-one-subject-out cross-validation on synthetic data, with folds
//! trained on worker threads. The table is the same for any `jobs`.
//!
//! `cargo run --release --example cross_validation -- [jobs]`

use anyhow::{Context, Result};
use eeg_fewshot::data::{synthesize_trials, Dataset, SynthConfig};
use eeg_fewshot::harness::{cross_validate, CrossValConfig, TrainConfig};
use eeg_fewshot::model::ModelConfig;

fn main() -> Result<()> {
    let jobs: usize = match std::env::args().nth(1) {
        Some(s) => s.parse().context("jobs must be an integer")?,
        None => 1,
    };
    let ds = Dataset::from_trials(synthesize_trials(&SynthConfig {
        seed: 19,
        n_subjects: 3,
        trials_per_class: 30,
        ..SynthConfig::default()
    })?);
    let cfg = CrossValConfig {
        train: TrainConfig {
            batch_episodes: 8,
            lr0: 1e-3,
            max_iterations: 100,
            eval_every: 10,
            val_episodes: 40,
            ..TrainConfig::default()
        },
        eval_k: vec![1, 5, 10, 20],
        repeats: 5,
        jobs,
        ..CrossValConfig::default()
    };
    let report = cross_validate(&ds, &ModelConfig::reduced(), &cfg, 42, &|plan, out| {
        eprintln!("fold {} done, best val loss {:.4}", plan.index, out.best_val_loss);
        Ok(())
    })?;
    for f in &report.folds {
        let accs: Vec<String> = f.reports.iter().map(|r| format!("{:.3}", r.accuracy)).collect();
        println!("fold {} ({}): {}", f.fold, f.test_subject, accs.join("  "));
    }
    for s in &report.summaries {
        println!("k={:>2}: {}", s.k_shot, s.formatted);
    }
    Ok(())
}
