use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate_subject, EvalConfig, SubjectReport};
use super::report::format_mean_std;
use super::stats::{mean, sample_std};
use super::train::{train, LogRecord, TrainConfig, TrainOutcome};
use super::HarnessError;
use crate::data::{make_folds, Dataset, FoldPlan, TEST_SUPPORT_PER_CLASS};
use crate::model::{ModelConfig, RelationNetwork};
use crate::seeds::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossValConfig {
    pub train: TrainConfig,
    /// Shots evaluated on every held-out subject.
    pub eval_k: Vec<usize>,
    pub repeats: usize,
    pub support_per_class: usize,
    /// Restrict the run to these fold indices; empty runs every fold.
    pub folds: Vec<usize>,
    /// Folds trained concurrently. Results do not depend on it.
    pub jobs: usize,
}

impl Default for CrossValConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            eval_k: vec![1, 5, 10, 20],
            repeats: 10,
            support_per_class: TEST_SUPPORT_PER_CLASS,
            folds: Vec::new(),
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_subject: String,
    pub seed: u64,
    pub best_iteration: u64,
    pub best_val_loss: f64,
    /// One report per evaluated k.
    pub reports: Vec<SubjectReport>,
    pub log: Vec<LogRecord>,
}

/// Accuracy across folds (or subjects) for one k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k_shot: usize,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// `"Average ± Std"` in percent.
    pub formatted: String,
}

impl KSummary {
    pub fn new(k_shot: usize, accuracies: Vec<f64>) -> Self {
        let (m, s) = (mean(&accuracies), sample_std(&accuracies));
        Self {
            k_shot,
            formatted: format_mean_std(m, s),
            accuracies,
            mean: m,
            std: s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub master_seed: u64,
    pub folds: Vec<FoldResult>,
    pub summaries: Vec<KSummary>,
}

/// Seed owned by one fold, derived from the master seed.
pub fn fold_seed(master: u64, fold: usize) -> u64 {
    derive_seed(master, &["fold", &fold.to_string()])
}

fn eval_config(cfg: &CrossValConfig, k: usize) -> EvalConfig {
    EvalConfig {
        k_shot: k,
        repeats: cfg.repeats,
        support_per_class: cfg.support_per_class,
    }
}

/// Evaluates `net` on one subject for every k, each with its own seeded
/// stream.
pub fn evaluate_all_k(
    net: &RelationNetwork,
    trials: &[std::sync::Arc<crate::data::Trial>],
    cfg: &CrossValConfig,
    seed: u64,
) -> Result<Vec<SubjectReport>, HarnessError> {
    cfg.eval_k
        .iter()
        .map(|&k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["eval", &k.to_string()]));
            evaluate_subject(net, trials, &eval_config(cfg, k), &mut rng)
        })
        .collect()
}

fn run_fold(
    dataset: &Dataset,
    plan: &FoldPlan,
    model: &ModelConfig,
    cfg: &CrossValConfig,
    master: u64,
    on_fold: &(dyn Fn(&FoldPlan, &TrainOutcome) -> Result<(), HarnessError> + Sync),
) -> Result<FoldResult, HarnessError> {
    let seed = fold_seed(master, plan.index);
    let train_cfg = TrainConfig {
        seed: derive_seed(seed, &["train"]),
        ..cfg.train.clone()
    };
    let outcome = train(dataset, plan, model, &train_cfg, &mut |_| Ok(()))?;
    on_fold(plan, &outcome)?;
    let reports = evaluate_all_k(&outcome.best, &plan.test_trials(dataset), cfg, seed)?;
    Ok(FoldResult {
        fold: plan.index,
        test_subject: plan.test_subject.clone(),
        seed,
        best_iteration: outcome.best_iteration,
        best_val_loss: outcome.best_val_loss,
        reports,
        log: outcome.log,
    })
}

/// Leave-one-subject-out cross-validation. Every fold trains from its own
/// derived seed, so results are identical for any `jobs`.
pub fn cross_validate(
    dataset: &Dataset,
    model: &ModelConfig,
    cfg: &CrossValConfig,
    master_seed: u64,
    on_fold: &(dyn Fn(&FoldPlan, &TrainOutcome) -> Result<(), HarnessError> + Sync),
) -> Result<CrossValReport, HarnessError> {
    cfg.train.validate()?;
    if cfg.eval_k.is_empty() {
        return Err(HarnessError::Config(vec!["eval_k must list at least one k".into()]));
    }
    let all = make_folds(dataset)?;
    let plans: Vec<FoldPlan> = if cfg.folds.is_empty() {
        all
    } else {
        let mut bad = Vec::new();
        for &f in &cfg.folds {
            if f >= all.len() {
                bad.push(format!("fold {f} out of range 0..{}", all.len()));
            }
        }
        if !bad.is_empty() {
            return Err(HarnessError::Config(bad));
        }
        all.into_iter().filter(|p| cfg.folds.contains(&p.index)).collect()
    };
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<FoldResult, HarnessError>>>> =
        Mutex::new((0..plans.len()).map(|_| None).collect());
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(plan) = plans.get(i) else { break };
        let r = run_fold(dataset, plan, model, cfg, master_seed, on_fold).map_err(|e| HarnessError::Fold {
            fold: plan.index,
            source: Box::new(e),
        });
        results.lock().expect("no poisoned workers")[i] = Some(r);
    };
    let jobs = cfg.jobs.clamp(1, plans.len().max(1));
    std::thread::scope(|s| {
        for _ in 1..jobs {
            s.spawn(worker);
        }
        worker();
    });
    let folds = results
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every fold ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let summaries = cfg
        .eval_k
        .iter()
        .enumerate()
        .map(|(i, &k)| KSummary::new(k, folds.iter().map(|f| f.reports[i].accuracy).collect()))
        .collect();
    Ok(CrossValReport {
        master_seed,
        folds,
        summaries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEvalReport {
    pub seed: u64,
    /// Per subject, one report per k.
    pub subjects: Vec<Vec<SubjectReport>>,
    /// Across subjects, one per k.
    pub summaries: Vec<KSummary>,
}

/// Applies a trained network, unchanged, to every subject of another
/// dataset with the same protocol as the held-out evaluation.
pub fn cross_dataset_eval(
    net: &RelationNetwork,
    dataset: &Dataset,
    cfg: &CrossValConfig,
    seed: u64,
) -> Result<DatasetEvalReport, HarnessError> {
    let subjects = dataset
        .subjects()
        .iter()
        .map(|s| evaluate_all_k(net, &dataset.trials_of(s), cfg, derive_seed(seed, &["subject", s])))
        .collect::<Result<Vec<_>, _>>()?;
    let summaries = cfg
        .eval_k
        .iter()
        .enumerate()
        .map(|(i, &k)| KSummary::new(k, subjects.iter().map(|r| r[i].accuracy).collect()))
        .collect();
    Ok(DatasetEvalReport {
        seed,
        subjects,
        summaries,
    })
}
