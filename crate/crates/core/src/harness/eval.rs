use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::data::{make_test_split, Trial, TEST_SUPPORT_PER_CLASS};
use crate::model::RelationNetwork;
use crate::numcore::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k_shot: usize,
    pub repeats: usize,
    /// Support candidates drawn per class before sub-sampling k.
    pub support_per_class: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k_shot: 20,
            repeats: 10,
            support_per_class: TEST_SUPPORT_PER_CLASS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryPrediction {
    pub trial_id: String,
    pub true_class: usize,
    pub predicted_class: usize,
    pub relation_scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub predictions: Vec<QueryPrediction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub subject: String,
    pub k_shot: usize,
    pub repeats: Vec<RepeatResult>,
    /// Mean of the per-repeat accuracies.
    pub accuracy: f64,
    /// Summed over repeats.
    pub confusion: Vec<Vec<u64>>,
}

/// Repeat-averaged few-shot accuracy on one subject. Each repeat draws a
/// fresh per-class support set, sub-samples `k_shot` of it, and classifies
/// every remaining trial as a query. The network is only read.
pub fn evaluate_subject<R: Rng + ?Sized>(
    net: &RelationNetwork,
    trials: &[Arc<Trial>],
    cfg: &EvalConfig,
    rng: &mut R,
) -> Result<SubjectReport, HarnessError> {
    if cfg.repeats == 0 || cfg.k_shot == 0 || cfg.k_shot > cfg.support_per_class {
        return Err(HarnessError::Config(vec![format!(
            "need repeats ≥ 1 and 1 ≤ k ≤ {}, got repeats {} and k {}",
            cfg.support_per_class, cfg.repeats, cfg.k_shot
        )]));
    }
    let subject = trials.first().map(|t| t.subject_id.clone()).unwrap_or_default();
    let n = 2;
    // Parameters are fixed, so each trial is embedded at most once.
    let mut cache: HashMap<String, Arc<Tensor>> = HashMap::new();
    let mut embed = |t: &Trial| -> Result<Arc<Tensor>, HarnessError> {
        if let Some(z) = cache.get(&t.trial_id) {
            return Ok(Arc::clone(z));
        }
        let z = net.embed_value(t)?;
        cache.insert(t.trial_id.clone(), Arc::clone(&z));
        Ok(z)
    };
    let mut repeats = Vec::with_capacity(cfg.repeats);
    let mut total = vec![vec![0u64; n]; n];
    for repeat in 0..cfg.repeats {
        let split = make_test_split(trials, n, cfg.support_per_class, rng)?;
        let support = split.subsample_support(cfg.k_shot, rng)?;
        let support_z = support
            .iter()
            .map(|class| class.iter().map(|t| embed(t)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let mut confusion = vec![vec![0u64; n]; n];
        let mut predictions = Vec::with_capacity(split.queries.len());
        for q in &split.queries {
            let out = net.classify(&support_z, &embed(q)?)?;
            confusion[q.class_index()][out.predicted_class] += 1;
            predictions.push(QueryPrediction {
                trial_id: q.trial_id.clone(),
                true_class: q.class_index(),
                predicted_class: out.predicted_class,
                relation_scores: out.relation_scores,
            });
        }
        let correct: u64 = (0..n).map(|c| confusion[c][c]).sum();
        let accuracy = correct as f64 / predictions.len() as f64;
        for (row, add) in total.iter_mut().zip(&confusion) {
            for (a, b) in row.iter_mut().zip(add) {
                *a += b;
            }
        }
        repeats.push(RepeatResult {
            repeat,
            accuracy,
            confusion,
            predictions,
        });
    }
    let accuracy = repeats.iter().map(|r| r.accuracy).sum::<f64>() / repeats.len() as f64;
    Ok(SubjectReport {
        subject,
        k_shot: cfg.k_shot,
        repeats,
        accuracy,
        confusion: total,
    })
}
