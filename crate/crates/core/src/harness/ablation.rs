use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::data::{corrupt_support, sample_training_episode, ClassPools, EpisodeSpec, Trial};
use crate::model::RelationNetwork;

/// Attention scores split by whether the support trial was replaced by
/// noise, plus query accuracy on the corrupted episodes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionProbe {
    pub clean_scores: Vec<f64>,
    pub corrupted_scores: Vec<f64>,
    pub correct: usize,
    pub episodes: usize,
}

impl CorruptionProbe {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.episodes as f64
    }
}

/// Samples `episodes` K-shot episodes from `trials`, corrupts each support
/// trial with probability `fraction`, and records what the network does.
pub fn probe_corrupted_support<R: Rng + ?Sized>(
    net: &RelationNetwork,
    trials: &[Arc<Trial>],
    k_shot: usize,
    fraction: f64,
    noise: &[Arc<Trial>],
    episodes: usize,
    rng: &mut R,
) -> Result<CorruptionProbe, HarnessError> {
    let spec = EpisodeSpec::two_way(k_shot);
    let pools = ClassPools::new(spec.n_way, trials.iter().cloned());
    let mut probe = CorruptionProbe {
        episodes,
        ..CorruptionProbe::default()
    };
    for _ in 0..episodes {
        let ep = sample_training_episode(&pools, &spec, rng)?;
        let (ep, flags) = corrupt_support(&ep, fraction, noise, rng)?;
        let (out, _) = net.predict(&ep)?;
        for (scores, flags) in out.attention_scores.iter().zip(&flags) {
            for (&a, &bad) in scores.iter().zip(flags) {
                if bad {
                    probe.corrupted_scores.push(a);
                } else {
                    probe.clean_scores.push(a);
                }
            }
        }
        probe.correct += usize::from(out.predicted_class == ep.query_label);
    }
    Ok(probe)
}
