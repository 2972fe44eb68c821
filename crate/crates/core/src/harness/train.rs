use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::data::{
    augment_pool, corrupt_support, noise_trials, sample_training_episode, AugmentConfig, ClassPools, Dataset, Episode, EpisodeSpec, FoldPlan, Trial,
};
use crate::model::{ModelConfig, RelationNetwork};
use crate::numcore::{AdamConfig, Gradients, Graph};
use crate::seeds::derive_seed;

/// Noise trials generated when `support_noise` is on.
const NOISE_POOL: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Episodes averaged per optimizer step.
    pub batch_episodes: usize,
    pub lr0: f64,
    /// Multiplicative decay applied after every iteration.
    pub decay_per_iteration: f64,
    pub max_iterations: u64,
    /// Iterations between validation-loss measurements.
    pub eval_every: u64,
    pub seed: u64,
    pub k_shot: usize,
    /// Size of the fixed validation episode set.
    pub val_episodes: usize,
    pub augment: AugmentConfig,
    /// Probability that each training support trial is swapped for a
    /// rhythm-free noise trial. 0 disables it.
    pub support_noise: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_episodes: 100,
            lr0: 1e-4,
            decay_per_iteration: 0.00033,
            max_iterations: 20_000,
            eval_every: 100,
            seed: 0,
            k_shot: 5,
            val_episodes: 500,
            augment: AugmentConfig::default(),
            support_noise: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut p = Vec::new();
        if self.batch_episodes == 0 {
            p.push("batch_episodes must be positive".to_string());
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            p.push(format!("lr0 must be positive, got {}", self.lr0));
        }
        if !(0.0..1.0).contains(&self.decay_per_iteration) {
            p.push(format!("decay_per_iteration must be in [0, 1), got {}", self.decay_per_iteration));
        }
        if self.max_iterations == 0 {
            p.push("max_iterations must be positive".to_string());
        }
        if self.eval_every == 0 {
            p.push("eval_every must be positive".to_string());
        }
        if self.k_shot == 0 {
            p.push("k_shot must be positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.support_noise) {
            p.push(format!("support_noise must be in [0, 1], got {}", self.support_noise));
        }
        if self.val_episodes == 0 {
            p.push("val_episodes must be positive".to_string());
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(p))
        }
    }
}

/// Learning rate used by the optimizer step of iteration `t` (0-based):
/// `lr0 · (1 − decay)^t`.
pub fn lr_at(cfg: &TrainConfig, t: u64) -> f64 {
    cfg.lr0 * (1.0 - cfg.decay_per_iteration).powf(t as f64)
}

/// One line of the training log. `iteration` counts completed steps and
/// `lr` is the rate that step used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub iteration: u64,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

pub struct TrainOutcome {
    /// Network at the minimum validation loss.
    pub best: RelationNetwork,
    pub best_iteration: u64,
    pub best_val_loss: f64,
    /// Network after the last iteration.
    pub last: RelationNetwork,
    pub log: Vec<LogRecord>,
}

fn mean_loss(net: &RelationNetwork, episodes: &[Episode]) -> Result<f64, HarnessError> {
    let mut total = 0.0;
    for ep in episodes {
        total += net.predict(ep)?.1;
    }
    Ok(total / episodes.len() as f64)
}

/// Trains one model on a fold. `on_record` sees every log line as it is
/// produced (the CLI streams them to disk).
pub fn train(
    dataset: &Dataset,
    fold: &FoldPlan,
    model: &ModelConfig,
    cfg: &TrainConfig,
    on_record: &mut dyn FnMut(&LogRecord) -> Result<(), HarnessError>,
) -> Result<TrainOutcome, HarnessError> {
    cfg.validate()?;
    let spec = EpisodeSpec::two_way(cfg.k_shot);
    let mut pool: Vec<Arc<Trial>> = fold.episode_pool(dataset);
    let mut aug_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &["augment"]));
    let extra = augment_pool(&fold.train_trials(dataset), &cfg.augment, &mut aug_rng)?;
    pool.extend(extra);
    let pools = ClassPools::new(spec.n_way, pool);
    let val_pools = ClassPools::new(spec.n_way, fold.val_trials(dataset));

    let mut val_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &["val-episodes"]));
    let val_set = (0..cfg.val_episodes)
        .map(|_| sample_training_episode(&val_pools, &spec, &mut val_rng))
        .collect::<Result<Vec<_>, _>>()?;

    let noise: Vec<Arc<Trial>> = if cfg.support_noise > 0.0 {
        noise_trials(NOISE_POOL, derive_seed(cfg.seed, &["noise"]))?
            .into_iter()
            .map(Arc::new)
            .collect()
    } else {
        Vec::new()
    };
    let corrupt = |ep: Episode, rng: &mut ChaCha8Rng| -> Result<Episode, HarnessError> {
        if noise.is_empty() {
            Ok(ep)
        } else {
            Ok(corrupt_support(&ep, cfg.support_noise, &noise, rng)?.0)
        }
    };
    let val_set = val_set
        .into_iter()
        .map(|ep| corrupt(ep, &mut val_rng))
        .collect::<Result<Vec<_>, _>>()?;

    let mut net = RelationNetwork::new(model.clone(), derive_seed(cfg.seed, &["model"]))?;
    let adam = AdamConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &["episodes"]));
    let mut best: Option<(RelationNetwork, u64, f64)> = None;
    let mut log = Vec::new();
    let scale = 1.0 / cfg.batch_episodes as f64;

    for t in 0..cfg.max_iterations {
        let lr = lr_at(cfg, t);
        let mut grads = Gradients::zeros_like(net.params());
        let mut loss_sum = 0.0;
        for _ in 0..cfg.batch_episodes {
            let ep = sample_training_episode(&pools, &spec, &mut rng)?;
            let ep = corrupt(ep, &mut rng)?;
            let mut g = Graph::new();
            let f = net.forward_episode(&mut g, &ep)?;
            let loss = g.value(f.loss)?.item().expect("scalar loss");
            if !loss.is_finite() {
                return Err(HarnessError::Diverged { iteration: t + 1, lr, loss });
            }
            loss_sum += loss;
            grads.accumulate(&g.backward_scaled(f.loss, scale, net.params())?, 1.0)?;
        }
        if !grads.is_finite() {
            return Err(HarnessError::Diverged {
                iteration: t + 1,
                lr,
                loss: f64::NAN,
            });
        }
        net.params_mut().adam_step(&grads, lr, &adam)?;

        let iteration = t + 1;
        let val_loss = if iteration % cfg.eval_every == 0 || iteration == cfg.max_iterations {
            let v = mean_loss(&net, &val_set)?;
            if !v.is_finite() {
                return Err(HarnessError::Diverged { iteration, lr, loss: v });
            }
            if best.as_ref().is_none_or(|(_, _, b)| v < *b) {
                best = Some((net.clone(), iteration, v));
            }
            Some(v)
        } else {
            None
        };
        let record = LogRecord {
            iteration,
            lr,
            train_loss: loss_sum * scale,
            val_loss,
        };
        on_record(&record)?;
        log.push(record);
    }
    let (best, best_iteration, best_val_loss) = best.expect("final iteration always validates");
    Ok(TrainOutcome {
        best,
        best_iteration,
        best_val_loss,
        last: net,
        log,
    })
}
