use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError, RelationMode};
use crate::data::{Episode, Trial, N_ELECTRODES, TRIAL_SAMPLES};
use crate::dsp::{FilterBank, FILTER_ORDER};
use crate::numcore::{Graph, Padding, ParamStore, Tensor, Var};
use crate::seeds::derive_seed;

/// Lower clamp applied before taking logs in the loss.
pub const LOG_FLOOR: f64 = 1e-30;

/// Values produced by one forward pass over an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationOutput {
    /// `attention_scores[i][j]`: score of support j of class i (all 1
    /// when attention is disabled).
    pub attention_scores: Vec<Vec<f64>>,
    /// Attention-weighted mean of each class's support embeddings.
    pub class_representatives: Vec<Arc<Tensor>>,
    /// Raw relation logits, one per class.
    pub logits: Vec<f64>,
    /// Relation scores after softmax or sigmoid.
    pub relation_scores: Vec<f64>,
    /// Argmax of `relation_scores`, lowest index on ties.
    pub predicted_class: usize,
}

/// One-hot target over the N classes of an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTarget {
    pub y: Vec<f64>,
}

impl EpisodeTarget {
    pub fn one_hot(n_way: usize, class: usize) -> Result<Self, ModelError> {
        if class >= n_way {
            return Err(ModelError::Config(vec![format!("target class {class} out of range 0..{n_way}")]));
        }
        let mut y = vec![0.0; n_way];
        y[class] = 1.0;
        Ok(Self { y })
    }

    pub fn class(&self) -> usize {
        self.y.iter().position(|&v| v == 1.0).expect("one-hot")
    }
}

/// Graph handles of the attention and relation heads.
pub struct Heads {
    /// Per-class attention weight vectors, each `[K]`.
    pub weights: Vec<Var>,
    pub representatives: Vec<Var>,
    /// `[N]` relation logits.
    pub logits: Var,
    /// `[N]` relation scores.
    pub scores: Var,
}

/// Graph handles of a training forward pass.
pub struct EpisodeForward {
    pub loss: Var,
    pub scores: Var,
    pub output: RelationOutput,
}

/// Parameters plus configuration of the full network.
#[derive(Clone, Debug)]
pub struct RelationNetwork {
    config: ModelConfig,
    params: ParamStore,
    /// `None` when the configured bands are the standard ones, whose
    /// decomposition is cached on each trial.
    bank: Option<FilterBank>,
}

fn bank_for(config: &ModelConfig) -> Result<Option<FilterBank>, ModelError> {
    let standard = FilterBank::standard();
    if standard.specs() == config.embedding.bands.as_slice() {
        Ok(None)
    } else {
        Ok(Some(FilterBank::new(config.embedding.bands.clone(), FILTER_ORDER)?))
    }
}

impl RelationNetwork {
    /// Fresh network with Glorot-uniform weights and zero biases.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["init"]));
        let mut params = ParamStore::new();
        for (name, shape) in config.parameter_shapes() {
            if name.ends_with(".bias") {
                params.insert(&name, Tensor::zeros(&shape))?;
                continue;
            }
            let (fan_in, fan_out) = match shape.as_slice() {
                [kt, ke, cin, cout] => (kt * ke * cin, kt * ke * cout),
                [d, m] => (*d, *m),
                _ => unreachable!("weights are rank 2 or 4"),
            };
            params.insert_glorot(&name, &shape, fan_in, fan_out, &mut rng)?;
        }
        let bank = bank_for(&config)?;
        Ok(Self { config, params, bank })
    }

    /// Wraps existing parameters after checking every expected tensor is
    /// present with the right shape and no extras exist.
    pub fn from_params(config: ModelConfig, params: ParamStore) -> Result<Self, ModelError> {
        config.validate()?;
        let expected = config.parameter_shapes();
        let mut problems = Vec::new();
        for (name, shape) in &expected {
            match params.get(name) {
                None => problems.push(format!("missing parameter `{name}`")),
                Some(t) if t.shape() != shape.as_slice() => {
                    problems.push(format!("parameter `{name}` has shape {:?}, expected {shape:?}", t.shape()))
                }
                Some(_) => {}
            }
        }
        for name in params.names() {
            if !expected.iter().any(|(n, _)| n == name) {
                problems.push(format!("unexpected parameter `{name}`"));
            }
        }
        if !problems.is_empty() {
            return Err(ModelError::Config(problems));
        }
        let bank = bank_for(&config)?;
        Ok(Self { config, params, bank })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore {
        self.params
    }

    /// Per-band `[875, 3, 1]` inputs for a trial.
    pub fn band_inputs(&self, trial: &Trial) -> Result<Vec<Tensor>, ModelError> {
        let owned;
        let stack = match &self.bank {
            None => trial.bands(),
            Some(bank) => {
                owned = bank.split(trial.samples(), N_ELECTRODES)?;
                &owned
            }
        };
        (0..stack.n_bands())
            .map(|b| Ok(Tensor::new(vec![TRIAL_SAMPLES, N_ELECTRODES, 1], stack.band(b).to_vec())?))
            .collect()
    }

    /// Embedding z of a trial, shape `[time_steps, 1, channels]`.
    pub fn embed(&self, g: &mut Graph, trial: &Trial) -> Result<Var, ModelError> {
        let e = &self.config.embedding;
        let mut per_band = Vec::with_capacity(e.bands.len());
        for (b, input) in self.band_inputs(trial)?.into_iter().enumerate() {
            let x = g.constant(input);
            let mut branches = Vec::with_capacity(e.branch_kernels.len());
            for i in 0..e.branch_kernels.len() {
                let k = g.param(&self.params, &format!("embed.band{b}.branch{i}.kernel"))?;
                let bias = g.param(&self.params, &format!("embed.band{b}.branch{i}.bias"))?;
                let y = g.conv2d(x, k, bias, Padding::SameTime)?;
                branches.push(g.relu(y)?);
            }
            let cat = g.concat_channels(&branches)?;
            let k = g.param(&self.params, &format!("embed.band{b}.fusion.kernel"))?;
            let bias = g.param(&self.params, &format!("embed.band{b}.fusion.bias"))?;
            let fused = g.conv2d(cat, k, bias, Padding::Valid)?;
            let fused = g.relu(fused)?;
            per_band.push(g.maxpool_time(fused, e.pool_window, e.pool_stride)?);
        }
        Ok(g.concat_channels(&per_band)?)
    }

    /// Embedding value outside any training graph.
    pub fn embed_value(&self, trial: &Trial) -> Result<Arc<Tensor>, ModelError> {
        let mut g = Graph::new();
        let z = self.embed(&mut g, trial)?;
        Ok(g.value_arc(z)?)
    }

    /// Shared conv → ReLU → … → GAP → dense stack of the two heads. The
    /// last dense layer has no activation.
    fn head(&self, g: &mut Graph, prefix: &str, n_conv: usize, n_dense: usize, input: Var) -> Result<Var, ModelError> {
        let mut h = input;
        for i in 0..n_conv {
            let k = g.param(&self.params, &format!("{prefix}.conv{i}.kernel"))?;
            let b = g.param(&self.params, &format!("{prefix}.conv{i}.bias"))?;
            let y = g.conv2d(h, k, b, Padding::Valid)?;
            h = g.relu(y)?;
        }
        h = g.global_avg_pool_time(h)?;
        for i in 0..n_dense {
            let w = g.param(&self.params, &format!("{prefix}.fc{i}.weight"))?;
            let b = g.param(&self.params, &format!("{prefix}.fc{i}.bias"))?;
            h = g.dense(h, w, b)?;
            if i + 1 < n_dense {
                h = g.relu(h)?;
            }
        }
        Ok(h)
    }

    /// Attention scores of one class's support embeddings against the
    /// query, and the resulting class representative.
    pub fn attend(&self, g: &mut Graph, support: &[Var], query: Var) -> Result<(Var, Var), ModelError> {
        let weights = if self.config.attention_enabled {
            let mut scores = Vec::with_capacity(support.len());
            for &z in support {
                let pair = g.concat_channels(&[z, query])?;
                let logit = self.head(g, "attention", self.config.attention.conv_kernels.len(), 2, pair)?;
                scores.push(g.sigmoid(logit)?);
            }
            g.stack(&scores)?
        } else {
            g.constant(Tensor::full(&[support.len()], 1.0))
        };
        let rep = g.weighted_average(weights, support)?;
        Ok((weights, rep))
    }

    /// Relation logit between a class representative and the query.
    pub fn relate(&self, g: &mut Graph, representative: Var, query: Var) -> Result<Var, ModelError> {
        let pair = g.concat_channels(&[representative, query])?;
        let n_dense = self.config.relation.hidden.len() + 1;
        self.head(g, "relation", self.config.relation.conv_kernels.len(), n_dense, pair)
    }

    /// Full forward from embeddings. Returns per-class attention weights,
    /// the stacked logits and the scores.
    pub fn forward_embeddings(
        &self,
        g: &mut Graph,
        support: &[Vec<Var>],
        query: Var,
    ) -> Result<Heads, ModelError> {
        if support.is_empty() || support.iter().any(Vec::is_empty) {
            return Err(ModelError::Config(vec!["every class needs at least one support trial".into()]));
        }
        let mut weights = Vec::with_capacity(support.len());
        let mut reps = Vec::with_capacity(support.len());
        let mut logits = Vec::with_capacity(support.len());
        for class in support {
            let (w, rep) = self.attend(g, class, query)?;
            weights.push(w);
            reps.push(rep);
            logits.push(self.relate(g, rep, query)?);
        }
        let logits = g.stack(&logits)?;
        let scores = match self.config.relation_mode {
            RelationMode::Softmax => g.softmax(logits)?,
            RelationMode::Sigmoid => g.sigmoid(logits)?,
        };
        Ok(Heads {
            weights,
            representatives: reps,
            logits,
            scores,
        })
    }

    fn output(&self, g: &Graph, h: &Heads) -> Result<RelationOutput, ModelError> {
        let scores = g.value(h.scores)?.data().to_vec();
        Ok(RelationOutput {
            attention_scores: h
                .weights
                .iter()
                .map(|&w| g.value(w).map(|t| t.data().to_vec()))
                .collect::<Result<_, _>>()?,
            class_representatives: h
                .representatives
                .iter()
                .map(|&r| g.value_arc(r))
                .collect::<Result<_, _>>()?,
            logits: g.value(h.logits)?.data().to_vec(),
            predicted_class: argmax(&scores),
            relation_scores: scores,
        })
    }

    /// Builds the whole episode (embeddings included) in `g` and attaches
    /// the loss against the query label.
    pub fn forward_episode(&self, g: &mut Graph, episode: &Episode) -> Result<EpisodeForward, ModelError> {
        episode.validate()?;
        let query = self.embed(g, &episode.query)?;
        let mut support = Vec::with_capacity(episode.n_way());
        for class in &episode.support {
            support.push(class.iter().map(|t| self.embed(g, t)).collect::<Result<Vec<_>, _>>()?);
        }
        let heads = self.forward_embeddings(g, &support, query)?;
        let target = EpisodeTarget::one_hot(episode.n_way(), episode.query_label)?;
        let loss = episode_loss(g, heads.scores, &target, self.config.relation_mode)?;
        let output = self.output(g, &heads)?;
        Ok(EpisodeForward {
            loss,
            scores: heads.scores,
            output,
        })
    }

    /// Inference from precomputed embeddings (no gradients needed).
    pub fn classify(&self, support: &[Vec<Arc<Tensor>>], query: &Arc<Tensor>) -> Result<RelationOutput, ModelError> {
        let mut g = Graph::new();
        let q = g.constant_arc(Arc::clone(query));
        let support: Vec<Vec<Var>> = support
            .iter()
            .map(|class| class.iter().map(|z| g.constant_arc(Arc::clone(z))).collect())
            .collect();
        let heads = self.forward_embeddings(&mut g, &support, q)?;
        self.output(&g, &heads)
    }

    /// Forward pass over an episode without keeping the graph.
    pub fn predict(&self, episode: &Episode) -> Result<(RelationOutput, f64), ModelError> {
        let mut g = Graph::new();
        let f = self.forward_episode(&mut g, episode)?;
        let loss = g.value(f.loss)?.item().expect("scalar loss");
        Ok((f.output, loss))
    }
}

/// Lowest index of the maximum.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Episode loss for a one-hot target.
///
/// Softmax mode: `−(1/N) Σᵢ yᵢ log max(rᵢ, 1e-30)`.
/// Sigmoid mode: mean binary cross-entropy over the N classes.
pub fn episode_loss(g: &mut Graph, scores: Var, target: &EpisodeTarget, mode: RelationMode) -> Result<Var, ModelError> {
    let n = g.value(scores)?.len();
    if target.y.len() != n {
        return Err(ModelError::Config(vec![format!("target has {} classes, scores have {n}", target.y.len())]));
    }
    let y = target.y.clone();
    let log_r = g.log_clamped(scores, LOG_FLOOR)?;
    let y_var = g.constant(Tensor::vector(y.clone())?);
    let mut total = g.mul(y_var, log_r)?;
    if mode == RelationMode::Sigmoid {
        let one_minus = g.affine(scores, -1.0, 1.0)?;
        let log_q = g.log_clamped(one_minus, LOG_FLOOR)?;
        let not_y = g.constant(Tensor::vector(y.iter().map(|v| 1.0 - v).collect())?);
        let neg = g.mul(not_y, log_q)?;
        total = g.add(total, neg)?;
    }
    let s = g.sum(total)?;
    Ok(g.affine(s, -1.0 / n as f64, 0.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_scores_give_half_log_two() {
        let mut g = Graph::new();
        let r = g.constant(Tensor::vector(vec![0.5, 0.5]).unwrap());
        let l = episode_loss(&mut g, r, &EpisodeTarget::one_hot(2, 0).unwrap(), RelationMode::Softmax).unwrap();
        let v = g.value(l).unwrap().item().unwrap();
        assert!((v - 0.5 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_score_is_clamped() {
        let mut g = Graph::new();
        let r = g.constant(Tensor::vector(vec![0.0, 1.0]).unwrap());
        let l = episode_loss(&mut g, r, &EpisodeTarget::one_hot(2, 0).unwrap(), RelationMode::Softmax).unwrap();
        let v = g.value(l).unwrap().item().unwrap();
        assert!((v - 0.5 * 30.0 * std::f64::consts::LN_10).abs() < 1e-9);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.8]), 1);
    }

    #[test]
    fn init_is_seeded_and_shapes_match() {
        let a = RelationNetwork::new(ModelConfig::reduced(), 3).unwrap();
        let b = RelationNetwork::new(ModelConfig::reduced(), 3).unwrap();
        let c = RelationNetwork::new(ModelConfig::reduced(), 4).unwrap();
        assert_eq!(a.params().get("relation.fc0.weight"), b.params().get("relation.fc0.weight"));
        assert_ne!(a.params().get("relation.fc0.weight"), c.params().get("relation.fc0.weight"));
        RelationNetwork::from_params(ModelConfig::reduced(), a.params().clone()).unwrap();
        assert!(RelationNetwork::from_params(ModelConfig::default(), a.into_params()).is_err());
    }
}
