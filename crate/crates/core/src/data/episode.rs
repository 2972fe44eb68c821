use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Trial};

/// N-way K-shot task geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub n_way: usize,
    pub k_shot: usize,
    pub queries_per_episode: usize,
}

impl EpisodeSpec {
    pub fn two_way(k_shot: usize) -> Self {
        Self {
            n_way: 2,
            k_shot,
            queries_per_episode: 1,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.n_way < 2 {
            return Err(DataError::Usage(format!("n_way must be at least 2, got {}", self.n_way)));
        }
        if self.k_shot < 1 {
            return Err(DataError::Usage("k_shot must be at least 1".into()));
        }
        if self.queries_per_episode != 1 {
            return Err(DataError::Usage(format!(
                "episodes carry exactly one query, got queries_per_episode = {}",
                self.queries_per_episode
            )));
        }
        Ok(())
    }
}

/// Support lists (one per class, K trials each) and a single query.
#[derive(Clone, Debug)]
pub struct Episode {
    pub support: Vec<Vec<Arc<Trial>>>,
    pub query: Arc<Trial>,
    pub query_label: usize,
}

impl Episode {
    pub fn n_way(&self) -> usize {
        self.support.len()
    }

    pub fn k_shot(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }

    /// Checks the shape invariants: equal non-empty class lists, distinct
    /// support ids, query not in the support set.
    pub fn validate(&self) -> Result<(), DataError> {
        let k = self.k_shot();
        if k == 0 || self.support.iter().any(|c| c.len() != k) {
            return Err(DataError::Usage("support classes must all hold the same K ≥ 1 trials".into()));
        }
        if self.query_label >= self.support.len() {
            return Err(DataError::Usage(format!(
                "query label {} out of range for {} classes",
                self.query_label,
                self.support.len()
            )));
        }
        let mut ids: Vec<&str> = self.support.iter().flatten().map(|t| t.trial_id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(DataError::Usage("support trials must be distinct".into()));
        }
        if ids.binary_search(&self.query.trial_id.as_str()).is_ok() {
            return Err(DataError::Usage("query trial appears in the support set".into()));
        }
        Ok(())
    }

    /// Same episode with the class lists in reverse order and the query
    /// label remapped.
    pub fn with_classes_reversed(&self) -> Episode {
        let n = self.support.len();
        Episode {
            support: self.support.iter().rev().cloned().collect(),
            query: Arc::clone(&self.query),
            query_label: n - 1 - self.query_label,
        }
    }
}

/// Replaces each support trial, independently with probability
/// `fraction`, by a distinct trial drawn from `noise`. Returns the new
/// episode and `corrupted[i][j]` flags in support order.
pub fn corrupt_support<R: Rng + ?Sized>(
    episode: &Episode,
    fraction: f64,
    noise: &[Arc<Trial>],
    rng: &mut R,
) -> Result<(Episode, Vec<Vec<bool>>), DataError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DataError::Usage(format!("corruption fraction must be in [0, 1], got {fraction}")));
    }
    let total: usize = episode.support.iter().map(Vec::len).sum();
    if fraction > 0.0 && noise.len() < total {
        return Err(DataError::Usage(format!(
            "noise pool has {} trials, episode needs up to {total}",
            noise.len()
        )));
    }
    let order = if fraction > 0.0 { sample(rng, noise.len(), total).into_vec() } else { Vec::new() };
    let mut next = order.into_iter();
    let mut flags = Vec::with_capacity(episode.support.len());
    let mut support = Vec::with_capacity(episode.support.len());
    for class in &episode.support {
        let mut f = Vec::with_capacity(class.len());
        let mut s = Vec::with_capacity(class.len());
        for t in class {
            if fraction > 0.0 && rng.random_bool(fraction) {
                s.push(Arc::clone(&noise[next.next().expect("pool sized above")]));
                f.push(true);
            } else {
                s.push(Arc::clone(t));
                f.push(false);
            }
        }
        flags.push(f);
        support.push(s);
    }
    Ok((
        Episode {
            support,
            query: Arc::clone(&episode.query),
            query_label: episode.query_label,
        },
        flags,
    ))
}

/// Trials grouped by class index.
#[derive(Clone, Debug, Default)]
pub struct ClassPools {
    by_class: Vec<Vec<Arc<Trial>>>,
}

impl ClassPools {
    pub fn new(n_classes: usize, trials: impl IntoIterator<Item = Arc<Trial>>) -> Self {
        let mut by_class = vec![Vec::new(); n_classes];
        for t in trials {
            if let Some(slot) = by_class.get_mut(t.class_index()) {
                slot.push(t);
            }
        }
        Self { by_class }
    }

    pub fn class(&self, index: usize) -> &[Arc<Trial>] {
        &self.by_class[index]
    }

    pub fn n_classes(&self) -> usize {
        self.by_class.len()
    }

    pub fn push(&mut self, trial: Arc<Trial>) {
        let c = trial.class_index();
        self.by_class[c].push(trial);
    }

    pub fn len(&self) -> usize {
        self.by_class.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws one episode: a uniformly random query class, K+1 distinct trials
/// of that class (the first is the query), and K distinct trials of every
/// other class.
pub fn sample_training_episode<R: Rng + ?Sized>(
    pools: &ClassPools,
    spec: &EpisodeSpec,
    rng: &mut R,
) -> Result<Episode, DataError> {
    spec.validate()?;
    if pools.n_classes() != spec.n_way {
        return Err(DataError::Usage(format!(
            "pool has {} classes but the episode is {}-way",
            pools.n_classes(),
            spec.n_way
        )));
    }
    let k = spec.k_shot;
    for c in 0..spec.n_way {
        if pools.class(c).len() < k {
            return Err(DataError::InsufficientPool {
                class: c,
                needed: k,
                available: pools.class(c).len(),
            });
        }
    }
    let query_label = rng.random_range(0..spec.n_way);
    let query_pool = pools.class(query_label);
    if query_pool.len() < k + 1 {
        return Err(DataError::InsufficientPool {
            class: query_label,
            needed: k + 1,
            available: query_pool.len(),
        });
    }
    let mut query = None;
    let mut support = Vec::with_capacity(spec.n_way);
    for c in 0..spec.n_way {
        let pool = pools.class(c);
        let take = if c == query_label { k + 1 } else { k };
        let picked = sample(rng, pool.len(), take);
        let mut members: Vec<Arc<Trial>> = picked.iter().map(|i| Arc::clone(&pool[i])).collect();
        if c == query_label {
            query = Some(members.remove(0));
        }
        support.push(members);
    }
    Ok(Episode {
        support,
        query: query.expect("query class visited"),
        query_label,
    })
}
