use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;

use super::{ClassPools, DataError, Trial};

/// Support candidates per class drawn for the test subject.
pub const TEST_SUPPORT_PER_CLASS: usize = 20;

/// Evaluation split of one subject's trials.
#[derive(Clone, Debug)]
pub struct TestSplit {
    /// `support_per_class` trials per class.
    pub support: Vec<Vec<Arc<Trial>>>,
    /// Everything not drawn into the support set, with its class index.
    pub queries: Vec<Arc<Trial>>,
}

impl TestSplit {
    /// Draws `k` of each class's support candidates without replacement.
    pub fn subsample_support<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<Vec<Arc<Trial>>>, DataError> {
        self.support
            .iter()
            .enumerate()
            .map(|(class, pool)| {
                if k == 0 || k > pool.len() {
                    return Err(DataError::Split {
                        class,
                        needed: k.max(1),
                        available: pool.len(),
                    });
                }
                if k == pool.len() {
                    return Ok(pool.clone());
                }
                Ok(sample(rng, pool.len(), k).iter().map(|i| Arc::clone(&pool[i])).collect())
            })
            .collect()
    }
}

/// Random per-class split into `support_per_class` support trials and the
/// remaining query trials. Queries keep their class order (all class 0,
/// then class 1, …), each class in original trial order.
pub fn make_test_split<R: Rng + ?Sized>(
    trials: &[Arc<Trial>],
    n_classes: usize,
    support_per_class: usize,
    rng: &mut R,
) -> Result<TestSplit, DataError> {
    let pools = ClassPools::new(n_classes, trials.iter().cloned());
    let mut support = Vec::with_capacity(n_classes);
    let mut queries = Vec::new();
    for c in 0..n_classes {
        let pool = pools.class(c);
        if pool.len() < support_per_class + 1 {
            return Err(DataError::Split {
                class: c,
                needed: support_per_class + 1,
                available: pool.len(),
            });
        }
        let mut chosen = sample(rng, pool.len(), support_per_class).into_vec();
        support.push(chosen.iter().map(|&i| Arc::clone(&pool[i])).collect());
        chosen.sort_unstable();
        queries.extend(
            pool.iter()
                .enumerate()
                .filter(|(i, _)| chosen.binary_search(i).is_err())
                .map(|(_, t)| Arc::clone(t)),
        );
    }
    Ok(TestSplit { support, queries })
}
