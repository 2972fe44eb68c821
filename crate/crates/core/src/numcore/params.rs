use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use super::{Gradients, NumError, Tensor};

/// Adam hyperparameters. Defaults are β1 = 0.9, β2 = 0.999, ε = 1e-8.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moment estimates for one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: Tensor,
    pub second_moment: Tensor,
    pub step: u64,
}

impl AdamState {
    fn fresh(shape: &[usize]) -> Self {
        Self {
            first_moment: Tensor::zeros(shape),
            second_moment: Tensor::zeros(shape),
            step: 0,
        }
    }
}

#[derive(Clone, Debug)]
struct Entry {
    value: Arc<Tensor>,
    adam: AdamState,
}

/// Named learnable parameters with their optimizer state.
///
/// Paths are unique and iterate in sorted order, which fixes the order of
/// every reduction over parameters.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    entries: BTreeMap<String, Entry>,
}

impl PartialEq for ParamStore {
    fn eq(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|((ka, a), (kb, b))| {
                ka == kb && a.value == b.value && a.adam == b.adam
            })
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor) -> Result<(), NumError> {
        if self.entries.contains_key(name) {
            return Err(NumError::Usage(format!("duplicate parameter path `{name}`")));
        }
        let adam = AdamState::fresh(value.shape());
        self.entries.insert(
            name.to_string(),
            Entry {
                value: Arc::new(value),
                adam,
            },
        );
        Ok(())
    }

    /// Inserts a parameter together with previously saved optimizer state.
    pub fn insert_with_state(&mut self, name: &str, value: Tensor, adam: AdamState) -> Result<(), NumError> {
        if adam.first_moment.shape() != value.shape() || adam.second_moment.shape() != value.shape() {
            return Err(NumError::Usage(format!(
                "optimizer moments for `{name}` do not match parameter shape {:?}",
                value.shape()
            )));
        }
        self.insert(name, value)?;
        self.entries.get_mut(name).expect("just inserted").adam = adam;
        Ok(())
    }

    /// Glorot-uniform initialisation: U(±sqrt(6 / (fan_in + fan_out))).
    pub fn insert_glorot<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Result<(), NumError> {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-limit..limit)).collect();
        self.insert(name, Tensor::new(shape.to_vec(), data)?)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name).map(|e| e.value.as_ref())
    }

    pub(crate) fn get_arc(&self, name: &str) -> Option<Arc<Tensor>> {
        self.entries.get(name).map(|e| Arc::clone(&e.value))
    }

    pub fn adam_state(&self, name: &str) -> Option<&AdamState> {
        self.entries.get(name).map(|e| &e.adam)
    }

    /// Replaces a parameter value, keeping its optimizer state.
    pub fn set(&mut self, name: &str, value: Tensor) -> Result<(), NumError> {
        let entry = self
            .entries
            .get_mut(name)
            .ok_or_else(|| NumError::Usage(format!("no parameter named `{name}`")))?;
        if entry.value.shape() != value.shape() {
            return Err(NumError::Usage(format!(
                "shape {:?} does not match parameter `{name}` {:?}",
                value.shape(),
                entry.value.shape()
            )));
        }
        entry.value = Arc::new(value);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.value.as_ref()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(|e| e.value.len()).sum()
    }

    /// One Adam update with bias correction. Every parameter must have a
    /// gradient of matching shape.
    pub fn adam_step(&mut self, grads: &Gradients, lr: f64, cfg: &AdamConfig) -> Result<(), NumError> {
        for (name, entry) in &self.entries {
            let g = grads
                .get(name)
                .ok_or_else(|| NumError::Usage(format!("missing gradient for parameter `{name}`")))?;
            if g.shape() != entry.value.shape() {
                return Err(NumError::Usage(format!("gradient shape mismatch for `{name}`")));
            }
        }
        for (name, entry) in self.entries.iter_mut() {
            let g = grads.get(name).expect("checked above").data();
            let state = &mut entry.adam;
            state.step += 1;
            let t = state.step as i32;
            let bc1 = 1.0 - cfg.beta1.powi(t);
            let bc2 = 1.0 - cfg.beta2.powi(t);
            let value = Arc::make_mut(&mut entry.value);
            let m = state.first_moment.data_mut();
            let v = state.second_moment.data_mut();
            for i in 0..g.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                value.data_mut()[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
        Ok(())
    }
}
