use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::data::{N_ELECTRODES, SAMPLE_RATE_HZ, TRIAL_SAMPLES};
use crate::dsp::{BandSpec, DEFAULT_BANDS_HZ};

/// Band-split multi-kernel convolutional embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub branch_kernels: Vec<usize>,
    pub branch_filters: usize,
    pub fusion_filters: usize,
    pub pool_window: usize,
    pub pool_stride: usize,
    pub bands: Vec<BandSpec>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            branch_kernels: vec![45, 65, 85],
            branch_filters: 10,
            fusion_filters: 30,
            pool_window: 6,
            pool_stride: 6,
            bands: DEFAULT_BANDS_HZ
                .iter()
                .map(|&(low_hz, high_hz)| BandSpec {
                    low_hz,
                    high_hz,
                    sample_rate_hz: SAMPLE_RATE_HZ,
                })
                .collect(),
        }
    }
}

impl EmbeddingConfig {
    /// Time steps after pooling: `floor((875 − window) / stride) + 1`.
    pub fn time_steps(&self) -> usize {
        (TRIAL_SAMPLES - self.pool_window) / self.pool_stride + 1
    }

    /// Channels of the embedding: one fusion block per band.
    pub fn channels(&self) -> usize {
        self.bands.len() * self.fusion_filters
    }

    /// `(time_steps, channels)` of z.
    pub fn output_shape(&self) -> (usize, usize) {
        (self.time_steps(), self.channels())
    }
}

/// Head that scores one support/query pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttentionConfig {
    pub conv_kernels: Vec<usize>,
    pub conv_channels: Vec<usize>,
    pub hidden: usize,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            conv_kernels: vec![16, 4],
            conv_channels: vec![64, 64],
            hidden: 64,
        }
    }
}

/// Learned comparator between a class representative and the query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelationConfig {
    pub conv_kernels: Vec<usize>,
    pub conv_channels: Vec<usize>,
    pub hidden: Vec<usize>,
}

impl Default for RelationConfig {
    fn default() -> Self {
        Self {
            conv_kernels: vec![30, 15],
            conv_channels: vec![64, 32],
            hidden: vec![256, 100],
        }
    }
}

/// How relation logits become scores, and the matching loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationMode {
    /// Softmax across classes with categorical cross-entropy.
    #[default]
    Softmax,
    /// Independent sigmoid per class with binary cross-entropy.
    Sigmoid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embedding: EmbeddingConfig,
    pub attention: AttentionConfig,
    pub relation: RelationConfig,
    pub relation_mode: RelationMode,
    /// With attention off every support weight is 1 and the class
    /// representative is the plain mean.
    pub attention_enabled: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embedding: EmbeddingConfig::default(),
            attention: AttentionConfig::default(),
            relation: RelationConfig::default(),
            relation_mode: RelationMode::Softmax,
            attention_enabled: true,
        }
    }
}

impl ModelConfig {
    /// A narrow network for gradient checks and fast tests: two branch
    /// filters, three fusion filters, 8/4 dense layers.
    pub fn reduced() -> Self {
        Self {
            embedding: EmbeddingConfig {
                branch_filters: 2,
                fusion_filters: 3,
                ..EmbeddingConfig::default()
            },
            attention: AttentionConfig {
                conv_channels: vec![4, 4],
                hidden: 8,
                ..AttentionConfig::default()
            },
            relation: RelationConfig {
                conv_channels: vec![4, 4],
                hidden: vec![8, 4],
                ..RelationConfig::default()
            },
            ..Self::default()
        }
    }

    /// Every problem with the configuration, or `Ok`.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut problems = Vec::new();
        let e = &self.embedding;
        if e.branch_kernels.is_empty() || e.branch_kernels.contains(&0) {
            problems.push("embedding.branch_kernels must be non-empty and positive".to_string());
        }
        if e.branch_kernels.iter().any(|&k| k > TRIAL_SAMPLES) {
            problems.push(format!("embedding.branch_kernels must not exceed {TRIAL_SAMPLES}"));
        }
        if e.branch_filters == 0 || e.fusion_filters == 0 {
            problems.push("embedding filter counts must be at least 1".to_string());
        }
        if e.pool_window == 0 || e.pool_stride == 0 || e.pool_window > TRIAL_SAMPLES {
            problems.push(format!("embedding pool window/stride must be in 1..={TRIAL_SAMPLES}"));
        }
        if e.bands.is_empty() {
            problems.push("embedding.bands must list at least one band".to_string());
        }
        for b in &e.bands {
            if b.validate().is_err() || b.sample_rate_hz != SAMPLE_RATE_HZ {
                problems.push(format!("invalid band {}-{} Hz at {} Hz", b.low_hz, b.high_hz, b.sample_rate_hz));
            }
        }
        let steps = if e.pool_window > 0 && e.pool_stride > 0 && e.pool_window <= TRIAL_SAMPLES {
            e.time_steps()
        } else {
            0
        };
        let head = |name: &str, kernels: &[usize], channels: &[usize], problems: &mut Vec<String>| {
            if kernels.is_empty() || kernels.len() != channels.len() {
                problems.push(format!("{name}: conv_kernels and conv_channels must be non-empty and equally long"));
                return;
            }
            if kernels.contains(&0) || channels.contains(&0) {
                problems.push(format!("{name}: kernel sizes and channel counts must be positive"));
                return;
            }
            let mut len = steps;
            for &k in kernels {
                if k > len {
                    problems.push(format!("{name}: kernel {k} longer than its {len}-step input"));
                    return;
                }
                len = len - k + 1;
            }
        };
        head("attention", &self.attention.conv_kernels, &self.attention.conv_channels, &mut problems);
        head("relation", &self.relation.conv_kernels, &self.relation.conv_channels, &mut problems);
        if self.attention.hidden == 0 {
            problems.push("attention.hidden must be positive".to_string());
        }
        if self.relation.hidden.contains(&0) {
            problems.push("relation.hidden sizes must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Config(problems))
        }
    }

    /// Expected shape of every parameter, in creation order.
    pub fn parameter_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let e = &self.embedding;
        let mut out = Vec::new();
        let concat = e.branch_kernels.len() * e.branch_filters;
        for b in 0..e.bands.len() {
            for (i, &k) in e.branch_kernels.iter().enumerate() {
                out.push((format!("embed.band{b}.branch{i}.kernel"), vec![k, 1, 1, e.branch_filters]));
                out.push((format!("embed.band{b}.branch{i}.bias"), vec![e.branch_filters]));
            }
            out.push((format!("embed.band{b}.fusion.kernel"), vec![1, N_ELECTRODES, concat, e.fusion_filters]));
            out.push((format!("embed.band{b}.fusion.bias"), vec![e.fusion_filters]));
        }
        let pair = 2 * e.channels();
        let mut conv_head = |prefix: &str, kernels: &[usize], channels: &[usize], dense: &[usize]| {
            let mut c_in = pair;
            for (i, (&k, &c)) in kernels.iter().zip(channels).enumerate() {
                out.push((format!("{prefix}.conv{i}.kernel"), vec![k, 1, c_in, c]));
                out.push((format!("{prefix}.conv{i}.bias"), vec![c]));
                c_in = c;
            }
            let mut d_in = c_in;
            for (i, &m) in dense.iter().enumerate() {
                out.push((format!("{prefix}.fc{i}.weight"), vec![d_in, m]));
                out.push((format!("{prefix}.fc{i}.bias"), vec![m]));
                d_in = m;
            }
        };
        conv_head(
            "attention",
            &self.attention.conv_kernels,
            &self.attention.conv_channels,
            &[self.attention.hidden, 1],
        );
        let mut rel_dense = self.relation.hidden.clone();
        rel_dense.push(1);
        conv_head("relation", &self.relation.conv_kernels, &self.relation.conv_channels, &rel_dense);
        out
    }
}
