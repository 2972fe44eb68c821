use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::data::{SynthConfig, TEST_SUPPORT_PER_CLASS};
use crate::harness::{CrossValConfig, TrainConfig};
use crate::model::ModelConfig;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "EEG_FEWSHOT_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k: Vec<usize>,
    pub repeats: usize,
    pub support_per_class: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            k: vec![1, 5, 10, 20],
            repeats: 10,
            support_per_class: TEST_SUPPORT_PER_CLASS,
        }
    }
}

/// Everything a run needs, resolved from defaults, the config file and
/// flags (in increasing precedence). Echoed into every output directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every other seed is derived from it.
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
    pub synth: SynthConfig,
}

impl RunConfig {
    /// `explicit` wins over the environment variable; neither means
    /// built-in defaults.
    pub fn load(explicit: Option<&Path>) -> Result<(Self, Option<PathBuf>), CliError> {
        let path = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        let Some(path) = path else {
            return Ok((Self::default(), None));
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e.message())))?;
        Ok((cfg, Some(path)))
    }

    /// Every configuration problem at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        if let Err(e) = self.model.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.train.validate() {
            problems.push(e.to_string());
        }
        if self.eval.k.is_empty() || self.eval.k.iter().any(|&k| k == 0 || k > self.eval.support_per_class) {
            problems.push(format!(
                "eval.k must list shots in 1..={}, got {:?}",
                self.eval.support_per_class, self.eval.k
            ));
        }
        if self.eval.repeats == 0 {
            problems.push("eval.repeats must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(problems.join("; ")))
        }
    }

    pub fn crossval(&self, jobs: usize, folds: Vec<usize>) -> CrossValConfig {
        CrossValConfig {
            train: self.train.clone(),
            eval_k: self.eval.k.clone(),
            repeats: self.eval.repeats,
            support_per_class: self.eval.support_per_class,
            folds,
            jobs,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.seed = 9;
        cfg.model.attention_enabled = false;
        cfg.synth.snr_db = -3.5;
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
        assert!(toml::from_str::<RunConfig>("[train]\nbatch = 1").is_err());
        let partial: RunConfig = toml::from_str("[train]\nbatch_episodes = 4").unwrap();
        assert_eq!(partial.train.batch_episodes, 4);
        assert_eq!(partial.train.lr0, 1e-4);
    }
}
