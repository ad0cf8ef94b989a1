use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cifar::load_cifar10;
use super::synthetic::{make_synthetic_set, SyntheticSpec};
use super::LabeledImageSet;
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::model::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Directory with the CIFAR-10 binary batches.
    Cifar10 { path: PathBuf },
    /// Generated train set plus a test set drawn with `test_seed`.
    Synthetic {
        #[serde(default)]
        train: SyntheticSpec,
        #[serde(default = "default_test_per_class")]
        test_per_class: usize,
        #[serde(default = "default_test_seed")]
        test_seed: u64,
    },
}

fn default_test_per_class() -> usize {
    100
}

fn default_test_seed() -> u64 {
    1
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Synthetic {
            train: SyntheticSpec::default(),
            test_per_class: default_test_per_class(),
            test_seed: default_test_seed(),
        }
    }
}

impl DatasetSpec {
    /// Loads or generates the `(train, test)` pair.
    pub fn load(&self) -> Result<(LabeledImageSet, LabeledImageSet)> {
        match self {
            DatasetSpec::Cifar10 { path } => load_cifar10(path),
            DatasetSpec::Synthetic { train, test_per_class, test_seed } => {
                let test = SyntheticSpec {
                    per_class: *test_per_class,
                    seed: *test_seed,
                    ..*train
                };
                Ok((make_synthetic_set(train)?, make_synthetic_set(&test)?))
            }
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.eval.validate()?;
        if let DatasetSpec::Synthetic { train, test_per_class, .. } = &self.dataset {
            if train.classes == 0 || train.per_class == 0 || *test_per_class == 0 {
                return Err(Error::param("dataset", "synthetic counts must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Pretty JSON with every field spelled out.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_json(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_config(config: &RunConfig, path: &Path) -> Result<()> {
    fs::write(path, config.to_json()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_defaults() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn save_load_save_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        let mut cfg = RunConfig::default();
        cfg.train.temperature = 0.1;
        cfg.train.learning_rate = 0.3 / 7.0;
        save_config(&cfg, &a).unwrap();
        let loaded = load_config(&a).unwrap();
        assert_eq!(loaded, cfg);
        save_config(&loaded, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn negative_temperature_is_rejected() {
        let err = RunConfig::from_json(r#"{"train": {"temperature": -1}}"#).unwrap_err();
        assert!(err.to_string().contains("temperature"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_json(r#"{"train": {"tempreature": 0.5}}"#).unwrap_err();
        assert!(err.to_string().contains("tempreature"), "{err}");
    }

    #[test]
    fn parse_error_reports_position() {
        let err = RunConfig::from_json("{\n  \"train\": {,}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("column"), "{msg}");
    }
}
