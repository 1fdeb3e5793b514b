//! Run configuration: TOML file + flag overrides, with the fully resolved
//! merge written back into every run directory so that config + seed
//! reproduce the metrics bitwise.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::SyntheticSpec;
use crate::error::{Error, Result};
use crate::train::Hyperparameters;

/// Environment variable naming the default root for run directories.
pub const OUTPUT_ROOT_ENV: &str = "HAMLEARN_OUTPUT_ROOT";

/// Where the training data comes from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file with a header row; None means the synthetic generator.
    pub csv: Option<PathBuf>,
    pub label_column: String,
    pub synthetic: SyntheticSpec,
    pub train_fraction: f64,
    /// Standardize features with train-split statistics before encoding.
    pub standardize: bool,
    /// Seed of the stratified train/validation split.
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            csv: None,
            label_column: "label".to_string(),
            synthetic: SyntheticSpec::default(),
            train_fraction: 0.8,
            standardize: true,
            split_seed: 0,
        }
    }
}

/// Complete description of one training run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Run directory; relative paths resolve under the output root.
    pub run_name: String,
    pub data: DataConfig,
    pub training: Hyperparameters,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run_name: "run".to_string(),
            data: DataConfig::default(),
            training: Hyperparameters::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Validate everything at once, reporting each offending key.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.run_name.is_empty() {
            problems.push("run_name must be non-empty".to_string());
        }
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            problems.push("data.train_fraction must lie in (0, 1)".to_string());
        }
        if self.data.csv.is_none() {
            if let Err(e) = self.data.synthetic.validate() {
                problems.push(format!("data.synthetic: {e}"));
            }
        }
        if let Err(e) = self.training.validate() {
            problems.push(format!("training: {e}"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Serialize the resolved config with every default materialized.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize config: {e}")))
    }

    /// Resolve the run directory under the output root.
    pub fn run_dir(&self, root_override: Option<&Path>) -> PathBuf {
        let name = Path::new(&self.run_name);
        if name.is_absolute() {
            return name.to_path_buf();
        }
        let root = root_override
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"));
        root.join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        // every default is materialized in the emitted text
        assert!(text.contains("train_fraction"));
        assert!(text.contains("learning_rate"));
        assert!(text.contains("krylov_dim"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("definitely_not_a_key = 3\n").unwrap_err();
        assert!(err.to_string().contains("definitely_not_a_key"));
        let err = toml::from_str::<RunConfig>("[training]\nlerning_rate = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("lerning_rate"));
    }

    #[test]
    fn validation_reports_every_problem_at_once() {
        let mut cfg = RunConfig::default();
        cfg.data.train_fraction = 2.0;
        cfg.training.batch_size = 0;
        cfg.training.lr_decay_factor = 0.0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("train_fraction"));
        assert!(msg.contains("batch_size"));
        assert!(msg.contains("lr_decay_factor"));
    }

    #[test]
    fn run_dir_resolution() {
        let cfg = RunConfig { run_name: "exp1".to_string(), ..RunConfig::default() };
        let dir = cfg.run_dir(Some(Path::new("/tmp/out")));
        assert_eq!(dir, PathBuf::from("/tmp/out/exp1"));
    }
}
