use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use uqnn::trainer::{InitMode, Projection, TrainConfig};

pub const SEED_ENV: &str = "UQNN_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Block,
    Random,
}

impl From<Init> for InitMode {
    fn from(i: Init) -> Self {
        match i {
            Init::Block => InitMode::BlockRotation,
            Init::Random => InitMode::ProjectedRandom,
        }
    }
}

/// Training parameters as read from a TOML file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub mapping_step: Option<usize>,
    pub seed: Option<u64>,
    pub init: Option<Init>,
    pub early_stop_mse: Option<f64>,
    pub accuracy_threshold: Option<f64>,
    pub projection: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Same keys as [`FileConfig`], taken from the command line.
#[derive(Debug, Default)]
pub struct Overrides {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub mapping_step: Option<usize>,
    pub seed: Option<u64>,
    pub init: Option<Init>,
    pub early_stop_mse: Option<f64>,
    pub accuracy_threshold: Option<f64>,
    pub no_projection: bool,
}

/// Flags, then the config file, then the `UQNN_SEED` variable, then the
/// library defaults. A seed must come from one of the first three.
pub fn resolve(flags: &Overrides, file: &FileConfig) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let seed = match flags.seed.or(file.seed) {
        Some(s) => s,
        None => env_seed()?,
    };
    let projection = if flags.no_projection || file.projection == Some(false) {
        Projection::Disabled
    } else {
        Projection::Enabled
    };
    let config = TrainConfig {
        learning_rate: flags.learning_rate.or(file.learning_rate).unwrap_or(d.learning_rate),
        epochs: flags.epochs.or(file.epochs).unwrap_or(d.epochs),
        batch_size: flags.batch_size.or(file.batch_size).unwrap_or(d.batch_size),
        mapping_step: flags.mapping_step.or(file.mapping_step).unwrap_or(d.mapping_step),
        seed,
        init_mode: flags.init.or(file.init).map(InitMode::from).unwrap_or(d.init_mode),
        early_stop_mse: flags.early_stop_mse.or(file.early_stop_mse).unwrap_or(d.early_stop_mse),
        accuracy_threshold: flags
            .accuracy_threshold
            .or(file.accuracy_threshold)
            .unwrap_or(d.accuracy_threshold),
        projection,
    };
    config.validate()?;
    Ok(config)
}

pub fn env_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}=`{v}` is not an unsigned integer")),
        Err(_) => bail!("a seed is required: pass --seed or set {SEED_ENV}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: FileConfig = toml::from_str("learning_rate = 0.1\nepochs = 10\nseed = 3\ninit = \"random\"").unwrap();
        let flags = Overrides { epochs: Some(20), ..Overrides::default() };
        let c = resolve(&flags, &file).unwrap();
        assert_eq!(c.learning_rate, 0.1);
        assert_eq!(c.epochs, 20);
        assert_eq!(c.seed, 3);
        assert_eq!(c.init_mode, InitMode::ProjectedRandom);
        assert_eq!(c.batch_size, TrainConfig::default().batch_size);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(toml::from_str::<FileConfig>("learning_rat = 0.1").is_err());
        let file = FileConfig { seed: Some(1), learning_rate: Some(2.0), ..FileConfig::default() };
        assert!(resolve(&Overrides::default(), &file).is_err());
    }
}
