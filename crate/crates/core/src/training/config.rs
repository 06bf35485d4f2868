use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::regime::Regime;

pub const PRIMARY_EPOCHS: usize = 60;
pub const PRIMARY_LR: f64 = 5e-3;
pub const SECONDARY_EPOCHS: usize = 15;
pub const SECONDARY_LR: f64 = 5e-4;
pub const BATCH_SIZE: usize = 40;
pub const BUCKET_WIDTH: usize = 8;
pub const CLIP_NORM: f64 = 5.0;
pub const DEFAULT_BITS: usize = 32;

/// Observation levels `0.1, 0.2, …, 1.0`.
pub fn default_alphas() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

/// Hyperparameters of one training run.
///
/// Stored as TOML. Every key is optional; missing keys take the defaults of
/// the regime (primary or secondary):
///
/// ```toml
/// regime = "la-code"
/// n_bits = 32
/// epochs = 15
/// learning_rate = 5e-4
/// batch_size = 40
/// alphas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
/// seed = 7
/// bucket_width = 8
/// clip_norm = 5.0
/// optimizer = "adam"   # or "sgd"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub regime: Regime,
    pub n_bits: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Grid the truncation level is drawn from, once per batch.
    pub alphas: Vec<f64>,
    pub seed: u64,
    /// Videos whose lengths fall in the same `len / bucket_width` bin may share a batch.
    pub bucket_width: usize,
    /// Global gradient-norm ceiling; 0 disables clipping.
    pub clip_norm: f64,
    pub optimizer: Optimizer,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    regime: Option<Regime>,
    n_bits: Option<usize>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    alphas: Option<Vec<f64>>,
    seed: Option<u64>,
    bucket_width: Option<usize>,
    clip_norm: Option<f64>,
    optimizer: Option<Optimizer>,
}

impl TrainingConfig {
    /// Defaults for `regime`.
    pub fn for_regime(regime: Regime) -> Self {
        let (epochs, learning_rate) = if regime.is_secondary() {
            (SECONDARY_EPOCHS, SECONDARY_LR)
        } else {
            (PRIMARY_EPOCHS, PRIMARY_LR)
        };
        Self {
            regime,
            n_bits: DEFAULT_BITS,
            epochs,
            learning_rate,
            batch_size: BATCH_SIZE,
            alphas: default_alphas(),
            seed: 0,
            bucket_width: BUCKET_WIDTH,
            clip_norm: CLIP_NORM,
            optimizer: Optimizer::Adam,
        }
    }

    /// Parses TOML, filling absent keys from the defaults of the file's
    /// regime, or of `fallback_regime` when the file names none.
    pub fn from_toml(text: &str, fallback_regime: Regime, path: &Path) -> Result<Self> {
        let p: PartialConfig =
            toml::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        let d = Self::for_regime(p.regime.unwrap_or(fallback_regime));
        let cfg = Self {
            regime: d.regime,
            n_bits: p.n_bits.unwrap_or(d.n_bits),
            epochs: p.epochs.unwrap_or(d.epochs),
            learning_rate: p.learning_rate.unwrap_or(d.learning_rate),
            batch_size: p.batch_size.unwrap_or(d.batch_size),
            alphas: p.alphas.unwrap_or(d.alphas),
            seed: p.seed.unwrap_or(d.seed),
            bucket_width: p.bucket_width.unwrap_or(d.bucket_width),
            clip_norm: p.clip_norm.unwrap_or(d.clip_norm),
            optimizer: p.optimizer.unwrap_or(d.optimizer),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, fallback_regime: Regime) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, fallback_regime, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_bits > 0, Config, "n_bits must be positive");
        ensure!(self.batch_size > 0, Config, "batch_size must be positive");
        ensure!(
            self.bucket_width > 0,
            Config,
            "bucket_width must be positive"
        );
        ensure!(
            self.learning_rate >= 0.0 && self.learning_rate.is_finite(),
            Config,
            "learning_rate must be finite and nonnegative"
        );
        ensure!(
            self.clip_norm >= 0.0,
            Config,
            "clip_norm must be nonnegative"
        );
        validate_alphas(&self.alphas)
    }
}

pub fn validate_alphas(alphas: &[f64]) -> Result<()> {
    ensure!(!alphas.is_empty(), Config, "alpha grid is empty");
    for &a in alphas {
        ensure!(a > 0.0 && a <= 1.0, Config, "alpha {a} outside (0, 1]");
    }
    Ok(())
}
