//! Training regimes.
//!
//! Primary encoders are trained as autoencoders: the decoder pair must
//! rebuild the input sequence from its final bitcode. `ssth-rt` sees only
//! full videos; `ssth-rt+` alternates full-video batches with batches cut to
//! a random observation level. Secondary encoders start as a copy of a
//! trained primary and see only a prefix of each video. `la-reco` asks the
//! frozen decoder to rebuild the whole video from the prefix's bitcode,
//! `la-code` pulls the prefix's pre-activation towards the primary's bitcode
//! of the whole video.
//!
//! Secondary training normalizes with the primary's running statistics,
//! which stay fixed, so the secondary is optimized under the same
//! normalization it is queried with.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{default_alphas, validate_alphas, Optimizer, TrainingConfig};

use crate::bitcode::Bitcode;
use crate::data::FeatureSequence;
use crate::encoder::{batch_tensor, Autoencoder, DecoderModel, EncoderModel};
use crate::error::{ensure, Error, Result};
use crate::nn::{clip_grad_norm, l2_distance, l2_rows, sgd_step, Adam, CellMode, ParamSet};
use crate::regime::Regime;

const INIT_STREAM: u64 = 0;
const BATCH_STREAM: u64 = 1;
const ALPHA_STREAM: u64 = 2;

/// Number of clips kept at observation level `alpha`: `max(1, floor(alpha·T))`.
pub fn observed_len(len: usize, alpha: f64) -> usize {
    ((alpha * len as f64).floor() as usize).clamp(1, len.max(1))
}

/// First `max(1, floor(alpha·T))` clips of `seq`.
pub fn truncate(seq: &FeatureSequence, alpha: f64) -> Result<FeatureSequence> {
    ensure!(
        alpha > 0.0 && alpha <= 1.0,
        InvalidInput,
        "alpha {alpha} outside (0, 1]"
    );
    Ok(seq.prefix(observed_len(seq.len(), alpha)))
}

/// Videos trained together, all cut to `len` clips.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// Positions in the training set.
    pub indices: Vec<usize>,
    pub video_ids: Vec<u64>,
    pub len: usize,
}

impl Batch {
    pub fn sequences<'a>(&self, dataset: &'a [FeatureSequence]) -> Vec<&'a FeatureSequence> {
        self.indices.iter().map(|&i| &dataset[i]).collect()
    }

    /// Per-timestep `B × N_f` matrices of the first `len` clips.
    pub fn tensor(&self, dataset: &[FeatureSequence], len: usize) -> Vec<Array2<f64>> {
        batch_tensor(&self.sequences(dataset), len.min(self.len))
    }
}

/// One epoch of batches. Videos are grouped by `len / bucket_width`,
/// shuffled within each group, chunked, and the batches shuffled.
pub fn make_batches<R: Rng + ?Sized>(
    dataset: &[FeatureSequence],
    batch_size: usize,
    bucket_width: usize,
    rng: &mut R,
) -> Vec<Batch> {
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, seq) in dataset.iter().enumerate() {
        buckets
            .entry(seq.len() / bucket_width.max(1))
            .or_default()
            .push(i);
    }
    let mut batches = Vec::new();
    for members in buckets.values_mut() {
        members.shuffle(rng);
        for chunk in members.chunks(batch_size.max(1)) {
            batches.push(Batch {
                indices: chunk.to_vec(),
                video_ids: chunk.iter().map(|&i| dataset[i].video_id).collect(),
                len: chunk.iter().map(|&i| dataset[i].len()).min().unwrap(),
            });
        }
    }
    batches.shuffle(rng);
    batches
}

/// Bidirectional reconstruction loss of one video: `fwd[j]` is compared
/// with clip `j`, `rev[j]` with clip `T-1-j`.
pub fn loss_reconstruction(
    seq: &FeatureSequence,
    fwd: &[Vec<f64>],
    rev: &[Vec<f64>],
) -> Result<f64> {
    let t = seq.len();
    ensure!(
        fwd.len() == t && rev.len() == t,
        InvalidInput,
        "reconstruction lengths ({}, {}) differ from sequence length {t}",
        fwd.len(),
        rev.len()
    );
    let mut loss = 0.0;
    for j in 0..t {
        let target: Vec<f64> = seq.clip(j).iter().map(|&v| v as f64).collect();
        let target_rev: Vec<f64> = seq.clip(t - 1 - j).iter().map(|&v| v as f64).collect();
        ensure!(
            fwd[j].len() == target.len() && rev[j].len() == target.len(),
            InvalidInput,
            "reconstructed clip {j} has the wrong dimension"
        );
        loss += l2_distance(&fwd[j], &target) + l2_distance(&rev[j], &target_rev);
    }
    Ok(loss)
}

/// `‖beta − b‖₂` with `b` read as `±1`.
pub fn loss_la_code(beta: &[f64], target: &Bitcode) -> Result<f64> {
    ensure!(
        beta.len() == target.n_bits(),
        InvalidInput,
        "pre-activation has {} units, target code has {} bits",
        beta.len(),
        target.n_bits()
    );
    Ok(l2_distance(beta, &target.to_signs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean loss per training video.
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{}\n", e.epoch, e.loss));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn first(&self) -> Option<f64> {
        self.epochs.first().map(|e| e.loss)
    }

    pub fn last(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedPrimary {
    pub model: Autoencoder,
    pub log: TrainingLog,
}

fn check_dataset(dataset: &[FeatureSequence]) -> Result<usize> {
    ensure!(!dataset.is_empty(), InvalidInput, "training set is empty");
    let n_f = dataset[0].n_f();
    ensure!(
        dataset.iter().all(|s| s.n_f() == n_f),
        InvalidInput,
        "training sequences disagree on feature dimension"
    );
    Ok(n_f)
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_alpha(rng: &mut ChaCha8Rng, alphas: &[f64]) -> f64 {
    alphas[rng.random_range(0..alphas.len())]
}

/// Trains an encoder and decoder pair from scratch. `ssth-rt++` trains like
/// `ssth-rt+`.
pub fn train_primary(cfg: &TrainingConfig, dataset: &[FeatureSequence]) -> Result<TrainedPrimary> {
    cfg.validate()?;
    ensure!(
        !cfg.regime.is_secondary(),
        Regime,
        "{} is a distillation regime; use train_secondary",
        cfg.regime
    );
    let n_f = check_dataset(dataset)?;
    let mut init = rng_stream(cfg.seed, INIT_STREAM);
    let mut model = Autoencoder {
        encoder: EncoderModel::new(n_f, cfg.n_bits, &mut init)?,
        decoder: DecoderModel::new(n_f, cfg.n_bits, &mut init)?,
    };
    let truncating = cfg.regime.primary_training() == Regime::SsthRtPlus;
    let mut batch_rng = rng_stream(cfg.seed, BATCH_STREAM);
    let mut alpha_rng = rng_stream(cfg.seed, ALPHA_STREAM);
    let mut updater = Updater::new(cfg, model.num_params());
    let mut log = TrainingLog::default();
    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for (k, batch) in make_batches(dataset, cfg.batch_size, cfg.bucket_width, &mut batch_rng)
            .iter()
            .enumerate()
        {
            let len = if truncating && k % 2 == 1 {
                observed_len(batch.len, draw_alpha(&mut alpha_rng, &cfg.alphas))
            } else {
                batch.len
            };
            total += primary_step(&mut model, &batch.tensor(dataset, len), &mut updater);
        }
        let loss = total / dataset.len() as f64;
        log::debug!("{} epoch {epoch}: loss {loss:.4}", cfg.regime);
        log.epochs.push(EpochStats { epoch, loss });
    }
    model.round_to_f32();
    Ok(TrainedPrimary { model, log })
}

/// One optimizer step on the reconstruction objective. Returns the batch loss.
fn primary_step(model: &mut Autoencoder, xs: &[Array2<f64>], updater: &mut Updater) -> f64 {
    let trace = model.encoder.forward_batch(xs, CellMode::TRAIN);
    let mut grads = model.zeros_like();
    let (loss, d_code) =
        model
            .decoder
            .reconstruction_batch(&trace.code, xs, Some(&mut grads.decoder));
    model
        .encoder
        .backward_batch(&trace, Some(d_code.view()), None, &mut grads.encoder);
    updater.apply(model, &mut grads);
    for stats in &trace.stats {
        model.encoder.bn.update(stats);
    }
    loss
}

/// Clips and applies gradients with the configured optimizer.
struct Updater<'a> {
    cfg: &'a TrainingConfig,
    adam: Option<Adam>,
}

impl<'a> Updater<'a> {
    fn new(cfg: &'a TrainingConfig, num_params: usize) -> Self {
        let adam = (cfg.optimizer == Optimizer::Adam).then(|| Adam::new(num_params));
        Self { cfg, adam }
    }

    fn apply<P: ParamSet>(&mut self, model: &mut P, grads: &mut P) {
        if self.cfg.clip_norm > 0.0 {
            clip_grad_norm(grads, self.cfg.clip_norm);
        }
        match &mut self.adam {
            Some(adam) => adam.step(model, grads, self.cfg.learning_rate),
            None => sgd_step(model, grads, self.cfg.learning_rate),
        }
    }
}

/// Distills a secondary encoder from a frozen primary. The decoder is only
/// read by `la-reco`.
pub fn train_secondary(
    cfg: &TrainingConfig,
    primary: &EncoderModel,
    decoder: &DecoderModel,
    dataset: &[FeatureSequence],
) -> Result<(EncoderModel, TrainingLog)> {
    cfg.validate()?;
    ensure!(
        cfg.regime.is_secondary(),
        Regime,
        "{} is not a distillation regime",
        cfg.regime
    );
    let n_f = check_dataset(dataset)?;
    ensure!(
        primary.n_bits == cfg.n_bits && decoder.n_bits == cfg.n_bits,
        Regime,
        "primary has {} bits and decoder {}, config asks for {}",
        primary.n_bits,
        decoder.n_bits,
        cfg.n_bits
    );
    ensure!(
        primary.n_f == n_f && decoder.n_f == n_f,
        Regime,
        "primary expects {}-dimensional features, training set has {n_f}",
        primary.n_f
    );
    // Targets are fixed: the primary never changes.
    let targets: Vec<Vec<f64>> = if cfg.regime == Regime::LaCode {
        dataset
            .iter()
            .map(|s| primary.encode_sequence(s).map(|e| e.final_code.to_signs()))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut secondary = primary.clone();
    let mut updater = Updater::new(cfg, secondary.num_params());
    let mut batch_rng = rng_stream(cfg.seed, BATCH_STREAM);
    let mut alpha_rng = rng_stream(cfg.seed, ALPHA_STREAM);
    let mut log = TrainingLog::default();
    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for batch in make_batches(dataset, cfg.batch_size, cfg.bucket_width, &mut batch_rng) {
            let seen = observed_len(batch.len, draw_alpha(&mut alpha_rng, &cfg.alphas));
            let full = batch.tensor(dataset, batch.len);
            let trace = secondary.forward_batch(&full[..seen], CellMode::INFERENCE);
            let mut grads = secondary.zeros_like();
            let loss = match cfg.regime {
                Regime::LaCode => {
                    let target =
                        Array2::from_shape_fn((batch.indices.len(), cfg.n_bits), |(b, k)| {
                            targets[batch.indices[b]][k]
                        });
                    let (loss, d_beta) = l2_rows(trace.beta.view(), target.view());
                    secondary.backward_batch(&trace, None, Some(d_beta.view()), &mut grads);
                    loss
                }
                _ => {
                    let (loss, d_code) = decoder.reconstruction_batch(&trace.code, &full, None);
                    secondary.backward_batch(&trace, Some(d_code.view()), None, &mut grads);
                    loss
                }
            };
            updater.apply(&mut secondary, &mut grads);
            total += loss;
        }
        let loss = total / dataset.len() as f64;
        log::debug!("{} epoch {epoch}: loss {loss:.4}", cfg.regime);
        log.epochs.push(EpochStats { epoch, loss });
    }
    secondary.round_to_f32();
    Ok((secondary, log))
}

#[cfg(test)]
mod tests;
