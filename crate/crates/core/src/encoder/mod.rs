//! Stacked recurrent binary encoder and the twin reconstruction decoders.
//!
//! The encoder runs a plain LSTM with `2·N_bits` units followed by a binary
//! LSTM with `N_bits` units whose hidden state is the bitcode. Each new clip
//! updates the bitcode in constant time from the carried state, so a
//! streaming query never reprocesses its prefix.
//!
//! Each decoder branch is two LSTM layers (`N_bits` then `2·N_bits` units)
//! and a projection back to the feature dimension. The bitcode seeds the
//! first layer's hidden state and is also its input at every step. The
//! forward branch reconstructs the clips in order, the reverse branch from
//! last to first.

mod batch;
mod io;

use ndarray::Array2;
use rand::Rng;

pub use batch::{batch_tensor, DecoderTrace, EncoderTrace};
pub use io::{load_model, save_model, ModelFile, MODEL_MAGIC, MODEL_VERSION};

use crate::bitcode::Bitcode;
use crate::data::FeatureSequence;
use crate::error::{ensure, Result};
use crate::nn::{binary_forward, BatchNorm, CellMode, Linear, LstmParams, ParamSet};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub n_bits: usize,
    pub n_f: usize,
    /// `N_f → 2·N_bits`
    pub layer1: LstmParams,
    /// `2·N_bits → N_bits`, binary.
    pub layer2: LstmParams,
    /// Normalization of the binary layer's cell state.
    pub bn: BatchNorm,
}

impl EncoderModel {
    pub fn new<R: Rng + ?Sized>(n_f: usize, n_bits: usize, rng: &mut R) -> Result<Self> {
        check_sizes(n_f, n_bits)?;
        Ok(Self {
            n_bits,
            n_f,
            layer1: LstmParams::new(n_f, 2 * n_bits, rng),
            layer2: LstmParams::new(2 * n_bits, n_bits, rng),
            bn: BatchNorm::new(n_bits),
        })
    }

    /// All weights zero, running statistics at their initial values.
    pub fn zeros(n_f: usize, n_bits: usize) -> Result<Self> {
        check_sizes(n_f, n_bits)?;
        Ok(Self {
            n_bits,
            n_f,
            layer1: LstmParams::zeros(n_f, 2 * n_bits),
            layer2: LstmParams::zeros(2 * n_bits, n_bits),
            bn: BatchNorm::new(n_bits),
        })
    }

    /// Zeroed gradient accumulator with this model's shapes.
    pub fn zeros_like(&self) -> Self {
        Self {
            layer1: self.layer1.zeros_like(),
            layer2: self.layer2.zeros_like(),
            bn: BatchNorm::new(self.n_bits),
            ..*self
        }
    }

    pub fn fresh_state(&self) -> EncoderState {
        let wide = 2 * self.n_bits;
        EncoderState {
            h1: Array2::zeros((1, wide)),
            c1: Array2::zeros((1, wide)),
            c2: Array2::zeros((1, self.n_bits)),
            code: Array2::from_elem((1, self.n_bits), 1.0),
            beta: vec![0.0; self.n_bits],
            steps: 0,
        }
    }

    /// Advances `state` by one clip and returns the bitcode of the prefix
    /// ending at that clip. Uses running normalization statistics.
    pub fn encode_step(&self, state: &mut EncoderState, clip: &[f32]) -> Result<Bitcode> {
        ensure!(
            clip.len() == self.n_f,
            InvalidInput,
            "clip has {} features, encoder expects {}",
            clip.len(),
            self.n_f
        );
        ensure!(
            state.c2.ncols() == self.n_bits,
            InvalidInput,
            "state belongs to a {}-bit encoder, this one has {} bits",
            state.c2.ncols(),
            self.n_bits
        );
        let x = Array2::from_shape_fn((1, self.n_f), |(_, j)| clip[j] as f64);
        let (h1, c1, _) = self.layer1.forward(&x, &state.h1, &state.c1);
        let step = binary_forward(
            &self.layer2,
            &self.bn,
            &h1,
            &state.code,
            &state.c2,
            CellMode::INFERENCE,
        );
        state.h1 = h1;
        state.c1 = c1;
        state.c2 = step.c;
        state.code = step.h;
        state.beta = step.beta.into_raw_vec_and_offset().0;
        state.steps += 1;
        Ok(state.bitcode())
    }

    /// Encodes clips from a fresh state, keeping the bitcode after each one.
    pub fn encode_clips<'a>(
        &self,
        clips: impl IntoIterator<Item = &'a [f32]>,
    ) -> Result<EncodedSequence> {
        let mut state = self.fresh_state();
        let mut per_step = Vec::new();
        for clip in clips {
            per_step.push(self.encode_step(&mut state, clip)?);
        }
        ensure!(
            !per_step.is_empty(),
            InvalidInput,
            "cannot encode an empty sequence"
        );
        Ok(EncodedSequence {
            final_code: per_step.last().unwrap().clone(),
            per_step,
            prebitcode: state.beta,
        })
    }

    pub fn encode_sequence(&self, seq: &FeatureSequence) -> Result<EncodedSequence> {
        self.encode_clips(seq.clips())
    }

    /// Final bitcode of the first `len` clips.
    pub fn encode_prefix(&self, seq: &FeatureSequence, len: usize) -> Result<Bitcode> {
        let mut state = self.fresh_state();
        ensure!(len >= 1, InvalidInput, "cannot encode an empty prefix");
        for clip in seq.clips().take(len) {
            self.encode_step(&mut state, clip)?;
        }
        Ok(state.bitcode())
    }
}

impl ParamSet for EncoderModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.layer1.tensors();
        v.extend(self.layer2.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.layer1.tensors_mut();
        v.extend(self.layer2.tensors_mut());
        v
    }

    fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
        self.bn.running_mean.mapv_inplace(|v| v as f32 as f64);
        self.bn.running_var.mapv_inplace(|v| v as f32 as f64);
    }
}

fn check_sizes(n_f: usize, n_bits: usize) -> Result<()> {
    ensure!(n_bits > 0, Config, "bitcode size must be positive");
    ensure!(n_f > 0, Config, "feature dimension must be positive");
    Ok(())
}

/// Recurrent state of one encoding in progress.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    h1: Array2<f64>,
    c1: Array2<f64>,
    c2: Array2<f64>,
    /// Current bitcode as `±1`.
    code: Array2<f64>,
    beta: Vec<f64>,
    steps: usize,
}

impl EncoderState {
    /// Clips consumed so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn signs(&self) -> &[f64] {
        self.code.as_slice().expect("contiguous state")
    }

    pub fn bitcode(&self) -> Bitcode {
        Bitcode::from_signs(self.signs())
    }

    /// Real-valued input to `sign` that produced the current bitcode.
    pub fn prebitcode(&self) -> &[f64] {
        &self.beta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub final_code: Bitcode,
    /// Bitcode after each clip; the last one equals `final_code`.
    pub per_step: Vec<Bitcode>,
    /// Pre-activation that produced `final_code`.
    pub prebitcode: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderBranch {
    /// `N_bits → N_bits`, seeded with the bitcode.
    pub layer1: LstmParams,
    /// `N_bits → 2·N_bits`
    pub layer2: LstmParams,
    /// `2·N_bits → N_f`
    pub proj: Linear,
}

impl DecoderBranch {
    fn new<R: Rng + ?Sized>(n_f: usize, n_bits: usize, rng: &mut R) -> Self {
        Self {
            layer1: LstmParams::new(n_bits, n_bits, rng),
            layer2: LstmParams::new(n_bits, 2 * n_bits, rng),
            proj: Linear::new(2 * n_bits, n_f, rng),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            layer1: self.layer1.zeros_like(),
            layer2: self.layer2.zeros_like(),
            proj: self.proj.zeros_like(),
        }
    }

    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.layer1.tensors();
        v.extend(self.layer2.tensors());
        v.extend(self.proj.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.layer1.tensors_mut();
        v.extend(self.layer2.tensors_mut());
        v.extend(self.proj.tensors_mut());
        v
    }
}

/// Forward and reverse reconstructions, one `N_f` vector per clip.
pub type Reconstruction = (Vec<Vec<f64>>, Vec<Vec<f64>>);

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderModel {
    pub n_bits: usize,
    pub n_f: usize,
    pub forward: DecoderBranch,
    pub reverse: DecoderBranch,
}

impl DecoderModel {
    pub fn new<R: Rng + ?Sized>(n_f: usize, n_bits: usize, rng: &mut R) -> Result<Self> {
        check_sizes(n_f, n_bits)?;
        Ok(Self {
            n_bits,
            n_f,
            forward: DecoderBranch::new(n_f, n_bits, rng),
            reverse: DecoderBranch::new(n_f, n_bits, rng),
        })
    }

    pub fn zeros(n_f: usize, n_bits: usize) -> Result<Self> {
        check_sizes(n_f, n_bits)?;
        let branch = DecoderBranch {
            layer1: LstmParams::zeros(n_bits, n_bits),
            layer2: LstmParams::zeros(n_bits, 2 * n_bits),
            proj: Linear::zeros(2 * n_bits, n_f),
        };
        Ok(Self {
            n_bits,
            n_f,
            forward: branch.clone(),
            reverse: branch,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            forward: self.forward.zeros_like(),
            reverse: self.reverse.zeros_like(),
            ..*self
        }
    }

    /// Runs both branches for `len` steps from bitcode `code`.
    ///
    /// Returns `(forward, reverse)`: `forward[j]` reconstructs clip `j` and
    /// `reverse[j]` reconstructs clip `len - 1 - j`.
    pub fn decode(&self, code: &Bitcode, len: usize) -> Result<Reconstruction> {
        ensure!(len >= 1, InvalidInput, "decode length must be at least 1");
        ensure!(
            code.n_bits() == self.n_bits,
            InvalidInput,
            "{}-bit code given to a {}-bit decoder",
            code.n_bits(),
            self.n_bits
        );
        let signs = Array2::from_shape_vec((1, self.n_bits), code.to_signs()).expect("code shape");
        let rows = |outs: Vec<Array2<f64>>| -> Vec<Vec<f64>> {
            outs.into_iter()
                .map(|o| o.into_raw_vec_and_offset().0)
                .collect()
        };
        let (fwd, _) = self.forward.forward_batch(&signs, len);
        let (rev, _) = self.reverse.forward_batch(&signs, len);
        Ok((rows(fwd), rows(rev)))
    }
}

impl ParamSet for DecoderModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.forward.tensors();
        v.extend(self.reverse.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.forward.tensors_mut();
        v.extend(self.reverse.tensors_mut());
        v
    }
}

/// Encoder and decoder trained jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub encoder: EncoderModel,
    pub decoder: DecoderModel,
}

impl Autoencoder {
    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self.encoder.zeros_like(),
            decoder: self.decoder.zeros_like(),
        }
    }
}

impl ParamSet for Autoencoder {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.encoder.tensors();
        v.extend(self.decoder.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.encoder.tensors_mut();
        v.extend(self.decoder.tensors_mut());
        v
    }

    fn round_to_f32(&mut self) {
        self.encoder.round_to_f32();
        self.decoder.round_to_f32();
    }
}
