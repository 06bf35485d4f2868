//! Versioned binary model files.
//!
//! Little-endian layout:
//!
//! ```text
//! magic            b"MSH1"
//! u32 version      1
//! u32 regime       0 ssth-rt, 1 ssth-rt+, 2 ssth-rt++, 3 la-reco, 4 la-code
//! u32 flags        bit 0: decoder present
//! u32 N_bits
//! u32 N_f
//! u32 ×4           encoder layer 1/2 units, decoder layer 1/2 units (0 without decoder)
//! f32 blocks       encoder layer 1 (W_x, W_h, bias), layer 2 (W_x, W_h, bias),
//!                  running mean, running variance,
//!                  then per decoder branch (forward, reverse):
//!                  layer 1, layer 2, projection (W, b)
//! ```
//!
//! Matrices are row-major. Parameters are stored at single precision.

use std::fs;
use std::path::Path;

use super::{DecoderModel, EncoderModel};
use crate::error::{Error, Result};
use crate::nn::ParamSet;
use crate::regime::Regime;

pub const MODEL_MAGIC: &[u8; 4] = b"MSH1";
pub const MODEL_VERSION: u32 = 1;
const HEADER_LEN: usize = 40;

/// Contents of a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub regime: Regime,
    pub encoder: EncoderModel,
    /// Present for primary models, which carry their trained decoder.
    pub decoder: Option<DecoderModel>,
}

impl ModelFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.encoder.n_bits as u32;
        let has_dec = self.decoder.is_some();
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        for v in [
            MODEL_VERSION,
            self.regime.code(),
            has_dec as u32,
            n,
            self.encoder.n_f as u32,
            2 * n,
            n,
            if has_dec { n } else { 0 },
            if has_dec { 2 * n } else { 0 },
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let mut put = |vals: &[f64]| {
            for v in vals {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        };
        for t in self.encoder.tensors() {
            put(t);
        }
        put(self.encoder.bn.running_mean.as_slice().unwrap());
        put(self.encoder.bn.running_var.as_slice().unwrap());
        if let Some(dec) = &self.decoder {
            for t in dec.tensors() {
                put(t);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::format(path, msg);
        if bytes.len() < HEADER_LEN {
            return Err(bad("truncated model header".into()));
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(bad("bad magic, expected MSH1".into()));
        }
        let h: Vec<u32> = bytes[4..HEADER_LEN]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let [version, regime, flags, n_bits, n_f, e1, e2, d1, d2] = h[..] else {
            unreachable!()
        };
        if version != MODEL_VERSION {
            return Err(bad(format!("unsupported model version {version}")));
        }
        let regime = Regime::from_code(regime)
            .ok_or_else(|| bad(format!("unknown regime code {regime}")))?;
        let has_dec = flags & 1 == 1;
        let (n_bits, n_f) = (n_bits as usize, n_f as usize);
        if n_bits == 0 || n_f == 0 {
            return Err(bad("zero-sized model".into()));
        }
        let expected_dec = if has_dec {
            (n_bits, 2 * n_bits)
        } else {
            (0, 0)
        };
        if (e1 as usize, e2 as usize) != (2 * n_bits, n_bits)
            || (d1 as usize, d2 as usize) != expected_dec
        {
            return Err(bad(format!(
                "layer sizes ({e1}, {e2}, {d1}, {d2}) do not follow the 2N/N scheme for N={n_bits}"
            )));
        }

        let mut encoder = EncoderModel::zeros(n_f, n_bits)?;
        let mut decoder = if has_dec {
            Some(DecoderModel::zeros(n_f, n_bits)?)
        } else {
            None
        };
        let floats =
            encoder.num_params() + 2 * n_bits + decoder.as_ref().map_or(0, |d| d.num_params());
        let body = &bytes[HEADER_LEN..];
        if body.len() != 4 * floats {
            return Err(bad(format!(
                "model body holds {} bytes, header implies {}",
                body.len(),
                4 * floats
            )));
        }
        let mut vals = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
        let mut take = |n: usize| -> Vec<f64> { vals.by_ref().take(n).collect() };

        let enc_flat = take(encoder.num_params());
        encoder.assign_flat(&enc_flat);
        encoder.bn.running_mean = take(n_bits).into();
        encoder.bn.running_var = take(n_bits).into();
        if encoder
            .bn
            .running_var
            .iter()
            .any(|v| *v < 0.0 || !v.is_finite())
        {
            return Err(bad("negative or non-finite running variance".into()));
        }
        if let Some(dec) = decoder.as_mut() {
            let flat = take(dec.num_params());
            dec.assign_flat(&flat);
        }
        Ok(ModelFile {
            regime,
            encoder,
            decoder,
        })
    }
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<()> {
    fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_bytes(&bytes, path)
}
