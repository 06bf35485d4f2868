//! Feature-sequence ingestion and desk-scale synthetic datasets.
//!
//! A video enters the system as a sequence of fixed-dimension clip feature
//! vectors produced at a constant rate. Feature files use this little-endian
//! layout:
//!
//! | field      | type        |
//! |------------|-------------|
//! | magic      | `b"FSEQ"`   |
//! | version    | u32 (= 1)   |
//! | N_f        | u32         |
//! | T          | u32         |
//! | clip rate  | f32 (Hz)    |
//! | class id   | u32         |
//! | values     | T·N_f × f32, clip-major |

mod manifest;
mod synthetic;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use manifest::{split, DatasetManifest, ManifestEntry, Split, DEFAULT_SPLIT, SPLIT_ORDER};
pub use synthetic::{
    generate_synthetic, synthesize, synthesize_with_meta, synthetic_manifest, SyntheticSpec,
    VideoMeta,
};

use crate::error::{ensure, Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"FSEQ";
pub const FEATURE_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// Clip rate of 64-frame clips at 30 fps.
pub const DEFAULT_CLIP_RATE: f32 = 30.0 / 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub video_id: u64,
    /// Class label, used only for evaluation.
    pub class_id: u32,
    pub clip_rate: f32,
    n_f: usize,
    data: Vec<f32>,
}

impl FeatureSequence {
    /// `data` holds `T·n_f` values, clip-major.
    pub fn new(
        video_id: u64,
        class_id: u32,
        clip_rate: f32,
        n_f: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        ensure!(n_f > 0, InvalidInput, "feature dimension must be positive");
        ensure!(
            !data.is_empty() && data.len().is_multiple_of(n_f),
            InvalidInput,
            "{} values do not form a nonempty sequence of {}-d clips",
            data.len(),
            n_f
        );
        Ok(Self {
            video_id,
            class_id,
            clip_rate,
            n_f,
            data,
        })
    }

    pub fn from_clips(video_id: u64, class_id: u32, clips: &[Vec<f32>]) -> Result<Self> {
        let n_f = clips.first().map_or(0, Vec::len);
        ensure!(
            clips.iter().all(|c| c.len() == n_f),
            InvalidInput,
            "clips have differing dimensions"
        );
        Self::new(video_id, class_id, DEFAULT_CLIP_RATE, n_f, clips.concat())
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    /// Number of clips.
    pub fn len(&self) -> usize {
        self.data.len() / self.n_f
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn clip(&self, t: usize) -> &[f32] {
        &self.data[t * self.n_f..(t + 1) * self.n_f]
    }

    pub fn clips(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.n_f)
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    /// The first `len` clips (clamped to `1..=self.len()`).
    pub fn prefix(&self, len: usize) -> FeatureSequence {
        let len = len.clamp(1, self.len());
        Self {
            data: self.data[..len * self.n_f].to_vec(),
            ..self.clone()
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_f as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.clip_rate.to_le_bytes());
        out.extend_from_slice(&self.class_id.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses a feature file image. `path` is only used in error messages.
    pub fn from_bytes(bytes: &[u8], video_id: u64, path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::format(path, msg);
        if bytes.len() < HEADER_LEN {
            return Err(bad(format!("truncated header ({} bytes)", bytes.len())));
        }
        if &bytes[0..4] != FEATURE_MAGIC {
            return Err(bad("bad magic, expected FSEQ".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != FEATURE_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let n_f = u32_at(8) as usize;
        let t = u32_at(12) as usize;
        let clip_rate = f32::from_le_bytes(bytes[16..20].try_into().unwrap());
        let class_id = u32_at(20);
        if n_f == 0 || t == 0 {
            return Err(bad(format!("empty sequence in header (N_f={n_f}, T={t})")));
        }
        let expected = n_f
            .checked_mul(t)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| bad("header sizes overflow".into()))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() < expected {
            return Err(bad(format!(
                "truncated body: header declares {t}x{n_f} values, file holds {} bytes",
                body.len()
            )));
        }
        if body.len() > expected {
            return Err(bad(format!(
                "dimension mismatch: {} trailing bytes after {t}x{n_f} values",
                body.len() - expected
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            video_id,
            class_id,
            clip_rate,
            n_f,
            data,
        })
    }
}

pub fn write_features(seq: &FeatureSequence, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&seq.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads a feature file. The video id is not stored in the file; callers
/// that know it (e.g. from a manifest) pass it in.
pub fn read_features(path: &Path, video_id: u64) -> Result<FeatureSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureSequence::from_bytes(&bytes, video_id, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(t: usize, n_f: usize) -> FeatureSequence {
        let data = (0..t * n_f).map(|i| (i as f32 * 0.37).sin()).collect();
        FeatureSequence::new(9, 3, DEFAULT_CLIP_RATE, n_f, data).unwrap()
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.fseq");
        let seq = sample(7, 5);
        write_features(&seq, &path).unwrap();
        assert_eq!(read_features(&path, 9).unwrap(), seq);
    }

    #[test]
    fn full_size_features() {
        let seq = sample(63, 4096);
        let back = FeatureSequence::from_bytes(&seq.to_bytes(), 9, Path::new("x")).unwrap();
        assert_eq!(back.len(), 63);
        assert_eq!(back.n_f(), 4096);
        assert!(back.clips().all(|c| c.len() == 4096));
    }

    #[test]
    fn malformed_files() {
        let good = sample(3, 2).to_bytes();
        let p = Path::new("x");

        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(matches!(
            FeatureSequence::from_bytes(&magic, 0, p),
            Err(Error::Format { .. })
        ));

        let short = &good[..good.len() - 4];
        let err = FeatureSequence::from_bytes(short, 0, p).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");

        let mut long = good.clone();
        long.extend_from_slice(&[0; 8]);
        let err = FeatureSequence::from_bytes(&long, 0, p).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"), "{err}");

        assert!(FeatureSequence::from_bytes(&good[..10], 0, p).is_err());
    }

    #[test]
    fn prefix_clamps() {
        let seq = sample(5, 2);
        assert_eq!(seq.prefix(0).len(), 1);
        assert_eq!(seq.prefix(3).len(), 3);
        assert_eq!(seq.prefix(99).len(), 5);
        assert_eq!(seq.prefix(3).clip(2), seq.clip(2));
    }

    proptest! {
        #[test]
        fn bytes_roundtrip_is_lossless(
            n_f in 1usize..9,
            t in 1usize..12,
            class in any::<u32>(),
            rate in any::<f32>().prop_filter("finite", |r| r.is_finite()),
            seed in any::<u64>(),
        ) {
            let data: Vec<f32> = (0..n_f * t)
                .map(|i| f32::from_bits((seed.wrapping_mul(i as u64 + 1) >> 7) as u32 & 0x7f7f_ffff))
                .collect();
            let seq = FeatureSequence::new(1, class, rate, n_f, data).unwrap();
            let back = FeatureSequence::from_bytes(&seq.to_bytes(), 1, Path::new("p")).unwrap();
            prop_assert_eq!(back.to_bytes(), seq.to_bytes());
        }
    }
}
