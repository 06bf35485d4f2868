//! Codebook snapshots.
//!
//! Little-endian layout:
//!
//! ```text
//! magic        b"MSHC"
//! u32 version  1
//! u32 N_bits
//! u64 count
//! count × { u64 entry id, u64 source video id, f32 alpha, ceil(N_bits/64) × u64 words }
//! ```

use std::fs;
use std::path::Path;

use super::{Codebook, CodebookEntry};
use crate::bitcode::{words_for, Bitcode};
use crate::error::{Error, Result};

pub const CODEBOOK_MAGIC: &[u8; 4] = b"MSHC";
pub const CODEBOOK_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

impl Codebook {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.storage_bytes());
        out.extend_from_slice(CODEBOOK_MAGIC);
        out.extend_from_slice(&CODEBOOK_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_bits as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (e, code) in self
            .entries
            .iter()
            .zip(self.words.chunks_exact(self.stride))
        {
            out.extend_from_slice(&e.entry_id.to_le_bytes());
            out.extend_from_slice(&e.video_id.to_le_bytes());
            out.extend_from_slice(&e.alpha.to_le_bytes());
            for w in code {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::format(path, msg);
        if bytes.len() < HEADER_LEN {
            return Err(bad("truncated codebook header".into()));
        }
        if &bytes[..4] != CODEBOOK_MAGIC {
            return Err(bad("bad magic, expected MSHC".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != CODEBOOK_VERSION {
            return Err(bad(format!("unsupported codebook version {version}")));
        }
        let n_bits = u32_at(8) as usize;
        if n_bits == 0 {
            return Err(bad("zero-width codes".into()));
        }
        let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let stride = words_for(n_bits);
        let record = 20 + 8 * stride;
        let body = &bytes[HEADER_LEN..];
        if (body.len() as u64) != count.saturating_mul(record as u64) {
            return Err(bad(format!(
                "codebook body holds {} bytes, {count} entries need {}",
                body.len(),
                count as u128 * record as u128
            )));
        }
        let mut cb = Codebook::new(n_bits);
        for rec in body.chunks_exact(record) {
            let entry = CodebookEntry {
                entry_id: u64::from_le_bytes(rec[0..8].try_into().unwrap()),
                video_id: u64::from_le_bytes(rec[8..16].try_into().unwrap()),
                alpha: f32::from_le_bytes(rec[16..20].try_into().unwrap()),
            };
            if !(entry.alpha > 0.0 && entry.alpha <= 1.0) {
                return Err(bad(format!(
                    "entry {} has alpha {}",
                    entry.entry_id, entry.alpha
                )));
            }
            let words = rec[20..]
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let code = Bitcode::from_words(n_bits, words).map_err(|e| bad(e.to_string()))?;
            cb.insert(entry, &code).map_err(|e| bad(e.to_string()))?;
        }
        Ok(cb)
    }
}

pub fn save_codebook(codebook: &Codebook, path: &Path) -> Result<()> {
    fs::write(path, codebook.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_codebook(path: &Path) -> Result<Codebook> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Codebook::from_bytes(&bytes, path)
}
