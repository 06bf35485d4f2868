//! In-memory codebook and exhaustive Hamming ranking.
//!
//! Codes are stored back to back in one word array so that a scan touches
//! memory linearly. Ranking is a counting selection over the integer
//! distances, one scan plus a sort of the `K` survivors, ordered by distance
//! and then by ascending entry id.

mod bench;
mod io;
mod session;

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

pub use bench::{bench_pipeline, bench_search, random_codebook, random_codes, BenchReport};
pub use io::{load_codebook, save_codebook, CODEBOOK_MAGIC, CODEBOOK_VERSION};
pub use session::StreamSession;

use crate::bitcode::{words_for, Bitcode};
use crate::data::FeatureSequence;
use crate::encoder::EncoderModel;
use crate::error::{ensure, Result};
use crate::training::{observed_len, validate_alphas};

/// Number of differing bits.
pub fn hamming(a: &Bitcode, b: &Bitcode) -> Result<u32> {
    ensure!(
        a.n_bits() == b.n_bits(),
        InvalidInput,
        "cannot compare a {}-bit code with a {}-bit code",
        a.n_bits(),
        b.n_bits()
    );
    Ok(hamming_words(a.words(), b.words()))
}

#[inline]
fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookEntry {
    pub entry_id: u64,
    pub video_id: u64,
    /// Observation level the code was computed at.
    pub alpha: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n_bits: usize,
    stride: usize,
    entries: Vec<CodebookEntry>,
    words: Vec<u64>,
    ids: HashSet<u64>,
    per_video: HashMap<u64, usize>,
}

impl Codebook {
    pub fn new(n_bits: usize) -> Self {
        Self {
            n_bits,
            stride: words_for(n_bits),
            entries: Vec::new(),
            words: Vec::new(),
            ids: HashSet::new(),
            per_video: HashMap::new(),
        }
    }

    /// Appends an entry whose id is the current length.
    pub fn push(&mut self, video_id: u64, alpha: f32, code: &Bitcode) -> Result<u64> {
        let entry_id = self.entries.len() as u64;
        self.insert(
            CodebookEntry {
                entry_id,
                video_id,
                alpha,
            },
            code,
        )?;
        Ok(entry_id)
    }

    pub fn insert(&mut self, entry: CodebookEntry, code: &Bitcode) -> Result<()> {
        ensure!(
            code.n_bits() == self.n_bits,
            InvalidInput,
            "{}-bit code inserted into a {}-bit codebook",
            code.n_bits(),
            self.n_bits
        );
        ensure!(
            self.ids.insert(entry.entry_id),
            InvalidInput,
            "duplicate entry id {}",
            entry.entry_id
        );
        *self.per_video.entry(entry.video_id).or_default() += 1;
        self.entries.push(entry);
        self.words.extend_from_slice(code.words());
        Ok(())
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CodebookEntry] {
        &self.entries
    }

    pub fn code(&self, index: usize) -> Bitcode {
        let w = self.words[index * self.stride..(index + 1) * self.stride].to_vec();
        Bitcode::from_words(self.n_bits, w).expect("stored codes are well formed")
    }

    /// Distinct source videos.
    pub fn num_videos(&self) -> usize {
        self.per_video.len()
    }

    /// Largest number of entries sharing one source video.
    pub fn max_entries_per_video(&self) -> usize {
        self.per_video.values().copied().max().unwrap_or(0)
    }

    /// True when some video has more than one entry, so results need purging.
    pub fn is_duplicated(&self) -> bool {
        self.max_entries_per_video() > 1
    }

    /// Bytes held by codes and entry metadata.
    pub fn storage_bytes(&self) -> usize {
        self.words.len() * 8 + self.entries.len() * (8 + 8 + 4)
    }
}

/// How database videos are hashed into a codebook.
#[derive(Debug, Clone, PartialEq)]
pub enum CodebookMode {
    /// One full-video code per video.
    Plain,
    /// One code per video and observation level.
    Duplicated(Vec<f64>),
}

/// Hashes `database` with `encoder`. Entries are ordered by video, then by
/// the order of the grid.
pub fn build_codebook(
    encoder: &EncoderModel,
    database: &[FeatureSequence],
    mode: &CodebookMode,
) -> Result<Codebook> {
    ensure!(
        !database.is_empty(),
        InvalidInput,
        "codebook database is empty"
    );
    let alphas = match mode {
        CodebookMode::Plain => vec![1.0],
        CodebookMode::Duplicated(grid) => {
            validate_alphas(grid)?;
            grid.clone()
        }
    };
    // One pass per video yields the code of every prefix.
    let per_video: Vec<Vec<Bitcode>> = database
        .par_iter()
        .map(|seq| {
            let steps = encoder.encode_sequence(seq)?.per_step;
            Ok(alphas
                .iter()
                .map(|&a| steps[observed_len(seq.len(), a) - 1].clone())
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut cb = Codebook::new(encoder.n_bits);
    for (seq, codes) in database.iter().zip(per_video) {
        for (&a, code) in alphas.iter().zip(&codes) {
            cb.push(seq.video_id, a as f32, code)?;
        }
    }
    Ok(cb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub entry_id: u64,
    pub video_id: u64,
    pub alpha: f32,
    pub distance: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RetrievalResult {
    pub query_id: Option<u64>,
    /// Nearest first.
    pub hits: Vec<Hit>,
}

impl RetrievalResult {
    pub fn with_query_id(mut self, id: u64) -> Self {
        self.query_id = Some(id);
        self
    }

    pub fn video_ids(&self) -> Vec<u64> {
        self.hits.iter().map(|h| h.video_id).collect()
    }
}

/// The `k` entries nearest to `query`, ties broken by ascending entry id.
pub fn search(codebook: &Codebook, query: &Bitcode, k: usize) -> Result<RetrievalResult> {
    search_counted(codebook, query, k).map(|(r, _)| r)
}

/// Distances for a fixed code width of `W` words, unrolled by the compiler.
fn fill_distances<const W: usize>(q: &[u64], words: &[u64], out: &mut [u32]) {
    let q: &[u64; W] = q.try_into().expect("query width matches the codebook");
    for (d, code) in out.iter_mut().zip(words.chunks_exact(W)) {
        let mut acc = 0;
        for w in 0..W {
            acc += (q[w] ^ code[w]).count_ones();
        }
        *d = acc;
    }
}

/// [`search`] that also reports how many distances were computed.
pub fn search_counted(
    codebook: &Codebook,
    query: &Bitcode,
    k: usize,
) -> Result<(RetrievalResult, usize)> {
    ensure!(k >= 1, InvalidInput, "K must be at least 1");
    ensure!(
        query.n_bits() == codebook.n_bits,
        InvalidInput,
        "{}-bit query against a {}-bit codebook",
        query.n_bits(),
        codebook.n_bits
    );
    let q = query.words();
    let n = codebook.len();
    let k = k.min(n);
    // distances are integers in 0..=n_bits: a histogram gives the K-th
    // smallest distance without a heap
    let mut dists = vec![0u32; n];
    match codebook.stride {
        1 => fill_distances::<1>(q, &codebook.words, &mut dists),
        2 => fill_distances::<2>(q, &codebook.words, &mut dists),
        3 => fill_distances::<3>(q, &codebook.words, &mut dists),
        4 => fill_distances::<4>(q, &codebook.words, &mut dists),
        w => {
            for (d, code) in dists.iter_mut().zip(codebook.words.chunks_exact(w.max(1))) {
                *d = hamming_words(q, code);
            }
        }
    }
    let mut hist = vec![0usize; codebook.n_bits + 1];
    for &d in &dists {
        hist[d as usize] += 1;
    }
    let computed = dists.len();
    let mut below = 0;
    let mut cutoff = 0;
    for (d, &c) in hist.iter().enumerate() {
        if below + c >= k {
            cutoff = d as u32;
            break;
        }
        below += c;
    }
    let mut ranked: Vec<(u32, u64, usize)> = Vec::with_capacity(k);
    let mut ties: Vec<(u32, u64, usize)> = Vec::new();
    for (i, &d) in dists.iter().enumerate() {
        if d < cutoff {
            ranked.push((d, codebook.entries[i].entry_id, i));
        } else if d == cutoff {
            ties.push((d, codebook.entries[i].entry_id, i));
        }
    }
    let take = k - ranked.len();
    if take > 0 && take < ties.len() {
        ties.select_nth_unstable(take - 1);
    }
    ranked.extend(ties.into_iter().take(take));
    ranked.sort_unstable();
    let hits = ranked
        .into_iter()
        .map(|(distance, _, i)| {
            let e = codebook.entries[i];
            Hit {
                entry_id: e.entry_id,
                video_id: e.video_id,
                alpha: e.alpha,
                distance,
            }
        })
        .collect();
    Ok((
        RetrievalResult {
            query_id: None,
            hits,
        },
        computed,
    ))
}

/// Keeps the best-ranked hit of each source video, preserving order.
pub fn purge_duplicates(result: &RetrievalResult) -> RetrievalResult {
    let mut seen = HashSet::new();
    RetrievalResult {
        query_id: result.query_id,
        hits: result
            .hits
            .iter()
            .filter(|h| seen.insert(h.video_id))
            .copied()
            .collect(),
    }
}

/// Top-`k` distinct videos. On a duplicated codebook the scan keeps
/// `k` times the largest per-video multiplicity, which always holds `k`
/// distinct videos when the codebook has that many, then purges.
pub fn retrieve(codebook: &Codebook, query: &Bitcode, k: usize) -> Result<RetrievalResult> {
    let copies = codebook.max_entries_per_video();
    if copies <= 1 {
        return search(codebook, query, k);
    }
    let mut r = purge_duplicates(&search(codebook, query, k.saturating_mul(copies))?);
    r.hits.truncate(k);
    Ok(r)
}
