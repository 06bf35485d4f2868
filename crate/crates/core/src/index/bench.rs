use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{retrieve, search_counted, Codebook};
use crate::bitcode::Bitcode;
use crate::data::FeatureSequence;
use crate::encoder::EncoderModel;
use crate::error::{ensure, Result};

/// Latency of single-threaded queries, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub codebook_entries: usize,
    pub n_bits: usize,
    pub k: usize,
    pub queries: usize,
    pub median_us: f64,
    pub p99_us: f64,
    pub mean_us: f64,
    pub queries_per_second: f64,
    pub distance_computations_per_query: usize,
    /// Median encoding time, when queries were hashed from features.
    pub hash_median_us: Option<f64>,
}

fn random_code<R: Rng>(rng: &mut R, n_bits: usize) -> Bitcode {
    let bools: Vec<bool> = (0..n_bits).map(|_| rng.random_bool(0.5)).collect();
    Bitcode::from_bools(&bools)
}

pub fn random_codes(n_bits: usize, n: usize, seed: u64) -> Vec<Bitcode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_code(&mut rng, n_bits)).collect()
}

/// Plain codebook of `n` uniformly random codes, one per video.
pub fn random_codebook(n_bits: usize, n: usize, seed: u64) -> Codebook {
    let mut cb = Codebook::new(n_bits);
    for (i, code) in random_codes(n_bits, n, seed).iter().enumerate() {
        cb.push(i as u64, 1.0, code).expect("widths match");
    }
    cb
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx]
}

fn summarize(
    codebook: &Codebook,
    k: usize,
    mut times: Vec<f64>,
    computed: usize,
    hash: Option<f64>,
) -> BenchReport {
    let total: f64 = times.iter().sum();
    times.sort_by(f64::total_cmp);
    BenchReport {
        codebook_entries: codebook.len(),
        n_bits: codebook.n_bits(),
        k,
        queries: times.len(),
        median_us: quantile(&times, 0.5),
        p99_us: quantile(&times, 0.99),
        mean_us: total / times.len() as f64,
        queries_per_second: if total > 0.0 {
            times.len() as f64 * 1e6 / total
        } else {
            f64::INFINITY
        },
        distance_computations_per_query: computed,
        hash_median_us: hash,
    }
}

/// Ranks `n_queries` random codes against `codebook`.
pub fn bench_search(
    codebook: &Codebook,
    n_queries: usize,
    k: usize,
    seed: u64,
) -> Result<BenchReport> {
    ensure!(
        n_queries > 0,
        InvalidInput,
        "bench needs at least one query"
    );
    let queries = random_codes(codebook.n_bits(), n_queries, seed);
    let mut times = Vec::with_capacity(n_queries);
    let mut computed = 0;
    for q in &queries {
        let t0 = Instant::now();
        let (r, c) = search_counted(codebook, q, k)?;
        times.push(t0.elapsed().as_secs_f64() * 1e6);
        std::hint::black_box(r);
        computed = c;
    }
    Ok(summarize(codebook, k, times, computed, None))
}

/// Hashes each query sequence from scratch and ranks it; reported latency
/// covers both.
pub fn bench_pipeline(
    encoder: &EncoderModel,
    codebook: &Codebook,
    queries: &[FeatureSequence],
    k: usize,
) -> Result<BenchReport> {
    ensure!(
        !queries.is_empty(),
        InvalidInput,
        "bench needs at least one query"
    );
    let mut times = Vec::with_capacity(queries.len());
    let mut hash_times = Vec::with_capacity(queries.len());
    for q in queries {
        let t0 = Instant::now();
        let code = encoder.encode_sequence(q)?.final_code;
        let t1 = Instant::now();
        std::hint::black_box(retrieve(codebook, &code, k)?);
        times.push(t0.elapsed().as_secs_f64() * 1e6);
        hash_times.push((t1 - t0).as_secs_f64() * 1e6);
    }
    hash_times.sort_by(f64::total_cmp);
    let hash = quantile(&hash_times, 0.5);
    Ok(summarize(codebook, k, times, codebook.len(), Some(hash)))
}
