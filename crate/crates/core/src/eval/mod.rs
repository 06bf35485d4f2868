//! Retrieval quality across observation levels.
//!
//! A query is scored by the class labels of its top-`K` results. AP@K is
//! the mean over `j = 1..K` of the precision of the first `j` results,
//! counting missing results as non-matching; mAP@K averages it over queries.

mod report;

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

pub use report::{Aggregate, EvalReport, ReportMetadata, ReportRow, CSV_HEADER};

use crate::data::FeatureSequence;
use crate::encoder::EncoderModel;
use crate::error::{ensure, Result};
use crate::index::{retrieve, Codebook};
use crate::training::{observed_len, validate_alphas};

pub const DEFAULT_K: usize = 20;

/// `(1/K) · Σ_{j=1..K} N_correct(j) / j`, where `N_correct(j)` counts the
/// matches among the first `j` results.
pub fn ap_at_k(relevant: &[bool], k: usize) -> Result<f64> {
    ensure!(k >= 1, InvalidInput, "K must be at least 1");
    let mut correct = 0usize;
    let mut sum = 0.0;
    for j in 1..=k {
        if relevant.get(j - 1).copied().unwrap_or(false) {
            correct += 1;
        }
        sum += correct as f64 / j as f64;
    }
    Ok(sum / k as f64)
}

pub fn map_at_k(lists: &[Vec<bool>], k: usize) -> Result<f64> {
    ensure!(!lists.is_empty(), InvalidInput, "no queries to average");
    let mut sum = 0.0;
    for l in lists {
        sum += ap_at_k(l, k)?;
    }
    Ok(sum / lists.len() as f64)
}

/// What a method queries with and what it queries against.
#[derive(Debug, Clone, Copy)]
pub struct MethodBundle<'a> {
    pub method: &'a str,
    /// The primary encoder for `ssth-rt` variants, the secondary for `la-*`.
    pub query_encoder: &'a EncoderModel,
    pub codebook: &'a Codebook,
}

/// Scores one method at every level of `alphas`.
///
/// `labels` maps codebook video ids to classes. Queries whose class has no
/// video in the codebook are skipped with a warning. Duplicated codebooks
/// are purged to distinct videos before scoring.
pub fn sweep(
    bundle: &MethodBundle,
    queries: &[FeatureSequence],
    labels: &HashMap<u64, u32>,
    alphas: &[f64],
    k: usize,
) -> Result<Vec<ReportRow>> {
    validate_alphas(alphas)?;
    ensure!(k >= 1, InvalidInput, "K must be at least 1");
    ensure!(
        bundle.query_encoder.n_bits == bundle.codebook.n_bits(),
        Regime,
        "{}: {}-bit query encoder against a {}-bit codebook",
        bundle.method,
        bundle.query_encoder.n_bits,
        bundle.codebook.n_bits()
    );
    let present: HashSet<u32> = bundle
        .codebook
        .entries()
        .iter()
        .filter_map(|e| labels.get(&e.video_id).copied())
        .collect();
    let kept: Vec<&FeatureSequence> = queries
        .iter()
        .filter(|q| {
            let ok = present.contains(&q.class_id);
            if !ok {
                log::warn!(
                    "{}: query video {} skipped, class {} has no codebook video",
                    bundle.method,
                    q.video_id,
                    q.class_id
                );
            }
            ok
        })
        .collect();
    ensure!(
        !kept.is_empty(),
        InvalidInput,
        "{}: no scorable queries",
        bundle.method
    );

    // relevance[query][alpha]
    let relevance: Vec<Vec<Vec<bool>>> = kept
        .par_iter()
        .map(|q| {
            let steps = bundle.query_encoder.encode_sequence(q)?.per_step;
            alphas
                .iter()
                .map(|&a| {
                    let code = &steps[observed_len(q.len(), a) - 1];
                    let r = retrieve(bundle.codebook, code, k)?;
                    Ok(r.hits
                        .iter()
                        .map(|h| labels.get(&h.video_id) == Some(&q.class_id))
                        .collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    alphas
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let lists: Vec<Vec<bool>> = relevance
                .iter()
                .map(|per_alpha| per_alpha[ai].clone())
                .collect();
            Ok(ReportRow {
                method: bundle.method.to_string(),
                n_bits: bundle.codebook.n_bits(),
                alpha,
                k,
                map: map_at_k(&lists, k)?,
            })
        })
        .collect()
}
