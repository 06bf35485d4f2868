//! Scores ssth-rt and la-code with mAP@20 at every observation level and
//! writes a plot-ready CSV.
//!
//! cargo run --release --example eval_sweep -- /tmp/msh-report.csv

use std::path::PathBuf;

use midstream_hash::data::{SyntheticSpec, DEFAULT_SPLIT};
use midstream_hash::eval::{sweep, EvalReport, MethodBundle, DEFAULT_K};
use midstream_hash::index::{build_codebook, CodebookMode};
use midstream_hash::pipeline::synthetic_splits;
use midstream_hash::training::{default_alphas, train_primary, train_secondary, TrainingConfig};
use midstream_hash::Regime;

fn main() -> midstream_hash::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("msh-report.csv"));
    let splits = synthetic_splits(&SyntheticSpec::default(), DEFAULT_SPLIT, 0)?;
    let labels = splits.codebook_labels();
    let alphas = default_alphas();

    let baseline = train_primary(&TrainingConfig::for_regime(Regime::SsthRt), &splits.train)?.model;
    let plus = train_primary(
        &TrainingConfig::for_regime(Regime::SsthRtPlus),
        &splits.train,
    )?
    .model;
    let (la_code, _) = train_secondary(
        &TrainingConfig::for_regime(Regime::LaCode),
        &plus.encoder,
        &plus.decoder,
        &splits.train,
    )?;

    let cb_baseline = build_codebook(&baseline.encoder, &splits.codebook, &CodebookMode::Plain)?;
    let cb_plus = build_codebook(&plus.encoder, &splits.codebook, &CodebookMode::Plain)?;
    let mut report = EvalReport::default();
    for bundle in [
        MethodBundle {
            method: "ssth-rt",
            query_encoder: &baseline.encoder,
            codebook: &cb_baseline,
        },
        MethodBundle {
            method: "la-code",
            query_encoder: &la_code,
            codebook: &cb_plus,
        },
    ] {
        report
            .rows
            .extend(sweep(&bundle, &splits.query, &labels, &alphas, DEFAULT_K)?);
    }
    report.metadata.dataset_id = splits.dataset_id.clone();

    println!("{:>8} {:>8} {:>8} {:>8}", "method", "VE", "E", "O");
    for a in report.aggregate()? {
        println!("{:>8} {:>8.3} {:>8.3} {:>8.3}", a.method, a.ve, a.e, a.o);
    }
    report.write(&out)?;
    println!("{}", out.display());
    Ok(())
}
