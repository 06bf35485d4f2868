//! Distills la-code and la-reco secondary encoders from a primary and
//! compares how close their prefix codes get to the primary's full-video
//! codes.
//!
//! cargo run --release --example distill

use midstream_hash::data::{synthesize, FeatureSequence, SyntheticSpec};
use midstream_hash::encoder::EncoderModel;
use midstream_hash::index::hamming;
use midstream_hash::training::{train_primary, train_secondary, truncate, TrainingConfig};
use midstream_hash::Regime;

fn mean_distance(
    query: &EncoderModel,
    primary: &EncoderModel,
    videos: &[FeatureSequence],
    alpha: f64,
) -> f64 {
    let total: u32 = videos
        .iter()
        .map(|v| {
            let target = primary.encode_sequence(v).unwrap().final_code;
            let seen = query
                .encode_sequence(&truncate(v, alpha).unwrap())
                .unwrap()
                .final_code;
            hamming(&target, &seen).unwrap()
        })
        .sum();
    total as f64 / videos.len() as f64
}

fn main() -> midstream_hash::Result<()> {
    let videos = synthesize(&SyntheticSpec {
        n_classes: 5,
        videos_per_class: 20,
        ..SyntheticSpec::default()
    })?;
    let primary = train_primary(
        &TrainingConfig {
            epochs: 20,
            ..TrainingConfig::for_regime(Regime::SsthRtPlus)
        },
        &videos,
    )?
    .model;

    println!("mean Hamming distance to the full-video code (32 bits)");
    println!("{:>10} {:>8} {:>8}", "method", "a=0.2", "a=0.5");
    let row = |name: &str, enc: &EncoderModel| {
        println!(
            "{name:>10} {:>8.2} {:>8.2}",
            mean_distance(enc, &primary.encoder, &videos, 0.2),
            mean_distance(enc, &primary.encoder, &videos, 0.5)
        );
    };
    row("primary", &primary.encoder);
    for regime in [Regime::LaCode, Regime::LaReco] {
        let cfg = TrainingConfig::for_regime(regime);
        let (enc, log) = train_secondary(&cfg, &primary.encoder, &primary.decoder, &videos)?;
        eprintln!(
            "{regime}: loss {:.3} -> {:.3}",
            log.first().unwrap_or(0.0),
            log.last().unwrap_or(0.0)
        );
        row(regime.name(), &enc);
    }
    Ok(())
}
