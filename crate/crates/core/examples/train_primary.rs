//! Trains an ssth-rt autoencoder on synthetic videos and prints the loss
//! curve. (An ssth-rt+ curve mixes full and truncated batches, whose losses
//! differ in scale, so it is noisier from epoch to epoch.)
//!
//! cargo run --release --example train_primary

use midstream_hash::data::{synthesize, SyntheticSpec};
use midstream_hash::training::{train_primary, TrainingConfig};
use midstream_hash::Regime;

fn main() -> midstream_hash::Result<()> {
    let videos = synthesize(&SyntheticSpec {
        n_classes: 5,
        videos_per_class: 20,
        ..SyntheticSpec::default()
    })?;
    let cfg = TrainingConfig {
        epochs: 20,
        ..TrainingConfig::for_regime(Regime::SsthRt)
    };
    let trained = train_primary(&cfg, &videos)?;
    for e in &trained.log.epochs {
        println!("epoch {:>3}  loss {:.4}", e.epoch, e.loss);
    }
    let code = trained
        .model
        .encoder
        .encode_sequence(&videos[0])?
        .final_code;
    println!("video 0 hashes to {code}");
    Ok(())
}
