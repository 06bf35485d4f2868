//! Saves a trained model, reloads it and checks that codes are reproduced
//! bit for bit.
//!
//! cargo run --release --example model_files

use midstream_hash::data::{synthesize, SyntheticSpec};
use midstream_hash::encoder::{load_model, save_model, ModelFile};
use midstream_hash::training::{train_primary, TrainingConfig};
use midstream_hash::Regime;

fn main() -> midstream_hash::Result<()> {
    let videos = synthesize(&SyntheticSpec {
        n_classes: 2,
        videos_per_class: 5,
        n_f: 8,
        ..SyntheticSpec::default()
    })?;
    let cfg = TrainingConfig {
        n_bits: 16,
        epochs: 5,
        ..TrainingConfig::for_regime(Regime::SsthRt)
    };
    println!("config:\n{}", cfg.to_toml());
    let trained = train_primary(&cfg, &videos)?.model;
    let file = ModelFile {
        regime: cfg.regime,
        encoder: trained.encoder,
        decoder: Some(trained.decoder),
    };
    let path = std::env::temp_dir().join("msh-example.msh");
    save_model(&file, &path)?;
    let back = load_model(&path)?;
    println!(
        "{}: {} bytes, regime {}",
        path.display(),
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        back.regime
    );
    for v in &videos {
        let a = file.encoder.encode_sequence(v)?.final_code;
        let b = back.encoder.encode_sequence(v)?.final_code;
        assert_eq!(a, b);
        println!("video {:>2}  {a}", v.video_id);
    }
    Ok(())
}
