//! Writes a small synthetic dataset and splits it into train, codebook and
//! query videos.
//!
//! cargo run --release --example generate_data -- /tmp/msh-data

use std::path::PathBuf;

use midstream_hash::data::{generate_synthetic, split, Split, SyntheticSpec, DEFAULT_SPLIT};

fn main() -> midstream_hash::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("msh-data"));
    let spec = SyntheticSpec {
        n_classes: 4,
        videos_per_class: 10,
        ..SyntheticSpec::default()
    };
    let manifest = split(&generate_synthetic(&spec, &out)?, DEFAULT_SPLIT, spec.seed)?;
    let path = out.join("manifest.txt");
    manifest.save(&path)?;

    println!("{}", path.display());
    for s in [Split::Train, Split::Codebook, Split::Query] {
        println!("{s:>9}: {} videos", manifest.count(s));
    }
    let first = manifest.load_split(Split::Query)?;
    let v = &first[0];
    println!(
        "query video {} (class {}): {} clips of {} features",
        v.video_id,
        v.class_id,
        v.len(),
        v.n_f()
    );
    Ok(())
}
