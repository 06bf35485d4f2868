//! Builds plain and duplicated (ssth-rt++) codebooks, ranks a query by
//! Hamming distance and purges duplicate copies of the same video.
//!
//! cargo run --release --example codebook_search

use midstream_hash::data::{synthesize, SyntheticSpec};
use midstream_hash::encoder::EncoderModel;
use midstream_hash::index::{
    build_codebook, load_codebook, purge_duplicates, retrieve, save_codebook, search, CodebookMode,
};
use midstream_hash::training::{default_alphas, truncate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> midstream_hash::Result<()> {
    let videos = synthesize(&SyntheticSpec {
        n_classes: 3,
        videos_per_class: 10,
        ..SyntheticSpec::default()
    })?;
    // an untrained encoder is enough to show the index mechanics
    let encoder = EncoderModel::new(32, 64, &mut ChaCha8Rng::seed_from_u64(0))?;
    let plain = build_codebook(&encoder, &videos[1..], &CodebookMode::Plain)?;
    let dup = build_codebook(
        &encoder,
        &videos[1..],
        &CodebookMode::Duplicated(default_alphas()),
    )?;
    println!(
        "plain: {} entries, {} bytes",
        plain.len(),
        plain.storage_bytes()
    );
    println!(
        "dup:   {} entries, {} bytes",
        dup.len(),
        dup.storage_bytes()
    );

    let query = encoder
        .encode_sequence(&truncate(&videos[0], 0.3)?)?
        .final_code;
    println!("\nraw top-5 in the duplicated codebook");
    let raw = search(&dup, &query, 5)?;
    for h in &raw.hits {
        println!(
            "  video {:>3}  alpha {:.1}  distance {}",
            h.video_id, h.alpha, h.distance
        );
    }
    println!("after purging: {:?}", purge_duplicates(&raw).video_ids());
    println!(
        "retrieve (deeper list, purged, cut to 5): {:?}",
        retrieve(&dup, &query, 5)?.video_ids()
    );
    println!(
        "plain codebook: {:?}",
        retrieve(&plain, &query, 5)?.video_ids()
    );

    let path = std::env::temp_dir().join("msh-example.mshc");
    save_codebook(&dup, &path)?;
    assert_eq!(load_codebook(&path)?, dup);
    println!("\nround-tripped through {}", path.display());
    Ok(())
}
