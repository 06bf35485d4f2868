//! Mid-stream retrieval: a video arrives clip by clip, each clip updates the
//! bitcode in constant time, and the codebook is queried after every clip.
//!
//! cargo run --release --example stream_session

use midstream_hash::data::{synthesize, SyntheticSpec};
use midstream_hash::index::{build_codebook, CodebookMode, StreamSession};
use midstream_hash::training::{train_primary, TrainingConfig};
use midstream_hash::Regime;

fn main() -> midstream_hash::Result<()> {
    let videos = synthesize(&SyntheticSpec {
        n_classes: 5,
        videos_per_class: 20,
        ..SyntheticSpec::default()
    })?;
    let (stream, database): (Vec<_>, Vec<_>) =
        videos.into_iter().partition(|v| v.video_id % 20 == 0);
    let model = train_primary(
        &TrainingConfig {
            epochs: 20,
            ..TrainingConfig::for_regime(Regime::SsthRtPlus)
        },
        &database,
    )?
    .model;
    let codebook = build_codebook(&model.encoder, &database, &CodebookMode::Plain)?;
    let class_of = |id: u64| {
        database
            .iter()
            .find(|v| v.video_id == id)
            .map(|v| v.class_id)
    };

    let live = &stream[0];
    println!(
        "streaming video {} of class {} ({} clips)",
        live.video_id,
        live.class_id,
        live.len()
    );
    let mut session = StreamSession::open(&model.encoder, live.video_id);
    for clip in live.clips() {
        let code = session.push(clip)?.clone();
        let top = session.query(&codebook, 5)?;
        let hits: Vec<String> = top
            .hits
            .iter()
            .map(|h| {
                format!(
                    "{}:c{}@{}",
                    h.video_id,
                    class_of(h.video_id).unwrap_or(u32::MAX),
                    h.distance
                )
            })
            .collect();
        let correct = top
            .hits
            .iter()
            .filter(|h| class_of(h.video_id) == Some(live.class_id))
            .count();
        println!(
            "clip {:>2}  {:>3.0}%  {}  {correct}/5 correct  {}",
            session.clips_consumed(),
            100.0 * session.clips_consumed() as f64 / live.len() as f64,
            code,
            hits.join(" ")
        );
    }
    Ok(())
}
