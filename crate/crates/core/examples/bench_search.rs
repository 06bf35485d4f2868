//! Ranking latency against random codebooks of growing size and different K.
//!
//! cargo run --release --example bench_search

use midstream_hash::index::{bench_search, random_codebook};

fn main() -> midstream_hash::Result<()> {
    println!(
        "{:>8} {:>5} {:>4} {:>10} {:>10}",
        "entries", "bits", "k", "median us", "p99 us"
    );
    for &n in &[10_625, 21_250, 42_500, 85_000] {
        let cb = random_codebook(256, n, 1);
        for k in [1, 20, 200] {
            let r = bench_search(&cb, 100, k, 2)?;
            println!(
                "{:>8} {:>5} {:>4} {:>10.1} {:>10.1}",
                n, r.n_bits, k, r.median_us, r.p99_us
            );
        }
    }
    Ok(())
}
