//! All five methods on the desk-scale synthetic benchmark (10 classes,
//! 50 videos per class, 32 features, 32 bits), averaged over seeds.
//!
//! cargo run --release --example desk_experiment -- 3

use std::collections::BTreeMap;

use midstream_hash::pipeline::{run_experiment, Experiment};

fn main() -> midstream_hash::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let exp = Experiment::default();
    let mut sums: BTreeMap<String, [f64; 4]> = BTreeMap::new();
    for seed in 0..seeds {
        let out = run_experiment(&exp, seed)?;
        for a in out.report.aggregate()? {
            let full = out
                .report
                .get(&a.method, a.n_bits, a.k, 1.0)
                .map_or(f64::NAN, |r| r.map);
            println!(
                "seed {seed} {:>10}  VE {:.3}  E {:.3}  O {:.3}  a=1 {:.3}",
                a.method, a.ve, a.e, a.o, full
            );
            let s = sums.entry(a.method).or_default();
            for (acc, v) in s.iter_mut().zip([a.ve, a.e, a.o, full]) {
                *acc += v / seeds as f64;
            }
        }
    }
    println!("\nmean over {seeds} seed(s), mAP@{}", exp.k);
    println!(
        "{:>10} {:>7} {:>7} {:>7} {:>7}",
        "method", "VE", "E", "O", "a=1"
    );
    for (m, [ve, e, o, full]) in sums {
        println!("{m:>10} {ve:>7.3} {e:>7.3} {o:>7.3} {full:>7.3}");
    }
    Ok(())
}
