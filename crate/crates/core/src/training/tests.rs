use std::collections::BTreeSet;

use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::data::{synthesize, SyntheticSpec};
use crate::nn::{gradcheck, Binarize, NormMode};

fn seq_of_len(id: u64, len: usize, n_f: usize, rng: &mut ChaCha8Rng) -> FeatureSequence {
    let data = (0..len * n_f)
        .map(|_| rng.random_range(-1.0f32..1.0))
        .collect();
    FeatureSequence::new(id, 0, 1.0, n_f, data).unwrap()
}

fn small_set() -> Vec<FeatureSequence> {
    let spec = SyntheticSpec {
        n_classes: 3,
        videos_per_class: 4,
        n_f: 6,
        min_len: 4,
        max_len: 9,
        ..SyntheticSpec::default()
    };
    synthesize(&spec).unwrap()
}

fn quick(regime: Regime, epochs: usize) -> TrainingConfig {
    TrainingConfig {
        n_bits: 8,
        epochs,
        batch_size: 4,
        seed: 11,
        ..TrainingConfig::for_regime(regime)
    }
}

#[test]
fn truncate_levels() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ten = seq_of_len(0, 10, 2, &mut rng);
    assert_eq!(truncate(&ten, 1.0).unwrap(), ten);
    assert_eq!(truncate(&ten, 0.5).unwrap().len(), 5);
    assert_eq!(truncate(&ten, 0.5).unwrap().values(), &ten.values()[..10]);
    assert_eq!(
        truncate(&seq_of_len(1, 3, 2, &mut rng), 0.1).unwrap().len(),
        1
    );
    for bad in [0.0, -0.2, 1.01, f64::NAN] {
        assert!(truncate(&ten, bad).is_err());
    }
}

#[test]
fn equal_lengths_are_not_trimmed() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let set: Vec<_> = (0..7).map(|i| seq_of_len(i, 12, 2, &mut rng)).collect();
    for b in make_batches(&set, 3, 8, &mut rng) {
        assert_eq!(b.len, 12);
    }
}

#[test]
fn buckets_separate_distant_lengths() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let set: Vec<_> = [10, 11, 40]
        .iter()
        .enumerate()
        .map(|(i, &l)| seq_of_len(i as u64, l, 2, &mut rng))
        .collect();
    let batches = make_batches(&set, 3, 8, &mut rng);
    assert_eq!(batches.len(), 2);
    let pair = batches.iter().find(|b| b.indices.len() == 2).unwrap();
    assert_eq!(pair.len, 10);
    assert!(!pair.indices.contains(&2));
}

proptest! {
    #[test]
    fn batches_partition_the_dataset(
        lens in prop::collection::vec(1usize..50, 1..60),
        batch_size in 1usize..12,
        width in 1usize..10,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set: Vec<_> = lens.iter().enumerate().map(|(i, &l)| seq_of_len(i as u64, l, 1, &mut rng)).collect();
        let batches = make_batches(&set, batch_size, width, &mut rng);
        let mut seen = BTreeSet::new();
        for b in &batches {
            prop_assert!(b.indices.len() <= batch_size && !b.indices.is_empty());
            let bucket = set[b.indices[0]].len() / width;
            for &i in &b.indices {
                prop_assert!(seen.insert(i));
                prop_assert_eq!(set[i].len() / width, bucket);
                prop_assert!(set[i].len() >= b.len);
            }
            prop_assert_eq!(b.len, b.indices.iter().map(|&i| set[i].len()).min().unwrap());
        }
        prop_assert_eq!(seen.len(), set.len());
    }
}

#[test]
fn reconstruction_loss_examples() {
    let seq = FeatureSequence::from_clips(0, 0, &[vec![3.0, 4.0]]).unwrap();
    let zero = vec![vec![0.0, 0.0]];
    assert_eq!(loss_reconstruction(&seq, &zero, &zero).unwrap(), 10.0);
    let exact = vec![vec![3.0, 4.0]];
    assert_eq!(loss_reconstruction(&seq, &exact, &exact).unwrap(), 0.0);
    assert!(loss_reconstruction(&seq, &[], &exact).is_err());
    assert!(loss_reconstruction(&seq, &[vec![1.0]], &exact).is_err());
}

#[test]
fn reconstruction_loss_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seq = seq_of_len(0, 6, 4, &mut rng);
    let rand_rows = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..6)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let fwd = rand_rows(&mut rng);
    let rev = rand_rows(&mut rng);
    let mut expected = 0.0;
    for j in 0..6 {
        let mut sf = 0.0;
        let mut sr = 0.0;
        for k in 0..4 {
            sf += (seq.clip(j)[k] as f64 - fwd[j][k]).powi(2);
            sr += (seq.clip(5 - j)[k] as f64 - rev[j][k]).powi(2);
        }
        expected += sf.sqrt() + sr.sqrt();
    }
    let got = loss_reconstruction(&seq, &fwd, &rev).unwrap();
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn batched_loss_equals_sum_of_per_video_losses() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dec = DecoderModel::new(3, 5, &mut rng).unwrap();
    let seqs: Vec<_> = (0..3).map(|i| seq_of_len(i, 4, 3, &mut rng)).collect();
    let codes: Vec<Bitcode> = (0..3)
        .map(|_| Bitcode::from_bools(&(0..5).map(|_| rng.random_bool(0.5)).collect::<Vec<_>>()))
        .collect();
    let signs = Array2::from_shape_fn((3, 5), |(b, k)| codes[b].to_signs()[k]);
    let refs: Vec<_> = seqs.iter().collect();
    let batched = dec.reconstruction_loss_batch(&signs, &batch_tensor(&refs, 4));
    let mut direct = 0.0;
    for (s, c) in seqs.iter().zip(&codes) {
        let (f, r) = dec.decode(c, s.len()).unwrap();
        direct += loss_reconstruction(s, &f, &r).unwrap();
    }
    assert!((batched - direct).abs() < 1e-9);
}

#[test]
fn la_code_loss_examples() {
    let ones = Bitcode::from_signs(&[1.0, -1.0, 1.0, 1.0]);
    assert_eq!(loss_la_code(&[1.0, -1.0, 1.0, 1.0], &ones).unwrap(), 0.0);
    assert_eq!(loss_la_code(&[0.0; 4], &ones).unwrap(), 2.0);
    assert!(loss_la_code(&[0.0; 3], &ones).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let beta: Vec<f64> = (0..37).map(|_| rng.random_range(-1.0..1.0)).collect();
    let bools: Vec<bool> = (0..37).map(|_| rng.random_bool(0.5)).collect();
    let code = Bitcode::from_bools(&bools);
    let expected = beta
        .iter()
        .zip(&bools)
        .map(|(b, &on)| (b - if on { 1.0 } else { -1.0 }).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!((loss_la_code(&beta, &code).unwrap() - expected).abs() < 1e-12);
}

fn tiny_batch(rng: &mut ChaCha8Rng, b: usize, t: usize) -> Vec<Array2<f64>> {
    (0..t)
        .map(|_| Array2::from_shape_simple_fn((b, 6), || rng.random_range(-1.0..1.0)))
        .collect()
}

const RELAXED_RUNNING: CellMode = CellMode {
    norm: NormMode::Running,
    binarize: Binarize::Relaxed,
};

#[test]
fn primary_gradients_on_reference_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = Autoencoder {
        encoder: EncoderModel::new(6, 8, &mut rng).unwrap(),
        decoder: DecoderModel::new(6, 8, &mut rng).unwrap(),
    };
    let xs = tiny_batch(&mut rng, 3, 5);
    let mode = CellMode {
        norm: NormMode::Batch,
        binarize: Binarize::Relaxed,
    };
    let mut grads = model.zeros_like();
    let trace = model.encoder.forward_batch(&xs, mode);
    let (_, d_code) =
        model
            .decoder
            .reconstruction_batch(&trace.code, &xs, Some(&mut grads.decoder));
    model
        .encoder
        .backward_batch(&trace, Some(d_code.view()), None, &mut grads.encoder);
    let report = gradcheck::check(&model, &grads, |m: &Autoencoder| {
        let tr = m.encoder.forward_batch(&xs, mode);
        m.decoder.reconstruction_loss_batch(&tr.code, &xs)
    });
    assert!(report.passed(), "{report:?}");
}

#[test]
fn la_code_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let enc = EncoderModel::new(6, 8, &mut rng).unwrap();
    let xs = tiny_batch(&mut rng, 3, 4);
    let target =
        Array2::from_shape_simple_fn((3, 8), || if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let mut grads = enc.zeros_like();
    let trace = enc.forward_batch(&xs, RELAXED_RUNNING);
    let (_, d_beta) = l2_rows(trace.beta.view(), target.view());
    enc.backward_batch(&trace, None, Some(d_beta.view()), &mut grads);
    let report = gradcheck::check(&enc, &grads, |m: &EncoderModel| {
        l2_rows(
            m.forward_batch(&xs, RELAXED_RUNNING).beta.view(),
            target.view(),
        )
        .0
    });
    assert!(report.passed(), "{report:?}");
}

#[test]
fn la_reco_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let enc = EncoderModel::new(6, 8, &mut rng).unwrap();
    let dec = DecoderModel::new(6, 8, &mut rng).unwrap();
    let full = tiny_batch(&mut rng, 2, 5);
    let seen = &full[..2];
    let mut grads = enc.zeros_like();
    let trace = enc.forward_batch(seen, RELAXED_RUNNING);
    let (_, d_code) = dec.reconstruction_batch(&trace.code, &full, None);
    enc.backward_batch(&trace, Some(d_code.view()), None, &mut grads);
    let report = gradcheck::check(&enc, &grads, |m: &EncoderModel| {
        dec.reconstruction_loss_batch(&m.forward_batch(seen, RELAXED_RUNNING).code, &full)
    });
    assert!(report.passed(), "{report:?}");
}

#[test]
fn overfits_a_single_video() {
    let spec = SyntheticSpec {
        n_classes: 1,
        videos_per_class: 1,
        n_f: 6,
        min_len: 6,
        max_len: 6,
        noise: 0.0,
        distractor_fraction: 0.0,
        ..SyntheticSpec::default()
    };
    let set = synthesize(&spec).unwrap();
    let cfg = TrainingConfig {
        n_bits: 16,
        ..quick(Regime::SsthRt, 50)
    };
    let log = train_primary(&cfg, &set).unwrap().log;
    let (first, last) = (log.first().unwrap(), log.last().unwrap());
    assert!(last * 10.0 <= first, "loss {first} -> {last}");
}

#[test]
fn loss_decreases_on_small_set() {
    let log = train_primary(&quick(Regime::SsthRtPlus, 20), &small_set())
        .unwrap()
        .log;
    assert_eq!(log.epochs.len(), 20);
    assert!(log.epochs[19].loss < log.epochs[0].loss, "{log:?}");
    assert!(log.epochs.iter().all(|e| e.loss >= 0.0));
    assert!(log.to_csv().starts_with("epoch,loss\n1,"));
}

#[test]
fn plus_with_full_alpha_equals_plain() {
    let set = small_set();
    let mut plain = quick(Regime::SsthRt, 3);
    plain.alphas = vec![1.0];
    let plus = TrainingConfig {
        regime: Regime::SsthRtPlus,
        ..plain.clone()
    };
    let a = train_primary(&plain, &set).unwrap();
    let b = train_primary(&plus, &set).unwrap();
    assert_eq!(a.model, b.model);
    let c = train_primary(&quick(Regime::SsthRtPlus, 3), &set).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn training_is_deterministic() {
    let set = small_set();
    let cfg = quick(Regime::SsthRtPlus, 3);
    let a = train_primary(&cfg, &set).unwrap();
    let b = train_primary(&cfg, &set).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.log, b.log);
    let codes = |m: &EncoderModel| -> Vec<Bitcode> {
        set.iter()
            .map(|s| m.encode_sequence(s).unwrap().final_code)
            .collect()
    };
    assert_eq!(codes(&a.model.encoder), codes(&b.model.encoder));

    let sec = quick(Regime::LaReco, 2);
    let (x, _) = train_secondary(&sec, &a.model.encoder, &a.model.decoder, &set).unwrap();
    let (y, _) = train_secondary(&sec, &a.model.encoder, &a.model.decoder, &set).unwrap();
    assert_eq!(x, y);
}

#[test]
fn regime_mismatches_are_rejected() {
    let set = small_set();
    assert!(matches!(
        train_primary(&quick(Regime::LaCode, 1), &set),
        Err(Error::Regime(_))
    ));
    assert!(train_primary(&quick(Regime::SsthRt, 1), &[]).is_err());
    let p = train_primary(&quick(Regime::SsthRt, 1), &set)
        .unwrap()
        .model;
    assert!(matches!(
        train_secondary(&quick(Regime::SsthRtPlus, 1), &p.encoder, &p.decoder, &set),
        Err(Error::Regime(_))
    ));
    let wide = TrainingConfig {
        n_bits: 16,
        ..quick(Regime::LaCode, 1)
    };
    assert!(matches!(
        train_secondary(&wide, &p.encoder, &p.decoder, &set),
        Err(Error::Regime(_))
    ));
}

#[test]
fn secondary_leaves_primary_and_decoder_untouched() {
    let set = small_set();
    let p = train_primary(&quick(Regime::SsthRtPlus, 2), &set)
        .unwrap()
        .model;
    let before = p.clone();
    for regime in [Regime::LaReco, Regime::LaCode] {
        let (s, _) = train_secondary(&quick(regime, 3), &p.encoder, &p.decoder, &set).unwrap();
        assert_ne!(s, p.encoder);
        assert_eq!(s.bn, p.encoder.bn);
    }
    assert_eq!(p, before);
}

#[test]
fn la_code_at_rest_reports_primary_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let set: Vec<_> = (0..5).map(|i| seq_of_len(i, 6, 6, &mut rng)).collect();
    let p = train_primary(&quick(Regime::SsthRt, 2), &set)
        .unwrap()
        .model;
    let cfg = TrainingConfig {
        epochs: 1,
        learning_rate: 0.0,
        alphas: vec![1.0],
        ..quick(Regime::LaCode, 1)
    };
    let (s, log) = train_secondary(&cfg, &p.encoder, &p.decoder, &set).unwrap();
    assert_eq!(s, p.encoder);
    let expected: f64 = set
        .iter()
        .map(|v| {
            let enc = p.encoder.encode_sequence(v).unwrap();
            loss_la_code(&enc.prebitcode, &enc.final_code).unwrap()
        })
        .sum::<f64>()
        / set.len() as f64;
    assert!(
        (log.first().unwrap() - expected).abs() < 1e-9,
        "{log:?} vs {expected}"
    );
}

#[test]
fn la_code_pulls_prefix_codes_towards_full_codes() {
    let set: Vec<_> = small_set().into_iter().take(5).collect();
    let p = train_primary(&quick(Regime::SsthRtPlus, 5), &set)
        .unwrap()
        .model;
    let mean_hamming = |m: &EncoderModel| -> f64 {
        set.iter()
            .map(|v| {
                let target = p.encoder.encode_sequence(v).unwrap().final_code;
                let early = m
                    .encode_sequence(&truncate(v, 0.3).unwrap())
                    .unwrap()
                    .final_code;
                target
                    .to_signs()
                    .iter()
                    .zip(early.to_signs())
                    .filter(|(a, b)| **a != *b)
                    .count() as f64
            })
            .sum::<f64>()
            / set.len() as f64
    };
    let cfg = TrainingConfig {
        epochs: 200,
        learning_rate: 5e-3,
        alphas: vec![0.3],
        ..quick(Regime::LaCode, 1)
    };
    let start = mean_hamming(&p.encoder);
    let (s, log) = train_secondary(&cfg, &p.encoder, &p.decoder, &set).unwrap();
    let end = mean_hamming(&s);
    assert!(
        end < start,
        "mean Hamming {start} -> {end}, {:?}",
        log.last()
    );
}

#[test]
fn sgd_option_also_descends() {
    let cfg = TrainingConfig {
        optimizer: Optimizer::Sgd,
        ..quick(Regime::SsthRt, 20)
    };
    let log = train_primary(&cfg, &small_set()).unwrap().log;
    assert!(log.epochs[19].loss < log.epochs[0].loss, "{log:?}");
}
