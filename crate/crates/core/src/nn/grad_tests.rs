use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradcheck::check;
use super::*;

#[derive(Clone)]
struct Tiny {
    cell: LstmParams,
    head: Linear,
}

impl ParamSet for Tiny {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.cell.tensors();
        v.extend(self.head.tensors());
        v
    }
    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.cell.tensors_mut();
        v.extend(self.head.tensors_mut());
        v
    }
}

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((r, c), || rng.random_range(-1.0..1.0))
}

/// Unrolled plain LSTM followed by a projection and an L2 loss on every step.
fn lstm_loss(
    m: &Tiny,
    xs: &[Array2<f64>],
    targets: &[Array2<f64>],
    grads: Option<&mut Tiny>,
) -> f64 {
    let b = xs[0].nrows();
    let n = m.cell.hidden_size;
    let mut h = Array2::zeros((b, n));
    let mut c = Array2::zeros((b, n));
    let mut caches = Vec::new();
    let mut hs = Vec::new();
    let mut loss = 0.0;
    let mut dys = Vec::new();
    for (x, t) in xs.iter().zip(targets) {
        let (nh, nc, cache) = m.cell.forward(x, &h, &c);
        let y = m.head.forward(&nh);
        let (l, dy) = l2_rows(y.view(), t.view());
        loss += l;
        dys.push(dy);
        hs.push(nh.clone());
        caches.push(cache);
        h = nh;
        c = nc;
    }
    if let Some(g) = grads {
        let mut dh_next = Array2::zeros((b, n));
        let mut dc_next = Array2::zeros((b, n));
        for k in (0..xs.len()).rev() {
            let dh = m.head.backward(&hs[k], dys[k].view(), &mut g.head) + &dh_next;
            let (_, dh_prev, dc_prev) =
                m.cell
                    .backward(&caches[k], dh.view(), dc_next.view(), &mut g.cell);
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
    }
    loss
}

#[test]
fn lstm_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let m = Tiny {
        cell: LstmParams::new(3, 4, &mut rng),
        head: Linear::new(4, 2, &mut rng),
    };
    assert!(m.num_params() <= 500);
    let xs: Vec<_> = (0..4).map(|_| random(&mut rng, 2, 3)).collect();
    let ts: Vec<_> = (0..4).map(|_| random(&mut rng, 2, 2)).collect();
    let mut g = Tiny {
        cell: m.cell.zeros_like(),
        head: m.head.zeros_like(),
    };
    lstm_loss(&m, &xs, &ts, Some(&mut g));
    let report = check(&m, &g, |p| lstm_loss(p, &xs, &ts, None));
    assert!(report.passed(), "{report:?}");
}

#[test]
fn self_target_has_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = Tiny {
        cell: LstmParams::new(3, 4, &mut rng),
        head: Linear::new(4, 2, &mut rng),
    };
    let xs: Vec<_> = (0..3).map(|_| random(&mut rng, 2, 3)).collect();
    // Targets equal to the model's own outputs.
    let mut h = Array2::zeros((2, 4));
    let mut c = Array2::zeros((2, 4));
    let mut ts = Vec::new();
    for x in &xs {
        let (nh, nc, _) = m.cell.forward(x, &h, &c);
        ts.push(m.head.forward(&nh));
        h = nh;
        c = nc;
    }
    let mut g = Tiny {
        cell: m.cell.zeros_like(),
        head: m.head.zeros_like(),
    };
    let loss = lstm_loss(&m, &xs, &ts, Some(&mut g));
    assert_eq!(loss, 0.0);
    assert!(g.flatten().iter().all(|&v| v == 0.0));
}

/// Unrolled binary cell; loss is an L2 term on the final pre-activation plus
/// an L2 term on the projected output at each step.
fn binary_loss(
    m: &Tiny,
    bn: &BatchNorm,
    mode: CellMode,
    xs: &[Array2<f64>],
    beta_target: &Array2<f64>,
    targets: &[Array2<f64>],
    grads: Option<&mut Tiny>,
) -> f64 {
    let b = xs[0].nrows();
    let n = m.cell.hidden_size;
    let mut h = Array2::from_elem((b, n), 1.0);
    let mut c = Array2::zeros((b, n));
    let mut steps = Vec::new();
    let mut loss = 0.0;
    let mut dys = Vec::new();
    for (x, t) in xs.iter().zip(targets) {
        let step = binary_forward(&m.cell, bn, x, &h, &c, mode);
        let (l, dy) = l2_rows(m.head.forward(&step.h).view(), t.view());
        loss += l;
        dys.push(dy);
        h = step.h.clone();
        c = step.c.clone();
        steps.push(step);
    }
    let (lb, dbeta) = l2_rows(steps.last().unwrap().beta.view(), beta_target.view());
    loss += lb;
    if let Some(g) = grads {
        let mut dh_next = Array2::zeros((b, n));
        let mut dc_next = Array2::zeros((b, n));
        let last = xs.len() - 1;
        for k in (0..xs.len()).rev() {
            let dh = m.head.backward(&steps[k].h, dys[k].view(), &mut g.head) + &dh_next;
            let db = (k == last).then(|| dbeta.view());
            let (_, dh_prev, dc_prev) = binary_backward(
                &m.cell,
                &steps[k].cache,
                Some(dh.view()),
                db,
                dc_next.view(),
                &mut g.cell,
            );
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
    }
    loss
}

fn check_binary(norm: NormMode, batch: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Tiny {
        cell: LstmParams::new(3, 4, &mut rng),
        head: Linear::new(4, 2, &mut rng),
    };
    let mut bn = BatchNorm::new(4);
    bn.running_mean = ndarray::Array1::from_shape_simple_fn(4, || rng.random_range(-0.2..0.2));
    bn.running_var = ndarray::Array1::from_shape_simple_fn(4, || rng.random_range(0.2..1.5));
    let mode = CellMode {
        norm,
        binarize: Binarize::Relaxed,
    };
    let xs: Vec<_> = (0..4).map(|_| random(&mut rng, batch, 3)).collect();
    let ts: Vec<_> = (0..4).map(|_| random(&mut rng, batch, 2)).collect();
    let bt = random(&mut rng, batch, 4).mapv(sign);
    let mut g = Tiny {
        cell: m.cell.zeros_like(),
        head: m.head.zeros_like(),
    };
    binary_loss(&m, &bn, mode, &xs, &bt, &ts, Some(&mut g));
    let report = check(&m, &g, |p| binary_loss(p, &bn, mode, &xs, &bt, &ts, None));
    assert!(report.passed(), "{norm:?}: {report:?}");
}

#[test]
fn binary_cell_batch_norm_gradients() {
    check_binary(NormMode::Batch, 3, 31);
}

#[test]
fn binary_cell_running_norm_gradients() {
    check_binary(NormMode::Running, 2, 32);
}

#[test]
fn no_nan_on_bounded_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = Tiny {
        cell: LstmParams::new(3, 4, &mut rng),
        head: Linear::new(4, 2, &mut rng),
    };
    let bn = BatchNorm::new(4);
    let xs: Vec<_> = (0..6).map(|_| random(&mut rng, 3, 3) * 10.0).collect();
    let ts: Vec<_> = (0..6).map(|_| random(&mut rng, 3, 2) * 10.0).collect();
    let bt = Array2::from_elem((3, 4), -1.0);
    let mut g = Tiny {
        cell: m.cell.zeros_like(),
        head: m.head.zeros_like(),
    };
    let l = binary_loss(&m, &bn, CellMode::TRAIN, &xs, &bt, &ts, Some(&mut g));
    assert!(l.is_finite());
    assert!(g.flatten().iter().all(|v| v.is_finite()));
}
