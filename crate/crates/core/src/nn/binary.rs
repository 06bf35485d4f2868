//! Binary LSTM cell: the cell state is batch-normalized before the output
//! nonlinearity and the hidden state is binarized with `sign`.
//!
//! The pre-activation `beta = o * tanh(BN(c))` is exposed so that losses can
//! be placed directly on it. Gradients pass through `sign` with the clipped
//! straight-through estimator.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::lstm::{row, GateCache, LstmParams};
use crate::error::{ensure, Result};

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPSILON: f64 = 1e-5;

/// `sign` with the tie rule `sign(0) = +1`.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Substituted derivative of `sign`: 1 inside `[-1, 1]`, 0 outside.
#[inline]
pub fn ste_grad(beta: f64) -> f64 {
    if beta.abs() <= 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Running statistics of the cell-state normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
}

/// Per-unit statistics of one batch at one timestep. `var` is unbiased.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
}

impl BatchNorm {
    pub fn new(units: usize) -> Self {
        Self {
            running_mean: Array1::zeros(units),
            running_var: Array1::ones(units),
            momentum: BN_MOMENTUM,
            eps: BN_EPSILON,
        }
    }

    pub fn units(&self) -> usize {
        self.running_mean.len()
    }

    /// Exponential moving average: `running = m·running + (1-m)·batch`.
    pub fn update(&mut self, stats: &BatchStats) {
        let m = self.momentum;
        self.running_mean = &self.running_mean * m + &stats.mean * (1.0 - m);
        self.running_var = &self.running_var * m + &stats.var * (1.0 - m);
        self.running_var.mapv_inplace(|v| v.max(0.0));
    }

    fn running_inv_std(&self) -> Array1<f64> {
        self.running_var.mapv(|v| 1.0 / (v + self.eps).sqrt())
    }
}

/// Which statistics normalize the cell state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Per-unit statistics of the current batch. Falls back to running
    /// statistics for batches of a single sample.
    Batch,
    Running,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binarize {
    Sign,
    /// Identity in place of `sign`. Its derivative equals the straight-through
    /// substitute wherever `|beta| <= 1`, which always holds for this cell, so
    /// it makes the backward pass checkable by finite differences.
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellMode {
    pub norm: NormMode,
    pub binarize: Binarize,
}

impl CellMode {
    pub const INFERENCE: CellMode = CellMode {
        norm: NormMode::Running,
        binarize: Binarize::Sign,
    };
    pub const TRAIN: CellMode = CellMode {
        norm: NormMode::Batch,
        binarize: Binarize::Sign,
    };
}

#[derive(Debug, Clone)]
pub struct BinaryCache {
    pub gate: GateCache,
    pub xhat: Array2<f64>,
    pub inv_std: Array1<f64>,
    pub tanh_xhat: Array2<f64>,
    pub beta: Array2<f64>,
    pub batch_normed: bool,
    pub binarize: Binarize,
}

pub struct BinaryStep {
    /// Binarized hidden state (or `beta` itself in relaxed mode).
    pub h: Array2<f64>,
    pub c: Array2<f64>,
    pub beta: Array2<f64>,
    pub cache: BinaryCache,
    /// Batch statistics, present when the step normalized with them.
    pub stats: Option<BatchStats>,
}

pub fn binary_forward(
    params: &LstmParams,
    bn: &BatchNorm,
    x: &Array2<f64>,
    h_prev: &Array2<f64>,
    c_prev: &Array2<f64>,
    mode: CellMode,
) -> BinaryStep {
    let gate = params.gates(x, h_prev, c_prev);
    let batch = gate.c.nrows();

    let (xhat, inv_std, stats) = if mode.norm == NormMode::Batch && batch >= 2 {
        let mean = gate.c.mean_axis(Axis(0)).expect("nonempty batch");
        let centered = &gate.c - &mean;
        let var = centered
            .mapv(|v| v * v)
            .mean_axis(Axis(0))
            .expect("nonempty batch");
        let inv_std = var.mapv(|v| 1.0 / (v + bn.eps).sqrt());
        let xhat = &centered * &inv_std;
        let unbiased = &var * (batch as f64 / (batch as f64 - 1.0));
        (
            xhat,
            inv_std,
            Some(BatchStats {
                mean,
                var: unbiased,
            }),
        )
    } else {
        let inv_std = bn.running_inv_std();
        let xhat = (&gate.c - &bn.running_mean) * &inv_std;
        (xhat, inv_std, None)
    };

    let tanh_xhat = xhat.mapv(f64::tanh);
    let beta = &gate.o * &tanh_xhat;
    let h = match mode.binarize {
        Binarize::Sign => beta.mapv(sign),
        Binarize::Relaxed => beta.clone(),
    };
    let c = gate.c.clone();
    BinaryStep {
        h,
        c,
        beta: beta.clone(),
        cache: BinaryCache {
            gate,
            xhat,
            inv_std,
            tanh_xhat,
            beta,
            batch_normed: stats.is_some(),
            binarize: mode.binarize,
        },
        stats,
    }
}

/// Backward step of the binary cell.
///
/// `d_h` is the gradient on the binarized output, `d_beta` a gradient placed
/// directly on the pre-activation, `dc_next` the gradient on the raw cell
/// state from the following step. Returns `(dx, dh_prev, dc_prev)`.
pub fn binary_backward(
    params: &LstmParams,
    cache: &BinaryCache,
    d_h: Option<ArrayView2<f64>>,
    d_beta: Option<ArrayView2<f64>>,
    dc_next: ArrayView2<f64>,
    grads: &mut LstmParams,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let mut db = match d_beta {
        Some(d) => d.to_owned(),
        None => Array2::zeros(cache.beta.raw_dim()),
    };
    if let Some(d_h) = d_h {
        match cache.binarize {
            Binarize::Sign => db += &(&d_h * &cache.beta.mapv(ste_grad)),
            Binarize::Relaxed => db += &d_h,
        }
    }

    let t = &cache.tanh_xhat;
    let d_o = &db * t;
    let dxhat = &db * &cache.gate.o * &t.mapv(|v| 1.0 - v * v);

    let dc_norm = if cache.batch_normed {
        let n = dxhat.nrows() as f64;
        let sum_d = dxhat.sum_axis(Axis(0));
        let sum_dx = (&dxhat * &cache.xhat).sum_axis(Axis(0));
        let inner = &dxhat * n - &sum_d - &(&cache.xhat * &sum_dx);
        inner * &(&cache.inv_std / n)
    } else {
        &dxhat * &cache.inv_std
    };
    let dc = &dc_next + &dc_norm;
    params.gate_backward(&cache.gate, &dc, &d_o, grads)
}

/// Single-sample inference step. Returns `(h, c, beta)` with `h = sign(beta)`.
pub fn binary_lstm_step(
    params: &LstmParams,
    bn: &BatchNorm,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    params.check_vectors(x, h_prev, c_prev)?;
    ensure!(
        bn.units() == params.hidden_size,
        Config,
        "batch norm has {} units, cell has {}",
        bn.units(),
        params.hidden_size
    );
    ensure!(
        h_prev.iter().all(|&v| v == 1.0 || v == -1.0),
        InvalidInput,
        "binary hidden state must contain only -1/+1"
    );
    let step = binary_forward(
        params,
        bn,
        &row(x),
        &row(h_prev),
        &row(c_prev),
        CellMode::INFERENCE,
    );
    Ok((
        step.h.into_raw_vec_and_offset().0,
        step.c.into_raw_vec_and_offset().0,
        step.beta.into_raw_vec_and_offset().0,
    ))
}
