//! Batched LSTM cell with a hand-written backward pass.
//!
//! Activations are laid out as `batch × units`. The four gates are packed
//! column-wise in the order input, forget, candidate, output.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::params::{
    slice1, slice1_mut, slice2, slice2_mut, uniform_init, uniform_init_vec, ParamSet,
};
use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    /// `input_size × 4·hidden_size`
    pub w_x: Array2<f64>,
    /// `hidden_size × 4·hidden_size`
    pub w_h: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LstmParams {
    pub fn new<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let fan_in = input_size + hidden_size;
        let g = 4 * hidden_size;
        Self {
            input_size,
            hidden_size,
            w_x: uniform_init(rng, input_size, g, fan_in),
            w_h: uniform_init(rng, hidden_size, g, fan_in),
            bias: uniform_init_vec(rng, g, fan_in),
        }
    }

    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let g = 4 * hidden_size;
        Self {
            input_size,
            hidden_size,
            w_x: Array2::zeros((input_size, g)),
            w_h: Array2::zeros((hidden_size, g)),
            bias: Array1::zeros(g),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_size, self.hidden_size)
    }

    /// One step of the recurrence on a single (unbatched) sample.
    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_vectors(x, h_prev, c_prev)?;
        let (h, c, _) = self.forward(&row(x), &row(h_prev), &row(c_prev));
        Ok((h.into_raw_vec_and_offset().0, c.into_raw_vec_and_offset().0))
    }

    pub(crate) fn check_vectors(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<()> {
        ensure!(
            x.len() == self.input_size,
            Config,
            "lstm input has {} values, expected {}",
            x.len(),
            self.input_size
        );
        ensure!(
            h_prev.len() == self.hidden_size && c_prev.len() == self.hidden_size,
            Config,
            "lstm state has ({}, {}) values, expected {}",
            h_prev.len(),
            c_prev.len(),
            self.hidden_size
        );
        Ok(())
    }

    pub(crate) fn gates(
        &self,
        x: &Array2<f64>,
        h_prev: &Array2<f64>,
        c_prev: &Array2<f64>,
    ) -> GateCache {
        let n = self.hidden_size;
        let mut z = x.dot(&self.w_x) + h_prev.dot(&self.w_h);
        z += &self.bias;
        let i = z.slice(s![.., 0..n]).mapv(sigmoid);
        let f = z.slice(s![.., n..2 * n]).mapv(sigmoid);
        let g = z.slice(s![.., 2 * n..3 * n]).mapv(f64::tanh);
        let o = z.slice(s![.., 3 * n..4 * n]).mapv(sigmoid);
        let c = &f * c_prev + &i * &g;
        GateCache {
            x: x.clone(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            i,
            f,
            g,
            o,
            c,
        }
    }

    /// Batched forward step. Returns `(h, c, cache)`.
    pub fn forward(
        &self,
        x: &Array2<f64>,
        h_prev: &Array2<f64>,
        c_prev: &Array2<f64>,
    ) -> (Array2<f64>, Array2<f64>, LstmCache) {
        let gate = self.gates(x, h_prev, c_prev);
        let tanh_c = gate.c.mapv(f64::tanh);
        let h = &gate.o * &tanh_c;
        let c = gate.c.clone();
        (h, c, LstmCache { gate, tanh_c })
    }

    /// Backward step. `dh` and `dc_next` are the gradients flowing into this
    /// step's outputs; parameter gradients are accumulated into `grads`.
    /// Returns `(dx, dh_prev, dc_prev)`.
    pub fn backward(
        &self,
        cache: &LstmCache,
        dh: ArrayView2<f64>,
        dc_next: ArrayView2<f64>,
        grads: &mut LstmParams,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let t = &cache.tanh_c;
        let d_o = &dh * t;
        let dc = &dc_next + &(&dh * &cache.gate.o * &t.mapv(|v| 1.0 - v * v));
        self.gate_backward(&cache.gate, &dc, &d_o, grads)
    }

    /// Backward through the gate nonlinearities and affine maps, given the
    /// total gradient on the new cell state and on the output gate.
    pub(crate) fn gate_backward(
        &self,
        gc: &GateCache,
        dc: &Array2<f64>,
        d_o: &Array2<f64>,
        grads: &mut LstmParams,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let dzi = dc * &gc.g * &gc.i.mapv(|v| v * (1.0 - v));
        let dzf = dc * &gc.c_prev * &gc.f.mapv(|v| v * (1.0 - v));
        let dzg = dc * &gc.i * &gc.g.mapv(|v| 1.0 - v * v);
        let dzo = d_o * &gc.o.mapv(|v| v * (1.0 - v));
        let dz = concatenate(Axis(1), &[dzi.view(), dzf.view(), dzg.view(), dzo.view()])
            .expect("gate blocks share the batch dimension");

        grads.w_x += &gc.x.t().dot(&dz);
        grads.w_h += &gc.h_prev.t().dot(&dz);
        grads.bias += &dz.sum_axis(Axis(0));

        let dx = dz.dot(&self.w_x.t());
        let dh_prev = dz.dot(&self.w_h.t());
        let dc_prev = dc * &gc.f;
        (dx, dh_prev, dc_prev)
    }
}

impl ParamSet for LstmParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![slice2(&self.w_x), slice2(&self.w_h), slice1(&self.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            slice2_mut(&mut self.w_x),
            slice2_mut(&mut self.w_h),
            slice1_mut(&mut self.bias),
        ]
    }
}

/// Gate activations of one step, shared by the plain and binary cells.
#[derive(Debug, Clone)]
pub struct GateCache {
    pub x: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub c_prev: Array2<f64>,
    pub i: Array2<f64>,
    pub f: Array2<f64>,
    pub g: Array2<f64>,
    pub o: Array2<f64>,
    /// New cell state, before any normalization.
    pub c: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    pub gate: GateCache,
    pub tanh_c: Array2<f64>,
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn row(v: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("row vector shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Scalar transcription of the recurrence for `hidden_size = 1`.
    fn scalar_lstm(wx: [f64; 4], wh: [f64; 4], b: [f64; 4], x: f64, h: f64, c: f64) -> (f64, f64) {
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let pre = |k: usize| wx[k] * x + wh[k] * h + b[k];
        let i = sig(pre(0));
        let f = sig(pre(1));
        let g = pre(2).tanh();
        let o = sig(pre(3));
        let c_new = f * c + i * g;
        (o * c_new.tanh(), c_new)
    }

    #[test]
    fn zero_params_zero_state() {
        let p = LstmParams::zeros(3, 5);
        let (h, c) = p.step(&[1.0, -2.0, 0.5], &[0.0; 5], &[0.0; 5]).unwrap();
        assert!(h.iter().chain(c.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_case_matches_transcription() {
        let wx = [0.3, -0.7, 1.1, 0.4];
        let wh = [-0.2, 0.5, 0.9, -1.3];
        let b = [0.1, 0.6, -0.4, 0.05];
        let mut p = LstmParams::zeros(1, 1);
        for k in 0..4 {
            p.w_x[[0, k]] = wx[k];
            p.w_h[[0, k]] = wh[k];
            p.bias[k] = b[k];
        }
        let (x, h0, c0) = (0.8, -0.35, 0.6);
        let (h, c) = p.step(&[x], &[h0], &[c0]).unwrap();
        let (eh, ec) = scalar_lstm(wx, wh, b, x, h0, c0);
        assert!((h[0] - eh).abs() < 1e-14);
        assert!((c[0] - ec).abs() < 1e-14);
    }

    #[test]
    fn output_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = LstmParams::new(4, 8, &mut rng);
        let (h, c) = p.step(&[0.1; 4], &[0.0; 8], &[0.0; 8]).unwrap();
        assert_eq!((h.len(), c.len()), (8, 8));
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let p = LstmParams::zeros(4, 8);
        let err = p.step(&[0.1; 3], &[0.0; 8], &[0.0; 8]).unwrap_err();
        assert!(matches!(err, crate::Error::Config(_)));
        assert!(p.step(&[0.1; 4], &[0.0; 7], &[0.0; 8]).is_err());
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let a = LstmParams::new(6, 10, &mut ChaCha8Rng::seed_from_u64(3));
        let b = LstmParams::new(6, 10, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        let s = 1.0 / 16f64.sqrt();
        assert!(a.flatten().iter().all(|v| v.abs() <= s));
    }
}
