//! Batched forward and backward passes used for training.
//!
//! A batch is a list of `T` matrices of shape `B × N_f`, one per timestep.

use ndarray::{Array2, ArrayView2};

use super::{DecoderBranch, DecoderModel, EncoderModel};
use crate::data::FeatureSequence;
use crate::nn::{
    binary_backward, binary_forward, l2_rows, BatchStats, BinaryCache, CellMode, LstmCache,
};

/// Stacks the first `len` clips of each sequence into per-timestep matrices.
pub fn batch_tensor(seqs: &[&FeatureSequence], len: usize) -> Vec<Array2<f64>> {
    let n_f = seqs[0].n_f();
    (0..len)
        .map(|t| Array2::from_shape_fn((seqs.len(), n_f), |(b, j)| seqs[b].clip(t)[j] as f64))
        .collect()
}

/// Everything the encoder backward pass needs from a forward pass.
pub struct EncoderTrace {
    l1: Vec<LstmCache>,
    l2: Vec<BinaryCache>,
    /// Batch statistics of the binary layer, one per timestep that used them.
    pub stats: Vec<BatchStats>,
    /// Final bitcodes as `±1` rows (relaxed mode: the pre-activations).
    pub code: Array2<f64>,
    /// Final pre-activations.
    pub beta: Array2<f64>,
}

impl EncoderModel {
    pub fn forward_batch(&self, xs: &[Array2<f64>], mode: CellMode) -> EncoderTrace {
        assert!(!xs.is_empty(), "empty batch sequence");
        let b = xs[0].nrows();
        let mut h1 = Array2::zeros((b, 2 * self.n_bits));
        let mut c1 = Array2::zeros((b, 2 * self.n_bits));
        let mut h2 = Array2::from_elem((b, self.n_bits), 1.0);
        let mut c2 = Array2::zeros((b, self.n_bits));
        let mut l1 = Vec::with_capacity(xs.len());
        let mut l2 = Vec::with_capacity(xs.len());
        let mut stats = Vec::new();
        let mut beta = Array2::zeros((b, self.n_bits));
        for x in xs {
            let (nh1, nc1, cache1) = self.layer1.forward(x, &h1, &c1);
            let step = binary_forward(&self.layer2, &self.bn, &nh1, &h2, &c2, mode);
            h1 = nh1;
            c1 = nc1;
            h2 = step.h;
            c2 = step.c;
            beta = step.beta;
            stats.extend(step.stats);
            l1.push(cache1);
            l2.push(step.cache);
        }
        EncoderTrace {
            l1,
            l2,
            stats,
            code: h2,
            beta,
        }
    }

    /// Backpropagates gradients on the final bitcode and/or the final
    /// pre-activation through time, accumulating into `grads`.
    pub fn backward_batch(
        &self,
        trace: &EncoderTrace,
        d_code: Option<ArrayView2<f64>>,
        d_beta: Option<ArrayView2<f64>>,
        grads: &mut EncoderModel,
    ) {
        let b = trace.code.nrows();
        let n = self.n_bits;
        let mut dh2 = match d_code {
            Some(d) => d.to_owned(),
            None => Array2::zeros((b, n)),
        };
        let mut dc2 = Array2::zeros((b, n));
        let mut dh1 = Array2::zeros((b, 2 * n));
        let mut dc1 = Array2::zeros((b, 2 * n));
        let last = trace.l2.len() - 1;
        for t in (0..=last).rev() {
            let db = if t == last { d_beta } else { None };
            let (dx2, dh2_prev, dc2_prev) = binary_backward(
                &self.layer2,
                &trace.l2[t],
                Some(dh2.view()),
                db,
                dc2.view(),
                &mut grads.layer2,
            );
            let dh1_total = &dh1 + &dx2;
            let (_, dh1_prev, dc1_prev) = self.layer1.backward(
                &trace.l1[t],
                dh1_total.view(),
                dc1.view(),
                &mut grads.layer1,
            );
            dh2 = dh2_prev;
            dc2 = dc2_prev;
            dh1 = dh1_prev;
            dc1 = dc1_prev;
        }
    }
}

pub struct DecoderTrace {
    l1: Vec<LstmCache>,
    l2: Vec<LstmCache>,
    h2: Vec<Array2<f64>>,
}

impl DecoderBranch {
    /// Returns the `len` reconstructed rows-per-step and the trace.
    pub fn forward_batch(
        &self,
        code: &Array2<f64>,
        len: usize,
    ) -> (Vec<Array2<f64>>, DecoderTrace) {
        let b = code.nrows();
        let wide = self.layer2.hidden_size;
        let mut h1 = code.clone();
        let mut c1 = Array2::zeros(code.raw_dim());
        let mut h2 = Array2::zeros((b, wide));
        let mut c2 = Array2::zeros((b, wide));
        let mut trace = DecoderTrace {
            l1: Vec::with_capacity(len),
            l2: Vec::with_capacity(len),
            h2: Vec::with_capacity(len),
        };
        let mut outs = Vec::with_capacity(len);
        for _ in 0..len {
            let (nh1, nc1, cache1) = self.layer1.forward(code, &h1, &c1);
            let (nh2, nc2, cache2) = self.layer2.forward(&nh1, &h2, &c2);
            outs.push(self.proj.forward(&nh2));
            h1 = nh1;
            c1 = nc1;
            h2 = nh2.clone();
            c2 = nc2;
            trace.l1.push(cache1);
            trace.l2.push(cache2);
            trace.h2.push(nh2);
        }
        (outs, trace)
    }

    /// Returns the gradient on `code` given gradients on every output.
    pub fn backward_batch(
        &self,
        trace: &DecoderTrace,
        d_out: &[Array2<f64>],
        grads: &mut DecoderBranch,
    ) -> Array2<f64> {
        let b = d_out[0].nrows();
        let n = self.layer1.hidden_size;
        let wide = self.layer2.hidden_size;
        let mut d_code = Array2::zeros((b, n));
        let mut dh1 = Array2::zeros((b, n));
        let mut dc1 = Array2::zeros((b, n));
        let mut dh2 = Array2::zeros((b, wide));
        let mut dc2 = Array2::zeros((b, wide));
        for t in (0..d_out.len()).rev() {
            let dproj = self
                .proj
                .backward(&trace.h2[t], d_out[t].view(), &mut grads.proj);
            let dh2_total = &dh2 + &dproj;
            let (dx2, dh2_prev, dc2_prev) = self.layer2.backward(
                &trace.l2[t],
                dh2_total.view(),
                dc2.view(),
                &mut grads.layer2,
            );
            let dh1_total = &dh1 + &dx2;
            let (dx1, dh1_prev, dc1_prev) = self.layer1.backward(
                &trace.l1[t],
                dh1_total.view(),
                dc1.view(),
                &mut grads.layer1,
            );
            d_code += &dx1;
            dh2 = dh2_prev;
            dc2 = dc2_prev;
            dh1 = dh1_prev;
            dc1 = dc1_prev;
        }
        // the code also seeded the first hidden state
        d_code + dh1
    }
}

impl DecoderModel {
    /// Bidirectional reconstruction loss of `xs` from `code`, summed over the
    /// batch. Returns the loss and its gradient on `code`; decoder parameter
    /// gradients are accumulated into `grads` when given.
    pub fn reconstruction_batch(
        &self,
        code: &Array2<f64>,
        xs: &[Array2<f64>],
        grads: Option<&mut DecoderModel>,
    ) -> (f64, Array2<f64>) {
        let len = xs.len();
        let (fwd, fwd_trace) = self.forward.forward_batch(code, len);
        let (rev, rev_trace) = self.reverse.forward_batch(code, len);
        let mut loss = 0.0;
        let mut d_fwd = Vec::with_capacity(len);
        let mut d_rev = Vec::with_capacity(len);
        for j in 0..len {
            let (lf, gf) = l2_rows(fwd[j].view(), xs[j].view());
            let (lr, gr) = l2_rows(rev[j].view(), xs[len - 1 - j].view());
            loss += lf + lr;
            d_fwd.push(gf);
            d_rev.push(gr);
        }
        let mut scratch;
        let grads = match grads {
            Some(g) => g,
            None => {
                scratch = self.zeros_like();
                &mut scratch
            }
        };
        let d_code = self
            .forward
            .backward_batch(&fwd_trace, &d_fwd, &mut grads.forward)
            + self
                .reverse
                .backward_batch(&rev_trace, &d_rev, &mut grads.reverse);
        (loss, d_code)
    }

    /// Loss only; no backward pass.
    pub fn reconstruction_loss_batch(&self, code: &Array2<f64>, xs: &[Array2<f64>]) -> f64 {
        let len = xs.len();
        let (fwd, _) = self.forward.forward_batch(code, len);
        let (rev, _) = self.reverse.forward_batch(code, len);
        (0..len)
            .map(|j| {
                l2_rows(fwd[j].view(), xs[j].view()).0
                    + l2_rows(rev[j].view(), xs[len - 1 - j].view()).0
            })
            .sum()
    }
}
