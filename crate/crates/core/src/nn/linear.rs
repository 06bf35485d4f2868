use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::params::{
    slice1, slice1_mut, slice2, slice2_mut, uniform_init, uniform_init_vec, ParamSet,
};

/// Dense affine map `y = x·W + b` over a batch of row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `in × out`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        Self {
            w: uniform_init(rng, input, output, input),
            b: uniform_init_vec(rng, output, input),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Array2::zeros((input, output)),
            b: Array1::zeros(output),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_size(), self.output_size())
    }

    pub fn input_size(&self) -> usize {
        self.w.nrows()
    }

    pub fn output_size(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    /// Accumulates parameter gradients and returns the gradient on `x`.
    pub fn backward(
        &self,
        x: &Array2<f64>,
        dy: ArrayView2<f64>,
        grads: &mut Linear,
    ) -> Array2<f64> {
        grads.w += &x.t().dot(&dy);
        grads.b += &dy.sum_axis(Axis(0));
        dy.dot(&self.w.t())
    }
}

impl ParamSet for Linear {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![slice2(&self.w), slice1(&self.b)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![slice2_mut(&mut self.w), slice1_mut(&mut self.b)]
    }
}
