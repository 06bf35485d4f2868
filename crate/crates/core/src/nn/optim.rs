use super::params::ParamSet;

/// `params ← params − lr·grads`.
pub fn sgd_step<P: ParamSet>(params: &mut P, grads: &P, lr: f64) {
    for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
        debug_assert_eq!(p.len(), g.len());
        for (pv, gv) in p.iter_mut().zip(g) {
            *pv -= lr * gv;
        }
    }
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<P: ParamSet>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = grads.sq_norm().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= scale);
        }
    }
    norm
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        let mut k = 0;
        for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
            for (pv, gv) in p.iter_mut().zip(g) {
                let m = &mut self.m[k];
                let v = &mut self.v[k];
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * gv;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * gv * gv;
                *pv -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPSILON);
                k += 1;
            }
        }
        assert_eq!(
            k,
            self.m.len(),
            "optimizer state sized for a different model"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Linear;

    fn scalar(v: f64) -> Linear {
        let mut l = Linear::zeros(1, 1);
        l.w[[0, 0]] = v;
        l
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut p = scalar(1.5);
        sgd_step(&mut p, &scalar(3.0), 0.0);
        assert_eq!(p, scalar(1.5));
    }

    #[test]
    fn scalar_arithmetic() {
        let mut p = scalar(1.0);
        sgd_step(&mut p, &scalar(2.0), 0.1);
        assert!((p.w[[0, 0]] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn quadratic_descends_monotonically() {
        // loss(w) = (w - 3)^2, gradient 2(w - 3); for lr < 1 each step
        // contracts the error by |1 - 2 lr|.
        let mut p = scalar(-4.0);
        let loss = |p: &Linear| (p.w[[0, 0]] - 3.0).powi(2);
        let mut prev = loss(&p);
        for _ in 0..100 {
            let g = scalar(2.0 * (p.w[[0, 0]] - 3.0));
            sgd_step(&mut p, &g, 0.05);
            let l = loss(&p);
            assert!(l < prev);
            prev = l;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn clipping_caps_norm() {
        let mut g = Linear::zeros(2, 1);
        g.w[[0, 0]] = 30.0;
        g.w[[1, 0]] = 40.0;
        assert_eq!(clip_grad_norm(&mut g, 5.0), 50.0);
        assert!((g.sq_norm().sqrt() - 5.0).abs() < 1e-12);
        let mut small = scalar(0.1);
        clip_grad_norm(&mut small, 5.0);
        assert_eq!(small, scalar(0.1));
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // bias correction makes the first update exactly lr·sign(g)
        let mut p = scalar(1.0);
        let mut opt = Adam::new(2);
        let mut g = scalar(0.3);
        g.b[0] = -2.0;
        opt.step(&mut p, &g, 0.01);
        assert!((p.w[[0, 0]] - 0.99).abs() < 1e-9);
        assert!((p.b[0] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn adam_descends_quadratic() {
        let mut p = scalar(3.0);
        let mut opt = Adam::new(2);
        for _ in 0..2000 {
            let g = scalar(2.0 * p.w[[0, 0]]);
            opt.step(&mut p, &g, 0.01);
        }
        assert!(p.w[[0, 0]].abs() < 1e-2);
    }
}
