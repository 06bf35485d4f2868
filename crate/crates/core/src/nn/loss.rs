//! Unsquared L2 losses and their gradients.

use ndarray::{Array2, ArrayView2, Axis};

/// Euclidean distance `‖a - b‖₂`.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sum over rows of `‖pred_r - target_r‖₂`, with the gradient on `pred`.
///
/// The norm is not differentiable at zero; rows with an exact match get a
/// zero gradient.
pub fn l2_rows(pred: ArrayView2<f64>, target: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let diff = &pred - &target;
    let norms = diff.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    let mut grad = diff;
    for (mut r, &n) in grad.axis_iter_mut(Axis(0)).zip(norms.iter()) {
        if n > 0.0 {
            r /= n;
        } else {
            r.fill(0.0);
        }
    }
    (norms.sum(), grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn three_four_five() {
        assert_eq!(l2_distance(&[3.0, 4.0], &[0.0, 0.0]), 5.0);
        let (l, g) = l2_rows(
            array![[3.0, 4.0], [1.0, 1.0]].view(),
            array![[0.0, 0.0], [1.0, 1.0]].view(),
        );
        assert_eq!(l, 5.0);
        assert_eq!(g, array![[0.6, 0.8], [0.0, 0.0]]);
    }
}
