//! Central finite-difference gradient checking.

use super::params::ParamSet;

pub const DEFAULT_STEP: f64 = 1e-4;
pub const DEFAULT_REL_TOL: f64 = 1e-3;
pub const DEFAULT_ABS_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub failures: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Numerical gradient of `loss` w.r.t. every parameter of `params`.
pub fn numerical_gradient<P, F>(params: &P, step: f64, mut loss: F) -> Vec<f64>
where
    P: ParamSet + Clone,
    F: FnMut(&P) -> f64,
{
    let base = params.flatten();
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(base.len());
    let mut values = base.clone();
    for k in 0..base.len() {
        values[k] = base[k] + step;
        probe.assign_flat(&values);
        let plus = loss(&probe);
        values[k] = base[k] - step;
        probe.assign_flat(&values);
        let minus = loss(&probe);
        values[k] = base[k];
        out.push((plus - minus) / (2.0 * step));
    }
    out
}

/// Compares analytic and numerical gradients. An entry passes when its
/// absolute error is below `abs_floor` or its relative error is below `rel_tol`.
pub fn compare(analytic: &[f64], numeric: &[f64], rel_tol: f64, abs_floor: f64) -> GradCheckReport {
    assert_eq!(analytic.len(), numeric.len());
    let mut report = GradCheckReport {
        checked: analytic.len(),
        failures: 0,
        max_rel_error: 0.0,
        max_abs_error: 0.0,
    };
    for (&a, &n) in analytic.iter().zip(numeric) {
        let abs = (a - n).abs();
        let scale = a.abs().max(n.abs());
        let rel = if scale > 0.0 { abs / scale } else { 0.0 };
        report.max_abs_error = report.max_abs_error.max(abs);
        if abs > abs_floor {
            report.max_rel_error = report.max_rel_error.max(rel);
            if rel >= rel_tol {
                report.failures += 1;
            }
        }
    }
    report
}

/// Finite-difference check with the default step and tolerances.
pub fn check<P, F>(params: &P, analytic: &P, loss: F) -> GradCheckReport
where
    P: ParamSet + Clone,
    F: FnMut(&P) -> f64,
{
    let numeric = numerical_gradient(params, DEFAULT_STEP, loss);
    compare(
        &analytic.flatten(),
        &numeric,
        DEFAULT_REL_TOL,
        DEFAULT_ABS_FLOOR,
    )
}
