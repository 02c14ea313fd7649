use nalgebra::DMatrix;

use crate::blockmat::BlockSymMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Smallest integer `p ≥ (2 λ_max / λ_{d+1} − 1) d + 2`.
pub fn benign_threshold_p(lambda_max: f64, lambda_kth: f64, d: usize) -> Result<usize> {
    if !(lambda_kth > 0.0) || !lambda_max.is_finite() {
        return Err(Error::ThresholdUndefined(format!(
            "lambda_(d+1) = {lambda_kth:e} must be positive"
        )));
    }
    let bound = (2.0 * lambda_max / lambda_kth - 1.0) * d as f64 + 2.0;
    // Round a hair below the bound so an exact integer is not pushed up by
    // the last ulp of the division.
    let p = (bound - 1e-12 * bound.abs().max(1.0)).ceil();
    Ok(p.max(1.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCondition {
    pub alpha: f64,
    pub p_min: Option<usize>,
}

/// Smallest integer `p` with `α ≤ (p − 3)/(p + 1)`; `None` when `α ≥ 1`.
pub fn alpha_p_min(alpha: f64) -> Option<usize> {
    if !(alpha < 1.0) {
        return None;
    }
    let alpha = alpha.max(0.0);
    let start = ((3.0 + alpha) / (1.0 - alpha)).floor().max(3.0) as usize;
    let mut p = start.saturating_sub(1).max(3);
    while alpha > (p as f64 - 3.0) / (p as f64 + 1.0) {
        p += 1;
    }
    Some(p)
}

/// `α = ‖L − r(I − xxᵀ/n)‖_op / r` for a scalar (`d = 1`) certificate.
pub fn alpha_condition(l: &BlockSymMatrix, x: &[f64], r: f64) -> Result<AlphaCondition> {
    if l.d() != 1 {
        return Err(Error::Parameter(
            "the alpha condition is defined for d = 1".into(),
        ));
    }
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("r must be positive, got {r}")));
    }
    let n = l.n();
    if x.len() != n {
        return Err(Error::Shape(format!(
            "x has length {}, expected {n}",
            x.len()
        )));
    }
    let xv = DMatrix::from_column_slice(n, 1, x);
    let target = (DMatrix::<f64>::identity(n, n) - &xv * xv.transpose() / n as f64) * r;
    let diff = l.entries() - target;
    let (eig, _) = linalg::sorted_sym_eigen(linalg::sym(&diff));
    let norm = eig[0].abs().max(eig[n - 1].abs());
    let alpha = norm / r;
    Ok(AlphaCondition {
        alpha,
        p_min: alpha_p_min(alpha),
    })
}
