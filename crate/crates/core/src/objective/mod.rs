//! The Burer-Monteiro energy `f(S) = −½⟨A, SSᵀ⟩`, its Riemannian
//! derivatives, the certificate matrix and the landscape thresholds.
//!
//! The matrix form includes the diagonal blocks of `A`, so it differs from
//! the pairwise sum `−Σ_{i<j}⟨Aᵢⱼ, SᵢSⱼᵀ⟩` by the constant `−½ Σᵢ Tr(Aᵢᵢ)`.
//! Derivatives are unaffected.

mod certificate;
pub mod lemmas;
mod thresholds;

use nalgebra::DMatrix;

use crate::blockmat::BlockSymMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::{self, ProductStiefelPoint, TangentDirection, TANGENT_TOL};

pub use certificate::{
    build_certificate, certify_global, Certificate, Verdict, VerdictReason, DEFAULT_TOL_GRAD,
    DEFAULT_TOL_PSD,
};
pub use thresholds::{alpha_condition, alpha_p_min, benign_threshold_p, AlphaCondition};

pub(crate) fn check_dims(a: &BlockSymMatrix, s: &ProductStiefelPoint) -> Result<()> {
    if a.n() != s.n() || a.d() != s.d() {
        return Err(Error::Shape(format!(
            "data matrix has (n, d) = ({}, {}), point has ({}, {})",
            a.n(),
            a.d(),
            s.n(),
            s.d()
        )));
    }
    Ok(())
}

pub fn energy(a: &BlockSymMatrix, s: &ProductStiefelPoint) -> Result<f64> {
    check_dims(a, s)?;
    let as_ = a.entries() * s.stack();
    Ok(-0.5 * linalg::frob_inner(&as_, s.stack()))
}

/// `f(S + D) − f(S) = −½⟨D, A(2S + D)⟩`, accurate when `D` is small
/// relative to `S`.
pub(crate) fn energy_change(a: &BlockSymMatrix, base: &DMatrix<f64>, disp: &DMatrix<f64>) -> f64 {
    let w = base * 2.0 + disp;
    -0.5 * linalg::frob_inner(disp, &(a.entries() * w))
}

/// Blockwise `−P_{Sᵢ}(Σⱼ AᵢⱼSⱼ)`.
pub fn riemannian_gradient<'a>(
    a: &BlockSymMatrix,
    s: &'a ProductStiefelPoint,
) -> Result<TangentDirection<'a>> {
    check_dims(a, s)?;
    let as_ = a.entries() * s.stack();
    let g = -manifold::project_stack(s, &as_);
    Ok(TangentDirection::from_stack_unchecked(s, g))
}

/// Diagonal blocks `Λᵢᵢ = ½((AS)ᵢSᵢᵀ + Sᵢ(AS)ᵢᵀ)` of `bdg(A S Sᵀ)`.
pub fn multiplier_blocks(a: &BlockSymMatrix, s: &ProductStiefelPoint) -> Result<Vec<DMatrix<f64>>> {
    check_dims(a, s)?;
    let as_ = a.entries() * s.stack();
    Ok(multipliers_from_product(s, &as_))
}

fn multipliers_from_product(s: &ProductStiefelPoint, as_: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let (d, p) = (s.d(), s.p());
    (0..s.n())
        .map(|i| {
            let m = as_.view((i * d, 0), (d, p)) * s.block(i).transpose();
            linalg::sym(&m)
        })
        .collect()
}

/// `⟨bdg(A S Sᵀ) − A, ṠṠᵀ⟩`: the Riemannian Hessian quadratic form at the
/// base point of `dir`.
pub fn hessian_quadratic_form(a: &BlockSymMatrix, dir: &TangentDirection<'_>) -> Result<f64> {
    let s = dir.base();
    check_dims(a, s)?;
    let res = dir.tangency_residual();
    if !(res <= TANGENT_TOL * dir.norm().max(1.0)) {
        return Err(Error::Validation(format!(
            "direction is not tangent: residual {res:e}"
        )));
    }
    let lambda = multiplier_blocks(a, s)?;
    Ok(quadform_with_multipliers(a, &lambda, dir))
}

pub(crate) fn quadform_with_multipliers(
    a: &BlockSymMatrix,
    lambda: &[DMatrix<f64>],
    dir: &TangentDirection<'_>,
) -> f64 {
    let v = dir.stack();
    let diag: f64 = lambda
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let vi = dir.block(i);
            linalg::frob_inner(l, &(&vi * vi.transpose()))
        })
        .sum();
    diag - linalg::frob_inner(&(a.entries() * v), v)
}

/// `Xᵢⱼ = ⟨ÔᵢᵀSᵢ, ÔⱼᵀSⱼ⟩`, an `n×n` PSD matrix with diagonal `d`.
pub fn x_matrix(s: &ProductStiefelPoint, o_hat: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let (n, d, p) = (s.n(), s.d(), s.p());
    if o_hat.len() != n || o_hat.iter().any(|o| o.shape() != (d, d)) {
        return Err(Error::Shape(format!(
            "expected {n} reference blocks of size {d}x{d}"
        )));
    }
    let mut t = DMatrix::zeros(n, d * p);
    for (i, o) in o_hat.iter().enumerate() {
        let ti = o.transpose() * s.block(i);
        for (k, v) in ti.iter().enumerate() {
            t[(i, k)] = *v;
        }
    }
    Ok(&t * t.transpose())
}
