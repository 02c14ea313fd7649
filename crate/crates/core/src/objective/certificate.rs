use std::fmt;

use nalgebra::DMatrix;

use crate::blockmat::{eigen_sym, psd_from_spectrum, BlockSymMatrix, SpectralSummary};
use crate::error::Result;
use crate::manifold::ProductStiefelPoint;

use super::{check_dims, multipliers_from_product, thresholds::benign_threshold_p};

pub const DEFAULT_TOL_GRAD: f64 = 1e-8;
pub const DEFAULT_TOL_PSD: f64 = 1e-8;

/// `L = bdg(A S Sᵀ) − A` together with the quantities the optimality test
/// and the benign-landscape bound read off it.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub l: BlockSymMatrix,
    pub lambda_block: Vec<DMatrix<f64>>,
    pub spectrum: SpectralSummary,
    /// `‖L S‖_F`, which equals the Riemannian gradient norm.
    pub grad_residual: f64,
    /// PSD at [`DEFAULT_TOL_PSD`].
    pub is_psd: bool,
    /// `λ_{d+1}(L)`.
    pub kth_gap: f64,
    pub p_min_benign: Option<usize>,
    /// `‖A‖_op`, the scale for the gradient test.
    pub a_op_norm: f64,
}

impl Certificate {
    pub fn lambda_max(&self) -> f64 {
        self.spectrum.max_eig()
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectrum.min_eig()
    }
}

pub fn build_certificate(a: &BlockSymMatrix, s: &ProductStiefelPoint) -> Result<Certificate> {
    check_dims(a, s)?;
    let (n, d) = (a.n(), a.d());
    let as_ = a.entries() * s.stack();
    let lambda_block = multipliers_from_product(s, &as_);
    let mut l = -a.entries().clone();
    for (i, lb) in lambda_block.iter().enumerate() {
        let mut view = l.view_mut((i * d, i * d), (d, d));
        view += lb;
    }
    let l = BlockSymMatrix::new(n, d, l)?;
    let grad_residual = (l.entries() * s.stack()).norm();
    let spectrum = eigen_sym(&l)?;
    let is_psd = psd_from_spectrum(&spectrum, DEFAULT_TOL_PSD).is_psd;
    let kth_gap = spectrum.kth_smallest(d + 1).unwrap_or(0.0);
    let p_min_benign = if is_psd {
        benign_threshold_p(spectrum.max_eig(), kth_gap, d).ok()
    } else {
        None
    };
    Ok(Certificate {
        l,
        lambda_block,
        spectrum,
        grad_residual,
        is_psd,
        kth_gap,
        p_min_benign,
        a_op_norm: a.op_norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerdictReason {
    Certified,
    /// `L S ≠ 0`: the point is not stationary.
    Residual {
        residual: f64,
        bound: f64,
    },
    NotPsd {
        min_eig: f64,
    },
    /// `λ_{d+1}(L)` is not separated from zero.
    NoGap {
        kth_gap: f64,
    },
}

impl fmt::Display for VerdictReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictReason::Certified => write!(f, "certified"),
            VerdictReason::Residual { residual, bound } => {
                write!(f, "LS = 0 fails: residual {residual:.3e} > {bound:.3e}")
            }
            VerdictReason::NotPsd { min_eig } => {
                write!(f, "L not PSD: min eigenvalue {min_eig:.3e}")
            }
            VerdictReason::NoGap { kth_gap } => {
                write!(f, "no spectral gap: lambda_(d+1) = {kth_gap:.3e}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub certified: bool,
    pub reason: VerdictReason,
}

/// Lemma-style test: stationarity, then `L ⪰ 0`, then a gap at index
/// `d + 1`. The first failing condition is reported.
pub fn certify_global(cert: &Certificate, tol_grad: f64, tol_psd: f64) -> Verdict {
    let bound = tol_grad * cert.a_op_norm;
    let psd = psd_from_spectrum(&cert.spectrum, tol_psd);
    let lambda_max = cert.spectrum.max_eig();
    let reason = if !(cert.grad_residual <= bound) {
        VerdictReason::Residual {
            residual: cert.grad_residual,
            bound,
        }
    } else if !psd.is_psd {
        VerdictReason::NotPsd {
            min_eig: psd.min_eig,
        }
    } else if !(cert.kth_gap > tol_psd * lambda_max) {
        VerdictReason::NoGap {
            kth_gap: cert.kth_gap,
        }
    } else {
        VerdictReason::Certified
    };
    Verdict {
        certified: reason == VerdictReason::Certified,
        reason,
    }
}

/// `⟨L − bdg(L S Sᵀ), ṠṠᵀ⟩`, the second route to the Hessian form.
#[cfg(test)]
pub(crate) fn hessian_via_certificate(
    l: &BlockSymMatrix,
    dir: &crate::manifold::TangentDirection<'_>,
) -> f64 {
    let s = dir.base();
    let lss = l.entries() * s.gram();
    let b = crate::blockmat::bdg(&lss, s.n(), s.d()).unwrap();
    let m = l.entries() - b.entries();
    let v = dir.stack();
    crate::linalg::frob_inner(&(m * v), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{random_point, random_tangent};
    use crate::objective::{energy, hessian_quadratic_form, riemannian_gradient};
    use crate::rng::{gaussian_matrix, rng_from_seed};
    use proptest::prelude::*;

    fn planted_z2(x: &[f64]) -> BlockSymMatrix {
        let v = DMatrix::from_column_slice(x.len(), 1, x);
        BlockSymMatrix::new(x.len(), 1, &v * v.transpose()).unwrap()
    }

    fn default_verdict(c: &Certificate) -> Verdict {
        certify_global(c, DEFAULT_TOL_GRAD, DEFAULT_TOL_PSD)
    }

    #[test]
    fn planted_sign_vector_certifies() {
        let x = [1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0];
        let a = planted_z2(&x);
        let s = ProductStiefelPoint::from_signs(&x, 3).unwrap();
        let c = build_certificate(&a, &s).unwrap();
        let n = x.len() as f64;
        let v = DMatrix::from_column_slice(7, 1, &x);
        let expect = DMatrix::<f64>::identity(7, 7) * n - &v * v.transpose();
        assert!((c.l.entries() - expect).norm() < 1e-12);
        assert!((c.kth_gap - n).abs() < 1e-9 * n);
        assert!((c.lambda_max() - n).abs() < 1e-9 * n);
        assert_eq!(c.grad_residual, 0.0);
        assert!(c.is_psd);
        assert_eq!(c.p_min_benign, Some(3));
        assert!(default_verdict(&c).certified);

        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let s = ProductStiefelPoint::from_signs(&neg, 3).unwrap();
        assert!(default_verdict(&build_certificate(&a, &s).unwrap()).certified);
    }

    #[test]
    fn synchronized_state_of_complete_graph() {
        let n = 6;
        let j = DMatrix::from_element(n, n, 1.0);
        let eye = DMatrix::<f64>::identity(n, n);
        let a = BlockSymMatrix::new(n, 1, &j - &eye).unwrap();
        let s = ProductStiefelPoint::from_signs(&[1.0; 6], 2).unwrap();
        let c = build_certificate(&a, &s).unwrap();
        assert!((c.l.entries() - (eye * n as f64 - j)).norm() < 1e-12);
        assert!((c.kth_gap - n as f64).abs() < 1e-9);
        assert!(default_verdict(&c).certified);
    }

    #[test]
    fn random_point_is_not_certified() {
        let x: Vec<f64> = (0..20)
            .map(|i| if i % 3 == 0 { -1.0 } else { 1.0 })
            .collect();
        let a = planted_z2(&x);
        for seed in 0..10 {
            let s = random_point(20, 1, 3, seed).unwrap();
            let c = build_certificate(&a, &s).unwrap();
            assert!(c.grad_residual > 1e-3 || !c.is_psd);
            assert!(!default_verdict(&c).certified);
        }
    }

    #[test]
    fn flipped_sign_is_critical_but_not_psd() {
        let x = [1.0, 1.0, -1.0, 1.0, -1.0];
        let a = planted_z2(&x);
        let mut y = x;
        y[0] = -1.0;
        let s = ProductStiefelPoint::from_signs(&y, 2).unwrap();
        let c = build_certificate(&a, &s).unwrap();
        assert!(c.grad_residual < 1e-12);
        assert!(matches!(
            default_verdict(&c).reason,
            VerdictReason::NotPsd { .. }
        ));
    }

    #[test]
    fn certificate_entries_match_definition() {
        let (n, d, p) = (5, 2, 3);
        let g = gaussian_matrix(&mut rng_from_seed(3), n * d, n * d);
        let a = BlockSymMatrix::new(n, d, (&g + g.transpose()) * 0.5).unwrap();
        let s = random_point(n, d, p, 4).unwrap();
        let c = build_certificate(&a, &s).unwrap();
        let direct = crate::blockmat::bdg(&(a.entries() * s.gram()), n, d).unwrap();
        assert!((c.l.entries() - (direct.entries() - a.entries())).amax() < 1e-10);
        let g = riemannian_gradient(&a, &s).unwrap();
        assert!((c.grad_residual - g.norm()).abs() < 1e-10);
    }

    #[test]
    fn two_hessian_routes_agree_at_any_point() {
        for seed in 0..20 {
            let (n, d, p) = (4 + seed as usize % 3, 1 + seed as usize % 3, 4);
            let g = gaussian_matrix(&mut rng_from_seed(seed), n * d, n * d);
            let a = BlockSymMatrix::new(n, d, (&g + g.transpose()) * 0.5).unwrap();
            let s = random_point(n, d, p, seed + 50).unwrap();
            let c = build_certificate(&a, &s).unwrap();
            let v = random_tangent(&s, seed + 99);
            let direct = hessian_quadratic_form(&a, &v).unwrap();
            let via = hessian_via_certificate(&c.l, &v);
            assert!(
                (direct - via).abs() < 1e-9 * direct.abs().max(1.0),
                "{direct} {via}"
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn certificate_is_gauge_invariant(seed in 0u64..10_000, d in 1usize..4) {
            let (n, p) = (5, d + 2);
            let mut rng = rng_from_seed(seed);
            let g = gaussian_matrix(&mut rng, n * d, n * d);
            let a = BlockSymMatrix::new(n, d, (&g + g.transpose()) * 0.5).unwrap();
            let s = random_point(n, d, p, seed ^ 0xabc).unwrap();
            let q = crate::linalg::polar_rows(gaussian_matrix(&mut rng, p, p).as_view()).unwrap();
            let sq = s.right_multiply(&q).unwrap();
            prop_assert!((energy(&a, &s).unwrap() - energy(&a, &sq).unwrap()).abs() < 1e-9);
            let g1 = riemannian_gradient(&a, &s).unwrap().norm();
            let g2 = riemannian_gradient(&a, &sq).unwrap().norm();
            prop_assert!((g1 - g2).abs() < 1e-9);
            let c1 = build_certificate(&a, &s).unwrap();
            let c2 = build_certificate(&a, &sq).unwrap();
            prop_assert!((c1.l.entries() - c2.l.entries()).amax() < 1e-9);
            prop_assert!((c1.kth_gap - c2.kth_gap).abs() < 1e-9);
            prop_assert!((c1.grad_residual - c2.grad_residual).abs() < 1e-9);
            prop_assert_eq!(c1.is_psd, c2.is_psd);
        }

        #[test]
        fn defined_benign_bound_when_certified(seed in 0u64..10_000, n in 3usize..10) {
            let mut rng = rng_from_seed(seed);
            let x: Vec<f64> = gaussian_matrix(&mut rng, n, 1).iter().map(|v| v.signum()).collect();
            let a = planted_z2(&x);
            let s = ProductStiefelPoint::from_signs(&x, 3).unwrap();
            let c = build_certificate(&a, &s).unwrap();
            if c.is_psd && c.grad_residual <= 1e-8 * n as f64 && c.kth_gap > 0.0 {
                prop_assert!(c.p_min_benign.is_some());
            }
        }
    }
}
