//! Block-structured symmetric matrices.
//!
//! A [`BlockSymMatrix`] is a dense symmetric `(n·d)×(n·d)` matrix viewed as an
//! `n×n` grid of `d×d` blocks. Measurement matrices and certificate
//! matrices both live here, together with the block-diagonal symmetrizer
//! [`bdg`] and the dense spectral routines the certificate relies on.

mod io;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::linalg;

pub use io::{matrix_from_str, matrix_to_string, read_matrix, write_matrix};

/// Entrywise asymmetry allowed on construction, relative to `max|M|`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Bound on the eigenpair residual every [`SpectralSummary`] must meet.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BlockSymMatrix {
    n: usize,
    d: usize,
    entries: DMatrix<f64>,
    op_norm: OnceLock<f64>,
}

impl BlockSymMatrix {
    /// Validates shape and symmetry (to [`SYMMETRY_TOL`]), then stores the
    /// exactly symmetrized matrix.
    pub fn new(n: usize, d: usize, entries: DMatrix<f64>) -> Result<Self> {
        Self::with_symmetry_tol(n, d, entries, SYMMETRY_TOL)
    }

    pub(crate) fn with_symmetry_tol(
        n: usize,
        d: usize,
        entries: DMatrix<f64>,
        rel_tol: f64,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Shape(format!(
                "n and d must be positive, got n={n}, d={d}"
            )));
        }
        let dim = n * d;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::Shape(format!(
                "expected {dim}x{dim} for n={n}, d={d}, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        let asym = linalg::asymmetry(&entries);
        let scale = linalg::max_abs(&entries);
        if asym > rel_tol * scale {
            return Err(Error::Validation(format!(
                "matrix is not symmetric: max |M - M^T| = {asym:e} exceeds {:e}",
                rel_tol * scale
            )));
        }
        Ok(Self {
            n,
            d,
            entries: linalg::sym(&entries),
            op_norm: OnceLock::new(),
        })
    }

    /// Builds from a scalar coupling matrix lifted as `a ⊗ I_d`.
    pub fn kron_identity(a: &DMatrix<f64>, d: usize) -> Result<Self> {
        let n = a.nrows();
        let mut m = DMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in 0..n {
                for k in 0..d {
                    m[(i * d + k, j * d + k)] = a[(i, j)];
                }
            }
        }
        Self::new(n, d, m)
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self::new(n, d, DMatrix::zeros(n * d, n * d)).expect("zero matrix is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.n * self.d
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrixView<'_, f64> {
        self.entries
            .view((i * self.d, j * self.d), (self.d, self.d))
    }

    /// Operator norm `max |λ|`, computed once and cached.
    pub fn op_norm(&self) -> f64 {
        *self.op_norm.get_or_init(|| {
            self.entries
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        })
    }

    /// Entrywise sum; both operands must share `n` and `d`.
    pub fn add(&self, other: &BlockSymMatrix) -> Result<BlockSymMatrix> {
        self.check_same_shape(other)?;
        BlockSymMatrix::new(self.n, self.d, &self.entries + &other.entries)
    }

    pub fn sub(&self, other: &BlockSymMatrix) -> Result<BlockSymMatrix> {
        self.check_same_shape(other)?;
        BlockSymMatrix::new(self.n, self.d, &self.entries - &other.entries)
    }

    fn check_same_shape(&self, other: &BlockSymMatrix) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::Shape(format!(
                "block shapes differ: ({}, {}) vs ({}, {})",
                self.n, self.d, other.n, other.d
            )));
        }
        Ok(())
    }
}

impl PartialEq for BlockSymMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.d == other.d && self.entries == other.entries
    }
}

/// Block-diagonal symmetrizer: block `i` of the output is `½(Xᵢᵢ + Xᵢᵢᵀ)`,
/// every off-diagonal block is exactly zero.
pub fn bdg(x: &DMatrix<f64>, n: usize, d: usize) -> Result<BlockSymMatrix> {
    let dim = n * d;
    if n == 0 || d == 0 || x.nrows() != dim || x.ncols() != dim {
        return Err(Error::Shape(format!(
            "bdg expects a {dim}x{dim} matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..n {
        let o = i * d;
        for r in 0..d {
            for c in 0..d {
                out[(o + r, o + c)] = 0.5 * (x[(o + r, o + c)] + x[(o + c, o + r)]);
            }
        }
    }
    BlockSymMatrix::new(n, d, out)
}

/// Full spectrum of a symmetric matrix with eigenvectors and a residual
/// bound.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
    /// `max_k ‖M v_k − λ_k v_k‖ / max(1, ‖M‖)`.
    pub residual: f64,
}

impl SpectralSummary {
    pub fn min_eig(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eig(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum is nonempty")
    }

    /// The `k`-th smallest eigenvalue, 1-based (`kth_smallest(1) == min_eig`).
    pub fn kth_smallest(&self, k: usize) -> Option<f64> {
        k.checked_sub(1)
            .and_then(|i| self.eigenvalues.get(i).copied())
    }

    pub fn op_norm(&self) -> f64 {
        self.min_eig().abs().max(self.max_eig().abs())
    }
}

pub fn eigen_sym(m: &BlockSymMatrix) -> Result<SpectralSummary> {
    let a = m.entries();
    let (eigenvalues, eigenvectors) = linalg::sorted_sym_eigen(a.clone());
    let scale = eigenvalues.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let av = a * &eigenvectors;
    let mut residual = 0.0_f64;
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        let r = (av.column(k) - eigenvectors.column(k) * lambda).norm();
        residual = residual.max(r / scale);
    }
    if residual > EIGEN_RESIDUAL_TOL {
        return Err(Error::Validation(format!(
            "eigensolver residual {residual:e} exceeds {EIGEN_RESIDUAL_TOL:e}"
        )));
    }
    Ok(SpectralSummary {
        eigenvalues,
        eigenvectors,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eig: f64,
    pub max_eig: f64,
}

/// `is_psd ⇔ λ_min ≥ −rel_tol · max(1, λ_max)`.
pub fn psd_check(m: &BlockSymMatrix, rel_tol: f64) -> Result<PsdCheck> {
    let spec = eigen_sym(m)?;
    Ok(psd_from_spectrum(&spec, rel_tol))
}

pub fn psd_from_spectrum(spec: &SpectralSummary, rel_tol: f64) -> PsdCheck {
    let min_eig = spec.min_eig();
    let max_eig = spec.max_eig();
    PsdCheck {
        is_psd: min_eig >= -rel_tol * max_eig.max(1.0),
        min_eig,
        max_eig,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centering(n: usize) -> BlockSymMatrix {
        let m = DMatrix::<f64>::identity(n, n) * n as f64 - DMatrix::from_element(n, n, 1.0);
        BlockSymMatrix::new(n, 1, m).unwrap()
    }

    #[test]
    fn bdg_scalar_blocks_keep_diagonal() {
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let b = bdg(&x, 3, 1).unwrap();
        assert_eq!(
            b.entries(),
            &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 5.0, 9.0]))
        );
    }

    #[test]
    fn bdg_symmetrizes_single_block() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let b = bdg(&x, 1, 2).unwrap();
        assert_eq!(
            b.entries(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 3.0])
        );
    }

    #[test]
    fn bdg_fixes_symmetric_block_diagonal() {
        let mut x = DMatrix::zeros(4, 4);
        x[(0, 0)] = 2.0;
        x[(0, 1)] = -1.0;
        x[(1, 0)] = -1.0;
        x[(3, 3)] = 5.0;
        x[(2, 3)] = 0.5;
        x[(3, 2)] = 0.5;
        assert_eq!(bdg(&x, 2, 2).unwrap().entries(), &x);
    }

    #[test]
    fn bdg_rejects_wrong_shape() {
        let x = DMatrix::zeros(3, 3);
        assert!(matches!(bdg(&x, 2, 2), Err(Error::Shape(_))));
    }

    #[test]
    fn centering_spectrum() {
        let spec = eigen_sym(&centering(4)).unwrap();
        let expect = [0.0, 4.0, 4.0, 4.0];
        for (a, b) in spec.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(spec.residual <= EIGEN_RESIDUAL_TOL);
    }

    #[test]
    fn zero_matrix_spectrum() {
        let spec = eigen_sym(&BlockSymMatrix::zeros(3, 2)).unwrap();
        assert!(spec.eigenvalues.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn psd_examples() {
        let c = psd_check(&centering(5), 1e-8).unwrap();
        assert!(c.is_psd);
        assert!(c.min_eig.abs() < 1e-12);

        let neg = BlockSymMatrix::new(3, 1, -DMatrix::<f64>::identity(3, 3)).unwrap();
        assert!(!psd_check(&neg, 1e-8).unwrap().is_psd);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut m = DMatrix::<f64>::identity(2, 2);
        m[(0, 1)] = 1e-3;
        assert!(matches!(
            BlockSymMatrix::new(2, 1, m),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn kron_identity_places_blocks() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        let m = BlockSymMatrix::kron_identity(&a, 2).unwrap();
        assert_eq!(
            m.block(0, 1).clone_owned(),
            DMatrix::<f64>::identity(2, 2) * 2.0
        );
        assert_eq!(m.block(0, 0).clone_owned(), DMatrix::<f64>::zeros(2, 2));
    }
}
