//! Small dense helpers shared by the manifold, objective and solver code.

use nalgebra::{DMatrix, DMatrixView, SymmetricEigen};

pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest entrywise deviation of `m` from symmetry.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
pub fn sorted_sym_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `1/sqrt(1+x) - 1` without cancellation for small `x`.
pub fn inv_sqrt1p_minus_one(x: f64) -> f64 {
    let r = (1.0 + x).sqrt();
    -x / (r * (1.0 + r))
}

/// Orthonormal-row polar factor `(G Gᵀ)^{-1/2} G = U Vᵀ` of a wide `k×p`
/// matrix. Returns `None` when `G` is numerically rank deficient.
pub fn polar_rows(g: DMatrixView<'_, f64>) -> Option<DMatrix<f64>> {
    let scale = g.norm();
    if !(scale > 0.0) || g.nrows() > g.ncols() {
        return None;
    }
    let svd = g.clone_owned().svd(true, true);
    let smin = svd.singular_values.min();
    if !(smin > 1e-7 * scale) {
        return None;
    }
    Some(svd.u? * svd.v_t?)
}

/// Deviation of `q` from orthogonality, `‖Q Qᵀ − I‖_F`.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let k = q.nrows();
    (q * q.transpose() - DMatrix::<f64>::identity(k, k)).norm()
}
