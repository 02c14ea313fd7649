//! The product Stiefel manifold `St(p,d)^n`.
//!
//! A point is stored as the `(n·d)×p` stack of its blocks; block `i` is the
//! `d×p` matrix `Sᵢ` with orthonormal rows. Tangent vectors share the stacked
//! layout and borrow the point they are tangent at.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{gaussian_matrix, rng_from_seed, SyncRng};

/// Per-block tolerance on `‖SᵢSᵢᵀ − I‖_F`.
pub const STIEFEL_TOL: f64 = 1e-10;
/// Per-block tolerance on `‖ṠᵢSᵢᵀ + SᵢṠᵢᵀ‖_F`, relative to `max(1, ‖Ṡᵢ‖_F)`.
pub const TANGENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductStiefelPoint {
    n: usize,
    d: usize,
    p: usize,
    stack: DMatrix<f64>,
}

impl ProductStiefelPoint {
    pub fn new(n: usize, d: usize, stack: DMatrix<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Shape("n and d must be positive".into()));
        }
        if stack.nrows() != n * d {
            return Err(Error::Shape(format!(
                "stack has {} rows, expected n*d = {}",
                stack.nrows(),
                n * d
            )));
        }
        let p = stack.ncols();
        if p < d {
            return Err(Error::Parameter(format!(
                "p = {p} must be at least d = {d}"
            )));
        }
        let point = Self { n, d, p, stack };
        for i in 0..n {
            let defect = block_defect(point.block(i));
            if !(defect <= STIEFEL_TOL) {
                return Err(Error::Validation(format!(
                    "block {i} is off the Stiefel manifold: ‖SSᵀ − I‖ = {defect:e}"
                )));
            }
        }
        Ok(point)
    }

    pub fn from_blocks(blocks: &[DMatrix<f64>]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::Shape("no blocks given".into()))?;
        let (d, p) = first.shape();
        let mut stack = DMatrix::zeros(blocks.len() * d, p);
        for (i, b) in blocks.iter().enumerate() {
            if b.shape() != (d, p) {
                return Err(Error::Shape(format!("block {i} has shape {:?}", b.shape())));
            }
            stack.view_mut((i * d, 0), (d, p)).copy_from(b);
        }
        Self::new(blocks.len(), d, stack)
    }

    /// `Sᵢ = [Oᵢ | 0]` for orthogonal `d×d` blocks `Oᵢ`, padded to width `p`.
    pub fn canonical_embedding(blocks: &[DMatrix<f64>], p: usize) -> Result<Self> {
        let d = blocks
            .first()
            .ok_or_else(|| Error::Shape("no blocks given".into()))?
            .nrows();
        if p < d {
            return Err(Error::Parameter(format!(
                "p = {p} must be at least d = {d}"
            )));
        }
        let mut stack = DMatrix::zeros(blocks.len() * d, p);
        for (i, b) in blocks.iter().enumerate() {
            if b.shape() != (d, d) {
                return Err(Error::Shape(format!("block {i} is not {d}x{d}")));
            }
            stack.view_mut((i * d, 0), (d, d)).copy_from(b);
        }
        Self::new(blocks.len(), d, stack)
    }

    /// `d = 1` embedding of a sign vector: `sᵢ = xᵢ e₁`.
    pub fn from_signs(x: &[f64], p: usize) -> Result<Self> {
        let blocks: Vec<DMatrix<f64>> = x.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect();
        Self::canonical_embedding(&blocks, p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn stack(&self) -> &DMatrix<f64> {
        &self.stack
    }

    pub fn block(&self, i: usize) -> DMatrixView<'_, f64> {
        self.stack.view((i * self.d, 0), (self.d, self.p))
    }

    pub fn blocks(&self) -> Vec<DMatrix<f64>> {
        (0..self.n).map(|i| self.block(i).clone_owned()).collect()
    }

    /// `S Sᵀ`, the `(n·d)×(n·d)` Gram matrix.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.stack * self.stack.transpose()
    }

    /// Largest per-block `‖SᵢSᵢᵀ − I‖_F`.
    pub fn stiefel_defect(&self) -> f64 {
        (0..self.n)
            .map(|i| block_defect(self.block(i)))
            .fold(0.0, f64::max)
    }

    /// Gauge action `S ↦ S Q` for a `p×p` orthogonal `Q`.
    pub fn right_multiply(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.shape() != (self.p, self.p) {
            return Err(Error::Shape(format!("gauge must be {0}x{0}", self.p)));
        }
        Self::new(self.n, self.d, &self.stack * q)
    }

    pub(crate) fn from_stack_unchecked(n: usize, d: usize, stack: DMatrix<f64>) -> Self {
        let p = stack.ncols();
        Self { n, d, p, stack }
    }

    /// Polar retraction `Rᵢ(t) = (Sᵢ + tṠᵢ)[(Sᵢ + tṠᵢ)(Sᵢ + tṠᵢ)ᵀ]^{−1/2}`.
    /// Returns `self` unchanged at `t = 0`.
    pub fn retract(&self, dir: &TangentDirection<'_>, t: f64) -> Result<ProductStiefelPoint> {
        if t == 0.0 {
            return Ok(self.clone());
        }
        let disp = retraction_displacement(self, dir.stack(), t)?;
        Ok(Self::from_stack_unchecked(
            self.n,
            self.d,
            &self.stack + disp,
        ))
    }
}

fn block_defect(b: DMatrixView<'_, f64>) -> f64 {
    let d = b.nrows();
    (&b * b.transpose() - DMatrix::<f64>::identity(d, d)).norm()
}

/// A tangent vector at `base`, in the same stacked layout.
#[derive(Debug, Clone)]
pub struct TangentDirection<'a> {
    base: &'a ProductStiefelPoint,
    stack: DMatrix<f64>,
}

impl<'a> TangentDirection<'a> {
    /// Validates the tangency constraint blockwise.
    pub fn new(base: &'a ProductStiefelPoint, stack: DMatrix<f64>) -> Result<Self> {
        if stack.shape() != base.stack.shape() {
            return Err(Error::Shape(format!(
                "tangent stack {:?} does not match point {:?}",
                stack.shape(),
                base.stack.shape()
            )));
        }
        let dir = Self { base, stack };
        for i in 0..base.n {
            let b = dir.block(i);
            let res = tangency_residual(base.block(i), b);
            if !(res <= TANGENT_TOL * b.norm().max(1.0)) {
                return Err(Error::Validation(format!(
                    "block {i} is not tangent: residual {res:e}"
                )));
            }
        }
        Ok(dir)
    }

    pub fn zero(base: &'a ProductStiefelPoint) -> Self {
        Self {
            base,
            stack: DMatrix::zeros(base.stack.nrows(), base.p),
        }
    }

    pub fn base(&self) -> &'a ProductStiefelPoint {
        self.base
    }

    pub fn stack(&self) -> &DMatrix<f64> {
        &self.stack
    }

    pub fn block(&self, i: usize) -> DMatrixView<'_, f64> {
        let d = self.base.d;
        self.stack.view((i * d, 0), (d, self.base.p))
    }

    pub fn norm(&self) -> f64 {
        self.stack.norm()
    }

    pub fn inner(&self, other: &TangentDirection<'_>) -> f64 {
        linalg::frob_inner(&self.stack, &other.stack)
    }

    pub fn scaled(&self, factor: f64) -> TangentDirection<'a> {
        Self {
            base: self.base,
            stack: &self.stack * factor,
        }
    }

    /// Largest per-block `‖ṠᵢSᵢᵀ + SᵢṠᵢᵀ‖_F`.
    pub fn tangency_residual(&self) -> f64 {
        (0..self.base.n)
            .map(|i| tangency_residual(self.base.block(i), self.block(i)))
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_stack_unchecked(base: &'a ProductStiefelPoint, stack: DMatrix<f64>) -> Self {
        Self { base, stack }
    }
}

fn tangency_residual(s: DMatrixView<'_, f64>, v: DMatrixView<'_, f64>) -> f64 {
    let m = &v * s.transpose();
    (&m + m.transpose()).norm()
}

fn check_stack_shape(s: &ProductStiefelPoint, z: &DMatrix<f64>) -> Result<()> {
    if z.shape() != s.stack.shape() {
        return Err(Error::Shape(format!(
            "expected {:?}, got {:?}",
            s.stack.shape(),
            z.shape()
        )));
    }
    Ok(())
}

/// Blockwise `Zᵢ − ½(SᵢZᵢᵀ + ZᵢSᵢᵀ)Sᵢ`.
pub fn project_tangent<'a>(
    s: &'a ProductStiefelPoint,
    z: &DMatrix<f64>,
) -> Result<TangentDirection<'a>> {
    check_stack_shape(s, z)?;
    Ok(TangentDirection::from_stack_unchecked(
        s,
        project_stack(s, z),
    ))
}

pub(crate) fn project_stack(s: &ProductStiefelPoint, z: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d, p) = (s.n, s.d, s.p);
    let mut out = z.clone();
    for i in 0..n {
        let si = s.block(i);
        let zi = z.view((i * d, 0), (d, p));
        let m = &zi * si.transpose();
        let sym = (&m + m.transpose()) * 0.5;
        let mut oi = out.view_mut((i * d, 0), (d, p));
        oi -= sym * si;
    }
    out
}

/// `R(S, Ṡ, t) − S`, computed without forming the difference of two
/// nearly equal matrices.
pub(crate) fn retraction_displacement(
    s: &ProductStiefelPoint,
    dir: &DMatrix<f64>,
    t: f64,
) -> Result<DMatrix<f64>> {
    let (n, d, p) = (s.n, s.d, s.p);
    let mut disp = DMatrix::zeros(n * d, p);
    for i in 0..n {
        let si = s.block(i);
        let vi = dir.view((i * d, 0), (d, p));
        let y = &si + &vi * t;
        let di = if d == 1 {
            let g = (si.norm_squared() - 1.0) + 2.0 * t * si.dot(&vi) + t * t * vi.norm_squared();
            if 1.0 + g <= 1e-14 {
                return Err(Error::Singular { block: i });
            }
            &vi * t + &y * linalg::inv_sqrt1p_minus_one(g)
        } else {
            let ident = DMatrix::<f64>::identity(d, d);
            let cross = &si * vi.transpose();
            let g = (&si * si.transpose() - ident)
                + (&cross + cross.transpose()) * t
                + &vi * vi.transpose() * (t * t);
            let (mu, v) = linalg::sorted_sym_eigen(linalg::sym(&g));
            if 1.0 + mu[0] <= 1e-14 {
                return Err(Error::Singular { block: i });
            }
            let h = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                d,
                mu.iter().map(|&m| linalg::inv_sqrt1p_minus_one(m)),
            ));
            &vi * t + &v * h * v.transpose() * &y
        };
        disp.view_mut((i * d, 0), (d, p)).copy_from(&di);
    }
    Ok(disp)
}

/// Each block is the orthonormal-row polar factor of a `d×p` standard
/// Gaussian matrix.
pub fn random_point(n: usize, d: usize, p: usize, seed: u64) -> Result<ProductStiefelPoint> {
    if p < d {
        return Err(Error::Parameter(format!(
            "p = {p} must be at least d = {d}"
        )));
    }
    if n == 0 || d == 0 {
        return Err(Error::Parameter("n and d must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut stack = DMatrix::zeros(n * d, p);
    for i in 0..n {
        // a Gaussian block is full rank with probability one; redraw otherwise
        let block = loop {
            let g = gaussian_matrix(&mut rng, d, p);
            if let Some(q) = linalg::polar_rows(g.as_view()) {
                break q;
            }
        };
        stack.view_mut((i * d, 0), (d, p)).copy_from(&block);
    }
    ProductStiefelPoint::new(n, d, stack)
}

/// Haar sample from the full orthogonal group `O(d)`: the polar factor of a
/// standard Gaussian matrix. Both determinant signs occur.
pub fn haar_orthogonal(rng: &mut SyncRng, d: usize) -> DMatrix<f64> {
    loop {
        if let Some(q) = linalg::polar_rows(gaussian_matrix(rng, d, d).as_view()) {
            return q;
        }
    }
}

/// Tangent projection of a blockwise i.i.d. standard Gaussian matrix.
pub fn random_tangent(s: &ProductStiefelPoint, seed: u64) -> TangentDirection<'_> {
    let z = gaussian_matrix(&mut rng_from_seed(seed), s.n * s.d, s.p);
    TangentDirection::from_stack_unchecked(s, project_stack(s, &z))
}

/// The direction `Ṡᵢ = ÔᵢΦ − SᵢΦᵀÔᵢᵀSᵢ` built from a reference point `Ô`
/// in `O(d)^n` and a `d×p` matrix `Φ`.
pub fn proof_direction<'a>(
    s: &'a ProductStiefelPoint,
    o_hat: &[DMatrix<f64>],
    phi: &DMatrix<f64>,
) -> Result<TangentDirection<'a>> {
    let (n, d, p) = (s.n, s.d, s.p);
    if o_hat.len() != n {
        return Err(Error::Shape(format!(
            "expected {n} reference blocks, got {}",
            o_hat.len()
        )));
    }
    if phi.shape() != (d, p) {
        return Err(Error::Shape(format!(
            "Φ must be {d}x{p}, got {:?}",
            phi.shape()
        )));
    }
    for (i, o) in o_hat.iter().enumerate() {
        if o.shape() != (d, d) {
            return Err(Error::Shape(format!("reference block {i} is not {d}x{d}")));
        }
        let defect = linalg::orthogonality_defect(o);
        if !(defect <= STIEFEL_TOL) {
            return Err(Error::Validation(format!(
                "reference block {i} is not orthogonal: defect {defect:e}"
            )));
        }
    }
    let mut stack = DMatrix::zeros(n * d, p);
    for (i, o) in o_hat.iter().enumerate() {
        let si = s.block(i);
        let vi = o * phi - &si * phi.transpose() * o.transpose() * &si;
        stack.view_mut((i * d, 0), (d, p)).copy_from(&vi);
    }
    TangentDirection::new(s, stack)
}
