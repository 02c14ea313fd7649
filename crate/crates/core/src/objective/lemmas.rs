//! Randomized checks of the matrix inequalities behind the landscape
//! proofs, and closed forms for Gaussian averages over proof directions.

use nalgebra::DMatrix;
use rand::Rng;

use crate::blockmat::{bdg, BlockSymMatrix};
use crate::error::Result;
use crate::linalg::{self, frob_inner};
use crate::manifold::{haar_orthogonal, random_point, ProductStiefelPoint};
use crate::rng::{derive_seed, gaussian_matrix, rng_from_seed, SyncRng};

use super::{check_dims, x_matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    /// Most negative margin observed, where a margin `≥ 0` means the
    /// inequality holds.
    pub worst_margin: f64,
}

impl LemmaCheck {
    fn new(name: &'static str) -> Self {
        LemmaCheck {
            name,
            trials: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64, slack: f64) {
        self.trials += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if !(margin >= -slack) {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(LemmaCheck::passed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LemmaBattery {
    pub trials: usize,
    pub seed: u64,
    pub slack: f64,
}

impl Default for LemmaBattery {
    fn default() -> Self {
        LemmaBattery {
            trials: 1000,
            seed: 0,
            slack: 1e-9,
        }
    }
}

pub fn proof_lemma_checks() -> LemmaReport {
    LemmaBattery::default().run()
}

/// `(nd² − ‖X‖²/n, 2d(nd − ⟨X, J⟩/n))` for an `n×n` matrix with diagonal `d`.
pub fn x_inequality_sides(x: &DMatrix<f64>, d: usize) -> (f64, f64) {
    let n = x.nrows() as f64;
    let d = d as f64;
    let lhs = n * d * d - x.norm_squared() / n;
    let rhs = 2.0 * d * (n * d - x.sum() / n);
    (lhs, rhs)
}

fn random_psd(rng: &mut SyncRng, n: usize) -> DMatrix<f64> {
    let k = rng.random_range(1..=n + 2);
    let g = gaussian_matrix(rng, n, k);
    &g * g.transpose()
}

/// `d · UUᵀ` for unit-norm rows `U`, a PSD matrix with diagonal `d`.
fn random_scaled_gram(rng: &mut SyncRng, n: usize, d: usize) -> DMatrix<f64> {
    let k = rng.random_range(1..=n);
    let mut u = gaussian_matrix(rng, n, k);
    for mut row in u.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    let mut x = &u * u.transpose() * d as f64;
    for i in 0..n {
        x[(i, i)] = d as f64;
    }
    x
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    linalg::sorted_sym_eigen(linalg::sym(m)).0[0]
}

impl LemmaBattery {
    pub fn run(&self) -> LemmaReport {
        let mut lower = LemmaCheck::new("x_inequality_lower");
        let mut upper = LemmaCheck::new("x_inequality_upper");
        let mut schur = LemmaCheck::new("schur_product");
        let mut trace = LemmaCheck::new("trace_inequality");
        let mut null = LemmaCheck::new("null_space_bound");
        let mut absorb = LemmaCheck::new("bdg_absorption");
        let slack = self.slack;
        for t in 0..self.trials {
            let mut rng = rng_from_seed(derive_seed(&[self.seed, t as u64]));
            let n = rng.random_range(3..=12);
            let d = rng.random_range(1..=3);

            let x = if t % 2 == 0 {
                random_scaled_gram(&mut rng, n, d)
            } else {
                let p = d + rng.random_range(0..=3);
                let s = random_point(n, d, p, rng.random()).expect("valid dimensions");
                let o = haar_blocks(&mut rng, n, d);
                x_matrix(&s, &o).expect("matching shapes")
            };
            let (lhs, rhs) = x_inequality_sides(&x, d);
            lower.record(lhs, slack);
            upper.record(rhs - lhs, slack);

            let xs = random_psd(&mut rng, n);
            let ys = random_psd(&mut rng, n);
            schur.record(min_eig(&xs.component_mul(&ys)), slack);
            trace.record(xs.norm() * ys.trace() - frob_inner(&xs, &ys), slack);

            null.record(null_space_margin(&mut rng, n, d), slack);

            let p = d + rng.random_range(0..=3);
            let s = random_point(n, d, p, rng.random()).expect("valid dimensions");
            let lam = random_block_diagonal(&mut rng, n, d);
            let absorbed = bdg(&(&lam * s.gram()), n, d).expect("square input");
            absorb.record(-(absorbed.entries() - &lam).amax(), slack.min(1e-10));
        }
        LemmaReport {
            checks: vec![lower, upper, schur, trace, null, absorb],
        }
    }
}

/// Margin of `⟨X, Y⟩ ≥ λ_{d+1}(X) Tr((I − Π)Y)` where `Π` projects onto the
/// `d`-dimensional null space of `X` and `YΠ = 0`.
fn null_space_margin(rng: &mut SyncRng, n: usize, d: usize) -> f64 {
    let d = d.min(n - 1);
    let q = linalg::polar_rows(gaussian_matrix(rng, n, n).as_view()).expect("generic Gaussian");
    let mut diag = DMatrix::zeros(n, n);
    for k in d..n {
        diag[(k, k)] = 0.1 + rng.random::<f64>() * 3.0;
    }
    let x = q.transpose() * diag * &q;
    let basis = q.rows(0, d).transpose();
    let pi = &basis * basis.transpose();
    let comp = DMatrix::<f64>::identity(n, n) - &pi;
    let g = gaussian_matrix(rng, n, n);
    let y = &comp * &g * g.transpose() * &comp;
    let (eig, _) = linalg::sorted_sym_eigen(linalg::sym(&x));
    let lam = eig[d];
    frob_inner(&x, &y) - lam * (&comp * &y).trace()
}

fn random_block_diagonal(rng: &mut SyncRng, n: usize, d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        let g = gaussian_matrix(rng, d, d);
        m.view_mut((i * d, i * d), (d, d))
            .copy_from(&linalg::sym(&g));
    }
    m
}

pub(crate) fn haar_blocks(rng: &mut SyncRng, n: usize, d: usize) -> Vec<DMatrix<f64>> {
    (0..n).map(|_| haar_orthogonal(rng, d)).collect()
}

/// Outcome of a Monte Carlo comparison: the largest entrywise deviation
/// from the expected value measured in standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloCheck {
    pub samples: usize,
    pub max_z: f64,
}

/// Checks `E ΦUᵀVΦᵀ = ⟨U, V⟩ I_d` and `E ΦUᵀΦVᵀ = UVᵀ` for `Φ` a `d×p`
/// standard Gaussian and fixed `d×p` matrices `U`, `V`.
pub fn gaussian_identity_check(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> [MonteCarloCheck; 2] {
    let (d, p) = u.shape();
    assert_eq!(v.shape(), (d, p), "U and V must have the same shape");
    assert!(samples >= 2, "need at least two samples");
    let mut rng = rng_from_seed(seed);
    let utv = u.transpose() * v;
    let (ut, vt) = (u.transpose(), v.transpose());
    let mut sums = [DMatrix::zeros(d, d), DMatrix::zeros(d, d)];
    let mut sq = [DMatrix::zeros(d, d), DMatrix::zeros(d, d)];
    for _ in 0..samples {
        let phi = gaussian_matrix(&mut rng, d, p);
        let first = &phi * &utv * phi.transpose();
        let second = &phi * &ut * &phi * &vt;
        for (k, m) in [first, second].into_iter().enumerate() {
            sq[k] += m.component_mul(&m);
            sums[k] += m;
        }
    }
    let expected = [DMatrix::<f64>::identity(d, d) * frob_inner(u, v), u * &vt];
    let m = samples as f64;
    let mut out = [MonteCarloCheck {
        samples,
        max_z: 0.0,
    }; 2];
    for k in 0..2 {
        for idx in 0..d * d {
            let mean = sums[k][idx] / m;
            let var = (sq[k][idx] / m - mean * mean).max(0.0) * m / (m - 1.0);
            let se = (var / m).sqrt();
            let dev = (mean - expected[k][idx]).abs();
            let z = if se > 0.0 {
                dev / se
            } else if dev < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            out[k].max_z = out[k].max_z.max(z);
        }
    }
    out
}

/// Closed form of `E_Φ ⟨bdg(A S Sᵀ) − A, ṠṠᵀ⟩` over proof directions
/// built from `Ô`:
/// `(p − 2)⟨L, ÔÔᵀ⟩ + Σᵢⱼ Xᵢⱼ⟨Lᵢⱼ, SᵢSⱼᵀ⟩ − (p + d − 2)⟨L, SSᵀ⟩` with
/// `L = bdg(AÔÔᵀ) − A`.
pub fn expected_proof_quadform(
    a: &BlockSymMatrix,
    s: &ProductStiefelPoint,
    o_hat: &[DMatrix<f64>],
) -> Result<f64> {
    check_dims(a, s)?;
    let (n, d, p) = (s.n(), s.d(), s.p());
    let x = x_matrix(s, o_hat)?;
    let mut o = DMatrix::zeros(n * d, d);
    for (i, b) in o_hat.iter().enumerate() {
        o.view_mut((i * d, 0), (d, d)).copy_from(b);
    }
    let oo = &o * o.transpose();
    let lam = bdg(&(a.entries() * &oo), n, d)?;
    let l = lam.entries() - a.entries();
    let ss = s.gram();
    let mut cross = 0.0;
    for i in 0..n {
        for j in 0..n {
            let lij = l.view((i * d, j * d), (d, d));
            let sij = ss.view((i * d, j * d), (d, d));
            cross += x[(i, j)] * lij.component_mul(&sij).sum();
        }
    }
    let (p, d) = (p as f64, d as f64);
    Ok((p - 2.0) * frob_inner(&l, &oo) + cross - (p + d - 2.0) * frob_inner(&l, &ss))
}
