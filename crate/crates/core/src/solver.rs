//! Riemannian gradient descent with Armijo backtracking, probe-based
//! escape from saddles, and rounding of solutions to `O(d)^n`.

use std::fmt;

use nalgebra::DMatrix;

use crate::blockmat::BlockSymMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::{
    self, proof_direction, random_point, random_tangent, retraction_displacement,
    ProductStiefelPoint, TangentDirection,
};
use crate::models::Truth;
use crate::objective::{
    self, build_certificate, certify_global, energy_change, quadform_with_multipliers, Certificate,
    Verdict, DEFAULT_TOL_GRAD, DEFAULT_TOL_PSD,
};
use crate::rng::{derive_seed, gaussian_matrix, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub p: usize,
    pub max_iters: usize,
    /// Relative gradient tolerance, scaled by `‖A‖_op √(nd)`.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// `None` means `1/‖A‖_op`.
    pub initial_step: Option<f64>,
    pub escape_probes: usize,
    /// Escape displacement, relative to `‖S‖_F = √(nd)`.
    pub escape_step: f64,
    pub max_escapes: usize,
    /// Probe threshold: curvature along a unit direction below
    /// `−curvature_tol · ‖A‖_op` counts as negative.
    pub curvature_tol: f64,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(p: usize, seed: u64) -> Self {
        SolverConfig {
            p,
            seed,
            ..Default::default()
        }
    }

    /// Gradient norm at which descent stops. Capped an order below the
    /// certificate's residual tolerance so converged points can certify.
    pub fn grad_threshold(&self, a: &BlockSymMatrix) -> f64 {
        let scale = a.op_norm();
        let nd = a.dim() as f64;
        (self.grad_tol * scale * nd.sqrt()).min(0.1 * DEFAULT_TOL_GRAD * scale)
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.p < d {
            return Err(Error::Parameter(format!(
                "p = {} must be at least d = {d}",
                self.p
            )));
        }
        let positive = [
            ("grad_tol", self.grad_tol),
            ("armijo_c", self.armijo_c),
            ("escape_step", self.escape_step),
            ("curvature_tol", self.curvature_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Parameter(format!(
                "backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if let Some(t) = self.initial_step {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Parameter(format!(
                    "initial_step must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            p: 2,
            max_iters: 50_000,
            grad_tol: 1e-9,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            initial_step: None,
            escape_probes: 30,
            escape_step: 1e-3,
            max_escapes: 25,
            curvature_tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Gradient converged and no probe found negative curvature.
    Converged,
    /// As `Converged`, after escaping `k` saddles.
    Escaped(usize),
    MaxIters,
    StepUnderflow,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        matches!(self, SolveStatus::Converged | SolveStatus::Escaped(_))
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::Converged => f.write_str("converged"),
            SolveStatus::Escaped(k) => write!(f, "escaped_{k}_times"),
            SolveStatus::MaxIters => f.write_str("max_iters"),
            SolveStatus::StepUnderflow => f.write_str("step_underflow"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub final_point: ProductStiefelPoint,
    /// Energy before each iteration and at the end.
    pub energy_trace: Vec<f64>,
    pub grad_norm_trace: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub escapes: usize,
    pub certificate: Certificate,
    pub verdict: Verdict,
    pub certified: bool,
}

impl SolveReport {
    pub fn energy(&self) -> f64 {
        *self.energy_trace.last().expect("trace is nonempty")
    }

    pub fn grad_norm(&self) -> f64 {
        *self.grad_norm_trace.last().expect("trace is nonempty")
    }
}

/// Retracts `s` along `dir` and returns the new point with the energy
/// change, computed from the displacement rather than as a difference of
/// two energies.
pub(crate) fn step_with_change(
    a: &BlockSymMatrix,
    s: &ProductStiefelPoint,
    dir: &DMatrix<f64>,
    t: f64,
) -> Result<(ProductStiefelPoint, f64)> {
    let disp = retraction_displacement(s, dir, t)?;
    let df = energy_change(a, s.stack(), &disp);
    let next = ProductStiefelPoint::from_stack_unchecked(s.n(), s.d(), s.stack() + disp);
    Ok((next, df))
}

fn gradient_norm(a: &BlockSymMatrix, s: &ProductStiefelPoint) -> f64 {
    manifold::project_stack(s, &(a.entries() * s.stack())).norm()
}

/// Energy changes below this are indistinguishable from the rounding
/// drift of the iterates off the manifold.
pub(crate) fn energy_noise_floor(a: &BlockSymMatrix) -> f64 {
    100.0 * f64::EPSILON * a.op_norm() * a.dim() as f64
}

pub fn solve(a: &BlockSymMatrix, d: usize, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_with_reference(a, d, cfg, None)
}

/// As [`solve`], additionally probing along proof directions built from
/// `reference` when given.
pub fn solve_with_reference(
    a: &BlockSymMatrix,
    d: usize,
    cfg: &SolverConfig,
    reference: Option<&Truth>,
) -> Result<SolveReport> {
    if a.d() != d {
        return Err(Error::Shape(format!(
            "matrix has block size {}, expected {d}",
            a.d()
        )));
    }
    cfg.validate(d)?;
    let start = random_point(a.n(), d, cfg.p, cfg.seed)?;
    solve_from(a, start, cfg, reference)
}

pub fn solve_from(
    a: &BlockSymMatrix,
    start: ProductStiefelPoint,
    cfg: &SolverConfig,
    reference: Option<&Truth>,
) -> Result<SolveReport> {
    if a.n() != start.n() || a.d() != start.d() {
        return Err(Error::Shape(
            "start point does not match the data matrix".into(),
        ));
    }
    cfg.validate(start.d())?;
    let ref_blocks = reference.map(Truth::blocks);
    let scale = a.op_norm();
    let threshold = cfg.grad_threshold(a);
    let initial = cfg
        .initial_step
        .unwrap_or(1.0 / scale.max(f64::MIN_POSITIVE));
    let max_step = 1e4 * initial;
    let noise = energy_noise_floor(a);
    let grad_noise = 10.0 * f64::EPSILON * scale * (a.dim() as f64).sqrt();
    let mut step = initial;
    let mut s = start;
    let mut energy_trace = Vec::new();
    let mut grad_norm_trace = Vec::new();
    let mut iterations = 0;
    let mut escapes = 0;

    let status = loop {
        let as_ = a.entries() * s.stack();
        let grad = -manifold::project_stack(&s, &as_);
        let gnorm = grad.norm();
        energy_trace.push(-0.5 * linalg::frob_inner(&as_, s.stack()));
        grad_norm_trace.push(gnorm);

        if gnorm <= threshold {
            let seed = derive_seed(&[cfg.seed, 0x9F0BE, escapes as u64]);
            let probe = socp_probe(
                a,
                &s,
                cfg.escape_probes,
                seed,
                cfg.curvature_tol,
                ref_blocks.as_deref(),
            )?;
            let Some(witness) = probe.witness else {
                break if escapes == 0 {
                    SolveStatus::Converged
                } else {
                    SolveStatus::Escaped(escapes)
                };
            };
            if escapes == cfg.max_escapes {
                break SolveStatus::MaxIters;
            }
            let w = witness.stack().clone();
            s = escape(
                a,
                &s,
                &w,
                cfg.escape_step * (s.stack().nrows() as f64).sqrt(),
            )?;
            escapes += 1;
            continue;
        }
        if iterations == cfg.max_iters {
            break SolveStatus::MaxIters;
        }

        let dir = -grad;
        let decrease = cfg.armijo_c * gnorm * gnorm;
        // Near convergence the Armijo decrease falls below rounding noise.
        // There a step is accepted if energy does not visibly rise and the
        // gradient shrinks by more than its own rounding error, and it does
        // not lengthen the step.
        let mut grow = true;
        let mut backtracked = false;
        let accepted = loop {
            let resolvable = decrease * step > noise;
            match step_with_change(a, &s, &dir, step) {
                Ok((next, df)) if resolvable && df <= -decrease * step => break Some(next),
                Ok((next, df))
                    if !resolvable
                        && df <= noise
                        && gradient_norm(a, &next) < gnorm - grad_noise =>
                {
                    grow = false;
                    break Some(next);
                }
                Ok(_) | Err(Error::Singular { .. }) => {}
                Err(e) => return Err(e),
            }
            backtracked = true;
            step *= cfg.backtrack_factor;
            if step < 1e-16 * initial {
                break None;
            }
        };
        let Some(next) = accepted else {
            break SolveStatus::StepUnderflow;
        };
        s = next;
        iterations += 1;
        if grow && !backtracked {
            step = (step * 2.0).min(max_step);
        }
    };

    let certificate = build_certificate(a, &s)?;
    let verdict = certify_global(&certificate, DEFAULT_TOL_GRAD, DEFAULT_TOL_PSD);
    Ok(SolveReport {
        final_point: s,
        energy_trace,
        grad_norm_trace,
        iterations,
        status,
        escapes,
        certified: verdict.certified,
        certificate,
        verdict,
    })
}

/// Moves from a saddle along `±w`, choosing the sign with the larger
/// decrease and lengthening the step until energy drops.
fn escape(
    a: &BlockSymMatrix,
    s: &ProductStiefelPoint,
    w: &DMatrix<f64>,
    t0: f64,
) -> Result<ProductStiefelPoint> {
    let mut t = t0;
    let mut best: Option<(ProductStiefelPoint, f64)> = None;
    for _ in 0..12 {
        for sign in [1.0, -1.0] {
            let (next, df) = step_with_change(a, s, w, sign * t)?;
            if best.as_ref().map_or(true, |(_, b)| df < *b) {
                best = Some((next, df));
            }
        }
        if best.as_ref().is_some_and(|(_, df)| *df < 0.0) {
            break;
        }
        t *= 2.0;
    }
    Ok(best.expect("at least one trial").0)
}

#[derive(Debug, Clone)]
pub struct ProbeResult<'a> {
    pub is_socp: bool,
    /// A unit-norm direction of negative curvature, if one was found.
    pub witness: Option<TangentDirection<'a>>,
    /// Smallest curvature `⟨Λ − A, ṠṠᵀ⟩/‖Ṡ‖²` over the probes.
    pub min_quadform: f64,
    pub probes: usize,
    /// `false` if the gradient at the probed point is not small, in which
    /// case a pass says little about second-order criticality.
    pub near_critical: bool,
}

/// `P_S((Λ − A)V)`: the Riemannian Hessian as an operator on tangents.
fn hessian_apply(
    a: &BlockSymMatrix,
    lambda: &[DMatrix<f64>],
    s: &ProductStiefelPoint,
    v: &DMatrix<f64>,
) -> DMatrix<f64> {
    let d = s.d();
    let mut w = -(a.entries() * v);
    for (i, l) in lambda.iter().enumerate() {
        let vi = v.rows(i * d, d);
        let mut wi = w.rows_mut(i * d, d);
        wi += l * vi;
    }
    manifold::project_stack(s, &w)
}

/// Smallest Ritz pair of the Hessian on a `k`-step Krylov space started at
/// `v0`, with full reorthogonalization.
fn lanczos_min(
    a: &BlockSymMatrix,
    lambda: &[DMatrix<f64>],
    s: &ProductStiefelPoint,
    v0: &DMatrix<f64>,
    k: usize,
) -> Option<(f64, DMatrix<f64>)> {
    let norm = v0.norm();
    if !(norm > 0.0) || k == 0 {
        return None;
    }
    let mut basis = vec![v0 / norm];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..k {
        let mut w = hessian_apply(a, lambda, s, &basis[j]);
        alpha.push(linalg::frob_inner(&w, &basis[j]));
        for q in &basis {
            let c = linalg::frob_inner(&w, q);
            w -= q * c;
        }
        let b = w.norm();
        if j + 1 == k || b <= 1e-12 * (a.op_norm().max(f64::MIN_POSITIVE)) {
            break;
        }
        beta.push(b);
        basis.push(w / b);
    }
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (vals, vecs) = linalg::sorted_sym_eigen(t);
    let mut ritz = DMatrix::zeros(v0.nrows(), v0.ncols());
    for (j, q) in basis.iter().take(m).enumerate() {
        ritz += q * vecs[(j, 0)];
    }
    Some((vals[0], ritz))
}

/// Evaluates the Hessian form on `k` random tangents, on `k` proof
/// directions built from `reference` when given, and on the smallest Ritz
/// vector of a `k`-step Lanczos run started at the first random tangent.
pub fn socp_probe<'a>(
    a: &BlockSymMatrix,
    s: &'a ProductStiefelPoint,
    k: usize,
    seed: u64,
    tol: f64,
    reference: Option<&[DMatrix<f64>]>,
) -> Result<ProbeResult<'a>> {
    let lambda = objective::multiplier_blocks(a, s)?;
    let scale = a.op_norm();
    let grad = objective::riemannian_gradient(a, s)?.norm();
    let near_critical = grad <= 1e-6 * scale.max(f64::MIN_POSITIVE) * (a.dim() as f64).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut min_q = f64::INFINITY;
    let mut witness: Option<TangentDirection<'a>> = None;
    let mut probes = 0;
    let mut consider = |v: TangentDirection<'a>| {
        let norm = v.norm();
        if !(norm > 0.0) {
            return;
        }
        let v = v.scaled(1.0 / norm);
        let q = quadform_with_multipliers(a, &lambda, &v);
        probes += 1;
        if q < min_q {
            min_q = q;
            witness = Some(v);
        }
    };
    let mut start = None;
    for j in 0..k {
        let v = random_tangent(s, derive_seed(&[seed, 1, j as u64]));
        if j == 0 {
            start = Some(v.stack().clone());
        }
        consider(v);
        if let Some(o) = reference {
            let phi = gaussian_matrix(&mut rng, s.d(), s.p());
            consider(proof_direction(s, o, &phi)?);
        }
    }
    if let Some((_, ritz)) = start.and_then(|v0| lanczos_min(a, &lambda, s, &v0, k)) {
        // re-project to remove rounding drift from the tangent space
        let ritz = manifold::project_stack(s, &ritz);
        consider(TangentDirection::from_stack_unchecked(s, ritz));
    }
    let is_socp = !(min_q < -tol * scale);
    Ok(ProbeResult {
        is_socp,
        witness: if is_socp { None } else { witness },
        min_quadform: if probes == 0 { 0.0 } else { min_q },
        probes,
        near_critical,
    })
}

/// Recovers `Rᵢ ∈ O(d)` from a numerically rank-`d` point, gauged so that
/// `R₁ = I`: `Rᵢ = polar(SᵢS₁ᵀ)`.
pub fn round_to_orthogonal(s: &ProductStiefelPoint) -> Result<Vec<DMatrix<f64>>> {
    let d = s.d();
    let sv = s.stack().clone().singular_values();
    let mut sv: Vec<f64> = sv.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let ratio = if sv.len() > d { sv[d] / sv[d - 1] } else { 0.0 };
    if !(ratio <= 1e-6) {
        return Err(Error::NotRankD { d, ratio });
    }
    let s1 = s.block(0);
    (0..s.n())
        .map(|i| {
            let m = s.block(i) * s1.transpose();
            if d == 1 {
                return Ok(DMatrix::from_element(
                    1,
                    1,
                    if m[(0, 0)] >= 0.0 { 1.0 } else { -1.0 },
                ));
            }
            linalg::polar_rows(m.as_view()).ok_or(Error::NotRankD { d, ratio })
        })
        .collect()
}

/// `nd − ⟨X, J⟩/n`: zero exactly when `SSᵀ` equals the truth's Gram matrix.
pub fn alignment_error(s: &ProductStiefelPoint, truth: Option<&Truth>) -> Result<f64> {
    let truth = truth.ok_or(Error::MissingTruth)?;
    let x = objective::x_matrix(s, &truth.blocks())?;
    let n = s.n() as f64;
    Ok(n * s.d() as f64 - x.sum() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{gen_od_sync, gen_z2};

    fn complete_graph(n: usize) -> BlockSymMatrix {
        let a = DMatrix::from_element(n, n, 1.0) - DMatrix::<f64>::identity(n, n);
        BlockSymMatrix::new(n, 1, a).unwrap()
    }

    #[test]
    fn complete_graph_synchronizes() {
        let a = complete_graph(10);
        let rep = solve(&a, 1, &SolverConfig::new(3, 7)).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert!(rep.certified, "{:?}", rep.verdict);
        let g = rep.final_point.gram();
        assert!((g - DMatrix::from_element(10, 10, 1.0)).amax() < 1e-8);
    }

    #[test]
    fn energy_trace_is_monotone() {
        let inst = gen_z2(60, 1.0, 3).unwrap();
        let rep = solve(&inst.a, 1, &SolverConfig::new(3, 1)).unwrap();
        for w in rep.energy_trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0),
                "{} -> {}",
                w[0],
                w[1]
            );
        }
        assert_eq!(rep.energy_trace.len(), rep.grad_norm_trace.len());
    }

    #[test]
    fn full_rank_always_certifies() {
        let inst = gen_od_sync(6, 2, 0.2, 4).unwrap();
        for seed in 0..20 {
            let rep = solve(&inst.a, 2, &SolverConfig::new(12, seed)).unwrap();
            assert!(rep.certified, "seed {seed}: {:?}", rep.verdict);
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        let a = complete_graph(4);
        assert!(solve(&a, 1, &SolverConfig::new(0, 1)).is_err());
        let cfg = SolverConfig {
            backtrack_factor: 1.5,
            ..SolverConfig::new(2, 1)
        };
        assert!(solve(&a, 1, &cfg).is_err());
        assert!(solve(&a, 2, &SolverConfig::new(3, 1)).is_err());
    }

    #[test]
    fn status_strings() {
        assert_eq!(SolveStatus::Converged.to_string(), "converged");
        assert_eq!(SolveStatus::Escaped(3).to_string(), "escaped_3_times");
        assert_eq!(SolveStatus::MaxIters.to_string(), "max_iters");
    }

    #[test]
    fn probe_passes_at_global_minimum() {
        let inst = gen_z2(20, 0.0, 2).unwrap();
        let truth = inst.truth.as_ref().unwrap();
        let s = truth.embed(3).unwrap();
        let o = truth.blocks();
        let r = socp_probe(&inst.a, &s, 30, 5, 1e-8, Some(&o)).unwrap();
        assert!(r.is_socp && r.near_critical);
        // proof directions at the truth are pure gauge motions
        assert!(r.min_quadform.abs() < 1e-10 * inst.a.op_norm());
    }

    #[test]
    fn probe_finds_antipodal_saddle() {
        // two clusters on opposite poles of a ring of positive couplings
        let n = 8;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, (i + 1) % n)] = 1.0;
            a[((i + 1) % n, i)] = 1.0;
        }
        let a = BlockSymMatrix::new(n, 1, a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
        let s = ProductStiefelPoint::from_signs(&x, 3).unwrap();
        assert!(objective::riemannian_gradient(&a, &s).unwrap().norm() < 1e-14);
        let r = socp_probe(&a, &s, 30, 1, 1e-8, None).unwrap();
        assert!(!r.is_socp);
        assert!(r.min_quadform < 0.0);
        let w = r.witness.unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-12);
        let rep = solve_from(&a, s.clone(), &SolverConfig::new(3, 1), None).unwrap();
        assert!(matches!(rep.status, SolveStatus::Escaped(k) if k >= 1));
        assert!(rep.certified, "{:?}", rep.verdict);
    }

    #[test]
    fn rounding_examples() {
        let inst = gen_od_sync(5, 3, 0.0, 1).unwrap();
        let o = inst.truth.as_ref().unwrap().blocks();
        let s = inst.truth.as_ref().unwrap().embed(5).unwrap();
        let r = round_to_orthogonal(&s).unwrap();
        for i in 0..5 {
            assert!((&r[i] - &o[i] * o[0].transpose()).amax() < 1e-12);
            assert!(linalg::orthogonality_defect(&r[i]) < 1e-12);
        }
        let s1 = ProductStiefelPoint::from_signs(&[1.0, -1.0, -1.0], 2).unwrap();
        let r = round_to_orthogonal(&s1).unwrap();
        let signs: Vec<f64> = r.iter().map(|m| m[(0, 0)]).collect();
        assert_eq!(signs, vec![1.0, -1.0, -1.0]);
        let rand = random_point(5, 1, 3, 0).unwrap();
        assert!(matches!(
            round_to_orthogonal(&rand),
            Err(Error::NotRankD { .. })
        ));
    }

    #[test]
    fn alignment_error_examples() {
        let n = 9;
        let x: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let truth = Truth::Signs(x.clone());
        let s = truth.embed(2).unwrap();
        assert!(alignment_error(&s, Some(&truth)).unwrap().abs() < 1e-12);
        let mut y = x.clone();
        y[3] = -y[3];
        let s = ProductStiefelPoint::from_signs(&y, 1).unwrap();
        let nf = n as f64;
        assert!((alignment_error(&s, Some(&truth)).unwrap() - (4.0 * nf - 4.0) / nf).abs() < 1e-12);
        let s = random_point(n, 1, 3, 4).unwrap();
        assert!(alignment_error(&s, Some(&truth)).unwrap() > 0.0);
        assert!(matches!(
            alignment_error(&s, None),
            Err(Error::MissingTruth)
        ));
    }
}
