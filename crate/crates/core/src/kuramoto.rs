//! The gradient flow `dSᵢ/dt = P_{Sᵢ}(Σⱼ AᵢⱼSⱼ)` of the Burer-Monteiro
//! energy, integrated by projected explicit Euler. With `d = 1` and `p = 2`
//! it is the homogeneous Kuramoto model on the coupling graph.

use std::io::Write;

use nalgebra::DMatrix;

use crate::blockmat::BlockSymMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::{self, random_point, ProductStiefelPoint};
use crate::solver::step_with_change;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub p: usize,
    /// `None` means `1e-2 / λ_max(A)`.
    pub dt: Option<f64>,
    pub t_max: f64,
    pub sync_tol: f64,
    /// Record every this many steps; the final state is always recorded.
    pub record_every: usize,
    /// Stop as soon as the state synchronizes.
    pub stop_on_sync: bool,
    pub seed: u64,
}

impl FlowConfig {
    pub fn new(p: usize, t_max: f64, seed: u64) -> Self {
        FlowConfig {
            p,
            dt: None,
            t_max,
            sync_tol: 1e-8,
            record_every: 10,
            stop_on_sync: true,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Parameter(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.sync_tol >= 0.0) {
            return Err(Error::Parameter("sync_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub order_params: Vec<f64>,
    pub final_state: ProductStiefelPoint,
    pub synchronized: bool,
    /// `minᵢⱼ ⟨Sᵢ, Sⱼ⟩` at the final state.
    pub min_pair_inner: f64,
    pub steps: usize,
    /// Final step size after any halvings.
    pub dt: f64,
}

impl FlowTrace {
    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trace is nonempty")
    }

    pub fn final_energy(&self) -> f64 {
        *self.energies.last().expect("trace is nonempty")
    }

    pub fn final_order_param(&self) -> f64 {
        *self.order_params.last().expect("trace is nonempty")
    }

    /// One `t,energy,order_param` row per recorded step.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,energy,order_param")?;
        for k in 0..self.times.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e}",
                self.times[k], self.energies[k], self.order_params[k]
            )?;
        }
        Ok(())
    }
}

/// Every block must be a multiple of `I_d`.
fn check_scalar_coupling(a: &BlockSymMatrix) -> Result<()> {
    let d = a.d();
    if d == 1 {
        return Ok(());
    }
    let tol = 1e-12 * linalg::max_abs(a.entries()).max(1.0);
    for i in 0..a.n() {
        for j in 0..a.n() {
            let b = a.block(i, j);
            let c = b[(0, 0)];
            for r in 0..d {
                for s in 0..d {
                    let expect = if r == s { c } else { 0.0 };
                    if (b[(r, s)] - expect).abs() > tol {
                        return Err(Error::Validation(format!(
                            "coupling block ({i}, {j}) is not a multiple of the identity"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Runs the flow from a random start drawn with `cfg.seed`.
pub fn flow(a: &BlockSymMatrix, d: usize, cfg: &FlowConfig) -> Result<FlowTrace> {
    if a.d() != d {
        return Err(Error::Shape(format!(
            "coupling has block size {}, expected {d}",
            a.d()
        )));
    }
    cfg.validate()?;
    let start = random_point(a.n(), d, cfg.p, cfg.seed)?;
    flow_from(a, start, cfg)
}

pub fn flow_from(
    a: &BlockSymMatrix,
    start: ProductStiefelPoint,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    if a.n() != start.n() || a.d() != start.d() {
        return Err(Error::Shape(
            "start point does not match the coupling".into(),
        ));
    }
    cfg.validate()?;
    check_scalar_coupling(a)?;
    let lambda_max = a.op_norm().max(f64::MIN_POSITIVE);
    let mut dt = cfg.dt.unwrap_or(1e-2 / lambda_max);
    let d = start.d() as f64;
    let record_every = cfg.record_every.max(1);

    let mut s = start;
    let mut t = 0.0;
    let mut f = energy_of(a, &s);
    let mut times = vec![0.0];
    let mut energies = vec![f];
    let mut order_params = vec![order_parameter(&s)];
    let mut steps = 0;
    let mut halvings = 0;
    let mut min_inner = min_pairwise_inner(&s);

    while t < cfg.t_max && !(cfg.stop_on_sync && min_inner >= d - cfg.sync_tol) {
        let h = dt.min(cfg.t_max - t);
        let velocity = manifold::project_stack(&s, &(a.entries() * s.stack()));
        let (next, df) = step_with_change(a, &s, &velocity, h)?;
        if df > 1e-8 * f.abs() {
            dt *= 0.5;
            halvings += 1;
            if halvings > 60 {
                return Err(Error::StepUnderflow { halvings });
            }
            continue;
        }
        s = next;
        t += h;
        f = energy_of(a, &s);
        steps += 1;
        min_inner = min_pairwise_inner(&s);
        let done = t >= cfg.t_max || (cfg.stop_on_sync && min_inner >= d - cfg.sync_tol);
        if steps % record_every == 0 || done {
            times.push(t);
            energies.push(f);
            order_params.push(order_parameter(&s));
        }
    }
    Ok(FlowTrace {
        times,
        energies,
        order_params,
        synchronized: min_inner >= d - cfg.sync_tol,
        min_pair_inner: min_inner,
        final_state: s,
        steps,
        dt,
    })
}

fn energy_of(a: &BlockSymMatrix, s: &ProductStiefelPoint) -> f64 {
    -0.5 * linalg::frob_inner(&(a.entries() * s.stack()), s.stack())
}

/// `sᵢ = (cos 2πqi/n, sin 2πqi/n)`.
pub fn twisted_state(n: usize, q: i64) -> Result<ProductStiefelPoint> {
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    let mut stack = DMatrix::zeros(n, 2);
    for i in 0..n {
        // reduce the phase index first so large q stays exact
        let k = (q.rem_euclid(n as i64) as usize * i) % n;
        let phase = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        stack[(i, 0)] = phase.cos();
        stack[(i, 1)] = phase.sin();
    }
    ProductStiefelPoint::new(n, 1, stack)
}

/// Adjacency matrix of the cycle graph `Cₙ`.
pub fn ring_coupling(n: usize) -> Result<BlockSymMatrix> {
    if n < 3 {
        return Err(Error::Parameter(format!("a ring needs n >= 3, got {n}")));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    BlockSymMatrix::new(n, 1, a)
}

/// `‖Σᵢ Sᵢ‖_F / (n√d)`.
pub fn order_parameter(s: &ProductStiefelPoint) -> f64 {
    let (n, d) = (s.n(), s.d());
    let mut sum = DMatrix::zeros(d, s.p());
    for i in 0..n {
        sum += s.block(i);
    }
    sum.norm() / (n as f64 * (d as f64).sqrt())
}

/// `minᵢⱼ ⟨Sᵢ, Sⱼ⟩`, equal to `d` exactly when all blocks coincide.
pub fn min_pairwise_inner(s: &ProductStiefelPoint) -> f64 {
    let (n, d) = (s.n(), s.d());
    let g = s.gram();
    let mut m = d as f64;
    for i in 0..n {
        for j in (i + 1)..n {
            m = m.min(g.view((i * d, j * d), (d, d)).trace());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::riemannian_gradient;

    fn pair_state(phi0: f64) -> ProductStiefelPoint {
        ProductStiefelPoint::new(
            2,
            1,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, phi0.cos(), phi0.sin()]),
        )
        .unwrap()
    }

    #[test]
    fn two_oscillators_match_closed_form() {
        let a = BlockSymMatrix::new(2, 1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
            .unwrap();
        let phi0 = 2.0;
        let cfg = FlowConfig {
            dt: Some(1e-5),
            stop_on_sync: false,
            record_every: 1000,
            ..FlowConfig::new(2, 1.0, 0)
        };
        let tr = flow_from(&a, pair_state(phi0), &cfg).unwrap();
        assert!((tr.final_time() - 1.0).abs() < 1e-12);
        let s = &tr.final_state;
        let b0 = s.block(0);
        let b1 = s.block(1);
        let phi = (b0[0] * b1[1] - b0[1] * b1[0]).atan2(b0.dot(&b1));
        let exact = 2.0 * ((phi0 / 2.0).tan() * (-2.0f64).exp()).atan();
        assert!((phi - exact).abs() < 1e-4, "{phi} vs {exact}");
    }

    #[test]
    fn synchronized_state_is_an_equilibrium() {
        let a = ring_coupling(6).unwrap();
        let s = twisted_state(6, 0).unwrap();
        let cfg = FlowConfig {
            stop_on_sync: false,
            ..FlowConfig::new(2, 0.5, 0)
        };
        let tr = flow_from(&a, s, &cfg).unwrap();
        assert!(tr.synchronized);
        let f0 = tr.energies[0];
        assert!(tr.energies.iter().all(|&f| (f - f0).abs() < 1e-12));
        assert!((tr.final_order_param() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn twisted_states_are_critical() {
        let s = twisted_state(6, 0).unwrap();
        assert!((min_pairwise_inner(&s) - 1.0).abs() < 1e-15);
        for n in [5, 6, 11, 20] {
            let a = ring_coupling(n).unwrap();
            let s = twisted_state(n, 1).unwrap();
            assert!(riemannian_gradient(&a, &s).unwrap().norm() < 1e-12);
            assert!(order_parameter(&s) < 1e-12);
        }
    }

    #[test]
    fn order_parameter_examples() {
        let s = ProductStiefelPoint::from_signs(&[1.0; 4], 3).unwrap();
        assert!((order_parameter(&s) - 1.0).abs() < 1e-15);
        let s = ProductStiefelPoint::from_signs(&[1.0, -1.0], 2).unwrap();
        assert_eq!(order_parameter(&s), 0.0);
    }

    #[test]
    fn energy_dissipates_and_stays_feasible() {
        let a = crate::models::gen_signed_kuramoto(40, 0.2, 3).unwrap().a;
        let cfg = FlowConfig {
            record_every: 1,
            ..FlowConfig::new(3, 2.0, 9)
        };
        let tr = flow(&a, 1, &cfg).unwrap();
        for w in tr.energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-8 * w[0].abs());
        }
        assert!(tr.final_state.stiefel_defect() < 1e-10);
        assert!(tr.synchronized);
    }

    #[test]
    fn rejects_non_scalar_coupling() {
        let mut m = DMatrix::<f64>::identity(4, 4);
        m[(0, 3)] = 0.5;
        m[(3, 0)] = 0.5;
        let a = BlockSymMatrix::new(2, 2, m).unwrap();
        assert!(matches!(
            flow(&a, 2, &FlowConfig::new(3, 1.0, 0)),
            Err(Error::Validation(_))
        ));
    }
}
