//! The twisted state on a ring is a stable equilibrium at p = 2 that is not
//! globally optimal. Lifting to p = 3 turns it into a saddle the solver
//! escapes.

use bmsync::kuramoto::{ring_coupling, twisted_state};
use bmsync::objective::{
    build_certificate, certify_global, riemannian_gradient, DEFAULT_TOL_GRAD, DEFAULT_TOL_PSD,
};
use bmsync::solver::{socp_probe, solve_from, SolverConfig};
use bmsync::ProductStiefelPoint;
use nalgebra::DMatrix;

fn main() -> bmsync::Result<()> {
    let n = 20;
    let a = ring_coupling(n)?;
    let s = twisted_state(n, 1)?;
    let grad = riemannian_gradient(&a, &s)?.norm();
    let probe = socp_probe(&a, &s, 50, 1, 1e-8, None)?;
    let cert = build_certificate(&a, &s)?;
    let v = certify_global(&cert, DEFAULT_TOL_GRAD, DEFAULT_TOL_PSD);
    println!(
        "p = 2: grad {grad:.2e}, second-order probe passes: {}, {}",
        probe.is_socp, v.reason
    );

    let mut lifted = DMatrix::zeros(n, 3);
    lifted.columns_mut(0, 2).copy_from(s.stack());
    let start = ProductStiefelPoint::new(n, 1, lifted)?;
    let rep = solve_from(&a, start, &SolverConfig::new(3, 2), None)?;
    println!(
        "p = 3: {} with {} escapes, energy {:.6} (optimum {:.6}), certified {}",
        rep.status,
        rep.escapes,
        rep.energy(),
        -(n as f64),
        rep.certified
    );
    Ok(())
}
