mod common;

use bmsync::manifold::{random_point, random_tangent};
use bmsync::models::{generate, ModelKind, ModelParams};
use bmsync::objective::{energy, hessian_quadratic_form, riemannian_gradient};
use bmsync::rng::derive_seed;
use bmsync::solver::{solve, SolverConfig};
use common::{fd_first, fd_second, loop_energy, rel_err};

fn instance(kind: ModelKind, n: usize, d: usize, seed: u64) -> bmsync::models::ModelInstance {
    let params = ModelParams {
        n,
        d,
        sigma: 0.5,
        theta: 0.2,
        ..Default::default()
    };
    generate(kind, &params, seed).unwrap()
}

#[test]
fn energy_matches_block_loops() {
    for (k, kind) in ModelKind::ALL.into_iter().enumerate() {
        let inst = instance(kind, 8, 2, k as u64);
        let s = random_point(8, inst.d, inst.d + 2, 3).unwrap();
        let e = energy(&inst.a, &s).unwrap();
        assert!(rel_err(e, loop_energy(&inst.a, &s), 1.0) < 1e-12);
    }
}

#[test]
fn gradient_matches_central_differences() {
    for trial in 0..60u64 {
        let kind = ModelKind::ALL[trial as usize % 5];
        let n = 2 * (2 + (trial as usize * 7) % 9);
        let d = kind.fixed_d().unwrap_or(1 + trial as usize % 3);
        let p = d + 1 + (trial as usize % 3);
        let inst = instance(kind, n, d, trial);
        let s = random_point(n, d, p, derive_seed(&[trial, 1])).unwrap();
        let dir = random_tangent(&s, derive_seed(&[trial, 2]));
        let g = riemannian_gradient(&inst.a, &s).unwrap();
        let exact = g.inner(&dir);
        let fd = fd_first(&inst.a, &dir, 1e-6);
        let scale = inst.a.op_norm() * dir.norm();
        assert!(
            rel_err(exact, fd, 1e-3 * scale) < 1e-5,
            "{kind}: {exact} vs {fd}"
        );
    }
}

#[test]
fn hessian_matches_second_differences_at_critical_points() {
    for trial in 0..8u64 {
        let kind = [ModelKind::Z2, ModelKind::OdSync][trial as usize % 2];
        let d = kind.fixed_d().unwrap_or(2);
        let inst = instance(kind, 12, d, trial);
        let rep = solve(&inst.a, d, &SolverConfig::new(d + 2, trial)).unwrap();
        let s = &rep.final_point;
        for k in 0..3 {
            let dir = random_tangent(s, derive_seed(&[trial, k]));
            let exact = hessian_quadratic_form(&inst.a, &dir).unwrap();
            let fd = fd_second(&inst.a, &dir, 1e-4);
            let scale = inst.a.op_norm() * dir.norm() * dir.norm();
            assert!(rel_err(exact, fd, 1e-2 * scale) < 1e-3, "{exact} vs {fd}");
        }
    }
}
