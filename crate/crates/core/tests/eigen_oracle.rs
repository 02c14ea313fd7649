mod common;

use bmsync::blockmat::eigen_sym;
use bmsync::models::{gen_od_sync, gen_procrustes, gen_signed_kuramoto, gen_z2};
use bmsync::objective::build_certificate;
use bmsync::solver::{solve, SolverConfig};
use common::jacobi_eigenvalues;

#[test]
fn spectra_match_jacobi() {
    let instances = [
        gen_z2(30, 0.7, 1).unwrap(),
        gen_signed_kuramoto(25, 0.3, 2).unwrap(),
        gen_od_sync(10, 3, 0.4, 3).unwrap(),
        gen_procrustes(8, 2, 5, 0.5, 4, None).unwrap(),
    ];
    for inst in &instances {
        let fast = eigen_sym(&inst.a).unwrap().eigenvalues;
        let slow = jacobi_eigenvalues(inst.a.entries());
        let scale = inst.a.op_norm();
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() <= 1e-10 * scale, "{x} vs {y}");
        }
    }
}

#[test]
fn certificate_spectrum_matches_jacobi() {
    let inst = gen_od_sync(12, 2, 0.3, 9).unwrap();
    let rep = solve(&inst.a, 2, &SolverConfig::new(6, 1)).unwrap();
    let cert = build_certificate(&inst.a, &rep.final_point).unwrap();
    let slow = jacobi_eigenvalues(cert.l.entries());
    let scale = cert.a_op_norm;
    for (x, y) in cert.spectrum.eigenvalues.iter().zip(&slow) {
        assert!((x - y).abs() <= 1e-10 * scale);
    }
    assert!((cert.kth_gap - slow[2]).abs() <= 1e-10 * scale);
}
