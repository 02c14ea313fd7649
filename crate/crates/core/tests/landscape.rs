mod common;

use bmsync::models::{apply_adversary, gen_adversary, gen_od_sync, gen_sbm, gen_z2, Truth};
use bmsync::objective::{
    benign_threshold_p, build_certificate, certify_global, DEFAULT_TOL_GRAD, DEFAULT_TOL_PSD,
};
use bmsync::rng::derive_seed;
use bmsync::solver::{alignment_error, solve, solve_with_reference, SolverConfig};
use common::gram_distance;

/// Once one solve certifies, every other random start that certifies
/// lands on the same `SSᵀ`.
#[test]
fn certified_solutions_share_one_gram_matrix() {
    let inst = gen_z2(80, 2.0, 4).unwrap();
    let reports: Vec<_> = (0..12)
        .map(|k| solve(&inst.a, 1, &SolverConfig::new(4, derive_seed(&[4, k]))).unwrap())
        .collect();
    let certified: Vec<_> = reports.iter().filter(|r| r.certified).collect();
    assert!(certified.len() >= 10);
    for r in &certified[1..] {
        assert!(gram_distance(&r.final_point, &certified[0].final_point) <= 1e-6 * 80.0);
    }
}

/// Above the width threshold from the certificate spectrum, random starts
/// never stop at a spurious point.
#[test]
fn above_threshold_p_every_start_certifies() {
    let inst = gen_od_sync(20, 2, 0.2, 7).unwrap();
    let first = solve(&inst.a, 2, &SolverConfig::new(6, 0)).unwrap();
    assert!(first.certified);
    let c = &first.certificate;
    let p = benign_threshold_p(c.lambda_max(), c.kth_gap, 2).unwrap();
    assert_eq!(Some(p), c.p_min_benign);
    for seed in 1..15 {
        let rep = solve(&inst.a, 2, &SolverConfig::new(p, seed)).unwrap();
        assert!(rep.certified, "seed {seed}: {}", rep.verdict.reason);
        assert!(gram_distance(&rep.final_point, &first.final_point) <= 1e-5);
    }
}

#[test]
fn planted_truth_certifies_for_clean_instances() {
    let z2 = gen_z2(40, 0.0, 1).unwrap();
    let s = z2.truth.as_ref().unwrap().embed(3).unwrap();
    let c = build_certificate(&z2.a, &s).unwrap();
    assert!(certify_global(&c, DEFAULT_TOL_GRAD, DEFAULT_TOL_PSD).certified);
    assert!((c.kth_gap - 40.0).abs() <= 1e-9 * 40.0);
    assert!((c.lambda_max() - 40.0).abs() <= 1e-9 * 40.0);

    let od = gen_od_sync(15, 3, 0.0, 2).unwrap();
    let s = od.truth.as_ref().unwrap().embed(8).unwrap();
    let c = build_certificate(&od.a, &s).unwrap();
    assert!(certify_global(&c, DEFAULT_TOL_GRAD, DEFAULT_TOL_PSD).certified);
    // L = n I − OOᵀ, so every nonzero eigenvalue is n
    assert!((c.kth_gap - 15.0).abs() <= 1e-9 * 15.0);
}

#[test]
fn adversary_keeps_sbm_certified() {
    let n = 120;
    let mut ok = 0;
    for seed in 0..10u64 {
        let inst = gen_sbm(n, 0.5, 0.1, seed).unwrap();
        let x = inst.truth.as_ref().unwrap().signs().unwrap().to_vec();
        let adv = gen_adversary(&x, 0.2, 0.5, derive_seed(&[seed, 1])).unwrap();
        let hit = apply_adversary(&inst, &adv).unwrap();

        let planted = Truth::Signs(x).embed(4).unwrap();
        let before = build_certificate(&inst.a, &planted).unwrap();
        let after = build_certificate(&hit.a, &planted).unwrap();
        let gap = (after.l.entries() - before.l.entries() - adv.laplacian())
            .abs()
            .max();
        assert!(gap <= 1e-12 * hit.a.op_norm().max(1.0));

        let rep = solve_with_reference(&hit.a, 1, &SolverConfig::new(4, seed), hit.truth.as_ref())
            .unwrap();
        let err = alignment_error(&rep.final_point, hit.truth.as_ref()).unwrap();
        if rep.certified && err <= 1e-6 * n as f64 {
            ok += 1;
        }
    }
    assert!(ok >= 9, "{ok}/10");
}
