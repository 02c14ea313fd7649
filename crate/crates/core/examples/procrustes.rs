//! Generalized orthogonal Procrustes: recover the rotations relating noisy
//! copies of one point cloud.

use bmsync::models::gen_procrustes;
use bmsync::solver::{alignment_error, solve_with_reference, SolverConfig};

fn main() -> bmsync::Result<()> {
    let (n, d, m) = (40, 3, 9);
    for sigma in [0.1, 0.5, 1.0] {
        let inst = gen_procrustes(n, d, m, sigma, 21, None)?;
        let rep = solve_with_reference(
            &inst.a,
            d,
            &SolverConfig::new(2 * d + 2, 1),
            inst.truth.as_ref(),
        )?;
        println!(
            "sigma {sigma:.1}  {}  certified {}  p_min_benign {:?}  alignment {:.3e}",
            rep.status,
            rep.certified,
            rep.certificate.p_min_benign,
            alignment_error(&rep.final_point, inst.truth.as_ref())?
        );
    }
    Ok(())
}
