//! Randomized checks of the inequalities behind the benign-landscape
//! theorem, plus the Monte Carlo average over the proof's random direction.

use bmsync::manifold::{proof_direction, random_point};
use bmsync::models::gen_od_sync;
use bmsync::objective::hessian_quadratic_form;
use bmsync::objective::lemmas::{expected_proof_quadform, LemmaBattery};
use bmsync::rng::{gaussian_matrix, rng_from_seed};

fn main() -> bmsync::Result<()> {
    let report = LemmaBattery::default().run();
    for c in &report.checks {
        println!(
            "{:18} violations {}/{}  worst margin {:.3e}",
            c.name, c.violations, c.trials, c.worst_margin
        );
    }

    let (n, d, p) = (6, 2, 5);
    let inst = gen_od_sync(n, d, 0.5, 2)?;
    let o_hat = inst.truth.as_ref().unwrap().blocks();
    let s = random_point(n, d, p, 3)?;
    let mut rng = rng_from_seed(4);
    let draws = 20_000;
    let mut sum = 0.0;
    for _ in 0..draws {
        let phi = gaussian_matrix(&mut rng, d, p);
        sum += hessian_quadratic_form(&inst.a, &proof_direction(&s, &o_hat, &phi)?)?;
    }
    println!(
        "proof-direction average {:.4}   closed form {:.4}",
        sum / draws as f64,
        expected_proof_quadform(&inst.a, &s, &o_hat)?
    );
    Ok(())
}
