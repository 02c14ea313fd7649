//! Solve a noisy Z2 instance and check the certificate at the answer.

use bmsync::models::gen_z2;
use bmsync::solver::{alignment_error, solve_with_reference, SolverConfig};

fn main() -> bmsync::Result<()> {
    let n = 200;
    let inst = gen_z2(n, 1.0, 7)?;
    let rep = solve_with_reference(&inst.a, 1, &SolverConfig::new(4, 1), inst.truth.as_ref())?;
    let c = &rep.certificate;
    println!("status        {}", rep.status);
    println!("iterations    {}", rep.iterations);
    println!("energy        {:.10}", rep.energy());
    println!("verdict       {}", rep.verdict.reason);
    println!("lambda_2      {:.6}", c.kth_gap);
    println!("lambda_max    {:.6}", c.lambda_max());
    println!("p_min_benign  {:?}", c.p_min_benign);
    println!(
        "alignment     {:.3e}",
        alignment_error(&rep.final_point, inst.truth.as_ref())?
    );
    Ok(())
}
