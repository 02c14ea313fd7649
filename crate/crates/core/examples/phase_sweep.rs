//! A small Z2 phase diagram: certified fraction against noise level.

use bmsync::cli::{run_sweep, Axis, PChoice, SweepSpec};
use bmsync::models::{ModelKind, ModelParams};

fn main() -> bmsync::Result<()> {
    let params = ModelParams {
        n: 100,
        ..Default::default()
    };
    let mut spec = SweepSpec::new(
        ModelKind::Z2,
        params,
        Axis::parse("sigma=0.5,1,1.5,2,3,4")?,
        Axis::none(),
    );
    spec.trials = 10;
    spec.p = PChoice::Fixed(4);
    let rows = run_sweep(&spec)?;
    println!("sigma  certified  aligned");
    for chunk in rows.chunks(spec.trials) {
        let cert = chunk.iter().filter(|r| r.certified).count();
        let aligned = chunk.iter().filter(|r| r.aligned == Some(true)).count();
        println!(
            "{:5.2}  {cert:>5}/{}  {aligned:>5}/{}",
            chunk[0].axis1, spec.trials, spec.trials
        );
    }
    Ok(())
}
