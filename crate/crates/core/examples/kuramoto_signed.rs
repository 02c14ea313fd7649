//! High-dimensional Kuramoto flow on a signed network: mostly attractive
//! couplings with a fraction theta of repulsive edges.

use bmsync::kuramoto::{flow, FlowConfig};
use bmsync::models::gen_signed_kuramoto;

fn main() -> bmsync::Result<()> {
    let n = 200;
    for theta in [0.1, 0.25, 0.4] {
        let inst = gen_signed_kuramoto(n, theta, 3)?;
        let cfg = FlowConfig {
            sync_tol: 1e-6,
            ..FlowConfig::new(4, 50.0, 9)
        };
        let tr = flow(&inst.a, 1, &cfg)?;
        println!(
            "theta {theta:.2}  synchronized {:5}  t {:8.4}  order {:.8}  min <si,sj> {:.8}",
            tr.synchronized,
            tr.final_time(),
            tr.final_order_param(),
            tr.min_pair_inner
        );
    }
    Ok(())
}
