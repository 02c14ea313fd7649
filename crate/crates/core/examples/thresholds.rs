//! Closed-form landscape thresholds: the rank needed for a benign landscape
//! given a certificate spectrum, and the per-model noise bounds.

use bmsync::models::{corollary_thresholds, CorollaryQuery};
use bmsync::objective::{alpha_p_min, benign_threshold_p};

fn main() -> bmsync::Result<()> {
    for (lmax, lk, d) in [(2.0, 1.0, 1), (3.0, 1.0, 1), (10.0, 9.0, 3)] {
        println!(
            "lambda_max {lmax}, lambda_k {lk}, d {d}:  p >= {}",
            benign_threshold_p(lmax, lk, d)?
        );
    }
    for alpha in [0.0, 0.2, 0.5, 0.9] {
        println!("alpha {alpha}:  p >= {:?}", alpha_p_min(alpha));
    }
    let n = 1000.0;
    for q in [
        CorollaryQuery::Z2 { n, p: 8 },
        CorollaryQuery::Kuramoto {
            n,
            p: 8,
            gamma: 0.0,
        },
        CorollaryQuery::Sbm { p: 8, c0: 1.0 },
        CorollaryQuery::OdSync {
            n,
            d: 3,
            p: 8,
            c: 1.0,
        },
    ] {
        let b = corollary_thresholds(&q)?;
        println!("{:?}  {:.5}  {}", b.kind, b.bound, b.description);
    }
    Ok(())
}
