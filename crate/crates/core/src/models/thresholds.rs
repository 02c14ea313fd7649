use crate::error::{Error, Result};

/// Inputs to the closed-form landscape conditions. `n` is real so that the
/// formulas can be evaluated off the integers. Absolute constants that the
/// theory leaves unspecified (`c`, `c0`) are explicit and conventionally 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorollaryQuery {
    Z2 {
        n: f64,
        p: usize,
    },
    Kuramoto {
        n: f64,
        p: usize,
        gamma: f64,
    },
    Sbm {
        p: usize,
        c0: f64,
    },
    OdSync {
        n: f64,
        d: usize,
        p: usize,
        c: f64,
    },
    Procrustes {
        n: f64,
        d: usize,
        m: usize,
        p: usize,
        gamma: f64,
        /// `‖Ā‖`, the largest singular value of the clean cloud.
        a_bar_norm: f64,
        /// `σ_max(Ā)/σ_min(Ā)`.
        kappa: f64,
        c: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// The landscape is benign when the noise level `σ` is at most the bound.
    MaxSigma,
    /// ... when the repulsion probability `θ` is at most the bound.
    MaxTheta,
    /// ... when `(a − b)/√(a + b)` is at least the bound.
    MinSnr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryBound {
    pub bound: f64,
    pub kind: BoundKind,
    pub description: String,
    /// The bound carries an absolute constant the theory does not fix.
    pub constant_unspecified: bool,
}

fn undefined(msg: String) -> Error {
    Error::ThresholdUndefined(msg)
}

fn need_p(p: usize, min: usize, what: &str) -> Result<()> {
    if p < min {
        Err(undefined(format!(
            "{what} requires p >= {min}, got p = {p}"
        )))
    } else {
        Ok(())
    }
}

fn need_n(n: f64) -> Result<()> {
    if n > 1.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("n must exceed 1, got {n}")))
    }
}

pub fn corollary_thresholds(query: &CorollaryQuery) -> Result<CorollaryBound> {
    match *query {
        CorollaryQuery::Z2 { n, p } => {
            need_p(p, 4, "the Z2 bound")?;
            need_n(n)?;
            let p = p as f64;
            Ok(CorollaryBound {
                bound: (p - 3.0) / (4.0 * (p + 1.0)) * (n / n.ln()).sqrt(),
                kind: BoundKind::MaxSigma,
                description: "sigma <= (p-3)/(4(p+1)) sqrt(n/log n)".into(),
                constant_unspecified: false,
            })
        }
        CorollaryQuery::Kuramoto { n, p, gamma } => {
            need_p(p, 4, "the signed Kuramoto bound")?;
            need_n(n)?;
            if !(gamma >= 0.0) {
                return Err(Error::Parameter(format!(
                    "gamma must be nonnegative, got {gamma}"
                )));
            }
            let p = p as f64;
            let bound = 0.5 - (p + 1.0) / (p - 3.0) * (3.0 * (gamma + 1.0) * n.ln() / n).sqrt();
            Ok(CorollaryBound {
                bound,
                kind: BoundKind::MaxTheta,
                description: "theta <= 1/2 - (p+1)/(p-3) sqrt(3(gamma+1) log n / n)".into(),
                constant_unspecified: false,
            })
        }
        CorollaryQuery::Sbm { p, c0 } => {
            need_p(p, 4, "the SBM bound")?;
            let p = p as f64;
            Ok(CorollaryBound {
                bound: 2.0 * c0 * (p + 1.0) / (p - 3.0),
                kind: BoundKind::MinSnr,
                description:
                    "(a-b)/sqrt(a+b) >= 2 C0' (p+1)/(p-3), p_in = a log n/n, p_out = b log n/n"
                        .into(),
                constant_unspecified: true,
            })
        }
        CorollaryQuery::OdSync { n, d, p, c } => {
            need_p(p, d + 3, "the O(d) bound")?;
            need_n(n)?;
            let (p, d) = (p as f64, d as f64);
            let bound = (p - d - 2.0) / (p + 3.0 * d - 2.0) * n.sqrt()
                / (c * d.sqrt() * (d.sqrt() + 4.0 * n.ln().sqrt()));
            Ok(CorollaryBound {
                bound,
                kind: BoundKind::MaxSigma,
                description:
                    "sigma <= (p-d-2)/(p+3d-2) sqrt(n) / (C sqrt(d) (sqrt(d) + 4 sqrt(log n)))"
                        .into(),
                constant_unspecified: true,
            })
        }
        CorollaryQuery::Procrustes {
            n,
            d,
            m,
            p,
            gamma,
            a_bar_norm,
            kappa,
            c,
        } => {
            need_n(n)?;
            if !(kappa >= 1.0) {
                return Err(Error::Parameter(format!(
                    "kappa must be at least 1, got {kappa}"
                )));
            }
            let (pf, df, mf) = (p as f64, d as f64, m as f64);
            let k2 = kappa * kappa;
            let num = pf + df - 2.0 * k2 * df - 2.0;
            if !(num > 0.0) {
                return Err(undefined(format!(
                    "the Procrustes bound requires p > 2 kappa^2 d + 2 - d, got p = {p}"
                )));
            }
            let den = pf + df + 2.0 * k2 * df - 2.0;
            let noise = (n * df).sqrt() + mf.sqrt() + (2.0 * gamma * n * n.ln()).sqrt();
            let bound = num / den * n.sqrt() * a_bar_norm / (c * k2 * k2 * df.sqrt() * noise);
            Ok(CorollaryBound {
                bound,
                kind: BoundKind::MaxSigma,
                description: "sigma <= (p+d-2k^2d-2)/(p+d+2k^2d-2) sqrt(n)|A_bar| / (C k^4 sqrt(d) (sqrt(nd)+sqrt(m)+sqrt(2 gamma n log n)))"
                    .into(),
                constant_unspecified: true,
            })
        }
    }
}
