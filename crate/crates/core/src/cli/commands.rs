use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde_json::json;

use super::sweep::{run_sweep, with_adversary, write_sweep_csv, Axis, PChoice, SweepSpec};
use super::*;
use crate::blockmat::BlockSymMatrix;
use crate::error::{Error, Result};
use crate::kuramoto::{flow, flow_from, ring_coupling, twisted_state, FlowConfig};
use crate::manifold::ProductStiefelPoint;
use crate::models::{
    corollary_thresholds, generate, read_instance, write_instance, CorollaryQuery,
};
use crate::objective::{build_certificate, certify_global, lemmas::LemmaBattery};
use crate::rng::derive_seed;
use crate::solver::{alignment_error, solve_with_reference, SolverConfig};

pub(super) fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Certify(a) => cmd_certify(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Kuramoto(a) => cmd_kuramoto(&a, out),
        Command::Thresholds(a) => cmd_thresholds(&a, out),
        Command::Selftest(a) => cmd_selftest(&a, out),
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_usize(x: Option<usize>) -> String {
    x.map_or_else(|| "none".into(), |v| v.to_string())
}

/// Text form of a point: an `n d p` header, then the `n·d` rows of the
/// stacked matrix.
pub fn candidate_to_string(s: &ProductStiefelPoint) -> String {
    let mut text = format!("{} {} {}\n", s.n(), s.d(), s.p());
    for row in s.stack().row_iter() {
        let line: Vec<String> = row.iter().map(|&v| num(v)).collect();
        let _ = writeln!(text, "{}", line.join(" "));
    }
    text
}

pub fn write_candidate(s: &ProductStiefelPoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, candidate_to_string(s)).map_err(|e| Error::io(path, e))
}

/// Reads and validates a candidate point.
pub fn read_candidate(path: impl AsRef<Path>) -> Result<ProductStiefelPoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let parse_err = |line: usize, msg: String| Error::Parse {
        line: line + 1,
        msg,
    };
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty candidate file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(hl, format!("bad header token {t:?}")))
        })
        .collect::<Result<_>>()?;
    let [n, d, p] = dims[..] else {
        return Err(parse_err(hl, "header must be `n d p`".into()));
    };
    let mut values = Vec::with_capacity(n * d * p);
    for (idx, line) in lines {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_err(idx, format!("bad value {t:?}")))
            })
            .collect::<Result<_>>()?;
        if row.len() != p {
            return Err(parse_err(
                idx,
                format!("expected {p} values, got {}", row.len()),
            ));
        }
        values.extend(row);
    }
    if values.len() != n * d * p {
        return Err(Error::Validation(format!(
            "candidate has {} rows, expected n*d = {}",
            values.len() / p.max(1),
            n * d
        )));
    }
    ProductStiefelPoint::new(n, d, DMatrix::from_row_slice(n * d, p, &values))
}

fn check_d(a: &BlockSymMatrix, d: Option<usize>) -> Result<usize> {
    match d {
        Some(d) if d != a.d() => Err(Error::Validation(format!(
            "--d {d} does not match the matrix block size {}",
            a.d()
        ))),
        _ => Ok(a.d()),
    }
}

fn solver_config(args: &SolverArgs, p: usize, seed: u64) -> SolverConfig {
    SolverConfig {
        max_iters: args.max_iters,
        grad_tol: args.grad_tol,
        escape_probes: args.probes,
        ..SolverConfig::new(p, seed)
    }
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = generate(args.model.model, &args.model.params(), args.seed)?;
    let inst = with_adversary(inst, args.adversary.spec(), args.seed)?;
    let meta = write_instance(&inst, &args.out)?;
    writeln!(out, "matrix: {}", args.out.display())?;
    writeln!(out, "meta: {}", meta.display())?;
    writeln!(out, "n: {}", inst.a.n())?;
    writeln!(out, "d: {}", inst.d)?;
    Ok(EXIT_OK)
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let (a, side) = read_instance(&args.matrix)?;
    let d = check_d(&a, args.d)?;
    let truth = match &side {
        Some(s) => s.truth()?,
        None => None,
    };
    let p = args.p.unwrap_or(2 * d + 2);
    let cfg = solver_config(&args.solver, p, args.seed);
    let rep = solve_with_reference(&a, d, &cfg, truth.as_ref())?;

    if let Some(path) = &args.trace {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (k, (e, g)) in rep
            .energy_trace
            .iter()
            .zip(&rep.grad_norm_trace)
            .enumerate()
        {
            writeln!(w, "{}", json!({"iter": k, "energy": e, "grad_norm": g}))
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    if let Some(path) = &args.out {
        write_candidate(&rep.final_point, path)?;
    }

    let c = &rep.certificate;
    writeln!(out, "status: {}", rep.status)?;
    writeln!(out, "iterations: {}", rep.iterations)?;
    writeln!(out, "escapes: {}", rep.escapes)?;
    writeln!(out, "energy: {}", num(rep.energy()))?;
    writeln!(out, "grad_norm: {}", num(rep.grad_norm()))?;
    writeln!(out, "certified: {}", rep.certified)?;
    writeln!(out, "verdict: {}", rep.verdict.reason)?;
    writeln!(out, "lambda_kth: {}", num(c.kth_gap))?;
    writeln!(out, "lambda_max: {}", num(c.lambda_max()))?;
    writeln!(out, "p_min_benign: {}", opt_usize(c.p_min_benign))?;
    if let Some(t) = &truth {
        let err = alignment_error(&rep.final_point, Some(t))?;
        writeln!(out, "alignment_error: {}", num(err))?;
    }
    Ok(if rep.certified {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    })
}

fn cmd_certify(args: &CertifyArgs, out: &mut dyn Write) -> Result<i32> {
    let (a, _) = read_instance(&args.matrix)?;
    let d = check_d(&a, args.d)?;
    let s = read_candidate(&args.candidate)?;
    if s.n() != a.n() || s.d() != d {
        return Err(Error::Shape(format!(
            "candidate is {}x{} blocks, matrix is {}x{}",
            s.n(),
            s.d(),
            a.n(),
            d
        )));
    }
    let c = build_certificate(&a, &s)?;
    let v = certify_global(&c, args.tol_grad, args.tol_psd);
    writeln!(out, "certified: {}", v.certified)?;
    writeln!(out, "verdict: {}", v.reason)?;
    writeln!(out, "residual: {}", num(c.grad_residual))?;
    writeln!(out, "residual_bound: {}", num(args.tol_grad * c.a_op_norm))?;
    writeln!(out, "lambda_min: {}", num(c.lambda_min()))?;
    writeln!(out, "lambda_kth: {}", num(c.kth_gap))?;
    writeln!(out, "lambda_max: {}", num(c.lambda_max()))?;
    writeln!(out, "p_min_benign: {}", opt_usize(c.p_min_benign))?;
    Ok(if v.certified {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    })
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let axis = |a: &Option<String>| a.as_deref().map_or(Ok(Axis::none()), Axis::parse);
    let mut spec = SweepSpec::new(
        args.model.model,
        args.model.params(),
        axis(&args.axis1)?,
        axis(&args.axis2)?,
    );
    spec.trials = args.trials;
    spec.base_seed = args.seed;
    spec.p = if args.p == "auto" {
        PChoice::Auto
    } else {
        PChoice::Fixed(args.p.parse().map_err(|_| {
            Error::Parameter(format!("--p must be an integer or auto, got {:?}", args.p))
        })?)
    };
    spec.solver = solver_config(&args.solver, 0, 0);
    spec.adversary = args.adversary.spec();
    spec.parallel = !args.serial;
    spec.validate()?;

    // open the output before the solves so an unwritable path fails fast
    let file = match &args.out {
        Some(path) => Some((File::create(path).map_err(|e| Error::io(path, e))?, path)),
        None => None,
    };
    let rows = run_sweep(&spec)?;
    match file {
        Some((f, path)) => {
            let mut w = BufWriter::new(f);
            write_sweep_csv(&rows, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(path, e))?;
            let certified = rows.iter().filter(|r| r.certified).count();
            writeln!(out, "rows: {}", rows.len())?;
            writeln!(out, "certified: {certified}")?;
            writeln!(out, "csv: {}", path.display())?;
        }
        None => write_sweep_csv(&rows, &mut *out)?,
    }
    Ok(EXIT_OK)
}

fn cmd_kuramoto(args: &KuramotoArgs, out: &mut dyn Write) -> Result<i32> {
    let a = if let Some(path) = &args.matrix {
        read_instance(path)?.0
    } else if args.ring {
        ring_coupling(args.n)?
    } else {
        let params = crate::models::ModelParams {
            n: args.n,
            d: 1,
            sigma: args.sigma,
            theta: args.theta,
            p_in: args.p_in,
            p_out: args.p_out,
            m: None,
        };
        generate(args.model, &params, args.seed)?.a
    };
    let cfg = FlowConfig {
        dt: args.dt,
        sync_tol: args.sync_tol,
        record_every: args.record_every.max(1),
        ..FlowConfig::new(args.p, args.t_max, derive_seed(&[args.seed, 4]))
    };
    let trace = match args.twisted {
        Some(q) => {
            let twisted = twisted_state(a.n(), q)?;
            if args.p < 2 {
                return Err(Error::Parameter("a twisted start needs p >= 2".into()));
            }
            let mut stack = DMatrix::zeros(a.n(), args.p);
            stack.columns_mut(0, 2).copy_from(twisted.stack());
            flow_from(&a, ProductStiefelPoint::new(a.n(), 1, stack)?, &cfg)?
        }
        None => flow(&a, a.d(), &cfg)?,
    };
    if let Some(path) = &args.out {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        trace
            .write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    writeln!(out, "synchronized: {}", trace.synchronized)?;
    writeln!(out, "final_time: {}", num(trace.final_time()))?;
    writeln!(out, "steps: {}", trace.steps)?;
    writeln!(out, "final_order_param: {}", num(trace.final_order_param()))?;
    writeln!(out, "final_energy: {}", num(trace.final_energy()))?;
    writeln!(out, "min_pair_inner: {}", num(trace.min_pair_inner))?;
    Ok(if trace.synchronized {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    })
}

fn cmd_thresholds(args: &ThresholdArgs, out: &mut dyn Write) -> Result<i32> {
    use crate::models::ModelKind::*;
    let q = match args.model {
        Z2 => CorollaryQuery::Z2 {
            n: args.n,
            p: args.p,
        },
        Kuramoto => CorollaryQuery::Kuramoto {
            n: args.n,
            p: args.p,
            gamma: args.gamma,
        },
        Sbm => CorollaryQuery::Sbm {
            p: args.p,
            c0: args.c,
        },
        OdSync => CorollaryQuery::OdSync {
            n: args.n,
            d: args.d,
            p: args.p,
            c: args.c,
        },
        Procrustes => CorollaryQuery::Procrustes {
            n: args.n,
            d: args.d,
            m: args.m.unwrap_or(3 * args.d),
            p: args.p,
            gamma: args.gamma,
            a_bar_norm: args.a_bar_norm,
            kappa: args.kappa,
            c: args.c,
        },
    };
    let b = corollary_thresholds(&q)?;
    writeln!(out, "bound: {}", num(b.bound))?;
    writeln!(out, "kind: {:?}", b.kind)?;
    writeln!(out, "constant_unspecified: {}", b.constant_unspecified)?;
    writeln!(out, "description: {}", b.description)?;
    Ok(EXIT_OK)
}

fn cmd_selftest(args: &SelftestArgs, out: &mut dyn Write) -> Result<i32> {
    let battery = LemmaBattery {
        trials: args.trials,
        seed: args.seed,
        ..LemmaBattery::default()
    };
    let report = battery.run();
    for c in &report.checks {
        writeln!(
            out,
            "{} {}: {} violations in {} trials, worst margin {}",
            if c.passed() { "ok  " } else { "FAIL" },
            c.name,
            c.violations,
            c.trials,
            num(c.worst_margin)
        )?;
    }
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::random_point;
    use crate::models::gen_z2;

    #[test]
    fn candidate_round_trip() {
        let s = random_point(4, 2, 3, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        write_candidate(&s, &path).unwrap();
        let back = read_candidate(&path).unwrap();
        assert_eq!(back.stack(), s.stack());
    }

    #[test]
    fn candidate_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        fs::write(&path, "2 1 2\n1 0\n").unwrap();
        assert!(matches!(read_candidate(&path), Err(Error::Validation(_))));
        fs::write(&path, "2 1 2\n1 0\n2 0\n").unwrap();
        assert!(matches!(read_candidate(&path), Err(Error::Validation(_))));
        fs::write(&path, "2 1\n").unwrap();
        assert!(matches!(read_candidate(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn adversary_needs_signs() {
        let inst = gen_z2(6, 0.0, 1).unwrap();
        assert!(with_adversary(inst, Some((0.5, 1.0)), 1).is_ok());
        let od = crate::models::gen_od_sync(4, 2, 0.1, 1).unwrap();
        assert!(with_adversary(od, Some((0.5, 1.0)), 1).is_err());
    }
}
