//! Phase-diagram sweeps: a grid over two model parameters, several fresh
//! instances per cell, one CSV row per solve.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{
    apply_adversary, gen_adversary, generate, ModelInstance, ModelKind, ModelParams,
};
use crate::rng::derive_seed;
use crate::solver::{alignment_error, solve_with_reference, SolverConfig};

pub const SWEEP_COLUMNS: &str = "model,n,d,p,axis1,axis2,trial,seed,status,iterations,energy,grad_norm,certified,aligned,alignment_error,lambda_kth,lambda_max,p_min_benign,wall_ms";

/// A swept parameter. The name `none` leaves the instance unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn none() -> Self {
        Axis {
            name: "none".into(),
            values: vec![0.0],
        }
    }

    /// Parses `name=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, values) = text.split_once('=').ok_or_else(|| {
            Error::Parameter(format!("axis must look like name=v1,v2; got {text:?}"))
        })?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parameter(format!("bad axis value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let axis = Axis {
            name: name.trim().to_string(),
            values,
        };
        axis.validate()?;
        Ok(axis)
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Parameter(format!(
                "axis {} has no values",
                self.name
            )));
        }
        if self.name != "none" {
            ModelParams::default().set(&self.name, self.values[0])?;
        }
        Ok(())
    }

    fn apply(&self, params: &mut ModelParams, value: f64) -> Result<()> {
        if self.name == "none" {
            Ok(())
        } else {
            params.set(&self.name, value)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PChoice {
    Fixed(usize),
    /// `p_min_benign` from the certificate of a reference solve at
    /// `p = 2d + 2`, or `2d + 2` when that solve does not certify.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub params: ModelParams,
    pub axis1: Axis,
    pub axis2: Axis,
    pub trials: usize,
    pub base_seed: u64,
    pub p: PChoice,
    /// Template for each solve; `p` and `seed` are overwritten.
    pub solver: SolverConfig,
    /// `(density, magnitude)` of a monotone adversary applied to each
    /// scalar instance.
    pub adversary: Option<(f64, f64)>,
    pub parallel: bool,
}

impl SweepSpec {
    pub fn new(model: ModelKind, params: ModelParams, axis1: Axis, axis2: Axis) -> Self {
        SweepSpec {
            model,
            params,
            axis1,
            axis2,
            trials: 1,
            base_seed: 0,
            p: PChoice::Auto,
            solver: SolverConfig::default(),
            adversary: None,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.axis1.values.len() * self.axis2.values.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: ModelKind,
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub axis1: f64,
    pub axis2: f64,
    pub trial: usize,
    pub seed: u64,
    pub status: String,
    pub iterations: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub certified: bool,
    pub aligned: Option<bool>,
    pub alignment_error: Option<f64>,
    pub lambda_kth: f64,
    pub lambda_max: f64,
    pub p_min_benign: Option<usize>,
    pub wall_ms: f64,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepRow {
    /// The row without the trailing `wall_ms` field.
    pub fn deterministic_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.16e},{:.16e},{},{},{},{:.16e},{:.16e},{}",
            self.model,
            self.n,
            self.d,
            self.p,
            self.axis1,
            self.axis2,
            self.trial,
            self.seed,
            self.status,
            self.iterations,
            self.energy,
            self.grad_norm,
            self.certified,
            opt(self.aligned),
            self.alignment_error
                .map(|e| format!("{e:.16e}"))
                .unwrap_or_default(),
            self.lambda_kth,
            self.lambda_max,
            opt(self.p_min_benign),
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{},{:.3}", self.deterministic_fields(), self.wall_ms)
    }
}

struct Job {
    i1: usize,
    i2: usize,
    trial: usize,
}

/// Applies a monotone adversary `(density, magnitude)` when given.
pub(super) fn with_adversary(
    inst: ModelInstance,
    adv: Option<(f64, f64)>,
    seed: u64,
) -> Result<ModelInstance> {
    let Some((density, magnitude)) = adv else {
        return Ok(inst);
    };
    let x = inst
        .truth
        .as_ref()
        .and_then(|t| t.signs())
        .ok_or_else(|| {
            Error::Parameter("adversaries need a scalar model with planted signs".into())
        })?
        .to_vec();
    let adv = gen_adversary(&x, density, magnitude, derive_seed(&[seed, 2]))?;
    apply_adversary(&inst, &adv)
}

fn run_job(spec: &SweepSpec, job: &Job) -> Result<SweepRow> {
    let start = Instant::now();
    let v1 = spec.axis1.values[job.i1];
    let v2 = spec.axis2.values[job.i2];
    let mut params = spec.params.clone();
    spec.axis1.apply(&mut params, v1)?;
    spec.axis2.apply(&mut params, v2)?;
    let seed = derive_seed(&[
        spec.base_seed,
        job.i1 as u64,
        job.i2 as u64,
        job.trial as u64,
    ]);
    let inst = with_adversary(generate(spec.model, &params, seed)?, spec.adversary, seed)?;
    let d = inst.d;
    let p = match spec.p {
        PChoice::Fixed(p) => p,
        PChoice::Auto => {
            let p_ref = 2 * d + 2;
            let cfg = SolverConfig {
                p: p_ref,
                seed: derive_seed(&[seed, 3]),
                ..spec.solver.clone()
            };
            let rep = solve_with_reference(&inst.a, d, &cfg, inst.truth.as_ref())?;
            match rep.certificate.p_min_benign {
                Some(p) if rep.certified => p.max(d + 1),
                _ => p_ref,
            }
        }
    };
    let cfg = SolverConfig {
        p,
        seed: derive_seed(&[seed, 1]),
        ..spec.solver.clone()
    };
    let rep = solve_with_reference(&inst.a, d, &cfg, inst.truth.as_ref())?;
    let n = inst.a.n();
    let err = match &inst.truth {
        Some(t) => Some(alignment_error(&rep.final_point, Some(t))?),
        None => None,
    };
    Ok(SweepRow {
        model: spec.model,
        n,
        d,
        p,
        axis1: v1,
        axis2: v2,
        trial: job.trial,
        seed,
        status: rep.status.to_string(),
        iterations: rep.iterations,
        energy: rep.energy(),
        grad_norm: rep.grad_norm(),
        certified: rep.certified,
        aligned: err.map(|e| e <= 1e-6 * n as f64),
        alignment_error: err,
        lambda_kth: rep.certificate.kth_gap,
        lambda_max: rep.certificate.lambda_max(),
        p_min_benign: rep.certificate.p_min_benign,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Rows in cell-major, trial-minor order regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for i1 in 0..spec.axis1.values.len() {
        for i2 in 0..spec.axis2.values.len() {
            for trial in 0..spec.trials {
                jobs.push(Job { i1, i2, trial });
            }
        }
    }
    if spec.parallel {
        jobs.par_iter().map(|j| run_job(spec, j)).collect()
    } else {
        jobs.iter().map(|j| run_job(spec, j)).collect()
    }
}

pub fn write_sweep_csv(rows: &[SweepRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_COLUMNS}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        let params = ModelParams {
            n: 20,
            ..Default::default()
        };
        let mut spec = SweepSpec::new(
            ModelKind::Z2,
            params,
            Axis::parse("sigma=0.1,0.5").unwrap(),
            Axis::parse("n=10,16").unwrap(),
        );
        spec.trials = 2;
        spec.base_seed = 5;
        spec.p = PChoice::Fixed(3);
        spec
    }

    #[test]
    fn row_count_and_order() {
        let spec = small_spec();
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), spec.cell_count() * spec.trials);
        let keys: Vec<_> = rows.iter().map(|r| (r.axis1, r.n, r.trial)).collect();
        assert_eq!(keys[0], (0.1, 10, 0));
        assert_eq!(keys[1], (0.1, 10, 1));
        assert_eq!(keys[2], (0.1, 16, 0));
        assert_eq!(keys[7], (0.5, 16, 1));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let mut spec = small_spec();
        let par = run_sweep(&spec).unwrap();
        spec.parallel = false;
        let ser = run_sweep(&spec).unwrap();
        let a: Vec<_> = par.iter().map(SweepRow::deterministic_fields).collect();
        let b: Vec<_> = ser.iter().map(SweepRow::deterministic_fields).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn auto_p_uses_reference_certificate() {
        let mut spec = small_spec();
        spec.p = PChoice::Auto;
        spec.trials = 1;
        for r in run_sweep(&spec).unwrap() {
            assert!(r.p >= 2);
        }
    }

    #[test]
    fn axis_parsing() {
        assert!(Axis::parse("sigma").is_err());
        assert!(Axis::parse("sigma=").is_err());
        assert!(Axis::parse("bogus=1").is_err());
        assert_eq!(Axis::parse("p_in=0.5, 0.7").unwrap().values, vec![0.5, 0.7]);
        assert_eq!(SWEEP_COLUMNS.split(',').count(), 19);
    }
}
