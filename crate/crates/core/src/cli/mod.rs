//! The `bmsync` command line. Parsing lives here so that the binary is a
//! one-line shim and the commands can be driven from tests.

mod commands;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::models::{ModelKind, ModelParams};

pub use commands::{candidate_to_string, read_candidate, write_candidate};
pub use sweep::{run_sweep, write_sweep_csv, Axis, PChoice, SweepRow, SweepSpec, SWEEP_COLUMNS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNCERTIFIED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bmsync",
    version,
    about = "Burer-Monteiro synchronization with optimality certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a model instance as a SYNCMAT file plus a `.meta` sidecar.
    Generate(GenerateArgs),
    /// Run the certified descent solver on a matrix file.
    Solve(SolveArgs),
    /// Build the certificate for a candidate point and print the verdict.
    Certify(CertifyArgs),
    /// Solve a grid of fresh instances and write one CSV row per solve.
    Sweep(SweepArgs),
    /// Integrate the Kuramoto gradient flow and report synchrony.
    Kuramoto(KuramotoArgs),
    /// Evaluate the closed-form landscape thresholds for a model.
    Thresholds(ThresholdArgs),
    /// Run the randomized battery of inequalities behind the main theorem.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "z2")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Block size; Z2, SBM and Kuramoto force 1.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.1)]
    pub p_out: f64,
    /// Procrustes point-cloud width (default 3d).
    #[arg(long)]
    pub m: Option<usize>,
}

impl ModelArgs {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            n: self.n,
            d: self.model.fixed_d().or(self.d).unwrap_or(1),
            sigma: self.sigma,
            theta: self.theta,
            p_in: self.p_in,
            p_out: self.p_out,
            m: self.m,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AdversaryArgs {
    /// Fraction of aligned pairs the monotone adversary reinforces.
    #[arg(long)]
    pub adversary_density: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub adversary_magnitude: f64,
}

impl AdversaryArgs {
    pub fn spec(&self) -> Option<(f64, f64)> {
        self.adversary_density
            .map(|d| (d, self.adversary_magnitude))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub grad_tol: f64,
    /// Random curvature probes per escape attempt.
    #[arg(long, default_value_t = 30)]
    pub probes: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub adversary: AdversaryArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Matrix path; the sidecar goes to `<out>.meta`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub matrix: PathBuf,
    /// Expected block size; must match the file.
    #[arg(long)]
    pub d: Option<usize>,
    /// Factor width (default 2d + 2).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// JSON-lines iteration trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the final point in candidate format.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    pub matrix: PathBuf,
    /// Candidate point: an `n d p` header then `n·d` rows of `p` values.
    #[arg(long)]
    pub candidate: PathBuf,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = crate::objective::DEFAULT_TOL_GRAD)]
    pub tol_grad: f64,
    #[arg(long, default_value_t = crate::objective::DEFAULT_TOL_PSD)]
    pub tol_psd: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub adversary: AdversaryArgs,
    /// First swept parameter as `name=v1,v2,...`.
    #[arg(long)]
    pub axis1: Option<String>,
    #[arg(long)]
    pub axis2: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Factor width, or `auto` for the certificate threshold of a reference solve.
    #[arg(long, default_value = "auto")]
    pub p: String,
    /// Base seed for the per-cell seed hash.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Run cells on one thread.
    #[arg(long)]
    pub serial: bool,
    /// CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KuramotoArgs {
    /// Coupling matrix file. Without it an instance is generated.
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value = "kuramoto")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.1)]
    pub p_out: f64,
    /// Use the unweighted ring on `--n` oscillators.
    #[arg(long, conflicts_with = "matrix")]
    pub ring: bool,
    /// Start from the twisted state with this winding number (needs p = 2).
    #[arg(long)]
    pub twisted: Option<i64>,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub sync_tol: f64,
    #[arg(long, default_value_t = 10)]
    pub record_every: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectory CSV (t, energy, order parameter).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value = "z2")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 100.0)]
    pub n: f64,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub m: Option<usize>,
    /// Fraction of the spectrum in the bulk (Kuramoto, Procrustes).
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Unspecified absolute constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a_bar_norm: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_ERROR;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match commands::dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
