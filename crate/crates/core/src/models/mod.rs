//! Generators for the planted synchronization models and monotone
//! adversaries, plus the closed-form noise thresholds of the landscape
//! corollaries.

mod adversary;
mod sidecar;
mod thresholds;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::blockmat::BlockSymMatrix;
use crate::error::{Error, Result};
use crate::manifold::{haar_orthogonal, ProductStiefelPoint};
use crate::rng::{gaussian_matrix, rng_from_seed, SyncRng};

pub use adversary::{apply_adversary, gen_adversary, AdversarySpec};
pub use sidecar::{
    parse_sidecar, read_instance, sidecar_path, sidecar_string, write_instance, Sidecar,
};
pub use thresholds::{corollary_thresholds, BoundKind, CorollaryBound, CorollaryQuery};

/// Planted solution of an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    /// `x ∈ {±1}ⁿ` for the scalar models.
    Signs(Vec<f64>),
    /// `n` orthogonal `d×d` blocks.
    Blocks(Vec<DMatrix<f64>>),
}

impl Truth {
    pub fn n(&self) -> usize {
        match self {
            Truth::Signs(x) => x.len(),
            Truth::Blocks(b) => b.len(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Truth::Signs(_) => 1,
            Truth::Blocks(b) => b.first().map_or(0, |m| m.nrows()),
        }
    }

    pub fn signs(&self) -> Option<&[f64]> {
        match self {
            Truth::Signs(x) => Some(x),
            Truth::Blocks(_) => None,
        }
    }

    pub fn blocks(&self) -> Vec<DMatrix<f64>> {
        match self {
            Truth::Signs(x) => x.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
            Truth::Blocks(b) => b.clone(),
        }
    }

    /// The truth as a point of `St(p, d)^n` via `Oᵢ ↦ [Oᵢ 0]`.
    pub fn embed(&self, p: usize) -> Result<ProductStiefelPoint> {
        ProductStiefelPoint::canonical_embedding(&self.blocks(), p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub model: ModelKind,
    /// Generator inputs in the order they were given, formatted so that
    /// parsing them back yields the same values.
    pub params: Vec<(String, String)>,
    pub seed: u64,
    /// The clean point cloud of the Procrustes model.
    pub a_bar: Option<DMatrix<f64>>,
}

impl ModelMeta {
    fn new(model: ModelKind, seed: u64) -> Self {
        ModelMeta {
            model,
            params: Vec::new(),
            seed,
            a_bar: None,
        }
    }

    fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub a: BlockSymMatrix,
    pub d: usize,
    pub truth: Option<Truth>,
    pub meta: ModelMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Z2,
    Sbm,
    Kuramoto,
    OdSync,
    Procrustes,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Z2,
        ModelKind::Sbm,
        ModelKind::Kuramoto,
        ModelKind::OdSync,
        ModelKind::Procrustes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Z2 => "z2",
            ModelKind::Sbm => "sbm",
            ModelKind::Kuramoto => "kuramoto",
            ModelKind::OdSync => "od_sync",
            ModelKind::Procrustes => "procrustes",
        }
    }

    /// Block size the model forces, if any.
    pub fn fixed_d(self) -> Option<usize> {
        match self {
            ModelKind::Z2 | ModelKind::Sbm | ModelKind::Kuramoto => Some(1),
            ModelKind::OdSync | ModelKind::Procrustes => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "z2" => Ok(ModelKind::Z2),
            "sbm" => Ok(ModelKind::Sbm),
            "kuramoto" | "signed_kuramoto" => Ok(ModelKind::Kuramoto),
            "od_sync" | "odsync" | "od" => Ok(ModelKind::OdSync),
            "procrustes" | "gopp" => Ok(ModelKind::Procrustes),
            _ => Err(Error::Parameter(format!("unknown model {s:?}"))),
        }
    }
}

/// The union of all generator inputs. Each model reads the fields it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub theta: f64,
    pub p_in: f64,
    pub p_out: f64,
    /// Point-cloud width for Procrustes; `None` means `3d`.
    pub m: Option<usize>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n: 100,
            d: 1,
            sigma: 0.0,
            theta: 0.0,
            p_in: 0.5,
            p_out: 0.1,
            m: None,
        }
    }
}

impl ModelParams {
    /// Sets a field by name, as used by sweep axes.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
                Ok(v as usize)
            } else {
                Err(Error::Parameter(format!(
                    "{name} must be a nonnegative integer, got {v}"
                )))
            }
        };
        match name.replace('-', "_").as_str() {
            "n" => self.n = as_count(value)?,
            "d" => self.d = as_count(value)?,
            "m" => self.m = Some(as_count(value)?),
            "sigma" => self.sigma = value,
            "theta" => self.theta = value,
            "p_in" => self.p_in = value,
            "p_out" => self.p_out = value,
            _ => return Err(Error::Parameter(format!("unknown parameter {name:?}"))),
        }
        Ok(())
    }

    pub fn m_or_default(&self) -> usize {
        self.m.unwrap_or(3 * self.d)
    }
}

pub fn generate(kind: ModelKind, params: &ModelParams, seed: u64) -> Result<ModelInstance> {
    match kind {
        ModelKind::Z2 => gen_z2(params.n, params.sigma, seed),
        ModelKind::Sbm => gen_sbm(params.n, params.p_in, params.p_out, seed),
        ModelKind::Kuramoto => gen_signed_kuramoto(params.n, params.theta, seed),
        ModelKind::OdSync => gen_od_sync(params.n, params.d, params.sigma, seed),
        ModelKind::Procrustes => gen_procrustes(
            params.n,
            params.d,
            params.m_or_default(),
            params.sigma,
            seed,
            None,
        ),
    }
}

fn random_signs(rng: &mut SyncRng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

fn outer(x: &[f64]) -> DMatrix<f64> {
    let v = DMatrix::from_column_slice(x.len(), 1, x);
    &v * v.transpose()
}

/// Symmetric with i.i.d. `N(0, 1)` upper triangle and zero diagonal.
fn wigner_zero_diag(rng: &mut SyncRng, n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let g: f64 = rng.sample(rand_distr::StandardNormal);
            w[(i, j)] = g;
            w[(j, i)] = g;
        }
    }
    w
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be a nonnegative number, got {v}"
        )))
    }
}

/// `A = xxᵀ + σW` with uniform signs `x` and a zero-diagonal Wigner `W`.
pub fn gen_z2(n: usize, sigma: f64, seed: u64) -> Result<ModelInstance> {
    if n < 2 {
        return Err(Error::Parameter(format!("n must be at least 2, got {n}")));
    }
    check_nonneg("sigma", sigma)?;
    let mut rng = rng_from_seed(seed);
    let x = random_signs(&mut rng, n);
    let w = wigner_zero_diag(&mut rng, n);
    let a = outer(&x) + w * sigma;
    Ok(ModelInstance {
        a: BlockSymMatrix::new(n, 1, a)?,
        d: 1,
        truth: Some(Truth::Signs(x)),
        meta: ModelMeta::new(ModelKind::Z2, seed)
            .with("n", n)
            .with("sigma", sigma),
    })
}

/// Two balanced communities `x = [1…1, −1…−1]`. Off-diagonal entries are
/// `Ber(p_in)` within and `Ber(p_out)` across communities, both centered by
/// `(p_in + p_out)/2`.
pub fn gen_sbm(n: usize, p_in: f64, p_out: f64, seed: u64) -> Result<ModelInstance> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Parameter(format!(
            "n must be even and at least 2, got {n}"
        )));
    }
    if !(0.0 <= p_out && p_out < p_in && p_in <= 1.0) {
        return Err(Error::Parameter(format!(
            "need 0 <= p_out < p_in <= 1, got p_in = {p_in}, p_out = {p_out}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let x: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
    let center = (p_in + p_out) / 2.0;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if x[i] == x[j] { p_in } else { p_out };
            let edge = if rng.random_bool(prob) { 1.0 } else { 0.0 };
            a[(i, j)] = edge - center;
            a[(j, i)] = edge - center;
        }
    }
    Ok(ModelInstance {
        a: BlockSymMatrix::new(n, 1, a)?,
        d: 1,
        truth: Some(Truth::Signs(x)),
        meta: ModelMeta::new(ModelKind::Sbm, seed)
            .with("n", n)
            .with("p_in", p_in)
            .with("p_out", p_out),
    })
}

/// Symmetric Bernoulli(θ) repulsion pattern with zero diagonal.
pub(crate) fn kuramoto_repulsion(n: usize, theta: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(theta) {
                b[(i, j)] = 1.0;
                b[(j, i)] = 1.0;
            }
        }
    }
    b
}

/// `A = J − 2B` with `B` a symmetric Bernoulli(θ) matrix with zero
/// diagonal: each link is repulsive with probability θ.
pub fn gen_signed_kuramoto(n: usize, theta: f64, seed: u64) -> Result<ModelInstance> {
    if n < 2 {
        return Err(Error::Parameter(format!("n must be at least 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Parameter(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    let b = kuramoto_repulsion(n, theta, seed);
    let a = DMatrix::from_element(n, n, 1.0) - b * 2.0;
    Ok(ModelInstance {
        a: BlockSymMatrix::new(n, 1, a)?,
        d: 1,
        truth: Some(Truth::Signs(vec![1.0; n])),
        meta: ModelMeta::new(ModelKind::Kuramoto, seed)
            .with("n", n)
            .with("theta", theta),
    })
}

/// Symmetric block noise: i.i.d. Gaussian upper blocks, mirrored below, and
/// diagonal blocks `(G + Gᵀ)/√2`.
fn block_wigner(rng: &mut SyncRng, n: usize, d: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in i..n {
            let g = gaussian_matrix(rng, d, d);
            if i == j {
                let s = (&g + g.transpose()) * std::f64::consts::FRAC_1_SQRT_2;
                w.view_mut((i * d, i * d), (d, d)).copy_from(&s);
            } else {
                w.view_mut((i * d, j * d), (d, d)).copy_from(&g);
                w.view_mut((j * d, i * d), (d, d)).copy_from(&g.transpose());
            }
        }
    }
    w
}

fn stack_blocks(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let (d, c) = blocks[0].shape();
    let mut s = DMatrix::zeros(blocks.len() * d, c);
    for (i, b) in blocks.iter().enumerate() {
        s.view_mut((i * d, 0), (d, c)).copy_from(b);
    }
    s
}

/// `A = OOᵀ + σW` with Haar `Oᵢ ∈ O(d)` and block Wigner noise.
pub fn gen_od_sync(n: usize, d: usize, sigma: f64, seed: u64) -> Result<ModelInstance> {
    if n < 2 || d == 0 {
        return Err(Error::Parameter(format!(
            "need n >= 2 and d >= 1, got n = {n}, d = {d}"
        )));
    }
    check_nonneg("sigma", sigma)?;
    let mut rng = rng_from_seed(seed);
    let o: Vec<_> = (0..n).map(|_| haar_orthogonal(&mut rng, d)).collect();
    let w = block_wigner(&mut rng, n, d);
    let os = stack_blocks(&o);
    let a = &os * os.transpose() + w * sigma;
    Ok(ModelInstance {
        a: BlockSymMatrix::new(n, d, a)?,
        d,
        truth: Some(Truth::Blocks(o)),
        meta: ModelMeta::new(ModelKind::OdSync, seed)
            .with("n", n)
            .with("d", d)
            .with("sigma", sigma),
    })
}

/// Noisy rotated copies `Aᵢ = OᵢĀ + σWᵢ` of a `d×m` point cloud `Ā`, with
/// data blocks `Aᵢⱼ = AᵢAⱼᵀ`. `Ā` is drawn standard Gaussian when omitted.
pub fn gen_procrustes(
    n: usize,
    d: usize,
    m: usize,
    sigma: f64,
    seed: u64,
    a_bar: Option<&DMatrix<f64>>,
) -> Result<ModelInstance> {
    if n < 2 || d == 0 {
        return Err(Error::Parameter(format!(
            "need n >= 2 and d >= 1, got n = {n}, d = {d}"
        )));
    }
    if m < d {
        return Err(Error::Parameter(format!(
            "m = {m} must be at least d = {d}"
        )));
    }
    check_nonneg("sigma", sigma)?;
    let mut rng = rng_from_seed(seed);
    let a_bar = match a_bar {
        Some(a) if a.shape() != (d, m) => {
            return Err(Error::Shape(format!(
                "A_bar must be {d}x{m}, got {:?}",
                a.shape()
            )))
        }
        Some(a) => a.clone(),
        None => gaussian_matrix(&mut rng, d, m),
    };
    let o: Vec<_> = (0..n).map(|_| haar_orthogonal(&mut rng, d)).collect();
    let clouds: Vec<_> = o
        .iter()
        .map(|oi| oi * &a_bar + gaussian_matrix(&mut rng, d, m) * sigma)
        .collect();
    let y = stack_blocks(&clouds);
    let a = &y * y.transpose();
    let mut meta = ModelMeta::new(ModelKind::Procrustes, seed)
        .with("n", n)
        .with("d", d)
        .with("m", m)
        .with("sigma", sigma);
    meta.a_bar = Some(a_bar);
    Ok(ModelInstance {
        a: BlockSymMatrix::new(n, d, a)?,
        d,
        truth: Some(Truth::Blocks(o)),
        meta,
    })
}
