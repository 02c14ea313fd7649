use nalgebra::DMatrix;
use rand::Rng;

use crate::blockmat::BlockSymMatrix;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

use super::{ModelInstance, Truth};

/// A perturbation `Δ` whose sign pattern agrees with the planted `x`:
/// `Δ ∘ xxᵀ ≥ 0` entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarySpec {
    pub delta: DMatrix<f64>,
    pub x: Vec<f64>,
    pub density: f64,
    pub magnitude: f64,
    pub seed: u64,
}

impl AdversarySpec {
    /// `bdg(Δxxᵀ) − Δ = diag(x) diag(Δx) − Δ`. Conjugating by `diag(x)`
    /// gives the Laplacian of the nonnegative weights `Δᵢⱼxᵢxⱼ`, so this is
    /// PSD.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.x.len();
        let x = nalgebra::DVector::from_column_slice(&self.x);
        let dx = &self.delta * &x;
        let mut l = -self.delta.clone();
        for i in 0..n {
            l[(i, i)] += x[i] * dx[i];
        }
        l
    }

    /// Smallest entry of `Δ ∘ xxᵀ`.
    pub fn min_aligned_entry(&self) -> f64 {
        let n = self.x.len();
        let mut m = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                m = m.min(self.delta[(i, j)] * self.x[i] * self.x[j]);
            }
        }
        m
    }
}

/// Each off-diagonal pair is perturbed independently with probability
/// `density` by `u · magnitude · xᵢxⱼ`, `u ~ U(0, 1)`.
pub fn gen_adversary(x: &[f64], density: f64, magnitude: f64, seed: u64) -> Result<AdversarySpec> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Parameter(format!(
            "density must lie in [0, 1], got {density}"
        )));
    }
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(Error::Parameter(format!(
            "magnitude must be positive, got {magnitude}"
        )));
    }
    if x.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Validation("x must be a ±1 vector".into()));
    }
    let n = x.len();
    let mut rng = rng_from_seed(seed);
    let mut delta = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(density) {
                let u: f64 = rng.random();
                let v = u * magnitude * x[i] * x[j];
                delta[(i, j)] = v;
                delta[(j, i)] = v;
            }
        }
    }
    Ok(AdversarySpec {
        delta,
        x: x.to_vec(),
        density,
        magnitude,
        seed,
    })
}

/// `A ↦ A + Δ` for a scalar instance whose truth is the adversary's `x`.
pub fn apply_adversary(inst: &ModelInstance, adv: &AdversarySpec) -> Result<ModelInstance> {
    if inst.d != 1 {
        return Err(Error::Validation(
            "adversaries apply to d = 1 instances".into(),
        ));
    }
    match &inst.truth {
        Some(Truth::Signs(x)) if x == &adv.x => {}
        Some(_) => {
            return Err(Error::Validation(
                "adversary sign vector differs from the truth".into(),
            ))
        }
        None => return Err(Error::MissingTruth),
    }
    let a = BlockSymMatrix::new(inst.a.n(), 1, inst.a.entries() + &adv.delta)?;
    let mut meta = inst.meta.clone();
    meta.params
        .push(("adversary_density".into(), adv.density.to_string()));
    meta.params
        .push(("adversary_magnitude".into(), adv.magnitude.to_string()));
    meta.params
        .push(("adversary_seed".into(), adv.seed.to_string()));
    Ok(ModelInstance {
        a,
        d: 1,
        truth: inst.truth.clone(),
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sorted_sym_eigen;
    use crate::models::gen_sbm;
    use crate::objective::build_certificate;

    #[test]
    fn zero_density_is_identity() {
        let inst = gen_sbm(10, 0.6, 0.1, 1).unwrap();
        let x = inst.truth.as_ref().unwrap().signs().unwrap().to_vec();
        let adv = gen_adversary(&x, 0.0, 0.5, 2).unwrap();
        assert_eq!(adv.delta, DMatrix::zeros(10, 10));
        assert_eq!(adv.laplacian(), DMatrix::zeros(10, 10));
        assert_eq!(apply_adversary(&inst, &adv).unwrap().a, inst.a);
    }

    #[test]
    fn sign_pattern_and_psd_laplacian() {
        let x: Vec<f64> = (0..40)
            .map(|i| if i % 3 == 0 { -1.0 } else { 1.0 })
            .collect();
        for seed in 0..20 {
            let adv = gen_adversary(&x, 0.3, 2.0, seed).unwrap();
            assert!(adv.min_aligned_entry() >= 0.0);
            let (eig, _) = sorted_sym_eigen(adv.laplacian());
            let scale = eig[eig.len() - 1].abs().max(1.0);
            assert!(eig[0] >= -1e-10 * scale);
        }
    }

    #[test]
    fn certificate_is_additive() {
        let inst = gen_sbm(30, 0.6, 0.2, 4).unwrap();
        let truth = inst.truth.clone().unwrap();
        let adv = gen_adversary(truth.signs().unwrap(), 0.2, 0.5, 5).unwrap();
        let combined = apply_adversary(&inst, &adv).unwrap();
        let s = truth.embed(3).unwrap();
        let l = build_certificate(&combined.a, &s).unwrap().l.into_entries();
        let lm = build_certificate(&inst.a, &s).unwrap().l.into_entries();
        assert!((l - lm - adv.laplacian()).amax() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_truth() {
        let inst = gen_sbm(6, 0.6, 0.1, 1).unwrap();
        let adv = gen_adversary(&[1.0; 6], 0.5, 0.5, 2).unwrap();
        assert!(matches!(
            apply_adversary(&inst, &adv),
            Err(Error::Validation(_))
        ));
        assert!(gen_adversary(&[1.0, 0.5], 0.5, 0.5, 2).is_err());
        assert!(gen_adversary(&[1.0, 1.0], 1.5, 0.5, 2).is_err());
    }
}
