#![allow(dead_code)]

use bmsync::manifold::TangentDirection;
use bmsync::objective::energy;
use bmsync::{BlockSymMatrix, ProductStiefelPoint};
use nalgebra::DMatrix;

/// Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-14 * a.norm().max(1.0) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Energy by explicit block loops, `−½ Σᵢⱼ ⟨Aᵢⱼ, SᵢSⱼᵀ⟩`.
pub fn loop_energy(a: &BlockSymMatrix, s: &ProductStiefelPoint) -> f64 {
    let n = a.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let sij = s.block(i) * s.block(j).transpose();
            total += a.block(i, j).component_mul(&sij).sum();
        }
    }
    -0.5 * total
}

pub fn energy_along(a: &BlockSymMatrix, dir: &TangentDirection<'_>, t: f64) -> f64 {
    energy(a, &dir.base().retract(dir, t).unwrap()).unwrap()
}

/// Central first difference of the energy along the retraction.
pub fn fd_first(a: &BlockSymMatrix, dir: &TangentDirection<'_>, h: f64) -> f64 {
    (energy_along(a, dir, h) - energy_along(a, dir, -h)) / (2.0 * h)
}

/// Central second difference of the energy along the retraction.
pub fn fd_second(a: &BlockSymMatrix, dir: &TangentDirection<'_>, h: f64) -> f64 {
    let f0 = energy(a, dir.base()).unwrap();
    (energy_along(a, dir, h) - 2.0 * f0 + energy_along(a, dir, -h)) / (h * h)
}

pub fn rel_err(x: f64, y: f64, floor: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(floor)
}

/// `‖SSᵀ − XXᵀ‖_F` against an explicit embedding.
pub fn gram_distance(s: &ProductStiefelPoint, t: &ProductStiefelPoint) -> f64 {
    (s.gram() - t.gram()).norm()
}
