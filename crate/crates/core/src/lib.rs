//! Burer-Monteiro factorization for synchronization over the orthogonal
//! group: energies and certificates on products of Stiefel manifolds,
//! landscape thresholds, statistical model generators, a certified
//! descent solver and Kuramoto gradient flows.

pub mod blockmat;
pub mod cli;
pub mod error;
pub mod kuramoto;
pub mod linalg;
pub mod manifold;
pub mod models;
pub mod objective;
pub mod rng;
pub mod solver;

pub use blockmat::BlockSymMatrix;
pub use error::{Error, Result};
pub use manifold::{ProductStiefelPoint, TangentDirection};
