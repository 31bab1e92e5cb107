//! Robust polytopic λ-contractive sets computed from logged transition data.
//!
//! The pipeline is: collect transitions ([`harness`]), bound every model that
//! explains them ([`consistency`]), split each candidate model into convex
//! parts ([`dcmodel`]) and certify contraction of a scaled polytope for all
//! candidate models at once ([`synthesis`]).

pub mod consistency;
pub mod dcmodel;
mod error;
pub mod geometry;
pub mod harness;
pub mod linsolve;
pub mod parallel;
pub mod synthesis;

pub use error::{Error, Result};

/// Digest helper shared by every serialized artifact.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
