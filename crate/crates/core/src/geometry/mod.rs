//! Polytopes in H- and V-representation and the operations the synthesis
//! pipeline needs on them.

mod barycentric;
mod boxset;
mod dd;
mod hpolytope;
mod vpolytope;

pub use boxset::BoxSet;
pub use hpolytope::HPolytope;
pub use vpolytope::VPolytope;

use crate::Result;

/// Vertices closer than this fraction of the polytope diameter are merged.
pub const DEDUP_TOL: f64 = 1e-9;

/// `φ(c) = sup { c·x : x in the set }`.
pub trait SupportFunction {
    fn support(&self, direction: &[f64]) -> Result<f64>;
}

pub fn support_function<S: SupportFunction + ?Sized>(set: &S, direction: &[f64]) -> Result<f64> {
    set.support(direction)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(crate::Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes points within `tol · diameter` (∞-norm) of an earlier point.
pub(crate) fn dedup_points(points: Vec<Vec<f64>>, rel_tol: f64) -> Vec<Vec<f64>> {
    let Some(first) = points.first() else { return points };
    let dim = first.len();
    let mut diam = 0.0f64;
    for k in 0..dim {
        let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        diam = diam.max(hi - lo);
    }
    let tol = rel_tol * diam.max(1e-12);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        let dup = out
            .iter()
            .any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= tol));
        if !dup {
            out.push(p);
        }
    }
    out
}

/// Lexicographic order on points, used wherever output order must be stable.
pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}
