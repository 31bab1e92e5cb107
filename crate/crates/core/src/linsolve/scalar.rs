//! Exact solvers for constraint families that are convex quadratics in a
//! scalar `γ` and a scalar input `u`:
//!
//! ```text
//! c_k(γ, u) = a_k u² + (b0_k + b1_k γ) u + c0_k + c1_k γ + c2_k γ²
//! ```
//!
//! For fixed `γ` each constraint holds on an interval of `u`, so feasibility is
//! an interval intersection.

use super::GammaSolution;
use crate::{Error, Result};

const GOLDEN_STEPS: usize = 90;
const INV_PHI: f64 = 0.618_033_988_749_895;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalarQuadratics {
    a: Vec<f64>,
    b0: Vec<f64>,
    b1: Vec<f64>,
    c0: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

impl ScalarQuadratics {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `a u² + (b0 + b1 γ) u + c0 + c1 γ + c2 γ²`; needs `a ≥ 0` and joint convexity.
    pub fn push(&mut self, a: f64, b0: f64, b1: f64, c0: f64, c1: f64, c2: f64) {
        self.a.push(a.max(0.0));
        self.b0.push(b0);
        self.b1.push(b1);
        self.c0.push(c0);
        self.c1.push(c1);
        self.c2.push(c2);
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn value(&self, k: usize, gamma: f64, u: f64) -> f64 {
        let (b, c) = self.coefficients(k, gamma);
        self.a[k] * u * u + b * u + c
    }

    pub fn max_value(&self, gamma: f64, u: f64) -> f64 {
        (0..self.len()).map(|k| self.value(k, gamma, u)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn coefficients(&self, k: usize, gamma: f64) -> (f64, f64) {
        (self.b0[k] + self.b1[k] * gamma, self.c0[k] + gamma * (self.c1[k] + gamma * self.c2[k]))
    }

    /// `{u : c_k(γ, u) ≤ 0}` as `(lo, hi)`, possibly unbounded; `None` if empty.
    fn interval(&self, k: usize, gamma: f64) -> Option<(f64, f64)> {
        let a = self.a[k];
        let (b, c) = self.coefficients(k, gamma);
        if a == 0.0 {
            return match b.partial_cmp(&0.0)? {
                std::cmp::Ordering::Greater => Some((f64::NEG_INFINITY, -c / b)),
                std::cmp::Ordering::Less => Some((-c / b, f64::INFINITY)),
                std::cmp::Ordering::Equal => (c <= 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY)),
            };
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            // b = 0 and c = 0.
            return Some((0.0, 0.0));
        }
        let (r1, r2) = (q / a, c / q);
        Some((r1.min(r2), r1.max(r2)))
    }

    /// Feasible inputs within `[lo, hi]` at `γ`, as an interval.
    pub fn feasible_inputs(&self, gamma: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let (mut l, mut r) = (lo, hi);
        for k in 0..self.len() {
            let (a, b) = self.interval(k, gamma)?;
            l = l.max(a);
            r = r.min(b);
            if l > r {
                return None;
            }
        }
        Some((l, r))
    }

    /// A feasible input at `γ` (interval midpoint), checked by direct evaluation.
    pub fn feasible_input(&self, gamma: f64, lo: f64, hi: f64, tol: f64) -> Option<f64> {
        let (l, r) = self.feasible_inputs(gamma, lo, hi)?;
        let u = 0.5 * (l + r);
        (self.max_value(gamma, u) <= tol).then_some(u)
    }

    /// `min_{u ∈ [lo, hi]} max_k c_k(γ, u)` by golden section.
    fn inner_min(&self, gamma: f64, lo: f64, hi: f64) -> (f64, f64) {
        golden_min(lo, hi, |u| self.max_value(gamma, u))
    }
}

/// Golden-section minimum of a convex function on `[lo, hi]`: `(argmin, min)`.
fn golden_min(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let candidates = [(lo, f(lo)), (hi, f(hi)), (x1, f1), (x2, f2)];
    candidates.into_iter().min_by(|p, q| p.1.total_cmp(&q.1)).unwrap()
}

/// Largest `γ ∈ [γ_min, γ_max]` with some `u ∈ [lo, hi]` satisfying every
/// constraint. Same contract as the general cutting-plane solver.
pub fn maximize_gamma_scalar(
    family: &ScalarQuadratics,
    lo: f64,
    hi: f64,
    gamma_min: f64,
    gamma_max: f64,
    tol: f64,
) -> Result<GammaSolution> {
    if !(gamma_min > 0.0 && gamma_max > gamma_min && lo <= hi) {
        return Err(Error::InvalidInput("need 0 < gamma_min < gamma_max and lo <= hi".into()));
    }
    let feasible = |g: f64| family.feasible_input(g, lo, hi, 0.0);
    let solution = |gamma: f64, u: f64, at_cap: bool| GammaSolution {
        gamma,
        input: vec![u],
        max_constraint: family.max_value(gamma, u),
        at_cap,
    };
    if let Some(u) = feasible(gamma_max) {
        return Ok(solution(gamma_max, u, true));
    }

    // Any feasible γ: the min-max value is convex in γ.
    let mut start = None;
    let merit = |g: f64| {
        if let Some(u) = feasible(g) {
            return (f64::NEG_INFINITY, u);
        }
        let (u, v) = family.inner_min(g, lo, hi);
        (v, u)
    };
    let (mut a, mut b) = (gamma_min, gamma_max);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (merit(x1), merit(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1.0 == f64::NEG_INFINITY {
            start = Some((x1, f1.1));
            break;
        }
        if f2.0 == f64::NEG_INFINITY {
            start = Some((x2, f2.1));
            break;
        }
        if f1.0 <= f2.0 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = merit(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = merit(x2);
        }
    }
    if start.is_none() {
        start = feasible(gamma_min).map(|u| (gamma_min, u));
    }
    let Some((mut g_lo, mut u_lo)) = start else { return Err(Error::Infeasible) };

    let mut g_hi = gamma_max;
    while g_hi - g_lo > tol {
        let mid = 0.5 * (g_lo + g_hi);
        match feasible(mid) {
            Some(u) => {
                g_lo = mid;
                u_lo = u;
            }
            None => g_hi = mid,
        }
    }
    Ok(solution(g_lo, u_lo, false))
}
