//! Convex feasibility and γ-maximization by Kelley cutting planes.
//!
//! Every constraint is a convex function with a supplied gradient. The master
//! problems are small LPs solved by [`solve_lp`].

use serde::{Deserialize, Serialize};

use super::simplex::{dot, solve_lp, LpProblem, LpStatus};
use crate::geometry::{BoxSet, HPolytope};
use crate::{Error, Result};

/// A finite family of convex functions `c_k(z)` with gradients.
pub trait ConstraintSet: Sync {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    /// Writes `∇c_k(z)` into `grad` and returns `c_k(z)`.
    fn eval(&self, k: usize, z: &[f64], grad: &mut [f64]) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value(&self, k: usize, z: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.eval(k, z, &mut g)
    }

    fn max_value(&self, z: &[f64]) -> f64 {
        (0..self.len()).map(|k| self.value(k, z)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Admissible input set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSet {
    Box(BoxSet),
    Polytope(HPolytope),
}

impl InputSet {
    pub fn dim(&self) -> usize {
        match self {
            InputSet::Box(b) => b.dim(),
            InputSet::Polytope(p) => p.dim(),
        }
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        match self {
            InputSet::Box(b) => b.contains(u, tol),
            InputSet::Polytope(p) => p.contains(u, tol),
        }
    }

    /// Appends the set's constraints on variables `offset..offset+dim` to `lp`.
    fn constrain(&self, lp: &mut LpProblem, offset: usize) {
        match self {
            InputSet::Box(b) => {
                for (i, (l, u)) in b.lower().into_iter().zip(b.upper()).enumerate() {
                    lp.lower[offset + i] = l;
                    lp.upper[offset + i] = u;
                }
            }
            InputSet::Polytope(p) => {
                for (r, b) in p.normals.iter().zip(&p.offsets) {
                    let mut row = vec![0.0; lp.dim()];
                    row[offset..offset + r.len()].copy_from_slice(r);
                    lp.push_leq(row, *b);
                }
            }
        }
    }

    /// A point of the set used to seed the cutting planes.
    fn anchor(&self) -> Result<Vec<f64>> {
        match self {
            InputSet::Box(b) => Ok((0..b.dim()).map(|i| b.center_at(i)).collect()),
            InputSet::Polytope(p) => {
                let mut lp = LpProblem::maximize(vec![0.0; p.dim()]);
                for (r, b) in p.normals.iter().zip(&p.offsets) {
                    lp.push_leq(r.clone(), *b);
                }
                let sol = solve_lp(&lp)?;
                match sol.status {
                    LpStatus::Optimal => Ok(sol.x),
                    _ => Err(Error::EmptyPolytope),
                }
            }
        }
    }
}

/// `max γ` over `γ_min ≤ γ ≤ γ_max`, `u ∈ U` with `c_k(γ, u) ≤ 0` for all k.
///
/// The constraint family is evaluated at `z = (γ, u)`.
pub struct ConvexProgram<'a, C: ConstraintSet> {
    pub constraints: &'a C,
    pub input_set: &'a InputSet,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSolution {
    pub gamma: f64,
    pub input: Vec<f64>,
    /// Largest constraint value at `(gamma, input)`; always ≤ 0.
    pub max_constraint: f64,
    /// The optimum sits at `gamma_max`; the true supremum may be larger.
    pub at_cap: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxResult {
    pub point: Vec<f64>,
    /// `max_k c_k(point)`.
    pub upper: f64,
    /// Certified lower bound on `min_z max_k c_k(z)`.
    pub lower: f64,
}

struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<f64>, f64)>,
}

const MAX_CUT_ROUNDS: usize = 400;
const CUTS_PER_ROUND: usize = 6;

/// Kelley's method for `min_{z ∈ domain} max_k c_k(z)`.
///
/// Stops once the best value is `≤ stop_below`, once the lower bound exceeds
/// `stop_above`, or once the gap closes to `gap_tol`.
fn kelley_minimax<C: ConstraintSet>(
    cons: &C,
    domain: &Domain,
    start: &[f64],
    stop_below: f64,
    stop_above: f64,
    gap_tol: f64,
) -> Result<MinimaxResult> {
    let dim = cons.dim();
    let n = cons.len();
    let mut grad = vec![0.0; dim];
    let mut values = vec![0.0; n];
    let mut grads = vec![vec![0.0; dim]; n];

    let mut eval_all = |z: &[f64], values: &mut Vec<f64>, grads: &mut Vec<Vec<f64>>| {
        for k in 0..n {
            values[k] = cons.eval(k, z, &mut grad);
            grads[k].copy_from_slice(&grad);
        }
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };

    // Master LP variables: z (dim) then t; maximize −t.
    let mut objective = vec![0.0; dim + 1];
    objective[dim] = -1.0;
    let mut lp = LpProblem::maximize(objective);
    lp.lower[..dim].copy_from_slice(&domain.lower);
    lp.upper[..dim].copy_from_slice(&domain.upper);
    for (r, b) in &domain.rows {
        let mut row = r.clone();
        row.push(0.0);
        lp.push_leq(row, *b);
    }

    let add_cut = |lp: &mut LpProblem, z: &[f64], value: f64, g: &[f64]| {
        let mut row = g.to_vec();
        row.push(-1.0);
        lp.push_leq(row, dot(g, z) - value);
    };

    let mut best = start.to_vec();
    let mut upper = eval_all(start, &mut values, &mut grads);
    for k in 0..n {
        add_cut(&mut lp, start, values[k], &grads[k]);
    }
    let mut lower = f64::NEG_INFINITY;
    let mut last: Option<Vec<f64>> = None;

    for _ in 0..MAX_CUT_ROUNDS {
        if upper <= stop_below || lower > stop_above || upper - lower <= gap_tol {
            break;
        }
        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::LpBreakdown(format!("cutting-plane master is {:?}", sol.status)));
        }
        let z: Vec<f64> = sol.x[..dim].to_vec();
        lower = lower.max(sol.x[dim]);
        if let Some(prev) = &last {
            if prev.iter().zip(&z).all(|(a, b)| (a - b).abs() <= 1e-15 * (1.0 + a.abs())) {
                break;
            }
        }
        let fmax = eval_all(&z, &mut values, &mut grads);
        if fmax < upper {
            upper = fmax;
            best = z.clone();
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| values[*b].total_cmp(&values[*a]));
        for &k in order.iter().take(CUTS_PER_ROUND) {
            if values[k] > sol.x[dim] - 1e-15 {
                add_cut(&mut lp, &z, values[k], &grads[k]);
            }
        }
        last = Some(z);
    }
    Ok(MinimaxResult { point: best, upper, lower })
}

/// Fixes `γ` and exposes the remaining constraint family in `u`.
struct FixedGamma<'a, C: ConstraintSet> {
    inner: &'a C,
    gamma: f64,
}

impl<C: ConstraintSet> ConstraintSet for FixedGamma<'_, C> {
    fn len(&self) -> usize {
        self.inner.len()
    }
    fn dim(&self) -> usize {
        self.inner.dim() - 1
    }
    fn eval(&self, k: usize, u: &[f64], grad: &mut [f64]) -> f64 {
        let mut z = Vec::with_capacity(u.len() + 1);
        z.push(self.gamma);
        z.extend_from_slice(u);
        let mut g = vec![0.0; z.len()];
        let v = self.inner.eval(k, &z, &mut g);
        grad.copy_from_slice(&g[1..]);
        v
    }
}

fn input_domain(input_set: &InputSet) -> Domain {
    let m = input_set.dim();
    let mut lp = LpProblem::maximize(vec![0.0; m]);
    input_set.constrain(&mut lp, 0);
    Domain { lower: lp.lower, upper: lp.upper, rows: lp.rows.into_iter().zip(lp.rhs).collect() }
}

/// `min_{u ∈ U} max_k c_k(u)` to gap `tol`.
pub fn minimize_max<C: ConstraintSet>(constraints: &C, input_set: &InputSet, tol: f64) -> Result<MinimaxResult> {
    let domain = input_domain(input_set);
    let start = input_set.anchor()?;
    kelley_minimax(constraints, &domain, &start, f64::NEG_INFINITY, f64::INFINITY, tol)
}

/// Some `u ∈ U` with every `c_k(u) ≤ tol`, or `None` when the cutting planes
/// certify (or cannot disprove within their budget) that none exists.
pub fn find_feasible_input<C: ConstraintSet>(
    constraints: &C,
    input_set: &InputSet,
    tol: f64,
) -> Result<Option<Vec<f64>>> {
    find_feasible_from(constraints, input_set, None, tol)
}

fn find_feasible_from<C: ConstraintSet>(
    constraints: &C,
    input_set: &InputSet,
    warm: Option<&[f64]>,
    tol: f64,
) -> Result<Option<Vec<f64>>> {
    if constraints.dim() != input_set.dim() {
        return Err(Error::DimensionMismatch { expected: input_set.dim(), got: constraints.dim() });
    }
    let domain = input_domain(input_set);
    let start = match warm {
        Some(u) if input_set.contains(u, 0.0) => u.to_vec(),
        _ => input_set.anchor()?,
    };
    let res = kelley_minimax(constraints, &domain, &start, 0.0, 0.0, 1e-12)?;
    Ok((res.upper <= tol).then_some(res.point))
}

/// Largest feasible `γ` with a certified input.
///
/// The feasible `γ` values form an interval (joint convexity in `(γ, u)`); a
/// feasible point is located first, then the upper end is bisected to `tol`.
pub fn maximize_gamma<C: ConstraintSet>(cp: &ConvexProgram<'_, C>, tol: f64) -> Result<GammaSolution> {
    let m = cp.input_set.dim();
    if cp.constraints.dim() != m + 1 {
        return Err(Error::DimensionMismatch { expected: m + 1, got: cp.constraints.dim() });
    }
    if !(cp.gamma_min > 0.0 && cp.gamma_max > cp.gamma_min) {
        return Err(Error::InvalidInput("need 0 < gamma_min < gamma_max".into()));
    }

    // Feasibility in (γ, u) jointly.
    let inputs = input_domain(cp.input_set);
    let mut domain = Domain {
        lower: std::iter::once(cp.gamma_min).chain(inputs.lower.iter().copied()).collect(),
        upper: std::iter::once(cp.gamma_max).chain(inputs.upper.iter().copied()).collect(),
        rows: inputs
            .rows
            .iter()
            .map(|(r, b)| (std::iter::once(0.0).chain(r.iter().copied()).collect(), *b))
            .collect(),
    };
    let anchor = cp.input_set.anchor()?;
    let start: Vec<f64> = std::iter::once(cp.gamma_max).chain(anchor.iter().copied()).collect();
    let phase1 = kelley_minimax(cp.constraints, &domain, &start, 0.0, 0.0, 1e-12)?;
    if phase1.upper > 0.0 {
        return Err(Error::Infeasible);
    }
    let mut lo = phase1.point[0];
    let mut lo_input = phase1.point[1..].to_vec();

    let fixed = |gamma: f64, warm: &[f64]| -> Result<Option<Vec<f64>>> {
        let f = FixedGamma { inner: cp.constraints, gamma };
        find_feasible_from(&f, cp.input_set, Some(warm), 0.0)
    };

    if let Some(u) = fixed(cp.gamma_max, &lo_input)? {
        let z: Vec<f64> = std::iter::once(cp.gamma_max).chain(u.iter().copied()).collect();
        return Ok(GammaSolution {
            gamma: cp.gamma_max,
            max_constraint: cp.constraints.max_value(&z),
            input: u,
            at_cap: true,
        });
    }
    let mut hi = cp.gamma_max;
    domain.rows.clear();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match fixed(mid, &lo_input)? {
            Some(u) => {
                lo = mid;
                lo_input = u;
            }
            None => hi = mid,
        }
    }
    let z: Vec<f64> = std::iter::once(lo).chain(lo_input.iter().copied()).collect();
    Ok(GammaSolution { gamma: lo, max_constraint: cp.constraints.max_value(&z), input: lo_input, at_cap: false })
}

/// `max objective·z` over `lower ≤ z ≤ upper` and `c_k(z) ≤ 0`, by outer
/// cutting planes. The returned point may violate the constraints by up to
/// `tol`; `None` when the cuts prove infeasibility.
///
/// Only the cuts tight at recent master solutions are kept, so the master LP
/// stays small even for very large constraint families.
pub fn cutting_plane_maximize<C: ConstraintSet>(
    objective: &[f64],
    constraints: &C,
    lower: &[f64],
    upper: &[f64],
    tol: f64,
) -> Result<Option<Vec<f64>>> {
    let dim = constraints.dim();
    let max_cuts = 12 * (dim + 1);
    let mut lp = LpProblem::maximize(objective.to_vec());
    lp.lower.copy_from_slice(lower);
    lp.upper.copy_from_slice(upper);
    let mut grad = vec![0.0; dim];
    for _ in 0..MAX_CUT_ROUNDS * 4 {
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => {
                return Err(Error::LpBreakdown("cutting-plane master unbounded".into()))
            }
        }
        let z = sol.x;
        let mut worst = f64::NEG_INFINITY;
        let mut cuts = Vec::new();
        for k in 0..constraints.len() {
            let v = constraints.eval(k, &z, &mut grad);
            worst = worst.max(v);
            if v > tol {
                cuts.push((v, grad.clone()));
            }
        }
        if worst <= tol {
            return Ok(Some(z));
        }
        if lp.rows.len() > max_cuts {
            let mut slack: Vec<(f64, usize)> =
                lp.rows.iter().zip(&lp.rhs).enumerate().map(|(i, (r, b))| (b - dot(r, &z), i)).collect();
            slack.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut keep: Vec<usize> = slack.iter().take(max_cuts / 2).map(|s| s.1).collect();
            keep.sort_unstable();
            lp.rows = keep.iter().map(|&i| lp.rows[i].clone()).collect();
            lp.rhs = keep.iter().map(|&i| lp.rhs[i]).collect();
        }
        cuts.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (v, g) in cuts.into_iter().take(CUTS_PER_ROUND) {
            lp.push_leq(g.clone(), dot(&g, &z) - v);
        }
    }
    Err(Error::LpBreakdown("cutting-plane maximization did not converge".into()))
}
