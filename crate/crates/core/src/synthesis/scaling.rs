use serde::{Deserialize, Serialize};

use super::certificate::{build_certificate, Certificate};
use super::constraints::{scalar_box, scalar_family, AtState, ScaledVertex};
use super::{CandidatePolytope, ModelFamily, SynthesisSettings};
use crate::dcmodel::{DcModel, Quadratic};
use crate::geometry::HPolytope;
use crate::linsolve::{find_feasible_input, maximize_gamma, maximize_gamma_scalar, ConvexProgram};
use crate::parallel::map_indexed;
use crate::{Error, Result};

/// Tolerance on the jointly re-solved vertex controls.
const CONTROL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemOutcome {
    /// Zero when no `γ ≥ γ_min` is feasible.
    pub alpha: f64,
    pub input: Vec<f64>,
    pub at_cap: bool,
    pub infeasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    /// `alpha_table[s][p]`.
    pub alpha_table: Vec<Vec<f64>>,
    /// Minimum over the table.
    pub alpha: f64,
    pub argmin: (usize, usize),
    pub capped_pairs: usize,
    pub infeasible_pairs: usize,
    /// Largest scaling that keeps the polytope inside the state set.
    pub state_limit: f64,
    /// Per-vertex limit when one control must serve every parameter vertex at
    /// once; only computed if the table minimum does not admit such controls.
    pub joint_limits: Option<Vec<f64>>,
    /// The scaling actually certified.
    pub certified_alpha: f64,
}

fn solve_scaled(
    quads: Vec<&Quadratic>,
    support: Vec<f64>,
    vertex: &[f64],
    settings: &SynthesisSettings,
) -> Result<SubproblemOutcome> {
    let solved = if let Some((lo, hi)) = scalar_box(&settings.input_set) {
        let fam = scalar_family(quads.into_iter().zip(support), vertex, settings.lambda_w);
        maximize_gamma_scalar(&fam, lo, hi, settings.gamma_min, settings.gamma_max, settings.tol)
    } else {
        let cons = ScaledVertex { quads, support, vertex, lambda_w: settings.lambda_w };
        let cp = ConvexProgram {
            constraints: &cons,
            input_set: &settings.input_set,
            gamma_min: settings.gamma_min,
            gamma_max: settings.gamma_max,
        };
        maximize_gamma(&cp, settings.tol)
    };
    match solved {
        Ok(sol) => Ok(SubproblemOutcome { alpha: sol.gamma, input: sol.input, at_cap: sol.at_cap, infeasible: false }),
        Err(Error::Infeasible) => Ok(SubproblemOutcome {
            alpha: 0.0,
            input: vec![0.0; settings.input_set.dim()],
            at_cap: false,
            infeasible: true,
        }),
        Err(e) => Err(e),
    }
}

/// `max γ` over `u ∈ U` with `F(γv, u, H_i; θ) ≤ λ_w γ − φ_W(H_i)` for every facet.
pub fn vertex_subproblem(
    vertex: &[f64],
    model: &DcModel,
    h: &HPolytope,
    settings: &SynthesisSettings,
) -> Result<SubproblemOutcome> {
    settings.validate()?;
    let quads: Vec<Quadratic> = h.normals.iter().map(|row| model.bound(row)).collect();
    let support = settings.facet_support(h)?;
    solve_scaled(quads.iter().collect(), support, vertex, settings)
}

/// Controls at every vertex of `a·Ω` valid for all models; `None` if some
/// vertex has none.
fn joint_controls(
    omega: &CandidatePolytope,
    bounds: &[Vec<Quadratic>],
    support: &[f64],
    a: f64,
    settings: &SynthesisSettings,
) -> Result<Option<Vec<Vec<f64>>>> {
    let quads: Vec<&Quadratic> = bounds.iter().flatten().collect();
    if let Some((lo, hi)) = scalar_box(&settings.input_set) {
        let all_support = bounds.iter().flat_map(|_| support.iter().copied());
        let found = map_indexed(settings.execution, omega.vrep.len(), |p| {
            let fam = scalar_family(quads.iter().copied().zip(all_support.clone()), &omega.vrep.vertices[p], settings.lambda_w);
            fam.feasible_input(a, lo, hi, CONTROL_TOL).map(|u| vec![u])
        });
        return Ok(found.into_iter().collect());
    }
    let rhs: Vec<f64> = bounds.iter().flat_map(|_| support.iter().map(|phi| settings.lambda_w * a - phi)).collect();
    let found = map_indexed(settings.execution, omega.vrep.len(), |p| {
        let state: Vec<f64> = omega.vrep.vertices[p].iter().map(|v| a * v).collect();
        let cons = AtState { quads: quads.clone(), rhs: rhs.clone(), state: &state };
        find_feasible_input(&cons, &settings.input_set, CONTROL_TOL)
    });
    found.into_iter().collect::<Result<Option<Vec<_>>>>()
}

/// Scales `omega0` by the smallest per-(parameter vertex, polytope vertex)
/// optimum, clips to the state set and certifies the result.
pub fn compute_contractive_set(
    omega0: &CandidatePolytope,
    family: &ModelFamily,
    settings: &SynthesisSettings,
    consistency_digest: &str,
) -> Result<(ScalingResult, Certificate)> {
    settings.validate()?;
    omega0.validate()?;
    if omega0.dim() != family.dictionary.state_dim {
        return Err(Error::DimensionMismatch { expected: family.dictionary.state_dim, got: omega0.dim() });
    }
    let h = &omega0.hrep;
    let support = settings.facet_support(h)?;
    let bounds = family.facet_bounds(h);
    let (q, n_v) = (family.len(), omega0.vrep.len());

    let outcomes = map_indexed(settings.execution, q * n_v, |idx| {
        let (s, p) = (idx / n_v, idx % n_v);
        solve_scaled(bounds[s].iter().collect(), support.clone(), &omega0.vrep.vertices[p], settings)
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let alpha_table: Vec<Vec<f64>> = outcomes.chunks(n_v).map(|row| row.iter().map(|o| o.alpha).collect()).collect();
    let (mut alpha, mut argmin) = (f64::INFINITY, (0, 0));
    for (s, row) in alpha_table.iter().enumerate() {
        for (p, a) in row.iter().enumerate() {
            if *a < alpha {
                alpha = *a;
                argmin = (s, p);
            }
        }
    }
    let infeasible_pairs = outcomes.iter().filter(|o| o.infeasible).count();
    let capped_pairs = outcomes.iter().filter(|o| o.at_cap).count();
    let state_limit = omega0.max_scale_within(&settings.state_set);
    let mut result = ScalingResult {
        alpha_table,
        alpha,
        argmin,
        capped_pairs,
        infeasible_pairs,
        state_limit,
        joint_limits: None,
        certified_alpha: alpha.min(state_limit),
    };
    if infeasible_pairs > 0 {
        return Err(Error::NoCertificate(format!(
            "{infeasible_pairs} of {} vertex subproblems are infeasible at gamma_min; first at (s, p) = {argmin:?}",
            q * n_v
        )));
    }

    let mut a = result.certified_alpha;
    let mut controls = joint_controls(omega0, &bounds, &support, a, settings)?;
    if controls.is_none() {
        let all: Vec<&Quadratic> = bounds.iter().flatten().collect();
        let all_support: Vec<f64> = bounds.iter().flat_map(|_| support.iter().copied()).collect();
        let limits = map_indexed(settings.execution, n_v, |p| {
            solve_scaled(all.clone(), all_support.clone(), &omega0.vrep.vertices[p], settings)
        })
        .into_iter()
        .map(|o| o.map(|o| o.alpha))
        .collect::<Result<Vec<f64>>>()?;
        a = limits.iter().copied().fold(a, f64::min);
        result.joint_limits = Some(limits);
        result.certified_alpha = a;
        if a > 0.0 {
            controls = joint_controls(omega0, &bounds, &support, a, settings)?;
        }
    }
    let Some(controls) = controls else {
        return Err(Error::NoCertificate(format!("no common vertex controls at scaling {a}")));
    };
    let polytope = omega0.scaled(a)?;
    let cert = build_certificate(polytope, a, controls, family, settings, consistency_digest)?;
    Ok((result, cert))
}
