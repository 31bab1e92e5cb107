//! Contractive-set synthesis: largest certified scaling of a candidate
//! polytope, the vertex control law, and hull enlargement.

mod certificate;
mod constraints;
mod enlarge;
mod scaling;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dcmodel::{shift_bounds_over, BasisDictionary, DcModel, ParameterPoint, Quadratic};
use crate::geometry::{BoxSet, HPolytope, SupportFunction, VPolytope};
use crate::linsolve::InputSet;
use crate::parallel::{map_slice, Execution};
use crate::{Error, Result};

pub use certificate::{check_certificate, residual_tensor, vertex_control_law, Certificate, ResidualSummary, CertificateReport};
pub use enlarge::{
    admit_points, enlarge_directional, enlarge_random, AdmittedPoint, DirectionalPoint, EnlargeResult,
};
pub use scaling::{compute_contractive_set, vertex_subproblem, ScalingResult, SubproblemOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Initial,
    Scaled,
    Enlarged,
}

/// A polytope `{x : Hx ≤ 1}` held in both representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePolytope {
    pub hrep: HPolytope,
    pub vrep: VPolytope,
    pub provenance: Provenance,
}

impl CandidatePolytope {
    pub fn from_vertices(vrep: VPolytope, provenance: Provenance) -> Result<Self> {
        let hrep = vrep.facet_representation()?;
        let vrep = hrep.enumerate_vertices()?;
        Ok(Self { hrep, vrep, provenance })
    }

    /// Regular `n_v`-gon with a vertex on the positive `x1` axis at distance
    /// `radius`, so the polygon lies in the `radius` ∞-norm ball.
    pub fn regular_polygon(n_v: usize, radius: f64) -> Result<Self> {
        if n_v < 3 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("need n_v >= 3 and radius > 0, got {n_v}, {radius}")));
        }
        let pts = (0..n_v)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n_v as f64;
                vec![radius * t.cos(), radius * t.sin()]
            })
            .collect();
        Self::from_vertices(VPolytope::new(pts)?, Provenance::Initial)
    }

    pub fn hypercube(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput("hypercube needs dim > 0 and radius > 0".into()));
        }
        let hrep = BoxSet::cube(dim, radius)?.to_hpolytope().to_normalized()?;
        let vrep = hrep.enumerate_vertices()?;
        Ok(Self { hrep, vrep, provenance: Provenance::Initial })
    }

    /// Polygon in the plane, hypercube otherwise.
    pub fn initial(dim: usize, n_v: usize, radius: f64) -> Result<Self> {
        if dim == 2 {
            Self::regular_polygon(n_v, radius)
        } else {
            Self::hypercube(dim, radius)
        }
    }

    pub fn dim(&self) -> usize {
        self.hrep.dim()
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Ok(Self { hrep: self.hrep.scale(a)?, vrep: self.vrep.scale(a), provenance: Provenance::Scaled })
    }

    pub fn validate(&self) -> Result<()> {
        self.hrep.validate()?;
        self.vrep.validate()?;
        if !self.hrep.is_normalized() {
            return Err(Error::OriginNotInterior);
        }
        for v in &self.vrep.vertices {
            if self.hrep.max_violation(v) > 1e-8 {
                return Err(Error::InvalidInput("vertex list and facets disagree".into()));
            }
        }
        Ok(())
    }

    /// Largest `a` with `a·Ω ⊆ X` for a box `X` containing the origin.
    pub fn max_scale_within(&self, states: &BoxSet) -> f64 {
        let mut best = f64::INFINITY;
        for v in &self.vrep.vertices {
            for (i, x) in v.iter().enumerate() {
                let room = if *x > 0.0 { states.upper()[i] } else { -states.lower()[i] };
                if x.abs() > 0.0 {
                    best = best.min(room / x.abs());
                }
            }
        }
        best
    }
}

/// Everything fixed across one synthesis run besides the models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSettings {
    pub lambda_w: f64,
    pub noise: BoxSet,
    pub input_set: InputSet,
    pub state_set: BoxSet,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub tol: f64,
    #[serde(skip)]
    pub execution: Execution,
}

impl SynthesisSettings {
    pub fn new(lambda_w: f64, noise: BoxSet, input_set: InputSet, state_set: BoxSet) -> Self {
        Self {
            lambda_w,
            noise,
            input_set,
            state_set,
            gamma_min: 1e-6,
            gamma_max: 1e3,
            tol: 1e-6,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_w > 0.0 && self.lambda_w <= 1.0) {
            return Err(Error::InvalidInput(format!("lambda_w must lie in (0, 1], got {}", self.lambda_w)));
        }
        self.noise.validate()?;
        self.state_set.validate()?;
        if !(self.gamma_min > 0.0 && self.gamma_max > self.gamma_min && self.tol > 0.0) {
            return Err(Error::InvalidInput("need 0 < gamma_min < gamma_max and tol > 0".into()));
        }
        if !self.state_set.contains(&vec![0.0; self.state_set.dim()], 0.0) {
            return Err(Error::InvalidInput("state set must contain the origin".into()));
        }
        Ok(())
    }

    /// `φ_W(H_i)` for every row.
    pub fn facet_support(&self, h: &HPolytope) -> Result<Vec<f64>> {
        h.normals.iter().map(|row| self.noise.support(row)).collect()
    }
}

/// DC models for every parameter vertex, all decomposed with shared shift bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    pub dictionary: BasisDictionary,
    pub parameters: Vec<ParameterPoint>,
    pub shift_bounds: Vec<f64>,
    pub models: Vec<DcModel>,
}

impl ModelFamily {
    /// Shift bounds default to the smallest admissible ones over `parameters`.
    pub fn new(
        dictionary: &BasisDictionary,
        parameters: Vec<ParameterPoint>,
        shift_bounds: Option<Vec<f64>>,
        exec: Execution,
    ) -> Result<Self> {
        if parameters.is_empty() {
            return Err(Error::InvalidInput("no parameter vertices".into()));
        }
        let shift_bounds = shift_bounds.unwrap_or_else(|| shift_bounds_over(&parameters, dictionary));
        let models = map_slice(exec, &parameters, |p| DcModel::decompose(p, dictionary, &shift_bounds))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dictionary: dictionary.clone(), parameters, shift_bounds, models })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// `bounds[s][i]` = `F(·, ·, H_i; θ_s)` as a quadratic in `(x, u)`.
    fn facet_bounds(&self, h: &HPolytope) -> Vec<Vec<Quadratic>> {
        self.models.iter().map(|m| h.normals.iter().map(|row| m.bound(row)).collect()).collect()
    }
}
