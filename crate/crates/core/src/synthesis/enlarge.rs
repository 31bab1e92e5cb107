use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::certificate::{vertex_control_law, Certificate, RESIDUAL_TOL};
use super::constraints::{scalar_box, scalar_family, AtState, Joint};
use super::ModelFamily;
use crate::dcmodel::Quadratic;
use crate::geometry::{dot, VPolytope};
use crate::linsolve::{cutting_plane_maximize, find_feasible_input, ConstraintSet, InputSet};
use crate::parallel::{map_indexed, Execution};
use crate::{Error, Result};

/// Admission constraints may be violated by at most this much.
const ADMIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmittedPoint {
    /// Position in the candidate list.
    pub index: usize,
    pub point: Vec<f64>,
    pub control: Vec<f64>,
    /// Largest admission residual over all parameter vertices and facets.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnlargeResult {
    pub hull: VPolytope,
    /// Control attached to each hull vertex.
    pub vertex_controls: Vec<Vec<f64>>,
    pub admitted: Vec<AdmittedPoint>,
    pub candidates: Vec<Vec<f64>>,
    /// Hull area before any admission, then after each one (planar only).
    pub areas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalPoint {
    pub direction: Vec<f64>,
    pub point: Option<Vec<f64>>,
    pub control: Option<Vec<f64>>,
    /// Zero direction: any admissible point answers it.
    pub degenerate: bool,
}

/// Admission constraints `F(x, u, H_i; θ_s) − λ_w + φ_W(H_i)` on the
/// certificate's own facets.
struct Admission {
    quads: Vec<Quadratic>,
    rhs: Vec<f64>,
}

impl Admission {
    fn new(cert: &Certificate, family: &ModelFamily) -> Self {
        let bounds = family.facet_bounds(&cert.polytope.hrep);
        let rhs = bounds.iter().flat_map(|_| cert.facet_support.iter().map(|phi| cert.lambda_w - phi)).collect();
        Self { quads: bounds.into_iter().flatten().collect(), rhs }
    }

    fn at<'a>(&'a self, state: &'a [f64]) -> AtState<'a> {
        AtState { quads: self.quads.iter().collect(), rhs: self.rhs.clone(), state }
    }

    fn joint(&self) -> Joint<'_> {
        Joint { quads: self.quads.iter().collect(), rhs: self.rhs.clone() }
    }

    fn residual(&self, x: &[f64], u: &[f64]) -> f64 {
        self.at(x).max_value(u)
    }
}

fn test_point(cert: &Certificate, adm: &Admission, x: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
    if cert.polytope.hrep.contains(x, 1e-9) {
        if let Ok(u) = vertex_control_law(cert, x) {
            let r = adm.residual(x, &u);
            if r <= RESIDUAL_TOL {
                return Ok(Some((u, r)));
            }
        }
    }
    let found = if let Some((lo, hi)) = scalar_box(&cert.input_set) {
        let relaxed = adm.quads.iter().zip(adm.rhs.iter().map(|r| -r - ADMIT_TOL));
        scalar_family(relaxed, x, 0.0).feasible_input(1.0, lo, hi, ADMIT_TOL).map(|u| vec![u])
    } else {
        find_feasible_input(&adm.at(x), &cert.input_set, ADMIT_TOL)?
    };
    let Some(u) = found else { return Ok(None) };
    let r = adm.residual(x, &u);
    Ok((r <= RESIDUAL_TOL).then_some((u, r)))
}

/// Tests each point against the certificate's fixed facets (concurrently),
/// then hull-adds the admitted ones in order.
pub fn admit_points(
    cert: &Certificate,
    family: &ModelFamily,
    points: &[Vec<f64>],
    exec: Execution,
) -> Result<EnlargeResult> {
    let n = cert.polytope.dim();
    if let Some(bad) = points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
    }
    let adm = Admission::new(cert, family);
    let tests = map_indexed(exec, points.len(), |k| test_point(cert, &adm, &points[k]));

    let planar = n == 2;
    let mut hull = cert.polytope.vrep.clone();
    let mut areas = Vec::new();
    if planar {
        areas.push(hull.area_2d()?);
    }
    let mut admitted = Vec::new();
    for (k, t) in tests.into_iter().enumerate() {
        let Some((control, max_residual)) = t? else { continue };
        hull = hull.convex_hull_add(&points[k])?;
        if planar {
            areas.push(hull.area_2d()?);
        }
        admitted.push(AdmittedPoint { index: k, point: points[k].clone(), control, max_residual });
    }

    let known: Vec<(&Vec<f64>, &Vec<f64>)> = cert
        .polytope
        .vrep
        .vertices
        .iter()
        .zip(&cert.controls)
        .chain(admitted.iter().map(|a| (&a.point, &a.control)))
        .collect();
    let vertex_controls = hull
        .vertices
        .iter()
        .map(|v| {
            known
                .iter()
                .min_by(|a, b| dist(a.0, v).total_cmp(&dist(b.0, v)))
                .map(|(_, u)| (*u).clone())
                .unwrap_or_default()
        })
        .collect();
    Ok(EnlargeResult { hull, vertex_controls, admitted, candidates: points.to_vec(), areas })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Candidates drawn uniformly from the state set, one counter-based stream
/// per candidate.
pub fn enlarge_random(
    cert: &Certificate,
    family: &ModelFamily,
    n_candidates: usize,
    seed: u64,
    exec: Execution,
) -> Result<EnlargeResult> {
    let points: Vec<Vec<f64>> = (0..n_candidates)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            cert.state_set.sample_uniform(&mut rng)
        })
        .collect();
    admit_points(cert, family, &points, exec)
}

/// For each direction `c`, the admissible state furthest along `c`.
///
/// The outer cutting-plane optimum is pulled back along the segment to the
/// best certified vertex until every admission constraint holds, so each
/// returned point is admissible and reaches at least that vertex along `c`.
pub fn enlarge_directional(
    cert: &Certificate,
    family: &ModelFamily,
    directions: &[Vec<f64>],
    exec: Execution,
) -> Result<Vec<DirectionalPoint>> {
    let n = cert.polytope.dim();
    let InputSet::Box(inputs) = &cert.input_set else {
        return Err(Error::InvalidInput("directional enlarging needs a box input set".into()));
    };
    let adm = Admission::new(cert, family);
    let joint = adm.joint();
    let lower: Vec<f64> = cert.state_set.lower().into_iter().chain(inputs.lower()).collect();
    let upper: Vec<f64> = cert.state_set.upper().into_iter().chain(inputs.upper()).collect();
    let verts = &cert.polytope.vrep.vertices;

    let results = map_indexed(exec, directions.len(), |k| -> Result<DirectionalPoint> {
        let c = &directions[k];
        if c.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: c.len() });
        }
        let best = (0..verts.len()).max_by(|a, b| dot(c, &verts[*a]).total_cmp(&dot(c, &verts[*b]))).unwrap_or(0);
        let anchor: Vec<f64> = verts[best].iter().chain(&cert.controls[best]).copied().collect();
        if c.iter().all(|v| *v == 0.0) {
            return Ok(DirectionalPoint {
                direction: c.clone(),
                point: Some(verts[best].clone()),
                control: Some(cert.controls[best].clone()),
                degenerate: true,
            });
        }
        let objective: Vec<f64> = c.iter().copied().chain(std::iter::repeat_n(0.0, inputs.dim())).collect();
        let Some(top) = cutting_plane_maximize(&objective, &joint, &lower, &upper, 1e-9)? else {
            return Ok(DirectionalPoint { direction: c.clone(), point: None, control: None, degenerate: false });
        };
        let accept = joint.max_value(&anchor).max(0.0);
        let along = |t: f64| -> Vec<f64> { anchor.iter().zip(&top).map(|(a, b)| a + t * (b - a)).collect() };
        let z = if joint.max_value(&top) <= accept {
            top
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if joint.max_value(&along(mid)) <= accept {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            along(lo)
        };
        Ok(DirectionalPoint {
            direction: c.clone(),
            point: Some(z[..n].to_vec()),
            control: Some(z[n..].to_vec()),
            degenerate: false,
        })
    });
    results.into_iter().collect()
}
