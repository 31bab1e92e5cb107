use serde::{Deserialize, Serialize};

use super::{CandidatePolytope, ModelFamily, SynthesisSettings};
use crate::dcmodel::BasisDictionary;
use crate::geometry::{BoxSet, SupportFunction};
use crate::linsolve::InputSet;
use crate::parallel::map_indexed;
use crate::{sha256_hex, Error, Result};

/// Largest residual accepted by [`check_certificate`].
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub max: f64,
    /// `(parameter vertex s, polytope vertex p, facet i)`.
    pub argmax: (usize, usize, usize),
    pub count: usize,
}

/// A polytope with one control per vertex such that every parameter vertex
/// maps every polytope vertex into `λ_w` times the polytope, under worst-case
/// noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub version: String,
    pub polytope: CandidatePolytope,
    pub lambda_w: f64,
    /// Scaling applied to the initial candidate.
    pub alpha: f64,
    pub controls: Vec<Vec<f64>>,
    /// `φ_W(H_i)` per facet.
    pub facet_support: Vec<f64>,
    pub noise: BoxSet,
    pub input_set: InputSet,
    pub state_set: BoxSet,
    pub dictionary: BasisDictionary,
    pub shift_bounds: Vec<f64>,
    pub residuals: ResidualSummary,
    pub consistency_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub residuals: ResidualSummary,
    /// Vertices whose control lies outside the input set.
    pub invalid_controls: Vec<usize>,
    /// Stored `φ_W(H_i)` disagree with the recomputed values.
    pub support_mismatch: bool,
    pub lambda_in_range: bool,
}

pub(crate) fn build_certificate(
    polytope: CandidatePolytope,
    alpha: f64,
    controls: Vec<Vec<f64>>,
    family: &ModelFamily,
    settings: &SynthesisSettings,
    consistency_digest: &str,
) -> Result<Certificate> {
    let facet_support = settings.facet_support(&polytope.hrep)?;
    let mut cert = Certificate {
        version: env!("CARGO_PKG_VERSION").to_string(),
        polytope,
        lambda_w: settings.lambda_w,
        alpha,
        controls,
        facet_support,
        noise: settings.noise.clone(),
        input_set: settings.input_set.clone(),
        state_set: settings.state_set.clone(),
        dictionary: family.dictionary.clone(),
        shift_bounds: family.shift_bounds.clone(),
        residuals: ResidualSummary { max: f64::NEG_INFINITY, argmax: (0, 0, 0), count: 0 },
        consistency_digest: consistency_digest.to_string(),
    };
    let report = check_certificate(&cert, family, settings.execution)?;
    cert.residuals = report.residuals.clone();
    if !report.passed {
        return Err(Error::NoCertificate(format!(
            "certificate check failed: max residual {:.3e} at {:?}",
            report.residuals.max, report.residuals.argmax
        )));
    }
    Ok(cert)
}

impl Certificate {
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("certificate serializes"))
    }

    pub fn area(&self) -> Result<f64> {
        self.polytope.vrep.area_2d()
    }
}

/// `r[s][p][i] = F(v_p, u_p, H_i; θ_s) − λ_w + φ_W(H_i)`, flattened in that order.
pub fn residual_tensor(cert: &Certificate, family: &ModelFamily, exec: crate::parallel::Execution) -> Result<Vec<f64>> {
    let verts = &cert.polytope.vrep.vertices;
    if cert.controls.len() != verts.len() {
        return Err(Error::DimensionMismatch { expected: verts.len(), got: cert.controls.len() });
    }
    let h = &cert.polytope.hrep;
    let support: Vec<f64> = h.normals.iter().map(|row| cert.noise.support(row)).collect::<Result<_>>()?;
    let rows = map_indexed(exec, family.len(), |s| {
        let model = &family.models[s];
        let mut out = Vec::with_capacity(verts.len() * h.num_facets());
        for (v, u) in verts.iter().zip(&cert.controls) {
            for (row, phi) in h.normals.iter().zip(&support) {
                out.push(model.evaluate_bound(v, u, row) - cert.lambda_w + phi);
            }
        }
        out
    });
    Ok(rows.concat())
}

/// Recomputes every residual against the given parameter vertices.
pub fn check_certificate(cert: &Certificate, family: &ModelFamily, exec: crate::parallel::Execution) -> Result<CertificateReport> {
    let tensor = residual_tensor(cert, family, exec)?;
    let (n_v, n_h) = (cert.polytope.vrep.len(), cert.polytope.hrep.num_facets());
    let mut summary = ResidualSummary { max: f64::NEG_INFINITY, argmax: (0, 0, 0), count: tensor.len() };
    for (k, r) in tensor.iter().enumerate() {
        if *r > summary.max || r.is_nan() {
            summary.max = if r.is_nan() { f64::INFINITY } else { *r };
            summary.argmax = (k / (n_v * n_h), (k / n_h) % n_v, k % n_h);
        }
    }
    let invalid_controls: Vec<usize> = cert
        .controls
        .iter()
        .enumerate()
        .filter(|(_, u)| !cert.input_set.contains(u, 1e-9))
        .map(|(p, _)| p)
        .collect();
    let support_mismatch = cert.facet_support.len() != n_h
        || cert
            .polytope
            .hrep
            .normals
            .iter()
            .zip(&cert.facet_support)
            .any(|(row, phi)| cert.noise.support(row).map_or(true, |s| (s - phi).abs() > 1e-9));
    let lambda_in_range = (0.0..=1.0).contains(&cert.lambda_w);
    let passed = summary.max <= RESIDUAL_TOL && invalid_controls.is_empty() && !support_mismatch && lambda_in_range;
    Ok(CertificateReport { passed, residuals: summary, invalid_controls, support_mismatch, lambda_in_range })
}

/// `u = Σ α_p u_p` with `α` the minimum-norm barycentric coordinates of `x`.
pub fn vertex_control_law(cert: &Certificate, x: &[f64]) -> Result<Vec<f64>> {
    let alpha = cert.polytope.vrep.barycentric_coefficients(x)?;
    let m = cert.input_set.dim();
    let mut u = vec![0.0; m];
    for (a, up) in alpha.iter().zip(&cert.controls) {
        for (ui, v) in u.iter_mut().zip(up) {
            *ui += a * v;
        }
    }
    Ok(u)
}
