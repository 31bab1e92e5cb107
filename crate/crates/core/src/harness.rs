//! Ground-truth systems, dataset generation and closed-loop verification of
//! certificates against the true dynamics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consistency::{Dataset, DatasetMeta, Transition};
use crate::dcmodel::{evaluate_f, BasisDictionary, ParameterPoint};
use crate::geometry::{BoxSet, SupportFunction};
use crate::parallel::{map_indexed, Execution};
use crate::synthesis::{vertex_control_law, Certificate};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueSystem {
    pub theta: ParameterPoint,
    pub dictionary: BasisDictionary,
    /// Half-width of the ∞-norm noise box.
    pub noise: f64,
    pub state_set: BoxSet,
    pub input_set: BoxSet,
}

impl TrueSystem {
    /// Two-state bilinear plant
    ///
    /// ```text
    /// x1+ = x1 + a x2 + a (μ + (1 − μ) x1) u
    /// x2+ = x2 + a x1 + a (μ − 4 (1 − μ) x2) u
    /// ```
    ///
    /// with `a = 0.01`, `μ = 0.9`, noise `‖w‖∞ ≤ 0.4`, `‖x‖∞ ≤ 4`, `|u| ≤ 2`.
    pub fn planar_example() -> Self {
        let (a, mu) = (0.01, 0.9);
        let theta = ParameterPoint::from_rows(&[
            vec![1.0, a, a * mu, a * (1.0 - mu), 0.0],
            vec![a, 1.0, a * mu, 0.0, -4.0 * a * (1.0 - mu)],
        ]);
        Self {
            theta,
            dictionary: BasisDictionary::planar_bilinear(),
            noise: 0.4,
            state_set: BoxSet { half_widths: vec![4.0, 4.0], center: Vec::new() },
            input_set: BoxSet { half_widths: vec![2.0], center: Vec::new() },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dictionary.validate()?;
        self.theta.check(&self.dictionary)?;
        self.state_set.validate()?;
        self.input_set.validate()?;
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidInput(format!("noise half-width must be non-negative, got {}", self.noise)));
        }
        if self.state_set.dim() != self.dictionary.state_dim || self.input_set.dim() != self.dictionary.input_dim {
            return Err(Error::InvalidInput("state/input sets do not match the dictionary".into()));
        }
        Ok(())
    }

    pub fn noise_box(&self) -> BoxSet {
        BoxSet { half_widths: vec![self.noise; self.dictionary.state_dim], center: Vec::new() }
    }

    pub fn step(&self, x: &[f64], u: &[f64], w: &[f64]) -> Vec<f64> {
        evaluate_f(&self.theta, &self.dictionary, x, u).iter().zip(w).map(|(f, w)| f + w).collect()
    }
}

fn record_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// `T` independent transitions with `x ~ U(X)`, `u ~ U(U)`, `w ~ U(W)`.
pub fn generate_dataset(sys: &TrueSystem, t: usize, seed: u64) -> Result<Dataset> {
    sys.validate()?;
    if t == 0 {
        return Err(Error::InvalidInput("dataset size must be at least 1".into()));
    }
    let noise = sys.noise_box();
    let records = (0..t)
        .map(|k| {
            let mut rng = record_rng(seed, k);
            let state = sys.state_set.sample_uniform(&mut rng);
            let input = sys.input_set.sample_uniform(&mut rng);
            let w = noise.sample_uniform(&mut rng);
            let next = sys.step(&state, &input, &w);
            Transition { state, input, next }
        })
        .collect();
    Ok(Dataset { records, meta: DatasetMeta { seed: Some(seed), source: "simulated".into() } })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub samples: usize,
    /// `max_i H_i f(x, u) + φ_W(H_i) − λ_w` over all samples (−∞ when empty).
    pub max_margin: f64,
    pub violations: usize,
    /// `φ_W(H_i)` used per facet.
    pub facet_noise: Vec<f64>,
    pub lambda_w: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Samples states in the certified set, applies the vertex control law and
/// checks every facet against the worst-case noise of the true system.
pub fn monte_carlo_verify(
    cert: &Certificate,
    sys: &TrueSystem,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<VerificationReport> {
    sys.validate()?;
    if cert.polytope.dim() != sys.dictionary.state_dim {
        return Err(Error::DimensionMismatch { expected: sys.dictionary.state_dim, got: cert.polytope.dim() });
    }
    let h = &cert.polytope.hrep;
    let noise = sys.noise_box();
    let facet_noise: Vec<f64> = h.normals.iter().map(|row| noise.support(row)).collect::<Result<_>>()?;
    let margins = map_indexed(exec, n, |k| -> Result<f64> {
        let mut rng = record_rng(seed, k);
        let x = cert.polytope.vrep.sample_point_with(&mut rng);
        let u = vertex_control_law(cert, &x)?;
        let f = evaluate_f(&sys.theta, &sys.dictionary, &x, &u);
        Ok(h.normals
            .iter()
            .zip(&facet_noise)
            .map(|(row, phi)| row.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() + phi - cert.lambda_w)
            .fold(f64::NEG_INFINITY, f64::max))
    });
    let margins = margins.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(VerificationReport {
        samples: n,
        max_margin: margins.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        violations: margins.iter().filter(|m| **m > 1e-8).count(),
        facet_noise,
        lambda_w: cert.lambda_w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub k: usize,
    pub state: Vec<f64>,
    /// `max_i H_i x_k`.
    pub level: f64,
    /// `λ_w^k`.
    pub bound: f64,
    pub violated: bool,
}

/// Closed loop from `x0` for `k_steps` steps with uniform noise, checking
/// `max_i H_i x_k ≤ λ_w^k` at every step.
///
/// The control at each step is the vertex control law of the certified set
/// evaluated at the current state.
pub fn trajectory_contraction(
    cert: &Certificate,
    sys: &TrueSystem,
    x0: &[f64],
    k_steps: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRow>> {
    sys.validate()?;
    let h = &cert.polytope.hrep;
    if !h.contains(x0, 1e-9) {
        return Err(Error::OutsideHull { residual: h.max_violation(x0) });
    }
    let noise = sys.noise_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level = |x: &[f64]| {
        h.normals.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut rows = Vec::with_capacity(k_steps + 1);
    let mut x = x0.to_vec();
    for k in 0..=k_steps {
        let bound = cert.lambda_w.powi(k as i32);
        let l = level(&x);
        rows.push(TrajectoryRow { k, state: x.clone(), level: l, bound, violated: l > bound + 1e-8 });
        if k == k_steps {
            break;
        }
        // Leaving the certified set ends the run; the row above records it.
        let Ok(u) = vertex_control_law(cert, &x) else { break };
        let w: Vec<f64> = noise.half_widths.iter().map(|hw| if *hw > 0.0 { rng.random_range(-hw..=*hw) } else { 0.0 }).collect();
        x = sys.step(&x, &u, &w);
    }
    Ok(rows)
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from("k,level,bound,violated");
    let n = rows.first().map_or(0, |r| r.state.len());
    for i in 1..=n {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{}", r.k, r.level, r.bound, r.violated));
        for v in &r.state {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
