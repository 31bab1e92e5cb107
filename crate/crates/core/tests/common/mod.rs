#![allow(dead_code)]

use polycontract::consistency::{build_consistency_set, ConsistencySet};
use polycontract::dcmodel::{DcModel, Quadratic};
use polycontract::geometry::{BoxSet, HPolytope, SupportFunction};
use polycontract::harness::{generate_dataset, TrueSystem};
use polycontract::linsolve::InputSet;
use polycontract::parallel::Execution;
use polycontract::synthesis::{
    compute_contractive_set, CandidatePolytope, Certificate, ModelFamily, ScalingResult, SynthesisSettings,
};

pub const SEED: u64 = 1;

/// The planar example with a different noise half-width.
pub fn example_system(noise: f64) -> TrueSystem {
    let mut sys = TrueSystem::planar_example();
    sys.noise = noise;
    sys
}

pub fn settings_for(sys: &TrueSystem, lambda_w: f64) -> SynthesisSettings {
    SynthesisSettings::new(
        lambda_w,
        BoxSet::cube(sys.dictionary.state_dim, sys.noise).unwrap(),
        InputSet::Box(sys.input_set.clone()),
        sys.state_set.clone(),
    )
}

pub fn consistency(sys: &TrueSystem, t: usize, seed: u64) -> ConsistencySet {
    let data = generate_dataset(sys, t, seed).unwrap();
    let mut cs = build_consistency_set(&data, &sys.dictionary, sys.noise).unwrap();
    cs.enumerate_vertices(Execution::Parallel).unwrap();
    cs
}

pub struct Pipeline {
    pub sys: TrueSystem,
    pub cs: ConsistencySet,
    pub family: ModelFamily,
    pub settings: SynthesisSettings,
    pub scaling: ScalingResult,
    pub cert: Certificate,
}

/// Low-noise variant of the example for which certificates exist:
/// `ε = 0.001`, `λ_w = 0.999`, `T = 30`.
pub fn reduced_pipeline(seed: u64) -> Pipeline {
    let sys = example_system(0.001);
    let cs = consistency(&sys, 30, seed);
    let family = ModelFamily::new(&sys.dictionary, cs.vertices.clone(), None, Execution::Parallel).unwrap();
    let settings = settings_for(&sys, 0.999);
    let omega0 = CandidatePolytope::regular_polygon(12, 0.25).unwrap();
    let (scaling, cert) = compute_contractive_set(&omega0, &family, &settings, &cs.digest()).unwrap();
    Pipeline { sys, cs, family, settings, scaling, cert }
}

/// `c_i(γ, u) = F(γv, u, H_i) − λγ + φ_W(H_i)` evaluated pointwise.
pub struct GridProblem {
    quads: Vec<Quadratic>,
    support: Vec<f64>,
    vertex: Vec<f64>,
    lambda_w: f64,
    u_lo: f64,
    u_hi: f64,
}

impl GridProblem {
    pub fn new(model: &DcModel, h: &HPolytope, vertex: &[f64], settings: &SynthesisSettings) -> Self {
        let InputSet::Box(b) = &settings.input_set else { panic!("box input expected") };
        Self {
            quads: h.normals.iter().map(|row| model.bound(row)).collect(),
            support: h.normals.iter().map(|row| settings.noise.support(row).unwrap()).collect(),
            vertex: vertex.to_vec(),
            lambda_w: settings.lambda_w,
            u_lo: b.lower()[0],
            u_hi: b.upper()[0],
        }
    }

    fn feasible(&self, gamma: f64, du: f64) -> bool {
        let steps = ((self.u_hi - self.u_lo) / du).round() as usize;
        let mut z = [gamma * self.vertex[0], gamma * self.vertex[1], 0.0];
        (0..=steps).any(|k| {
            z[2] = self.u_lo + k as f64 * du;
            self.quads
                .iter()
                .zip(&self.support)
                .all(|(q, phi)| q.value(&z) - self.lambda_w * gamma + phi <= 0.0)
        })
    }

    /// Largest grid `γ` (step 1e-4) with a grid `u` (step 1e-4) satisfying every
    /// constraint: a coarse scan brackets the feasible interval, then the last
    /// coarse cell is rescanned finely. `None` when no coarse point is feasible.
    pub fn oracle(&self, gamma_limit: f64) -> Option<f64> {
        let coarse = 0.05;
        let mut last = None;
        let mut g = coarse;
        while g <= gamma_limit {
            if self.feasible(g, 1e-3) {
                last = Some(g);
            } else if last.is_some() {
                break;
            }
            g += coarse;
        }
        let start = last?;
        let fine = 1e-4;
        let mut best = start;
        let mut k = 1;
        loop {
            let g = start + k as f64 * fine;
            if g > gamma_limit || !self.feasible(g, 1e-4) {
                break;
            }
            best = g;
            k += 1;
        }
        Some(best)
    }
}
