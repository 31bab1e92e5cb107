mod common;

use common::{consistency, example_system, settings_for, SEED};
use polycontract::dcmodel::{Atom, BasisDictionary, DcModel, ParameterPoint};
use polycontract::geometry::{BoxSet, SupportFunction};
use polycontract::harness::{monte_carlo_verify, TrueSystem};
use polycontract::linsolve::InputSet;
use polycontract::parallel::Execution;
use polycontract::synthesis::{
    admit_points, check_certificate, compute_contractive_set, enlarge_directional, enlarge_random, residual_tensor,
    vertex_control_law, vertex_subproblem, CandidatePolytope, Certificate, ModelFamily, Provenance, ScalingResult,
    SynthesisSettings,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Small {
    sys: TrueSystem,
    family: ModelFamily,
    settings: SynthesisSettings,
    omega0: CandidatePolytope,
    scaling: ScalingResult,
    cert: Certificate,
}

/// Low-noise example with every 600th parameter vertex, to keep runs short.
fn small() -> Small {
    let sys = example_system(0.001);
    let cs = consistency(&sys, 30, SEED);
    let params: Vec<ParameterPoint> = cs.vertices.iter().step_by(600).cloned().collect();
    let family = ModelFamily::new(&sys.dictionary, params, None, Execution::Parallel).unwrap();
    let settings = settings_for(&sys, 0.999);
    let omega0 = CandidatePolytope::regular_polygon(12, 0.25).unwrap();
    let (scaling, cert) = compute_contractive_set(&omega0, &family, &settings, &cs.digest()).unwrap();
    Small { sys, family, settings, omega0, scaling, cert }
}

/// `x⁺ = 0.5 x` with an inert input.
fn linear_family() -> ModelFamily {
    let dict = BasisDictionary::new(
        2,
        1,
        vec![Atom::StateLinear { state: 0 }, Atom::StateLinear { state: 1 }, Atom::InputLinear { input: 0 }],
    )
    .unwrap();
    let theta = ParameterPoint::from_rows(&[vec![0.5, 0.0, 0.0], vec![0.0, 0.5, 0.0]]);
    ModelFamily::new(&dict, vec![theta], None, Execution::Sequential).unwrap()
}

fn linear_settings(noise: f64, lambda_w: f64) -> SynthesisSettings {
    SynthesisSettings::new(
        lambda_w,
        BoxSet::cube(2, noise).unwrap(),
        InputSet::Box(BoxSet::cube(1, 1.0).unwrap()),
        BoxSet::cube(2, 1e6).unwrap(),
    )
}

#[test]
fn stable_linear_system_hits_the_cap() {
    let family = linear_family();
    let omega = CandidatePolytope::hypercube(2, 1.0).unwrap();
    let settings = linear_settings(0.0, 0.9);
    let out = vertex_subproblem(&omega.vrep.vertices[0], &family.models[0], &omega.hrep, &settings).unwrap();
    assert!(out.at_cap && !out.infeasible);
    assert_eq!(out.alpha, settings.gamma_max);
}

#[test]
fn dominating_noise_is_infeasible() {
    let family = linear_family();
    let omega = CandidatePolytope::hypercube(2, 1.0).unwrap();
    let settings = linear_settings(2e3, 0.9);
    let out = vertex_subproblem(&omega.vrep.vertices[0], &family.models[0], &omega.hrep, &settings).unwrap();
    assert!(out.infeasible);
    assert_eq!(out.alpha, 0.0);
    let err = compute_contractive_set(&omega, &family, &settings, "").unwrap_err();
    assert!(matches!(err, polycontract::Error::NoCertificate(_)));
}

#[test]
fn linear_system_is_clipped_to_the_state_set() {
    let family = linear_family();
    let omega = CandidatePolytope::hypercube(2, 1.0).unwrap();
    let mut settings = linear_settings(0.01, 0.9);
    settings.state_set = BoxSet::cube(2, 3.0).unwrap();
    let (scaling, cert) = compute_contractive_set(&omega, &family, &settings, "").unwrap();
    assert!((scaling.certified_alpha - 3.0).abs() < 1e-9);
    assert!(cert.polytope.vrep.vertices.iter().all(|v| settings.state_set.contains(v, 1e-9)));
    assert_eq!(cert.polytope.provenance, Provenance::Scaled);
}

#[test]
fn single_parameter_vertex() {
    let sys = example_system(0.001);
    let family = ModelFamily::new(&sys.dictionary, vec![sys.theta.clone()], None, Execution::Sequential).unwrap();
    let settings = settings_for(&sys, 0.999);
    let omega0 = CandidatePolytope::regular_polygon(8, 0.25).unwrap();
    let (scaling, cert) = compute_contractive_set(&omega0, &family, &settings, "").unwrap();
    assert_eq!(scaling.alpha_table.len(), 1);
    assert_eq!(scaling.alpha_table[0].len(), 8);
    let min = scaling.alpha_table[0].iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(scaling.alpha, min);
    assert!(check_certificate(&cert, &family, Execution::Sequential).unwrap().passed);
}

#[test]
fn example_certificate() {
    let s = small();
    let table_min = s.scaling.alpha_table.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(s.scaling.alpha, table_min);
    assert_eq!(s.scaling.alpha_table[s.scaling.argmin.0][s.scaling.argmin.1], table_min);
    assert!(s.scaling.alpha_table.iter().flatten().all(|a| *a > 0.0));
    assert!(s.scaling.certified_alpha > 1.0);
    assert!(s.cert.residuals.max <= 1e-6);
    assert!(s.cert.polytope.vrep.vertices.iter().all(|v| s.sys.state_set.contains(v, 1e-9)));
    assert!(s.cert.controls.iter().all(|u| s.cert.input_set.contains(u, 1e-12)));

    let report = check_certificate(&s.cert, &s.family, Execution::Parallel).unwrap();
    assert!(report.passed && report.invalid_controls.is_empty() && !report.support_mismatch && report.lambda_in_range);
    let r = residual_tensor(&s.cert, &s.family, Execution::Sequential).unwrap();
    assert_eq!(r.len(), s.family.len() * 12 * 12);
    assert_eq!(r.iter().copied().fold(f64::NEG_INFINITY, f64::max), report.residuals.max);

    // φ_W(H_i) = ε‖H_i‖₁ for the box noise set.
    for (row, phi) in s.cert.polytope.hrep.normals.iter().zip(&s.cert.facet_support) {
        let l1: f64 = row.iter().map(|v| v.abs()).sum();
        assert!((phi - 0.001 * l1).abs() < 1e-15);
    }
}

#[test]
fn tampered_certificates_fail() {
    let s = small();
    let mut low = s.cert.clone();
    low.lambda_w -= 0.5;
    let report = check_certificate(&low, &s.family, Execution::Sequential).unwrap();
    assert!(!report.passed && report.residuals.max > 0.0);

    let mut bad = s.cert.clone();
    bad.controls[3] = vec![2.5];
    let report = check_certificate(&bad, &s.family, Execution::Sequential).unwrap();
    assert!(!report.passed);
    assert_eq!(report.invalid_controls, vec![3]);

    let mut out_of_range = s.cert.clone();
    out_of_range.lambda_w = 1.5;
    assert!(!check_certificate(&out_of_range, &s.family, Execution::Sequential).unwrap().lambda_in_range);
}

#[test]
fn certificate_is_sound_for_every_parameter_vertex() {
    let s = small();
    for theta in s.family.parameters.iter().step_by(5) {
        let mut sys = s.sys.clone();
        sys.theta = theta.clone();
        let report = monte_carlo_verify(&s.cert, &sys, 500, 4, Execution::Parallel).unwrap();
        assert!(report.passed(), "max margin {}", report.max_margin);
    }
}

#[test]
fn control_law() {
    let s = small();
    for (v, u) in s.cert.polytope.vrep.vertices.iter().zip(&s.cert.controls) {
        let got = vertex_control_law(&s.cert, v).unwrap();
        assert!((got[0] - u[0]).abs() < 1e-9);
    }
    // The 12-gon is centrally symmetric: v_{p+6} = −v_p.
    let mut sym = s.cert.clone();
    for p in 0..6 {
        sym.controls[p + 6] = vec![-sym.controls[p][0]];
    }
    assert!(vertex_control_law(&sym, &[0.0, 0.0]).unwrap()[0].abs() < 1e-12);
    assert!(vertex_control_law(&s.cert, &[10.0, 0.0]).is_err());
}

#[test]
fn larger_lambda_never_shrinks_the_table() {
    let sys = example_system(0.001);
    let cs = consistency(&sys, 30, SEED);
    let params: Vec<ParameterPoint> = cs.vertices.iter().step_by(2500).cloned().collect();
    let family = ModelFamily::new(&sys.dictionary, params, None, Execution::Sequential).unwrap();
    let omega0 = CandidatePolytope::regular_polygon(12, 0.25).unwrap();
    let table = |lambda: f64| {
        let settings = settings_for(&sys, lambda);
        compute_contractive_set(&omega0, &family, &settings, "").unwrap().0.alpha_table
    };
    let (low, high) = (table(0.9995), table(1.0));
    for (a, b) in low.iter().flatten().zip(high.iter().flatten()) {
        assert!(*b >= *a - 1e-6, "{b} < {a}");
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let s = small();
    let mut seq = s.settings.clone();
    seq.execution = Execution::Sequential;
    let (scaling, cert) = compute_contractive_set(&s.omega0, &s.family, &seq, &s.cert.consistency_digest).unwrap();
    assert_eq!(scaling.alpha_table, s.scaling.alpha_table);
    assert_eq!(cert.digest(), s.cert.digest());
}

#[test]
fn certificate_json_round_trip() {
    let s = small();
    let json = serde_json::to_string(&s.cert).unwrap();
    let back: Certificate = serde_json::from_str(&json).unwrap();
    assert_eq!(back.digest(), s.cert.digest());
}

#[test]
fn enlarging_edge_cases() {
    let s = small();
    let base = s.cert.area().unwrap();

    let none = admit_points(&s.cert, &s.family, &[], Execution::Sequential).unwrap();
    assert_eq!(none.hull, s.cert.polytope.vrep);
    assert_eq!(none.areas, vec![base]);

    let inside = admit_points(&s.cert, &s.family, &[vec![0.01, -0.02]], Execution::Sequential).unwrap();
    assert_eq!(inside.admitted.len(), 1);
    assert_eq!(inside.hull, s.cert.polytope.vrep);

    let far = admit_points(&s.cert, &s.family, &[vec![3.9, 3.9]], Execution::Sequential).unwrap();
    assert!(far.admitted.is_empty());

    let zero = enlarge_directional(&s.cert, &s.family, &[vec![0.0, 0.0]], Execution::Sequential).unwrap();
    assert!(zero[0].degenerate && zero[0].point.is_some());
}

#[test]
fn random_enlarging_is_deterministic_and_monotone() {
    let s = small();
    let a = enlarge_random(&s.cert, &s.family, 50, 7, Execution::Parallel).unwrap();
    let b = enlarge_random(&s.cert, &s.family, 50, 7, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert!(a.candidates.iter().all(|c| s.sys.state_set.contains(c, 0.0)));
    assert!(a.areas.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert_eq!(a.areas.len(), a.admitted.len() + 1);
}

#[test]
fn directional_points_extend_the_set() {
    let s = small();
    let dirs = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
    let found = enlarge_directional(&s.cert, &s.family, &dirs, Execution::Sequential).unwrap();
    let mut beyond = 0;
    for d in &found {
        let p = d.point.as_ref().expect("admissible point");
        let reach: f64 = p.iter().zip(&d.direction).map(|(a, b)| a * b).sum();
        let support = s.cert.polytope.vrep.support(&d.direction).unwrap();
        assert!(reach >= support - 1e-9, "direction {:?} reached {reach} < {support}", d.direction);
        if reach > support + 1e-6 {
            beyond += 1;
        }
    }
    assert!(beyond >= 1);
    let points: Vec<Vec<f64>> = found.iter().filter_map(|d| d.point.clone()).collect();
    let res = admit_points(&s.cert, &s.family, &points, Execution::Sequential).unwrap();
    assert_eq!(res.admitted.len(), points.len());
    assert!(*res.areas.last().unwrap() > s.cert.area().unwrap());
}

#[test]
fn scaled_condition_identity() {
    let s = small();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = &s.omega0.hrep;
    for _ in 0..100 {
        let model: &DcModel = &s.family.models[rng.random_range(0..s.family.len())];
        let gamma: f64 = rng.random_range(0.1..20.0);
        let v = &s.omega0.vrep.vertices[rng.random_range(0..12)];
        let u = [rng.random_range(-2.0..2.0)];
        let row = &h.normals[rng.random_range(0..h.num_facets())];
        let x: Vec<f64> = v.iter().map(|c| gamma * c).collect();
        let shrunk: Vec<f64> = row.iter().map(|c| c / gamma).collect();
        let lhs = gamma * model.evaluate_bound(&x, &u, &shrunk);
        let rhs = model.evaluate_bound(&x, &u, row);
        assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }
}

#[test]
fn candidate_polytopes() {
    let p = CandidatePolytope::regular_polygon(12, 0.25).unwrap();
    assert_eq!(p.vrep.len(), 12);
    assert!(p.vrep.vertices.iter().all(|v| v[0].abs().max(v[1].abs()) <= 0.25 + 1e-12));
    assert!(p.validate().is_ok());
    assert!(CandidatePolytope::regular_polygon(2, 0.25).is_err());
    let cube = CandidatePolytope::initial(3, 12, 0.5).unwrap();
    assert_eq!(cube.vrep.len(), 8);
    assert!((p.max_scale_within(&BoxSet::cube(2, 4.0).unwrap()) - 16.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn vertex_subproblem_monotone_in_lambda(s in 0usize..12600, p in 0usize..12, lam in 0.9990f64..0.9998, extra in 0.0f64..0.0002) {
        let sys = example_system(0.001);
        let cs = consistency(&sys, 30, SEED);
        let family = ModelFamily::new(&sys.dictionary, vec![cs.vertices[s % cs.vertices.len()].clone()], None, Execution::Sequential).unwrap();
        let omega0 = CandidatePolytope::regular_polygon(12, 0.25).unwrap();
        let run = |l: f64| vertex_subproblem(&omega0.vrep.vertices[p], &family.models[0], &omega0.hrep, &settings_for(&sys, l)).unwrap();
        let (tight, loose) = (run(lam), run(lam + extra));
        prop_assert!(tight.infeasible || loose.alpha >= tight.alpha - 1e-6);
    }
}
