use polycontract::dcmodel::{
    evaluate_f, evaluate_f_bound, evaluate_f_bound_gradient, shift_bounds_over, sign_pattern_decomposition, Atom,
    BasisDictionary, DcModel, ParameterPoint,
};
use polycontract::harness::TrueSystem;
use polycontract::Error;
use proptest::prelude::*;

fn truth() -> ParameterPoint {
    TrueSystem::planar_example().theta
}

fn example_model() -> DcModel {
    let dict = BasisDictionary::planar_bilinear();
    let m = shift_bounds_over(&[truth()], &dict);
    DcModel::decompose(&truth(), &dict, &m).unwrap()
}

/// Every atom kind, two states and one input.
fn rich_dictionary() -> BasisDictionary {
    BasisDictionary::new(
        2,
        1,
        vec![
            Atom::StateLinear { state: 0 },
            Atom::StateLinear { state: 1 },
            Atom::InputLinear { input: 0 },
            Atom::Bilinear { state: 0, input: 0 },
            Atom::Bilinear { state: 1, input: 0 },
            Atom::StateQuadratic { state: 1 },
            Atom::InputQuadratic { input: 0 },
        ],
    )
    .unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn basis_values() {
    let d = BasisDictionary::planar_bilinear();
    assert_eq!(d.evaluate_basis(&[1.0, 2.0], &[3.0]), vec![1.0, 2.0, 3.0, 3.0, 6.0]);
    assert_eq!(d.evaluate_basis(&[0.0, 0.0], &[0.0]), vec![0.0; 5]);
    assert_eq!(d.evaluate_basis(&[-1.0, 0.0], &[2.0]), vec![-1.0, 0.0, 2.0, -2.0, 0.0]);
}

#[test]
fn true_dynamics_by_substitution() {
    let d = BasisDictionary::planar_bilinear();
    let f = evaluate_f(&truth(), &d, &[1.0, 2.0], &[3.0]);
    assert!((f[0] - 1.05).abs() < 1e-12 && (f[1] - 2.013).abs() < 1e-12, "{f:?}");
    assert_eq!(evaluate_f(&truth(), &d, &[0.0, 0.0], &[0.0]), vec![0.0, 0.0]);
    let zero = ParameterPoint::new(vec![0.0; 10]);
    assert_eq!(evaluate_f(&zero, &d, &[0.7, -3.0], &[1.5]), vec![0.0, 0.0]);
}

#[test]
fn dictionary_rejects_duplicates() {
    let atoms = vec![Atom::StateLinear { state: 0 }, Atom::StateLinear { state: 0 }];
    assert!(BasisDictionary::new(1, 1, atoms).is_err());
}

#[test]
fn bound_special_cases() {
    let model = example_model();
    let (x, u) = ([0.7, -1.2], [0.4]);
    assert_eq!(model.evaluate_bound(&x, &u, &[0.0, 0.0]), 0.0);
    assert_eq!(model.evaluate_bound(&[0.0, 0.0], &[0.0], &[0.3, -2.0]), 0.0);
    assert!(model.evaluate_bound_gradient(&x, &u, &[0.0, 0.0]).iter().all(|g| *g == 0.0));
}

#[test]
fn linear_model_gradient_at_origin() {
    let dict = BasisDictionary::planar_bilinear();
    let theta = ParameterPoint::from_rows(&[vec![0.5, 0.1, 0.2, 0.0, 0.0], vec![-0.3, 0.8, -0.1, 0.0, 0.0]]);
    let model = DcModel::decompose(&theta, &dict, &[0.0; 5]).unwrap();
    let c = [1.5, -2.0];
    let grad = evaluate_f_bound_gradient(&model, &[0.0, 0.0], &[0.0], &c);
    let expected = [1.5 * 0.5 - 2.0 * -0.3, 1.5 * 0.1 - 2.0 * 0.8, 1.5 * 0.2 - 2.0 * -0.1];
    for (g, e) in grad.iter().zip(expected) {
        assert!((g - e).abs() < 1e-14);
    }
}

#[test]
fn pure_quadratic_h_gives_g() {
    // h has no linear part, so with c = e_1 the bound is g_1 itself.
    let model = example_model();
    let (x, u) = ([1.3, -0.2], [1.1]);
    let z = [x[0], x[1], u[0]];
    assert!((model.evaluate_bound(&x, &u, &[1.0, 0.0]) - model.g[0].value(&z)).abs() < 1e-14);
}

#[test]
fn shift_bound_error() {
    let dict = BasisDictionary::planar_bilinear();
    assert!(matches!(
        DcModel::decompose(&truth(), &dict, &[0.0, 0.0, 0.0, 0.0005, 0.004]),
        Err(Error::ShiftBoundExceeded { atom: 3, .. })
    ));
}

#[test]
fn sign_pattern_split() {
    let dict = BasisDictionary::planar_bilinear();
    let model = sign_pattern_decomposition(&truth(), &dict).unwrap();
    for k in 0..50 {
        let t = k as f64 * 0.37;
        let (x, u) = ([4.0 * t.sin(), 4.0 * (1.3 * t).cos()], [2.0 * (0.7 * t).sin()]);
        let f = evaluate_f(&truth(), &dict, &x, &u);
        let r = model.reconstruct(&x, &u);
        assert!((f[0] - r[0]).abs() <= 1e-12 && (f[1] - r[1]).abs() <= 1e-12);
    }
    let mut linear = truth();
    linear.theta[3] = 0.0;
    linear.theta[9] = 0.0;
    let m = sign_pattern_decomposition(&linear, &dict).unwrap();
    assert!(m.g.iter().chain(&m.h).all(|p| p.squares.iter().all(|s| s.weight == 0.0)));
    let mut bad = truth();
    bad.theta[3] = -0.001;
    assert!(matches!(sign_pattern_decomposition(&bad, &dict), Err(Error::SignPattern(_))));
}

#[test]
fn serialization_round_trip() {
    let model = example_model();
    let json = serde_json::to_string(&model).unwrap();
    assert_eq!(serde_json::from_str::<DcModel>(&json).unwrap(), model);
    let dict = rich_dictionary();
    let back: BasisDictionary = serde_json::from_str(&serde_json::to_string(&dict).unwrap()).unwrap();
    assert_eq!(back, dict);
}

fn point() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-4.0f64..4.0, 2), prop::collection::vec(-2.0f64..2.0, 1))
}

fn direction() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2)
}

fn rich_theta() -> impl Strategy<Value = ParameterPoint> {
    prop::collection::vec(-1.0f64..1.0, 14).prop_map(ParameterPoint::new)
}

fn rich_model(theta: &ParameterPoint, slack: f64) -> DcModel {
    let dict = rich_dictionary();
    let m: Vec<f64> = shift_bounds_over(std::slice::from_ref(theta), &dict).iter().map(|v| v + slack).collect();
    DcModel::decompose(theta, &dict, &m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bound_dominates(theta in rich_theta(), slack in 0.0f64..0.5, (x, u) in point(), c in direction()) {
        let model = rich_model(&theta, slack);
        let f = evaluate_f(&theta, &rich_dictionary(), &x, &u);
        prop_assert!(dot(&c, &f) <= evaluate_f_bound(&model, &x, &u, &c) + 1e-9);
    }

    #[test]
    fn bound_is_convex(theta in rich_theta(), (x1, u1) in point(), (x2, u2) in point(), c in direction()) {
        let model = rich_model(&theta, 0.1);
        let xm: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 0.5 * (a + b)).collect();
        let um: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| 0.5 * (a + b)).collect();
        let mid = model.evaluate_bound(&xm, &um, &c);
        let avg = 0.5 * (model.evaluate_bound(&x1, &u1, &c) + model.evaluate_bound(&x2, &u2, &c));
        prop_assert!(mid <= avg + 1e-9);
    }

    #[test]
    fn bound_is_homogeneous(theta in rich_theta(), (x, u) in point(), c in direction(), a in 0.01f64..100.0) {
        let model = rich_model(&theta, 0.0);
        let scaled: Vec<f64> = c.iter().map(|v| a * v).collect();
        let lhs = model.evaluate_bound(&x, &u, &scaled);
        let rhs = a * model.evaluate_bound(&x, &u, &c);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn bound_is_affine_in_theta(
        t1 in rich_theta(),
        t2 in rich_theta(),
        beta in 0.0f64..=1.0,
        (x, u) in point(),
        c in direction(),
    ) {
        let dict = rich_dictionary();
        let m = shift_bounds_over(&[t1.clone(), t2.clone()], &dict);
        let mix = t1.lerp(&t2, beta);
        let f = |t: &ParameterPoint| DcModel::decompose(t, &dict, &m).unwrap().evaluate_bound(&x, &u, &c);
        prop_assert!((f(&mix) - (beta * f(&t1) + (1.0 - beta) * f(&t2))).abs() <= 1e-10);
    }

    #[test]
    fn decomposition_reproduces_dynamics(theta in rich_theta(), slack in 0.0f64..0.5, (x, u) in point()) {
        let model = rich_model(&theta, slack);
        let f = evaluate_f(&theta, &rich_dictionary(), &x, &u);
        for (a, b) in model.reconstruct(&x, &u).iter().zip(&f) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn parts_are_convex_and_vanish_at_origin(theta in rich_theta(), slack in 0.0f64..0.5) {
        let model = rich_model(&theta, slack);
        for part in model.g.iter().chain(&model.h) {
            prop_assert!(part.squares.iter().all(|s| s.weight >= 0.0));
            prop_assert_eq!(part.value(&[0.0, 0.0, 0.0]), 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences(theta in rich_theta(), (x, u) in point(), c in direction()) {
        let model = rich_model(&theta, 0.2);
        let grad = model.evaluate_bound_gradient(&x, &u, &c);
        let z: Vec<f64> = x.iter().chain(&u).copied().collect();
        let eval = |z: &[f64]| model.evaluate_bound(&z[..2], &z[2..], &c);
        let h = 1e-5;
        for k in 0..3 {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[k] += h;
            zm[k] -= h;
            let fd = (eval(&zp) - eval(&zm)) / (2.0 * h);
            prop_assert!((fd - grad[k]).abs() <= 1e-6 * (1.0 + grad[k].abs()), "k={k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn example_split_reproduces_dynamics(
        d1 in -0.002f64..0.002,
        d2 in -0.002f64..0.002,
        a3 in 0.0f64..0.01,
        a6 in 0.0f64..0.01,
        (x, u) in point(),
    ) {
        let dict = BasisDictionary::planar_bilinear();
        let theta = ParameterPoint::from_rows(&[
            vec![1.0, 0.01, 0.009, a3, d1],
            vec![0.01, 1.0, 0.009, d2, -a6],
        ]);
        let model = sign_pattern_decomposition(&theta, &dict).unwrap();
        let f = evaluate_f(&theta, &dict, &x, &u);
        for (a, b) in model.reconstruct(&x, &u).iter().zip(&f) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
