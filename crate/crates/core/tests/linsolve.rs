use polycontract::geometry::BoxSet;
use polycontract::linsolve::{
    find_feasible_input, maximize_gamma, maximize_gamma_scalar, solve_lp, ConstraintSet, ConvexProgram, InputSet,
    LpProblem, LpStatus, ScalarQuadratics,
};
use polycontract::Error;
use proptest::prelude::*;

/// Writes the gradient and returns the value.
type Constraint = fn(&[f64], &mut [f64]) -> f64;

/// Constraints given as plain functions of `z` with analytic gradients.
struct Funcs {
    dim: usize,
    f: Vec<Constraint>,
}

impl ConstraintSet for Funcs {
    fn len(&self) -> usize {
        self.f.len()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, k: usize, z: &[f64], grad: &mut [f64]) -> f64 {
        (self.f[k])(z, grad)
    }
}

/// `ScalarQuadratics` seen through the general constraint interface.
struct AsGeneral<'a>(&'a ScalarQuadratics, Vec<[f64; 6]>);

impl ConstraintSet for AsGeneral<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, k: usize, z: &[f64], grad: &mut [f64]) -> f64 {
        let [a, b0, b1, _, c1, c2] = self.1[k];
        let (g, u) = (z[0], z[1]);
        grad[0] = b1 * u + c1 + 2.0 * c2 * g;
        grad[1] = 2.0 * a * u + b0 + b1 * g;
        self.0.value(k, g, u)
    }
}

fn no_input() -> InputSet {
    InputSet::Box(BoxSet::symmetric(vec![]).unwrap())
}

#[test]
fn lp_examples() {
    let lp = LpProblem::maximize(vec![1.0]).leq(vec![1.0], 1.0).nonnegative();
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.x[0] - 1.0).abs() < 1e-12);

    let unbounded = LpProblem::maximize(vec![1.0]).nonnegative();
    assert_eq!(solve_lp(&unbounded).unwrap().status, LpStatus::Unbounded);

    let infeasible = LpProblem::maximize(vec![1.0]).leq(vec![1.0], -1.0).nonnegative();
    assert_eq!(solve_lp(&infeasible).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn lp_integer_problem() {
    // max 3x + 2y, x + y ≤ 4, x + 3y ≤ 6, x ≤ 3 → (3, 1), value 11.
    let lp = LpProblem::maximize(vec![3.0, 2.0])
        .leq(vec![1.0, 1.0], 4.0)
        .leq(vec![1.0, 3.0], 6.0)
        .leq(vec![1.0, 0.0], 3.0)
        .nonnegative();
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.value - 11.0).abs() <= 1e-9);
    assert!(lp.primal_residual(&sol.x) <= 1e-9);
}

#[test]
fn gamma_sign_infeasible() {
    let f = Funcs { dim: 1, f: vec![|z, g| {
        g[0] = 0.01;
        0.01 * z[0] + 0.1
    }] };
    let cp = ConvexProgram { constraints: &f, input_set: &no_input(), gamma_min: 1e-6, gamma_max: 1e3 };
    assert!(matches!(maximize_gamma(&cp, 1e-6), Err(Error::Infeasible)));
}

#[test]
fn gamma_analytic_root() {
    let f = Funcs { dim: 1, f: vec![|z, g| {
        g[0] = 2.0 * z[0];
        z[0] * z[0] - 4.0
    }] };
    let cp = ConvexProgram { constraints: &f, input_set: &no_input(), gamma_min: 1e-6, gamma_max: 10.0 };
    let sol = maximize_gamma(&cp, 1e-7).unwrap();
    assert!((sol.gamma - 2.0).abs() <= 1e-6, "{}", sol.gamma);
    assert!(sol.max_constraint <= 1e-8);
    assert!(!sol.at_cap);
}

#[test]
fn gamma_cap_flag() {
    let f = Funcs { dim: 2, f: vec![|z, g| {
        g[0] = -0.4;
        g[1] = 0.0;
        -0.4 * z[0]
    }] };
    let u = InputSet::Box(BoxSet::cube(1, 1.0).unwrap());
    let cp = ConvexProgram { constraints: &f, input_set: &u, gamma_min: 1e-6, gamma_max: 50.0 };
    let sol = maximize_gamma(&cp, 1e-6).unwrap();
    assert!(sol.at_cap && sol.gamma == 50.0);
}

#[test]
fn feasible_input_examples() {
    let u = InputSet::Box(BoxSet::cube(1, 2.0).unwrap());
    let inside = Funcs { dim: 1, f: vec![|z, g| {
        g[0] = 2.0 * z[0];
        z[0] * z[0] - 1.0
    }] };
    let found = find_feasible_input(&inside, &u, 1e-9).unwrap().expect("feasible");
    assert!(found[0].abs() <= 1.0 + 1e-9);

    let none = Funcs { dim: 1, f: vec![|z, g| {
        g[0] = 2.0 * z[0];
        z[0] * z[0] + 1.0
    }] };
    assert_eq!(find_feasible_input(&none, &u, 1e-9).unwrap(), None);
}

#[test]
fn feasible_input_matches_grid() {
    // Two parabolas whose feasible windows overlap on [0.2, 0.5].
    let u = InputSet::Box(BoxSet::cube(1, 2.0).unwrap());
    let f = Funcs { dim: 1, f: vec![
        |z, g| {
            g[0] = 2.0 * (z[0] - 0.5);
            (z[0] - 0.5).powi(2) - 0.09
        },
        |z, g| {
            g[0] = 2.0 * (z[0] + 0.2);
            (z[0] + 0.2).powi(2) - 0.49
        },
    ] };
    let grid: Vec<f64> = (0..=4000).map(|k| -2.0 + k as f64 * 1e-3).filter(|u| f.max_value(&[*u]) <= 0.0).collect();
    let (lo, hi) = (grid[0], *grid.last().unwrap());
    let found = find_feasible_input(&f, &u, 1e-9).unwrap().unwrap()[0];
    assert!(found >= lo - 1e-3 && found <= hi + 1e-3, "{found} outside [{lo}, {hi}]");
}

fn family(rows: &[[f64; 6]]) -> ScalarQuadratics {
    let mut fam = ScalarQuadratics::new();
    for r in rows {
        fam.push(r[0], r[1], r[2], r[3], r[4], r[5]);
    }
    fam
}

/// Convex in `(γ, u)` when `a, c2 ≥ 0` and `b1² ≤ 4 a c2`.
fn convex_rows() -> impl Strategy<Value = Vec<[f64; 6]>> {
    let row = (0.0f64..0.5, -0.5f64..0.5, -1.0f64..1.0, -0.3f64..0.3, -0.2f64..0.2, 0.0f64..0.5).prop_map(
        |(a, b0, t, c0, c1, c2)| {
            let b1 = t * 2.0 * (a * c2).sqrt();
            [a, b0, b1, c0, c1, c2]
        },
    );
    prop::collection::vec(row, 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_strong_duality(
        n in 1usize..=6,
        seed_rows in prop::collection::vec(prop::collection::vec(0.0f64..3.0, 6), 1..6),
        b in prop::collection::vec(0.5f64..5.0, 6),
        c in prop::collection::vec(-1.0f64..3.0, 6),
    ) {
        // Primal: max c·x, A x ≤ b, Σx ≤ 10, x ≥ 0. Dual: min b·y, Aᵀy ≥ c, y ≥ 0.
        let mut rows: Vec<Vec<f64>> = seed_rows.iter().map(|r| r[..n].to_vec()).collect();
        rows.push(vec![1.0; n]);
        let mut rhs: Vec<f64> = b[..rows.len() - 1].to_vec();
        rhs.push(10.0);
        let mut primal = LpProblem::maximize(c[..n].to_vec()).nonnegative();
        for (r, bi) in rows.iter().zip(&rhs) {
            primal = primal.leq(r.clone(), *bi);
        }
        let mut dual = LpProblem::maximize(rhs.iter().map(|v| -v).collect()).nonnegative();
        for j in 0..n {
            dual = dual.leq(rows.iter().map(|r| -r[j]).collect(), -c[j]);
        }
        let p = solve_lp(&primal).unwrap();
        let d = solve_lp(&dual).unwrap();
        prop_assert_eq!(p.status, LpStatus::Optimal);
        prop_assert_eq!(d.status, LpStatus::Optimal);
        prop_assert!((p.value + d.value).abs() <= 1e-7, "primal {} dual {}", p.value, -d.value);
        prop_assert!(primal.primal_residual(&p.x) <= 1e-9);
    }

    #[test]
    fn relaxing_rhs_never_lowers_gamma(rows in convex_rows(), lam in 0.3f64..0.9, extra in 0.0f64..0.1) {
        let solve = |l: f64| {
            let shifted: Vec<[f64; 6]> = rows.iter().map(|r| [r[0], r[1], r[2], r[3], r[4] - l, r[5]]).collect();
            maximize_gamma_scalar(&family(&shifted), -2.0, 2.0, 1e-6, 1e3, 1e-9)
        };
        match (solve(lam), solve(lam + extra)) {
            (Ok(tight), Ok(loose)) => prop_assert!(loose.gamma >= tight.gamma - 1e-8),
            (Ok(_), Err(e)) => prop_assert!(false, "relaxed problem failed: {e}"),
            _ => {}
        }
    }

    #[test]
    fn certificates_re_evaluate(rows in convex_rows(), lam in 0.3f64..0.9) {
        let shifted: Vec<[f64; 6]> = rows.iter().map(|r| [r[0], r[1], r[2], r[3], r[4] - lam, r[5]]).collect();
        let fam = family(&shifted);
        if let Ok(sol) = maximize_gamma_scalar(&fam, -2.0, 2.0, 1e-6, 1e3, 1e-9) {
            prop_assert!(fam.max_value(sol.gamma, sol.input[0]) <= 1e-8);
            prop_assert!(sol.input[0].abs() <= 2.0);
        }
    }

    #[test]
    fn scalar_and_cutting_plane_agree(rows in convex_rows(), lam in 0.3f64..0.9) {
        let shifted: Vec<[f64; 6]> = rows.iter().map(|r| [r[0], r[1], r[2], r[3], r[4] - lam, r[5]]).collect();
        let fam = family(&shifted);
        let general = AsGeneral(&fam, shifted.clone());
        let u = InputSet::Box(BoxSet::cube(1, 2.0).unwrap());
        let cp = ConvexProgram { constraints: &general, input_set: &u, gamma_min: 1e-6, gamma_max: 1e3 };
        let fast = maximize_gamma_scalar(&fam, -2.0, 2.0, 1e-6, 1e3, 1e-7);
        let slow = maximize_gamma(&cp, 1e-7);
        match (fast, slow) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.at_cap, b.at_cap);
                prop_assert!((a.gamma - b.gamma).abs() <= 1e-5 * (1.0 + a.gamma), "{} vs {}", a.gamma, b.gamma);
                prop_assert!(general.max_value(&[b.gamma, b.input[0]]) <= 1e-8);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "disagreement: {a:?} vs {b:?}"),
        }
    }
}
