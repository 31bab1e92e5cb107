//! Difference-of-convex splits `f_j = g_j − h_j` and the convex upper bound
//! `F(x, u, c) ≥ c·f(x, u)` built from them.
//!
//! Every `g_j`, `h_j` is a linear form plus a non-negative combination of
//! squared linear forms in `z = (x, u)`. Squares have zero value and zero
//! gradient at the origin, so the origin linearization of a part is its
//! linear term.

use serde::{Deserialize, Serialize};

use super::{Atom, BasisDictionary, ParameterPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareTerm {
    pub weight: f64,
    /// Coefficients of the linear form over `z = (x, u)`.
    pub form: Vec<f64>,
}

/// `linear·z + Σ weight·(form·z)²` with non-negative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPart {
    pub linear: Vec<f64>,
    pub squares: Vec<SquareTerm>,
}

impl ConvexPart {
    fn zero(dim: usize) -> Self {
        Self { linear: vec![0.0; dim], squares: Vec::new() }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().zip(z).map(|(a, b)| a * b).sum();
        lin + self
            .squares
            .iter()
            .map(|s| s.weight * s.form.iter().zip(z).map(|(a, b)| a * b).sum::<f64>().powi(2))
            .sum::<f64>()
    }

    /// Value of the origin linearization.
    pub fn linearized(&self, z: &[f64]) -> f64 {
        self.linear.iter().zip(z).map(|(a, b)| a * b).sum()
    }

    fn add_square(&mut self, weight: f64, form: Vec<f64>) {
        self.squares.push(SquareTerm { weight, form });
    }
}

/// A convex quadratic `linear·z + zᵀ·quad·z` (`quad` row-major, PSD).
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub linear: Vec<f64>,
    pub quad: Vec<f64>,
}

impl Quadratic {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let n = self.dim();
        let mut v = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.quad[i * n + j] * z[j];
            }
            v += z[i] * (self.linear[i] + row);
        }
        v
    }

    pub fn value_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.dim();
        let mut v = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.quad[i * n + j] * z[j];
            }
            grad[i] = self.linear[i] + 2.0 * row;
            v += z[i] * (self.linear[i] + row);
        }
        v
    }

    fn accumulate(&mut self, scale: f64, part: &ConvexPart, linear_only: bool) {
        let n = self.dim();
        for (a, b) in self.linear.iter_mut().zip(&part.linear) {
            *a += scale * b;
        }
        if linear_only {
            return;
        }
        for s in &part.squares {
            let w = scale * s.weight;
            for i in 0..n {
                if s.form[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    self.quad[i * n + j] += w * s.form[i] * s.form[j];
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcScheme {
    /// Weights affine in `θ` for a fixed shift bound per nonlinear atom.
    Shifted,
    /// Sign-dependent split of the planar bilinear example.
    SignPattern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcModel {
    pub state_dim: usize,
    pub input_dim: usize,
    pub scheme: DcScheme,
    pub g: Vec<ConvexPart>,
    pub h: Vec<ConvexPart>,
}

fn pair_forms(n: usize, m: usize, state: usize, input: usize) -> (Vec<f64>, Vec<f64>) {
    let mut plus = vec![0.0; n + m];
    let mut minus = vec![0.0; n + m];
    plus[state] = 1.0;
    plus[n + input] = 1.0;
    minus[state] = 1.0;
    minus[n + input] = -1.0;
    (plus, minus)
}

fn unit_form(dim: usize, k: usize) -> Vec<f64> {
    let mut f = vec![0.0; dim];
    f[k] = 1.0;
    f
}

/// Per-atom shift bounds: the largest `|coefficient|` of each nonlinear atom
/// over all rows of all given parameter points (zero for linear atoms).
pub fn shift_bounds_over(points: &[ParameterPoint], dict: &BasisDictionary) -> Vec<f64> {
    let d = dict.len();
    dict.atoms
        .iter()
        .enumerate()
        .map(|(k, atom)| {
            if atom.is_linear() {
                return 0.0;
            }
            points
                .iter()
                .flat_map(|p| (0..dict.state_dim).map(move |j| p.theta[j * d + k].abs()))
                .fold(0.0, f64::max)
        })
        .collect()
}

impl DcModel {
    /// Shifted split: `a·s·t = (M+a)/4 (s+t)² + (M−a)/4 (s−t)² − M/4 ((s+t)² + (s−t)²)`
    /// and `a·s² = (M+a) s² − M s²`, with `|a| ≤ M`. Linear atoms go to `g`.
    pub fn decompose(theta: &ParameterPoint, dict: &BasisDictionary, shift_bounds: &[f64]) -> Result<Self> {
        dict.validate()?;
        theta.check(dict)?;
        if shift_bounds.len() != dict.len() {
            return Err(Error::DimensionMismatch { expected: dict.len(), got: shift_bounds.len() });
        }
        if shift_bounds.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidInput("shift bounds must be finite and non-negative".into()));
        }
        let (n, m) = (dict.state_dim, dict.input_dim);
        let dim = n + m;
        let d = dict.len();
        let mut g = vec![ConvexPart::zero(dim); n];
        let mut h = vec![ConvexPart::zero(dim); n];
        for j in 0..n {
            let row = theta.row(j, d);
            for (k, atom) in dict.atoms.iter().enumerate() {
                let a = row[k];
                let bound = shift_bounds[k];
                if !atom.is_linear() && a.abs() > bound * (1.0 + 1e-12) {
                    return Err(Error::ShiftBoundExceeded { atom: k, coefficient: a, bound });
                }
                match *atom {
                    Atom::StateLinear { state } => g[j].linear[state] += a,
                    Atom::InputLinear { input } => g[j].linear[n + input] += a,
                    Atom::Bilinear { state, input } => {
                        let (plus, minus) = pair_forms(n, m, state, input);
                        g[j].add_square((bound + a) / 4.0, plus.clone());
                        g[j].add_square((bound - a) / 4.0, minus.clone());
                        h[j].add_square(bound / 4.0, plus);
                        h[j].add_square(bound / 4.0, minus);
                    }
                    Atom::StateQuadratic { state } => {
                        g[j].add_square(bound + a, unit_form(dim, state));
                        h[j].add_square(bound, unit_form(dim, state));
                    }
                    Atom::InputQuadratic { input } => {
                        g[j].add_square(bound + a, unit_form(dim, n + input));
                        h[j].add_square(bound, unit_form(dim, n + input));
                    }
                }
            }
        }
        // |a| may exceed M by the rounding slack above; clamp to keep weights ≥ 0.
        for part in g.iter_mut().chain(h.iter_mut()) {
            for s in part.squares.iter_mut() {
                s.weight = s.weight.max(0.0);
            }
        }
        Ok(Self { state_dim: n, input_dim: m, scheme: DcScheme::Shifted, g, h })
    }

    fn z(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        x.iter().chain(u).copied().collect()
    }

    /// `g_j − h_j` at `(x, u)` for every component.
    pub fn reconstruct(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let z = self.z(x, u);
        self.g.iter().zip(&self.h).map(|(g, h)| g.value(&z) - h.value(&z)).collect()
    }

    /// `F(·, ·, c)` as a single convex quadratic in `z = (x, u)`.
    pub fn bound(&self, c: &[f64]) -> Quadratic {
        let dim = self.state_dim + self.input_dim;
        let mut q = Quadratic { linear: vec![0.0; dim], quad: vec![0.0; dim * dim] };
        for (j, &cj) in c.iter().enumerate() {
            if cj >= 0.0 {
                // c_j (g_j − h_jᴸ)
                q.accumulate(cj, &self.g[j], false);
                q.accumulate(-cj, &self.h[j], true);
            } else {
                // c_j (g_jᴸ − h_j)
                q.accumulate(cj, &self.g[j], true);
                q.accumulate(-cj, &self.h[j], false);
            }
        }
        q
    }

    /// `F(x, u, c) = Σ_{c_j ≥ 0} c_j (g_j − h_jᴸ) + Σ_{c_j < 0} c_j (g_jᴸ − h_j)`.
    pub fn evaluate_bound(&self, x: &[f64], u: &[f64], c: &[f64]) -> f64 {
        let z = self.z(x, u);
        c.iter()
            .enumerate()
            .map(|(j, &cj)| {
                if cj >= 0.0 {
                    cj * (self.g[j].value(&z) - self.h[j].linearized(&z))
                } else {
                    cj * (self.g[j].linearized(&z) - self.h[j].value(&z))
                }
            })
            .sum()
    }

    /// `∇_(x,u) F(x, u, c)`.
    pub fn evaluate_bound_gradient(&self, x: &[f64], u: &[f64], c: &[f64]) -> Vec<f64> {
        let z = self.z(x, u);
        let mut grad = vec![0.0; z.len()];
        self.bound(c).value_grad(&z, &mut grad);
        grad
    }
}

/// Free-function form of [`DcModel::evaluate_bound`].
pub fn evaluate_f_bound(model: &DcModel, x: &[f64], u: &[f64], c: &[f64]) -> f64 {
    model.evaluate_bound(x, u, c)
}

pub fn evaluate_f_bound_gradient(model: &DcModel, x: &[f64], u: &[f64], c: &[f64]) -> Vec<f64> {
    model.evaluate_bound_gradient(x, u, c)
}

/// The hand-written split of the planar bilinear example:
///
/// ```text
/// g1 = a1 x1 + a2 x2 + b1 u + a3/4 (x1 + u)²     h1 = a3/4 (x1 − u)²
/// g2 = a4 x1 + a5 x2 + b2 u + a6/4 (x2 − u)²     h2 = a6/4 (x2 + u)²
/// ```
///
/// where `a3` is the `x1·u` coefficient of row 1 and `−a6` the `x2·u`
/// coefficient of row 2; both `a3, a6 ≥ 0` are required. Cross terms (`x2·u`
/// in row 1, `x1·u` in row 2) are split by their sign. Not affine in `θ`.
pub fn sign_pattern_decomposition(theta: &ParameterPoint, dict: &BasisDictionary) -> Result<DcModel> {
    if *dict != BasisDictionary::planar_bilinear() {
        return Err(Error::InvalidInput("the example split needs the (x1, x2, u, x1u, x2u) dictionary".into()));
    }
    theta.check(dict)?;
    let (n, m) = (2, 1);
    let r1 = theta.row(0, 5);
    let r2 = theta.row(1, 5);
    let a3 = r1[3];
    let a6 = -r2[4];
    if a3 < 0.0 {
        return Err(Error::SignPattern(format!("x1·u coefficient of row 1 must be ≥ 0, got {a3}")));
    }
    if a6 < 0.0 {
        return Err(Error::SignPattern(format!("x2·u coefficient of row 2 must be ≤ 0, got {}", -a6)));
    }
    let mut g = vec![ConvexPart::zero(3), ConvexPart::zero(3)];
    let mut h = vec![ConvexPart::zero(3), ConvexPart::zero(3)];
    for (j, row) in [r1, r2].iter().enumerate() {
        g[j].linear = vec![row[0], row[1], row[2]];
    }
    let split = |g: &mut ConvexPart, h: &mut ConvexPart, state: usize, a: f64| {
        let (plus, minus) = pair_forms(n, m, state, 0);
        if a >= 0.0 {
            g.add_square(a / 4.0, plus);
            h.add_square(a / 4.0, minus);
        } else {
            g.add_square(-a / 4.0, minus);
            h.add_square(-a / 4.0, plus);
        }
    };
    let (g1, g2) = g.split_at_mut(1);
    let (h1, h2) = h.split_at_mut(1);
    split(&mut g1[0], &mut h1[0], 0, a3);
    split(&mut g1[0], &mut h1[0], 1, r1[4]);
    split(&mut g2[0], &mut h2[0], 1, -a6);
    split(&mut g2[0], &mut h2[0], 0, r2[3]);
    Ok(DcModel { state_dim: n, input_dim: m, scheme: DcScheme::SignPattern, g, h })
}
