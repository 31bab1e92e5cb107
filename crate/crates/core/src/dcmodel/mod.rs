//! Basis dictionaries, linear-in-parameter dynamics `f(x, u; θ) = Θφ(x, u)`
//! and their difference-of-convex splits.

mod decompose;

pub use decompose::{
    evaluate_f_bound, evaluate_f_bound_gradient, sign_pattern_decomposition, shift_bounds_over,
    ConvexPart, DcModel, DcScheme, Quadratic, SquareTerm,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One basis function. Every atom vanishes at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Atom {
    StateLinear { state: usize },
    InputLinear { input: usize },
    Bilinear { state: usize, input: usize },
    StateQuadratic { state: usize },
    InputQuadratic { input: usize },
}

impl Atom {
    pub fn is_linear(self) -> bool {
        matches!(self, Atom::StateLinear { .. } | Atom::InputLinear { .. })
    }

    pub fn eval(self, x: &[f64], u: &[f64]) -> f64 {
        match self {
            Atom::StateLinear { state } => x[state],
            Atom::InputLinear { input } => u[input],
            Atom::Bilinear { state, input } => x[state] * u[input],
            Atom::StateQuadratic { state } => x[state] * x[state],
            Atom::InputQuadratic { input } => u[input] * u[input],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDictionary {
    pub state_dim: usize,
    pub input_dim: usize,
    pub atoms: Vec<Atom>,
}

impl BasisDictionary {
    pub fn new(state_dim: usize, input_dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        let d = Self { state_dim, input_dim, atoms };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::InvalidInput("empty dictionary".into()));
        }
        for (i, a) in self.atoms.iter().enumerate() {
            let (s, u) = match *a {
                Atom::StateLinear { state } | Atom::StateQuadratic { state } => (Some(state), None),
                Atom::InputLinear { input } | Atom::InputQuadratic { input } => (None, Some(input)),
                Atom::Bilinear { state, input } => (Some(state), Some(input)),
            };
            if s.is_some_and(|s| s >= self.state_dim) || u.is_some_and(|u| u >= self.input_dim) {
                return Err(Error::InvalidInput(format!("atom {i} indexes outside the state/input dimensions")));
            }
            if self.atoms[..i].contains(a) {
                return Err(Error::InvalidInput(format!("atom {i} is duplicated")));
            }
        }
        Ok(())
    }

    /// `(x1, x2, u, x1·u, x2·u)` for a planar state and scalar input.
    pub fn planar_bilinear() -> Self {
        Self {
            state_dim: 2,
            input_dim: 1,
            atoms: vec![
                Atom::StateLinear { state: 0 },
                Atom::StateLinear { state: 1 },
                Atom::InputLinear { input: 0 },
                Atom::Bilinear { state: 0, input: 0 },
                Atom::Bilinear { state: 1, input: 0 },
            ],
        }
    }

    /// Number of atoms `d_f`.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn parameter_dim(&self) -> usize {
        self.state_dim * self.len()
    }

    pub fn evaluate_basis(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.atoms.iter().map(|a| a.eval(x, u)).collect()
    }
}

/// `θ = vec(Θᵀ)`: the rows of `Θ` (one per state component) laid end to end,
/// so component `j` owns `theta[j·d_f .. (j+1)·d_f]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterPoint {
    pub theta: Vec<f64>,
}

impl ParameterPoint {
    pub fn new(theta: Vec<f64>) -> Self {
        Self { theta }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        Self { theta: rows.concat() }
    }

    pub fn row(&self, j: usize, atoms: usize) -> &[f64] {
        &self.theta[j * atoms..(j + 1) * atoms]
    }

    pub fn check(&self, dict: &BasisDictionary) -> Result<()> {
        if self.theta.len() != dict.parameter_dim() {
            return Err(Error::DimensionMismatch { expected: dict.parameter_dim(), got: self.theta.len() });
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        Ok(())
    }

    /// `β·self + (1 − β)·other`.
    pub fn lerp(&self, other: &ParameterPoint, beta: f64) -> ParameterPoint {
        ParameterPoint {
            theta: self
                .theta
                .iter()
                .zip(&other.theta)
                .map(|(a, b)| beta * a + (1.0 - beta) * b)
                .collect(),
        }
    }
}

/// `Θ·φ(x, u)`.
pub fn evaluate_f(theta: &ParameterPoint, dict: &BasisDictionary, x: &[f64], u: &[f64]) -> Vec<f64> {
    let phi = dict.evaluate_basis(x, u);
    let d = dict.len();
    (0..dict.state_dim)
        .map(|j| theta.row(j, d).iter().zip(&phi).map(|(a, b)| a * b).sum())
        .collect()
}
