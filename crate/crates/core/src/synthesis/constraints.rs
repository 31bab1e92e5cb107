//! Constraint families handed to the convex solvers.

use crate::dcmodel::Quadratic;
use crate::linsolve::{ConstraintSet, InputSet, ScalarQuadratics};

/// `c_k(γ, u) = q_k(γv, u) − λγ + φ_k` over `z = (γ, u)`.
pub(crate) struct ScaledVertex<'a> {
    pub quads: Vec<&'a Quadratic>,
    pub support: Vec<f64>,
    pub vertex: &'a [f64],
    pub lambda_w: f64,
}

impl ConstraintSet for ScaledVertex<'_> {
    fn len(&self) -> usize {
        self.quads.len()
    }

    fn dim(&self) -> usize {
        self.quads.first().map_or(1, |q| q.dim() - self.vertex.len() + 1)
    }

    fn eval(&self, k: usize, z: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.vertex.len();
        let gamma = z[0];
        let mut p: Vec<f64> = self.vertex.iter().map(|v| gamma * v).collect();
        p.extend_from_slice(&z[1..]);
        let mut gp = vec![0.0; p.len()];
        let value = self.quads[k].value_grad(&p, &mut gp);
        grad[0] = gp[..n].iter().zip(self.vertex).map(|(a, b)| a * b).sum::<f64>() - self.lambda_w;
        grad[1..].copy_from_slice(&gp[n..]);
        value - self.lambda_w * gamma + self.support[k]
    }
}

/// `c_k(u) = q_k(x, u) − rhs_k` at a fixed state.
pub(crate) struct AtState<'a> {
    pub quads: Vec<&'a Quadratic>,
    pub rhs: Vec<f64>,
    pub state: &'a [f64],
}

impl ConstraintSet for AtState<'_> {
    fn len(&self) -> usize {
        self.quads.len()
    }

    fn dim(&self) -> usize {
        self.quads.first().map_or(0, |q| q.dim() - self.state.len())
    }

    fn eval(&self, k: usize, u: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.state.len();
        let p: Vec<f64> = self.state.iter().chain(u).copied().collect();
        let mut gp = vec![0.0; p.len()];
        let value = self.quads[k].value_grad(&p, &mut gp);
        grad.copy_from_slice(&gp[n..]);
        value - self.rhs[k]
    }
}

/// `c_k(x, u) = q_k(x, u) − rhs_k` with the state free.
pub(crate) struct Joint<'a> {
    pub quads: Vec<&'a Quadratic>,
    pub rhs: Vec<f64>,
}

impl ConstraintSet for Joint<'_> {
    fn len(&self) -> usize {
        self.quads.len()
    }

    fn dim(&self) -> usize {
        self.quads.first().map_or(0, |q| q.dim())
    }

    fn eval(&self, k: usize, z: &[f64], grad: &mut [f64]) -> f64 {
        self.quads[k].value_grad(z, grad) - self.rhs[k]
    }
}

/// Scalar-input restriction `c(γ, u) = q(γv, u) − λγ + φ` of each quadratic.
pub(crate) fn scalar_family<'a>(
    quads: impl IntoIterator<Item = (&'a Quadratic, f64)>,
    vertex: &[f64],
    lambda_w: f64,
) -> ScalarQuadratics {
    let n = vertex.len();
    let mut fam = ScalarQuadratics::new();
    for (q, phi) in quads {
        let d = n + 1;
        debug_assert_eq!(q.dim(), d);
        let at = |i: usize, j: usize| q.quad[i * d + j];
        let mut cross = 0.0;
        let mut curv = 0.0;
        let mut lin = 0.0;
        for i in 0..n {
            cross += vertex[i] * (at(i, n) + at(n, i));
            lin += q.linear[i] * vertex[i];
            for j in 0..n {
                curv += vertex[i] * at(i, j) * vertex[j];
            }
        }
        fam.push(at(n, n), q.linear[n], cross, phi, lin - lambda_w, curv);
    }
    fam
}

/// Scalar box input `[lo, hi]`, if that is what the set is.
pub(crate) fn scalar_box(set: &InputSet) -> Option<(f64, f64)> {
    match set {
        InputSet::Box(b) if b.dim() == 1 => Some((b.lower()[0], b.upper()[0])),
        _ => None,
    }
}
