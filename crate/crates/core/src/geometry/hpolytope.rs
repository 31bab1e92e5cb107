use serde::{Deserialize, Serialize};

use super::dd::{extreme_rays, DdFailure};
use super::{check_dim, dedup_points, dot, lex_cmp, SupportFunction, VPolytope, DEDUP_TOL};
use crate::linsolve::{solve_lp, LpProblem, LpStatus};
use crate::{Error, Result};

/// Polytope `{x : normals·x ≤ offsets}`.
///
/// "Normalized" means every offset is 1, i.e. `Hx ≤ 1` with the origin in the
/// interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl HPolytope {
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let p = Self { normals, offsets };
        p.validate()?;
        Ok(p)
    }

    /// `Hx ≤ 1`.
    pub fn normalized(normals: Vec<Vec<f64>>) -> Result<Self> {
        let offsets = vec![1.0; normals.len()];
        Self::new(normals, offsets)
    }

    pub fn validate(&self) -> Result<()> {
        if self.normals.len() != self.offsets.len() {
            return Err(Error::InvalidInput(format!(
                "{} normals but {} offsets",
                self.normals.len(),
                self.offsets.len()
            )));
        }
        let dim = self.dim();
        for (row, b) in self.normals.iter().zip(&self.offsets) {
            check_dim(dim, row.len())?;
            if row.iter().any(|v| !v.is_finite()) || !b.is_finite() {
                return Err(Error::InvalidInput("non-finite polytope coefficient".into()));
            }
            if row.iter().all(|v| *v == 0.0) {
                return Err(Error::InvalidInput("all-zero normal row".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.normals.first().map_or(0, Vec::len)
    }

    pub fn num_facets(&self) -> usize {
        self.normals.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.offsets.iter().all(|b| *b == 1.0)
    }

    /// Rewrites `Hx ≤ b` with `b > 0` as `(H/b)x ≤ 1`.
    pub fn to_normalized(&self) -> Result<Self> {
        if self.offsets.iter().any(|b| *b <= 0.0) {
            return Err(Error::OriginNotInterior);
        }
        let normals = self
            .normals
            .iter()
            .zip(&self.offsets)
            .map(|(r, b)| r.iter().map(|v| v / b).collect())
            .collect();
        Self::normalized(normals)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && self
                .normals
                .iter()
                .zip(&self.offsets)
                .all(|(r, b)| dot(r, x) <= b + tol)
    }

    /// Largest value of `normals_i·x − offsets_i` over the rows.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(r, b)| dot(r, x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `a·P`, computed as `{x : (H/a)x ≤ b}`.
    pub fn scale(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("scale factor must be positive, got {a}")));
        }
        let normals = self
            .normals
            .iter()
            .map(|r| r.iter().map(|v| v / a).collect())
            .collect();
        Ok(Self { normals, offsets: self.offsets.clone() })
    }

    fn lp(&self, objective: Vec<f64>) -> LpProblem {
        let mut lp = LpProblem::maximize(objective);
        for (r, b) in self.normals.iter().zip(&self.offsets) {
            lp.push_leq(r.clone(), *b);
        }
        lp
    }

    /// Checks non-emptiness and boundedness by maximizing `±e_i`.
    pub fn check_bounded(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidInput("polytope has no constraints".into()));
        }
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut c = vec![0.0; n];
                c[i] = sign;
                match solve_lp(&self.lp(c.clone()))?.status {
                    LpStatus::Optimal => {}
                    LpStatus::Infeasible => return Err(Error::EmptyPolytope),
                    LpStatus::Unbounded => return Err(Error::Unbounded { direction: c }),
                }
            }
        }
        Ok(())
    }

    /// Drops rows implied by the others (including duplicates and rows that
    /// only touch the polytope).
    pub fn remove_redundant(&self) -> Result<Self> {
        let mut keep: Vec<bool> = vec![true; self.num_facets()];
        for i in 0..self.num_facets() {
            let mut lp = LpProblem::maximize(self.normals[i].clone());
            for (k, (r, b)) in self.normals.iter().zip(&self.offsets).enumerate() {
                if k != i && keep[k] {
                    lp.push_leq(r.clone(), *b);
                }
            }
            let scale = 1.0 + self.offsets[i].abs();
            let sol = solve_lp(&lp)?;
            match sol.status {
                LpStatus::Optimal if sol.value <= self.offsets[i] + 1e-10 * scale => keep[i] = false,
                LpStatus::Infeasible => return Err(Error::EmptyPolytope),
                _ => {}
            }
        }
        let (normals, offsets) = self
            .normals
            .iter()
            .zip(&self.offsets)
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|((r, b), _)| (r.clone(), *b))
            .unzip();
        Ok(Self { normals, offsets })
    }

    /// Exact vertex set by double description after a boundedness check and
    /// redundancy removal.
    pub fn enumerate_vertices(&self) -> Result<VPolytope> {
        self.validate()?;
        self.check_bounded()?;
        let reduced = self.remove_redundant()?;
        let n = self.dim();

        // Cone {(t, x) : t·b − Hx ≥ 0, t ≥ 0}, constraints in lexicographic order.
        let mut cone: Vec<Vec<f64>> = reduced
            .normals
            .iter()
            .zip(&reduced.offsets)
            .map(|(r, b)| std::iter::once(*b).chain(r.iter().map(|v| -v)).collect())
            .collect();
        cone.sort_by(|a, b| lex_cmp(a, b));
        let mut homog = vec![0.0; n + 1];
        homog[0] = 1.0;
        cone.insert(0, homog);

        let rays = match extreme_rays(&cone, n + 1) {
            Ok(r) => r,
            Err(DdFailure::Lineality(v)) => return Err(Error::Unbounded { direction: v[1..].to_vec() }),
        };
        let mut vertices = Vec::with_capacity(rays.len());
        for y in rays {
            if y[0] > 1e-12 {
                vertices.push(y[1..].iter().map(|v| v / y[0]).collect::<Vec<f64>>());
            } else {
                return Err(Error::Unbounded { direction: y[1..].to_vec() });
            }
        }
        if vertices.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        vertices.sort_by(|a, b| lex_cmp(a, b));
        Ok(VPolytope { vertices: dedup_points(vertices, DEDUP_TOL) })
    }
}

impl SupportFunction for HPolytope {
    fn support(&self, c: &[f64]) -> Result<f64> {
        check_dim(self.dim(), c.len())?;
        let sol = solve_lp(&self.lp(c.to_vec()))?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.value),
            LpStatus::Infeasible => Err(Error::EmptyPolytope),
            LpStatus::Unbounded => Err(Error::Unbounded { direction: c.to_vec() }),
        }
    }
}
