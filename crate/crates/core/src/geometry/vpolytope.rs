use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::barycentric::min_norm_weights;
use super::{check_dim, dedup_points, dot, HPolytope, SupportFunction, DEDUP_TOL};
use crate::linsolve::{solve_lp, LpProblem, LpStatus};
use crate::{Error, Result};

/// Polytope given as the convex hull of a vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VPolytope {
    pub vertices: Vec<Vec<f64>>,
}

impl VPolytope {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let v = Self { vertices };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.vertices.first() else {
            return Err(Error::EmptyPolytope);
        };
        for p in &self.vertices {
            check_dim(first.len(), p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite vertex coordinate".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|p| p.iter().map(|v| v * a).collect())
                .collect(),
        }
    }

    /// Affine rank of the vertex set.
    pub fn affine_rank(&self) -> usize {
        if self.vertices.len() < 2 {
            return 0;
        }
        let d = self.dim();
        let base = &self.vertices[0];
        let m = nalgebra::DMatrix::from_fn(self.vertices.len() - 1, d, |i, j| {
            self.vertices[i + 1][j] - base[j]
        });
        let sv = m.singular_values();
        let top = sv.iter().fold(0.0f64, |a, b| a.max(*b));
        sv.iter().filter(|s| **s > 1e-10 * top.max(1e-300)).count()
    }

    /// Minimum ∞-norm distance from `x` to the hull (0 inside).
    pub fn hull_distance(&self, x: &[f64]) -> Result<f64> {
        self.validate()?;
        check_dim(self.dim(), x.len())?;
        let n = self.len();
        // Variables: weights (n) then slack s; minimize s.
        let mut objective = vec![0.0; n + 1];
        objective[n] = -1.0;
        let mut lp = LpProblem::maximize(objective).nonnegative();
        let mut ones = vec![1.0; n + 1];
        ones[n] = 0.0;
        lp.push_leq(ones.clone(), 1.0);
        lp.push_leq(ones.iter().map(|v| -v).collect(), -1.0);
        for k in 0..self.dim() {
            let mut row: Vec<f64> = self.vertices.iter().map(|p| p[k]).collect();
            row.push(-1.0);
            lp.push_leq(row.clone(), x[k]);
            let mut neg: Vec<f64> = row[..n].iter().map(|v| -v).collect();
            neg.push(-1.0);
            lp.push_leq(neg, -x[k]);
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.x[n].max(0.0)),
            _ => Err(Error::LpBreakdown("hull distance LP did not reach an optimum".into())),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.hull_distance(x)? <= tol)
    }

    /// Normalized H-representation `Hx ≤ 1` via the polar polytope.
    pub fn facet_representation(&self) -> Result<HPolytope> {
        self.validate()?;
        let d = self.dim();
        let rank = self.affine_rank();
        if rank < d {
            return Err(Error::Degenerate { rank, dim: d });
        }
        let polar = HPolytope::normalized(self.vertices.clone())
            .map_err(|_| Error::OriginNotInterior)?;
        let facets = match polar.enumerate_vertices() {
            Ok(v) => v,
            Err(Error::Unbounded { .. }) | Err(Error::EmptyPolytope) => {
                return Err(Error::OriginNotInterior)
            }
            Err(e) => return Err(e),
        };
        HPolytope::normalized(facets.vertices)
    }

    /// Minimal vertex set of `co(self ∪ {x})`.
    pub fn convex_hull_add(&self, x: &[f64]) -> Result<Self> {
        check_dim(self.dim(), x.len())?;
        if self.contains(x, 1e-9)? {
            return Ok(self.clone());
        }
        let mut pts = self.vertices.clone();
        pts.push(x.to_vec());
        Self::reduce(pts)
    }

    /// Removes points lying in the hull of the remaining ones.
    pub fn reduce(points: Vec<Vec<f64>>) -> Result<Self> {
        let mut pts = dedup_points(points, DEDUP_TOL);
        let mut i = 0;
        while i < pts.len() && pts.len() > 1 {
            let others: Vec<Vec<f64>> = pts
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, p)| p.clone())
                .collect();
            let rest = VPolytope { vertices: others };
            if rest.contains(&pts[i], 1e-9)? {
                pts.remove(i);
            } else {
                i += 1;
            }
        }
        Self::new(pts)
    }

    /// Convex weights of `x`; the minimum-norm weights when they are not unique.
    pub fn barycentric_coefficients(&self, x: &[f64]) -> Result<Vec<f64>> {
        let residual = self.hull_distance(x)?;
        if residual > 1e-8 {
            return Err(Error::OutsideHull { residual });
        }
        let alpha = min_norm_weights(&self.vertices, x)
            .ok_or_else(|| Error::LpBreakdown("barycentric solve failed".into()))?;
        let sum: f64 = alpha.iter().sum();
        let alpha: Vec<f64> = alpha.iter().map(|a| a / sum).collect();
        let err = (0..self.dim())
            .map(|k| (dot(&alpha, &self.column(k)) - x[k]).abs())
            .fold(0.0, f64::max);
        if err > 1e-8 {
            return Err(Error::OutsideHull { residual: err });
        }
        Ok(alpha)
    }

    fn column(&self, k: usize) -> Vec<f64> {
        self.vertices.iter().map(|p| p[k]).collect()
    }

    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|k| dot(weights, &self.column(k))).collect()
    }

    /// Point `Σ α_p v_p` with `α` normalized i.i.d. exponentials (a flat
    /// Dirichlet over the vertex weights, not uniform over the polytope).
    pub fn sample_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_point_with(&mut rng)
    }

    pub fn sample_point_with<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let draws: Vec<f64> = (0..self.len()).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        let weights: Vec<f64> = if total > 0.0 {
            draws.iter().map(|d| d / total).collect()
        } else {
            vec![1.0 / self.len() as f64; self.len()]
        };
        self.combine(&weights)
    }

    pub fn cartesian_product(&self, other: &VPolytope) -> VPolytope {
        let vertices = self
            .vertices
            .iter()
            .flat_map(|a| {
                other
                    .vertices
                    .iter()
                    .map(move |b| a.iter().chain(b).copied().collect())
            })
            .collect();
        VPolytope { vertices }
    }

    /// Vertices of a planar polygon in counter-clockwise order around their centroid.
    pub fn ordered_2d(&self) -> Result<Vec<Vec<f64>>> {
        check_dim(2, self.dim())?;
        let n = self.len() as f64;
        let cx = self.vertices.iter().map(|p| p[0]).sum::<f64>() / n;
        let cy = self.vertices.iter().map(|p| p[1]).sum::<f64>() / n;
        let mut pts = self.vertices.clone();
        pts.sort_by(|a, b| {
            let ta = (a[1] - cy).atan2(a[0] - cx);
            let tb = (b[1] - cy).atan2(b[0] - cx);
            ta.total_cmp(&tb)
        });
        Ok(pts)
    }

    /// Shoelace area of a planar convex polygon.
    pub fn area_2d(&self) -> Result<f64> {
        let pts = self.ordered_2d()?;
        let n = pts.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (p, q) = (&pts[i], &pts[(i + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum();
        Ok(twice.abs() / 2.0)
    }

    /// One point per line, comma separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.vertices {
            let line: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

impl SupportFunction for VPolytope {
    fn support(&self, c: &[f64]) -> Result<f64> {
        self.validate()?;
        check_dim(self.dim(), c.len())?;
        Ok(self
            .vertices
            .iter()
            .map(|p| dot(p, c))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}
