use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, HPolytope, SupportFunction, VPolytope};
use crate::{Error, Result};

/// Axis-aligned box `{x : |x_i − center_i| ≤ half_widths_i}`.
///
/// An empty `center` means the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub half_widths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub center: Vec<f64>,
}

impl BoxSet {
    pub fn symmetric(half_widths: Vec<f64>) -> Result<Self> {
        let b = Self { half_widths, center: Vec::new() };
        b.validate()?;
        Ok(b)
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::symmetric(vec![half_width; dim])
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_widths.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("box half-widths must be finite and non-negative".into()));
        }
        if !self.center.is_empty() {
            check_dim(self.half_widths.len(), self.center.len())?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    pub fn center_at(&self, i: usize) -> f64 {
        self.center.get(i).copied().unwrap_or(0.0)
    }

    pub fn lower(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.center_at(i) - self.half_widths[i]).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.center_at(i) + self.half_widths[i]).collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .enumerate()
                .all(|(i, v)| (v - self.center_at(i)).abs() <= self.half_widths[i] + tol)
    }

    pub fn to_hpolytope(&self) -> HPolytope {
        let n = self.dim();
        let mut normals = Vec::with_capacity(2 * n);
        let mut offsets = Vec::with_capacity(2 * n);
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0; n];
                row[i] = sign;
                normals.push(row);
                offsets.push(self.half_widths[i] + sign * self.center_at(i));
            }
        }
        HPolytope { normals, offsets }
    }

    pub fn vertices(&self) -> VPolytope {
        let n = self.dim();
        let pts = (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| {
                        let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                        self.center_at(i) + s * self.half_widths[i]
                    })
                    .collect()
            })
            .collect();
        VPolytope { vertices: pts }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let w = self.half_widths[i];
                self.center_at(i) + if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 }
            })
            .collect()
    }
}

impl SupportFunction for BoxSet {
    fn support(&self, c: &[f64]) -> Result<f64> {
        check_dim(self.dim(), c.len())?;
        Ok(c
            .iter()
            .enumerate()
            .map(|(i, ci)| ci * self.center_at(i) + self.half_widths[i] * ci.abs())
            .sum())
    }
}
