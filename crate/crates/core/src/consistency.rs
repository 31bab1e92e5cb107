//! Set-membership consistency sets: every `Θ` with
//! `‖x_{k+1} − Θφ(x_k, u_k)‖∞ ≤ ε` on all logged transitions.
//!
//! Row `j` of `Θ` is only constrained by component `j` of the successors, so
//! the set is a product of one polytope per state component ("block"), each in
//! `R^{d_f}`. Blocks are enumerated separately and their vertex lists combined
//! by Cartesian product.

use serde::{Deserialize, Serialize};

use crate::dcmodel::{evaluate_f, BasisDictionary, ParameterPoint};
use crate::geometry::{BoxSet, HPolytope, VPolytope};
use crate::parallel::{map_indexed, Execution};
use crate::{sha256_hex, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub input: Vec<f64>,
    pub next: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<Transition>,
    #[serde(default)]
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Hash of the transitions only (metadata excluded).
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(&self.records).expect("records serialize"))
    }

    /// Number of records whose state or input leaves the given sets.
    pub fn count_out_of_bounds(&self, states: &BoxSet, inputs: &BoxSet) -> usize {
        self.records
            .iter()
            .filter(|r| !states.contains(&r.state, 1e-12) || !inputs.contains(&r.input, 1e-12))
            .count()
    }

    pub fn to_csv(&self) -> String {
        let Some(first) = self.records.first() else { return String::new() };
        let (n, m) = (first.state.len(), first.input.len());
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.extend((1..=m).map(|i| format!("u{i}")));
        header.extend((1..=n).map(|i| format!("x{i}_next")));
        let mut out = header.join(",");
        out.push('\n');
        for r in &self.records {
            let row: Vec<String> = r.state.iter().chain(&r.input).chain(&r.next).map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub required: usize,
    pub singular_values: Vec<f64>,
}

impl RankReport {
    pub fn identifiable(&self) -> bool {
        self.rank >= self.required
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySet {
    pub dictionary: BasisDictionary,
    pub epsilon: f64,
    /// `φ(x_k, u_k)` per record.
    pub regressors: Vec<Vec<f64>>,
    /// `x_{k+1}` per record.
    pub targets: Vec<Vec<f64>>,
    /// One H-polytope over `R^{d_f}` per state component.
    pub blocks: Vec<HPolytope>,
    #[serde(default)]
    pub block_vertices: Vec<VPolytope>,
    /// Vertex set `Q` of the whole set; empty until enumerated.
    #[serde(default)]
    pub vertices: Vec<ParameterPoint>,
    pub data_digest: String,
}

fn rank_of(rows: &[Vec<f64>], cols: usize) -> RankReport {
    if rows.is_empty() {
        return RankReport { rank: 0, required: cols, singular_values: vec![0.0; cols] };
    }
    let m = nalgebra::DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|s| **s > 1e-10 * top && **s > 0.0).count();
    RankReport { rank, required: cols, singular_values: sv }
}

/// Rank of the `T × d_f` regressor matrix; full column rank makes every block
/// (and the whole consistency set) compact.
pub fn check_identifiability(data: &Dataset, dict: &BasisDictionary) -> RankReport {
    let rows: Vec<Vec<f64>> = data.records.iter().map(|r| dict.evaluate_basis(&r.state, &r.input)).collect();
    rank_of(&rows, dict.len())
}

pub fn build_consistency_set(data: &Dataset, dict: &BasisDictionary, epsilon: f64) -> Result<ConsistencySet> {
    dict.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("noise bound must be positive and finite, got {epsilon}")));
    }
    if data.is_empty() {
        return Err(Error::InvalidInput("dataset has no records".into()));
    }
    let n = dict.state_dim;
    let mut regressors = Vec::with_capacity(data.len());
    let mut targets = Vec::with_capacity(data.len());
    for r in &data.records {
        if r.state.len() != n || r.next.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: r.state.len().max(r.next.len()) });
        }
        if r.input.len() != dict.input_dim {
            return Err(Error::DimensionMismatch { expected: dict.input_dim, got: r.input.len() });
        }
        regressors.push(dict.evaluate_basis(&r.state, &r.input));
        targets.push(r.next.clone());
    }
    let mut cs = ConsistencySet {
        dictionary: dict.clone(),
        epsilon,
        regressors,
        targets,
        blocks: Vec::new(),
        block_vertices: Vec::new(),
        vertices: Vec::new(),
        data_digest: data.digest(),
    };
    cs.blocks = (0..n).map(|j| cs.block(j)).collect::<Result<_>>()?;
    Ok(cs)
}

impl ConsistencySet {
    pub fn state_dim(&self) -> usize {
        self.dictionary.state_dim
    }

    /// `φ_kᵀθ_j ≤ ε + x_{j,k+1}` and `−φ_kᵀθ_j ≤ ε − x_{j,k+1}` for every record.
    fn block(&self, j: usize) -> Result<HPolytope> {
        let mut normals = Vec::with_capacity(2 * self.regressors.len());
        let mut offsets = Vec::with_capacity(2 * self.regressors.len());
        for (phi, next) in self.regressors.iter().zip(&self.targets) {
            let y = next[j];
            if phi.iter().all(|v| *v == 0.0) {
                // Zero regressor: the record only checks |y| ≤ ε.
                if y.abs() > self.epsilon {
                    return Err(Error::EmptyPolytope);
                }
                continue;
            }
            normals.push(phi.clone());
            offsets.push(self.epsilon + y);
            normals.push(phi.iter().map(|v| -v).collect());
            offsets.push(self.epsilon - y);
        }
        if normals.is_empty() {
            return Err(Error::NotIdentifiable { rank: 0, required: self.dictionary.len() });
        }
        HPolytope::new(normals, offsets)
    }

    /// The whole set as one polytope over `θ ∈ R^{n·d_f}`:
    /// `[A; −A] θ ≤ [ε1 + ξ; ε1 − ξ]` with `A` stacking `I ⊗ φ_kᵀ`.
    pub fn joint_polytope(&self) -> Result<HPolytope> {
        let n = self.state_dim();
        let d = self.dictionary.len();
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for (phi, next) in self.regressors.iter().zip(&self.targets) {
            for j in 0..n {
                let mut row = vec![0.0; n * d];
                row[j * d..(j + 1) * d].copy_from_slice(phi);
                upper.push((row.clone(), self.epsilon + next[j]));
                lower.push((row.iter().map(|v| -v).collect::<Vec<f64>>(), self.epsilon - next[j]));
            }
        }
        let (normals, offsets) = upper.into_iter().chain(lower).unzip();
        HPolytope::new(normals, offsets)
    }

    /// Enumerates each block, then forms `Q` as the product in component order.
    pub fn enumerate_vertices(&mut self, exec: Execution) -> Result<()> {
        let d = self.dictionary.len();
        let results = map_indexed(exec, self.blocks.len(), |j| self.blocks[j].enumerate_vertices());
        let mut block_vertices = Vec::with_capacity(results.len());
        for (j, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => block_vertices.push(v),
                Err(Error::Unbounded { .. }) => {
                    let rank = rank_of(&self.blocks[j].normals, d);
                    return Err(Error::NotIdentifiable { rank: rank.rank, required: d });
                }
                Err(e) => return Err(e),
            }
        }
        let mut product = block_vertices[0].clone();
        for b in &block_vertices[1..] {
            product = product.cartesian_product(b);
        }
        self.vertices = product.vertices.into_iter().map(ParameterPoint::new).collect();
        self.block_vertices = block_vertices;
        Ok(())
    }

    pub fn block_counts(&self) -> Vec<usize> {
        self.block_vertices.iter().map(VPolytope::len).collect()
    }

    /// `(max_k ‖x_{k+1} − Θφ_k‖∞ ≤ ε + 1e-9, that maximum)`.
    pub fn membership(&self, theta: &ParameterPoint) -> Result<(bool, f64)> {
        theta.check(&self.dictionary)?;
        let d = self.dictionary.len();
        let mut worst = 0.0f64;
        for (phi, next) in self.regressors.iter().zip(&self.targets) {
            for (j, y) in next.iter().enumerate() {
                let pred: f64 = theta.row(j, d).iter().zip(phi).map(|(a, b)| a * b).sum();
                worst = worst.max((y - pred).abs());
            }
        }
        Ok((worst <= self.epsilon + 1e-9, worst))
    }

    /// Same check straight from a dataset record list (used for the generating model).
    pub fn residual_on(&self, theta: &ParameterPoint, data: &Dataset) -> f64 {
        data.records
            .iter()
            .flat_map(|r| {
                let f = evaluate_f(theta, &self.dictionary, &r.state, &r.input);
                r.next.iter().zip(f).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("consistency set serializes"))
    }
}

/// Free-function form of [`ConsistencySet::enumerate_vertices`].
pub fn enumerate_parameter_vertices(cs: &mut ConsistencySet, exec: Execution) -> Result<&[ParameterPoint]> {
    cs.enumerate_vertices(exec)?;
    Ok(&cs.vertices)
}
