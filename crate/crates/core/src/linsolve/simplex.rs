//! Dense two-phase tableau simplex.
//!
//! Dantzig pricing with a switch to Bland's rule after a run of degenerate
//! pivots. Problems are tiny (support functions, redundancy tests, cutting
//! plane masters), so the tableau is stored densely.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const PRICE_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 25;

/// `maximize objective·x` subject to `rows·x ≤ rhs` and `lower ≤ x ≤ upper`.
///
/// Infinite bounds are allowed; a fresh problem has every variable free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless `status == Optimal`.
    pub x: Vec<f64>,
    pub value: f64,
}

impl LpProblem {
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn leq(mut self, row: Vec<f64>, b: f64) -> Self {
        self.push_leq(row, b);
        self
    }

    pub fn geq(mut self, row: Vec<f64>, b: f64) -> Self {
        self.push_leq(row.into_iter().map(|a| -a).collect(), -b);
        self
    }

    pub fn bounds(mut self, var: usize, lower: f64, upper: f64) -> Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn nonnegative(mut self) -> Self {
        self.lower.iter_mut().for_each(|l| *l = l.max(0.0));
        self
    }

    pub fn push_leq(&mut self, row: Vec<f64>, b: f64) {
        self.rows.push(row);
        self.rhs.push(b);
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.rows.len() != self.rhs.len() || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidInput("inconsistent LP dimensions".into()));
        }
        for row in &self.rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
        }
        let finite = self.objective.iter().chain(self.rows.iter().flatten()).chain(&self.rhs);
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite LP coefficient".into()));
        }
        if self.lower.iter().any(|v| v.is_nan() || *v == f64::INFINITY)
            || self.upper.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY)
        {
            return Err(Error::InvalidInput("invalid variable bound".into()));
        }
        Ok(())
    }

    /// Largest violation of the row and bound constraints at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| dot(r, x) - b);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .flat_map(|(v, (l, u))| [l - v, v - u]);
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How an original variable is expressed through non-negative columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shifted { col: usize, offset: f64, sign: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    t: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.cols
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.cols + 1;
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for k in 0..width {
                    r[k] -= f * pivot_row[k];
                }
                r[col] = 0.0;
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for k in 0..width {
                self.obj[k] -= f * pivot_row[k];
            }
            self.obj[col] = 0.0;
        }
        self.basis[row] = col;
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let width = self.cols + 1;
        self.obj = vec![0.0; width];
        for (j, c) in costs.iter().enumerate() {
            self.obj[j] = -c;
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for k in 0..width {
                    self.obj[k] += cb * self.t[i][k];
                }
            }
        }
    }

    /// Returns `Ok(true)` at optimality and `Ok(false)` when unbounded.
    fn optimize(&mut self, allowed: &[bool]) -> Result<bool> {
        let rhs = self.rhs();
        let max_iter = 200 * (self.t.len() + self.cols) + 1000;
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate >= DEGENERATE_RUN;
            let scale = 1.0 + self.obj[..self.cols].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut enter = None;
            let mut best = -PRICE_TOL * scale;
            for j in 0..self.cols {
                if !allowed[j] {
                    continue;
                }
                let rc = self.obj[j];
                if bland {
                    if rc < -PRICE_TOL * scale {
                        enter = Some(j);
                        break;
                    }
                } else if rc < best {
                    best = rc;
                    enter = Some(j);
                }
            }
            let Some(col) = enter else { return Ok(true) };

            let mut leave: Option<(usize, f64)> = None;
            for (i, r) in self.t.iter().enumerate() {
                let a = r[col];
                if a > PIVOT_TOL {
                    let ratio = r[rhs].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if ratio < lr && !tie
                                || tie && (self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, ratio)) = leave else { return Ok(false) };
            if ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(row, col);
        }
        Err(Error::LpBreakdown("iteration limit reached".into()))
    }
}

/// Solves the LP. `Err` only on malformed input or numerical breakdown.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.dim();

    // Map original variables onto non-negative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (problem.lower[j], problem.upper[j]);
        if lo.is_finite() {
            maps.push(VarMap::Shifted { col: ncols, offset: lo, sign: 1.0 });
            if hi.is_finite() {
                extra_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Shifted { col: ncols, offset: hi, sign: -1.0 });
            ncols += 1;
        } else {
            maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        }
    }

    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for (row, &rhs) in problem.rows.iter().zip(&problem.rhs) {
        let mut out = vec![0.0; ncols];
        let mut shift = 0.0;
        for (j, &a) in row.iter().enumerate() {
            match maps[j] {
                VarMap::Shifted { col, offset, sign } => {
                    out[col] += a * sign;
                    shift += a * offset;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] += a;
                    out[neg] -= a;
                }
            }
        }
        a_rows.push(out);
        b.push(rhs - shift);
    }
    for &(col, width) in &extra_rows {
        let mut out = vec![0.0; ncols];
        out[col] = 1.0;
        a_rows.push(out);
        b.push(width);
    }
    let mut costs = vec![0.0; ncols];
    for (j, &c) in problem.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shifted { col, sign, .. } => costs[col] += c * sign,
            VarMap::Split { pos, neg } => {
                costs[pos] += c;
                costs[neg] -= c;
            }
        }
    }

    let m = a_rows.len();
    let n_art = b.iter().filter(|v| **v < 0.0).count();
    let cols = ncols + m + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art = ncols + m;
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..ncols {
            t[i][k] = sign * a_rows[i][k];
        }
        t[i][ncols + i] = sign;
        t[i][cols] = sign * b[i];
        if sign < 0.0 {
            t[i][art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = ncols + i;
        }
    }
    let mut tab = Tableau { t, obj: Vec::new(), basis, cols };
    let bscale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(ncols + m) {
            *c = -1.0;
        }
        tab.set_objective(&phase1);
        let allowed = vec![true; cols];
        tab.optimize(&allowed)?;
        if tab.obj[cols] < -1e-9 * bscale {
            return Ok(LpSolution { status: LpStatus::Infeasible, x: Vec::new(), value: f64::NAN });
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= ncols + m {
                let col = (0..ncols + m)
                    .filter(|&j| tab.t[i][j].abs() > 1e-9)
                    .max_by(|&a, &b| tab.t[i][a].abs().total_cmp(&tab.t[i][b].abs()));
                match col {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..ncols].copy_from_slice(&costs);
    tab.set_objective(&phase2);
    let mut allowed = vec![true; cols];
    for a in allowed.iter_mut().skip(ncols + m) {
        *a = false;
    }
    if !tab.optimize(&allowed)? {
        return Ok(LpSolution { status: LpStatus::Unbounded, x: Vec::new(), value: f64::INFINITY });
    }

    let mut y = vec![0.0; cols];
    for (i, &bv) in tab.basis.iter().enumerate() {
        y[bv] = tab.t[i][cols].max(0.0);
    }
    refine_basic_solution(&a_rows, &b, ncols, &tab.basis, &mut y);

    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shifted { col, offset, sign } => offset + sign * y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let value = dot(&problem.objective, &x);
    Ok(LpSolution { status: LpStatus::Optimal, x, value })
}

/// Re-solves `B y_B = b` on the final basis to wash out tableau drift.
fn refine_basic_solution(a_rows: &[Vec<f64>], b: &[f64], ncols: usize, basis: &[usize], y: &mut [f64]) {
    let m = a_rows.len();
    let k = basis.len();
    if k == 0 || basis.iter().any(|&c| c >= ncols + m) {
        return;
    }
    // Rows dropped as redundant leave a non-square system; use least squares.
    let bmat = DMatrix::from_fn(m, k, |i, j| {
        let c = basis[j];
        if c < ncols {
            a_rows[i][c]
        } else if c - ncols == i {
            1.0
        } else {
            0.0
        }
    });
    let rhs = DVector::from_column_slice(b);
    let sol = if m == k {
        bmat.clone().lu().solve(&rhs)
    } else {
        let bt = bmat.transpose();
        (&bt * &bmat).lu().solve(&(&bt * &rhs))
    };
    let Some(sol) = sol else { return };
    if sol.iter().any(|v| !v.is_finite() || *v < -1e-7) {
        return;
    }
    let residual = (&bmat * &sol - &rhs).amax();
    if residual > 1e-9 {
        return;
    }
    for (j, &c) in basis.iter().enumerate() {
        y[c] = sol[j].max(0.0);
    }
}
