//! Double-description enumeration of the extreme rays of a pointed cone
//! `{y : a_i·y ≥ 0}`.
//!
//! Rows are inserted in the order given. The initial simplicial cone is built
//! from the first linearly independent rows; each later row splits the current
//! ray set and new rays are formed from adjacent (positive, negative) pairs
//! using the combinatorial adjacency test.

use nalgebra::DMatrix;

const ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64).max(1)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn contains_all(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == *b)
    }
}

struct Ray {
    y: Vec<f64>,
    zeros: Bits,
}

pub(crate) enum DdFailure {
    /// The cone contains a line; the vector spans part of it.
    Lineality(Vec<f64>),
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn extreme_rays(rows: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>, DdFailure> {
    let mut rows: Vec<Vec<f64>> = rows
        .iter()
        .filter_map(|r| {
            let mut r = r.clone();
            (normalize(&mut r) > 1e-300).then_some(r)
        })
        .collect();
    let nrows = rows.len();

    // Greedy selection of `dim` independent rows via Gram-Schmidt.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if chosen.len() == dim {
            break;
        }
        let mut v = r.clone();
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        if normalize(&mut v) > 1e-9 {
            basis.push(v);
            chosen.push(i);
        }
    }
    if chosen.len() < dim {
        // Any vector orthogonal to all rows lies in the lineality space.
        for k in 0..dim {
            let mut v = vec![0.0; dim];
            v[k] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let p = dot(&v, b);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
            }
            if normalize(&mut v) > 1e-6 {
                return Err(DdFailure::Lineality(v));
            }
        }
        unreachable!("rank deficiency implies a non-trivial null space");
    }

    let a_s = DMatrix::from_fn(dim, dim, |i, j| rows[chosen[i]][j]);
    let inv = a_s.try_inverse().expect("independent rows form an invertible matrix");
    let mut rays: Vec<Ray> = (0..dim)
        .map(|k| {
            let mut y: Vec<f64> = inv.column(k).iter().copied().collect();
            normalize(&mut y);
            let mut zeros = Bits::new(nrows);
            for (idx, &row) in chosen.iter().enumerate() {
                if idx != k {
                    zeros.set(row);
                }
            }
            Ray { y, zeros }
        })
        .collect();

    let mut is_chosen = vec![false; nrows];
    chosen.iter().for_each(|&i| is_chosen[i] = true);

    for i in 0..nrows {
        if is_chosen[i] {
            continue;
        }
        let a = std::mem::take(&mut rows[i]);
        let values: Vec<f64> = rays.iter().map(|r| dot(&a, &r.y)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| values[k] > ZERO_TOL).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| values[k] < -ZERO_TOL).collect();
        if neg.is_empty() {
            for (k, r) in rays.iter_mut().enumerate() {
                if values[k].abs() <= ZERO_TOL {
                    r.zeros.set(i);
                }
            }
            rows[i] = a;
            continue;
        }

        let mut fresh: Vec<Ray> = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = rays[p].zeros.and(&rays[n].zeros);
                if common.count() + 2 < dim {
                    continue;
                }
                let adjacent = rays.iter().enumerate().all(|(k, r)| {
                    k == p || k == n || !r.zeros.contains_all(&common)
                });
                if !adjacent {
                    continue;
                }
                let (vp, vn) = (values[p], values[n]);
                let mut y: Vec<f64> = rays[n]
                    .y
                    .iter()
                    .zip(&rays[p].y)
                    .map(|(yn, yp)| vp * yn - vn * yp)
                    .collect();
                if normalize(&mut y) <= 1e-300 {
                    continue;
                }
                let mut zeros = common;
                zeros.set(i);
                fresh.push(Ray { y, zeros });
            }
        }

        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + fresh.len());
        for (k, mut r) in rays.into_iter().enumerate() {
            if values[k] < -ZERO_TOL {
                continue;
            }
            if values[k] <= ZERO_TOL {
                r.zeros.set(i);
            }
            next.push(r);
        }
        next.extend(fresh);
        rays = next;
        rows[i] = a;
    }

    Ok(rays.into_iter().map(|r| r.y).collect())
}
