//! Minimum-norm convex weights: `min ‖α‖² s.t. Σ α_p v_p = x, Σ α_p = 1, α ≥ 0`.
//!
//! Solved through the dual `max_μ bᵀμ − ½‖(Aᵀμ)₊‖²` with a globalized
//! semismooth Newton iteration; the primal solution is `α = (Aᵀμ)₊`.

use nalgebra::{DMatrix, DVector};

pub(crate) fn min_norm_weights(points: &[Vec<f64>], x: &[f64]) -> Option<Vec<f64>> {
    let n = points.len();
    let d = x.len();
    let a = DMatrix::from_fn(d + 1, n, |i, p| if i < d { points[p][i] } else { 1.0 });
    let b = DVector::from_iterator(d + 1, x.iter().copied().chain(std::iter::once(1.0)));
    let scale = 1.0 + b.amax() + a.amax();
    let reg = 1e-13 * scale * scale;

    let dual = |mu: &DVector<f64>| -> f64 {
        let s = a.tr_mul(mu);
        b.dot(mu) - 0.5 * s.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>()
    };

    let gram = &a * a.transpose() + DMatrix::identity(d + 1, d + 1) * reg;
    let mut mu = gram.lu().solve(&b)?;
    for _ in 0..500 {
        let s = a.tr_mul(&mu);
        let alpha = s.map(|v| v.max(0.0));
        let r = &b - &a * &alpha;
        if r.amax() <= 1e-14 * scale {
            break;
        }
        let mut h = DMatrix::identity(d + 1, d + 1) * reg;
        for p in 0..n {
            if s[p] > 0.0 {
                let col = a.column(p);
                h += col * col.transpose();
            }
        }
        let step = h.lu().solve(&r)?;
        let base = dual(&mu);
        let slope = r.dot(&step);
        let mut t = 1.0;
        loop {
            let trial = &mu + &step * t;
            if dual(&trial) >= base + 1e-4 * t * slope || t < 1e-12 {
                mu = trial;
                break;
            }
            t *= 0.5;
        }
    }
    let alpha: Vec<f64> = a.tr_mul(&mu).iter().map(|v| v.max(0.0)).collect();
    alpha.iter().all(|v| v.is_finite()).then_some(alpha)
}
