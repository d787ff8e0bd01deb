//! Order-fixed reductions. Values are summed sequentially inside fixed-size
//! chunks, and the chunk partials are combined by a pairwise tree, so the
//! result does not depend on how rayon schedules the chunks.

use rayon::prelude::*;

use super::{Field, CHUNK};

fn tree(mut parts: Vec<f64>) -> f64 {
    if parts.is_empty() {
        return 0.0;
    }
    while parts.len() > 1 {
        parts = parts.chunks(2).map(|p| p.iter().sum()).collect();
    }
    parts[0]
}

/// Deterministic sum of `f(i)` for `i in 0..len`.
pub fn sum_by<F: Fn(usize) -> f64 + Sync>(len: usize, f: F) -> f64 {
    let chunks = len.div_ceil(CHUNK);
    let parts: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            (c * CHUNK..end).fold(0.0, |acc, i| acc + f(i))
        })
        .collect();
    tree(parts)
}

pub fn sum(values: &[f64]) -> f64 {
    sum_by(values.len(), |i| values[i])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    sum_by(a.len(), |i| a[i] * b[i])
}

pub fn sum_squares(values: &[f64]) -> f64 {
    sum_by(values.len(), |i| values[i] * values[i])
}

/// `∫ |f|^2 dx` over all components by the grid rule `Σ · h^n`.
pub fn integral_sq(f: &Field) -> f64 {
    sum_squares(f.data()) * f.grid().cell_volume()
}

/// Discrete `L^2` norm over all components.
pub fn l2(f: &Field) -> f64 {
    integral_sq(f).sqrt()
}

/// Discrete `L^p` norm; `p = ∞` gives the grid maximum.
pub fn lp(f: &Field, p: f64) -> f64 {
    if p.is_infinite() {
        return f.max_abs();
    }
    let d = f.data();
    (sum_by(d.len(), |i| d[i].abs().powf(p)) * f.grid().cell_volume()).powf(1.0 / p)
}
