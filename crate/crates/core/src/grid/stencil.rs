use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Field, CHUNK};
use crate::error::{Error, Result};

/// Widest one-sided reach of any stencil, in nodes.
pub const STENCIL_RADIUS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Accuracy {
    #[serde(rename = "2")]
    Second,
    #[default]
    #[serde(rename = "4")]
    Fourth,
}

impl Accuracy {
    pub fn order(self) -> usize {
        match self {
            Accuracy::Second => 2,
            Accuracy::Fourth => 4,
        }
    }

    pub fn from_order(p: usize) -> Result<Self> {
        match p {
            2 => Ok(Accuracy::Second),
            4 => Ok(Accuracy::Fourth),
            _ => Err(Error::Config(format!("stencil order must be 2 or 4, got {p}"))),
        }
    }
}

// Weights are in units of 1/(12h) for order 4 and 1/(2h) for order 2.
const C4_LEFT0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const C4_LEFT1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const C4_CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const C4_RIGHT1: [f64; 5] = [-1.0, 6.0, -18.0, 10.0, 3.0];
const C4_RIGHT0: [f64; 5] = [3.0, -16.0, 36.0, -48.0, 25.0];
const C2_LEFT: [f64; 3] = [-3.0, 4.0, -1.0];
const C2_CENTRAL: [f64; 3] = [-1.0, 0.0, 1.0];
const C2_RIGHT: [f64; 3] = [1.0, -4.0, 3.0];

/// Weights and the offset of the first weight relative to node `i`.
fn coefficients(i: usize, m: usize, acc: Accuracy) -> (&'static [f64], isize) {
    match acc {
        Accuracy::Fourth => match i {
            0 => (&C4_LEFT0, 0),
            1 => (&C4_LEFT1, -1),
            _ if i == m - 2 => (&C4_RIGHT1, -3),
            _ if i == m - 1 => (&C4_RIGHT0, -4),
            _ => (&C4_CENTRAL, -2),
        },
        Accuracy::Second => match i {
            0 => (&C2_LEFT, 0),
            _ if i == m - 1 => (&C2_RIGHT, -2),
            _ => (&C2_CENTRAL, -1),
        },
    }
}

fn denominator(acc: Accuracy, h: f64) -> f64 {
    match acc {
        Accuracy::Fourth => 12.0 * h,
        Accuracy::Second => 2.0 * h,
    }
}

/// Treatment of the nodes within a stencil radius of the grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// One-sided stencils of the same order; exact on low-degree polynomials
    /// up to the edge.
    #[default]
    OneSided,
    /// Central stencils with zero values beyond the edge. The derivative
    /// matrix is then skew-symmetric, so `D∘D` has no growing modes; only
    /// valid for fields that vanish near the edge.
    ZeroExtension,
}

/// First derivative along `axis` (0-based), applied to every component.
/// Interior nodes use central differences; the two outermost layers use
/// one-sided closures of the same order.
pub fn partial_derivative(f: &Field, axis: usize, acc: Accuracy) -> Result<Field> {
    partial_derivative_closed(f, axis, acc, Closure::OneSided)
}

pub fn partial_derivative_closed(f: &Field, axis: usize, acc: Accuracy, closure: Closure) -> Result<Field> {
    let grid = *f.grid();
    grid.check_axis(axis)?;
    let m = grid.points();
    if m < acc.order() + 1 {
        return Err(Error::GridTooSmall { points: m, order: acc.order() });
    }
    let inner = grid.stride(axis);
    let inv = 1.0 / denominator(acc, grid.spacing());
    let src = f.data();
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(inner).with_min_len((CHUNK / inner).max(1)).enumerate().for_each(|(row, dst)| {
        let i = row % m;
        let (w, off) = match closure {
            Closure::OneSided => coefficients(i, m, acc),
            Closure::ZeroExtension => coefficients(m / 2, m, acc),
        };
        for (k, &wk) in w.iter().enumerate() {
            let j = i as isize + off + k as isize;
            if wk == 0.0 || j < 0 || j >= m as isize {
                continue;
            }
            let base = (row as isize + off + k as isize) as usize * inner;
            let line = &src[base..base + inner];
            dst.iter_mut().zip(line).for_each(|(d, s)| *d += wk * s);
        }
        dst.iter_mut().for_each(|d| *d *= inv);
    });
    Field::new(grid, f.components(), f.time(), out)
}

/// `∂_a ∂_b f` as the composition of two first-derivative stencils.
pub fn second_derivative(f: &Field, a: usize, b: usize, acc: Accuracy) -> Result<Field> {
    partial_derivative(&partial_derivative(f, b, acc)?, a, acc)
}

/// Sum of `∂_k ∂_k` over all axes, each built from the first-derivative
/// stencil applied twice so that discrete summation by parts holds exactly.
pub fn laplacian(f: &Field, acc: Accuracy) -> Result<Field> {
    laplacian_closed(f, acc, Closure::OneSided)
}

pub fn laplacian_closed(f: &Field, acc: Accuracy, closure: Closure) -> Result<Field> {
    let d = |g: &Field, k| partial_derivative_closed(g, k, acc, closure);
    let mut total = d(&d(f, 0)?, 0)?;
    for k in 1..f.grid().dim() {
        total.axpy(1.0, &d(&d(f, k)?, k)?)?;
    }
    Ok(total)
}

pub fn gradient(f: &Field, acc: Accuracy) -> Result<Vec<Field>> {
    (0..f.grid().dim()).map(|k| partial_derivative(f, k, acc)).collect()
}
