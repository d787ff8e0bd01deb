use super::{partial_derivative, Accuracy, Field, Grid};
use crate::error::Result;

/// `|x|` at every node.
pub fn radial_coordinate(grid: &Grid) -> Field {
    Field::from_fn(*grid, 1, 0.0, |x, _| x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `⟨c t - |x|⟩ = sqrt(1 + (c t - |x|)^2)` at every node.
pub fn weight(grid: &Grid, c: f64, t: f64) -> Field {
    weight_pow(grid, c, t, 1.0)
}

/// `⟨c t - |x|⟩^power`.
pub fn weight_pow(grid: &Grid, c: f64, t: f64, power: f64) -> Field {
    Field::from_fn(*grid, 1, t, |x, _| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = c * t - r;
        (1.0 + s * s).powf(0.5 * power)
    })
    .with_time(t)
}

/// `(x / |x|) · ∇f` for every component. The origin receives the mean of its
/// `2n` axis neighbours.
pub fn radial_derivative(f: &Field, acc: Accuracy) -> Result<Field> {
    let grid = *f.grid();
    let dim = grid.dim();
    let len = grid.len();
    let mut out = Field::zeros(grid, f.components(), f.time());
    for k in 0..dim {
        let dk = partial_derivative(f, k, acc)?;
        let src = dk.data();
        out.data_mut().iter_mut().enumerate().for_each(|(idx, o)| {
            *o += grid.position(idx % len)[k] * src[idx];
        });
    }
    let origin = grid.origin_index();
    for idx in 0..out.data().len() {
        let node = idx % len;
        if node != origin {
            let x = grid.position(node);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            out.data_mut()[idx] /= r;
        }
    }
    for c in 0..f.components() {
        let block = out.component_mut(c);
        let mut acc_sum = 0.0;
        for k in 0..dim {
            let s = grid.stride(k);
            acc_sum += block[origin - s] + block[origin + s];
        }
        block[origin] = acc_sum / (2 * dim) as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        let g = Grid::new(3, 9, 4.0).unwrap();
        let w0 = weight(&g, 1.7, 0.0);
        assert_eq!(w0.data()[g.origin_index()], 1.0);
        // node at (1, 0, 0)
        let idx = g.linear_index(&[5, 4, 4]);
        let w = weight(&g, 2.0, 3.0);
        assert!((w.data()[idx] - 26f64.sqrt()).abs() < 1e-14);
        let on_cone = weight(&g, 0.5, 2.0);
        assert!((on_cone.data()[idx] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn radial_derivative_of_r_squared() {
        let g = Grid::new(2, 21, 2.0).unwrap();
        let f = Field::from_fn(g, 1, 0.0, |x, _| x[0] * x[0] + x[1] * x[1]);
        let dr = radial_derivative(&f, Accuracy::Fourth).unwrap();
        let r = radial_coordinate(&g);
        for (idx, (a, b)) in dr.data().iter().zip(r.data()).enumerate() {
            if idx != g.origin_index() {
                assert!((a - 2.0 * b).abs() < 1e-11);
            }
        }
        assert!((dr.data()[g.origin_index()] - 2.0 * g.spacing()).abs() < 1e-11);
    }
}
