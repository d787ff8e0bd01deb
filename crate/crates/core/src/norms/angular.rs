use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Directions and weights on the unit sphere `S^{n-1}`. The weights sum to
/// the sphere's area.
#[derive(Debug, Clone)]
pub struct SphereRule {
    dirs: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl SphereRule {
    /// 256 equispaced angles in 2D; 32 Gauss–Legendre latitudes by 64
    /// longitudes in 3D.
    pub fn standard(dim: usize) -> Self {
        if dim == 2 {
            Self::circle(256)
        } else {
            Self::lat_long(32, 64)
        }
    }

    pub fn circle(count: usize) -> Self {
        let w = 2.0 * std::f64::consts::PI / count as f64;
        let dirs = (0..count)
            .map(|k| {
                let a = w * k as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect();
        Self { dirs, weights: vec![w; count] }
    }

    pub fn lat_long(lat: usize, long: usize) -> Self {
        let (mu, wmu) = gauss_legendre(lat);
        let dphi = 2.0 * std::f64::consts::PI / long as f64;
        let mut dirs = Vec::with_capacity(lat * long);
        let mut weights = Vec::with_capacity(lat * long);
        for (m, wm) in mu.iter().zip(&wmu) {
            let s = (1.0 - m * m).sqrt();
            for k in 0..long {
                let phi = dphi * (k as f64 + 0.5);
                dirs.push([s * phi.cos(), s * phi.sin(), *m]);
                weights.push(wm * dphi);
            }
        }
        Self { dirs, weights }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `‖g‖_{L^p(S^{n-1})}` for samples `g` at this rule's nodes.
    pub fn norm(&self, values: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            return values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let s: f64 = values.iter().zip(&self.weights).map(|(v, w)| w * v.abs().powf(p)).sum();
        s.powf(1.0 / p)
    }
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Multilinear interpolation of component `comp` at `x`; nodes outside the
/// grid count as zero.
pub fn interpolate(f: &Field, comp: usize, x: &[f64]) -> f64 {
    let grid = f.grid();
    let dim = grid.dim();
    let h = grid.spacing();
    let m = grid.points() as isize;
    let data = f.component(comp);
    let mut base = [0isize; 3];
    let mut frac = [0.0; 3];
    for k in 0..dim {
        let s = (x[k] + grid.half_width()) / h;
        let i = s.floor();
        base[k] = i as isize;
        frac[k] = s - i;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        let mut inside = true;
        for k in 0..dim {
            let bit = (corner >> k) & 1;
            let i = base[k] + bit as isize;
            if i < 0 || i >= m {
                inside = false;
                break;
            }
            idx[k] = i as usize;
            w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
        }
        if inside && w != 0.0 {
            acc += w * data[grid.linear_index(&idx[..dim])];
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outer {
    Sup,
    L2,
}

/// Shell radii `k h`, `k = 0..=(m-1)/2`.
pub fn shell_radii(grid: &Grid) -> Vec<f64> {
    let h = grid.spacing();
    (0..=(grid.points() - 1) / 2).map(|k| k as f64 * h).collect()
}

/// One component sampled at the rule's nodes on every shell `|x| = k h`.
#[derive(Debug, Clone)]
pub struct ShellSamples {
    dim: usize,
    spacing: f64,
    radii: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl ShellSamples {
    pub fn new(f: &Field, comp: usize, rule: &SphereRule) -> Result<Self> {
        if comp >= f.components() {
            return Err(Error::ShapeMismatch(format!("component {comp} of a {}-component field", f.components())));
        }
        let radii = shell_radii(f.grid());
        if radii.len() < 2 {
            return Err(Error::InsufficientData("no shells inside the grid".into()));
        }
        let values = radii
            .par_iter()
            .map(|&r| {
                if r == 0.0 {
                    return vec![interpolate(f, comp, &[0.0; 3]); rule.len()];
                }
                rule.dirs.iter().map(|d| interpolate(f, comp, &[r * d[0], r * d[1], r * d[2]])).collect()
            })
            .collect();
        Ok(Self { dim: f.grid().dim(), spacing: f.grid().spacing(), radii, values })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// `‖r^power f(r·)‖_{L^p_ω}` on every shell.
    pub fn shell_norms(&self, p: f64, power: f64, rule: &SphereRule) -> Vec<f64> {
        self.radii
            .iter()
            .zip(&self.values)
            .map(|(&r, v)| if r == 0.0 && power != 0.0 { 0.0 } else { r.powf(power) * rule.norm(v, p) })
            .collect()
    }

    /// `‖r^power f‖_{L^∞_r L^p_ω}` or `‖r^power f‖_{L^2_r L^p_ω}` with the
    /// measure `r^{n-1} dr` (trapezoid rule over the shells).
    pub fn mixed(&self, outer: Outer, p: f64, power: f64, rule: &SphereRule) -> f64 {
        let norms = self.shell_norms(p, power, rule);
        match outer {
            Outer::Sup => norms.iter().fold(0.0, |m, v| m.max(*v)),
            Outer::L2 => {
                let last = norms.len() - 1;
                let s: f64 = self
                    .radii
                    .iter()
                    .zip(&norms)
                    .enumerate()
                    .map(|(k, (r, a))| {
                        let w = if k == 0 || k == last { 0.5 } else { 1.0 };
                        w * a * a * r.powi(self.dim as i32 - 1)
                    })
                    .sum();
                (s * self.spacing).sqrt()
            }
        }
    }
}

/// `‖ r^power f(r·)‖_{L^p_ω}` on every shell.
pub fn shell_norms(f: &Field, comp: usize, p: f64, power: f64, rule: &SphereRule) -> Result<Vec<f64>> {
    Ok(ShellSamples::new(f, comp, rule)?.shell_norms(p, power, rule))
}

pub fn mixed_radial_angular(
    f: &Field,
    comp: usize,
    outer: Outer,
    p: f64,
    power: f64,
    rule: &SphereRule,
) -> Result<f64> {
    Ok(ShellSamples::new(f, comp, rule)?.mixed(outer, p, power, rule))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_constants() {
        let pi = std::f64::consts::PI;
        assert!((SphereRule::standard(2).area() - 2.0 * pi).abs() < 1e-12);
        assert!((SphereRule::standard(3).area() - 4.0 * pi).abs() < 1e-12);
        // Gauss–Legendre in cos θ integrates z^2 exactly
        let r = SphereRule::standard(3);
        let z2: f64 = r.dirs.iter().zip(&r.weights).map(|(d, w)| w * d[2] * d[2]).sum();
        assert!((z2 - 4.0 * pi / 3.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_exact_on_bilinear() {
        let g = Grid::new(2, 11, 1.0).unwrap();
        let f = Field::from_fn(g, 1, 0.0, |x, _| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]);
        let x = [0.123, -0.377];
        let exact = 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1];
        assert!((interpolate(&f, 0, &x) - exact).abs() < 1e-14);
    }

    #[test]
    fn constant_field_gives_sphere_area() {
        let g = Grid::new(2, 41, 2.0).unwrap();
        let f = Field::from_fn(g, 1, 0.0, |_, _| 1.0);
        let rule = SphereRule::standard(2);
        let v = mixed_radial_angular(&f, 0, Outer::Sup, 2.0, 0.0, &rule).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn angular_mode_norm_is_shell_independent() {
        let g = Grid::new(2, 201, 2.0).unwrap();
        let f = Field::from_fn(g, 1, 0.0, |x, _| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if r > 0.0 {
                x[0] / r
            } else {
                0.0
            }
        });
        let rule = SphereRule::standard(2);
        let norms = shell_norms(&f, 0, 2.0, 0.0, &rule).unwrap();
        let target = std::f64::consts::PI.sqrt();
        for (k, n) in norms.iter().enumerate().skip(10).take(80) {
            assert!((n / target - 1.0).abs() < 0.01, "shell {k}: {n}");
        }
    }
}
