//! Uniform Cartesian grids centred at the origin, multi-component fields
//! sampled on them, and the finite-difference operators acting on fields.
//!
//! Fields are stored component-major: component `c` occupies the contiguous
//! block `c * P .. (c + 1) * P` with `P = m^n`, and within a block the first
//! axis varies slowest.

mod geometry;
pub mod io;
pub mod reduce;
mod stencil;

pub use geometry::{radial_coordinate, radial_derivative, weight, weight_pow};
pub use stencil::{
    gradient, laplacian, laplacian_closed, partial_derivative, partial_derivative_closed, second_derivative, Accuracy,
    Closure, STENCIL_RADIUS,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chunk length used by every parallel loop over grid points. Fixed so that
/// reductions are independent of the thread count.
pub(crate) const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points: usize,
    half_width: f64,
}

impl Grid {
    /// `points` per axis on `[-half_width, half_width]^dim`. `points` must be
    /// odd (the origin is a node) and at least 5.
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if points < 5 {
            return Err(Error::GridTooSmall { points, order: 4 });
        }
        if points % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be odd so the origin is a node, got {points}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        Ok(Self { dim, points, half_width })
    }

    /// Smallest grid with the given spacing whose half-width is at least `radius`.
    pub fn covering(dim: usize, radius: f64, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0 && radius > 0.0) {
            return Err(Error::InvalidGrid(format!("cannot cover radius {radius} with spacing {spacing}")));
        }
        let half = (radius / spacing - 1e-9).ceil().max(2.0) as usize;
        Self::new(dim, 2 * half + 1, half as f64 * spacing)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    /// Number of nodes, `m^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of node `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Linear-index stride of `axis` (0-based, axis 0 slowest).
    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.dim - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi[..self.dim].iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Cartesian position of node `idx`; unused trailing entries are zero.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            x[k] = self.coordinate(mi[k]);
        }
        x
    }

    pub fn origin_index(&self) -> usize {
        let c = (self.points - 1) / 2;
        self.linear_index(&[c, c, c])
    }

    /// Same spacing, `extra` more nodes on each side of every axis.
    pub fn padded(&self, extra: usize) -> Self {
        let h = self.spacing();
        Self { dim: self.dim, points: self.points + 2 * extra, half_width: self.half_width + extra as f64 * h }
    }

    /// Same extent, spacing halved (`2m - 1` nodes, coarse nodes retained).
    pub fn refined(&self) -> Self {
        Self { dim: self.dim, points: 2 * self.points - 1, half_width: self.half_width }
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::AxisOutOfRange { axis, dim: self.dim });
        }
        Ok(())
    }
}

/// `components` real scalars per node of `grid`, tagged with a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    components: usize,
    time: f64,
    data: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, components: usize, time: f64, data: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::ShapeMismatch("a field needs at least one component".into()));
        }
        if data.len() != components * grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                components * grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, components, time, data })
    }

    pub fn zeros(grid: Grid, components: usize, time: f64) -> Self {
        Self { grid, components, time, data: vec![0.0; components * grid.len()] }
    }

    /// Samples `f(x, component)` at every node.
    pub fn from_fn<F>(grid: Grid, components: usize, time: f64, f: F) -> Self
    where
        F: Fn(&[f64], usize) -> f64 + Sync,
    {
        let len = grid.len();
        let dim = grid.dim();
        let mut data = vec![0.0; components * len];
        data.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, out)| {
            let start = chunk * CHUNK;
            for (k, slot) in out.iter_mut().enumerate() {
                let global = start + k;
                let x = grid.position(global % len);
                *slot = f(&x[..dim], global / len);
            }
        });
        Self { grid, components, time, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    /// Single-component field holding component `c`.
    pub fn extract(&self, c: usize) -> Field {
        Field { grid: self.grid, components: 1, time: self.time, data: self.component(c).to_vec() }
    }

    /// Concatenates single- or multi-component fields on a common grid.
    pub fn stack(parts: &[Field]) -> Result<Field> {
        let first = parts.first().ok_or_else(|| Error::ShapeMismatch("cannot stack zero fields".into()))?;
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.data.len()).sum());
        let mut components = 0;
        for p in parts {
            first.check_same_grid(p)?;
            data.extend_from_slice(&p.data);
            components += p.components;
        }
        Field::new(first.grid, components, first.time, data)
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch(format!("grids differ: {:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn check_same_shape(&self, other: &Field) -> Result<()> {
        self.check_same_grid(other)?;
        if self.components != other.components {
            return Err(Error::ShapeMismatch(format!(
                "component counts differ: {} vs {}",
                self.components, other.components
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.par_iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.par_iter().map(|v| v.abs()).reduce(|| 0.0, f64::max)
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Field {
        let data = self.data.par_iter().map(|&v| f(v)).collect();
        Field { data, ..*self }
    }

    pub fn scaled(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Field) -> Result<()> {
        self.check_same_shape(other)?;
        self.data.par_iter_mut().zip(other.data.par_iter()).for_each(|(x, y)| *x += a * y);
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Multiplies every component by a single-component field.
    pub fn mul_scalar_field(&self, weight: &Field) -> Result<Field> {
        self.check_same_grid(weight)?;
        if weight.components != 1 {
            return Err(Error::ShapeMismatch("weight must be single-component".into()));
        }
        let len = self.grid.len();
        let w = &weight.data;
        let mut data = self.data.clone();
        data.par_chunks_mut(len).for_each(|block| {
            block.iter_mut().zip(w.iter()).for_each(|(x, wv)| *x *= wv);
        });
        Ok(Field { data, ..*self })
    }

    /// Largest absolute value in the outer boundary layer `width` nodes thick.
    pub fn boundary_max(&self, width: usize) -> f64 {
        let m = self.grid.points;
        let len = self.grid.len();
        let dim = self.grid.dim;
        (0..self.data.len())
            .into_par_iter()
            .with_min_len(CHUNK)
            .filter(|&k| {
                let mi = self.grid.multi_index(k % len);
                mi[..dim].iter().any(|&i| i < width || i + width >= m)
            })
            .map(|k| self.data[k].abs())
            .reduce(|| 0.0, f64::max)
    }

    /// Largest `|x|` of a node where some component exceeds `threshold` in magnitude.
    pub fn support_radius(&self, threshold: f64) -> f64 {
        let len = self.grid.len();
        (0..self.data.len())
            .into_par_iter()
            .with_min_len(CHUNK)
            .filter(|&k| self.data[k].abs() > threshold)
            .map(|k| {
                let x = self.grid.position(k % len);
                (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Copies this field into a larger grid with the same spacing, zero-filled.
    pub fn embed(&self, target: Grid) -> Result<Field> {
        let extra = self.offset_into(&target)?;
        let mut out = Field::zeros(target, self.components, self.time);
        let (len, tlen) = (self.grid.len(), target.len());
        for c in 0..self.components {
            let src = &self.data[c * len..(c + 1) * len];
            let dst = &mut out.data[c * tlen..(c + 1) * tlen];
            for (k, &v) in src.iter().enumerate() {
                let mut mi = self.grid.multi_index(k);
                mi.iter_mut().take(self.grid.dim).for_each(|i| *i += extra);
                dst[target.linear_index(&mi)] = v;
            }
        }
        Ok(out)
    }

    fn offset_into(&self, target: &Grid) -> Result<usize> {
        let h = self.grid.spacing();
        let same_spacing = (target.spacing() - h).abs() <= 1e-12 * h;
        if target.dim != self.grid.dim || target.points < self.grid.points || !same_spacing {
            return Err(Error::ShapeMismatch(format!("cannot embed {:?} into {:?}", self.grid, target)));
        }
        Ok((target.points - self.grid.points) / 2)
    }
}

/// The Cauchy pair `(u, ∂_t u)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub u: Field,
    pub v: Field,
}

impl StateSnapshot {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        u.check_same_shape(&v)?;
        if u.time() != v.time() {
            return Err(Error::ShapeMismatch(format!("u at t = {} but v at t = {}", u.time(), v.time())));
        }
        Ok(Self { u, v })
    }

    pub fn zeros(grid: Grid, components: usize, time: f64) -> Self {
        Self { u: Field::zeros(grid, components, time), v: Field::zeros(grid, components, time) }
    }

    pub fn time(&self) -> f64 {
        self.u.time()
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn components(&self) -> usize {
        self.u.components()
    }

    pub fn embed(&self, target: Grid) -> Result<Self> {
        Ok(Self { u: self.u.embed(target)?, v: self.v.embed(target)? })
    }
}
