//! Coefficients of the quasi-linear systems
//!
//! ```text
//! □_l u^l = G^{l,αβγ}_{ij} ∂_α u^i ∂²_{βγ} u^j + H^{l,αβ}_{ij} ∂_α u^i ∂_β u^j          (quadratic)
//! □_l u^l = G^{l,αβγδ}_{ijk} ∂_α u^i ∂_β u^j ∂²_{γδ} u^k + H^{l,αβγ}_{ijk} ∂_α u^i ∂_β u^j ∂_γ u^k   (cubic)
//! ```
//!
//! with `□_l = ∂_t² - c_l²Δ`, plus the pointwise solve for `∂_t² u`.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{apply_word, OperatorWord};
use crate::error::{Error, Result};
use crate::grid::{
    partial_derivative, partial_derivative_closed, Accuracy, Closure, Field, Grid, StateSnapshot, CHUNK,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Degree {
    Quadratic,
    Cubic,
}

impl Degree {
    /// Number of lower roman indices on `G` and `H`.
    pub fn romans(self) -> usize {
        match self {
            Degree::Quadratic => 2,
            Degree::Cubic => 3,
        }
    }

    /// Default pairing: quadratic in three dimensions, cubic in two.
    pub fn default_for(dim: usize) -> Self {
        if dim == 3 {
            Degree::Quadratic
        } else {
            Degree::Cubic
        }
    }
}

/// Dense coefficient tensor indexed `[l, romans…, greeks…]`, with roman
/// indices `0..N` and greek indices `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self { shape, data: vec![0.0; len] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.shape.len() || idx.iter().zip(&self.shape).any(|(i, s)| i >= s) {
            return Err(Error::ShapeMismatch(format!("index {idx:?} outside tensor of shape {:?}", self.shape)));
        }
        Ok(idx.iter().zip(&self.shape).fold(0, |acc, (i, s)| acc * s + i))
    }

    fn unravel(&self, mut off: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for k in (0..self.shape.len()).rev() {
            idx[k] = off % self.shape[k];
            off /= self.shape[k];
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.data[self.offset(idx)?])
    }

    pub fn set(&mut self, idx: &[usize], v: f64) -> Result<()> {
        let o = self.offset(idx)?;
        self.data[o] = v;
        Ok(())
    }

    fn nonzero(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.data.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(o, v)| (self.unravel(o), *v))
    }
}

/// An index tuple of `G` whose value differs from a symmetry partner.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryViolation {
    pub index: Vec<usize>,
    pub partner: Vec<usize>,
    pub value: f64,
    pub partner_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    dim: usize,
    speeds: Vec<f64>,
    degree: Degree,
    g: Tensor,
    h: Tensor,
}

/// One product in the right-hand side: `coeff · Π ∂_{greek} u^{comp}`,
/// optionally times a second derivative `∂²_{βγ} u^{comp}`.
#[derive(Debug, Clone)]
struct Term {
    l: usize,
    firsts: Vec<(usize, usize)>,
    second: Option<(usize, usize, usize)>,
    coeff: f64,
}

impl SystemSpec {
    /// Linear system `□_l u^l = 0` with the given speeds.
    pub fn linear(dim: usize, speeds: Vec<f64>, degree: Degree) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }
        if speeds.is_empty() {
            return Err(Error::Config("at least one component is required".into()));
        }
        if let Some(c) = speeds.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::Config(format!("speeds must be positive, got {c}")));
        }
        let n = speeds.len();
        let d = dim + 1;
        let r = degree.romans();
        let g_shape = [vec![n; 1 + r], vec![d; r + 1]].concat();
        let h_shape = [vec![n; 1 + r], vec![d; r]].concat();
        Ok(Self { dim, speeds, degree, g: Tensor::zeros(g_shape), h: Tensor::zeros(h_shape) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.speeds.len()
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().cloned().fold(0.0, f64::max)
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn g(&self) -> &Tensor {
        &self.g
    }

    pub fn h(&self) -> &Tensor {
        &self.h
    }

    pub fn is_linear(&self) -> bool {
        self.g.data.iter().chain(&self.h.data).all(|v| *v == 0.0)
    }

    /// Sets `G` at `[l, romans…, greeks…]` (all 0-based).
    pub fn set_g(&mut self, idx: &[usize], v: f64) -> Result<()> {
        self.g.set(idx, v)
    }

    pub fn set_h(&mut self, idx: &[usize], v: f64) -> Result<()> {
        self.h.set(idx, v)
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.g.data.iter_mut().chain(out.h.data.iter_mut()).for_each(|v| *v *= s);
        out
    }

    /// Images of a `G` index under the symmetry group: swapping the two
    /// greek indices of the second derivative, and swapping the upper index
    /// with the roman index of the differentiated factor.
    fn orbit(&self, idx: &[usize]) -> Vec<Vec<usize>> {
        let r = self.degree.romans();
        let last_roman = r;
        let len = idx.len();
        let mut out = Vec::with_capacity(4);
        for swap_greek in [false, true] {
            for swap_upper in [false, true] {
                let mut j = idx.to_vec();
                if swap_greek {
                    j.swap(len - 1, len - 2);
                }
                if swap_upper {
                    j.swap(0, last_roman);
                }
                if !out.contains(&j) {
                    out.push(j);
                }
            }
        }
        out
    }

    pub fn check_symmetry(&self, tol: f64) -> Vec<SymmetryViolation> {
        let mut out = Vec::new();
        for off in 0..self.g.data.len() {
            let idx = self.g.unravel(off);
            let v = self.g.data[off];
            for p in self.orbit(&idx).into_iter().skip(1) {
                let pv = self.g.data[self.g.offset(&p).expect("orbit stays in range")];
                if (v - pv).abs() > tol {
                    out.push(SymmetryViolation { index: idx.clone(), partner: p, value: v, partner_value: pv });
                }
            }
        }
        out
    }

    /// Averages `G` over the symmetry group.
    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        for off in 0..self.g.data.len() {
            let idx = self.g.unravel(off);
            let orbit = self.orbit(&idx);
            let sum: f64 = orbit.iter().map(|p| self.g.data[self.g.offset(p).expect("orbit stays in range")]).sum();
            out.g.data[off] = sum / orbit.len() as f64;
        }
        out
    }

    fn terms(&self) -> Vec<Term> {
        let r = self.degree.romans();
        let mut out = Vec::new();
        for (idx, coeff) in self.g.nonzero() {
            let romans = &idx[1..=r];
            let greeks = &idx[r + 1..];
            let firsts = (0..r - 1).map(|k| (greeks[k], romans[k])).collect();
            let (b, c) = (greeks[r - 1], greeks[r]);
            out.push(Term { l: idx[0], firsts, second: Some((b.min(c), b.max(c), romans[r - 1])), coeff });
        }
        for (idx, coeff) in self.h.nonzero() {
            let romans = &idx[1..=r];
            let greeks = &idx[r + 1..];
            let firsts = (0..r).map(|k| (greeks[k], romans[k])).collect();
            out.push(Term { l: idx[0], firsts, second: None, coeff });
        }
        out
    }

    /// Greek pairs `(β ≤ γ)` whose second derivatives the right side uses,
    /// including the spatial diagonal for the Laplacian and excluding `(0, 0)`.
    fn second_pairs(&self, terms: &[Term]) -> Vec<(usize, usize)> {
        let mut set: BTreeSet<(usize, usize)> = (1..=self.dim).map(|k| (k, k)).collect();
        for t in terms {
            if let Some((b, c, _)) = t.second {
                if (b, c) != (0, 0) {
                    set.insert((b, c));
                }
            }
        }
        set.into_iter().collect()
    }

    fn check_state(&self, s: &StateSnapshot) -> Result<()> {
        if s.grid().dim() != self.dim || s.components() != self.components() {
            return Err(Error::ShapeMismatch(format!(
                "state has dimension {} and {} components; system expects {} and {}",
                s.grid().dim(),
                s.components(),
                self.dim,
                self.components()
            )));
        }
        Ok(())
    }

    /// Nonlinear right-hand side with `∂_0 = v` and `∂_0∂_0 = utt`.
    pub fn rhs_spatial(&self, s: &StateSnapshot, utt: &Field, acc: Accuracy) -> Result<Field> {
        self.rhs_spatial_with(s, utt, acc, Closure::OneSided)
    }

    pub fn rhs_spatial_with(&self, s: &StateSnapshot, utt: &Field, acc: Accuracy, closure: Closure) -> Result<Field> {
        self.check_state(s)?;
        s.u.check_same_shape(utt)?;
        let terms = self.terms();
        let d = Derivatives::compute(s, &self.second_pairs(&terms), acc, closure)?;
        let n = self.components();
        let len = s.grid().len();
        let utt_data = utt.data();
        let mut out = vec![0.0; n * len];
        for c in 0..n {
            let block = &mut out[c * len..(c + 1) * len];
            block.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, dst)| {
                for (k, o) in dst.iter_mut().enumerate() {
                    let p = chunk * CHUNK + k;
                    *o = terms
                        .iter()
                        .filter(|t| t.l == c)
                        .map(|t| {
                            let second = match t.second {
                                Some((0, 0, j)) => utt_data[j * len + p],
                                Some((b, g, j)) => d.second(b, g, j, p),
                                None => 1.0,
                            };
                            t.firsts.iter().fold(t.coeff * second, |acc, &(a, i)| acc * d.first(a, i, p))
                        })
                        .sum();
                }
            });
        }
        Field::new(*s.grid(), n, s.time(), out)
    }

    /// Solves `A ∂_t²u = b` at every node, where `A = I - (coefficients of
    /// ∂_t²u on the right side)` and `b = c_l²Δu^l + remaining terms +
    /// forcing`. Fails with the first node (in storage order) whose condition
    /// estimate exceeds `cond_cap`.
    pub fn recover_utt(
        &self,
        s: &StateSnapshot,
        forcing: Option<&Field>,
        acc: Accuracy,
        cond_cap: f64,
    ) -> Result<Field> {
        self.recover_utt_with(s, forcing, acc, Closure::OneSided, cond_cap)
    }

    pub fn recover_utt_with(
        &self,
        s: &StateSnapshot,
        forcing: Option<&Field>,
        acc: Accuracy,
        closure: Closure,
        cond_cap: f64,
    ) -> Result<Field> {
        self.check_state(s)?;
        if let Some(f) = forcing {
            s.u.check_same_shape(f)?;
        }
        let terms = self.terms();
        let (implicit, explicit): (Vec<Term>, Vec<Term>) =
            terms.iter().cloned().partition(|t| matches!(t.second, Some((0, 0, _))));
        let d = Derivatives::compute(s, &self.second_pairs(&terms), acc, closure)?;
        let n = self.components();
        let len = s.grid().len();
        let dim = self.dim;
        let speeds = &self.speeds;
        let mut point_major = vec![0.0; n * len];
        let failures: Vec<Option<(usize, f64)>> = point_major
            .par_chunks_mut(n * CHUNK)
            .enumerate()
            .map(|(chunk, dst)| {
                let mut a = vec![0.0; n * n];
                let mut b = vec![0.0; n];
                for (k, out) in dst.chunks_mut(n).enumerate() {
                    let p = chunk * CHUNK + k;
                    for l in 0..n {
                        let lap: f64 = (1..=dim).map(|m| d.second(m, m, l, p)).sum();
                        b[l] = speeds[l] * speeds[l] * lap + forcing.map_or(0.0, |f| f.data()[l * len + p]);
                    }
                    for t in &explicit {
                        let second = match t.second {
                            Some((bb, g, j)) => d.second(bb, g, j, p),
                            None => 1.0,
                        };
                        b[t.l] += t.firsts.iter().fold(t.coeff * second, |acc, &(al, i)| acc * d.first(al, i, p));
                    }
                    if implicit.is_empty() {
                        out.copy_from_slice(&b);
                        continue;
                    }
                    a.iter_mut().enumerate().for_each(|(e, v)| *v = if e / n == e % n { 1.0 } else { 0.0 });
                    for t in &implicit {
                        let j = t.second.expect("implicit terms have a second derivative").2;
                        a[t.l * n + j] -= t.firsts.iter().fold(t.coeff, |acc, &(al, i)| acc * d.first(al, i, p));
                    }
                    match solve_small(&a, &b, n, cond_cap) {
                        Ok(x) => out.copy_from_slice(&x),
                        Err(cond) => return Some((p, cond)),
                    }
                }
                None
            })
            .collect();
        if let Some((point, condition)) = failures.into_iter().flatten().next() {
            return Err(Error::SingularPointMatrix { point, condition });
        }
        let mut data = vec![0.0; n * len];
        for (p, vals) in point_major.chunks(n).enumerate() {
            for (l, v) in vals.iter().enumerate() {
                data[l * len + p] = *v;
            }
        }
        Field::new(*s.grid(), n, s.time(), data)
    }

    /// Fields `P^{βγ}[l][j] = Σ G^{l,…βγ}_{…j} Π ∂u` (the coefficient of
    /// `∂²_{βγ}u^j` in equation `l`) for every ordered pair that occurs,
    /// stored point-major as `n × n` blocks.
    pub fn quasilinear_coefficients(
        &self,
        s: &StateSnapshot,
        acc: Accuracy,
    ) -> Result<Vec<((usize, usize), Vec<f64>)>> {
        self.check_state(s)?;
        let r = self.degree.romans();
        let n = self.components();
        let len = s.grid().len();
        let d = Derivatives::compute(s, &[], acc, Closure::OneSided)?;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut by_pair: Vec<Vec<(usize, usize, Vec<(usize, usize)>, f64)>> = Vec::new();
        for (idx, coeff) in self.g.nonzero() {
            let romans = &idx[1..=r];
            let greeks = &idx[r + 1..];
            let key = (greeks[r - 1], greeks[r]);
            let firsts: Vec<(usize, usize)> = (0..r - 1).map(|k| (greeks[k], romans[k])).collect();
            let slot = match pairs.iter().position(|p| *p == key) {
                Some(i) => i,
                None => {
                    pairs.push(key);
                    by_pair.push(Vec::new());
                    pairs.len() - 1
                }
            };
            by_pair[slot].push((idx[0], romans[r - 1], firsts, coeff));
        }
        let mut out = Vec::with_capacity(pairs.len());
        for (key, list) in pairs.into_iter().zip(by_pair) {
            let mut data = vec![0.0; len * n * n];
            data.par_chunks_mut(n * n * CHUNK).enumerate().for_each(|(chunk, dst)| {
                for (k, block) in dst.chunks_mut(n * n).enumerate() {
                    let p = chunk * CHUNK + k;
                    for (l, j, firsts, coeff) in &list {
                        block[l * n + j] += firsts.iter().fold(*coeff, |acc, &(a, i)| acc * d.first(a, i, p));
                    }
                }
            });
            out.push((key, data));
        }
        out.sort_by_key(|(k, _)| *k);
        Ok(out)
    }

    /// Largest `|Z̄^a ∂_α u^i|` over `|a| ≤ 1`, `0 ≤ α ≤ n` and all
    /// components, where `Z̄` ranges over spatial derivatives and rotations.
    pub fn smallness_check(s: &StateSnapshot, threshold: f64, acc: Accuracy) -> Result<Smallness> {
        let dim = s.grid().dim();
        let mut firsts = vec![s.v.clone()];
        for k in 0..dim {
            firsts.push(partial_derivative(&s.u, k, acc)?);
        }
        let mut words = vec![OperatorWord::identity()];
        words.extend(
            crate::algebra::alphabet(dim)
                .into_iter()
                .filter(|g| *g != crate::algebra::Generator::Scaling)
                .map(OperatorWord::single),
        );
        let mut max: f64 = 0.0;
        for f in &firsts {
            let snap = StateSnapshot::new(f.clone(), Field::zeros(*f.grid(), f.components(), f.time()))?;
            for w in &words {
                max = max.max(apply_word(w, &snap, None, acc)?.max_abs());
            }
        }
        Ok(Smallness { max, threshold, passes: max <= threshold })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smallness {
    pub max: f64,
    pub threshold: f64,
    pub passes: bool,
}

/// First derivatives `∂_α u` (`∂_0 u = v`) and the requested second
/// derivatives of a snapshot.
struct Derivatives {
    len: usize,
    first: Vec<Field>,
    pairs: Vec<(usize, usize)>,
    second: Vec<Field>,
}

impl Derivatives {
    fn compute(s: &StateSnapshot, pairs: &[(usize, usize)], acc: Accuracy, closure: Closure) -> Result<Self> {
        let dim = s.grid().dim();
        let partial_derivative = |f: &Field, k: usize, acc| partial_derivative_closed(f, k, acc, closure);
        let mut first = vec![s.v.clone()];
        for k in 0..dim {
            first.push(partial_derivative(&s.u, k, acc)?);
        }
        let mut second = Vec::with_capacity(pairs.len());
        for &(b, g) in pairs {
            // b ≤ g and (b, g) ≠ (0, 0): ∂_b ∂_g u = ∂_b of the γ-derivative
            let base = &first[g];
            second.push(if b == 0 {
                partial_derivative(&s.v, g - 1, acc)?
            } else {
                partial_derivative(base, b - 1, acc)?
            });
        }
        Ok(Self { len: s.grid().len(), first, pairs: pairs.to_vec(), second })
    }

    #[inline]
    fn first(&self, alpha: usize, comp: usize, p: usize) -> f64 {
        self.first[alpha].data()[comp * self.len + p]
    }

    #[inline]
    fn second(&self, b: usize, g: usize, comp: usize, p: usize) -> f64 {
        let key = (b.min(g), b.max(g));
        let i = self.pairs.iter().position(|q| *q == key).expect("pair was requested");
        self.second[i].data()[comp * self.len + p]
    }
}

/// Gaussian elimination with partial pivoting for small dense systems.
/// Returns the condition estimate `max(‖A‖₁, 1)·‖A⁻¹‖₁` on failure.
pub fn solve_small(a: &[f64], b: &[f64], n: usize, cond_cap: f64) -> std::result::Result<Vec<f64>, f64> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    (0..n).for_each(|i| inv[i * n + i] = 1.0);
    let norm_a = (0..n).map(|c| (0..n).map(|r| a[r * n + c].abs()).sum::<f64>()).fold(0.0, f64::max);
    for col in 0..n {
        let piv =
            (col..n).max_by(|&x, &y| m[x * n + col].abs().total_cmp(&m[y * n + col].abs())).expect("non-empty range");
        if m[piv * n + col] == 0.0 {
            return Err(f64::INFINITY);
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let d = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        m[r * n + k] -= f * m[col * n + k];
                        inv[r * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    let norm_inv = (0..n).map(|c| (0..n).map(|r| inv[r * n + c].abs()).sum::<f64>()).fold(0.0, f64::max);
    let cond = norm_a.max(1.0) * norm_inv;
    if !(cond <= cond_cap) {
        return Err(cond);
    }
    Ok((0..n).map(|r| (0..n).map(|c| inv[r * n + c] * b[c]).sum()).collect())
}

/// One sparse coefficient entry as written in a configuration file: upper
/// component, lower components (all 1-based) then greek indices (`0..=n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub index: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub dim: usize,
    pub speeds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<Degree>,
    #[serde(default)]
    pub symmetrize: bool,
    #[serde(default)]
    pub g: Vec<Entry>,
    #[serde(default)]
    pub h: Vec<Entry>,
}

impl SpecConfig {
    pub fn build(&self) -> Result<SystemSpec> {
        let degree = self.degree.unwrap_or_else(|| Degree::default_for(self.dim));
        let mut spec = SystemSpec::linear(self.dim, self.speeds.clone(), degree)?;
        let r = degree.romans();
        for (name, entries, greeks) in [("g", &self.g, r + 1), ("h", &self.h, r)] {
            for e in entries {
                if e.index.len() != 1 + r + greeks {
                    return Err(Error::Config(format!("{name} entry {:?} needs {} indices", e.index, 1 + r + greeks)));
                }
                let mut idx = e.index.clone();
                for v in &mut idx[..=r] {
                    if *v == 0 || *v > spec.components() {
                        return Err(Error::Config(format!(
                            "{name} entry {:?}: component indices run from 1 to {}",
                            e.index,
                            spec.components()
                        )));
                    }
                    *v -= 1;
                }
                if idx[r + 1..].iter().any(|&a| a > self.dim) {
                    return Err(Error::Config(format!(
                        "{name} entry {:?}: greek indices run from 0 to {}",
                        e.index, self.dim
                    )));
                }
                let target = if name == "g" { &mut spec.g } else { &mut spec.h };
                let cur = target.get(&idx)?;
                target.set(&idx, cur + e.value)?;
            }
        }
        if self.symmetrize {
            spec = spec.symmetrized();
        }
        let bad = spec.check_symmetry(1e-12);
        if let Some(v) = bad.first() {
            return Err(Error::Config(format!(
                "G is not symmetric: {} violations, first at {:?} vs {:?} ({} vs {})",
                bad.len(),
                v.index,
                v.partner,
                v.value,
                v.partner_value
            )));
        }
        Ok(spec)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Grid large enough to hold data of radius `r0` evolved for `tmax` at the
/// spec's largest speed, plus a margin of `margin` nodes.
pub fn containment_grid(dim: usize, r0: f64, c_max: f64, tmax: f64, spacing: f64, margin: usize) -> Result<Grid> {
    Grid::covering(dim, r0 + c_max * tmax + margin as f64 * spacing, spacing)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump_state(grid: Grid, n: usize, amp: f64) -> StateSnapshot {
        let bump = move |x: &[f64], c: usize| {
            let s = x.iter().enumerate().map(|(k, v)| (v - 0.1 * (k + c) as f64).powi(2)).sum::<f64>();
            if s < 1.0 {
                amp * (1.0 - s).powi(6)
            } else {
                0.0
            }
        };
        StateSnapshot::new(
            Field::from_fn(grid, n, 0.0, bump),
            Field::from_fn(grid, n, 0.0, move |x, c| 0.5 * bump(x, c + 1)),
        )
        .unwrap()
    }

    #[test]
    fn orbit_closure_for_single_entry() {
        let mut spec = SystemSpec::linear(3, vec![1.0], Degree::Quadratic).unwrap();
        spec.set_g(&[0, 0, 0, 1, 1, 0], 1.0).unwrap();
        let bad = spec.check_symmetry(0.0);
        assert_eq!(bad.len(), 2);
        assert!(bad.iter().any(|v| v.partner == vec![0, 0, 0, 1, 0, 1]));
        spec.set_g(&[0, 0, 0, 1, 0, 1], 1.0).unwrap();
        assert!(spec.check_symmetry(0.0).is_empty());
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let mut spec = SystemSpec::linear(2, vec![1.0, 2.0], Degree::Cubic).unwrap();
        for (k, idx) in [[0, 1, 0, 1, 2, 0, 1, 2], [1, 1, 1, 0, 0, 0, 0, 2]].iter().enumerate() {
            spec.set_g(idx, 1.0 + k as f64).unwrap();
        }
        let once = spec.symmetrized();
        assert!(once.check_symmetry(1e-15).is_empty());
        assert_eq!(once.symmetrized(), once);
    }

    #[test]
    fn linear_utt_is_wave_operator() {
        let grid = Grid::new(3, 17, 1.4).unwrap();
        let spec = SystemSpec::linear(3, vec![1.0, 2.0], Degree::Quadratic).unwrap();
        let s = bump_state(grid, 2, 1.0);
        let utt = spec.recover_utt(&s, None, Accuracy::Fourth, 1e6).unwrap();
        let lap = crate::grid::laplacian(&s.u, Accuracy::Fourth).unwrap();
        let len = grid.len();
        for l in 0..2 {
            let c2 = spec.speeds()[l].powi(2);
            for p in 0..len {
                let e = utt.data()[l * len + p] - c2 * lap.data()[l * len + p];
                assert!(e.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_h_term_is_square_of_time_derivative() {
        let grid = Grid::new(3, 13, 1.4).unwrap();
        let mut spec = SystemSpec::linear(3, vec![1.0], Degree::Quadratic).unwrap();
        spec.set_h(&[0, 0, 0, 0, 0], 1.0).unwrap();
        let s = bump_state(grid, 1, 1.0);
        let zero = Field::zeros(grid, 1, 0.0);
        let rhs = spec.rhs_spatial(&s, &zero, Accuracy::Fourth).unwrap();
        for (r, v) in rhs.data().iter().zip(s.v.data()) {
            assert_eq!(*r, v * v);
        }
    }

    #[test]
    fn fixed_point_of_the_pointwise_solve() {
        let grid = Grid::new(3, 13, 1.4).unwrap();
        let mut spec = SystemSpec::linear(3, vec![1.0, 1.5], Degree::Quadratic).unwrap();
        spec.set_g(&[0, 1, 1, 1, 0, 0], 0.4).unwrap();
        spec.set_g(&[1, 0, 0, 0, 1, 2], 0.3).unwrap();
        spec.set_h(&[0, 0, 1, 0, 2], 0.7).unwrap();
        let spec = spec.symmetrized();
        let s = bump_state(grid, 2, 0.2);
        let utt = spec.recover_utt(&s, None, Accuracy::Fourth, 1e6).unwrap();
        let rhs = spec.rhs_spatial(&s, &utt, Accuracy::Fourth).unwrap();
        let lap = crate::grid::laplacian(&s.u, Accuracy::Fourth).unwrap();
        let len = grid.len();
        for l in 0..2 {
            let c2 = spec.speeds()[l].powi(2);
            for p in 0..len {
                let i = l * len + p;
                let resid = utt.data()[i] - c2 * lap.data()[i] - rhs.data()[i];
                assert!(resid.abs() < 1e-12, "{resid}");
            }
        }
    }

    #[test]
    fn singular_point_matrix_is_reported() {
        let grid = Grid::new(2, 9, 1.0).unwrap();
        let mut spec = SystemSpec::linear(2, vec![1.0], Degree::Quadratic).unwrap();
        spec.set_g(&[0, 0, 0, 1, 0, 0], 1.0).unwrap();
        // ∂_1 u = 1 everywhere makes 1 - g ∂_1 u vanish
        let s = StateSnapshot::new(Field::from_fn(grid, 1, 0.0, |x, _| x[0]), Field::zeros(grid, 1, 0.0)).unwrap();
        assert!(matches!(
            spec.recover_utt(&s, None, Accuracy::Fourth, 1e6),
            Err(Error::SingularPointMatrix { point: 0, .. })
        ));
    }

    #[test]
    fn solve_small_matches_known_inverse() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let x = solve_small(&a, &[3.0, 5.0], 2, 1e6).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(solve_small(&[1.0, 1.0, 1.0, 1.0], &[0.0, 0.0], 2, 1e6).is_err());
    }

    #[test]
    fn config_uses_one_based_components() {
        let text = r#"
            dim = 3
            speeds = [1.0, 2.0]
            symmetrize = true
            [[g]]
            index = [1, 2, 1, 1, 0, 3]
            value = 0.5
            [[h]]
            index = [2, 1, 1, 0, 0]
            value = -1.0
        "#;
        let spec = SpecConfig::from_toml_str(text).unwrap().build().unwrap();
        assert_eq!(spec.degree(), Degree::Quadratic);
        assert_eq!(spec.h().get(&[1, 0, 0, 0, 0]).unwrap(), -1.0);
        assert_eq!(spec.g().get(&[0, 1, 0, 1, 0, 3]).unwrap(), 0.25);
        let bad =
            SpecConfig::from_toml_str("dim = 3\nspeeds = [1.0]\n[[g]]\nindex = [1, 1, 1, 1, 1, 0]\nvalue = 1.0\n")
                .unwrap()
                .build();
        assert!(matches!(bad, Err(Error::Config(_))));
    }
}
