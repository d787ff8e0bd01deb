//! Exact space-time polynomials. Generators act on them symbolically, which
//! gives a discretisation-free reference for the grid operators: stencils of
//! order `p` reproduce derivatives of total degree `≤ p` exactly.

use std::collections::BTreeMap;

use rand::Rng;

use super::jet::TimeJet;
use super::Generator;
use crate::error::Result;
use crate::grid::{Field, Grid};

/// Exponents of `(t, x_1, x_2, x_3)`.
type Monomial = [u32; 4];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpaceTimePolynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl SpaceTimePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(coeff: f64, exps: [u32; 4]) -> Self {
        let mut p = Self::zero();
        p.add_term(exps, coeff);
        p
    }

    /// Random polynomial of total degree at most `degree` in `t, x_1..x_dim`:
    /// each monomial `t^a x^e` gets a coefficient drawn from `[-1, 1]` times
    /// `length^{-|e|}`, so values stay of order one for `|x| ≤ length`.
    pub fn random<R: Rng>(rng: &mut R, dim: usize, degree: u32, length: f64) -> Self {
        let mut p = Self::zero();
        let max = |k: usize| if k <= dim { degree } else { 0 };
        for a in 0..=degree {
            for b in 0..=max(1) {
                for c in 0..=max(2) {
                    for d in 0..=max(3) {
                        if a + b + c + d <= degree {
                            let scale = length.powi(-((b + c + d) as i32));
                            p.add_term([a, b, c, d], scale * rng.gen_range(-1.0..1.0));
                        }
                    }
                }
            }
        }
        p
    }

    fn add_term(&mut self, e: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(e).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = c * t.powi(e[0] as i32);
                for (k, xk) in x.iter().enumerate() {
                    v *= xk.powi(e[k + 1] as i32);
                }
                v
            })
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(1.0, other)
    }

    /// `self + s * other`.
    pub fn combine(&self, s: f64, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, s * c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::zero().combine(s, self)
    }

    /// `∂_μ`, with `μ = 0` the time variable.
    pub fn partial(&self, mu: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[mu] > 0 {
                let mut f = *e;
                f[mu] -= 1;
                out.add_term(f, c * e[mu] as f64);
            }
        }
        out
    }

    /// Multiplication by the coordinate `y_μ` (`y_0 = t`).
    pub fn times(&self, mu: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let mut f = *e;
            f[mu] += 1;
            out.add_term(f, *c);
        }
        out
    }

    pub fn apply(&self, g: &Generator, dim: usize) -> Self {
        match *g {
            Generator::SpaceDeriv(k) => self.partial(k),
            Generator::TimeDeriv => self.partial(0),
            Generator::Rotation(i, j) => self.partial(j).times(i).combine(-1.0, &self.partial(i).times(j)),
            Generator::Scaling => (0..=dim).fold(Self::zero(), |acc, m| acc.add(&self.partial(m).times(m))),
            Generator::Lorentz(k) => self.partial(0).times(k).add(&self.partial(k).times(0)),
            Generator::ScaledLorentz { axis, speed } => {
                self.partial(0).times(axis).scale(1.0 / speed).combine(speed, &self.partial(axis).times(0))
            }
        }
    }

    pub fn apply_word(&self, word: &[Generator], dim: usize) -> Self {
        word.iter().rev().fold(self.clone(), |p, g| p.apply(g, dim))
    }

    pub fn laplacian(&self, dim: usize) -> Self {
        (1..=dim).fold(Self::zero(), |acc, k| acc.add(&self.partial(k).partial(k)))
    }

    /// `∂_t² - c²Δ`.
    pub fn dalembertian(&self, c: f64, dim: usize) -> Self {
        self.partial(0).partial(0).combine(-c * c, &self.laplacian(dim))
    }

    /// Samples at time `t` on every node.
    pub fn sample(&self, grid: &Grid, t: f64) -> Field {
        Field::from_fn(*grid, 1, t, |x, _| self.eval(t, x))
    }

    /// `[p, ∂_t p, …]` with `levels` entries at time `t`.
    pub fn jet(&self, grid: &Grid, t: f64, levels: usize) -> Result<TimeJet> {
        let mut fields = Vec::with_capacity(levels);
        let mut p = self.clone();
        for _ in 0..levels {
            fields.push(p.sample(grid, t));
            p = p.partial(0);
        }
        TimeJet::new(fields)
    }
}
