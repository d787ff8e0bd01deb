//! Every generator is an affine vector field on space-time `y = (t, x)`:
//! the coefficient of `∂_μ` is `b_μ + Σ_ν A[μ][ν] y_ν`. Brackets of affine
//! fields are affine, which gives exact structure constants.

use nalgebra::{DMatrix, DVector};

use super::Generator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineField {
    pub size: usize,
    pub b: [f64; 4],
    pub a: [[f64; 4]; 4],
}

impl AffineField {
    pub fn zero(dim: usize) -> Self {
        Self { size: dim + 1, b: [0.0; 4], a: [[0.0; 4]; 4] }
    }

    pub fn of(g: &Generator, dim: usize) -> Self {
        let mut f = Self::zero(dim);
        match *g {
            Generator::SpaceDeriv(k) => f.b[k] = 1.0,
            Generator::TimeDeriv => f.b[0] = 1.0,
            Generator::Rotation(i, j) => {
                f.a[j][i] = 1.0;
                f.a[i][j] = -1.0;
            }
            Generator::Scaling => (0..=dim).for_each(|m| f.a[m][m] = 1.0),
            Generator::Lorentz(k) => {
                f.a[0][k] = 1.0;
                f.a[k][0] = 1.0;
            }
            Generator::ScaledLorentz { axis, speed } => {
                f.a[0][axis] = 1.0 / speed;
                f.a[axis][0] = speed;
            }
        }
        f
    }

    /// `[X, Y] = XY - YX`.
    pub fn bracket(&self, other: &Self) -> Self {
        let n = self.size;
        let mut out = Self { size: n, b: [0.0; 4], a: [[0.0; 4]; 4] };
        for mu in 0..n {
            let mut bm = 0.0;
            for nu in 0..n {
                bm += other.a[mu][nu] * self.b[nu] - self.a[mu][nu] * other.b[nu];
                let mut s = 0.0;
                for k in 0..n {
                    s += other.a[mu][k] * self.a[k][nu] - self.a[mu][k] * other.a[k][nu];
                }
                out.a[mu][nu] = s;
            }
            out.b[mu] = bm;
        }
        out
    }

    fn flatten(&self) -> Vec<f64> {
        let n = self.size;
        let mut v = self.b[..n].to_vec();
        for row in &self.a[..n] {
            v.extend_from_slice(&row[..n]);
        }
        v
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.flatten().iter().all(|v| v.abs() <= tol)
    }
}

/// Writes `field` as a combination of `basis`; `None` if it lies outside
/// their span (residual above `1e-12`).
pub fn decompose(field: &AffineField, basis: &[Generator], dim: usize) -> Option<Vec<f64>> {
    let target = DVector::from_vec(field.flatten());
    let rows = target.len();
    let cols: Vec<Vec<f64>> = basis.iter().map(|g| AffineField::of(g, dim).flatten()).collect();
    let m = DMatrix::from_fn(rows, basis.len(), |r, c| cols[c][r]);
    let coeffs = m.clone().svd(true, true).solve(&target, 1e-12).ok()?;
    let residual = (&m * &coeffs - &target).amax();
    if residual > 1e-12 {
        return None;
    }
    Some(coeffs.iter().map(|&c| if c.abs() < 1e-14 { 0.0 } else { c }).collect())
}

/// Generators in the order used for normal ordering: `∂_t, ∂_1..∂_n`,
/// rotations, `S`.
pub fn extended_alphabet(dim: usize) -> Vec<Generator> {
    let mut v = vec![Generator::TimeDeriv];
    v.extend(super::alphabet(dim));
    v
}

/// Coefficients of `[X, Y]` over [`extended_alphabet`]. Panics if the bracket
/// leaves the span, which cannot happen for members of that alphabet.
pub fn structure_constants(x: &Generator, y: &Generator, dim: usize) -> Vec<f64> {
    let bracket = AffineField::of(x, dim).bracket(&AffineField::of(y, dim));
    decompose(&bracket, &extended_alphabet(dim), dim).expect("extended alphabet is closed under brackets")
}

#[cfg(test)]
mod tests {
    use super::*;
    use Generator::*;

    fn coeff(x: Generator, y: Generator, dim: usize, target: Generator) -> f64 {
        let basis = extended_alphabet(dim);
        let idx = basis.iter().position(|g| *g == target).unwrap();
        structure_constants(&x, &y, dim)[idx]
    }

    #[test]
    fn scaling_against_derivatives() {
        // [S, ∂_t] = -∂_t and [∂_k, S] = ∂_k
        assert_eq!(coeff(Scaling, TimeDeriv, 3, TimeDeriv), -1.0);
        assert_eq!(coeff(SpaceDeriv(2), Scaling, 3, SpaceDeriv(2)), 1.0);
    }

    #[test]
    fn rotation_brackets() {
        // [∂_1, Ω_12] = ∂_2, [Ω_12, Ω_23] = Ω_13 up to sign conventions checked by hand
        assert_eq!(coeff(SpaceDeriv(1), Rotation(1, 2), 2, SpaceDeriv(2)), 1.0);
        assert_eq!(coeff(SpaceDeriv(2), Rotation(1, 2), 2, SpaceDeriv(1)), -1.0);
        let c = structure_constants(&Rotation(1, 2), &Rotation(2, 3), 3);
        let nonzero: Vec<_> = c.iter().filter(|v| **v != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(coeff(Rotation(1, 2), Rotation(2, 3), 3, Rotation(1, 3)).abs(), 1.0);
        assert!(AffineField::of(&Rotation(1, 2), 3).bracket(&AffineField::of(&Scaling, 3)).is_zero(0.0));
    }

    #[test]
    fn boosts_are_outside_the_alphabet_span() {
        let f = AffineField::of(&Lorentz(1), 2);
        assert!(decompose(&f, &extended_alphabet(2), 2).is_none());
    }
}
