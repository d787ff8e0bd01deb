use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A first-order space-time vector field. Spatial indices are 1-based, as in
/// the text form (`d1`, `O12`, `L3`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    SpaceDeriv(usize),
    TimeDeriv,
    /// `x_i ∂_j - x_j ∂_i` with `i < j`.
    Rotation(usize, usize),
    /// `t ∂_t + x · ∇`.
    Scaling,
    /// `x_k ∂_t + t ∂_k`.
    Lorentz(usize),
    /// `c⁻¹ x_k ∂_t + c t ∂_k`.
    ScaledLorentz {
        axis: usize,
        speed: f64,
    },
}

impl Generator {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let ok = match *self {
            Generator::SpaceDeriv(k) | Generator::Lorentz(k) => (1..=dim).contains(&k),
            Generator::Rotation(i, j) => i >= 1 && i < j && j <= dim,
            Generator::ScaledLorentz { axis, speed } => (1..=dim).contains(&axis) && speed.is_finite() && speed > 0.0,
            Generator::TimeDeriv | Generator::Scaling => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::WordConstraint(format!("{self} is not valid in dimension {dim}")))
        }
    }

    pub fn is_boost(&self) -> bool {
        matches!(self, Generator::Lorentz(_) | Generator::ScaledLorentz { .. })
    }

    /// Member of the energy alphabet `{∂_x, Ω, S}`.
    pub fn in_alphabet(&self) -> bool {
        matches!(self, Generator::SpaceDeriv(_) | Generator::Rotation(..) | Generator::Scaling)
    }
}

/// The alphabet `Z_1, …, Z_μ` in canonical order: `∂_1..∂_n`, rotations in
/// lexicographic order, then `S`.
pub fn alphabet(dim: usize) -> Vec<Generator> {
    let mut z: Vec<Generator> = (1..=dim).map(Generator::SpaceDeriv).collect();
    for i in 1..=dim {
        for j in i + 1..=dim {
            z.push(Generator::Rotation(i, j));
        }
    }
    z.push(Generator::Scaling);
    z
}

/// Position of `g` in [`alphabet`], if it belongs to it.
pub fn alphabet_index(dim: usize, g: &Generator) -> Option<usize> {
    alphabet(dim).iter().position(|z| z == g)
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Generator::SpaceDeriv(k) => write!(f, "d{k}"),
            Generator::TimeDeriv => write!(f, "dt"),
            Generator::Rotation(i, j) => write!(f, "O{i}{j}"),
            Generator::Scaling => write!(f, "S"),
            Generator::Lorentz(k) => write!(f, "L{k}"),
            Generator::ScaledLorentz { axis, speed } => write!(f, "Lt{axis}@{speed}"),
        }
    }
}

fn digit(s: &str, token: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(v) if s.len() == 1 && v >= 1 => Ok(v),
        _ => Err(Error::WordParse(format!("bad index in '{token}'"))),
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        if token == "dt" {
            return Ok(Generator::TimeDeriv);
        }
        if token == "S" {
            return Ok(Generator::Scaling);
        }
        if let Some(rest) = token.strip_prefix("Lt") {
            let (axis, speed) =
                rest.split_once('@').ok_or_else(|| Error::WordParse(format!("'{token}' needs a speed after '@'")))?;
            let speed: f64 = speed.parse().map_err(|_| Error::WordParse(format!("bad speed in '{token}'")))?;
            if !(speed.is_finite() && speed > 0.0) {
                return Err(Error::WordParse(format!("speed in '{token}' must be positive")));
            }
            return Ok(Generator::ScaledLorentz { axis: digit(axis, token)?, speed });
        }
        if let Some(rest) = token.strip_prefix('d') {
            return Ok(Generator::SpaceDeriv(digit(rest, token)?));
        }
        if let Some(rest) = token.strip_prefix('L') {
            return Ok(Generator::Lorentz(digit(rest, token)?));
        }
        if let Some(rest) = token.strip_prefix('O') {
            if rest.len() == 2 {
                let i = digit(&rest[..1], token)?;
                let j = digit(&rest[1..], token)?;
                if i < j {
                    return Ok(Generator::Rotation(i, j));
                }
            }
            return Err(Error::WordParse(format!("rotation '{token}' needs indices i < j")));
        }
        Err(Error::WordParse(format!("unknown generator '{token}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_sizes() {
        assert_eq!(alphabet(2).len(), 4);
        assert_eq!(alphabet(3).len(), 7);
        assert_eq!(alphabet(3)[5], Generator::Rotation(2, 3));
        assert_eq!(alphabet_index(3, &Generator::Scaling), Some(6));
        assert_eq!(alphabet_index(3, &Generator::TimeDeriv), None);
    }

    #[test]
    fn text_round_trip() {
        for s in ["d1", "d3", "dt", "O12", "O23", "S", "L2", "Lt1@2", "Lt3@0.75"] {
            let g: Generator = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        for bad in ["d0", "O21", "Lt1", "Lt1@-1", "x", "d12"] {
            assert!(bad.parse::<Generator>().is_err(), "{bad}");
        }
    }

    #[test]
    fn validation_respects_dimension() {
        assert!(Generator::Rotation(1, 3).validate(2).is_err());
        assert!(Generator::Rotation(1, 3).validate(3).is_ok());
        assert!(Generator::SpaceDeriv(3).validate(2).is_err());
    }
}
