use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, StateSnapshot};

/// Profiles for `u(0) = ε f`, `∂_t u(0) = ε g`, all supported in `|x| ≤ r0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DataFamily {
    RadialBump,
    PolynomialBump,
    RandomBump { seed: u64 },
}

const BUMP_POWER: i32 = 8;

fn bump(x: &[f64], r0: f64) -> f64 {
    let s = 1.0 - x.iter().map(|v| v * v).sum::<f64>() / (r0 * r0);
    if s > 0.0 {
        s.powi(BUMP_POWER)
    } else {
        0.0
    }
}

/// Cubic polynomial in `x / r0` with coefficients in `[-0.5, 0.5]` on top of 1.
#[derive(Debug, Clone)]
struct Cubic {
    terms: Vec<([u8; 3], f64)>,
}

impl Cubic {
    fn random(rng: &mut ChaCha8Rng, dim: usize) -> Self {
        let mut terms = vec![([0, 0, 0], 1.0)];
        for a in 0..=3u8 {
            for b in 0..=3u8 {
                for c in 0..=3u8 {
                    let deg = a + b + c;
                    if deg == 0 || deg > 3 || (dim == 2 && c > 0) {
                        continue;
                    }
                    terms.push(([a, b, c], rng.gen_range(-0.5..0.5)));
                }
            }
        }
        Self { terms }
    }

    fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = *c;
                for (k, yk) in y.iter().enumerate() {
                    v *= yk.powi(e[k] as i32);
                }
                v
            })
            .sum()
    }
}

/// Builds the data snapshot at `t = 0`. Fields are exactly linear in `ε`.
pub fn make_initial_data(
    family: &DataFamily,
    epsilon: f64,
    r0: f64,
    grid: Grid,
    components: usize,
) -> Result<StateSnapshot> {
    let limit = grid.half_width() - 4.0 * grid.spacing();
    if !(r0 > 0.0) || r0 > limit {
        return Err(Error::SupportExceedsGrid { support: r0, limit });
    }
    let dim = grid.dim();
    let (f, g): (Vec<Cubic>, Vec<Cubic>) = match family {
        DataFamily::RadialBump => {
            let one = Cubic { terms: vec![([0, 0, 0], 1.0)] };
            let half = Cubic { terms: vec![([0, 0, 0], 0.5)] };
            (vec![one; components], vec![half; components])
        }
        DataFamily::PolynomialBump => {
            let f = Cubic { terms: vec![([0, 0, 0], 1.0), ([1, 0, 0], 0.5), ([0, 1, 0], -0.25), ([1, 1, 0], 0.3)] };
            let g = Cubic { terms: vec![([0, 0, 0], 0.5), ([0, 1, 0], 0.25), ([2, 0, 0], -0.2)] };
            (vec![f; components], vec![g; components])
        }
        DataFamily::RandomBump { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..components).map(|_| (Cubic::random(&mut rng, dim), Cubic::random(&mut rng, dim))).unzip()
        }
    };
    let profile = |p: &Vec<Cubic>, scale: f64| {
        Field::from_fn(grid, components, 0.0, |x, c| {
            let y: Vec<f64> = x.iter().map(|v| v / r0).collect();
            let b = bump(x, r0);
            if b == 0.0 {
                0.0
            } else {
                epsilon * scale * p[c].eval(&y) * b / (c + 1) as f64
            }
        })
    };
    StateSnapshot::new(profile(&f, 1.0), profile(&g, 1.0))
}
