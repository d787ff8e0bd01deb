use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::TimeJet;
use crate::error::Result;
use crate::grid::{Field, Grid};

/// `(1 - |A(x - x0)|²)_+^k p(A(x - x0))` with a diagonal `A` and a cubic `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub id: String,
    center: [f64; 3],
    scale: [f64; 3],
    power: i32,
    poly: Vec<([u8; 3], f64)>,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut y = [0.0; 3];
        let mut s = 1.0;
        for k in 0..x.len() {
            y[k] = (x[k] - self.center[k]) / self.scale[k];
            s -= y[k] * y[k];
        }
        if s <= 0.0 {
            return 0.0;
        }
        let p: f64 = self
            .poly
            .iter()
            .map(|(e, c)| c * y[0].powi(e[0] as i32) * y[1].powi(e[1] as i32) * y[2].powi(e[2] as i32))
            .sum();
        s.powi(self.power) * p
    }

    /// Largest `|x|` where the function can be nonzero.
    pub fn extent(&self) -> f64 {
        let c = self.center.iter().map(|v| v * v).sum::<f64>().sqrt();
        c + self.scale.iter().cloned().fold(0.0, f64::max)
    }

    pub fn sample(&self, grid: Grid, t: f64) -> Field {
        Field::from_fn(grid, 1, t, |x, _| self.eval(x))
    }

    fn random(rng: &mut ChaCha8Rng, dim: usize, index: usize) -> Self {
        let variant = index % 3;
        let mut center = [0.0; 3];
        let mut scale = [1.0; 3];
        match variant {
            0 => {
                let s = rng.gen_range(0.8..1.2);
                scale[..dim].fill(s);
            }
            1 => {
                let s = rng.gen_range(0.7..1.0);
                scale[..dim].fill(s);
                for c in center.iter_mut().take(dim) {
                    *c = rng.gen_range(-0.3..0.3);
                }
            }
            _ => {
                for k in 0..dim {
                    scale[k] = rng.gen_range(0.6..1.2);
                    center[k] = rng.gen_range(-0.2..0.2);
                }
            }
        }
        let power = rng.gen_range(4..=6);
        let mut poly = vec![([0, 0, 0], 1.0)];
        for a in 0..=3u8 {
            for b in 0..=3u8 {
                for c in 0..=3u8 {
                    let deg = a + b + c;
                    if deg == 0 || deg > 3 || (dim == 2 && c > 0) {
                        continue;
                    }
                    poly.push(([a, b, c], rng.gen_range(-1.0..1.0)));
                }
            }
        }
        let name = ["iso", "shift", "aniso"][variant];
        Self { id: format!("{name}-{index}"), center, scale, power, poly }
    }
}

/// `size` seeded test functions cycling through centred, shifted and
/// anisotropic profiles. Every member vanishes outside `|x| < 1.6`.
pub fn function_corpus(dim: usize, size: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size).map(|i| TestFunction::random(&mut rng, dim, i)).collect()
}

/// A jet `[w, w_t, w_tt]` whose levels and components are independent test
/// functions.
#[derive(Debug, Clone, PartialEq)]
pub struct JetProbe {
    pub id: String,
    /// Level-major: `parts[level * components + l]`.
    parts: Vec<TestFunction>,
    components: usize,
}

impl JetProbe {
    pub fn components(&self) -> usize {
        self.components
    }

    pub fn jet(&self, grid: Grid, t: f64) -> Result<TimeJet> {
        let levels = (0..3)
            .map(|lvl| {
                let comps: Vec<Field> =
                    (0..self.components).map(|l| self.parts[lvl * self.components + l].sample(grid, t)).collect();
                Field::stack(&comps)
            })
            .collect::<Result<Vec<_>>>()?;
        TimeJet::new(levels)
    }
}

pub fn jet_corpus(dim: usize, size: usize, components: usize, seed: u64) -> Vec<JetProbe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| {
            let parts = (0..3 * components).map(|_| TestFunction::random(&mut rng, dim, i)).collect();
            JetProbe { id: format!("jet-{i}"), parts, components }
        })
        .collect()
}
