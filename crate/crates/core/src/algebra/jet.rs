use rayon::prelude::*;

use super::{Generator, OperatorWord};
use crate::error::{Error, Result};
use crate::grid::{laplacian, partial_derivative, Accuracy, Field, Grid, StateSnapshot, CHUNK};

/// `[w, ∂_t w, ∂_t² w, …]` at one time. Generators act level by level, so a
/// jet is all that is needed to apply time derivatives, `S` and boosts.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeJet {
    levels: Vec<Field>,
}

impl TimeJet {
    pub fn new(levels: Vec<Field>) -> Result<Self> {
        let first = levels.first().ok_or_else(|| Error::ShapeMismatch("a jet needs at least one level".into()))?;
        for l in &levels[1..] {
            first.check_same_shape(l)?;
            if l.time() != first.time() {
                return Err(Error::ShapeMismatch("jet levels at different times".into()));
            }
        }
        Ok(Self { levels })
    }

    /// `[u, v]`, or `[u, v, utt]` when `utt` is given.
    pub fn from_snapshot(s: &StateSnapshot, utt: Option<&Field>) -> Result<Self> {
        let mut levels = vec![s.u.clone(), s.v.clone()];
        if let Some(w) = utt {
            levels.push(w.clone().with_time(s.time()));
        }
        Self::new(levels)
    }

    pub fn levels(&self) -> &[Field] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> &Field {
        &self.levels[j]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.levels[0].time()
    }

    pub fn grid(&self) -> &Grid {
        self.levels[0].grid()
    }

    pub fn into_levels(self) -> Vec<Field> {
        self.levels
    }

    pub fn truncated(mut self, n: usize) -> Self {
        self.levels.truncate(n.max(1));
        self
    }
}

/// Anything that acts on jets: a generator or a d'Alembertian `∂_t² - c²Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Gen(Generator),
    Box(f64),
}

/// Extra jet levels `op` consumes.
fn shift(op: &Op, t: f64) -> usize {
    match op {
        Op::Gen(Generator::SpaceDeriv(_) | Generator::Rotation(..)) => 0,
        Op::Gen(Generator::Scaling) => usize::from(t != 0.0),
        Op::Gen(_) => 1,
        Op::Box(_) => 2,
    }
}

/// `out += scale * x_axis * src`, `axis` 0-based.
fn add_coordinate_times(out: &mut [f64], src: &[f64], grid: &Grid, axis: usize, scale: f64) {
    let stride = grid.stride(axis);
    let m = grid.points();
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, dst)| {
        let start = c * CHUNK;
        for (k, d) in dst.iter_mut().enumerate() {
            let idx = start + k;
            let x = grid.coordinate((idx / stride) % m);
            *d += scale * x * src[idx];
        }
    });
}

fn euler_part(w: &Field, acc: Accuracy) -> Result<Field> {
    let grid = *w.grid();
    let mut out = Field::zeros(grid, w.components(), w.time());
    for k in 0..grid.dim() {
        let d = partial_derivative(w, k, acc)?;
        add_coordinate_times(out.data_mut(), d.data(), &grid, k, 1.0);
    }
    Ok(out)
}

fn level(op: &Op, jet: &TimeJet, j: usize, acc: Accuracy) -> Result<Field> {
    let w = &jet.levels;
    let t = jet.time();
    let grid = *jet.grid();
    let zero = || Field::zeros(grid, w[0].components(), t);
    Ok(match *op {
        Op::Gen(Generator::SpaceDeriv(k)) => partial_derivative(&w[j], k - 1, acc)?,
        Op::Gen(Generator::TimeDeriv) => w[j + 1].clone(),
        Op::Gen(Generator::Rotation(a, b)) => {
            let mut out = zero();
            let db = partial_derivative(&w[j], b - 1, acc)?;
            add_coordinate_times(out.data_mut(), db.data(), &grid, a - 1, 1.0);
            let da = partial_derivative(&w[j], a - 1, acc)?;
            add_coordinate_times(out.data_mut(), da.data(), &grid, b - 1, -1.0);
            out
        }
        Op::Gen(Generator::Scaling) => {
            let mut out = euler_part(&w[j], acc)?;
            if j > 0 {
                out.axpy(j as f64, &w[j])?;
            }
            if t != 0.0 {
                out.axpy(t, &w[j + 1])?;
            }
            out
        }
        Op::Gen(Generator::Lorentz(k)) => boost(w, j, k, 1.0, t, acc)?,
        Op::Gen(Generator::ScaledLorentz { axis, speed }) => boost(w, j, axis, speed, t, acc)?,
        Op::Box(c) => {
            let mut out = w[j + 2].clone();
            out.axpy(-c * c, &laplacian(&w[j], acc)?)?;
            out
        }
    })
}

/// Level `j` of `c⁻¹ x_k ∂_t w + c t ∂_k w`.
fn boost(w: &[Field], j: usize, k: usize, c: f64, t: f64, acc: Accuracy) -> Result<Field> {
    let grid = *w[0].grid();
    let mut out = Field::zeros(grid, w[0].components(), t);
    add_coordinate_times(out.data_mut(), w[j + 1].data(), &grid, k - 1, 1.0 / c);
    if t != 0.0 {
        out.axpy(c * t, &partial_derivative(&w[j], k - 1, acc)?)?;
    }
    if j > 0 {
        out.axpy(j as f64 * c, &partial_derivative(&w[j - 1], k - 1, acc)?)?;
    }
    Ok(out)
}

/// Applies `op` and keeps the lowest `out_levels` levels of the result.
pub fn apply_op(op: &Op, jet: &TimeJet, out_levels: usize, acc: Accuracy) -> Result<TimeJet> {
    if let Op::Gen(g) = op {
        g.validate(jet.grid().dim())?;
    }
    let needed = out_levels + shift(op, jet.time());
    if jet.len() < needed {
        return Err(Error::MissingTimeDerivative { needed: needed - 1, available: jet.len() - 1 });
    }
    let levels = (0..out_levels).map(|j| level(op, jet, j, acc)).collect::<Result<Vec<_>>>()?;
    TimeJet::new(levels)
}

/// Applies `ops[0] ∘ ops[1] ∘ ⋯` (rightmost first), computing only the levels
/// that the final `out_levels` depend on.
pub fn apply_ops(ops: &[Op], jet: &TimeJet, out_levels: usize, acc: Accuracy) -> Result<TimeJet> {
    let t = jet.time();
    let mut needs = Vec::with_capacity(ops.len() + 1);
    needs.push(out_levels);
    for op in ops {
        needs.push(needs.last().unwrap() + shift(op, t));
    }
    let total = *needs.last().unwrap();
    if jet.len() < total {
        return Err(Error::MissingTimeDerivative { needed: total - 1, available: jet.len() - 1 });
    }
    let mut cur = jet.clone().truncated(total);
    for (i, op) in ops.iter().enumerate().rev() {
        cur = apply_op(op, &cur, needs[i], acc)?;
    }
    Ok(cur)
}

fn word_ops(word: &OperatorWord) -> Vec<Op> {
    word.generators().iter().map(|g| Op::Gen(*g)).collect()
}

pub fn apply_word_jet(word: &OperatorWord, jet: &TimeJet, out_levels: usize, acc: Accuracy) -> Result<TimeJet> {
    apply_ops(&word_ops(word), jet, out_levels, acc)
}

/// `Z u` for the snapshot's `u`; `utt` is required only when the word needs
/// a second time derivative (for instance `S` at `t ≠ 0`).
pub fn apply_word(word: &OperatorWord, s: &StateSnapshot, utt: Option<&Field>, acc: Accuracy) -> Result<Field> {
    let jet = TimeJet::from_snapshot(s, utt)?;
    Ok(apply_word_jet(word, &jet, 1, acc)?.into_levels().swap_remove(0))
}

/// Left or right operand of a commutator.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Word(OperatorWord),
    Dalembertian(f64),
}

impl Operand {
    fn ops(&self) -> Vec<Op> {
        match self {
            Operand::Word(w) => word_ops(w),
            Operand::Dalembertian(c) => vec![Op::Box(*c)],
        }
    }
}

/// `A(B w) - B(A w)` at level 0.
pub fn commutator_defect(a: &Operand, b: &Operand, jet: &TimeJet, acc: Accuracy) -> Result<Field> {
    let (oa, ob) = (a.ops(), b.ops());
    let ab: Vec<Op> = oa.iter().chain(&ob).copied().collect();
    let ba: Vec<Op> = ob.iter().chain(&oa).copied().collect();
    let x = apply_ops(&ab, jet, 1, acc)?;
    let y = apply_ops(&ba, jet, 1, acc)?;
    x.level(0).sub(y.level(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(grid: Grid, t: f64, u: impl Fn(&[f64]) -> f64 + Sync, v: impl Fn(&[f64]) -> f64 + Sync) -> StateSnapshot {
        StateSnapshot::new(Field::from_fn(grid, 1, t, |x, _| u(x)), Field::from_fn(grid, 1, t, |x, _| v(x))).unwrap()
    }

    #[test]
    fn scaling_at_time_zero_is_euler_operator() {
        let g = Grid::new(2, 9, 1.0).unwrap();
        let s = snap(g, 0.0, |x| x[0] * x[0] * x[1], |x| 5.0 + x[0]);
        let su = apply_word(&"S".parse().unwrap(), &s, None, Accuracy::Fourth).unwrap();
        let exact = Field::from_fn(g, 1, 0.0, |x, _| 3.0 * x[0] * x[0] * x[1]);
        assert!(su.sub(&exact).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn scaling_later_needs_utt() {
        let g = Grid::new(2, 9, 1.0).unwrap();
        let s = snap(g, 0.5, |x| x[0], |_| 0.0);
        let w: OperatorWord = "dt S".parse().unwrap();
        assert!(matches!(apply_word(&w, &s, None, Accuracy::Fourth), Err(Error::MissingTimeDerivative { .. })));
        let utt = Field::zeros(g, 1, 0.5);
        assert!(apply_word(&"S".parse().unwrap(), &s, Some(&utt), Accuracy::Fourth).is_ok());
    }

    #[test]
    fn rotation_kills_radial_functions() {
        let g = Grid::new(2, 801, 1.2).unwrap();
        let bump = |x: &[f64]| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 < 1.0 {
                (1.0 - r2).powi(8)
            } else {
                0.0
            }
        };
        let s = snap(g, 0.0, bump, |_| 0.0);
        let w = apply_word(&"O12".parse().unwrap(), &s, None, Accuracy::Fourth).unwrap();
        assert!(w.max_abs() < 1e-8, "{}", w.max_abs());
    }
}
