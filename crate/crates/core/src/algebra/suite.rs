use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::affine::structure_constants;
use super::{
    alphabet, apply_op, apply_word_jet, commutator_defect, enumerate_words, expand_mixed_commutator,
    expansion_residual, fit_bracket, Generator, Op, Operand, OperatorWord, SpaceTimePolynomial, TimeJet,
};
use crate::error::Result;
use crate::grid::{laplacian, Accuracy, Grid};

/// Pass threshold for every identity in the suite.
pub const COMMUTATOR_TOL: f64 = 1e-9;

/// Worst residual of one family of identities.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorCheck {
    pub check: &'static str,
    pub worst_case: String,
    pub residual: f64,
    pub cases: usize,
}

impl CommutatorCheck {
    pub const HEADER: &'static str = "check,worst_case,residual,cases,pass";

    pub fn passes(&self) -> bool {
        self.residual < COMMUTATOR_TOL
    }

    fn new(check: &'static str) -> Self {
        Self { check, worst_case: String::new(), residual: 0.0, cases: 0 }
    }

    fn record(&mut self, case: impl FnOnce() -> String, residual: f64) {
        self.cases += 1;
        if residual > self.residual || self.worst_case.is_empty() || residual.is_nan() {
            self.residual = if residual.is_nan() { f64::INFINITY } else { residual };
            self.worst_case = case();
        }
    }
}

pub fn write_checks<W: Write>(mut w: W, checks: &[CommutatorCheck]) -> std::io::Result<()> {
    writeln!(w, "{}", CommutatorCheck::HEADER)?;
    for c in checks {
        writeln!(w, "{},{},{:e},{},{}", c.check, c.worst_case, c.residual, c.cases, c.passes())?;
    }
    Ok(())
}

fn polynomial_jets(dim: usize, count: usize, t: f64, rng: &mut ChaCha8Rng) -> Result<(Grid, Vec<TimeJet>)> {
    let grid = Grid::new(dim, 9, 4.0)?;
    let jets =
        (0..count).map(|_| SpaceTimePolynomial::random(rng, dim, 4, 4.0).jet(&grid, t, 7)).collect::<Result<_>>()?;
    Ok((grid, jets))
}

/// Runs the commutator identities on random degree-4 polynomial jets, where
/// fourth-order stencils are exact: alphabet brackets against the structure
/// constants, `[□_c, Z^a]`, the third-order mixed expansions, and the
/// commutators of rotations, scaling and scaled boosts with `□`.
pub fn commutator_suite(dim: usize, seed: u64, acc: Accuracy) -> Result<Vec<CommutatorCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let (_, jets) = polynomial_jets(dim, 3, 0.4, &mut rng)?;
    let mut brackets = CommutatorCheck::new("bracket");
    let z = alphabet(dim);
    for x in &z {
        for y in &z {
            let fit = fit_bracket(x, y, &jets, acc)?;
            let exact = structure_constants(x, y, dim);
            let coeff_err =
                fit.coeffs.iter().zip(&exact[1..]).map(|(a, b)| (a - b).abs()).fold(exact[0].abs(), f64::max);
            brackets.record(|| format!("[{x} {y}]"), fit.residual.max(coeff_err));
        }
    }
    out.push(brackets);

    let c = 1.7;
    let (_, jets) = polynomial_jets(dim, 2, 0.9, &mut rng)?;
    let mut boxes = CommutatorCheck::new("dalembertian");
    for w in enumerate_words(dim, 4) {
        for j in &jets {
            let defect = commutator_defect(&Operand::Dalembertian(c), &Operand::Word(w.clone()), j, acc)?;
            let expected = match w.s_count() {
                0 => None,
                _ => {
                    let inner = w.without_scaling();
                    let mut tt = inner.clone();
                    tt.0.splice(0..0, [Generator::TimeDeriv, Generator::TimeDeriv]);
                    let mut e = apply_word_jet(&tt, j, 1, acc)?.level(0).clone();
                    let lap = laplacian(apply_word_jet(&inner, j, 1, acc)?.level(0), acc)?;
                    e.axpy(-c * c, &lap)?;
                    Some(e.scaled(2.0))
                }
            };
            let err = match expected {
                Some(e) => defect.sub(&e)?.max_abs(),
                None => defect.max_abs(),
            };
            boxes.record(|| w.to_string(), err);
        }
    }
    out.push(boxes);

    let (_, jets) = polynomial_jets(dim, 2, 0.8, &mut rng)?;
    let mut mixed = CommutatorCheck::new("mixed_expansion");
    for w in enumerate_words(dim, 4).into_iter().filter(|w| w.order() == 3) {
        for b in 0..=dim {
            for g in 0..=dim {
                let terms = expand_mixed_commutator(dim, &w, b, g)?;
                for j in &jets {
                    let r = expansion_residual(&w, b, g, &terms, j, acc)?;
                    mixed.record(|| format!("{w} ({b} {g})"), r);
                }
            }
        }
    }
    out.push(mixed);

    let (_, jets) = polynomial_jets(dim, 2, 0.6, &mut rng)?;
    let mut wave = CommutatorCheck::new("rotation_scaling");
    let mut gens = vec![(Generator::Scaling, -2.0)];
    for i in 1..=dim {
        for k in i + 1..=dim {
            gens.push((Generator::Rotation(i, k), 0.0));
        }
    }
    for j in &jets {
        for (g, factor) in &gens {
            let d = commutator_defect(&Operand::Word(OperatorWord::single(*g)), &Operand::Dalembertian(0.8), j, acc)?;
            let rhs = apply_op(&Op::Box(0.8), j, 1, acc)?.level(0).scaled(*factor);
            wave.record(|| g.to_string(), d.sub(&rhs)?.max_abs());
        }
    }
    out.push(wave);

    // [L̃_k(c), □_ĉ] = 2 c⁻¹ (ĉ² - c²) ∂_k ∂_t
    let (_, jets) = polynomial_jets(dim, 2, 1.3, &mut rng)?;
    let mut boost = CommutatorCheck::new("scaled_boost");
    for j in &jets {
        for k in 1..=dim {
            for (c, c_hat) in [(1.0, 2.0), (0.7, 0.7), (1.5, 0.5)] {
                let g = Generator::ScaledLorentz { axis: k, speed: c };
                let d =
                    commutator_defect(&Operand::Word(OperatorWord::single(g)), &Operand::Dalembertian(c_hat), j, acc)?;
                let ops = [Op::Gen(Generator::SpaceDeriv(k)), Op::Gen(Generator::TimeDeriv)];
                let rhs = super::apply_ops(&ops, j, 1, acc)?.level(0).scaled(2.0 / c * (c_hat * c_hat - c * c));
                boost.record(|| format!("{g} c^={c_hat}"), d.sub(&rhs)?.max_abs());
            }
        }
    }
    out.push(boost);
    Ok(out)
}
