//! Vector-field calculus: generators, operator words, their action on jets
//! of fields, and the commutator identities among them.

pub mod affine;
mod expand;
mod generator;
mod jet;
mod poly;
mod suite;
mod word;

pub use expand::{expand_mixed_commutator, expansion_residual, MixedTerm};
pub use generator::{alphabet, alphabet_index, Generator};
pub use jet::{apply_op, apply_ops, apply_word, apply_word_jet, commutator_defect, Op, Operand, TimeJet};
pub use poly::SpaceTimePolynomial;
pub use suite::{commutator_suite, write_checks, CommutatorCheck, COMMUTATOR_TOL};
pub use word::{enumerate_words, visit_words, OperatorWord};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Accuracy;

/// Least-squares coefficients of a measured bracket over the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketFit {
    pub coeffs: Vec<f64>,
    /// Largest pointwise residual of the fitted combination.
    pub residual: f64,
}

/// Measures `[x, y]` on each jet and fits it as `Σ c_i Z_i` by least squares.
pub fn fit_bracket(x: &Generator, y: &Generator, jets: &[TimeJet], acc: Accuracy) -> Result<BracketFit> {
    let first = jets.first().ok_or_else(|| Error::InsufficientData("no sample jets".into()))?;
    let dim = first.grid().dim();
    let z = alphabet(dim);
    let mut target = Vec::new();
    let mut columns = vec![Vec::new(); z.len()];
    for jet in jets {
        let d = commutator_defect(
            &Operand::Word(OperatorWord::single(*x)),
            &Operand::Word(OperatorWord::single(*y)),
            jet,
            acc,
        )?;
        target.extend_from_slice(d.data());
        for (col, g) in columns.iter_mut().zip(&z) {
            let f = apply_op(&Op::Gen(*g), jet, 1, acc)?;
            col.extend_from_slice(f.level(0).data());
        }
    }
    let m = DMatrix::from_fn(target.len(), z.len(), |r, c| columns[c][r]);
    let b = DVector::from_vec(target);
    let sol = m.clone().svd(true, true).solve(&b, 1e-12).map_err(|e| Error::InsufficientData(e.to_string()))?;
    let residual = (&m * &sol - &b).amax();
    Ok(BracketFit { coeffs: sol.iter().copied().collect(), residual })
}
