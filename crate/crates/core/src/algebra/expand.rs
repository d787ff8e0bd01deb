//! Symbolic normal ordering of products of generators, used to write
//! `[Z^a, ∂_β ∂_γ]` as `Σ C ∂_α ∂_δ Z^b`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::affine::{extended_alphabet, structure_constants};
use super::jet::{apply_ops, commutator_defect, Op, Operand, TimeJet};
use super::{Generator, OperatorWord};
use crate::error::{Error, Result};
use crate::grid::Accuracy;

/// One term `coeff · ∂_alpha ∂_delta Z^b`; greek indices run over `0..=n`
/// with `0` the time derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedTerm {
    pub coeff: f64,
    pub alpha: usize,
    pub delta: usize,
    pub word: OperatorWord,
}

type Expr = BTreeMap<Vec<usize>, f64>;

struct Orderer {
    letters: Vec<Generator>,
    table: Vec<Vec<Vec<(usize, f64)>>>,
}

impl Orderer {
    fn new(dim: usize) -> Self {
        let letters = extended_alphabet(dim);
        let table = letters
            .iter()
            .map(|x| {
                letters
                    .iter()
                    .map(|y| {
                        structure_constants(x, y, dim).into_iter().enumerate().filter(|(_, c)| *c != 0.0).collect()
                    })
                    .collect()
            })
            .collect();
        Self { letters, table }
    }

    fn index(&self, g: &Generator) -> Result<usize> {
        self.letters
            .iter()
            .position(|l| l == g)
            .ok_or_else(|| Error::WordConstraint(format!("{g} cannot be normal ordered")))
    }

    /// Rewrites every word with letters in non-decreasing alphabet order,
    /// using `XY = YX + [X, Y]`.
    fn normal_order(&self, mut pending: Expr) -> Expr {
        let mut done = Expr::new();
        while let Some((word, c)) = pending.pop_first() {
            if c.abs() < 1e-14 {
                continue;
            }
            match word.windows(2).position(|p| p[0] > p[1]) {
                None => *done.entry(word).or_insert(0.0) += c,
                Some(i) => {
                    let (x, y) = (word[i], word[i + 1]);
                    let mut swapped = word.clone();
                    swapped.swap(i, i + 1);
                    *pending.entry(swapped).or_insert(0.0) += c;
                    for &(k, s) in &self.table[x][y] {
                        let mut shorter = word[..i].to_vec();
                        shorter.push(k);
                        shorter.extend_from_slice(&word[i + 2..]);
                        *pending.entry(shorter).or_insert(0.0) += c * s;
                    }
                }
            }
        }
        done.retain(|_, c| c.abs() > 1e-12);
        done
    }
}

fn greek(mu: usize) -> Generator {
    if mu == 0 {
        Generator::TimeDeriv
    } else {
        Generator::SpaceDeriv(mu)
    }
}

/// `[W, ∂_β ∂_γ]` for a third-order energy word `W` (taken literally, not
/// reordered), as a list of `C ∂_α ∂_δ Z^b` with canonical `Z^b`.
pub fn expand_mixed_commutator(dim: usize, word: &OperatorWord, beta: usize, gamma: usize) -> Result<Vec<MixedTerm>> {
    if word.order() != 3 {
        return Err(Error::WordConstraint(format!("expansion needs a word of order 3, got '{word}'")));
    }
    word.check_energy_word(dim)?;
    if beta > dim || gamma > dim {
        return Err(Error::WordConstraint(format!("indices {beta}, {gamma} exceed {dim}")));
    }
    let ord = Orderer::new(dim);
    let w: Vec<usize> = word.generators().iter().map(|g| ord.index(g)).collect::<Result<_>>()?;
    let (b, g) = (ord.index(&greek(beta))?, ord.index(&greek(gamma))?);
    let mut expr = Expr::new();
    let mut left = w.clone();
    left.extend([b, g]);
    *expr.entry(left).or_insert(0.0) += 1.0;
    let mut right = vec![b, g];
    right.extend(&w);
    *expr.entry(right).or_insert(0.0) -= 1.0;

    let derivs = dim + 1;
    let mut terms = Vec::new();
    for (letters, coeff) in ord.normal_order(expr) {
        if letters.len() < 2 || letters[1] >= derivs {
            return Err(Error::WordConstraint(format!("term without two derivatives in the expansion of '{word}'")));
        }
        let rest = OperatorWord(letters[2..].iter().map(|&i| ord.letters[i]).collect());
        terms.push(MixedTerm { coeff, alpha: letters[0], delta: letters[1], word: rest });
    }
    Ok(terms)
}

/// Largest pointwise gap between `[W, ∂_β ∂_γ] w` and the expansion applied
/// to `w`.
pub fn expansion_residual(
    word: &OperatorWord,
    beta: usize,
    gamma: usize,
    terms: &[MixedTerm],
    jet: &TimeJet,
    acc: Accuracy,
) -> Result<f64> {
    let pair = OperatorWord(vec![greek(beta), greek(gamma)]);
    let mut lhs = commutator_defect(&Operand::Word(word.clone()), &Operand::Word(pair), jet, acc)?;
    for t in terms {
        let mut ops = vec![Op::Gen(greek(t.alpha)), Op::Gen(greek(t.delta))];
        ops.extend(t.word.generators().iter().map(|g| Op::Gen(*g)));
        let term = apply_ops(&ops, jet, 1, acc)?;
        lhs.axpy(-t.coeff, term.level(0))?;
    }
    Ok(lhs.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_derivatives_expand_to_nothing() {
        let w: OperatorWord = "d1 d2 d1".parse().unwrap();
        for b in 0..=2 {
            for g in 0..=2 {
                assert!(expand_mixed_commutator(2, &w, b, g).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn scaling_against_two_time_derivatives() {
        // [S, ∂_t²] = -2 ∂_t², so [d1 d1 S, ∂_t ∂_t] = -2 ∂_t ∂_t d1 d1
        let w: OperatorWord = "d1 d1 S".parse().unwrap();
        let terms = expand_mixed_commutator(2, &w, 0, 0).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].coeff, -2.0);
        assert_eq!((terms[0].alpha, terms[0].delta), (0, 0));
        assert_eq!(terms[0].word.to_string(), "d1 d1");
    }

    #[test]
    fn rejects_wrong_order() {
        let w: OperatorWord = "d1 S".parse().unwrap();
        assert!(expand_mixed_commutator(2, &w, 1, 1).is_err());
    }
}
