use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::generator::{alphabet, alphabet_index, Generator};
use crate::error::{Error, Result};

/// A product of generators, written left to right and applied right to left.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OperatorWord(pub Vec<Generator>);

impl OperatorWord {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn single(g: Generator) -> Self {
        Self(vec![g])
    }

    pub fn generators(&self) -> &[Generator] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn s_count(&self) -> usize {
        self.0.iter().filter(|g| **g == Generator::Scaling).count()
    }

    /// `Z^a = Z_1^{a_1} ⋯ Z_μ^{a_μ}` from a multi-index over [`alphabet`].
    pub fn from_multi_index(dim: usize, a: &[usize]) -> Result<Self> {
        let z = alphabet(dim);
        if a.len() != z.len() {
            return Err(Error::WordConstraint(format!(
                "multi-index of length {} for an alphabet of {}",
                a.len(),
                z.len()
            )));
        }
        let mut w = Vec::new();
        for (g, &count) in z.iter().zip(a) {
            w.extend(std::iter::repeat(*g).take(count));
        }
        Ok(Self(w))
    }

    /// Exponents over [`alphabet`]; fails for letters outside it.
    pub fn multi_index(&self, dim: usize) -> Result<Vec<usize>> {
        let mut a = vec![0; alphabet(dim).len()];
        for g in &self.0 {
            let i = alphabet_index(dim, g)
                .ok_or_else(|| Error::WordConstraint(format!("{g} is not in the energy alphabet")))?;
            a[i] += 1;
        }
        Ok(a)
    }

    /// Letters appear in alphabet order, so the word equals its `Z^a` form.
    pub fn is_canonical(&self, dim: usize) -> bool {
        let idx: Option<Vec<usize>> = self.0.iter().map(|g| alphabet_index(dim, g)).collect();
        idx.is_some_and(|v| v.windows(2).all(|p| p[0] <= p[1]))
    }

    /// Checks the energy-word constraints: alphabet letters only, valid
    /// indices, at most one `S`.
    pub fn check_energy_word(&self, dim: usize) -> Result<()> {
        for g in &self.0 {
            g.validate(dim)?;
            if !g.in_alphabet() {
                return Err(Error::WordConstraint(format!("{g} is not allowed in an energy word")));
            }
        }
        if self.s_count() > 1 {
            return Err(Error::WordConstraint(format!("'{self}' uses S {} times", self.s_count())));
        }
        Ok(())
    }

    /// Removes one `S`, if present.
    pub fn without_scaling(&self) -> Self {
        let mut w = self.0.clone();
        if let Some(p) = w.iter().position(|g| *g == Generator::Scaling) {
            w.remove(p);
        }
        Self(w)
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut w = self.0.clone();
        w.extend_from_slice(&other.0);
        Self(w)
    }
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "id");
        }
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for OperatorWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "id" {
            return Ok(Self::identity());
        }
        if s.is_empty() {
            return Err(Error::WordParse("empty word; use 'id'".into()));
        }
        s.split_whitespace().map(str::parse).collect::<Result<Vec<_>>>().map(Self)
    }
}

/// Multi-indices `a` over the alphabet with `|a| ≤ max_order`, at most one
/// `S` when `scaling` is set and none otherwise, visited depth first.
/// Each word is built from the right, so a caller holding the parent's value
/// can obtain a child's value with one more generator.
pub fn visit_words<T, F>(
    dim: usize,
    max_order: usize,
    scaling: bool,
    root: T,
    mut step: impl FnMut(&T, &Generator) -> Result<T>,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&OperatorWord, &T) -> Result<()>,
{
    let z = alphabet(dim);
    let s = z.len() - 1;
    let limit = if scaling { s } else { s - 1 };
    let mut word = Vec::new();
    visit(&OperatorWord::identity(), &root)?;
    dfs(&z, s, max_order, limit, &mut word, &root, &mut step, &mut visit)
}

#[allow(clippy::too_many_arguments)]
fn dfs<T, F, G>(
    z: &[Generator],
    s: usize,
    max_order: usize,
    limit: usize,
    word: &mut Vec<Generator>,
    parent: &T,
    step: &mut G,
    visit: &mut F,
) -> Result<()>
where
    F: FnMut(&OperatorWord, &T) -> Result<()>,
    G: FnMut(&T, &Generator) -> Result<T>,
{
    if word.len() == max_order {
        return Ok(());
    }
    for g in 0..=limit {
        let child = step(parent, &z[g])?;
        word.insert(0, z[g]);
        let w = OperatorWord(word.clone());
        visit(&w, &child)?;
        let next = if g == s { s - 1 } else { g };
        dfs(z, s, max_order, next, word, &child, step, visit)?;
        word.remove(0);
    }
    Ok(())
}

/// All energy words of order at most `max_order - 1` with at most one `S`,
/// in canonical `Z^a` form, sorted by order and then by multi-index.
pub fn enumerate_words(dim: usize, max_order: usize) -> Vec<OperatorWord> {
    if max_order == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    visit_words(
        dim,
        max_order - 1,
        true,
        (),
        |_, _| Ok(()),
        |w, _| {
            out.push(w.clone());
            Ok(())
        },
    )
    .expect("enumeration has no failing steps");
    out.sort_by_key(|w| {
        let a = w.multi_index(dim).expect("alphabet word");
        (w.order(), std::cmp::Reverse(a))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_for_small_orders() {
        assert_eq!(enumerate_words(2, 1), vec![OperatorWord::identity()]);
        assert_eq!(enumerate_words(2, 2).len(), 5);
        assert_eq!(enumerate_words(2, 4).len(), 30);
        assert_eq!(enumerate_words(3, 4).len(), 112);
    }

    #[test]
    fn words_are_canonical_and_distinct() {
        let w = enumerate_words(3, 4);
        for x in &w {
            assert!(x.is_canonical(3));
            assert!(x.check_energy_word(3).is_ok());
        }
        let mut idx: Vec<_> = w.iter().map(|x| x.multi_index(3).unwrap()).collect();
        idx.sort();
        idx.dedup();
        assert_eq!(idx.len(), w.len());
    }

    #[test]
    fn text_form() {
        let w: OperatorWord = "d1 d1 O12 S".parse().unwrap();
        assert_eq!(w.multi_index(2).unwrap(), vec![2, 0, 1, 1]);
        assert_eq!(w.to_string(), "d1 d1 O12 S");
        assert_eq!("id".parse::<OperatorWord>().unwrap(), OperatorWord::identity());
        assert!("S S".parse::<OperatorWord>().unwrap().check_energy_word(2).is_err());
        assert!("dt d1".parse::<OperatorWord>().unwrap().check_energy_word(2).is_err());
    }
}
