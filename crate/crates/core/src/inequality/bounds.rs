use rayon::prelude::*;

use super::{InequalityKind, InequalityReport};
use crate::algebra::{apply_op, visit_words, Op, TimeJet};
use crate::error::Result;
use crate::grid::reduce::l2;
use crate::grid::{partial_derivative, Accuracy, Field, StateSnapshot};
use crate::norms::{auxiliary_m4, generalized_energy};
use crate::system::SystemSpec;

/// Nodes where the right side is below this fraction of its maximum are
/// skipped by the pointwise checks.
const POINTWISE_FLOOR: f64 = 1e-6;

fn abs_sum_into(acc: &mut [f64], f: &Field, len: usize, weight: f64) {
    for block in f.data().chunks(len) {
        acc.par_iter_mut().zip(block).for_each(|(a, v)| *a += weight * v.abs());
    }
}

/// `Σ_i (Σ_{m, α} |∂_m ∂_α w^i| + Σ_α |∂_α w^i|)` for a jet `[w, w_t, …]`.
fn derivative_bound(jet: &TimeJet, acc: Accuracy) -> Result<Vec<f64>> {
    let grid = *jet.grid();
    let len = grid.len();
    let dim = grid.dim();
    let mut out = vec![0.0; len];
    abs_sum_into(&mut out, jet.level(1), len, 1.0);
    for m in 0..dim {
        let dm = partial_derivative(jet.level(0), m, acc)?;
        abs_sum_into(&mut out, &dm, len, 1.0);
        abs_sum_into(&mut out, &partial_derivative(jet.level(1), m, acc)?, len, 1.0);
        for k in m..dim {
            let w = if k == m { 1.0 } else { 2.0 };
            abs_sum_into(&mut out, &partial_derivative(&dm, k, acc)?, len, w);
        }
    }
    Ok(out)
}

fn pointwise_report(kind: InequalityKind, lhs: &[f64], rhs: &[f64]) -> InequalityReport {
    let top = rhs.iter().cloned().fold(0.0, f64::max);
    let floor = POINTWISE_FLOOR * top;
    let mut best = (0.0, 0.0, 0.0);
    for (l, r) in lhs.iter().zip(rhs) {
        if *r > floor && *r > 0.0 && l / r > best.0 {
            best = (l / r, *l, *r);
        }
    }
    if top == 0.0 {
        let l = lhs.iter().cloned().fold(0.0, f64::max);
        return InequalityReport::new(kind, l, 0.0);
    }
    let mut rep = InequalityReport::new(kind, best.1, best.2);
    if best.2 == 0.0 {
        rep.ratio = 0.0;
    }
    rep
}

/// Pointwise bounds on `Z̄^a ∂_t²u`, `|a| = 0, 1, 2`, by first and second
/// derivatives of `Z̄^b u` (`b = 0` for `|a| = 0`, `1 ≤ |b| ≤ |a|` otherwise).
/// Reports carry the worst nodal ratio and the two sides at that node; they
/// are flagged when the state fails the smallness check at `epsilon_star`.
pub fn check_acceleration_bound(
    spec: &SystemSpec,
    s: &StateSnapshot,
    utt: &Field,
    epsilon_star: f64,
    acc: Accuracy,
) -> Result<Vec<InequalityReport>> {
    let len = s.grid().len();
    let mut bound = vec![vec![0.0; len]; 3];
    let mut accel = vec![vec![0.0; len]; 3];
    let root = TimeJet::from_snapshot(s, Some(utt))?;
    visit_words(
        s.grid().dim(),
        2,
        false,
        root,
        |j, g| apply_op(&Op::Gen(*g), j, 3, acc),
        |w, jet| {
            let o = w.order();
            let b = derivative_bound(jet, acc)?;
            bound[o].iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            abs_sum_into(&mut accel[o], jet.level(2), len, 1.0);
            Ok(())
        },
    )?;
    let flagged = !spec.is_linear() && !SystemSpec::smallness_check(s, epsilon_star, acc)?.passes;
    let rhs2: Vec<f64> = bound[1].iter().zip(&bound[2]).map(|(a, b)| a + b).collect();
    let rhs = [&bound[0], &bound[1], &rhs2];
    Ok((0..3)
        .map(|o| {
            let mut r = pointwise_report(InequalityKind::PointwiseAcceleration { order: o }, &accel[o], rhs[o]);
            r.flagged = flagged;
            r
        })
        .collect())
}

/// `max_{|a|≤2} Σ_l t ‖Z̄^a F^l‖` for the nonlinear source
/// `F = ∂_t²u - c²Δu` against `N_4² + N_4 M_4` (3D) or `N_4³ + N_4² M_4` (2D).
pub fn check_source_bound(
    spec: &SystemSpec,
    s: &StateSnapshot,
    utt: &Field,
    acc: Accuracy,
) -> Result<InequalityReport> {
    let n4 = generalized_energy(s, Some(utt), spec.speeds(), 4, acc)?;
    let m4 = auxiliary_m4(s, spec.speeds(), acc)?;
    source_bound_with_norms(spec, s, utt, n4, m4, acc)
}

/// As [`check_source_bound`] with `N_4` and `M_4` supplied.
pub fn source_bound_with_norms(
    spec: &SystemSpec,
    s: &StateSnapshot,
    utt: &Field,
    n4: f64,
    m4: f64,
    acc: Accuracy,
) -> Result<InequalityReport> {
    let source = spec.rhs_spatial(s, utt, acc)?;
    let t = s.time();
    let n = spec.components();
    let mut lhs = 0.0f64;
    visit_words(
        spec.dim(),
        2,
        false,
        TimeJet::new(vec![source])?,
        |j, g| apply_op(&Op::Gen(*g), j, 1, acc),
        |_, jet| {
            let total: f64 = (0..n).map(|l| t * l2(&jet.level(0).extract(l))).sum();
            lhs = lhs.max(total);
            Ok(())
        },
    )?;
    let dim = spec.dim();
    let rhs = if dim == 3 { n4 * n4 + n4 * m4 } else { n4.powi(3) + n4 * n4 * m4 };
    Ok(InequalityReport::new(InequalityKind::SourceBound { dim }, lhs, rhs))
}

/// `M_4 / N_4` along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct M4Report {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// `max ratio / first ratio - 1`.
    pub growth: f64,
    pub degenerate: bool,
}

impl M4Report {
    /// Finite and grown by less than `limit`.
    pub fn passes(&self, limit: f64) -> bool {
        self.degenerate || (self.max_ratio.is_finite() && self.growth < limit)
    }
}

/// Takes `(t, N_4, M_4)` samples; samples with `N_4 = 0` are skipped.
pub fn check_m4_ratio(samples: &[(f64, f64, f64)]) -> M4Report {
    let ratios: Vec<f64> = samples.iter().filter(|(_, n, _)| *n > 0.0).map(|(_, n, m)| m / n).collect();
    if ratios.is_empty() {
        return M4Report { ratios, max_ratio: 0.0, growth: 0.0, degenerate: true };
    }
    let max_ratio = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let growth = max_ratio / ratios[0] - 1.0;
    M4Report { ratios, max_ratio, growth, degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::solver::{make_initial_data, DataFamily};
    use crate::system::Degree;

    fn quadratic_spec() -> SystemSpec {
        let mut spec = SystemSpec::linear(2, vec![1.0, 0.7], Degree::Quadratic).unwrap();
        spec.set_g(&[0, 0, 0, 0, 0, 0], 1.0).unwrap();
        spec.set_h(&[1, 0, 0, 0, 1], 0.5).unwrap();
        spec.symmetrized()
    }

    #[test]
    fn m4_ratio_degenerate_and_growth() {
        assert!(check_m4_ratio(&[(0.0, 0.0, 0.0)]).degenerate);
        let r = check_m4_ratio(&[(0.0, 1.0, 2.0), (1.0, 1.0, 2.5), (2.0, 2.0, 4.0)]);
        assert_eq!(r.ratios, vec![2.0, 2.5, 2.0]);
        assert!((r.growth - 0.25).abs() < 1e-15);
        assert!(r.passes(0.5) && !r.passes(0.2));
    }

    #[test]
    fn linear_source_vanishes() {
        let grid = Grid::new(2, 41, 2.0).unwrap();
        let spec = SystemSpec::linear(2, vec![1.0, 0.5], Degree::Cubic).unwrap();
        let s = make_initial_data(&DataFamily::RandomBump { seed: 1 }, 0.01, 1.0, grid, 2).unwrap();
        let utt = spec.recover_utt(&s, None, Accuracy::Fourth, 1e6).unwrap();
        let r = check_source_bound(&spec, &s, &utt, Accuracy::Fourth).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.rhs > 0.0 && r.ratio == 0.0);
    }

    #[test]
    fn pointwise_acceleration_is_bounded() {
        let grid = Grid::new(2, 41, 2.0).unwrap();
        let spec = quadratic_spec();
        let s = make_initial_data(&DataFamily::RandomBump { seed: 2 }, 1e-3, 1.0, grid, 2).unwrap();
        let utt = spec.recover_utt(&s, None, Accuracy::Fourth, 1e6).unwrap();
        let reps = check_acceleration_bound(&spec, &s, &utt, 0.1, Accuracy::Fourth).unwrap();
        assert_eq!(reps.len(), 3);
        for r in reps {
            assert!(!r.flagged);
            assert!(r.ratio.is_finite() && r.ratio > 0.0 && r.ratio < 10.0, "{}: {}", r.kind, r.ratio);
        }
    }

    #[test]
    fn source_scales_quadratically() {
        let grid = Grid::new(2, 41, 2.0).unwrap();
        let spec = quadratic_spec();
        let mut lhs = Vec::new();
        for eps in [1e-3, 5e-4] {
            let s = make_initial_data(&DataFamily::RadialBump, eps, 1.0, grid, 2).unwrap();
            let s = StateSnapshot::new(s.u.with_time(1.0), s.v.with_time(1.0)).unwrap();
            let utt = spec.recover_utt(&s, None, Accuracy::Fourth, 1e6).unwrap();
            lhs.push(source_bound_with_norms(&spec, &s, &utt, 1.0, 1.0, Accuracy::Fourth).unwrap().lhs);
        }
        let slope = (lhs[0] / lhs[1]).log2();
        assert!((slope - 2.0).abs() < 0.01, "{slope}");
    }
}
