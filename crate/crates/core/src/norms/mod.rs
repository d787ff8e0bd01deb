//! Energies, generalized energies and weighted norms of snapshots.

mod angular;

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use angular::{interpolate, mixed_radial_angular, shell_norms, shell_radii, Outer, ShellSamples, SphereRule};

use crate::algebra::{apply_op, visit_words, Op, OperatorWord, TimeJet};
use crate::error::{Error, Result};
use crate::grid::reduce::sum_by;
use crate::grid::{partial_derivative, Accuracy, Field, Grid, StateSnapshot};

fn check_speeds(f: &Field, speeds: &[f64]) -> Result<()> {
    if speeds.len() != f.components() {
        return Err(Error::ShapeMismatch(format!("{} speeds for a {}-component field", speeds.len(), f.components())));
    }
    Ok(())
}

/// `½ Σ_l ∫ |w_t^l|² + c_l² |∇w^l|²` for a pair `(w, w_t)`.
pub fn energy_pair(w: &Field, wt: &Field, speeds: &[f64], acc: Accuracy) -> Result<f64> {
    check_speeds(w, speeds)?;
    w.check_same_shape(wt)?;
    let grad: Vec<Field> = (0..w.grid().dim()).map(|k| partial_derivative(w, k, acc)).collect::<Result<_>>()?;
    let len = w.grid().len();
    let wt = wt.data();
    let total = sum_by(w.data().len(), |i| {
        let c = speeds[i / len];
        let g2: f64 = grad.iter().map(|g| g.data()[i] * g.data()[i]).sum();
        wt[i] * wt[i] + c * c * g2
    });
    Ok(0.5 * total * w.grid().cell_volume())
}

pub fn energy_e1(s: &StateSnapshot, speeds: &[f64], acc: Accuracy) -> Result<f64> {
    energy_pair(&s.u, &s.v, speeds, acc)
}

fn energy_jet(jet: &TimeJet, speeds: &[f64], acc: Accuracy) -> Result<f64> {
    energy_pair(jet.level(0), jet.level(1), speeds, acc)
}

/// Root jet `[u, v]` or `[u, v, utt]`.
pub fn snapshot_jet(s: &StateSnapshot, utt: Option<&Field>) -> Result<TimeJet> {
    TimeJet::from_snapshot(s, utt)
}

/// Visits `(Z^a u, ∂_t Z^a u)` for every energy word of order `≤ κ - 1` with
/// at most one `S`. `utt` is needed when `t ≠ 0` and `κ ≥ 2`.
pub fn visit_energy_words(
    s: &StateSnapshot,
    utt: Option<&Field>,
    kappa: usize,
    acc: Accuracy,
    mut f: impl FnMut(&OperatorWord, &TimeJet) -> Result<()>,
) -> Result<()> {
    if kappa == 0 {
        return Err(Error::Config("κ starts at 1".into()));
    }
    let root = snapshot_jet(s, utt)?;
    visit_words(s.grid().dim(), kappa - 1, true, root, |jet, g| apply_op(&Op::Gen(*g), jet, 2, acc), |w, jet| f(w, jet))
}

/// `E_1(Z^a u)` for every word in the `N_κ` index set, in visiting order.
pub fn word_energies(
    s: &StateSnapshot,
    utt: Option<&Field>,
    speeds: &[f64],
    kappa: usize,
    acc: Accuracy,
) -> Result<Vec<(OperatorWord, f64)>> {
    let mut out = Vec::new();
    visit_energy_words(s, utt, kappa, acc, |w, jet| {
        out.push((w.clone(), energy_jet(jet, speeds, acc)?));
        Ok(())
    })?;
    Ok(out)
}

/// `N_κ = (Σ E_1(∂^a Ω^b S^d u))^{1/2}`, `d ≤ 1`.
pub fn generalized_energy(
    s: &StateSnapshot,
    utt: Option<&Field>,
    speeds: &[f64],
    kappa: usize,
    acc: Accuracy,
) -> Result<f64> {
    let parts = word_energies(s, utt, speeds, kappa, acc)?;
    Ok(parts.iter().map(|(_, e)| e).sum::<f64>().sqrt())
}

/// `M_2` of the pair `(w, w_t)` at time `t`:
/// `Σ_l Σ_{0≤δ≤n, 1≤j≤n} ‖⟨c_l t - |x|⟩ ∂_δ ∂_j w^l‖`.
pub fn auxiliary_m2(w: &Field, wt: &Field, speeds: &[f64], acc: Accuracy) -> Result<f64> {
    check_speeds(w, speeds)?;
    w.check_same_shape(wt)?;
    let grid = *w.grid();
    let dim = grid.dim();
    let t = w.time();
    let weights: Vec<Field> = speeds.iter().map(|&c| crate::grid::weight(&grid, c, t)).collect();
    let first: Vec<Field> = (0..dim).map(|k| partial_derivative(w, k, acc)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for j in 0..dim {
        // δ = 0
        total += weighted_l2_per_component(&partial_derivative(wt, j, acc)?, &weights)?;
        for d in 0..dim {
            if d < j {
                continue;
            }
            let mult = if d == j { 1.0 } else { 2.0 };
            total += mult * weighted_l2_per_component(&partial_derivative(&first[j], d, acc)?, &weights)?;
        }
    }
    Ok(total)
}

/// `Σ_l ‖weights[l] · f^l‖_{L²}`.
fn weighted_l2_per_component(f: &Field, weights: &[Field]) -> Result<f64> {
    let len = f.grid().len();
    let mut total = 0.0;
    for (l, wgt) in weights.iter().enumerate() {
        let d = f.component(l);
        let w = wgt.data();
        let s = sum_by(len, |i| {
            let v = w[i] * d[i];
            v * v
        });
        total += (s * f.grid().cell_volume()).sqrt();
    }
    Ok(total)
}

/// Visits `(Z̄^a u, ∂_t Z̄^a u)` for `|a| ≤ max_order` over spatial
/// derivatives and rotations.
pub fn visit_zbar_words(
    jet: TimeJet,
    max_order: usize,
    acc: Accuracy,
    f: impl FnMut(&OperatorWord, &TimeJet) -> Result<()>,
) -> Result<()> {
    let dim = jet.grid().dim();
    visit_words(dim, max_order, false, jet, |j, g| apply_op(&Op::Gen(*g), j, 2, acc), f)
}

/// `M_4 = Σ_{|a|≤2} M_2(Z̄^a u)`.
pub fn auxiliary_m4(s: &StateSnapshot, speeds: &[f64], acc: Accuracy) -> Result<f64> {
    let mut total = 0.0;
    visit_zbar_words(snapshot_jet(s, None)?, 2, acc, |_, jet| {
        total += auxiliary_m2(jet.level(0), jet.level(1), speeds, acc)?;
        Ok(())
    })?;
    Ok(total)
}

/// `‖⟨c t - |x|⟩^power f‖_{L^p}` over all components.
pub fn weighted_lp(f: &Field, c: f64, power: f64, p: f64) -> Result<f64> {
    let w = crate::grid::weight_pow(f.grid(), c, f.time(), power);
    Ok(crate::grid::reduce::lp(&f.mul_scalar_field(&w)?, p))
}

/// `‖|x|^power f‖_{L^p}` over all components.
pub fn radial_weighted_lp(f: &Field, power: f64, p: f64) -> Result<f64> {
    let r = crate::grid::radial_coordinate(f.grid()).map(|v| v.powf(power));
    Ok(crate::grid::reduce::lp(&f.mul_scalar_field(&r)?, p))
}

/// Balls `B_i = {|x| < c_i t / 2 + 1}`, `B_{i,k}` with `min(c_i, c_k)`, and
/// their complements. Indices are 0-based component numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    All,
    Ball(usize),
    BallComplement(usize),
    PairBall(usize, usize),
    PairBallComplement(usize, usize),
}

impl Region {
    fn radius(&self, speeds: &[f64], t: f64) -> Result<Option<(f64, bool)>> {
        let get = |i: usize| {
            speeds
                .get(i)
                .copied()
                .ok_or_else(|| Error::Config(format!("region refers to component {} of {}", i + 1, speeds.len())))
        };
        Ok(match *self {
            Region::All => None,
            Region::Ball(i) => Some((get(i)? * t / 2.0 + 1.0, true)),
            Region::BallComplement(i) => Some((get(i)? * t / 2.0 + 1.0, false)),
            Region::PairBall(i, k) => Some((get(i)?.min(get(k)?) * t / 2.0 + 1.0, true)),
            Region::PairBallComplement(i, k) => Some((get(i)?.min(get(k)?) * t / 2.0 + 1.0, false)),
        })
    }

    /// Whether the node at `x` belongs to the region.
    pub fn contains(&self, speeds: &[f64], t: f64, x: &[f64]) -> Result<bool> {
        Ok(match self.radius(speeds, t)? {
            None => true,
            Some((rad, inside)) => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                (r < rad) == inside
            }
        })
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::All => write!(f, "all"),
            Region::Ball(i) => write!(f, "B{}", i + 1),
            Region::BallComplement(i) => write!(f, "B{}'", i + 1),
            Region::PairBall(i, k) => write!(f, "B{}{}", i + 1, k + 1),
            Region::PairBallComplement(i, k) => write!(f, "B{}{}'", i + 1, k + 1),
        }
    }
}

/// `‖f‖_{L^p(region)}` by node membership, over all components.
pub fn region_lp(f: &Field, p: f64, region: Region, speeds: &[f64]) -> Result<f64> {
    let grid = *f.grid();
    let len = grid.len();
    let t = f.time();
    let mask: Vec<bool> = (0..len)
        .into_par_iter()
        .map(|i| region.contains(speeds, t, &grid.position(i)[..grid.dim()]))
        .collect::<Result<_>>()?;
    let d = f.data();
    if p.is_infinite() {
        return Ok((0..d.len())
            .into_par_iter()
            .filter(|&i| mask[i % len])
            .map(|i| d[i].abs())
            .reduce(|| 0.0, f64::max));
    }
    let s = sum_by(d.len(), |i| if mask[i % len] { d[i].abs().powf(p) } else { 0.0 });
    Ok((s * grid.cell_volume()).powf(1.0 / p))
}

/// `Σ_l (Σ_{1≤|a|≤4} ‖⟨x⟩ ∂^a φ^l‖ + Σ_{|a|≤3} ‖⟨x⟩ ∂^a ψ^l‖)` over
/// multi-indices `a`.
pub fn mild_weight_data_norm(data: &StateSnapshot, acc: Accuracy) -> Result<f64> {
    let grid = *data.grid();
    let bracket = Field::from_fn(grid, 1, data.time(), |x, _| (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt());
    let mut total = 0.0;
    let weights = vec![bracket; data.components()];
    multi_index_derivatives(&data.u, 4, acc, &mut |order, d| {
        if order >= 1 {
            total += weighted_l2_per_component(d, &weights)?;
        }
        Ok(())
    })?;
    multi_index_derivatives(&data.v, 3, acc, &mut |_, d| {
        total += weighted_l2_per_component(d, &weights)?;
        Ok(())
    })?;
    Ok(total)
}

/// Visits `∂^a f` once per multi-index `|a| ≤ max_order`.
fn multi_index_derivatives(
    f: &Field,
    max_order: usize,
    acc: Accuracy,
    visit: &mut dyn FnMut(usize, &Field) -> Result<()>,
) -> Result<()> {
    fn rec(
        f: &Field,
        order: usize,
        min_axis: usize,
        max_order: usize,
        acc: Accuracy,
        visit: &mut dyn FnMut(usize, &Field) -> Result<()>,
    ) -> Result<()> {
        visit(order, f)?;
        if order == max_order {
            return Ok(());
        }
        for k in min_axis..f.grid().dim() {
            rec(&partial_derivative(f, k, acc)?, order + 1, k, max_order, acc, visit)?;
        }
        Ok(())
    }
    rec(f, 0, 0, max_order, acc, visit)
}

/// Scalar functionals that can be requested by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    E1,
    N(usize),
    M2,
    M4,
    MixedRadialAngular { outer_sup: bool, p: f64 },
    WeightedLp { p: f64, speed: f64 },
    RegionLp { p: f64, region: Region },
    MildWeightData,
}

impl NormKind {
    fn name_and_tags(&self) -> (&'static str, String) {
        match self {
            NormKind::E1 => ("E1", String::new()),
            NormKind::N(k) => ("N", format!("kappa={k}")),
            NormKind::M2 => ("M2", String::new()),
            NormKind::M4 => ("M4", String::new()),
            NormKind::MixedRadialAngular { outer_sup, p } => {
                ("mixed_radial_angular", format!("outer={};p={}", if *outer_sup { "sup" } else { "L2" }, fmt_p(*p)))
            }
            NormKind::WeightedLp { p, speed } => ("weighted_lp", format!("p={};c={speed}", fmt_p(*p))),
            NormKind::RegionLp { p, region } => ("region_lp", format!("p={};region={region}", fmt_p(*p))),
            NormKind::MildWeightData => ("mild_weight_data", String::new()),
        }
    }
}

fn fmt_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub t: f64,
    pub kind: NormKind,
    pub value: f64,
    pub resolution: usize,
}

impl NormReport {
    pub const HEADER: &'static str = "t,kind,tags,value,resolution";

    pub fn write_row<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (name, tags) = self.kind.name_and_tags();
        writeln!(w, "{:?},{},{},{:?},{}", self.t, name, tags, self.value, self.resolution)
    }
}

/// Evaluates `kind` on a snapshot; the mixed norm uses component 0 and the
/// first speed for weighted norms when none is given.
pub fn evaluate(
    kind: &NormKind,
    s: &StateSnapshot,
    utt: Option<&Field>,
    speeds: &[f64],
    acc: Accuracy,
) -> Result<NormReport> {
    let value = match kind {
        NormKind::E1 => energy_e1(s, speeds, acc)?,
        NormKind::N(k) => {
            if !(1..=4).contains(k) {
                return Err(Error::Config(format!("κ must lie in 1..=4, got {k}")));
            }
            generalized_energy(s, utt, speeds, *k, acc)?
        }
        NormKind::M2 => auxiliary_m2(&s.u, &s.v, speeds, acc)?,
        NormKind::M4 => auxiliary_m4(s, speeds, acc)?,
        NormKind::MixedRadialAngular { outer_sup, p } => {
            let outer = if *outer_sup { Outer::Sup } else { Outer::L2 };
            mixed_radial_angular(&s.u, 0, outer, *p, 0.0, &SphereRule::standard(s.grid().dim()))?
        }
        NormKind::WeightedLp { p, speed } => weighted_lp(&s.u, *speed, 1.0, *p)?,
        NormKind::RegionLp { p, region } => region_lp(&s.u, *p, *region, speeds)?,
        NormKind::MildWeightData => mild_weight_data_norm(s, acc)?,
    };
    Ok(NormReport { t: s.time(), kind: kind.clone(), value, resolution: s.grid().points() })
}

/// The grid used for a norm's resolution column.
pub fn resolution(grid: &Grid) -> usize {
    grid.points()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::OperatorWord;

    fn radial_bump(grid: Grid, amp: f64) -> Field {
        Field::from_fn(grid, 1, 0.0, move |x, _| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2 < 1.0 {
                amp * (1.0 - r2).powi(5)
            } else {
                0.0
            }
        })
    }

    fn state(grid: Grid, amp: f64) -> StateSnapshot {
        let u = Field::from_fn(grid, 1, 0.0, move |x, _| {
            let r2: f64 = (x[0] - 0.2).powi(2) + x[1..].iter().map(|v| v * v).sum::<f64>();
            if r2 < 1.0 {
                amp * (1.0 + x[1]) * (1.0 - r2).powi(5)
            } else {
                0.0
            }
        });
        StateSnapshot::new(u, radial_bump(grid, 0.5 * amp)).unwrap()
    }

    #[test]
    fn energy_of_velocity_bump() {
        // ∫_{R²} (1-r²)^{10} = π / 11
        let grid = Grid::new(2, 201, 1.2).unwrap();
        let s = StateSnapshot::new(Field::zeros(grid, 1, 0.0), radial_bump(grid, 1.0)).unwrap();
        let e = energy_e1(&s, &[1.0], Accuracy::Fourth).unwrap();
        let exact = 0.5 * std::f64::consts::PI / 11.0;
        assert!((e / exact - 1.0).abs() < 1e-3, "{e} vs {exact}");
    }

    #[test]
    fn energy_is_quadratic() {
        let grid = Grid::new(2, 41, 1.2).unwrap();
        let a = energy_e1(&state(grid, 1.0), &[1.3], Accuracy::Fourth).unwrap();
        let b = energy_e1(&state(grid, 0.25), &[1.3], Accuracy::Fourth).unwrap();
        assert!((b / a - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn n1_is_root_energy_and_n_is_monotone() {
        let grid = Grid::new(2, 41, 1.2).unwrap();
        let s = state(grid, 1.0);
        let e1 = energy_e1(&s, &[1.0], Accuracy::Fourth).unwrap();
        assert_eq!(generalized_energy(&s, None, &[1.0], 1, Accuracy::Fourth).unwrap(), e1.sqrt());
        let mut last = 0.0;
        for k in 1..=4 {
            let n = generalized_energy(&s, None, &[1.0], k, Accuracy::Fourth).unwrap();
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn n2_matches_brute_force_word_sum() {
        let grid = Grid::new(2, 61, 1.2).unwrap();
        let u = radial_bump(grid, 1.0);
        let s = StateSnapshot::new(u.clone(), u.scaled(0.3)).unwrap();
        let n2 = generalized_energy(&s, None, &[1.0], 2, Accuracy::Fourth).unwrap();
        let words: Vec<OperatorWord> = ["id", "d1", "d2", "O12", "S"].iter().map(|w| w.parse().unwrap()).collect();
        let mut sum = 0.0;
        for w in &words {
            let zu = crate::algebra::apply_word(w, &s, None, Accuracy::Fourth).unwrap();
            let zv = crate::algebra::apply_word(
                w,
                &StateSnapshot::new(s.v.clone(), Field::zeros(grid, 1, 0.0)).unwrap(),
                None,
                Accuracy::Fourth,
            )
            .unwrap();
            // ∂_t S u = S v + v at t = 0
            let zv = if w.to_string() == "S" { zv.add(&s.v).unwrap() } else { zv };
            let e = energy_pair(&zu, &zv, &[1.0], Accuracy::Fourth).unwrap();
            if w.to_string() == "O12" {
                assert!(e < 1e-6);
            }
            sum += e;
        }
        assert!((n2 - sum.sqrt()).abs() < 1e-8 * n2);
    }

    #[test]
    fn m2_at_time_zero_matches_direct_quadrature() {
        let grid = Grid::new(3, 41, 1.2).unwrap();
        let s = state(grid, 1.0);
        let m2 = auxiliary_m2(&s.u, &s.v, &[1.0], Accuracy::Fourth).unwrap();
        // direct: weight ⟨r⟩, ordered pairs
        let w = crate::grid::weight(&grid, 1.0, 0.0);
        let mut direct = 0.0;
        for j in 0..3 {
            let dj = partial_derivative(&s.u, j, Accuracy::Fourth).unwrap();
            let dvj = partial_derivative(&s.v, j, Accuracy::Fourth).unwrap();
            direct += crate::grid::reduce::l2(&dvj.mul_scalar_field(&w).unwrap());
            for d in 0..3 {
                let ddj = partial_derivative(&dj, d, Accuracy::Fourth).unwrap();
                direct += crate::grid::reduce::l2(&ddj.mul_scalar_field(&w).unwrap());
            }
        }
        assert!((m2 / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn region_partition_is_exact() {
        let grid = Grid::new(2, 41, 3.0).unwrap();
        let s = state(grid, 1.0).u.with_time(1.5);
        let speeds = [1.0, 2.0];
        for (inner, outer) in
            [(Region::Ball(1), Region::BallComplement(1)), (Region::PairBall(0, 1), Region::PairBallComplement(0, 1))]
        {
            let a = region_lp(&s, 3.0, inner, &speeds).unwrap().powi(3);
            let b = region_lp(&s, 3.0, outer, &speeds).unwrap().powi(3);
            let all = region_lp(&s, 3.0, Region::All, &speeds).unwrap().powi(3);
            assert!(((a + b) / all - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mild_norm_is_linear() {
        let grid = Grid::new(2, 41, 1.2).unwrap();
        let a = mild_weight_data_norm(&state(grid, 1.0), Accuracy::Fourth).unwrap();
        let b = mild_weight_data_norm(&state(grid, 0.5), Accuracy::Fourth).unwrap();
        assert!((b / a - 0.5).abs() < 1e-12);
        let z = StateSnapshot::zeros(grid, 1, 0.0);
        assert_eq!(mild_weight_data_norm(&z, Accuracy::Fourth).unwrap(), 0.0);
    }

    #[test]
    fn radial_shell_norm_matches_profile() {
        let grid = Grid::new(2, 241, 1.2).unwrap();
        let f = radial_bump(grid, 1.0);
        let rule = SphereRule::standard(2);
        let v = mixed_radial_angular(&f, 0, Outer::Sup, 2.0, 0.0, &rule).unwrap();
        let exact = (2.0 * std::f64::consts::PI).sqrt();
        assert!((v / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn report_row_format() {
        let r = NormReport { t: 0.5, kind: NormKind::N(4), value: 1.25, resolution: 97 };
        let mut buf = Vec::new();
        r.write_row(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0.5,N,kappa=4,1.25,97\n");
    }
}
