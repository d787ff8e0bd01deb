//! Both sides of the weighted Sobolev, trace and energy inequalities on test
//! functions and on solver states, with worst-case ratios over corpora.

mod bounds;
mod corpus;

use std::fmt;
use std::io::Write;

pub use bounds::{check_acceleration_bound, check_m4_ratio, check_source_bound, source_bound_with_norms, M4Report};
pub use corpus::{function_corpus, jet_corpus, JetProbe, TestFunction};

use crate::algebra::TimeJet;
use crate::error::{Error, Result};
use crate::grid::reduce::{l2, lp};
use crate::grid::{laplacian, partial_derivative, radial_derivative, weight_pow, Accuracy, Field, StateSnapshot};
use crate::norms::{
    auxiliary_m2, energy_pair, generalized_energy, radial_weighted_lp, visit_zbar_words, Outer, ShellSamples,
    SphereRule,
};

/// Slack on explicit constants for quadrature error.
pub const QUADRATURE_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InequalityKind {
    /// `‖r^{1/2} ∂v‖_{L^∞_r L^2_ω} ≤ C N_1^{1/2} (Σ N_1(∂_x v))^{1/2}` in 2D.
    Trace2D,
    /// `‖⟨ct - r⟩^{1/2} ∂v‖_{L^4} ≤ C N_1^{1/2} (N_1 + M_2)^{1/2}` in 2D.
    WeightedL4,
    /// The `L^3` analogue in 3D.
    WeightedL3,
    /// `‖⟨ct - r⟩ ∂v‖_{L^6} ≤ C (N_1 + M_2)` in 3D.
    WeightedL6,
    /// `‖r ∂v‖_{L^∞_r L^p_ω} ≤ C Σ_{|a|≤1} N_1(Z̄^a v)` in 3D, `2 ≤ p < 4`.
    MixedRadial {
        p: f64,
    },
    Pointwise2D,
    Pointwise3D,
    /// `|r^{(n-1)/2} ∂v| ≤ C Σ_{|a|≤2} N_1(Z̄^a v)`.
    RadialSup,
    Strauss,
    /// `2/p = 1/2 + 1/q`; `q = ∞` gives `p = 4`.
    GenStrauss {
        p: f64,
        q: f64,
    },
    /// `‖φ‖_4^4 / (4 ‖φ‖² ‖∇φ‖²)` in 2D.
    Ladyzhenskaya,
    GagliardoNirenbergL3,
    /// `M_2(v) ≤ C (N_2(v) + Σ_l t ‖□_l v^l‖)`.
    KlainermanSideris,
    /// Pointwise bound on `Z̄^a ∂_t²u` for `|a| = order` on solver states.
    PointwiseAcceleration {
        order: usize,
    },
    /// `t ‖□ Z̄^a u‖` against powers of `N_4` and `M_4`.
    SourceBound {
        dim: usize,
    },
    M4Bound,
}

impl InequalityKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InequalityKind::MixedRadial { p } if !(2.0..4.0).contains(&p) => {
                Err(Error::Config(format!("mixed radial exponent must lie in [2, 4), got {p}")))
            }
            InequalityKind::GenStrauss { p, q } => {
                let lhs = 2.0 / p;
                let rhs = 0.5 + 1.0 / q;
                if p >= 2.0 && q >= 2.0 && (lhs - rhs).abs() < 1e-12 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("exponents p = {p}, q = {q} violate 2/p = 1/2 + 1/q")))
                }
            }
            InequalityKind::PointwiseAcceleration { order } if order > 2 => {
                Err(Error::Config(format!("pointwise acceleration order {order} exceeds 2")))
            }
            InequalityKind::SourceBound { dim } if dim != 2 && dim != 3 => {
                Err(Error::Config(format!("source bound needs dimension 2 or 3, got {dim}")))
            }
            _ => Ok(()),
        }
    }

    /// `GenStrauss` with `p` solved from `q`.
    pub fn gen_strauss(q: f64) -> Self {
        InequalityKind::GenStrauss { p: 2.0 / (0.5 + 1.0 / q), q }
    }

    /// Dimensions where the kind applies; empty for any.
    pub fn dims(&self) -> &'static [usize] {
        use InequalityKind::*;
        match self {
            Trace2D | WeightedL4 | Pointwise2D | Ladyzhenskaya => &[2],
            WeightedL3 | WeightedL6 | MixedRadial { .. } | Pointwise3D | GagliardoNirenbergL3 => &[3],
            _ => &[2, 3],
        }
    }

    pub fn known_constant(&self) -> Option<f64> {
        match self {
            InequalityKind::Strauss | InequalityKind::GagliardoNirenbergL3 => Some(2f64.sqrt()),
            InequalityKind::GenStrauss { p, .. } => Some(p.sqrt()),
            InequalityKind::Ladyzhenskaya => Some(1.0),
            _ => None,
        }
    }

    /// Whether the kind takes a time jet rather than a single function.
    pub fn takes_jet(&self) -> bool {
        use InequalityKind::*;
        !matches!(self, Strauss | GenStrauss { .. } | Ladyzhenskaya | GagliardoNirenbergL3)
    }

    /// Kinds with explicit constants that apply in `dim`.
    pub fn explicit(dim: usize) -> Vec<Self> {
        let mut v = vec![
            InequalityKind::Strauss,
            InequalityKind::gen_strauss(f64::INFINITY),
            InequalityKind::gen_strauss(10.0 / 3.0),
            InequalityKind::gen_strauss(10.0),
        ];
        v.push(if dim == 2 { InequalityKind::Ladyzhenskaya } else { InequalityKind::GagliardoNirenbergL3 });
        v
    }

    /// Corpus kinds with unspecified constants that apply in `dim`.
    pub fn existential(dim: usize) -> Vec<Self> {
        use InequalityKind::*;
        if dim == 2 {
            vec![Trace2D, WeightedL4, Pointwise2D, RadialSup, KlainermanSideris]
        } else {
            vec![
                WeightedL3,
                WeightedL6,
                MixedRadial { p: 2.0 },
                MixedRadial { p: 3.0 },
                Pointwise3D,
                RadialSup,
                KlainermanSideris,
            ]
        }
    }
}

fn fmt_exp(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{}", (p * 1e6).round() / 1e6)
    }
}

impl fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use InequalityKind::*;
        match self {
            Trace2D => write!(f, "trace_2d"),
            WeightedL4 => write!(f, "weighted_l4"),
            WeightedL3 => write!(f, "weighted_l3"),
            WeightedL6 => write!(f, "weighted_l6"),
            MixedRadial { p } => write!(f, "mixed_radial(p={})", fmt_exp(*p)),
            Pointwise2D => write!(f, "pointwise_2d"),
            Pointwise3D => write!(f, "pointwise_3d"),
            RadialSup => write!(f, "radial_sup"),
            Strauss => write!(f, "strauss"),
            GenStrauss { p, q } => write!(f, "gen_strauss(p={};q={})", fmt_exp(*p), fmt_exp(*q)),
            Ladyzhenskaya => write!(f, "ladyzhenskaya"),
            GagliardoNirenbergL3 => write!(f, "gagliardo_nirenberg_l3"),
            KlainermanSideris => write!(f, "klainerman_sideris"),
            PointwiseAcceleration { order } => write!(f, "pointwise_acceleration(order={order})"),
            SourceBound { dim } => write!(f, "source_bound({dim}d)"),
            M4Bound => write!(f, "m4_bound"),
        }
    }
}

/// What a kind is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum Probe<'a> {
    Function(&'a Field),
    Jet { jet: &'a TimeJet, speeds: &'a [f64] },
}

impl Probe<'_> {
    fn dim(&self) -> usize {
        match self {
            Probe::Function(f) => f.grid().dim(),
            Probe::Jet { jet, .. } => jet.grid().dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub kind: InequalityKind,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; infinite when `rhs = 0 < lhs`, zero for zero input.
    pub ratio: f64,
    pub known_constant: Option<f64>,
    /// Both sides vanish.
    pub degenerate: bool,
    /// Set when the input violated a stated precondition such as smallness.
    pub flagged: bool,
}

impl InequalityReport {
    pub fn new(kind: InequalityKind, lhs: f64, rhs: f64) -> Self {
        let degenerate = lhs == 0.0 && rhs == 0.0;
        let ratio = if degenerate {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        Self { kind, lhs, rhs, ratio, known_constant: kind.known_constant(), degenerate, flagged: false }
    }

    /// Violation when `rhs = 0 < lhs`.
    pub fn is_violation(&self) -> bool {
        self.ratio.is_infinite()
    }

    /// Within the known constant times `1 + tol`, or finite when none is known.
    pub fn passes(&self, tol: f64) -> bool {
        judge(self.ratio, self.known_constant, tol)
    }
}

fn judge(ratio: f64, known: Option<f64>, tol: f64) -> bool {
    match known {
        _ if !ratio.is_finite() => false,
        Some(c) => ratio <= c * (1.0 + tol),
        None => true,
    }
}

pub fn verify(kind: InequalityKind, probe: Probe<'_>, acc: Accuracy) -> Result<InequalityReport> {
    Ok(verify_many(&[kind], probe, acc)?.swap_remove(0))
}

/// Evaluates several kinds on one input, sharing intermediate norms.
pub fn verify_many(kinds: &[InequalityKind], probe: Probe<'_>, acc: Accuracy) -> Result<Vec<InequalityReport>> {
    let dim = probe.dim();
    for k in kinds {
        k.validate()?;
        if !k.dims().contains(&dim) {
            return Err(Error::Config(format!("{k} does not apply in dimension {dim}")));
        }
    }
    match probe {
        Probe::Function(f) => {
            if f.components() != 1 {
                return Err(Error::ShapeMismatch(format!("function kinds take one component, got {}", f.components())));
            }
            let mut cache = FunctionCache::new(f, acc);
            kinds.iter().map(|k| cache.report(*k)).collect()
        }
        Probe::Jet { jet, speeds } => {
            if jet.len() < 2 || speeds.len() != jet.level(0).components() {
                return Err(Error::ShapeMismatch(format!(
                    "jet with {} levels and {} components against {} speeds",
                    jet.len(),
                    jet.level(0).components(),
                    speeds.len()
                )));
            }
            let mut cache = JetCache::new(jet, speeds, acc);
            kinds.iter().map(|k| cache.report(*k)).collect()
        }
    }
}

struct FunctionCache<'a> {
    f: &'a Field,
    acc: Accuracy,
    rule: SphereRule,
    shells: Option<ShellSamples>,
    l2: Option<f64>,
    grad: Option<f64>,
    dr: Option<f64>,
}

impl<'a> FunctionCache<'a> {
    fn new(f: &'a Field, acc: Accuracy) -> Self {
        let rule = SphereRule::standard(f.grid().dim());
        Self { f, acc, rule, shells: None, l2: None, grad: None, dr: None }
    }

    fn shells(&mut self) -> Result<&ShellSamples> {
        if self.shells.is_none() {
            self.shells = Some(ShellSamples::new(self.f, 0, &self.rule)?);
        }
        Ok(self.shells.as_ref().unwrap())
    }

    fn l2(&mut self) -> f64 {
        *self.l2.get_or_insert_with(|| l2(self.f))
    }

    fn grad(&mut self) -> Result<f64> {
        if self.grad.is_none() {
            let mut s = 0.0;
            for k in 0..self.f.grid().dim() {
                let d = l2(&partial_derivative(self.f, k, self.acc)?);
                s += d * d;
            }
            self.grad = Some(s.sqrt());
        }
        Ok(self.grad.unwrap())
    }

    fn dr(&mut self) -> Result<f64> {
        if self.dr.is_none() {
            self.dr = Some(l2(&radial_derivative(self.f, self.acc)?));
        }
        Ok(self.dr.unwrap())
    }

    fn report(&mut self, kind: InequalityKind) -> Result<InequalityReport> {
        let half = (self.f.grid().dim() as f64 - 1.0) / 2.0;
        let (lhs, rhs) = match kind {
            InequalityKind::Strauss => {
                let rule = self.rule.clone();
                let lhs = self.shells()?.mixed(Outer::Sup, 2.0, half, &rule);
                (lhs, (self.dr()? * self.l2()).sqrt())
            }
            InequalityKind::GenStrauss { p, q } => {
                let rule = self.rule.clone();
                let sh = self.shells()?;
                let lhs = sh.mixed(Outer::Sup, p, half, &rule);
                let mixed = sh.mixed(Outer::L2, q, 0.0, &rule);
                (lhs, (self.dr()? * mixed).sqrt())
            }
            InequalityKind::Ladyzhenskaya => {
                let a = self.l2();
                (lp(self.f, 4.0).powi(4), 4.0 * a * a * self.grad()?.powi(2))
            }
            InequalityKind::GagliardoNirenbergL3 => (lp(self.f, 3.0), (self.l2() * self.grad()?).sqrt()),
            other => return Err(Error::Config(format!("{other} needs a time jet"))),
        };
        Ok(InequalityReport::new(kind, lhs, rhs))
    }
}

struct JetCache<'a> {
    jet: &'a TimeJet,
    speeds: &'a [f64],
    acc: Accuracy,
    alpha: Option<Vec<Field>>,
    n1: Option<f64>,
    /// `Σ_{|a|=1} N_1(∂_x^a v)` and `Σ_{|a|=1} M_2(∂_x^a v)`.
    dx: Option<(f64, f64)>,
    m2: Option<f64>,
    /// `Σ_{|a|≤k} N_1(Z̄^a v)` for `k = 1, 2`.
    zbar: [Option<f64>; 2],
}

impl<'a> JetCache<'a> {
    fn new(jet: &'a TimeJet, speeds: &'a [f64], acc: Accuracy) -> Self {
        Self { jet, speeds, acc, alpha: None, n1: None, dx: None, m2: None, zbar: [None, None] }
    }

    fn dim(&self) -> usize {
        self.jet.grid().dim()
    }

    fn t(&self) -> f64 {
        self.jet.time()
    }

    /// `∂_α w` for `α = 0..=n`, with `∂_0 w = w_t`.
    fn alpha(&mut self) -> Result<&[Field]> {
        if self.alpha.is_none() {
            let mut v = vec![self.jet.level(1).clone()];
            for k in 0..self.dim() {
                v.push(partial_derivative(self.jet.level(0), k, self.acc)?);
            }
            self.alpha = Some(v);
        }
        Ok(self.alpha.as_deref().unwrap())
    }

    fn n1(&mut self) -> Result<f64> {
        if self.n1.is_none() {
            self.n1 = Some(energy_pair(self.jet.level(0), self.jet.level(1), self.speeds, self.acc)?.sqrt());
        }
        Ok(self.n1.unwrap())
    }

    fn m2(&mut self) -> Result<f64> {
        if self.m2.is_none() {
            self.m2 = Some(auxiliary_m2(self.jet.level(0), self.jet.level(1), self.speeds, self.acc)?);
        }
        Ok(self.m2.unwrap())
    }

    fn dx(&mut self) -> Result<(f64, f64)> {
        if self.dx.is_none() {
            let (mut n, mut m) = (0.0, 0.0);
            for k in 0..self.dim() {
                let w = partial_derivative(self.jet.level(0), k, self.acc)?;
                let wt = partial_derivative(self.jet.level(1), k, self.acc)?;
                n += energy_pair(&w, &wt, self.speeds, self.acc)?.sqrt();
                m += auxiliary_m2(&w, &wt, self.speeds, self.acc)?;
            }
            self.dx = Some((n, m));
        }
        Ok(self.dx.unwrap())
    }

    fn zbar(&mut self, order: usize) -> Result<f64> {
        if self.zbar[order - 1].is_none() {
            let mut total = 0.0;
            let (speeds, acc) = (self.speeds, self.acc);
            visit_zbar_words(self.jet.clone().truncated(2), order, acc, |_, j| {
                total += energy_pair(j.level(0), j.level(1), speeds, acc)?.sqrt();
                Ok(())
            })?;
            self.zbar[order - 1] = Some(total);
        }
        Ok(self.zbar[order - 1].unwrap())
    }

    /// `max_{l, α} ‖⟨c_l t - r⟩^power ∂_α v^l‖_{L^p}`.
    fn weighted_alpha(&mut self, power: f64, p: f64) -> Result<f64> {
        let (t, speeds) = (self.t(), self.speeds);
        let grid = *self.jet.grid();
        let weights: Vec<Field> = speeds.iter().map(|&c| weight_pow(&grid, c, t, power)).collect();
        let mut best = 0.0f64;
        for d in self.alpha()? {
            for (l, w) in weights.iter().enumerate() {
                best = best.max(lp(&d.extract(l).mul_scalar_field(w)?, p));
            }
        }
        Ok(best)
    }

    /// `max_{l, α} ‖r^power ∂_α v^l‖_{L^outer_r L^p_ω}`.
    fn mixed_alpha(&mut self, outer: Outer, p: f64, power: f64) -> Result<f64> {
        let rule = SphereRule::standard(self.dim());
        let mut best = 0.0f64;
        for d in self.alpha()? {
            for l in 0..d.components() {
                best = best.max(ShellSamples::new(d, l, &rule)?.mixed(outer, p, power, &rule));
            }
        }
        Ok(best)
    }

    fn report(&mut self, kind: InequalityKind) -> Result<InequalityReport> {
        use InequalityKind::*;
        let (lhs, rhs) = match kind {
            Trace2D => {
                let lhs = self.mixed_alpha(Outer::Sup, 2.0, 0.5)?;
                (lhs, (self.n1()? * self.dx()?.0).sqrt())
            }
            WeightedL4 | WeightedL3 => {
                let p = if kind == WeightedL4 { 4.0 } else { 3.0 };
                let lhs = self.weighted_alpha(0.5, p)?;
                let n1 = self.n1()?;
                (lhs, (n1 * (n1 + self.m2()?)).sqrt())
            }
            WeightedL6 => (self.weighted_alpha(1.0, 6.0)?, self.n1()? + self.m2()?),
            MixedRadial { p } => (self.mixed_alpha(Outer::Sup, p, 1.0)?, self.zbar(1)?),
            Pointwise2D | Pointwise3D => {
                let power = if kind == Pointwise2D { 0.5 } else { 1.0 };
                let lhs = self.weighted_alpha(power, f64::INFINITY)?;
                let (nd, md) = self.dx()?;
                let n = self.n1()? + nd;
                let m = self.m2()? + md;
                let rhs = if kind == Pointwise2D { (n * (n + m)).sqrt() } else { n + m };
                (lhs, rhs)
            }
            RadialSup => {
                let power = (self.dim() as f64 - 1.0) / 2.0;
                let mut lhs = 0.0f64;
                for d in self.alpha()? {
                    for l in 0..d.components() {
                        lhs = lhs.max(radial_weighted_lp(&d.extract(l), power, f64::INFINITY)?);
                    }
                }
                (lhs, self.zbar(2)?)
            }
            KlainermanSideris => {
                if self.jet.len() < 3 {
                    return Err(Error::MissingTimeDerivative { needed: 2, available: self.jet.len() - 1 });
                }
                let s = StateSnapshot::new(self.jet.level(0).clone(), self.jet.level(1).clone())?;
                let n2 = generalized_energy(&s, Some(self.jet.level(2)), self.speeds, 2, self.acc)?;
                let lap = laplacian(self.jet.level(0), self.acc)?;
                let mut source = 0.0;
                for (l, c) in self.speeds.iter().enumerate() {
                    let mut b = self.jet.level(2).extract(l);
                    b.axpy(-c * c, &lap.extract(l))?;
                    source += self.t() * l2(&b);
                }
                (self.m2()?, n2 + source)
            }
            other => return Err(Error::Config(format!("{other} takes a single function or a solver state"))),
        };
        Ok(InequalityReport::new(kind, lhs, rhs))
    }
}

/// Worst ratio of one kind over a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub kind: InequalityKind,
    pub corpus: String,
    pub worst_ratio: f64,
    /// Id of the member attaining the worst ratio.
    pub argmax: String,
    pub known_constant: Option<f64>,
    pub pass: bool,
}

impl CorpusReport {
    pub const HEADER: &'static str = "kind,corpus,worst_ratio,known_constant,pass";

    pub fn write_row<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let known = self.known_constant.map(|c| format!("{c:?}")).unwrap_or_default();
        writeln!(w, "{},{},{:?},{},{}", self.kind, self.corpus, self.worst_ratio, known, self.pass)
    }
}

pub fn write_reports<W: Write>(rows: &[CorpusReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", CorpusReport::HEADER)?;
    for r in rows {
        r.write_row(&mut w)?;
    }
    Ok(())
}

/// Largest ratio over `(id, ratio)` pairs with the first id attaining it.
/// `None` for an empty list.
pub fn estimate_constant<'a>(ratios: impl IntoIterator<Item = (&'a str, f64)>) -> Option<(f64, String)> {
    let mut best: Option<(f64, String)> = None;
    for (id, r) in ratios {
        let worse = match &best {
            None => true,
            Some((b, _)) => r > *b || (r.is_nan() && !b.is_nan()),
        };
        if worse {
            best = Some((r, id.to_string()));
        }
    }
    best
}

/// Runs `kinds` on every member and reduces to one row per kind.
/// `eval(i)` returns the reports of member `i` in the order of `kinds`.
fn reduce_corpus(
    kinds: &[InequalityKind],
    corpus: &str,
    ids: &[String],
    mut eval: impl FnMut(usize) -> Result<Vec<InequalityReport>>,
    tol: f64,
) -> Result<Vec<CorpusReport>> {
    if ids.is_empty() {
        return Err(Error::InsufficientData("empty corpus".into()));
    }
    let mut ratios = vec![Vec::with_capacity(ids.len()); kinds.len()];
    for i in 0..ids.len() {
        for (k, r) in eval(i)?.into_iter().enumerate() {
            ratios[k].push(r.ratio);
        }
    }
    Ok(kinds
        .iter()
        .zip(ratios)
        .map(|(kind, rs)| {
            let (worst, argmax) =
                estimate_constant(ids.iter().map(String::as_str).zip(rs)).expect("corpus is nonempty");
            CorpusReport {
                kind: *kind,
                corpus: corpus.to_string(),
                worst_ratio: worst,
                argmax,
                known_constant: kind.known_constant(),
                pass: judge(worst, kind.known_constant(), tol),
            }
        })
        .collect())
}

/// Worst ratios of function kinds over test functions sampled on `grid`.
pub fn run_function_corpus(
    kinds: &[InequalityKind],
    functions: &[TestFunction],
    grid: crate::grid::Grid,
    corpus: &str,
    acc: Accuracy,
    tol: f64,
) -> Result<Vec<CorpusReport>> {
    let ids: Vec<String> = functions.iter().map(|f| f.id.clone()).collect();
    reduce_corpus(
        kinds,
        corpus,
        &ids,
        |i| {
            let f = functions[i].sample(grid, 0.0);
            verify_many(kinds, Probe::Function(&f), acc)
        },
        tol,
    )
}

/// Worst ratios of jet kinds over probes sampled on `grid` at time `t`.
#[allow(clippy::too_many_arguments)]
pub fn run_jet_corpus(
    kinds: &[InequalityKind],
    probes: &[JetProbe],
    grid: crate::grid::Grid,
    t: f64,
    speeds: &[f64],
    corpus: &str,
    acc: Accuracy,
    tol: f64,
) -> Result<Vec<CorpusReport>> {
    let ids: Vec<String> = probes.iter().map(|p| p.id.clone()).collect();
    reduce_corpus(
        kinds,
        corpus,
        &ids,
        |i| {
            let jet = probes[i].jet(grid, t)?;
            verify_many(kinds, Probe::Jet { jet: &jet, speeds }, acc)
        },
        tol,
    )
}
