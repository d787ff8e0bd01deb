//! Sweeps over the data size, exit times of the `N_4 ≤ 2ε` bootstrap and
//! least-squares fits of the lifespan laws `T = A ε^{-k}` and
//! `T = exp(C ε^{-ν})`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{make_initial_data, run_with_monitor, DataFamily, ExitKind, SolverConfig};
use crate::system::SpecConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FitModel {
    /// `log T = log A - k log ε`.
    PowerLaw,
    /// `log T = a + C ε^{-ν}`.
    ExpInversePower { nu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub spec: SpecConfig,
    pub data: DataFamily,
    /// Data amplitudes, strictly decreasing.
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub fit: FitModel,
    /// Upper bound on the amplitudes, if any.
    #[serde(default)]
    pub amplitude_cap: Option<f64>,
}

impl SweepConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let a = &self.amplitudes;
        if a.len() < 3 {
            return Err(Error::Config(format!("a sweep needs at least 3 amplitudes, got {}", a.len())));
        }
        if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("amplitudes must be positive".into()));
        }
        if a.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Config("amplitudes must not increase".into()));
        }
        if let Some(cap) = self.amplitude_cap {
            if a[0] > cap {
                return Err(Error::Config(format!("amplitude {} exceeds the cap {cap}", a[0])));
            }
        }
        if let FitModel::ExpInversePower { nu } = self.fit {
            if !(nu.is_finite() && nu > 0.0) {
                return Err(Error::Config(format!("ν must be positive, got {nu}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub amplitude: f64,
    /// `N_4(0)`; NaN when the run failed before its first sample.
    pub epsilon: f64,
    pub t_star: f64,
    pub exit: ExitKind,
    /// Error that ended the run, if any.
    pub error: Option<String>,
}

impl RunOutcome {
    /// Only bootstrap exits measure a lifespan.
    pub fn censored(&self) -> bool {
        self.exit != ExitKind::BootstrapExit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanRecord {
    pub runs: Vec<RunOutcome>,
    pub tmax: f64,
}

impl LifespanRecord {
    pub const HEADER: &'static str = "epsilon,T_star,exit_kind";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for r in &self.runs {
            writeln!(w, "{:?},{:?},{}", r.epsilon, r.t_star, r.exit.as_str())?;
        }
        Ok(())
    }

    /// `(ε, T_*)` of uncensored runs in record order.
    pub fn uncensored(&self) -> Vec<(f64, f64)> {
        self.runs.iter().filter(|r| !r.censored()).map(|r| (r.epsilon, r.t_star)).collect()
    }

    pub fn censored_count(&self) -> usize {
        self.runs.iter().filter(|r| r.censored()).count()
    }

    pub fn monotonicity(&self) -> Monotonicity {
        monotonicity(&self.uncensored())
    }
}

/// Pairs of uncensored runs where the smaller `ε` has the shorter lifespan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Monotonicity {
    pub points: usize,
    pub inversions: usize,
    /// Lifespans strictly increase as `ε` decreases.
    pub strict: bool,
}

impl Monotonicity {
    pub fn holds(&self) -> bool {
        self.inversions == 0
    }
}

pub fn monotonicity(points: &[(f64, f64)]) -> Monotonicity {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let inversions = sorted.windows(2).filter(|w| w[1].1 < w[0].1).count();
    let strict = sorted.windows(2).all(|w| w[1].1 > w[0].1);
    Monotonicity { points: sorted.len(), inversions, strict }
}

/// One solver run per amplitude, concurrently; results in amplitude order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<LifespanRecord> {
    cfg.validate()?;
    let spec = cfg.spec.build()?;
    let grid = cfg.solver.grid_for(spec.dim(), spec.max_speed())?;
    let runs = cfg
        .amplitudes
        .par_iter()
        .map(|&amplitude| {
            let outcome = make_initial_data(&cfg.data, amplitude, cfg.solver.data_radius, grid, spec.components())
                .and_then(|data| run_with_monitor(&data, &spec, &cfg.solver, None));
            match outcome {
                Ok(run) => RunOutcome {
                    amplitude,
                    epsilon: run.probe.epsilon,
                    t_star: run.probe.t_star,
                    exit: run.probe.exit,
                    error: run.aborted,
                },
                Err(e) => RunOutcome {
                    amplitude,
                    epsilon: f64::NAN,
                    t_star: 0.0,
                    exit: ExitKind::Guard,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(LifespanRecord { runs, tmax: cfg.solver.tmax })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fit {
    pub model: FitModel,
    pub slope: f64,
    pub intercept: f64,
    /// Exponent `k` for the power law, `C` for the exponential law.
    pub rate: f64,
    /// `A` for the power law, `e^a` for the exponential law.
    pub prefactor: f64,
    pub r_squared: f64,
    /// Residuals of the linearized model.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FitOutcome {
    Fitted(Fit),
    Inconclusive { reason: String },
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&Fit> {
        match self {
            FitOutcome::Fitted(f) => Some(f),
            FitOutcome::Inconclusive { .. } => None,
        }
    }
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, R², residuals)`.
fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64, Vec<f64>) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - (a + b * xi)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (a, b, r2, residuals)
}

/// Fits `model` to the uncensored points of `record`.
pub fn fit_scaling(record: &LifespanRecord, model: FitModel) -> FitOutcome {
    fit_points(&record.uncensored(), model)
}

/// Fits `model` to `(ε, T_*)` points; fewer than three points, or points
/// without spread in `ε`, give an inconclusive outcome.
pub fn fit_points(points: &[(f64, f64)], model: FitModel) -> FitOutcome {
    if points.len() < 3 {
        return FitOutcome::Inconclusive {
            reason: format!("inconclusive (censored): {} uncensored runs, 3 needed", points.len()),
        };
    }
    if points.iter().any(|(e, t)| !(*e > 0.0 && *t > 0.0 && e.is_finite() && t.is_finite())) {
        return FitOutcome::Inconclusive { reason: "nonpositive ε or T_*".into() };
    }
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let x: Vec<f64> = match model {
        FitModel::PowerLaw => points.iter().map(|p| p.0.ln()).collect(),
        FitModel::ExpInversePower { nu } => points.iter().map(|p| p.0.powf(-nu)).collect(),
    };
    let first = x[0];
    if x.iter().all(|v| *v == first) {
        return FitOutcome::Inconclusive { reason: "all ε equal".into() };
    }
    let (a, b, r_squared, residuals) = least_squares(&x, &y);
    let (rate, prefactor) = match model {
        FitModel::PowerLaw => (-b, a.exp()),
        FitModel::ExpInversePower { .. } => (b, a.exp()),
    };
    FitOutcome::Fitted(Fit { model, slope: b, intercept: a, rate, prefactor, r_squared, residuals })
}

/// Accepted range of the fitted power-law exponent.
pub const EXPONENT_WINDOW: (f64, f64) = (1.5, 2.5);
pub const MIN_R_SQUARED: f64 = 0.9;

/// JSON-ready summary of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub fit: FitOutcome,
    pub uncensored: usize,
    pub censored: usize,
    pub monotonicity: Monotonicity,
    /// Power law: a fit with exponent in [`EXPONENT_WINDOW`] and `R²` above
    /// [`MIN_R_SQUARED`]. Exponential law: monotone lifespans only; the rate
    /// is reported, not judged.
    pub pass: bool,
    pub runs: Vec<RunOutcome>,
}

pub fn summarize(record: &LifespanRecord, model: FitModel) -> SweepSummary {
    let fit = fit_scaling(record, model);
    let monotonicity = record.monotonicity();
    let pass = monotonicity.holds()
        && match (model, fit.fit()) {
            (FitModel::PowerLaw, Some(f)) => {
                (EXPONENT_WINDOW.0..=EXPONENT_WINDOW.1).contains(&f.rate) && f.r_squared > MIN_R_SQUARED
            }
            (FitModel::PowerLaw, None) => false,
            (FitModel::ExpInversePower { .. }, _) => true,
        };
    SweepSummary {
        fit,
        uncensored: record.uncensored().len(),
        censored: record.censored_count(),
        monotonicity,
        pass,
        runs: record.runs.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Degree;

    fn synthetic(f: impl Fn(f64) -> f64) -> LifespanRecord {
        let runs = [0.4, 0.3, 0.2, 0.1]
            .iter()
            .map(|&e| RunOutcome { amplitude: e, epsilon: e, t_star: f(e), exit: ExitKind::BootstrapExit, error: None })
            .collect();
        LifespanRecord { runs, tmax: 1e9 }
    }

    #[test]
    fn power_law_round_trip() {
        let rec = synthetic(|e| 10.0 * e.powi(-2));
        let fit = fit_scaling(&rec, FitModel::PowerLaw).fit().cloned().unwrap();
        assert!(summarize(&rec, FitModel::PowerLaw).pass);
        assert!((fit.rate - 2.0).abs() < 1e-10);
        assert!((fit.prefactor - 10.0).abs() < 1e-10);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_round_trip() {
        let rec = synthetic(|e| (3.0 / e).exp());
        let fit = fit_scaling(&rec, FitModel::ExpInversePower { nu: 1.0 }).fit().cloned().unwrap();
        assert!((fit.rate - 3.0).abs() < 1e-10);
        assert!((fit.prefactor - 1.0).abs() < 1e-10);
        let rec = synthetic(|e| 0.5 * (0.2 / (e * e)).exp());
        let fit = fit_scaling(&rec, FitModel::ExpInversePower { nu: 2.0 }).fit().cloned().unwrap();
        assert!((fit.rate - 0.2).abs() < 1e-10 && (fit.prefactor - 0.5).abs() < 1e-10);
    }

    #[test]
    fn censored_sweep_is_inconclusive() {
        let mut rec = synthetic(|e| 1.0 / e);
        for r in rec.runs.iter_mut().skip(2) {
            r.exit = ExitKind::Horizon;
        }
        match fit_scaling(&rec, FitModel::PowerLaw) {
            FitOutcome::Inconclusive { reason } => assert!(reason.starts_with("inconclusive (censored)")),
            other => panic!("{other:?}"),
        }
        assert_eq!(rec.censored_count(), 2);
    }

    #[test]
    fn inversions_are_counted() {
        let m = monotonicity(&[(0.1, 5.0), (0.4, 1.0), (0.2, 2.0)]);
        assert!(m.holds() && m.strict);
        let m = monotonicity(&[(0.1, 5.0), (0.4, 1.0), (0.2, 6.0)]);
        assert_eq!(m.inversions, 1);
        let m = monotonicity(&[(0.1, 5.0), (0.2, 5.0)]);
        assert!(m.holds() && !m.strict);
    }

    #[test]
    fn sweep_config_checks_amplitudes() {
        let base = r#"
            amplitudes = [3e-3, 2e-3, 1e-3]
            [spec]
            dim = 2
            speeds = [1.0]
            degree = "quadratic"
            [data]
            family = "radial_bump"
            [fit]
            model = "power_law"
        "#;
        let cfg = SweepConfig::from_toml_str(base).unwrap();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.solver, SolverConfig::default());
        let mut bad = cfg.clone();
        bad.amplitudes = vec![1e-3, 2e-3, 3e-3];
        assert!(bad.validate().is_err());
        bad.amplitudes = vec![1e-3, 5e-4];
        assert!(bad.validate().is_err());
        let mut capped = cfg.clone();
        capped.amplitude_cap = Some(1e-3);
        assert!(capped.validate().is_err());
        assert!(SweepConfig::from_toml_str(&format!("bogus = 1\n{base}")).is_err());
    }

    #[test]
    fn linear_sweep_is_censored() {
        let cfg = SweepConfig {
            spec: SpecConfig {
                dim: 2,
                speeds: vec![1.0],
                degree: Some(Degree::Quadratic),
                symmetrize: false,
                g: vec![],
                h: vec![],
            },
            data: DataFamily::RadialBump,
            amplitudes: vec![1e-2, 5e-3, 5e-3],
            solver: SolverConfig { spacing: 0.25, tmax: 0.5, monitor_m4: false, ..Default::default() },
            fit: FitModel::PowerLaw,
            amplitude_cap: None,
        };
        let rec = run_sweep(&cfg).unwrap();
        assert!(rec.runs.iter().all(|r| r.exit == ExitKind::Horizon && r.t_star == 0.5));
        assert_eq!(rec.runs[1], RunOutcome { amplitude: 5e-3, ..rec.runs[2].clone() });
        let summary = summarize(&rec, FitModel::PowerLaw);
        assert!(matches!(summary.fit, FitOutcome::Inconclusive { .. }));
        assert!(!summary.pass && summary.censored == 3);
    }
}
