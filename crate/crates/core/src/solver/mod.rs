//! Method-of-lines integration in `(u, v)` with classical RK4, plus the
//! energy monitors sampled along the way.

mod data;
mod monitor;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use data::{make_initial_data, DataFamily};
pub use monitor::{gronwall_ratios, modified_energy, sample, EnergyBreakdown, Sample};

use crate::error::{Error, Result};
use crate::grid::{Accuracy, Closure, Field, Grid, StateSnapshot};
use crate::system::SystemSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// `Δt = cfl · Δx / c_max`, rounded down so samples land on steps.
    pub cfl: f64,
    pub accuracy: Accuracy,
    /// Stencil closure at the grid edge for the evolution operator.
    pub boundary: Closure,
    pub spacing: f64,
    /// Radius of the initial support.
    pub data_radius: f64,
    /// Extra nodes between the light cone and the grid edge.
    pub margin: usize,
    pub sample_interval: f64,
    pub tmax: f64,
    /// Abort when `max |u|` or `max |v|` exceeds this.
    pub guard: f64,
    pub cond_cap: f64,
    pub epsilon_star: f64,
    pub delta0: f64,
    /// Stop at the first sample with `N_4 > 2 N_4(0)`.
    pub stop_at_exit: bool,
    pub monitor_m4: bool,
    pub keep_snapshots: bool,
    /// Nodes below this fraction of the initial maximum count as outside the support.
    pub support_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            accuracy: Accuracy::Fourth,
            boundary: Closure::ZeroExtension,
            spacing: 0.1,
            data_radius: 1.0,
            margin: 12,
            sample_interval: 0.25,
            tmax: 1.0,
            guard: 1e6,
            cond_cap: 1e6,
            epsilon_star: 0.1,
            delta0: 0.05,
            stop_at_exit: true,
            monitor_m4: true,
            keep_snapshots: false,
            support_threshold: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        pos("cfl", self.cfl)?;
        if self.cfl > 1.0 {
            return Err(Error::Config(format!("cfl must not exceed 1, got {}", self.cfl)));
        }
        pos("spacing", self.spacing)?;
        pos("data_radius", self.data_radius)?;
        pos("sample_interval", self.sample_interval)?;
        pos("tmax", self.tmax)?;
        pos("guard", self.guard)?;
        pos("cond_cap", self.cond_cap)?;
        pos("epsilon_star", self.epsilon_star)?;
        pos("delta0", self.delta0)?;
        Ok(())
    }

    /// Grid holding the light cone of the data up to `tmax` plus the margin.
    pub fn grid_for(&self, dim: usize, c_max: f64) -> Result<Grid> {
        crate::system::containment_grid(dim, self.data_radius, c_max, self.tmax, self.spacing, self.margin)
    }

    /// `(Δt, steps per sample, number of samples after t = 0)`.
    pub fn schedule(&self, c_max: f64) -> (f64, usize, usize) {
        let dt_max = self.cfl * self.spacing / c_max;
        let per = (self.sample_interval / dt_max - 1e-9).ceil().max(1.0) as usize;
        let samples = (self.tmax / self.sample_interval - 1e-9).ceil() as usize;
        (self.sample_interval / per as f64, per, samples)
    }
}

/// Time-dependent source added to the right side of the `∂_t² u` equation.
pub type Forcing<'a> = &'a (dyn Fn(f64) -> Result<Field> + Sync);

fn acceleration(
    spec: &SystemSpec,
    s: &StateSnapshot,
    cfg: &SolverConfig,
    forcing: Option<Forcing<'_>>,
) -> Result<Field> {
    let f = forcing.map(|f| f(s.time())).transpose()?;
    spec.recover_utt_with(s, f.as_ref(), cfg.accuracy, cfg.boundary, cfg.cond_cap)
}

fn combine(base: &StateSnapshot, k: &(Field, Field), a: f64, t: f64) -> Result<StateSnapshot> {
    let mut u = base.u.clone();
    let mut v = base.v.clone();
    u.axpy(a, &k.0)?;
    v.axpy(a, &k.1)?;
    StateSnapshot::new(u.with_time(t), v.with_time(t))
}

/// One classical RK4 step of size `dt`.
pub fn step(
    spec: &SystemSpec,
    s: &StateSnapshot,
    dt: f64,
    cfg: &SolverConfig,
    forcing: Option<Forcing<'_>>,
) -> Result<StateSnapshot> {
    let t = s.time();
    let k1 = (s.v.clone(), acceleration(spec, s, cfg, forcing)?);
    let s2 = combine(s, &k1, 0.5 * dt, t + 0.5 * dt)?;
    let k2 = (s2.v.clone(), acceleration(spec, &s2, cfg, forcing)?);
    let s3 = combine(s, &k2, 0.5 * dt, t + 0.5 * dt)?;
    let k3 = (s3.v.clone(), acceleration(spec, &s3, cfg, forcing)?);
    let s4 = combine(s, &k3, dt, t + dt)?;
    let k4 = (s4.v.clone(), acceleration(spec, &s4, cfg, forcing)?);
    let mut u = s.u.clone();
    let mut v = s.v.clone();
    for (w, k) in [(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)] {
        u.axpy(w * dt / 6.0, &k.0)?;
        v.axpy(w * dt / 6.0, &k.1)?;
    }
    let next = StateSnapshot::new(u.with_time(t + dt), v.with_time(t + dt))?;
    let big = next.u.max_abs().max(next.v.max_abs());
    if !(big <= cfg.guard) {
        return Err(Error::BlowUp { time: t + dt, reason: format!("field magnitude {big:.3e}") });
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    BootstrapExit,
    Horizon,
    Guard,
}

impl ExitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitKind::BootstrapExit => "bootstrap_exit",
            ExitKind::Horizon => "horizon",
            ExitKind::Guard => "guard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifespanProbe {
    pub epsilon: f64,
    pub threshold: f64,
    pub t_star: f64,
    pub exit: ExitKind,
}

/// Energy trace columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyTrace {
    pub samples: Vec<Sample>,
    pub gronwall: Vec<f64>,
    /// ν in `Ẽ' ≤ C ⟨t⟩⁻¹ N_4^ν Ẽ`.
    pub nu: i32,
}

impl EnergyTrace {
    pub const HEADER: &'static str = "t,E4,Etilde4,N4,M4,equivalence_ratio,gronwall_ratio";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for (s, g) in self.samples.iter().zip(&self.gronwall) {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                s.t,
                s.energy.e4,
                s.energy.e4_modified,
                s.energy.e4.sqrt(),
                s.m4,
                s.equivalence_ratio(),
                g
            )?;
        }
        Ok(())
    }

    pub fn n4(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy.e4.sqrt()).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn max_gronwall(&self) -> f64 {
        self.gronwall.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest `|N_4(t) / N_4(0) - 1|` over the trace divided by its
    /// duration; zero for a zero or single-sample trace.
    pub fn n4_drift_rate(&self) -> f64 {
        let n4 = self.n4();
        let span = self.samples.last().map_or(0.0, |s| s.t) - self.samples.first().map_or(0.0, |s| s.t);
        if n4.is_empty() || n4[0] == 0.0 || span <= 0.0 {
            return 0.0;
        }
        n4.iter().map(|v| (v / n4[0] - 1.0).abs()).fold(0.0, f64::max) / span
    }
}

/// Per-sample containment record: support radius against the light-cone bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportRecord {
    pub t: f64,
    pub radius: f64,
    pub bound: f64,
    pub boundary_max: f64,
}

impl SupportRecord {
    pub fn contained(&self) -> bool {
        self.radius <= self.bound
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: EnergyTrace,
    pub probe: LifespanProbe,
    pub support: Vec<SupportRecord>,
    /// `(state, ∂_t² u)` at every sample when requested.
    pub snapshots: Vec<(StateSnapshot, Field)>,
    /// Message of the error that ended the run early, if any.
    pub aborted: Option<String>,
    pub dt: f64,
}

/// Integrates from `data` to `cfg.tmax`, sampling the monitors every
/// `cfg.sample_interval`. Errors during the run end it with a partial trace;
/// failures before the first sample are returned as errors.
pub fn run_with_monitor(
    data: &StateSnapshot,
    spec: &SystemSpec,
    cfg: &SolverConfig,
    forcing: Option<Forcing<'_>>,
) -> Result<RunResult> {
    cfg.validate()?;
    let check = SystemSpec::smallness_check(data, cfg.epsilon_star, cfg.accuracy)?;
    if !check.passes && !spec.is_linear() {
        return Err(Error::SmallnessViolated { value: check.max, threshold: check.threshold });
    }
    let c_max = spec.max_speed();
    let (dt, per, count) = cfg.schedule(c_max);
    let u0_max = data.u.max_abs().max(data.v.max_abs());
    let threshold_abs = cfg.support_threshold * u0_max;
    let h = data.grid().spacing();

    let mut state = data.clone();
    let mut samples = Vec::new();
    let mut support = Vec::new();
    let mut snapshots = Vec::new();
    let mut aborted = None;
    let mut exit = ExitKind::Horizon;

    let record = |state: &StateSnapshot,
                  samples: &mut Vec<Sample>,
                  support: &mut Vec<SupportRecord>,
                  snapshots: &mut Vec<(StateSnapshot, Field)>|
     -> Result<()> {
        let utt = acceleration(spec, state, cfg, forcing)?;
        samples.push(sample(state, &utt, spec, cfg.accuracy, cfg.monitor_m4)?);
        let t = state.time();
        support.push(SupportRecord {
            t,
            radius: state.u.support_radius(threshold_abs),
            bound: cfg.data_radius + c_max * t + 2.0 * h,
            boundary_max: state.u.boundary_max(2).max(state.v.boundary_max(2)),
        });
        if cfg.keep_snapshots {
            snapshots.push((state.clone(), utt));
        }
        Ok(())
    };

    record(&state, &mut samples, &mut support, &mut snapshots)?;
    let eps = samples[0].energy.e4.sqrt();
    'outer: for k in 1..=count {
        for _ in 0..per {
            match step(spec, &state, dt, cfg, forcing) {
                Ok(next) => state = next,
                Err(e) => {
                    exit = ExitKind::Guard;
                    aborted = Some(e.to_string());
                    break 'outer;
                }
            }
        }
        // pin the sample time to the schedule to avoid drift from summing dt
        let t = k as f64 * cfg.sample_interval;
        state = StateSnapshot::new(state.u.with_time(t), state.v.with_time(t))?;
        if let Err(e) = record(&state, &mut samples, &mut support, &mut snapshots) {
            exit = ExitKind::Guard;
            aborted = Some(e.to_string());
            break;
        }
        let n4 = samples.last().unwrap().energy.e4.sqrt();
        if n4 > 2.0 * eps && exit == ExitKind::Horizon {
            exit = ExitKind::BootstrapExit;
            if cfg.stop_at_exit {
                break;
            }
        }
    }

    let nu = match spec.degree() {
        crate::system::Degree::Quadratic => 1,
        crate::system::Degree::Cubic => 2,
    };
    let gronwall = gronwall_ratios(&samples, nu);
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let n4: Vec<f64> = samples.iter().map(|s| s.energy.e4.sqrt()).collect();
    let t_star = match exit {
        ExitKind::BootstrapExit => crossing_time(&times, &n4, 2.0 * eps).unwrap_or(cfg.tmax),
        ExitKind::Guard => *times.last().unwrap(),
        ExitKind::Horizon => cfg.tmax,
    };
    Ok(RunResult {
        trace: EnergyTrace { samples, gronwall, nu },
        probe: LifespanProbe { epsilon: eps, threshold: 2.0 * eps, t_star, exit },
        support,
        snapshots,
        aborted,
        dt,
    })
}

/// Linear interpolation between the last sample at or below `level` and the
/// first one above it.
pub fn crossing_time(t: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let k = y.iter().position(|v| *v > level)?;
    if k == 0 {
        return Some(t[0]);
    }
    let (t0, t1, y0, y1) = (t[k - 1], t[k], y[k - 1], y[k]);
    Some(t0 + (level - y0) / (y1 - y0) * (t1 - t0))
}

/// JSON sidecar describing a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunEcho<'a> {
    pub solver: &'a SolverConfig,
    pub epsilon: f64,
    pub family: &'a DataFamily,
    pub grid: Grid,
    pub dt: f64,
    pub probe: LifespanProbe,
    pub aborted: Option<&'a str>,
}
