mod common;

use std::io::Write;
use std::time::Instant;

use common::manufactured_error;
use quasiwave::algebra::commutator_suite;
use quasiwave::grid::{Accuracy, Grid};
use quasiwave::inequality::{
    check_m4_ratio, function_corpus, jet_corpus, run_function_corpus, run_jet_corpus, source_bound_with_norms,
    write_reports, InequalityKind, QUADRATURE_TOL,
};
use quasiwave::lifespan::{fit_scaling, run_sweep, summarize, FitModel, SweepConfig};
use quasiwave::norms::auxiliary_m4;
use quasiwave::solver::{make_initial_data, run_with_monitor, DataFamily, RunResult, SolverConfig};
use quasiwave::system::{Degree, SpecConfig, SystemSpec};

const QUADRATIC_3D: &str = include_str!("../../../configs/systems/quadratic-3d.toml");
const QUADRATIC_2D: &str = include_str!("../../../configs/systems/quadratic-2d.toml");
const CUBIC_2D: &str = include_str!("../../../configs/systems/cubic-2d.toml");
const SWEEP_QUADRATIC_2D: &str = include_str!("../../../configs/sweeps/quadratic-2d.toml");
const SWEEP_QUADRATIC_3D: &str = include_str!("../../../configs/sweeps/quadratic-3d.toml");
const SWEEP_CUBIC_2D: &str = include_str!("../../../configs/sweeps/cubic-2d.toml");

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn report(n: usize, v: &Verdict) {
    let status = if v.pass { "PASS" } else { "FAIL" };
    writeln!(std::io::stdout().lock(), "criterion {n}: {status} ({})", v.detail).unwrap();
}

fn spec(text: &str) -> SystemSpec {
    SpecConfig::from_toml_str(text).unwrap().build().unwrap()
}

fn simulate(spec: &SystemSpec, amplitude: f64, cfg: &SolverConfig) -> RunResult {
    let grid = cfg.grid_for(spec.dim(), spec.max_speed()).unwrap();
    let data = make_initial_data(&DataFamily::RadialBump, amplitude, cfg.data_radius, grid, spec.components()).unwrap();
    run_with_monitor(&data, spec, cfg, None).unwrap()
}

fn explicit_inequalities() -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = Vec::new();
    for (dim, points) in [(2, 257), (3, 97)] {
        let grid = Grid::new(dim, points, 2.0).unwrap();
        let functions = function_corpus(dim, 200, 0);
        let rows = run_function_corpus(
            &InequalityKind::explicit(dim),
            &functions,
            grid,
            "functions",
            Accuracy::Fourth,
            QUADRATURE_TOL,
        )
        .unwrap();
        for r in rows {
            worst.push(format!("{}d {} {:.4}", dim, r.kind, r.worst_ratio));
            if !r.pass {
                failures.push(format!("{} in {dim}d at {}", r.kind, r.argmax));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && elapsed < 120.0;
    Verdict::new(pass, format!("{}; {elapsed:.1} s; failures {:?}", worst.join(", "), failures))
}

fn existential_and_m4(cubic_run: &RunResult) -> Verdict {
    let speeds = [1.0, 0.6];
    let mut worst_change: f64 = 0.0;
    let mut finite = true;
    for (dim, jets, coarse) in [(2, 16, 129), (3, 4, 41)] {
        let probes = jet_corpus(dim, jets, 2, 0);
        let kinds = InequalityKind::existential(dim);
        let rows: Vec<_> = [coarse, 2 * coarse - 1]
            .iter()
            .map(|&m| {
                let grid = Grid::new(dim, m, 2.0).unwrap();
                run_jet_corpus(&kinds, &probes, grid, 1.0, &speeds, "jets", Accuracy::Fourth, QUADRATURE_TOL).unwrap()
            })
            .collect();
        for (c, f) in rows[0].iter().zip(&rows[1]) {
            finite &= c.worst_ratio.is_finite() && f.worst_ratio.is_finite();
            worst_change = worst_change.max((f.worst_ratio / c.worst_ratio - 1.0).abs());
        }
    }
    let samples: Vec<(f64, f64, f64)> =
        cubic_run.trace.samples.iter().map(|s| (s.t, s.energy.e4.sqrt(), s.m4)).collect();
    let m4 = check_m4_ratio(&samples);
    let pass = finite && worst_change < 0.05 && !m4.degenerate && m4.passes(0.5);
    Verdict::new(
        pass,
        format!(
            "refinement change {:.2}%, M4/N4 max {:.3} growth {:.1}%",
            100.0 * worst_change,
            m4.max_ratio,
            100.0 * m4.growth
        ),
    )
}

fn commutators() -> Verdict {
    let mut worst = 0.0_f64;
    let mut failing = Vec::new();
    for dim in [2, 3] {
        for c in commutator_suite(dim, 0, Accuracy::Fourth).unwrap() {
            worst = worst.max(c.residual);
            if !c.passes() {
                failing.push(format!("{}d {} {}", dim, c.check, c.worst_case));
            }
        }
    }
    Verdict::new(failing.is_empty(), format!("max residual {worst:.2e}; failing {failing:?}"))
}

fn solver_oracles() -> Verdict {
    let linear = SystemSpec::linear(2, vec![1.0, 0.6], Degree::Quadratic).unwrap();
    let cfg = SolverConfig {
        spacing: 0.05,
        data_radius: 4.0,
        tmax: 4.0,
        sample_interval: 0.25,
        monitor_m4: false,
        ..Default::default()
    };
    let grid = cfg.grid_for(2, 1.0).unwrap();
    let data = make_initial_data(&DataFamily::RandomBump { seed: 3 }, 1e-2, 4.0, grid, 2).unwrap();
    let drift_run = run_with_monitor(&data, &linear, &cfg, None).unwrap();
    let drift = drift_run.trace.n4_drift_rate();

    let mut forced = SystemSpec::linear(2, vec![1.0, 0.8], Degree::Quadratic).unwrap();
    forced.set_h(&[0, 0, 0, 0, 0], 1.0).unwrap();
    forced.set_g(&[0, 0, 0, 1, 0, 1], 0.5).unwrap();
    let forced = forced.symmetrized();
    let coarse = manufactured_error(&forced, 0.8);
    let fine = manufactured_error(&forced, 0.2);
    let slope = (coarse.1 / fine.1).ln() / (coarse.0 / fine.0).ln();

    let linear3 = SystemSpec::linear(3, vec![1.0, 0.5], Degree::Quadratic).unwrap();
    let cfg3 = SolverConfig { spacing: 0.2, data_radius: 2.0, tmax: 1.0, monitor_m4: false, ..Default::default() };
    let grid3 = cfg3.grid_for(3, 1.0).unwrap();
    let data3 = make_initial_data(&DataFamily::PolynomialBump, 1e-2, 2.0, grid3, 2).unwrap();
    let cone_run = run_with_monitor(&data3, &linear3, &cfg3, None).unwrap();
    let records: Vec<_> = drift_run.support.iter().chain(&cone_run.support).collect();
    let contained = records.iter().all(|r| r.contained());

    let pass = drift < 1e-6 && slope >= 3.5 && contained;
    Verdict::new(
        pass,
        format!(
            "N4 drift {drift:.2e}/unit time, manufactured slope {slope:.2}, contained at {}/{} samples",
            records.iter().filter(|r| r.contained()).count(),
            records.len()
        ),
    )
}

struct EnergyCheck {
    name: &'static str,
    equivalence: (f64, f64),
    gronwall: (f64, f64),
    lhs_slope: f64,
    rhs_slope: f64,
    finite: bool,
}

impl EnergyCheck {
    fn passes(&self) -> bool {
        self.equivalence.0 >= 2.0 / 3.0
            && self.equivalence.1 <= 1.5
            && (self.gronwall.1 / self.gronwall.0 - 1.0).abs() < 0.3
            && self.finite
            && (self.lhs_slope - self.rhs_slope).abs() < 0.3
    }

    fn describe(&self) -> String {
        format!(
            "{}: equivalence [{:.4}, {:.4}], Gronwall max {:.3} vs {:.3}, source slope {:.2} vs bound slope {:.2}",
            self.name,
            self.equivalence.0,
            self.equivalence.1,
            self.gronwall.0,
            self.gronwall.1,
            self.lhs_slope,
            self.rhs_slope
        )
    }
}

/// Runs at `ε` and `ε/2` and compares the source bound at `t = 1`.
fn energy_check(name: &'static str, spec: &SystemSpec, runs: [&RunResult; 2]) -> EnergyCheck {
    let mut equivalence = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sides = Vec::new();
    for run in runs {
        for s in &run.trace.samples {
            let r = s.equivalence_ratio();
            equivalence = (equivalence.0.min(r), equivalence.1.max(r));
        }
        let k = run.trace.samples.iter().position(|s| (s.t - 1.0).abs() < 1e-9).unwrap();
        let (state, utt) = &run.snapshots[k];
        let n4 = run.trace.samples[k].energy.e4.sqrt();
        let m4 = auxiliary_m4(state, spec.speeds(), Accuracy::Fourth).unwrap();
        let l = source_bound_with_norms(spec, state, utt, n4, m4, Accuracy::Fourth).unwrap();
        sides.push((run.probe.epsilon, l.lhs, l.rhs, l.ratio));
    }
    let eps = (sides[0].0 / sides[1].0).ln();
    EnergyCheck {
        name,
        equivalence,
        gronwall: (runs[0].trace.max_gronwall(), runs[1].trace.max_gronwall()),
        lhs_slope: (sides[0].1 / sides[1].1).ln() / eps,
        rhs_slope: (sides[0].2 / sides[1].2).ln() / eps,
        finite: sides.iter().all(|s| s.3.is_finite()),
    }
}

fn energy_checks(cubic: &SystemSpec, cubic_runs: [&RunResult; 2]) -> Verdict {
    let quadratic = spec(QUADRATIC_3D);
    let cfg = SolverConfig {
        spacing: 0.2,
        data_radius: 2.0,
        tmax: 1.5,
        sample_interval: 0.5,
        monitor_m4: false,
        keep_snapshots: true,
        ..Default::default()
    };
    let a = simulate(&quadratic, 1e-4, &cfg);
    let b = simulate(&quadratic, 5e-5, &cfg);
    let checks = [energy_check("3d quadratic", &quadratic, [&a, &b]), energy_check("2d cubic", cubic, cubic_runs)];
    let pass = checks.iter().all(EnergyCheck::passes);
    Verdict::new(pass, checks.iter().map(EnergyCheck::describe).collect::<Vec<_>>().join("; "))
}

fn lifespans() -> Verdict {
    let mut details = Vec::new();
    let mut pass = true;

    let cfg = SweepConfig::from_toml_str(SWEEP_QUADRATIC_2D).unwrap();
    let ratios: Vec<f64> = cfg.amplitudes.windows(2).map(|w| w[1] / w[0]).collect();
    let geometric = ratios.iter().all(|r| (r / ratios[0] - 1.0).abs() < 0.01);
    let record = run_sweep(&cfg).unwrap();
    let summary = summarize(&record, cfg.fit);
    let ladder = geometric && summary.uncensored >= 4 && summary.monotonicity.strict;
    pass &= ladder && summary.pass;
    match summary.fit.fit() {
        Some(f) => details.push(format!(
            "2d quadratic: {} points, exponent {:.3}, R² {:.4}",
            summary.uncensored, f.rate, f.r_squared
        )),
        None => details.push("2d quadratic: fit inconclusive".to_string()),
    }

    for (name, text) in [("3d quadratic", SWEEP_QUADRATIC_3D), ("2d cubic", SWEEP_CUBIC_2D)] {
        let cfg = SweepConfig::from_toml_str(text).unwrap();
        let record = run_sweep(&cfg).unwrap();
        let mono = record.monotonicity();
        pass &= mono.points >= 3 && mono.strict;
        let fit = match fit_scaling(&record, cfg.fit) {
            outcome @ quasiwave::lifespan::FitOutcome::Inconclusive { .. } => format!("{outcome:?}"),
            outcome => {
                let f = outcome.fit().unwrap();
                let nu = match f.model {
                    FitModel::ExpInversePower { nu } => nu,
                    FitModel::PowerLaw => 0.0,
                };
                format!("T_* ≈ {:.3} exp({:.4} ε^-{nu}), R² {:.4}", f.prefactor, f.rate, f.r_squared)
            }
        };
        details.push(format!("{name}: {} uncensored, strictly increasing {}, {fit}", mono.points, mono.strict));
    }
    Verdict::new(pass, details.join("; "))
}

fn csv_bytes(threads: usize) -> Vec<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let quadratic = spec(QUADRATIC_2D);
        let cfg = SolverConfig { spacing: 0.1, data_radius: 2.0, tmax: 1.0, ..Default::default() };
        let run = simulate(&quadratic, 3e-3, &cfg);
        let mut trace = Vec::new();
        run.trace.write_csv(&mut trace).unwrap();

        let grid = Grid::new(2, 129, 2.0).unwrap();
        let functions = function_corpus(2, 20, 0);
        let mut rows = run_function_corpus(
            &InequalityKind::explicit(2),
            &functions,
            grid,
            "functions",
            Accuracy::Fourth,
            QUADRATURE_TOL,
        )
        .unwrap();
        let jets = jet_corpus(2, 2, 2, 0);
        let jet_grid = Grid::new(2, 65, 2.0).unwrap();
        rows.extend(
            run_jet_corpus(
                &InequalityKind::existential(2),
                &jets,
                jet_grid,
                1.0,
                &[1.0, 0.6],
                "jets",
                Accuracy::Fourth,
                QUADRATURE_TOL,
            )
            .unwrap(),
        );
        let mut inequalities = Vec::new();
        write_reports(&rows, &mut inequalities).unwrap();

        let mut sweep_cfg = SweepConfig::from_toml_str(SWEEP_QUADRATIC_2D).unwrap();
        sweep_cfg.solver.spacing = 0.2;
        sweep_cfg.solver.tmax = 2.0;
        let mut sweep = Vec::new();
        run_sweep(&sweep_cfg).unwrap().write_csv(&mut sweep).unwrap();
        vec![trace, inequalities, sweep]
    })
}

fn determinism() -> Verdict {
    let reference = csv_bytes(1);
    let mut identical = true;
    for threads in [2, 4] {
        identical &= csv_bytes(threads) == reference;
    }
    let sizes: Vec<usize> = reference.iter().map(Vec::len).collect();
    Verdict::new(identical, format!("trace, inequality and sweep CSVs ({sizes:?} bytes) at 1, 2 and 4 threads"))
}

#[test]
fn acceptance() {
    let cubic = spec(CUBIC_2D);
    let cubic_cfg = SolverConfig {
        spacing: 0.1,
        data_radius: 2.0,
        tmax: 3.0,
        sample_interval: 0.5,
        keep_snapshots: true,
        ..Default::default()
    };
    let cubic_a = simulate(&cubic, 3e-3, &cubic_cfg);
    let cubic_b = simulate(&cubic, 1.5e-3, &cubic_cfg);

    let verdicts = [
        explicit_inequalities(),
        existential_and_m4(&cubic_b),
        commutators(),
        solver_oracles(),
        energy_checks(&cubic, [&cubic_a, &cubic_b]),
        lifespans(),
        determinism(),
    ];
    for (n, v) in verdicts.iter().enumerate() {
        report(n + 1, v);
    }
    let failed: Vec<usize> = verdicts.iter().enumerate().filter(|(_, v)| !v.pass).map(|(n, _)| n + 1).collect();
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
