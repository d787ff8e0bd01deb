mod common;

use common::manufactured_error;
use quasiwave::solver::{make_initial_data, run_with_monitor, DataFamily, SolverConfig};
use quasiwave::system::{Degree, SystemSpec};

/// The deviation is spatial, `O((h / r0)^4)`, so the window has to be long
/// enough to separate the first-sample jump from a secular trend.
#[test]
fn linear_generalized_energy_is_conserved() {
    let spec = SystemSpec::linear(2, vec![1.0, 0.6], Degree::Quadratic).unwrap();
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
    let run = run_with_monitor(&data, &spec, &cfg, None).unwrap();
    let rate = run.trace.n4_drift_rate();
    assert!(rate < 1e-6, "N4 drift {rate:e} per unit time");
}

#[test]
fn manufactured_solution_converges_at_fourth_order_in_time() {
    let mut spec = SystemSpec::linear(2, vec![1.0, 0.8], Degree::Quadratic).unwrap();
    spec.set_h(&[0, 0, 0, 0, 0], 1.0).unwrap();
    spec.set_g(&[0, 0, 0, 1, 0, 1], 0.5).unwrap();
    let spec = spec.symmetrized();
    let runs: Vec<(f64, f64)> = [0.8, 0.4, 0.2].iter().map(|&c| manufactured_error(&spec, c)).collect();
    let (coarse, fine) = (runs[0], runs[2]);
    assert!(coarse.0 / fine.0 > 3.5);
    let slope = (coarse.1 / fine.1).ln() / (coarse.0 / fine.0).ln();
    assert!(slope >= 3.5, "(dt, error) {runs:?}, slope {slope}");
}

#[test]
fn support_stays_inside_the_light_cone() {
    let spec = SystemSpec::linear(3, vec![1.0, 0.5], Degree::Quadratic).unwrap();
    let cfg = SolverConfig {
        spacing: 0.2,
        data_radius: 2.0,
        tmax: 1.0,
        sample_interval: 0.25,
        monitor_m4: false,
        ..Default::default()
    };
    let grid = cfg.grid_for(3, 1.0).unwrap();
    let data = make_initial_data(&DataFamily::PolynomialBump, 1e-2, 2.0, grid, 2).unwrap();
    let run = run_with_monitor(&data, &spec, &cfg, None).unwrap();
    assert_eq!(run.support.len(), 5);
    for rec in &run.support {
        assert!(rec.contained(), "{rec:?}");
    }
}

/// Grid-scale modes outrun the light cone, so a clean boundary layer needs
/// a margin that grows with the horizon.
#[test]
fn boundary_layer_stays_clean_with_a_wide_margin() {
    let spec = SystemSpec::linear(2, vec![1.0, 0.6], Degree::Quadratic).unwrap();
    let cfg = SolverConfig {
        spacing: 0.1,
        data_radius: 2.0,
        tmax: 3.0,
        sample_interval: 0.5,
        monitor_m4: false,
        margin: 48,
        ..Default::default()
    };
    let grid = cfg.grid_for(2, 1.0).unwrap();
    let data = make_initial_data(&DataFamily::PolynomialBump, 1e-2, 2.0, grid, 2).unwrap();
    let run = run_with_monitor(&data, &spec, &cfg, None).unwrap();
    for rec in &run.support {
        assert!(rec.contained(), "{rec:?}");
        assert!(rec.boundary_max < 1e-14, "{rec:?}");
    }
}
