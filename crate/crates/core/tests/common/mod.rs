use quasiwave::grid::{laplacian_closed, Accuracy, Closure, Field, StateSnapshot};
use quasiwave::solver::{run_with_monitor, SolverConfig};
use quasiwave::system::SystemSpec;

fn bump(x: &[f64], r0: f64) -> f64 {
    let s = 1.0 - x.iter().map(|v| v * v).sum::<f64>() / (r0 * r0);
    if s > 0.0 {
        s.powi(8)
    } else {
        0.0
    }
}

/// `u = a cos(t) φ(x)` with the forcing that makes it exact for the
/// continuous system; the nonlinear terms enter through the discrete
/// right side evaluated on the exact state.
pub fn manufactured_error(spec: &SystemSpec, cfl: f64) -> (f64, f64) {
    let a = 1e-3;
    let r0 = 2.0;
    let cfg = SolverConfig {
        cfl,
        spacing: 0.1,
        data_radius: r0,
        tmax: 1.0,
        sample_interval: 1.0,
        monitor_m4: false,
        keep_snapshots: true,
        ..Default::default()
    };
    let grid = cfg.grid_for(2, spec.max_speed()).unwrap();
    let n = spec.components();
    let phi = Field::from_fn(grid, n, 0.0, |x, _| a * bump(x, r0));
    let speeds = spec.speeds().to_vec();
    let lap = laplacian_closed(&phi, Accuracy::Fourth, Closure::ZeroExtension).unwrap();
    let exact = |t: f64| {
        let u = phi.scaled(t.cos()).with_time(t);
        let v = phi.scaled(-t.sin()).with_time(t);
        StateSnapshot::new(u, v).unwrap()
    };
    let forcing = |t: f64| -> quasiwave::Result<Field> {
        let s = exact(t);
        let utt = phi.scaled(-t.cos()).with_time(t);
        let nonlinear = spec.rhs_spatial_with(&s, &utt, Accuracy::Fourth, Closure::ZeroExtension)?;
        let len = grid.len();
        let mut f = utt.data().to_vec();
        for l in 0..n {
            for p in 0..len {
                let k = l * len + p;
                f[k] -= speeds[l] * speeds[l] * t.cos() * lap.data()[k] + nonlinear.data()[k];
            }
        }
        Field::new(grid, n, t, f)
    };
    let run = run_with_monitor(&exact(0.0), spec, &cfg, Some(&forcing)).unwrap();
    assert!(run.aborted.is_none());
    let (last, _) = run.snapshots.last().unwrap();
    (run.dt, last.u.sub(&exact(1.0).u).unwrap().max_abs() / a)
}
