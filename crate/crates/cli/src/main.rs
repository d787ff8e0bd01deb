use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use quasiwave::algebra::{commutator_suite, write_checks};
use quasiwave::grid::{Accuracy, Grid};
use quasiwave::inequality::{
    function_corpus, jet_corpus, run_function_corpus, run_jet_corpus, write_reports, InequalityKind, QUADRATURE_TOL,
};
use quasiwave::lifespan::{run_sweep, summarize, SweepConfig};
use quasiwave::solver::{make_initial_data, run_with_monitor, DataFamily, RunEcho, SolverConfig};
use quasiwave::system::SpecConfig;
use quasiwave::Error;

/// Linear runs must keep `N_4` within this relative drift per unit time.
const DRIFT_BUDGET: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "quasiwave", version, about = "Quasi-linear multi-speed wave laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    RadialBump,
    PolynomialBump,
    RandomBump,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve one data set and write its energy trace.
    Simulate {
        /// System TOML (dim, speeds, degree, g/h entries).
        #[arg(long)]
        spec: PathBuf,
        /// Data amplitude.
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "radial-bump")]
        family: Family,
        /// Seed for `random-bump` data.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        data_radius: Option<f64>,
        #[arg(long)]
        sample_interval: Option<f64>,
    },
    /// Run a lifespan sweep and fit its scaling law.
    LifespanSweep {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Worst constants of the inequality kinds over seeded corpora.
    VerifyInequalities {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        dim: u8,
        #[arg(long, default_value_t = 200)]
        corpus_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Nodes per axis for the function corpus (257 in 2D, 97 in 3D).
        #[arg(long)]
        points: Option<usize>,
        /// Number of jets for the existential kinds (16 in 2D, 4 in 3D).
        #[arg(long)]
        jets: Option<usize>,
        /// Nodes per axis for the jet corpus (129 in 2D, 41 in 3D).
        #[arg(long)]
        jet_points: Option<usize>,
    },
    /// Commutator identities on polynomial jets.
    CheckCommutators {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        dim: u8,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad input or unwritable output; exit status 1.
    Config(String),
    /// The pipeline ran but a check failed; exit status 2.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Io(_)
            | Error::InvalidGrid(_)
            | Error::GridTooSmall { .. }
            | Error::SupportExceedsGrid { .. } => Failure::Config(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

type Outcome = Result<Vec<String>, Failure>;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_with(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), Failure> {
    let mut w = create(dir, name)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Failure::Config(format!("{}: {e}", dir.join(name).display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Failure> {
    write_with(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn prepare(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::Config(format!("{}: {e}", out.display())))
}

fn family(f: Family, seed: u64) -> DataFamily {
    match f {
        Family::RadialBump => DataFamily::RadialBump,
        Family::PolynomialBump => DataFamily::PolynomialBump,
        Family::RandomBump => DataFamily::RandomBump { seed },
    }
}

#[derive(Serialize)]
struct SimulateEcho<'a> {
    spec: &'a SpecConfig,
    run: RunEcho<'a>,
    n4_drift_rate: f64,
    contained: bool,
    failures: &'a [String],
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    spec_path: &Path,
    epsilon: f64,
    tmax: f64,
    out: &Path,
    fam: Family,
    seed: u64,
    spacing: Option<f64>,
    data_radius: Option<f64>,
    sample_interval: Option<f64>,
) -> Outcome {
    let spec_cfg = SpecConfig::load(spec_path)?;
    let spec = spec_cfg.build().map_err(|e| Failure::Config(format!("{}: {e}", spec_path.display())))?;
    let defaults = SolverConfig::default();
    let cfg = SolverConfig {
        tmax,
        spacing: spacing.unwrap_or(defaults.spacing),
        data_radius: data_radius.unwrap_or(defaults.data_radius),
        sample_interval: sample_interval.unwrap_or(defaults.sample_interval),
        ..defaults
    };
    cfg.validate()?;
    prepare(out)?;
    let data_family = family(fam, seed);
    let grid = cfg.grid_for(spec.dim(), spec.max_speed())?;
    let data = make_initial_data(&data_family, epsilon, cfg.data_radius, grid, spec.components())?;
    let run = run_with_monitor(&data, &spec, &cfg, None)?;
    write_with(out, "trace.csv", |w| run.trace.write_csv(w))?;
    write_with(out, "support.csv", |w| {
        writeln!(w, "t,radius,bound,boundary_max")?;
        for r in &run.support {
            writeln!(w, "{:?},{:?},{:?},{:?}", r.t, r.radius, r.bound, r.boundary_max)?;
        }
        Ok(())
    })?;

    let mut failures = Vec::new();
    if let Some(a) = &run.aborted {
        failures.push(format!("run aborted: {a}"));
    }
    let contained = run.support.iter().all(|r| r.contained());
    if !contained {
        failures.push("support left the light cone".into());
    }
    let drift = run.trace.n4_drift_rate();
    if spec.is_linear() && drift >= DRIFT_BUDGET {
        failures.push(format!("N4 drift {drift:e} per unit time exceeds {DRIFT_BUDGET:e}"));
    }
    let echo = SimulateEcho {
        spec: &spec_cfg,
        run: RunEcho {
            solver: &cfg,
            epsilon,
            family: &data_family,
            grid,
            dt: run.dt,
            probe: run.probe,
            aborted: run.aborted.as_deref(),
        },
        n4_drift_rate: drift,
        contained,
        failures: &failures,
    };
    write_json(out, "run.json", &echo)?;
    Ok(failures)
}

fn lifespan(sweep: &Path, out: &Path) -> Outcome {
    let cfg = SweepConfig::load(sweep)?;
    cfg.validate().map_err(|e| Failure::Config(format!("{}: {e}", sweep.display())))?;
    prepare(out)?;
    write_json(out, "config.json", &cfg)?;
    let record = run_sweep(&cfg)?;
    write_with(out, "lifespan.csv", |w| record.write_csv(w))?;
    let summary = summarize(&record, cfg.fit);
    write_json(out, "fit.json", &summary)?;
    let mut failures = Vec::new();
    if !summary.monotonicity.holds() {
        failures.push(format!("{} lifespan inversions", summary.monotonicity.inversions));
    }
    if !summary.pass && summary.monotonicity.holds() {
        failures.push("fitted scaling law outside the accepted window".into());
    }
    Ok(failures)
}

#[derive(Serialize)]
struct InequalityEcho {
    dim: usize,
    corpus_size: usize,
    seed: u64,
    points: usize,
    jets: usize,
    jet_points: usize,
    tolerance: f64,
    speeds: [f64; 2],
}

fn inequalities(
    dim: usize,
    corpus_size: usize,
    seed: u64,
    out: &Path,
    points: Option<usize>,
    jets: Option<usize>,
    jet_points: Option<usize>,
) -> Outcome {
    let echo = InequalityEcho {
        dim,
        corpus_size,
        seed,
        points: points.unwrap_or(if dim == 2 { 257 } else { 97 }),
        jets: jets.unwrap_or(if dim == 2 { 16 } else { 4 }),
        jet_points: jet_points.unwrap_or(if dim == 2 { 129 } else { 41 }),
        tolerance: QUADRATURE_TOL,
        speeds: [1.0, 0.6],
    };
    if corpus_size == 0 || echo.jets == 0 {
        return Err(Failure::Config("corpus sizes must be positive".into()));
    }
    prepare(out)?;
    write_json(out, "config.json", &echo)?;
    let acc = Accuracy::Fourth;
    let grid = Grid::new(dim, echo.points, 2.0)?;
    let functions = function_corpus(dim, corpus_size, seed);
    let mut rows =
        run_function_corpus(&InequalityKind::explicit(dim), &functions, grid, "functions", acc, QUADRATURE_TOL)?;
    let failures: Vec<String> =
        rows.iter().filter(|r| !r.pass).map(|r| format!("{} worst ratio {}", r.kind, r.worst_ratio)).collect();
    let jet_grid = Grid::new(dim, echo.jet_points, 2.0)?;
    let probes = jet_corpus(dim, echo.jets, 2, seed);
    rows.extend(run_jet_corpus(
        &InequalityKind::existential(dim),
        &probes,
        jet_grid,
        1.0,
        &echo.speeds,
        "jets",
        acc,
        QUADRATURE_TOL,
    )?);
    write_with(out, "inequalities.csv", |w| write_reports(&rows, w))?;
    Ok(failures)
}

fn commutators(dim: usize, seed: u64, out: &Path) -> Outcome {
    prepare(out)?;
    write_json(out, "config.json", &serde_json::json!({ "dim": dim, "seed": seed }))?;
    let checks = commutator_suite(dim, seed, Accuracy::Fourth)?;
    write_with(out, "commutators.csv", |w| write_checks(w, &checks))?;
    Ok(checks
        .iter()
        .filter(|c| !c.passes())
        .map(|c| format!("{} residual {:e} at {}", c.check, c.residual, c.worst_case))
        .collect())
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Simulate { spec, epsilon, tmax, out, family, seed, spacing, data_radius, sample_interval } => {
            simulate(&spec, epsilon, tmax, &out, family, seed, spacing, data_radius, sample_interval)
        }
        Command::LifespanSweep { sweep, out } => lifespan(&sweep, &out),
        Command::VerifyInequalities { dim, corpus_size, seed, out, points, jets, jet_points } => {
            inequalities(dim as usize, corpus_size, seed, &out, points, jets, jet_points)
        }
        Command::CheckCommutators { dim, out, seed } => commutators(dim as usize, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
    }
}
