//! Command-line driver: `run`, `check-gradient`, `estimate-rates` and
//! `export-mesh`.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use config::{ProblemKind, RunConfig, Settings};

use crate::error::{Error, Result};
use crate::mesh::{CellField, Mesh};
use crate::problems::{
    check_poisson, check_topology, estimate_rates, format_rates, max_error, FdSample, NoisyQuadratic, PoissonControl,
    RatesConfig, TopologyProblem,
};
use crate::prox::Prox;
use crate::tr::{run_with, write_history_csv, Oracle, RunReport, Status};
use crate::vtk::write_vtk_file;

/// Relative finite-difference thresholds for `check-gradient`.
pub const POISSON_FD_TOL: f64 = 1e-5;
pub const TOPOLOGY_FD_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "tr-afem", version, about = "Adaptive finite elements inside an inexact proximal trust-region method")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured problem.
    Run(CommonArgs),
    /// Compare gradients against central differences on the initial mesh.
    CheckGradient {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of random points.
        #[arg(long, default_value_t = 5)]
        points: usize,
    },
    /// Uniform-refinement error and estimator rates for a manufactured solution.
    EstimateRates(CommonArgs),
    /// Write the initial mesh of the configured problem as VTK.
    ExportMesh(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat key=value configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Write iter_####.vtk every N iterations (0 disables).
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub snapshot_stride: usize,
    /// Override a configuration entry.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl CommonArgs {
    pub fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        for pair in &self.set {
            s.set(pair)?;
        }
        Ok(s)
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Run(a) => cmd_run(a),
        Command::CheckGradient { common, points } => cmd_check_gradient(common, *points),
        Command::EstimateRates(a) => cmd_estimate_rates(a),
        Command::ExportMesh(a) => cmd_export_mesh(a),
    }
}

/// Values reported in `summary.txt`.
#[derive(Clone, Debug)]
pub struct Summary {
    pub problem: String,
    pub status: String,
    pub iterations: Option<usize>,
    pub final_psi: Option<f64>,
    pub final_dofs: Option<usize>,
    pub final_value: Option<f64>,
    pub wall_time: f64,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl Summary {
    pub fn render(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "n/a".into());
        let mut s = String::new();
        let _ = writeln!(s, "problem = {}", self.problem);
        let _ = writeln!(s, "status = {}", self.status);
        let _ = writeln!(s, "iterations = {}", opt(self.iterations.map(|v| v.to_string())));
        let _ = writeln!(s, "final_psi = {}", opt(self.final_psi.map(|v| format!("{v:e}"))));
        let _ = writeln!(s, "final_dofs = {}", opt(self.final_dofs.map(|v| v.to_string())));
        let _ = writeln!(s, "final_value = {}", opt(self.final_value.map(|v| format!("{v:e}"))));
        let _ = writeln!(s, "wall_time_s = {:.3}", self.wall_time);
        let _ = writeln!(
            s,
            "warnings = {}",
            if self.warnings.is_empty() { "none".into() } else { self.warnings.join("; ") }
        );
        let _ = writeln!(s, "error = {}", self.error.as_deref().unwrap_or("none"));
        s
    }
}

fn status_code(status: Status) -> i32 {
    match status {
        Status::Converged => 0,
        Status::IterationCap => 2,
    }
}

pub fn cmd_run(args: &CommonArgs) -> Result<i32> {
    let start = Instant::now();
    let settings = args.settings()?;
    let cfg = RunConfig::resolve(&settings)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("config.txt"), cfg.manifest())?;
    let mut summary = Summary {
        problem: cfg.problem.name().into(),
        status: "error".into(),
        iterations: None,
        final_psi: None,
        final_dofs: None,
        final_value: None,
        wall_time: 0.0,
        warnings: Vec::new(),
        error: None,
    };
    let outcome = run_problem(&cfg, &args.out, args.snapshot_stride);
    summary.wall_time = start.elapsed().as_secs_f64();
    let code = match outcome {
        Ok(r) => {
            summary.status = r.status.name().to_string();
            summary.iterations = Some(r.iterations);
            summary.final_psi = Some(r.final_psi);
            summary.final_dofs = Some(r.final_dofs);
            summary.final_value = Some(r.final_value);
            summary.warnings = r.warnings;
            status_code(r.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            summary.error = Some(e.to_string());
            1
        }
    };
    fs::write(args.out.join("summary.txt"), summary.render())?;
    print!("{}", summary.render());
    Ok(code)
}

/// Outcome of a run without the problem-specific control type.
pub struct RunOutcome {
    pub status: Status,
    pub iterations: usize,
    pub final_psi: f64,
    pub final_dofs: usize,
    pub final_value: f64,
    pub warnings: Vec<String>,
}

impl<C> From<RunReport<C>> for RunOutcome {
    fn from(r: RunReport<C>) -> Self {
        Self {
            status: r.status,
            iterations: r.iterations,
            final_psi: r.final_psi,
            final_dofs: r.final_dofs,
            final_value: r.final_value,
            warnings: r.warnings,
        }
    }
}

fn snapshot_path(out: &Path, k: usize) -> PathBuf {
    out.join(format!("iter_{k:04}.vtk"))
}

/// Runs the configured problem, writing `history.csv` and snapshots.
pub fn run_problem(cfg: &RunConfig, out: &Path, stride: usize) -> Result<RunOutcome> {
    match cfg.problem {
        ProblemKind::Poisson => {
            let mut oracle = PoissonControl::new(cfg.poisson.clone())?;
            let prox = cfg.poisson.prox();
            let z0 = oracle.initial_control();
            drive(&mut oracle, &prox, z0, cfg, out, stride, poisson_snapshot)
        }
        ProblemKind::Topology(_) => {
            let mut oracle = TopologyProblem::new(cfg.topology.clone())?;
            let prox = oracle.prox();
            let z0 = oracle.initial_control();
            drive(&mut oracle, &prox, z0, cfg, out, stride, topology_snapshot)
        }
        ProblemKind::Synthetic => {
            let mut oracle = NoisyQuadratic::standard(cfg.noise, cfg.seed);
            let z0 = oracle.start([3.0, 3.0]);
            drive(&mut oracle, &Prox::Zero, z0, cfg, out, 0, |_, _, _| Ok(()))
        }
    }
}

fn drive<O: Oracle>(
    oracle: &mut O,
    prox: &Prox,
    z0: O::Control,
    cfg: &RunConfig,
    out: &Path,
    stride: usize,
    snapshot: impl Fn(&O, &O::Control, &Path) -> Result<()>,
) -> Result<RunOutcome> {
    let report = run_with(oracle, prox, z0, &cfg.params, |o, rec, z| {
        if stride > 0 && rec.k % stride == 0 {
            snapshot(o, z, &snapshot_path(out, rec.k))?;
        }
        Ok(())
    })?;
    if stride > 0 {
        snapshot(oracle, &report.control, &snapshot_path(out, report.iterations))?;
    }
    let mut w = BufWriter::new(File::create(out.join("history.csv"))?);
    write_history_csv(&mut w, &report.history)?;
    w.flush()?;
    Ok(report.into())
}

fn poisson_snapshot(p: &PoissonControl, z: &CellField, path: &Path) -> Result<()> {
    let st = p.state(z)?;
    let u = st.u.vertex_values();
    write_vtk_file(path, z.mesh(), &[("z", z.values())], &[("u", &u)])
}

fn topology_snapshot(p: &TopologyProblem, z: &CellField, path: &Path) -> Result<()> {
    let (rho, _) = p.filter_solve(z)?;
    let (u, _, _) = p.state_solve(&rho)?;
    let (rho, u) = (rho.vertex_values(), u.vertex_values());
    write_vtk_file(path, z.mesh(), &[("z", z.values())], &[("rho", &rho), ("u", &u)])
}

/// Gradient check on the configured problem's initial mesh. Topology
/// problems default to an 8-cell grid unless `grid` is set.
pub fn check_gradient(settings: &Settings, points: usize) -> Result<(Vec<FdSample>, f64)> {
    let cfg = RunConfig::resolve(settings)?;
    match cfg.problem {
        ProblemKind::Poisson => {
            let p = PoissonControl::new(cfg.poisson)?;
            Ok((check_poisson(&p, points, cfg.seed)?, POISSON_FD_TOL))
        }
        ProblemKind::Topology(_) => {
            let mut tc = cfg.topology;
            if !settings.contains("grid") {
                tc.grid = 8;
            }
            let p = TopologyProblem::new(tc)?;
            Ok((check_topology(&p, points, cfg.seed)?, TOPOLOGY_FD_TOL))
        }
        ProblemKind::Synthetic => Err(Error::Config("check-gradient needs a PDE problem".into())),
    }
}

pub fn cmd_check_gradient(args: &CommonArgs, points: usize) -> Result<i32> {
    let (samples, tol) = check_gradient(&args.settings()?, points)?;
    for (i, s) in samples.iter().enumerate() {
        println!(
            "point {i}: <g,d> = {:+.12e}  fd = {:+.12e}  rel = {:.3e}",
            s.analytic, s.finite_difference, s.relative_error
        );
    }
    let worst = max_error(&samples);
    let pass = worst <= tol;
    println!("max relative error {worst:.3e} (tolerance {tol:.0e}): {}", if pass { "pass" } else { "FAIL" });
    Ok(if pass { 0 } else { 1 })
}

pub fn cmd_estimate_rates(args: &CommonArgs) -> Result<i32> {
    let cfg = RunConfig::resolve(&args.settings()?)?;
    let degrees = match cfg.degree {
        Some(d) => vec![d],
        None => vec![1, 2],
    };
    for degree in degrees {
        let rows = estimate_rates(&RatesConfig {
            degree,
            refinements: cfg.refinements,
            grid: cfg.rates_grid,
            ..RatesConfig::default()
        })?;
        println!("P{degree}");
        print!("{}", format_rates(&rows));
    }
    Ok(0)
}

/// Initial mesh of the configured problem.
pub fn initial_mesh(cfg: &RunConfig) -> Result<Arc<Mesh>> {
    match cfg.problem {
        ProblemKind::Poisson => Ok(Arc::clone(PoissonControl::new(cfg.poisson.clone())?.mesh())),
        ProblemKind::Topology(_) => Ok(Arc::clone(TopologyProblem::new(cfg.topology.clone())?.mesh())),
        ProblemKind::Synthetic => Err(Error::Config("the synthetic problem has no mesh".into())),
    }
}

pub fn cmd_export_mesh(args: &CommonArgs) -> Result<i32> {
    let cfg = RunConfig::resolve(&args.settings()?)?;
    let mesh = initial_mesh(&cfg)?;
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("mesh.vtk");
    write_vtk_file(&path, &mesh, &[("area", mesh.areas())], &[])?;
    let st = mesh.stats();
    println!(
        "{}: {} cells, {} vertices, h in [{:.4e}, {:.4e}], min angle {:.2} deg -> {}",
        cfg.problem.name(),
        st.cell_count,
        st.vertex_count,
        st.h_min,
        st.h_max,
        st.min_angle,
        path.display()
    );
    Ok(0)
}
