//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{self, FitWindow, LimitPrediction, SingularityReport};
use crate::config::{ConfigError, RunConfig};
use crate::geometry::{self, GraphPoint};
use crate::profile::{AsymptoticFlags, Cone, CriticalPoint, Region, SupportProfile, Window};
use crate::solver::{self, EventKind, FlowState, RunOutcome, Snapshot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const TRAJECTORY_HEADER: &str = "t,r,sup_A2,sup_H,area,boundary_grad,u_min,u_max";

#[derive(Debug, Parser)]
#[command(name = "fbflow", version, about = "Free-boundary mean curvature flow of rotationally symmetric graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record monitors every N steps; overrides `stride` in the config.
    #[arg(long, global = true)]
    pub stride: Option<u64>,
    /// Suppress the console summary.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Critical points, pinch points and neck/belly regions of the support.
    Classify,
    /// Run the flow and export the trajectory.
    Evolve,
    /// Run the flow and classify its singularity.
    Singularity,
    /// Run two ordered flows and report the swept and residual bands.
    Foliate,
    /// Check the geometry routines against closed-form surfaces.
    GeometryCheck,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("fbflow: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if cli.command == Command::GeometryCheck {
        return geometry_check(cli);
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(stride) = cli.stride {
        if stride == 0 {
            return Err(CliError::Config("--stride must be positive".into()));
        }
        cfg.schedule.stride = stride;
    }
    // Initial data is validated here, before any output or compute.
    match cli.command {
        Command::Evolve | Command::Singularity => {
            cfg.initial_state()?;
        }
        Command::Foliate => {
            cfg.initial_pair()?;
        }
        _ => {}
    }
    fs::create_dir_all(&cfg.out).map_err(|e| runtime(format!("{}: {e}", cfg.out.display())))?;
    match cli.command {
        Command::Classify => classify(&cfg, cli.quiet),
        Command::Evolve => evolve(&cfg, cli.quiet).map(|_| ()),
        Command::Singularity => singularity(&cfg, cli.quiet),
        Command::Foliate => foliate(&cfg, cli.quiet),
        Command::GeometryCheck => unreachable!(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn to_toml(value: &impl Serialize) -> Result<String, CliError> {
    toml::to_string(value).map_err(runtime)
}

#[derive(Serialize)]
struct ClassifyReport {
    kind: &'static str,
    window: Window,
    graph_constant: Option<f64>,
    gradient_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph_condition_error: Option<String>,
    long_time_hypotheses: bool,
    asymptotics: AsymptoticFlags,
    pinch_points: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contact_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contact_angle_equilibria: Option<Vec<f64>>,
    critical_points: Vec<CriticalPoint>,
    regions: Vec<Region>,
}

fn classify(cfg: &RunConfig, quiet: bool) -> Result<(), CliError> {
    let p = &cfg.profile;
    let w = p.window();
    let d = p.classify_regions(w).map_err(runtime)?;
    let (graph_constant, graph_condition_error) = match p.graph_constant(w) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let equilibria = match cfg.contact_angle {
        Some(a) => Some(p.contact_angle_equilibria(w, a).map_err(runtime)?),
        None => None,
    };
    let asymptotics = p.check_asymptotics();
    let report = ClassifyReport {
        kind: p.kind(),
        window: w,
        graph_constant,
        gradient_bound: graph_constant.and_then(|c| geometry::boundary_gradient_bound(c).ok()),
        graph_condition_error,
        long_time_hypotheses: asymptotics.long_time_hypotheses(),
        asymptotics,
        pinch_points: d.pinch_points,
        contact_angle: cfg.contact_angle,
        contact_angle_equilibria: equilibria,
        critical_points: d.critical_points,
        regions: d.regions,
    };
    let text = to_toml(&report)?;
    write_file(&cfg.out.join("regions.txt"), &text)?;
    if !quiet {
        print!("{text}");
    }
    Ok(())
}

/// Seventeen significant digits, enough to round-trip every `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_csv(records: &[analysis::TimeSeriesRecord]) -> String {
    let mut s = String::with_capacity(records.len() * 200);
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for r in records {
        let row = [r.t, r.r, r.sup_a2, r.sup_h, r.area, r.boundary_grad, r.u_min, r.u_max];
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn snapshot_csv(snap: &Snapshot) -> String {
    let mut s = String::from("y,u\n");
    for (y, u) in snap.y.iter().zip(&snap.u) {
        let _ = writeln!(s, "{},{}", fmt_f64(*y), fmt_f64(*u));
    }
    s
}

#[derive(Serialize)]
struct EvolveSummary {
    event: EventKind,
    t_event: f64,
    steps: u64,
    records: usize,
    snapshots: usize,
    initial_r: f64,
    final_r: f64,
    final_boundary_height: f64,
    final_sup_h: f64,
    final_sup_grad: f64,
    constraint_residual: f64,
    initial_neumann_residual: f64,
    final_neumann_residual: f64,
    initial_axis_slope: f64,
    predicted_limit: LimitPrediction,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_est: Option<f64>,
}

fn execute(cfg: &RunConfig) -> Result<(FlowState, RunOutcome, LimitPrediction), CliError> {
    let initial = cfg.initial_state()?;
    let p = &cfg.profile;
    let decomposition = p.classify_regions(p.window()).map_err(runtime)?;
    let prediction = analysis::predict_limit_disk(p, &decomposition, &initial).map_err(runtime)?;
    let out = solver::run(initial.clone(), &cfg.control, &cfg.stop, &cfg.schedule).map_err(runtime)?;
    Ok((initial, out, prediction))
}

fn evolve(cfg: &RunConfig, quiet: bool) -> Result<RunOutcome, CliError> {
    let (initial, out, prediction) = execute(cfg)?;
    write_file(&cfg.out.join("trajectory.csv"), &trajectory_csv(&out.records))?;
    for (k, snap) in out.snapshots.iter().enumerate() {
        write_file(&cfg.out.join(format!("snapshot_{k:04}.csv")), &snapshot_csv(snap))?;
    }
    let last = out.records.last().expect("runs record their final state");
    let fin = &out.event.state;
    let t_est = (out.event.kind == EventKind::Pinched)
        .then(|| analysis::estimate_blowup_time(&out.records, p_sigma(&cfg.profile), FitWindow::default()).ok())
        .flatten()
        .map(|f| f.t_est);
    let summary = EvolveSummary {
        event: out.event.kind.clone(),
        t_event: out.event.t_event,
        steps: out.event.steps,
        records: out.records.len(),
        snapshots: out.snapshots.len(),
        initial_r: initial.r,
        final_r: fin.r,
        final_boundary_height: fin.boundary_height(),
        final_sup_h: last.sup_h,
        final_sup_grad: last.sup_grad,
        constraint_residual: fin.constraint_residual().map_err(runtime)?,
        initial_neumann_residual: initial.neumann_residual().map_err(runtime)?,
        final_neumann_residual: fin.neumann_residual().map_err(runtime)?,
        initial_axis_slope: initial.axis_slope(),
        predicted_limit: prediction,
        t_est,
    };
    let text = to_toml(&summary)?;
    write_file(&cfg.out.join("summary.txt"), &text)?;
    if !quiet {
        print!("{text}");
    }
    if let EventKind::StepFailure(reason) = &out.event.kind {
        return Err(CliError::Runtime(format!("step failure at t = {}: {reason}", out.event.t_event)));
    }
    Ok(out)
}

fn p_sigma(profile: &SupportProfile) -> Option<f64> {
    profile.curve().pinch_exponent()
}

fn singularity(cfg: &RunConfig, quiet: bool) -> Result<(), CliError> {
    let (_, out, _) = execute(cfg)?;
    write_file(&cfg.out.join("trajectory.csv"), &trajectory_csv(&out.records))?;
    let report: SingularityReport = analysis::classify_singularity(&out.event.kind, &out.records, p_sigma(&cfg.profile));
    let text = to_toml(&report)?;
    write_file(&cfg.out.join("singularity.txt"), &text)?;
    if !quiet {
        print!("{text}");
    }
    Ok(())
}

fn foliate(cfg: &RunConfig, quiet: bool) -> Result<(), CliError> {
    let (lower, upper) = cfg.initial_pair()?;
    let sweep = analysis::foliation_sweep(
        lower,
        upper,
        &cfg.control,
        &cfg.stop,
        cfg.schedule.stride,
        &cfg.compare_times,
    );
    let text = match &sweep {
        Ok(s) => to_toml(&s.report)?,
        Err(e) => format!("ordered = false\nerror = {:?}\n", e.to_string()),
    };
    write_file(&cfg.out.join("foliation.txt"), &text)?;
    if !quiet {
        print!("{text}");
    }
    sweep.map(|_| ()).map_err(runtime)
}

struct Check {
    name: String,
    value: f64,
    expected: f64,
    tol: f64,
    /// `value >= expected` instead of `|value - expected| <= tol`.
    at_least: bool,
}

impl Check {
    fn close(name: impl Into<String>, value: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected,
            tol,
            at_least: false,
        }
    }

    fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.expected
        } else {
            (self.value - self.expected).abs() <= self.tol
        }
    }
}

/// Sphere of radius `√2` meeting the cone `r = |z|` orthogonally at `r = 1`,
/// sampled on `m` intervals: the worst nodal error in `H`.
fn sphere_grid_error(m: usize, n: usize) -> Result<f64, CliError> {
    let radius = 2f64.sqrt();
    let cone = SupportProfile::new(Arc::new(Cone::new(1.0, 0.0).map_err(runtime)?), Window::new(-2.0, 2.0).map_err(runtime)?)
        .map_err(runtime)?;
    let u: Vec<f64> = (0..=m)
        .map(|i| {
            let y = i as f64 / m as f64;
            (radius * radius - y * y).sqrt()
        })
        .collect();
    let state = FlowState::new(cone, n, 0.0, 1.0, u).map_err(runtime)?;
    let mut err: f64 = 0.0;
    for p in state.nodal_points().map_err(runtime)? {
        let h = geometry::mean_curvature(&p).map_err(runtime)?;
        err = err.max((h - n as f64 / radius).abs());
    }
    Ok(err)
}

fn geometry_check(cli: &Cli) -> Result<(), CliError> {
    let mut checks = Vec::new();
    for n in [2usize, 3] {
        for radius in [1.0f64, 2.0] {
            for frac in [0.0, 0.3, 0.7] {
                let y = frac * radius;
                let w = (radius * radius - y * y).sqrt();
                let p = GraphPoint::new(y, -y / w, -radius * radius / (w * w * w), n);
                let h = geometry::mean_curvature(&p).map_err(runtime)?;
                let a2 = geometry::second_fundamental_norm(&p).map_err(runtime)?;
                let (eh, ea) = (n as f64 / radius, n as f64 / (radius * radius));
                checks.push(Check::close(format!("sphere H n={n} R={radius} y={y}"), h, eh, 1e-10 * eh));
                checks.push(Check::close(format!("sphere |A|^2 n={n} R={radius} y={y}"), a2, ea, 1e-10 * ea));
            }
        }
    }
    let flat = GraphPoint::new(0.5, 0.0, 0.0, 2);
    checks.push(Check::close("flat H", geometry::mean_curvature(&flat).map_err(runtime)?, 0.0, 0.0));
    checks.push(Check::close("flat |A|^2", geometry::second_fundamental_norm(&flat).map_err(runtime)?, 0.0, 0.0));
    let para = GraphPoint::new(1.0, 1.0, 1.0, 2);
    checks.push(Check::close(
        "paraboloid H",
        geometry::mean_curvature(&para).map_err(runtime)?,
        -3.0 / (2.0 * 2f64.sqrt()),
        1e-14,
    ));
    checks.push(Check::close(
        "paraboloid |A|^2",
        geometry::second_fundamental_norm(&para).map_err(runtime)?,
        0.625,
        1e-14,
    ));
    for n in [2usize, 3] {
        let coarse = sphere_grid_error(50, n)?;
        let fine = sphere_grid_error(100, n)?;
        checks.push(Check {
            name: format!("grid H order n={n}"),
            value: (coarse / fine).log2(),
            expected: 1.8,
            tol: 0.0,
            at_least: true,
        });
    }

    let mut table = String::new();
    let _ = writeln!(table, "{:<36} {:>24} {:>24}  result", "check", "value", "expected");
    let mut failures = 0;
    for c in &checks {
        let ok = c.passed();
        failures += usize::from(!ok);
        let expected = if c.at_least {
            format!(">= {}", c.expected)
        } else {
            format!("{:.16e}", c.expected)
        };
        let _ = writeln!(
            table,
            "{:<36} {:>24.16e} {:>24}  {}",
            c.name,
            c.value,
            expected,
            if ok { "pass" } else { "FAIL" }
        );
    }
    if let Some(out) = &cli.out {
        fs::create_dir_all(out).map_err(runtime)?;
        write_file(&out.join("geometry_check.txt"), &table)?;
    }
    if !cli.quiet {
        let _ = std::io::stdout().write_all(table.as_bytes());
    }
    if failures > 0 {
        return Err(CliError::Runtime(format!("{failures} geometry check(s) failed")));
    }
    Ok(())
}
