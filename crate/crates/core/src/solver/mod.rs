//! Method-of-lines integration of the free-boundary graph flow.
//!
//! The graph `ω(y, t)` over the moving disk `y ∈ [0, r(t)]` is sampled on the
//! normalized grid `y = s r(t)`, `s_i = i/M`. Nodes move with the boundary,
//! which adds the advection term `s (r'/r) u_s`. The Neumann condition enters
//! through a ghost node, `r(t)` follows the boundary ODE, and after every
//! step the boundary pair `(u_M, r)` is projected back onto the curve
//! `r = ω_Σ(z)`.

mod initial;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::TimeSeriesRecord;
use crate::geometry::{self, GeometryError, GraphPoint};
use crate::profile::{ProfileError, Side, SupportProfile};

pub use initial::{build_initial_cap, cap_coefficient, from_samples, parse_samples};

/// Smallest grid the one-sided boundary stencils support comfortably.
pub const MIN_NODES: usize = 8;
const PROJECTION_ITERATIONS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid flow state: {0}")]
    InvalidState(String),
    #[error("z0 = {z0} is a pinch point of the support; the initial disk is degenerate")]
    DegenerateDomain { z0: f64 },
    #[error("invalid step control: {0}")]
    InvalidControl(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub n: usize,
    pub t: f64,
    pub r: f64,
    /// `u[i] ≈ ω(s_i r, t)`, `M + 1` values.
    pub u: Vec<f64>,
    pub profile: SupportProfile,
}

impl FlowState {
    pub fn new(profile: SupportProfile, n: usize, t: f64, r: f64, u: Vec<f64>) -> Result<Self, SolverError> {
        if n < 2 {
            return Err(SolverError::InvalidState(format!("dimension n = {n} must be at least 2")));
        }
        if u.len() < MIN_NODES + 1 {
            return Err(SolverError::InvalidState(format!(
                "need at least {} nodes, got {}",
                MIN_NODES + 1,
                u.len()
            )));
        }
        if !(r > 0.0 && r.is_finite()) || !t.is_finite() || u.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::InvalidState("non-finite or non-positive data".into()));
        }
        Ok(Self { n, t, r, u, profile })
    }

    /// Number of grid intervals.
    pub fn m(&self) -> usize {
        self.u.len() - 1
    }

    pub fn ds(&self) -> f64 {
        1.0 / self.m() as f64
    }

    /// Physical radius of node `i`.
    pub fn y(&self, i: usize) -> f64 {
        if i == self.m() {
            self.r
        } else {
            i as f64 * self.r / self.m() as f64
        }
    }

    pub fn boundary_height(&self) -> f64 {
        self.u[self.m()]
    }

    /// Slope imposed at the boundary, `-ω_Σ'(u_M)`.
    pub fn boundary_slope(&self) -> Result<f64, ProfileError> {
        Ok(-self.profile.eval(self.boundary_height())?.dz)
    }

    /// Second-order one-sided `ω''` at the boundary.
    pub fn boundary_curvature(&self) -> f64 {
        one_sided_curvature(&self.u, self.r)
    }

    /// Radial derivatives at every node: axis limit, central differences in
    /// the interior, imposed slope and one-sided curvature at the boundary.
    pub fn nodal_points(&self) -> Result<Vec<GraphPoint>, GeometryError> {
        let m = self.m();
        let h = self.ds();
        let r = self.r;
        let u = &self.u;
        let mut pts = Vec::with_capacity(m + 1);
        pts.push(GraphPoint::new(0.0, 0.0, 2.0 * (u[1] - u[0]) / (h * h * r * r), self.n));
        for i in 1..m {
            let us = (u[i + 1] - u[i - 1]) / (2.0 * h);
            let uss = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            pts.push(GraphPoint::new(self.y(i), us / r, uss / (r * r), self.n));
        }
        let g = self.boundary_slope()?;
        pts.push(GraphPoint::new(r, g, self.boundary_curvature(), self.n));
        Ok(pts)
    }

    /// `|r - ω_Σ(u_M)|`.
    pub fn constraint_residual(&self) -> Result<f64, ProfileError> {
        Ok((self.r - self.profile.eval(self.boundary_height())?.value).abs())
    }

    /// Discrete Neumann residual: one-sided second-order `ω'(r)` plus
    /// `ω_Σ'(u_M)`.
    pub fn neumann_residual(&self) -> Result<f64, GeometryError> {
        let m = self.m();
        let u = &self.u;
        let slope = (3.0 * u[m] - 4.0 * u[m - 1] + u[m - 2]) / (2.0 * self.ds() * self.r);
        geometry::neumann_residual(slope, &self.profile, u[m])
    }

    /// One-sided slope at the axis; `O(Δs)` for smooth data.
    pub fn axis_slope(&self) -> f64 {
        (self.u[1] - self.u[0]) / (self.ds() * self.r)
    }

    /// Boundary speed `r' = -(H/v) ω_Σ'` at the current state.
    pub fn boundary_speed(&self) -> Result<f64, ProfileError> {
        let pv = self.profile.eval(self.boundary_height())?;
        Ok(boundary_speed(self.n, self.r, -pv.dz, self.boundary_curvature(), pv.dz))
    }
}

fn one_sided_curvature(u: &[f64], r: f64) -> f64 {
    let m = u.len() - 1;
    let hr = r / m as f64;
    (2.0 * u[m] - 5.0 * u[m - 1] + 4.0 * u[m - 2] - u[m - 3]) / (hr * hr)
}

fn boundary_speed(n: usize, r: f64, slope: f64, curvature: f64, profile_slope: f64) -> f64 {
    let v = slope.hypot(1.0);
    let h = -curvature / (v * v * v) - (n as f64 - 1.0) * slope / (r * v);
    -h / v * profile_slope
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub cfl_safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub max_steps: u64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            cfl_safety: 0.4,
            dt_min: 0.0,
            dt_max: 1e-2,
            max_steps: 100_000_000,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<(), SolverError> {
        let c = self;
        if !(c.cfl_safety > 0.0 && c.cfl_safety < 1.0) {
            return Err(SolverError::InvalidControl(format!("cfl safety {} not in (0, 1)", c.cfl_safety)));
        }
        if !(c.dt_min >= 0.0 && c.dt_max > 0.0 && c.dt_max.is_finite() && c.dt_min <= c.dt_max) {
            return Err(SolverError::InvalidControl(format!(
                "need 0 <= dt_min <= dt_max, got [{}, {}]",
                c.dt_min, c.dt_max
            )));
        }
        if c.max_steps == 0 {
            return Err(SolverError::InvalidControl("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// Parabolic step `cfl (Δs r)²/2`. In dimensions above 4 the axis row
    /// `2n/(Δs r)²` dominates the spectrum and the step shrinks by `4/n`.
    pub fn time_step(&self, state: &FlowState) -> f64 {
        let hr = state.ds() * state.r;
        let axis = (4.0 / state.n as f64).min(1.0);
        (self.cfl_safety * hr * hr / 2.0 * axis).clamp(self.dt_min, self.dt_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopThresholds {
    pub t_max: f64,
    /// Pinch when `r < eps_pinch_rel * r(0)`.
    pub eps_pinch_rel: f64,
    pub eps_h: f64,
    pub eps_r: f64,
    /// Consecutive records below `eps_h`, `eps_r` needed for convergence.
    pub trailing_window: usize,
}

impl Default for StopThresholds {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            eps_pinch_rel: 1e-3,
            eps_h: 1e-5,
            eps_r: 1e-6,
            trailing_window: 50,
        }
    }
}

impl StopThresholds {
    pub fn validate(&self) -> Result<(), SolverError> {
        let s = self;
        let ok = s.t_max >= 0.0
            && s.t_max.is_finite()
            && s.eps_pinch_rel > 0.0
            && s.eps_pinch_rel < 1.0
            && s.eps_h > 0.0
            && s.eps_r > 0.0
            && s.trailing_window > 0;
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidControl(format!("invalid stop thresholds {s:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordSchedule {
    /// Record monitors every `stride` steps.
    pub stride: u64,
    /// Times at which full `(y, u)` profiles are kept.
    pub snapshot_times: Vec<f64>,
}

impl Default for RecordSchedule {
    fn default() -> Self {
        Self {
            stride: 100,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
}

impl Snapshot {
    pub fn of(state: &FlowState) -> Self {
        Self {
            t: state.t,
            y: (0..=state.m()).map(|i| state.y(i)).collect(),
            u: state.u.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "reason")]
pub enum EventKind {
    Converged,
    Pinched,
    MaxTime,
    StepFailure(String),
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Converged => "Converged",
            EventKind::Pinched => "Pinched",
            EventKind::MaxTime => "MaxTime",
            EventKind::StepFailure(_) => "StepFailure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowEvent {
    pub kind: EventKind,
    pub t_event: f64,
    pub steps: u64,
    /// State at the event; for a failure, the last good state.
    pub state: FlowState,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<TimeSeriesRecord>,
    pub snapshots: Vec<Snapshot>,
    pub event: FlowEvent,
}

/// Monitors of one state.
pub fn measure(state: &FlowState) -> Result<TimeSeriesRecord, SolverError> {
    let pts = state.nodal_points()?;
    let mut sup_a2: f64 = 0.0;
    let mut h_max = f64::NEG_INFINITY;
    let mut h_min = f64::INFINITY;
    let mut sup_grad: f64 = 0.0;
    for p in &pts {
        let h = geometry::mean_curvature(p)?;
        sup_a2 = sup_a2.max(geometry::second_fundamental_norm(p)?);
        h_max = h_max.max(h);
        h_min = h_min.min(h);
        sup_grad = sup_grad.max(p.slope.abs());
    }
    let (u_min, u_max) = state
        .u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(TimeSeriesRecord {
        t: state.t,
        r: state.r,
        sup_a2,
        sup_h: h_max.abs().max(h_min.abs()),
        area: geometry::area(state)?,
        boundary_grad: pts[state.m()].slope.abs(),
        u_min,
        u_max,
        r_prime: state.boundary_speed()?,
        u_boundary: state.boundary_height(),
        dissipation: geometry::dissipation(state)?,
        h_max,
        h_min,
        sup_grad,
    })
}

/// Explicit two-stage Runge–Kutta stepper with reusable buffers.
#[derive(Debug, Default)]
pub struct Integrator {
    k1: Vec<f64>,
    k2: Vec<f64>,
    stage: Vec<f64>,
}

impl Integrator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advance by `dt`. On failure the state is left unchanged.
    pub fn step(&mut self, state: &mut FlowState, dt: f64) -> Result<(), String> {
        let len = state.u.len();
        self.k1.resize(len, 0.0);
        self.k2.resize(len, 0.0);
        self.stage.resize(len, 0.0);

        let rp1 = rhs(state.n, &state.profile, &state.u, state.r, &mut self.k1)?;
        for ((s, u), k) in self.stage.iter_mut().zip(&state.u).zip(&self.k1) {
            *s = u + dt * k;
        }
        let mut r1 = state.r + dt * rp1;
        project(&state.profile, &mut self.stage, &mut r1)?;

        let rp2 = rhs(state.n, &state.profile, &self.stage, r1, &mut self.k2)?;
        let mut r_new = 0.5 * (state.r + r1 + dt * rp2);
        for (s, k) in self.stage.iter_mut().zip(&self.k2) {
            *s += dt * k;
        }
        for (s, u) in self.stage.iter_mut().zip(&state.u) {
            *s = 0.5 * (*s + u);
        }
        project(&state.profile, &mut self.stage, &mut r_new)?;
        if self.stage.iter().any(|v| !v.is_finite()) {
            return Err("non-finite graph values".into());
        }
        std::mem::swap(&mut state.u, &mut self.stage);
        state.r = r_new;
        state.t += dt;
        Ok(())
    }
}

/// Nodal `u_t` into `out`; returns `r'`.
fn rhs(n: usize, profile: &SupportProfile, u: &[f64], r: f64, out: &mut [f64]) -> Result<f64, String> {
    let m = u.len() - 1;
    let h = 1.0 / m as f64;
    let inv_h2 = 1.0 / (h * h);
    let inv_r = 1.0 / r;
    let nm1 = n as f64 - 1.0;
    let pv = profile.eval(u[m]).map_err(|e| e.to_string())?;
    let g = -pv.dz;
    let rp = boundary_speed(n, r, g, one_sided_curvature(u, r), pv.dz);
    if !rp.is_finite() || !(r > 0.0) {
        return Err(format!("boundary update broke down (r = {r}, r' = {rp})"));
    }
    let advect = rp * inv_r;

    out[0] = n as f64 * 2.0 * (u[1] - u[0]) * inv_h2 * inv_r * inv_r;
    let interior = |i: usize, us: f64, uss: f64| {
        let s = i as f64 * h;
        let wy = us * inv_r;
        let wyy = uss * inv_r * inv_r;
        wyy / (1.0 + wy * wy) + nm1 * wy / (s * r) + s * advect * us
    };
    for i in 1..m {
        let us = 0.5 * (u[i + 1] - u[i - 1]) / h;
        let uss = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
        out[i] = interior(i, us, uss);
    }
    // Ghost node u_{M+1} = u_{M-1} + 2 Δs r ω_y(r).
    let us = g * r;
    let uss = 2.0 * (u[m - 1] - u[m] + h * us) * inv_h2;
    out[m] = interior(m, us, uss);

    if out.iter().any(|v| !v.is_finite()) {
        return Err("non-finite time derivative".into());
    }
    Ok(rp)
}

/// Move `(u_M, r)` to the closest point `(z, ω_Σ(z))` of the support curve.
fn project(profile: &SupportProfile, u: &mut [f64], r: &mut f64) -> Result<(), String> {
    let m = u.len() - 1;
    let (zu, rr) = (u[m], *r);
    let side = |z: f64| if z < zu { Side::Left } else { Side::Right };
    let mut z = zu;
    for _ in 0..PROJECTION_ITERATIONS {
        let pv = profile.eval_sided(z, side(z)).map_err(|e| e.to_string())?;
        let f = (z - zu) + (pv.value - rr) * pv.dz;
        let df = 1.0 + pv.dz * pv.dz + (pv.value - rr) * pv.dzz;
        if !(df > 0.0) {
            return Err(format!("boundary projection is singular at z = {z}"));
        }
        let dz = f / df;
        z -= dz;
        if dz.abs() <= 1e-15 * z.abs().max(1.0) {
            let value = profile.eval(z).map_err(|e| e.to_string())?.value;
            u[m] = z;
            *r = value;
            return Ok(());
        }
    }
    Err(format!(
        "boundary projection did not converge in {PROJECTION_ITERATIONS} iterations"
    ))
}

/// Integrate until convergence, pinching, `t_max`, or failure.
pub fn run(
    initial: FlowState,
    control: &StepControl,
    stop: &StopThresholds,
    schedule: &RecordSchedule,
) -> Result<RunOutcome, SolverError> {
    control.validate()?;
    stop.validate()?;
    if schedule.stride == 0 {
        return Err(SolverError::InvalidControl("record stride must be positive".into()));
    }
    let mut snap_times: Vec<f64> = schedule.snapshot_times.clone();
    snap_times.sort_by(f64::total_cmp);
    snap_times.dedup();

    let r0 = initial.r;
    let mut state = initial;
    let mut integrator = Integrator::new();
    let mut records = vec![measure(&state)?];
    let mut snapshots = Vec::new();
    let mut next_snap = 0;
    let mut calm = 0usize;
    let mut steps = 0u64;

    let take_snapshots = |state: &FlowState, next: &mut usize, out: &mut Vec<Snapshot>| {
        while *next < snap_times.len() && snap_times[*next] <= state.t * (1.0 + 1e-14) {
            out.push(Snapshot::of(state));
            *next += 1;
        }
    };
    take_snapshots(&state, &mut next_snap, &mut snapshots);

    let kind = loop {
        if state.t >= stop.t_max {
            break EventKind::MaxTime;
        }
        if steps >= control.max_steps {
            break EventKind::StepFailure(format!("step budget of {} exhausted", control.max_steps));
        }
        let mut dt = control.time_step(&state).min(stop.t_max - state.t);
        if let Some(&ts) = snap_times.get(next_snap) {
            dt = dt.min(ts - state.t);
        }
        let mut trial = state.clone();
        if let Err(reason) = integrator.step(&mut trial, dt) {
            break EventKind::StepFailure(reason);
        }
        // Land exactly on clipped targets.
        if stop.t_max - trial.t < 1e-14 * stop.t_max.max(1.0) {
            trial.t = trial.t.max(stop.t_max);
        }
        if trial.r < stop.eps_pinch_rel * r0 {
            state = trial;
            steps += 1;
            records.push(measure(&state)?);
            break EventKind::Pinched;
        }
        state = trial;
        steps += 1;
        take_snapshots(&state, &mut next_snap, &mut snapshots);
        if steps % schedule.stride == 0 {
            let rec = measure(&state)?;
            if rec.sup_h < stop.eps_h && rec.r_prime.abs() < stop.eps_r {
                calm += 1;
            } else {
                calm = 0;
            }
            records.push(rec);
            if calm >= stop.trailing_window {
                break EventKind::Converged;
            }
        }
    };
    if records.last().map(|r| r.t) != Some(state.t) {
        records.push(measure(&state)?);
    }
    Ok(RunOutcome {
        records,
        snapshots,
        event: FlowEvent {
            kind,
            t_event: state.t,
            steps,
            state,
        },
    })
}
