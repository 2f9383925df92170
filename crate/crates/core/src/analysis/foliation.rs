//! Two ordered flows run side by side: the region they sweep out cannot
//! contain a minimal disk, and whatever band is left between their limits is
//! where one may sit.

use std::thread;

use serde::Serialize;

use super::interp::MonotoneCubic;
use super::AnalysisError;
use crate::solver::{self, EventKind, FlowState, RecordSchedule, RunOutcome, StepControl, StopThresholds};

/// Allowed overlap before two flows count as out of order.
pub const ORDERING_TOL: f64 = 1e-8;
const COMPARE_POINTS: usize = 201;

/// Smallest vertical gap `upper - lower` over the common radii
/// `[0, min(r_lower, r_upper)]`, each graph interpolated monotonically.
pub fn compare_states(lower: &FlowState, upper: &FlowState) -> f64 {
    let interp = |s: &FlowState| {
        let ys: Vec<f64> = (0..=s.m()).map(|i| s.y(i)).collect();
        MonotoneCubic::new(&ys, &s.u).expect("grid radii are strictly increasing")
    };
    let (pl, pu) = (interp(lower), interp(upper));
    let r = lower.r.min(upper.r);
    (0..COMPARE_POINTS)
        .map(|k| {
            let y = r * k as f64 / (COMPARE_POINTS - 1) as f64;
            pu.eval(y) - pl.eval(y)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSummary {
    pub event: EventKind,
    pub t_event: f64,
    pub initial_band: (f64, f64),
    pub final_band: (f64, f64),
    pub final_r: f64,
}

impl FlowSummary {
    fn of(out: &RunOutcome) -> Self {
        let first = out.records.first().expect("runs record their initial state");
        let last = out.records.last().expect("runs record their final state");
        Self {
            event: out.event.kind.clone(),
            t_event: out.event.t_event,
            initial_band: (first.u_min, first.u_max),
            final_band: (last.u_min, last.u_max),
            final_r: last.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoliationReport {
    pub lower: FlowSummary,
    pub upper: FlowSummary,
    /// Common snapshot times at which the ordering was checked.
    pub checked_times: usize,
    pub min_gap: f64,
    pub ordered: bool,
    /// Heights swept from below and from above.
    pub swept_below: (f64, f64),
    pub swept_above: (f64, f64),
    /// Band left between the two limits; `None` when a flow pinched off and
    /// no limit disk exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_band: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct FoliationSweep {
    pub report: FoliationReport,
    pub lower: RunOutcome,
    pub upper: RunOutcome,
}

/// Run both flows concurrently and check they stay ordered at every time in
/// `compare_times` that both reach.
pub fn foliation_sweep(
    lower: FlowState,
    upper: FlowState,
    control: &StepControl,
    stop: &StopThresholds,
    stride: u64,
    compare_times: &[f64],
) -> Result<FoliationSweep, AnalysisError> {
    let gap0 = compare_states(&lower, &upper);
    if !(gap0 > 0.0) {
        return Err(AnalysisError::Precondition(format!(
            "lower cap must lie strictly below the upper cap (minimum gap {gap0:e})"
        )));
    }
    let schedule = RecordSchedule {
        stride,
        snapshot_times: compare_times.to_vec(),
    };
    let (lo_out, up_out) = thread::scope(|s| {
        let lo = s.spawn(|| solver::run(lower, control, stop, &schedule));
        let up = s.spawn(|| solver::run(upper, control, stop, &schedule));
        (
            lo.join().expect("lower flow thread panicked"),
            up.join().expect("upper flow thread panicked"),
        )
    });
    let (lower, upper) = (lo_out?, up_out?);
    let report = assess_sweep(&lower, &upper)?;
    Ok(FoliationSweep { report, lower, upper })
}

/// Check two finished flows for ordering at their common snapshot times and
/// report the bands they swept.
pub fn assess_sweep(lower: &RunOutcome, upper: &RunOutcome) -> Result<FoliationReport, AnalysisError> {
    let mut min_gap = f64::INFINITY;
    let mut checked = 0;
    for sl in &lower.snapshots {
        let Some(su) = upper.snapshots.iter().find(|s| s.t == sl.t) else {
            continue;
        };
        let as_state = |snap: &solver::Snapshot, out: &RunOutcome| {
            let mut st = out.event.state.clone();
            st.t = snap.t;
            st.r = snap.y[snap.y.len() - 1];
            st.u = snap.u.clone();
            st
        };
        let gap = compare_states(&as_state(sl, lower), &as_state(su, upper));
        checked += 1;
        min_gap = min_gap.min(gap);
        if gap < -ORDERING_TOL {
            return Err(AnalysisError::OrderingViolated { t: sl.t, excess: -gap });
        }
    }

    let lower_sum = FlowSummary::of(lower);
    let upper_sum = FlowSummary::of(upper);
    let both_converged = lower_sum.event == EventKind::Converged && upper_sum.event == EventKind::Converged;
    let residual_band = both_converged.then_some((lower_sum.final_band.1, upper_sum.final_band.0));
    Ok(FoliationReport {
        swept_below: (lower_sum.initial_band.0, lower_sum.final_band.1),
        swept_above: (upper_sum.final_band.0, upper_sum.initial_band.1),
        lower: lower_sum,
        upper: upper_sum,
        checked_times: checked,
        min_gap,
        ordered: true,
        residual_band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Catenoid, SupportProfile, Window};
    use crate::solver::build_initial_cap;

    fn catenoid() -> SupportProfile {
        SupportProfile::from_curve(Catenoid::new(1.0).unwrap(), Window::new(-2.0, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn identical_caps_are_rejected() {
        let a = build_initial_cap(&catenoid(), 0.5, 16, 2, 0.0).unwrap();
        let err = foliation_sweep(
            a.clone(),
            a,
            &StepControl::default(),
            &StopThresholds::default(),
            10,
            &[],
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::Precondition(_)));
    }

    #[test]
    fn short_sweep_stays_ordered() {
        let lo = build_initial_cap(&catenoid(), -0.5, 24, 2, 0.0).unwrap();
        let up = build_initial_cap(&catenoid(), 0.5, 24, 2, 0.0).unwrap();
        let stop = StopThresholds {
            t_max: 0.2,
            ..StopThresholds::default()
        };
        let sweep = foliation_sweep(lo, up, &StepControl::default(), &stop, 10, &[0.05, 0.1, 0.2]).unwrap();
        assert_eq!(sweep.report.checked_times, 3);
        assert!(sweep.report.min_gap > 0.0);
        assert!(sweep.report.residual_band.is_none());
    }
}
