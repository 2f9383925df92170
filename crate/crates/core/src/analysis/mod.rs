//! Post-processing of flow trajectories: blow-up fits, singularity
//! classification, limit-disk prediction, area dissipation and the
//! two-flow foliation sweep.

mod foliation;
pub mod interp;

use serde::Serialize;
use thiserror::Error;

use crate::profile::{CriticalKind, ProfileError, RegionDecomposition, SupportProfile};
use crate::solver::{self, EventKind, FlowState, SolverError};

pub use foliation::{assess_sweep, compare_states, foliation_sweep, FlowSummary, FoliationReport, FoliationSweep, ORDERING_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("boundary radius is not decreasing over the fit window")]
    NotPinching,
    #[error("insufficient data: {needed} usable records needed, {got} available")]
    InsufficientData { needed: usize, got: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("ordering violated at t = {t}: lower flow exceeds upper by {excess:e}")]
    OrderingViolated { t: f64, excess: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Monitors at one recorded time. The first eight fields are the exported
/// trajectory columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub r: f64,
    pub sup_a2: f64,
    pub sup_h: f64,
    pub area: f64,
    /// `|ω_y(r)|`.
    pub boundary_grad: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub r_prime: f64,
    pub u_boundary: f64,
    /// `∫ H² dμ`.
    pub dissipation: f64,
    pub h_max: f64,
    pub h_min: f64,
    /// Largest nodal `|ω_y|`.
    pub sup_grad: f64,
}

/// Fewest records any fit accepts.
pub const MIN_FIT_RECORDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitWindow {
    /// Use at most this many trailing records.
    pub max_records: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupFit {
    pub t_est: f64,
    /// Power in the model `r^p = a (T - t)`.
    pub p: f64,
    pub a: f64,
    /// `1 - R²` of the selected model.
    pub residual: f64,
    /// Indices `[start, end)` of the records used.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub beta: f64,
    /// Two standard errors of the slope.
    pub half_width: f64,
    pub records: usize,
}

struct LineFit {
    intercept: f64,
    slope: f64,
    one_minus_r2: f64,
    slope_se: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let one_minus_r2 = if syy > 0.0 { sse / syy } else { 0.0 };
    let slope_se = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    LineFit {
        intercept,
        slope,
        one_minus_r2,
        slope_se,
    }
}

/// Trailing records with `r <= 10 min r`, optionally capped in length.
fn pinch_window(series: &[TimeSeriesRecord], window: FitWindow) -> Result<(usize, usize), AnalysisError> {
    let end = series.len();
    let r_min = series.iter().map(|s| s.r).fold(f64::INFINITY, f64::min);
    let mut start = end;
    while start > 0 && series[start - 1].r <= 10.0 * r_min {
        start -= 1;
    }
    if let Some(cap) = window.max_records {
        start = start.max(end.saturating_sub(cap));
    }
    if end - start < MIN_FIT_RECORDS {
        return Err(AnalysisError::InsufficientData {
            needed: MIN_FIT_RECORDS,
            got: end - start,
        });
    }
    Ok((start, end))
}

/// Fit `r^p = a (T - t)` to the trailing records, trying `p = 2` and, when
/// the pinch exponent `σ` is known, `p = 2 - 2σ`; the better fit wins.
pub fn estimate_blowup_time(
    series: &[TimeSeriesRecord],
    sigma: Option<f64>,
    window: FitWindow,
) -> Result<BlowupFit, AnalysisError> {
    let (start, end) = pinch_window(series, window)?;
    let tail = &series[start..end];
    if tail.windows(2).any(|w| !(w[1].r < w[0].r)) {
        return Err(AnalysisError::NotPinching);
    }
    let mut powers = vec![2.0];
    if let Some(s) = sigma {
        let p = 2.0 - 2.0 * s;
        if p > 0.0 && (p - 2.0).abs() > 1e-12 {
            powers.push(p);
        }
    }
    let ts: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let mut best: Option<BlowupFit> = None;
    for p in powers {
        let rp: Vec<f64> = tail.iter().map(|s| s.r.powf(p)).collect();
        let fit = least_squares(&ts, &rp);
        if !(fit.slope < 0.0) {
            continue;
        }
        let cand = BlowupFit {
            t_est: -fit.intercept / fit.slope,
            p,
            a: -fit.slope,
            residual: fit.one_minus_r2,
            start,
            end,
        };
        if best.map_or(true, |b| cand.residual < b.residual) {
            best = Some(cand);
        }
    }
    best.ok_or(AnalysisError::NotPinching)
}

/// Slope of `log sup|A|²` against `log(T - t)` over the given records.
pub fn fit_blowup_exponent(records: &[TimeSeriesRecord], t_est: f64) -> Result<ExponentFit, AnalysisError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|s| s.t < t_est && s.sup_a2 > 0.0 && s.sup_a2.is_finite())
        .map(|s| ((t_est - s.t).ln(), s.sup_a2.ln()))
        .unzip();
    if xs.len() < MIN_FIT_RECORDS {
        return Err(AnalysisError::InsufficientData {
            needed: MIN_FIT_RECORDS,
            got: xs.len(),
        });
    }
    let fit = least_squares(&xs, &ys);
    Ok(ExponentFit {
        beta: fit.slope,
        half_width: 2.0 * fit.slope_se,
        records: xs.len(),
    })
}

/// `min` and `max` of `sup|A|² (T - t)` over the records before `T`.
pub fn type_i_sandwich_check(records: &[TimeSeriesRecord], t_est: f64) -> Option<(f64, f64)> {
    let ratios = records.iter().filter(|s| s.t < t_est).map(|s| s.sup_a2 * (t_est - s.t));
    let (lo, hi) = ratios.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (lo <= hi).then_some((lo, hi))
}

/// Largest `C₅` with `r² >= 2 C₅ (T - t)` over the records before `T`.
pub fn radius_rate_constant(records: &[TimeSeriesRecord], t_est: f64) -> Option<f64> {
    records
        .iter()
        .filter(|s| s.t < t_est)
        .map(|s| s.r * s.r / (2.0 * (t_est - s.t)))
        .reduce(f64::min)
}

/// `max/first - 1` of `sup|A|²` over the records.
pub fn curvature_growth(records: &[TimeSeriesRecord]) -> Option<f64> {
    let first = records.first()?.sup_a2;
    let max = records.iter().map(|s| s.sup_a2).fold(f64::NEG_INFINITY, f64::max);
    Some(if first > 0.0 {
        max / first - 1.0
    } else if max > 0.0 {
        f64::INFINITY
    } else {
        0.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SingularityKind {
    Type0,
    TypeI,
    TypeII,
    NoSingularity,
    InsufficientData,
}

/// Bounded curvature: growth below this and `β` above [`TYPE0_BETA`].
pub const BOUNDED_GROWTH: f64 = 0.10;
pub const TYPE0_BETA: f64 = -0.25;
pub const TYPE_II_BETA: f64 = -1.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityReport {
    pub kind: SingularityKind,
    pub event: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_est: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_residual: Option<f64>,
    /// Time span of the records used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    pub records_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c5: Option<f64>,
    pub note: String,
}

impl SingularityReport {
    fn bare(kind: SingularityKind, event: &EventKind, note: impl Into<String>) -> Self {
        Self {
            kind,
            event: event.label().to_string(),
            beta: None,
            beta_half_width: None,
            t_est: None,
            fit_power: None,
            fit_residual: None,
            window: None,
            records_used: 0,
            growth: None,
            sandwich: None,
            c5: None,
            note: note.into(),
        }
    }
}

/// Label a finished run. `sigma` is the pinch exponent of the support, if
/// known.
pub fn classify_singularity(event: &EventKind, series: &[TimeSeriesRecord], sigma: Option<f64>) -> SingularityReport {
    classify_with(event, series, sigma, FitWindow::default())
}

pub fn classify_with(
    event: &EventKind,
    series: &[TimeSeriesRecord],
    sigma: Option<f64>,
    window: FitWindow,
) -> SingularityReport {
    use SingularityKind::*;
    match event {
        EventKind::Converged => SingularityReport::bare(NoSingularity, event, "flow converged"),
        EventKind::StepFailure(reason) => {
            SingularityReport::bare(InsufficientData, event, format!("run failed: {reason}"))
        }
        EventKind::MaxTime => {
            let start = series.len() / 2;
            let tail = &series[start..];
            let mut rep = SingularityReport::bare(InsufficientData, event, "");
            if tail.len() < MIN_FIT_RECORDS {
                rep.note = format!("only {} trailing records", tail.len());
                return rep;
            }
            let growth = curvature_growth(tail).unwrap_or(f64::INFINITY);
            rep.growth = Some(growth);
            rep.records_used = tail.len();
            rep.window = Some((tail[0].t, tail[tail.len() - 1].t));
            if growth < BOUNDED_GROWTH {
                rep.kind = Type0;
                rep.note = "curvature bounded over the trailing half of a run without blow-up".into();
            } else {
                rep.note = "curvature still growing when the time budget ran out".into();
            }
            rep
        }
        EventKind::Pinched => {
            let mut rep = SingularityReport::bare(InsufficientData, event, "");
            let fit = match estimate_blowup_time(series, sigma, window) {
                Ok(f) => f,
                Err(e) => {
                    rep.note = e.to_string();
                    return rep;
                }
            };
            let tail = &series[fit.start..fit.end];
            rep.t_est = Some(fit.t_est);
            rep.fit_power = Some(fit.p);
            rep.fit_residual = Some(fit.residual);
            rep.window = Some((tail[0].t, tail[tail.len() - 1].t));
            rep.records_used = tail.len();
            let growth = curvature_growth(tail).unwrap_or(f64::INFINITY);
            rep.growth = Some(growth);
            rep.sandwich = type_i_sandwich_check(tail, fit.t_est);
            rep.c5 = radius_rate_constant(tail, fit.t_est);
            let beta = match fit_blowup_exponent(tail, fit.t_est) {
                Ok(b) => b,
                Err(e) => {
                    rep.note = e.to_string();
                    return rep;
                }
            };
            rep.beta = Some(beta.beta);
            rep.beta_half_width = Some(beta.half_width);
            rep.kind = if beta.beta < TYPE_II_BETA {
                TypeII
            } else if beta.beta <= TYPE0_BETA {
                TypeI
            } else if growth < BOUNDED_GROWTH {
                Type0
            } else {
                // Growing, but slower than any power of 1/(T - t).
                TypeI
            };
            rep.note = format!("fit r^{} = a (T - t)", fit.p);
            rep
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "prediction", content = "value")]
pub enum LimitPrediction {
    /// Flat disk at this axis height.
    Disk(f64),
    Pinch,
    Unavailable(String),
}

/// Predict where the flow from `state` ends, when the support shape determines it.
pub fn predict_limit_disk(
    profile: &SupportProfile,
    decomposition: &RegionDecomposition,
    state: &FlowState,
) -> Result<LimitPrediction, AnalysisError> {
    let window = decomposition.window;
    if profile.is_conelike(window)?.is_some() {
        return Ok(LimitPrediction::Pinch);
    }
    let rec = solver::measure(state)?;
    let (lo, hi) = (rec.u_min, rec.u_max);
    if !(window.contains(lo) && window.contains(hi)) {
        return Ok(LimitPrediction::Unavailable("initial heights leave the window".into()));
    }
    let crit = &decomposition.critical_points;
    let pinches = &decomposition.pinch_points;
    if pinches.iter().any(|&p| p >= lo && p <= hi) {
        return Ok(LimitPrediction::Unavailable("data spans a pinch point".into()));
    }
    let is = |k: CriticalKind| move |c: &&crate::profile::CriticalPoint| c.kind == k && c.plateau.is_none();
    let maxima: Vec<f64> = crit.iter().filter(is(CriticalKind::StrictMax)).map(|c| c.z).collect();
    let minima: Vec<f64> = crit.iter().filter(is(CriticalKind::StrictMin)).map(|c| c.z).collect();
    let flats: Vec<f64> = crit
        .iter()
        .filter(|c| c.kind == CriticalKind::DegenerateFlat)
        .map(|c| c.z)
        .collect();

    // Maximal neck around the data: bounded by the nearest maxima or pinches.
    let barrier_below = maxima
        .iter()
        .chain(pinches)
        .copied()
        .filter(|&z| z < lo)
        .fold(window.lo, f64::max);
    let barrier_above = maxima
        .iter()
        .chain(pinches)
        .copied()
        .filter(|&z| z > hi)
        .fold(window.hi, f64::min);
    let maxima_inside = maxima.iter().any(|&z| z >= lo && z <= hi);
    if !maxima_inside {
        let inside: Vec<f64> = minima
            .iter()
            .copied()
            .filter(|&z| z > barrier_below && z < barrier_above)
            .collect();
        let flat_inside = flats.iter().any(|&z| z > barrier_below && z < barrier_above);
        return Ok(match inside[..] {
            [z] if !flat_inside => LimitPrediction::Disk(z),
            [] => LimitPrediction::Unavailable("no flat disk in the neck containing the data".into()),
            _ => LimitPrediction::Unavailable("neck minimum is not unique".into()),
        });
    }

    // Belly: bounded by the nearest minima around the data.
    let min_below = minima.iter().copied().filter(|&z| z < lo).reduce(f64::max);
    let min_above = minima.iter().copied().filter(|&z| z > hi).reduce(f64::min);
    let belly_lo = min_below.unwrap_or(window.lo);
    let belly_hi = min_above.unwrap_or(window.hi);
    if minima.iter().any(|&z| z >= lo && z <= hi) || pinches.iter().any(|&z| z > belly_lo && z < belly_hi) {
        return Ok(LimitPrediction::Unavailable("data is not contained in one belly".into()));
    }
    let belly_max: Vec<f64> = maxima
        .iter()
        .copied()
        .filter(|&z| z > belly_lo && z < belly_hi)
        .collect();
    let highest = belly_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lowest = belly_max.iter().copied().fold(f64::INFINITY, f64::min);
    let zb = rec.u_boundary;
    if rec.h_max < 0.0 && zb > highest {
        return Ok(match min_above {
            Some(z) => LimitPrediction::Disk(z),
            None => LimitPrediction::Unavailable("no neck minimum above the belly in the window".into()),
        });
    }
    if rec.h_min > 0.0 && zb < lowest {
        return Ok(match min_below {
            Some(z) => LimitPrediction::Disk(z),
            None => LimitPrediction::Unavailable("no neck minimum below the belly in the window".into()),
        });
    }
    Ok(LimitPrediction::Unavailable(
        "belly data without a sign-definite mean curvature on the escaping side".into(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationReport {
    /// Largest `|ΔA/Δt + D̄| / max(D̄, floor)` over consecutive records.
    pub max_defect: f64,
    /// Largest increase of area between consecutive records.
    pub max_area_increase: f64,
    pub area_nonincreasing: bool,
    pub floor: f64,
}

/// Tolerance on area increases between records.
pub const AREA_TOL: f64 = 1e-10;

/// Compare the recorded area with the time integral of `∫ H² dμ`. `floor`
/// defaults to `1e-6` times the largest recorded dissipation.
pub fn verify_dissipation(series: &[TimeSeriesRecord], floor: Option<f64>) -> Result<DissipationReport, AnalysisError> {
    if series.len() < 2 {
        return Err(AnalysisError::InsufficientData {
            needed: 2,
            got: series.len(),
        });
    }
    let d_max = series.iter().map(|s| s.dissipation).fold(0.0, f64::max);
    let floor = floor.unwrap_or(1e-6 * d_max).max(f64::MIN_POSITIVE);
    let mut max_defect: f64 = 0.0;
    let mut max_increase = f64::NEG_INFINITY;
    for w in series.windows(2) {
        let dt = w[1].t - w[0].t;
        let da = w[1].area - w[0].area;
        max_increase = max_increase.max(da);
        if dt <= 0.0 {
            continue;
        }
        let d = 0.5 * (w[0].dissipation + w[1].dissipation);
        max_defect = max_defect.max((da / dt + d).abs() / d.max(floor));
    }
    Ok(DissipationReport {
        max_defect,
        max_area_increase: max_increase,
        area_nonincreasing: max_increase <= AREA_TOL,
        floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn synthetic(ts: &[f64], r: impl Fn(f64) -> f64, a2: impl Fn(f64) -> f64) -> Vec<TimeSeriesRecord> {
        ts.iter()
            .map(|&t| TimeSeriesRecord {
                t,
                r: r(t),
                sup_a2: a2(t),
                sup_h: 0.0,
                area: 1.0,
                boundary_grad: 0.0,
                u_min: 0.0,
                u_max: 0.0,
                r_prime: 0.0,
                u_boundary: 0.0,
                dissipation: 0.0,
                h_max: 0.0,
                h_min: 0.0,
                sup_grad: 0.0,
            })
            .collect()
    }

    fn times() -> Vec<f64> {
        (0..=98).map(|i| 0.5 + 0.49 * i as f64 / 98.0).collect()
    }

    #[test]
    fn blowup_time_from_square_root_radius() {
        let s = synthetic(&times(), |t| (2.0 * (1.0 - t)).sqrt(), |_| 1.0);
        let fit = estimate_blowup_time(&s, None, FitWindow::default()).unwrap();
        assert!((fit.t_est - 1.0).abs() < 1e-4);
        assert_eq!(fit.p, 2.0);
    }

    #[test]
    fn blowup_power_selected_by_residual() {
        let s = synthetic(&times(), |t| (1.0 - t).powf(0.75), |_| 1.0);
        let fit = estimate_blowup_time(&s, Some(1.0 / 3.0), FitWindow::default()).unwrap();
        assert!((fit.p - 4.0 / 3.0).abs() < 1e-12);
        assert!((fit.t_est - 1.0).abs() < 1e-3);
    }

    #[test]
    fn growing_radius_is_not_pinching() {
        let s = synthetic(&times(), |t| 1.0 + t, |_| 1.0);
        assert_eq!(
            estimate_blowup_time(&s, None, FitWindow::default()),
            Err(AnalysisError::NotPinching)
        );
    }

    #[test]
    fn exponent_fits() {
        let s = synthetic(&times(), |t| (2.0 * (1.0 - t)).sqrt(), |t| 5.0 / (1.0 - t));
        let b = fit_blowup_exponent(&s, 1.0).unwrap();
        assert!((b.beta + 1.0).abs() < 1e-6);
        let s = synthetic(&times(), |t| 1.0 - t, |_| 3.0);
        assert!(fit_blowup_exponent(&s, 1.0).unwrap().beta.abs() < 1e-6);
        assert!(matches!(
            fit_blowup_exponent(&s[..5], 1.0),
            Err(AnalysisError::InsufficientData { .. })
        ));
    }

    #[test]
    fn sandwich_of_exact_type_i() {
        let s = synthetic(&times(), |t| (2.0 * (1.0 - t)).sqrt(), |t| 5.0 / (1.0 - t));
        let (lo, hi) = type_i_sandwich_check(&s, 1.0).unwrap();
        assert!((lo - 5.0).abs() < 1e-9 && (hi - 5.0).abs() < 1e-9);
        let c5 = radius_rate_constant(&s, 1.0).unwrap();
        assert!((c5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classification_of_constructed_series() {
        let r = |t: f64| (2.0 * (1.0 - t)).sqrt();
        let cases: [(Box<dyn Fn(f64) -> f64>, SingularityKind, f64); 3] = [
            (Box::new(|t| 5.0 / (1.0 - t)), SingularityKind::TypeI, -1.0),
            (Box::new(|_| 3.0), SingularityKind::Type0, 0.0),
            (Box::new(|t| (1.0 - t).powf(-1.5)), SingularityKind::TypeII, -1.5),
        ];
        for (a2, kind, beta) in cases {
            let s = synthetic(&times(), r, a2);
            let rep = classify_singularity(&EventKind::Pinched, &s, None);
            assert_eq!(rep.kind, kind);
            assert!((rep.beta.unwrap() - beta).abs() < 1e-3);
        }
        let s = synthetic(&times(), r, |_| 1.0);
        assert_eq!(
            classify_singularity(&EventKind::Converged, &s, None).kind,
            SingularityKind::NoSingularity
        );
        assert_eq!(
            classify_singularity(&EventKind::MaxTime, &s, None).kind,
            SingularityKind::Type0
        );
        assert_eq!(
            classify_singularity(&EventKind::MaxTime, &synthetic(&times(), r, |t| 1.0 / (1.0 - t)), None).kind,
            SingularityKind::InsufficientData
        );
    }

    #[test]
    fn dissipation_of_constant_area() {
        let s = synthetic(&times(), |_| 1.0, |_| 0.0);
        let rep = verify_dissipation(&s, None).unwrap();
        assert_eq!(rep.max_defect, 0.0);
        assert!(rep.area_nonincreasing);
        assert!(verify_dissipation(&s[..1], None).is_err());
    }
}
