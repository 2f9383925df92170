use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use fbflow::analysis::foliation_sweep;
use fbflow::geometry::{self, GraphPoint};
use fbflow::profile::{
    Catenoid, Cone, Cosine, CriticalKind, Cylinder, Power, ProfileCurve, ReciprocalMollified, RegionKind, SupportProfile,
    Tabulated, Window, DEFAULT_SAMPLES, PINCH_TOL, ROOT_TOL,
};
use fbflow::solver::{self, build_initial_cap, FlowState, RecordSchedule, RunOutcome, StepControl, StopThresholds};

fn support(curve: impl ProfileCurve + 'static, lo: f64, hi: f64) -> SupportProfile {
    SupportProfile::new(Arc::new(curve), Window::new(lo, hi).unwrap()).unwrap()
}

/// Worst error of central differences with step `h` against the returned
/// first and second derivatives.
fn fd_error(p: &SupportProfile, z: f64, h: f64) -> f64 {
    let f = |x: f64| p.eval(x).unwrap().value;
    let exact = p.eval(z).unwrap();
    let d1 = (f(z + h) - f(z - h)) / (2.0 * h);
    let d2 = (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
    (d1 - exact.dz).abs().max((d2 - exact.dzz).abs())
}

fn assert_second_order(p: &SupportProfile, z: f64) -> Result<(), TestCaseError> {
    let (coarse, fine) = (fd_error(p, z, 1e-2), fd_error(p, z, 5e-3));
    prop_assert!(fine <= coarse / 3.0 + 1e-8, "z = {z}: errors {coarse:e} -> {fine:e}");
    Ok(())
}

fn c_over(p: &SupportProfile, lo: f64, hi: f64) -> f64 {
    p.graph_constant(Window::new(lo, hi).unwrap()).unwrap()
}

fn short_run(state: FlowState, t_max: f64) -> RunOutcome {
    let stop = StopThresholds {
        t_max,
        ..StopThresholds::default()
    };
    let schedule = RecordSchedule {
        stride: 5,
        snapshot_times: Vec::new(),
    };
    solver::run(state, &StepControl::default(), &stop, &schedule).unwrap()
}

fn catenoid() -> SupportProfile {
    support(Catenoid::new(1.0).unwrap(), -2.0, 2.0)
}

proptest! {
    #[test]
    fn analytic_derivatives_match_differences(
        a in 0.5f64..2.0,
        mean in 2.0f64..3.0,
        amp in 0.2f64..1.0,
        k in 0.5f64..2.0,
        slope in 0.5f64..2.0,
        expo in 1.5f64..3.0,
        z in -3.0f64..3.0,
    ) {
        assert_second_order(&support(Catenoid::new(a).unwrap(), -5.0, 5.0), z)?;
        assert_second_order(&support(Cosine::new(mean, amp, k).unwrap(), -5.0, 5.0), z)?;
        if z.abs() > 0.1 {
            assert_second_order(&support(Cone::new(slope, 0.0).unwrap(), -5.0, 5.0), z)?;
            assert_second_order(&support(Power::new(1.0, expo, vec![0.0]).unwrap(), -5.0, 5.0), z)?;
        }
    }

    #[test]
    fn mollified_reciprocal_derivatives_match_differences(knee in 0.5f64..2.0, z in 0.05f64..10.0) {
        // Away from the blend edges, where the third derivative jumps.
        let w = knee / 4.0;
        prop_assume!((z - (knee - w)).abs() > 0.05 && (z - (knee + w)).abs() > 0.05);
        let p = support(ReciprocalMollified::new(knee).unwrap(), 0.0, 20.0);
        prop_assert!(p.eval(z).unwrap().value > 0.0);
        assert_second_order(&p, z)?;
    }

    #[test]
    fn tabulated_profile_interpolates_its_knots(vals in prop::collection::vec(2.0f64..3.0, 5..20)) {
        let zs: Vec<f64> = (0..vals.len()).map(|i| i as f64 * 0.5).collect();
        let p = support(Tabulated::new(zs.clone(), vals.clone()).unwrap(), 0.0, zs[zs.len() - 1]);
        for (z, v) in zs.iter().zip(&vals) {
            prop_assert!((p.eval(*z).unwrap().value - v).abs() <= 1e-14 * v.abs());
        }
    }

    #[test]
    fn graph_constant_splits_over_subwindows(
        mean in 2.0f64..3.0,
        amp in 0.2f64..1.0,
        k in 0.5f64..2.0,
        a in -4.0f64..-0.5,
        frac in 0.05f64..0.95,
        c in 0.5f64..4.0,
    ) {
        let b = a + frac * (c - a);
        for p in [
            support(Cosine::new(mean, amp, k).unwrap(), -5.0, 5.0),
            support(Catenoid::new(k).unwrap(), -5.0, 5.0),
        ] {
            let whole = c_over(&p, a, c);
            let parts = c_over(&p, a, b).min(c_over(&p, b, c));
            prop_assert!((whole - parts).abs() <= 1e-10, "{whole} vs {parts}");
        }
    }

    #[test]
    fn regions_tile_the_window_and_are_stable(
        mean in 1.5f64..3.0,
        amp in 0.2f64..1.0,
        k in 0.5f64..2.0,
        lo in -6.0f64..-1.0,
        hi in 1.0f64..6.0,
    ) {
        let p = support(Cosine::new(mean, amp, k).unwrap(), lo, hi);
        let w = p.window();
        let d = p.classify_regions(w).unwrap();
        prop_assert_eq!(d.regions[0].z1, lo);
        prop_assert_eq!(d.regions[d.regions.len() - 1].z2, hi);
        for pair in d.regions.windows(2) {
            prop_assert_eq!(pair[0].z2, pair[1].z1);
            prop_assert!(pair[0].z1 < pair[0].z2);
        }
        let fine = p.classify_regions_with(w, 2 * DEFAULT_SAMPLES).unwrap();
        let kinds = |d: &fbflow::profile::RegionDecomposition| d.regions.iter().map(|r| r.kind).collect::<Vec<_>>();
        prop_assert_eq!(kinds(&d), kinds(&fine));

        for cp in &d.critical_points {
            prop_assert!(p.eval(cp.z).unwrap().dz.abs() <= 1e-8);
            let here = p.eval(cp.z).unwrap().value;
            let nb = [cp.z - 1e-3, cp.z + 1e-3].map(|z| p.eval(z).unwrap().value);
            match cp.kind {
                CriticalKind::StrictMin => prop_assert!(nb.iter().all(|&v| v > here)),
                CriticalKind::StrictMax => prop_assert!(nb.iter().all(|&v| v < here)),
                CriticalKind::DegenerateFlat => {}
            }
            // Interior minima belong to necks, interior maxima to bellies.
            if let Some(r) = d.regions.iter().find(|r| r.z1 < cp.z && cp.z < r.z2) {
                match cp.kind {
                    CriticalKind::StrictMin => prop_assert_ne!(r.kind, RegionKind::Belly),
                    CriticalKind::StrictMax => prop_assert_ne!(r.kind, RegionKind::ShrinkingNeck),
                    CriticalKind::DegenerateFlat => {}
                }
            }
        }
    }

    #[test]
    fn pinch_points_are_isolated_zeros(
        first in -3.0f64..-1.0,
        gaps in prop::collection::vec(0.5f64..1.5, 0..3),
        expo in 1.5f64..3.0,
    ) {
        let mut zeros = vec![first];
        for g in &gaps {
            zeros.push(zeros[zeros.len() - 1] + g);
        }
        let p = support(Power::new(1.0, expo, zeros.clone()).unwrap(), -4.0, 4.0);
        let found = p.pinch_points(p.window()).unwrap();
        prop_assert_eq!(found.len(), zeros.len());
        for (f, z) in found.iter().zip(&zeros) {
            prop_assert!((f - z).abs() <= 1e-8, "{f} vs {z}");
            prop_assert!(p.eval(*f).unwrap().value <= PINCH_TOL);
            for side in [f - 1e-2, f + 1e-2] {
                prop_assert!(p.eval(side).unwrap().value > PINCH_TOL);
            }
        }
        prop_assert!(ROOT_TOL > 0.0);
    }

    #[test]
    fn curvature_satisfies_cauchy_schwarz(
        y in 0.0f64..3.0,
        slope in -5.0f64..5.0,
        curv in -10.0f64..10.0,
        n in 2usize..6,
    ) {
        let p = if y == 0.0 { GraphPoint::new(0.0, 0.0, curv, n) } else { GraphPoint::new(y, slope, curv, n) };
        let h = geometry::mean_curvature(&p).unwrap();
        let a2 = geometry::second_fundamental_norm(&p).unwrap();
        prop_assert!(h * h <= n as f64 * a2 * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn flat_disk_area_is_ball_volume(radius in 0.2f64..3.0, n in 2usize..5, height in -1.0f64..1.0) {
        let p = support(Cylinder::new(radius).unwrap(), -2.0, 2.0);
        let state = FlowState::new(p, n, 0.0, radius, vec![height; 513]).unwrap();
        let ball = match n {
            2 => PI * radius.powi(2),
            3 => 4.0 / 3.0 * PI * radius.powi(3),
            _ => PI * PI / 2.0 * radius.powi(4),
        };
        let area = geometry::area(&state).unwrap();
        prop_assert!((area - ball).abs() <= 1e-10 * ball, "{area} vs {ball}");
        prop_assert!(geometry::dissipation(&state).unwrap() <= 1e-20);
    }

    #[test]
    fn dissipation_vanishes_only_for_minimal_graphs(z0 in -1.5f64..1.5, n in 2usize..4) {
        let state = build_initial_cap(&catenoid(), z0, 64, n, 0.0).unwrap();
        let rec = solver::measure(&state).unwrap();
        let d = geometry::dissipation(&state).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d == 0.0, rec.sup_h == 0.0);
        prop_assert_eq!(rec.sup_h == 0.0, z0 == 0.0);
        prop_assert!(rec.sup_a2 >= rec.sup_h * rec.sup_h / n as f64 * (1.0 - 1e-12));
        prop_assert!(rec.r > 0.0 && rec.area > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flows_obey_maximum_principles(z0 in -1.5f64..1.5, bump in -0.2f64..0.2, n in 2usize..4) {
        let p = catenoid();
        let init = build_initial_cap(&p, z0, 24, n, bump).unwrap();
        let out = short_run(init, 0.3);
        let first = out.records[0];
        let sup_u0 = first.u_min.abs().max(first.u_max.abs());
        let mut sup_boundary: f64 = 0.0;
        let bound = geometry::boundary_gradient_bound(p.graph_constant(p.window()).unwrap()).unwrap();
        for rec in &out.records {
            sup_boundary = sup_boundary.max(rec.u_boundary.abs());
            let sup_u = rec.u_min.abs().max(rec.u_max.abs());
            prop_assert!(sup_u <= sup_u0.max(sup_boundary) + 1e-6, "t = {}: {sup_u}", rec.t);
            prop_assert!(rec.sup_grad <= first.sup_grad.max(bound) + 1e-3, "t = {}: {}", rec.t, rec.sup_grad);
            prop_assert!(rec.boundary_grad <= bound + 1e-6);
            prop_assert!(out.event.state.constraint_residual().unwrap() <= 1e-10);
        }
    }

    #[test]
    fn mean_curvature_sign_is_preserved(z0 in 0.2f64..1.5, n in 2usize..4) {
        let p = catenoid();
        for (height, positive) in [(z0, true), (-z0, false)] {
            let out = short_run(build_initial_cap(&p, height, 24, n, 0.0).unwrap(), 0.3);
            for rec in &out.records {
                if positive {
                    prop_assert!(rec.h_min > 0.0, "t = {}: {}", rec.t, rec.h_min);
                } else {
                    prop_assert!(rec.h_max < 0.0, "t = {}: {}", rec.t, rec.h_max);
                }
            }
        }
    }

    #[test]
    fn ordered_caps_stay_ordered(a in -1.5f64..1.2, gap in 0.1f64..1.0, n in 2usize..4) {
        let p = catenoid();
        let b = (a + gap).min(1.5);
        let lo = build_initial_cap(&p, a, 24, n, 0.0).unwrap();
        let up = build_initial_cap(&p, b, 32, n, 0.0).unwrap();
        let stop = StopThresholds { t_max: 0.3, ..StopThresholds::default() };
        let times = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
        let sweep = foliation_sweep(lo, up, &StepControl::default(), &stop, 10, &times);
        let rep = sweep.map_err(|e| TestCaseError::fail(e.to_string()))?.report;
        prop_assert_eq!(rep.checked_times, times.len());
        prop_assert!(rep.min_gap > -fbflow::analysis::ORDERING_TOL);
    }
}
