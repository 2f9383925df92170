//! Compatible initial data.

use super::{FlowState, SolverError};
use crate::profile::{SupportProfile, PINCH_TOL};

/// Quadratic cap `z0 + c (y² - r²)` meeting Σ orthogonally at height `z0`,
/// plus the optional interior bump `b (1 - (y/r)²)²`, which leaves both
/// boundary conditions untouched.
pub fn build_initial_cap(
    profile: &SupportProfile,
    z0: f64,
    m: usize,
    n: usize,
    bump: f64,
) -> Result<FlowState, SolverError> {
    if !z0.is_finite() || !profile.window().contains(z0) {
        return Err(SolverError::InvalidState(format!(
            "z0 = {z0} lies outside the profile window [{}, {}]",
            profile.window().lo,
            profile.window().hi
        )));
    }
    if !bump.is_finite() {
        return Err(SolverError::InvalidState(format!("bump amplitude {bump} is not finite")));
    }
    let pv = profile.eval(z0)?;
    if pv.value <= PINCH_TOL {
        return Err(SolverError::DegenerateDomain { z0 });
    }
    let r = pv.value;
    let c = cap_coefficient(pv.dz, r);
    let u = (0..=m)
        .map(|i| {
            let s = i as f64 / m as f64;
            let w = 1.0 - s * s;
            z0 + c * r * r * (s * s - 1.0) + bump * w * w
        })
        .collect();
    FlowState::new(profile.clone(), n, 0.0, r, u)
}

/// `c` in `z0 + c (y² - r²)` for a cap meeting Σ orthogonally where
/// `ω_Σ' = profile_slope`.
pub fn cap_coefficient(profile_slope: f64, r: f64) -> f64 {
    -profile_slope / (2.0 * r)
}

/// Graph values sampled at equally spaced radii `ys[0] = 0, ..., ys[M] = r`.
/// The boundary must already lie on Σ; the Neumann condition is only
/// reported by [`FlowState::neumann_residual`], not enforced.
pub fn from_samples(
    profile: &SupportProfile,
    n: usize,
    ys: &[f64],
    us: &[f64],
) -> Result<FlowState, SolverError> {
    if ys.len() != us.len() || ys.len() < 2 {
        return Err(SolverError::InvalidState("need matching y and u columns".into()));
    }
    let m = ys.len() - 1;
    let r = ys[m];
    if ys[0] != 0.0 || !(r > 0.0) {
        return Err(SolverError::InvalidState("radii must run from 0 to r > 0".into()));
    }
    let h = r / m as f64;
    if ys.iter().enumerate().any(|(i, y)| (y - i as f64 * h).abs() > 1e-9 * r) {
        return Err(SolverError::InvalidState("radii must be equally spaced".into()));
    }
    let state = FlowState::new(profile.clone(), n, 0.0, r, us.to_vec())?;
    let residual = state.constraint_residual()?;
    if residual > 1e-8 * r.max(1.0) {
        return Err(SolverError::InvalidState(format!(
            "boundary does not lie on the support: |r - ω_Σ(u_M)| = {residual:e}"
        )));
    }
    Ok(state)
}

/// Parse whitespace- or comma-separated `y u` columns; `#` starts a comment.
pub fn parse_samples(text: &str) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    let mut ys = Vec::new();
    let mut us = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| SolverError::InvalidState(format!("initial samples line {}: not a number", lineno + 1)))?;
        match cols[..] {
            [y, u] => {
                ys.push(y);
                us.push(u);
            }
            _ => {
                return Err(SolverError::InvalidState(format!(
                    "initial samples line {}: expected two columns",
                    lineno + 1
                )))
            }
        }
    }
    Ok((ys, us))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Catenoid, Cone, Window};

    fn catenoid() -> SupportProfile {
        SupportProfile::from_curve(Catenoid::new(1.0).unwrap(), Window::new(-2.0, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn cap_examples() {
        let flat = build_initial_cap(&catenoid(), 0.0, 16, 2, 0.0).unwrap();
        assert_eq!(flat.r, 1.0);
        assert!(flat.u.iter().all(|&u| u == 0.0));

        let cap = build_initial_cap(&catenoid(), 1.0, 16, 2, 0.0).unwrap();
        assert!((cap.r - 1f64.cosh()).abs() < 1e-15);
        let c = cap_coefficient(1f64.sinh(), cap.r);
        assert!((c + 0.38080).abs() < 1e-5);
        assert!((cap.u[16] - 1.0).abs() < 1e-15);

        let cone = SupportProfile::from_curve(Cone::new(1.0, 0.0).unwrap(), Window::new(-2.0, 2.0).unwrap()).unwrap();
        let cap = build_initial_cap(&cone, 1.0, 10, 2, 0.0).unwrap();
        assert_eq!(cap.r, 1.0);
        for (i, u) in cap.u.iter().enumerate() {
            let y = i as f64 / 10.0;
            assert!((u - (1.0 - (y * y - 1.0) / 2.0)).abs() < 1e-15);
        }
        assert!(cap.neumann_residual().unwrap().abs() < 1e-12);
    }

    #[test]
    fn apex_is_degenerate() {
        let cone = SupportProfile::from_curve(Cone::new(1.0, 0.0).unwrap(), Window::new(-2.0, 2.0).unwrap()).unwrap();
        assert!(matches!(
            build_initial_cap(&cone, 0.0, 16, 2, 0.0),
            Err(SolverError::DegenerateDomain { .. })
        ));
    }

    #[test]
    fn bump_keeps_compatibility() {
        let cap = build_initial_cap(&catenoid(), 0.5, 64, 3, 0.1).unwrap();
        assert!(cap.constraint_residual().unwrap() < 1e-15);
        assert!(cap.neumann_residual().unwrap().abs() < 1e-3);
        assert!(cap.axis_slope().abs() < 2.0 / 64.0);
    }

    #[test]
    fn samples_round_trip() {
        let cap = build_initial_cap(&catenoid(), 1.0, 20, 2, 0.0).unwrap();
        let ys: Vec<f64> = (0..=20).map(|i| cap.y(i)).collect();
        let text: String = ys
            .iter()
            .zip(&cap.u)
            .map(|(y, u)| format!("{y:.17e} {u:.17e}\n"))
            .collect();
        let (ys2, us2) = parse_samples(&text).unwrap();
        let state = from_samples(&catenoid(), 2, &ys2, &us2).unwrap();
        assert_eq!(state.u, cap.u);
        let mut bad = us2.clone();
        bad[20] += 0.1;
        assert!(from_samples(&catenoid(), 2, &ys2, &bad).is_err());
    }
}
