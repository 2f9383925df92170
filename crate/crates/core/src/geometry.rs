//! Pointwise geometry of a rotating radial graph `z = ω(|x|)` over a disk in
//! `R^n`, and the area functionals of a flow state.

use thiserror::Error;

use crate::profile::{ProfileError, SupportProfile};
use crate::solver::FlowState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("graph is not smooth at the axis: slope {0} at y = 0")]
    AxisRegularity(f64),
    #[error("graph constant {0} outside (0, 1]")]
    GraphConstant(f64),
    #[error("invalid graph point: {0}")]
    InvalidPoint(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Radius, first and second radial derivative, and disk dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphPoint {
    pub y: f64,
    pub slope: f64,
    pub curvature: f64,
    pub n: usize,
}

impl GraphPoint {
    pub fn new(y: f64, slope: f64, curvature: f64, n: usize) -> Self {
        Self {
            y,
            slope,
            curvature,
            n,
        }
    }

    fn check(&self) -> Result<(), GeometryError> {
        if self.n < 2 || !(self.y >= 0.0) || !self.slope.is_finite() || !self.curvature.is_finite() {
            return Err(GeometryError::InvalidPoint(format!("{self:?}")));
        }
        if self.y == 0.0 && self.slope != 0.0 {
            return Err(GeometryError::AxisRegularity(self.slope));
        }
        Ok(())
    }
}

pub fn slope_factor(p: &GraphPoint) -> f64 {
    p.slope.hypot(1.0)
}

/// Mean curvature with respect to the upward normal, positive on domes.
pub fn mean_curvature(p: &GraphPoint) -> Result<f64, GeometryError> {
    p.check()?;
    let n = p.n as f64;
    if p.y == 0.0 {
        return Ok(-n * p.curvature);
    }
    let v = slope_factor(p);
    Ok(-p.curvature / (v * v * v) - (n - 1.0) * p.slope / (p.y * v))
}

pub fn second_fundamental_norm(p: &GraphPoint) -> Result<f64, GeometryError> {
    p.check()?;
    let n = p.n as f64;
    if p.y == 0.0 {
        return Ok(n * p.curvature * p.curvature);
    }
    let v2 = 1.0 + p.slope * p.slope;
    let rot = p.slope / p.y;
    Ok(p.curvature * p.curvature / (v2 * v2 * v2) + (n - 1.0) * rot * rot / v2)
}

/// `ω' + ω_Σ'(z)`; zero when the graph meets Σ orthogonally at height `z`.
pub fn neumann_residual(slope: f64, profile: &SupportProfile, z: f64) -> Result<f64, GeometryError> {
    Ok(slope + profile.eval(z)?.dz)
}

/// Largest boundary slope compatible with `sqrt(1 + ω'²) <= 1/C_Σ`.
pub fn boundary_gradient_bound(graph_constant: f64) -> Result<f64, GeometryError> {
    let c = graph_constant;
    if !(c > 0.0 && c <= 1.0) {
        return Err(GeometryError::GraphConstant(c));
    }
    Ok((1.0 / (c * c) - 1.0).max(0.0).sqrt())
}

/// Measure of the unit `(n-1)`-sphere.
pub fn sphere_measure(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma_half_integer(n)
}

/// `Γ(n/2)` for positive integers `n`.
fn gamma_half_integer(n: usize) -> f64 {
    let mut k = n;
    let mut acc = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    // Γ(n/2) = (n/2 - 1) Γ(n/2 - 1), down to Γ(1) = 1 or Γ(1/2) = √π.
    while k > 2 {
        k -= 2;
        acc *= k as f64 / 2.0;
    }
    acc
}

/// Weights `w_i` with `∫_0^1 s^{n-1} f(s) ds = Σ w_i f_i` exactly for
/// piecewise-linear `f` on the uniform grid `s_i = i/m`.
pub fn radial_weights(m: usize, n: usize) -> Vec<f64> {
    let h = 1.0 / m as f64;
    let p = n - 1;
    let binom = |k: usize| -> f64 {
        (0..k).fold(1.0, |acc, j| acc * (p - j) as f64 / (j + 1) as f64)
    };
    let scale = h.powi(n as i32);
    let mut w = vec![0.0; m + 1];
    for i in 0..m {
        // On cell [s_i, s_{i+1}] with s = h (i + τ):
        // left  ∫ (i+τ)^p (1-τ) dτ, right ∫ (i+τ)^p τ dτ.
        let fi = i as f64;
        let (mut left, mut right) = (0.0, 0.0);
        for k in 0..=p {
            let c = binom(k) * fi.powi((p - k) as i32);
            left += c / ((k + 1) * (k + 2)) as f64;
            right += c / (k + 2) as f64;
        }
        w[i] += scale * left;
        w[i + 1] += scale * right;
    }
    w
}

/// `σ_{n-1} r^n Σ w_i f_i`, the radial integral of nodal values `f`.
fn radial_integral(state: &FlowState, f: impl Fn(usize) -> f64) -> f64 {
    let w = radial_weights(state.m(), state.n);
    let sum: f64 = w.iter().enumerate().map(|(i, wi)| wi * f(i)).sum();
    sphere_measure(state.n) * state.r.powi(state.n as i32) * sum
}

/// Area of the graph.
pub fn area(state: &FlowState) -> Result<f64, GeometryError> {
    let pts = state.nodal_points()?;
    Ok(radial_integral(state, |i| slope_factor(&pts[i])))
}

/// `∫ H² dμ`, the rate at which the flow loses area.
pub fn dissipation(state: &FlowState) -> Result<f64, GeometryError> {
    let pts = state.nodal_points()?;
    let mut f = Vec::with_capacity(pts.len());
    for p in &pts {
        let h = mean_curvature(p)?;
        f.push(h * h * slope_factor(p));
    }
    Ok(radial_integral(state, |i| f[i]))
}
