//! Support-hypersurface generating curves and their analysis.
//!
//! A support hypersurface is the surface of revolution of `r = ω_Σ(z)` about
//! the `z` axis. Each catalogue entry implements [`ProfileCurve`]; a
//! [`SupportProfile`] pairs one with the axis window on which analysis runs.

mod catalog;
mod registry;
pub(crate) mod roots;
mod spline;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use catalog::{Catenoid, Cone, Cosine, Cylinder, GaussianBump, Power, ReciprocalMollified, Tabulated};
pub use registry::{ParamValue, ProfileBuilder, ProfileParams, ProfileRegistry};
pub use roots::{DEFAULT_SAMPLES, ROOT_TOL};
pub use spline::CubicSpline;

use roots::Root;

/// Profile values at or below this are treated as pinch points.
pub const PINCH_TOL: f64 = 1e-9;
/// Derivative magnitude below which a sample counts as stationary.
const SLOPE_ZERO_TOL: f64 = 1e-12;
/// A located sign change with a residual above this is a kink, not a zero.
const KINK_TOL: f64 = 1e-6;
/// Profile variation below which a critical point is degenerate-flat.
const FLAT_VARIATION: f64 = 1e-12;
/// Graph constants below this violate the graph condition.
const GRAPH_CONSTANT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("z = {z} lies outside the tabulated domain [{lo}, {hi}]")]
    OutOfDomain { z: f64, lo: f64, hi: f64 },
    #[error("graph condition violated: inf <nu_Sigma, e1> = {0:e} over the window")]
    GraphConditionViolated(f64),
    #[error("invalid window [{lo}, {hi}]")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("invalid profile parameter: {0}")]
    InvalidParameter(String),
    #[error("tabulated profile: {0}")]
    Tabulated(String),
    #[error("unknown profile kind {0:?}")]
    UnknownKind(String),
    #[error("contact angle {0} must lie in (0, pi)")]
    ContactAngle(f64),
}

/// Closed axis interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ProfileError> {
        if lo.is_finite() && hi.is_finite() && hi > lo {
            Ok(Self { lo, hi })
        } else {
            Err(ProfileError::InvalidWindow { lo, hi })
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.lo && z <= self.hi
    }

    fn sample_spacing(&self, samples: usize) -> f64 {
        self.len() / (samples.max(2) - 1) as f64
    }
}

/// Which one-sided derivative to report at a non-smooth point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    Left,
    #[default]
    Right,
}

/// `ω_Σ(z)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValue {
    pub value: f64,
    pub dz: f64,
    pub dzz: f64,
}

impl ProfileValue {
    pub const fn new(value: f64, dz: f64, dzz: f64) -> Self {
        Self { value, dz, dzz }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EndFlags {
    /// The limit of ω_Σ at this end does not exist.
    pub eq_condition: bool,
    /// The derivative has the sign of z beyond some finite point.
    pub no_shrinking: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlagStatus {
    /// Set from closed-form knowledge of the curve.
    Analytic,
    /// Estimated from the tabulated window only.
    WindowOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AsymptoticFlags {
    pub lower: EndFlags,
    pub upper: EndFlags,
    pub status: FlagStatus,
}

impl AsymptoticFlags {
    /// Either asymptotic hypothesis of long-time existence holds at both ends.
    pub fn long_time_hypotheses(&self) -> bool {
        let ok = |e: EndFlags| e.eq_condition || e.no_shrinking;
        ok(self.lower) && ok(self.upper)
    }
}

/// A generating curve `ω_Σ`. Implementations are immutable and shareable
/// across concurrent flow runs.
pub trait ProfileCurve: Send + Sync + fmt::Debug {
    /// Catalogue tag, e.g. `"catenoid"`.
    fn kind(&self) -> &'static str;

    /// Value and derivatives at `z`; `side` selects the one-sided derivative
    /// where the curve has a kink.
    fn eval(&self, z: f64, side: Side) -> Result<ProfileValue, ProfileError>;

    fn asymptotics(&self) -> AsymptoticFlags;

    /// `σ` with `|ω_Σ'| ~ ω_Σ^σ` near a pinch point, when known.
    fn pinch_exponent(&self) -> Option<f64> {
        None
    }

    /// `σ` with `|ω_Σ'| <= C ω_Σ^{1+σ}` along a decaying end, when known.
    fn decay_exponent(&self) -> Option<f64> {
        None
    }

    /// Domain of definition for curves that are not defined on the whole axis.
    fn domain(&self) -> Option<Window> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalKind {
    StrictMin,
    StrictMax,
    DegenerateFlat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub z: f64,
    pub kind: CriticalKind,
    /// Extent of a stationary plateau; `None` for isolated points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plateau: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    ShrinkingNeck,
    Belly,
    FlatDegenerate,
    /// No critical point inside: vacuously both a neck and a belly.
    Monotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub z1: f64,
    pub z2: f64,
    pub kind: RegionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionDecomposition {
    pub window: Window,
    pub regions: Vec<Region>,
    pub critical_points: Vec<CriticalPoint>,
    pub pinch_points: Vec<f64>,
}

impl RegionDecomposition {
    pub fn region_at(&self, z: f64) -> Option<&Region> {
        self.regions.iter().find(|r| z >= r.z1 && z <= r.z2)
    }
}

/// A generating curve restricted to an analysis window.
#[derive(Clone)]
pub struct SupportProfile {
    curve: Arc<dyn ProfileCurve>,
    window: Window,
}

impl fmt::Debug for SupportProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SupportProfile")
            .field("curve", &self.curve)
            .field("window", &self.window)
            .finish()
    }
}

impl SupportProfile {
    pub fn new(curve: Arc<dyn ProfileCurve>, window: Window) -> Result<Self, ProfileError> {
        let profile = Self { curve, window };
        profile.check_window(window)?;
        for z in roots::sample_points(window, 257) {
            let v = profile.eval(z)?;
            if v.value < 0.0 {
                return Err(ProfileError::InvalidParameter(format!(
                    "profile is negative ({}) at z = {z}",
                    v.value
                )));
            }
        }
        Ok(profile)
    }

    pub fn from_curve(curve: impl ProfileCurve + 'static, window: Window) -> Result<Self, ProfileError> {
        Self::new(Arc::new(curve), window)
    }

    pub fn curve(&self) -> &dyn ProfileCurve {
        self.curve.as_ref()
    }

    pub fn kind(&self) -> &'static str {
        self.curve.kind()
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn eval(&self, z: f64) -> Result<ProfileValue, ProfileError> {
        self.curve.eval(z, Side::Right)
    }

    pub fn eval_sided(&self, z: f64, side: Side) -> Result<ProfileValue, ProfileError> {
        self.curve.eval(z, side)
    }

    fn check_window(&self, window: Window) -> Result<(), ProfileError> {
        Window::new(window.lo, window.hi)?;
        if let Some(dom) = self.curve.domain() {
            for z in [window.lo, window.hi] {
                if !dom.contains(z) {
                    return Err(ProfileError::OutOfDomain {
                        z,
                        lo: dom.lo,
                        hi: dom.hi,
                    });
                }
            }
        }
        Ok(())
    }

    /// Derivative seen from both sides; kinks contribute the steeper one.
    fn steepest_slope(&self, z: f64) -> f64 {
        let l = self.curve.eval(z, Side::Left).map(|v| v.dz.abs()).unwrap_or(0.0);
        let r = self.curve.eval(z, Side::Right).map(|v| v.dz.abs()).unwrap_or(0.0);
        l.max(r)
    }

    fn value_or_nan(&self, z: f64) -> f64 {
        self.eval(z).map(|v| v.value).unwrap_or(f64::NAN)
    }

    /// `inf 1/sqrt(1 + ω_Σ'²)` over `window`.
    pub fn graph_constant(&self, window: Window) -> Result<f64, ProfileError> {
        self.check_window(window)?;
        let (_, max_slope_sq) = roots::maximise(
            |z| self.steepest_slope(z).powi(2),
            window.lo,
            window.hi,
            DEFAULT_SAMPLES,
        );
        let c = 1.0 / (1.0 + max_slope_sq).sqrt();
        if c.is_nan() || c < GRAPH_CONSTANT_FLOOR {
            return Err(ProfileError::GraphConditionViolated(if c.is_nan() { 0.0 } else { c }));
        }
        Ok(c)
    }

    pub fn critical_points(&self, window: Window) -> Result<Vec<CriticalPoint>, ProfileError> {
        self.critical_points_with(window, DEFAULT_SAMPLES)
    }

    pub fn critical_points_with(
        &self,
        window: Window,
        samples: usize,
    ) -> Result<Vec<CriticalPoint>, ProfileError> {
        self.check_window(window)?;
        let delta = window.sample_spacing(samples);
        let pinches = self.pinch_points_with(window, samples)?;
        let slope = |z: f64| self.eval(z).map(|v| v.dz).unwrap_or(f64::NAN);
        let mut out = Vec::new();
        for root in roots::scan_roots(slope, window, samples, SLOPE_ZERO_TOL) {
            match root {
                Root::Crossing { z, jump, rising } => {
                    if jump > KINK_TOL || pinches.iter().any(|p| (p - z).abs() < 1e-8) {
                        continue;
                    }
                    let kind = self.neighbourhood_kind(z, delta, rising);
                    out.push(CriticalPoint {
                        z,
                        kind,
                        plateau: None,
                    });
                }
                Root::Flat { lo, hi } => out.push(CriticalPoint {
                    z: 0.5 * (lo + hi),
                    kind: CriticalKind::DegenerateFlat,
                    plateau: Some((lo, hi)),
                }),
            }
        }
        Ok(out)
    }

    fn neighbourhood_kind(&self, z: f64, delta: f64, rising: bool) -> CriticalKind {
        let centre = self.value_or_nan(z);
        let sides: Vec<f64> = [z - delta, z + delta]
            .iter()
            .map(|&x| self.value_or_nan(x))
            .filter(|v| v.is_finite())
            .collect();
        let variation = sides.iter().map(|v| (v - centre).abs()).fold(0.0, f64::max);
        if variation < FLAT_VARIATION {
            CriticalKind::DegenerateFlat
        } else if rising {
            CriticalKind::StrictMin
        } else {
            CriticalKind::StrictMax
        }
    }

    pub fn pinch_points(&self, window: Window) -> Result<Vec<f64>, ProfileError> {
        self.pinch_points_with(window, DEFAULT_SAMPLES)
    }

    pub fn pinch_points_with(&self, window: Window, samples: usize) -> Result<Vec<f64>, ProfileError> {
        self.check_window(window)?;
        let zs = roots::sample_points(window, samples);
        let vals: Vec<f64> = zs.iter().map(|&z| self.value_or_nan(z)).collect();
        let slope = |z: f64| self.eval(z).map(|v| v.dz).unwrap_or(f64::NAN);
        let mut out: Vec<f64> = Vec::new();
        let n = zs.len();
        for i in 0..n {
            let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
            let right = if i + 1 < n { vals[i + 1] } else { f64::INFINITY };
            if !(vals[i] <= left && vals[i] <= right) {
                continue;
            }
            // Sign change of the derivative in the neighbouring cells, which
            // also brackets a kink. High-order zeros stay below tolerance over
            // a wide plateau, so the sample alone is not accurate enough.
            let a = zs[i.saturating_sub(1)];
            let b = zs[(i + 1).min(n - 1)];
            let z = if slope(a) < 0.0 && slope(b) > 0.0 {
                roots::bisect(&slope, a, b).0
            } else {
                zs[i]
            };
            if self.value_or_nan(z) <= PINCH_TOL && !out.iter().any(|p| (p - z).abs() < 1e-8) {
                out.push(z);
            }
        }
        Ok(out)
    }

    pub fn classify_regions(&self, window: Window) -> Result<RegionDecomposition, ProfileError> {
        self.classify_regions_with(window, DEFAULT_SAMPLES)
    }

    pub fn classify_regions_with(
        &self,
        window: Window,
        samples: usize,
    ) -> Result<RegionDecomposition, ProfileError> {
        let critical_points = self.critical_points_with(window, samples)?;
        let pinch_points = self.pinch_points_with(window, samples)?;

        let mut cuts = vec![window.lo];
        cuts.extend(pinch_points.iter().copied().filter(|&p| p > window.lo && p < window.hi));
        cuts.push(window.hi);

        let mut regions = Vec::new();
        for seg in cuts.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            let inside: Vec<CriticalPoint> = critical_points
                .iter()
                .copied()
                .filter(|c| c.z > lo && c.z < hi)
                .collect();
            self.tile_component(lo, hi, &inside, &mut regions);
        }
        Ok(RegionDecomposition {
            window,
            regions,
            critical_points,
            pinch_points,
        })
    }

    fn tile_component(&self, lo: f64, hi: f64, crit: &[CriticalPoint], out: &mut Vec<Region>) {
        // Groups of consecutive compatible critical points.
        struct Group {
            kind: RegionKind,
            first: CriticalPoint,
            last: CriticalPoint,
        }
        let mut groups: Vec<Group> = Vec::new();
        for &c in crit {
            let kind = match (c.kind, c.plateau) {
                (_, Some(_)) => RegionKind::FlatDegenerate,
                (CriticalKind::StrictMin, None) => RegionKind::ShrinkingNeck,
                (CriticalKind::StrictMax, None) => RegionKind::Belly,
                // Isolated degenerate points are weak minima and weak maxima.
                (CriticalKind::DegenerateFlat, None) => RegionKind::Monotone,
            };
            match groups.last_mut() {
                Some(g)
                    if g.kind != RegionKind::FlatDegenerate
                        && kind != RegionKind::FlatDegenerate
                        && (g.kind == kind || kind == RegionKind::Monotone || g.kind == RegionKind::Monotone) =>
                {
                    if g.kind == RegionKind::Monotone {
                        g.kind = kind;
                    }
                    g.last = c;
                }
                _ => groups.push(Group {
                    kind,
                    first: c,
                    last: c,
                }),
            }
        }
        if groups.is_empty() {
            out.push(Region {
                z1: lo,
                z2: hi,
                kind: RegionKind::Monotone,
            });
            return;
        }
        let mut start = lo;
        for (i, g) in groups.iter().enumerate() {
            let end = match groups.get(i + 1) {
                None => hi,
                Some(next) => {
                    if let Some((_, plateau_hi)) = g.last.plateau {
                        plateau_hi
                    } else if let Some((plateau_lo, _)) = next.first.plateau {
                        plateau_lo
                    } else {
                        self.steepest_between(g.last.z, next.first.z)
                    }
                }
            };
            let kind = if g.kind == RegionKind::Monotone {
                RegionKind::FlatDegenerate
            } else {
                g.kind
            };
            let (z1, z2) = match g.first.plateau {
                Some((plo, phi)) if groups.len() == 1 => (lo.min(plo), hi.max(phi)),
                _ => (start, end),
            };
            out.push(Region { z1, z2, kind });
            start = end;
        }
    }

    fn steepest_between(&self, a: f64, b: f64) -> f64 {
        roots::maximise(|z| self.steepest_slope(z), a, b, 257).0
    }

    pub fn check_asymptotics(&self) -> AsymptoticFlags {
        self.curve.asymptotics()
    }

    /// Axis points where a disk meeting Σ at contact angle `alpha` could be
    /// stationary: `ω_Σ'/sqrt(1+ω_Σ'²) = -cos(alpha)`. An empty result means
    /// no equilibrium exists in the window.
    pub fn contact_angle_equilibria(&self, window: Window, alpha: f64) -> Result<Vec<f64>, ProfileError> {
        if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
            return Err(ProfileError::ContactAngle(alpha));
        }
        self.check_window(window)?;
        let target = -alpha.cos();
        let f = |z: f64| {
            self.eval(z)
                .map(|v| v.dz / (1.0 + v.dz * v.dz).sqrt() - target)
                .unwrap_or(f64::NAN)
        };
        Ok(roots::scan_roots(f, window, DEFAULT_SAMPLES, SLOPE_ZERO_TOL)
            .into_iter()
            .filter_map(|r| match r {
                Root::Crossing { z, jump, .. } if jump <= KINK_TOL => Some(z),
                Root::Crossing { .. } => None,
                Root::Flat { lo, hi } => Some(0.5 * (lo + hi)),
            })
            .collect())
    }

    /// The cone hypothesis: exactly one pinch point `z*` in the window and
    /// `(z - z*) ω_Σ'(z) > 0` elsewhere.
    pub fn is_conelike(&self, window: Window) -> Result<Option<f64>, ProfileError> {
        let pinches = self.pinch_points(window)?;
        let [apex] = pinches[..] else {
            return Ok(None);
        };
        let ok = roots::sample_points(window, DEFAULT_SAMPLES)
            .into_iter()
            .filter(|z| (z - apex).abs() > 1e-9)
            .all(|z| self.eval(z).map(|v| (z - apex) * v.dz > 0.0).unwrap_or(false));
        Ok(ok.then_some(apex))
    }
}
