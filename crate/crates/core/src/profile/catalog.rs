//! Built-in support-profile curves.

use std::fmt;

use super::spline::CubicSpline;
use super::{AsymptoticFlags, EndFlags, FlagStatus, ProfileCurve, ProfileError, ProfileValue, Side, Window};

fn positive(name: &str, value: f64) -> Result<f64, ProfileError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ProfileError::InvalidParameter(format!(
            "{name} must be a positive finite number, got {value}"
        )))
    }
}

fn finite(name: &str, value: f64) -> Result<f64, ProfileError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ProfileError::InvalidParameter(format!(
            "{name} must be finite, got {value}"
        )))
    }
}

/// `sign(z - apex)` with the caller's side choice at the apex itself.
fn side_sign(offset: f64, side: Side) -> f64 {
    if offset > 0.0 {
        1.0
    } else if offset < 0.0 {
        -1.0
    } else {
        match side {
            Side::Right => 1.0,
            Side::Left => -1.0,
        }
    }
}

const UNBOUNDED_BOTH: AsymptoticFlags = AsymptoticFlags {
    lower: EndFlags {
        eq_condition: true,
        no_shrinking: true,
    },
    upper: EndFlags {
        eq_condition: true,
        no_shrinking: true,
    },
    status: FlagStatus::Analytic,
};

/// Round cylinder of radius `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    pub radius: f64,
}

impl Cylinder {
    pub fn new(radius: f64) -> Result<Self, ProfileError> {
        Ok(Self {
            radius: positive("R", radius)?,
        })
    }
}

impl ProfileCurve for Cylinder {
    fn kind(&self) -> &'static str {
        "cylinder"
    }

    fn eval(&self, _z: f64, _side: Side) -> Result<ProfileValue, ProfileError> {
        Ok(ProfileValue::new(self.radius, 0.0, 0.0))
    }

    fn asymptotics(&self) -> AsymptoticFlags {
        let end = EndFlags {
            eq_condition: false,
            no_shrinking: false,
        };
        AsymptoticFlags {
            lower: end,
            upper: end,
            status: FlagStatus::Analytic,
        }
    }
}

/// Catenoid neck `a cosh(z / a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Catenoid {
    pub a: f64,
}

impl Catenoid {
    pub fn new(a: f64) -> Result<Self, ProfileError> {
        Ok(Self {
            a: positive("a", a)?,
        })
    }
}

impl ProfileCurve for Catenoid {
    fn kind(&self) -> &'static str {
        "catenoid"
    }

    fn eval(&self, z: f64, _side: Side) -> Result<ProfileValue, ProfileError> {
        let x = z / self.a;
        Ok(ProfileValue::new(self.a * x.cosh(), x.sinh(), x.cosh() / self.a))
    }

    fn asymptotics(&self) -> AsymptoticFlags {
        UNBOUNDED_BOTH
    }
}

/// Unduloid-like oscillation `A + B cos(k z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cosine {
    pub mean: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
}

impl Cosine {
    pub fn new(mean: f64, amplitude: f64, wavenumber: f64) -> Result<Self, ProfileError> {
        let mean = finite("A", mean)?;
        let amplitude = finite("B", amplitude)?;
        let wavenumber = finite("k", wavenumber)?;
        if mean < amplitude.abs() {
            return Err(ProfileError::InvalidParameter(format!(
                "A = {mean} must be at least |B| = {} so the profile stays nonnegative",
                amplitude.abs()
            )));
        }
        Ok(Self {
            mean,
            amplitude,
            wavenumber,
        })
    }
}

impl ProfileCurve for Cosine {
    fn kind(&self) -> &'static str {
        "cosine"
    }

    fn eval(&self, z: f64, _side: Side) -> Result<ProfileValue, ProfileError> {
        let (s, c) = (self.wavenumber * z).sin_cos();
        let (b, k) = (self.amplitude, self.wavenumber);
        Ok(ProfileValue::new(self.mean + b * c, -b * k * s, -b * k * k * c))
    }

    fn asymptotics(&self) -> AsymptoticFlags {
        let oscillating = self.amplitude != 0.0 && self.wavenumber != 0.0;
        let end = EndFlags {
            eq_condition: oscillating,
            no_shrinking: false,
        };
        AsymptoticFlags {
            lower: end,
            upper: end,
            status: FlagStatus::Analytic,
        }
    }
}

/// Double cone `m |z - z*|`, non-smooth at the apex.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    pub slope: f64,
    pub apex: f64,
}

impl Cone {
    pub fn new(slope: f64, apex: f64) -> Result<Self, ProfileError> {
        Ok(Self {
            slope: positive("m", slope)?,
            apex: finite("apex", apex)?,
        })
    }
}

impl ProfileCurve for Cone {
    fn kind(&self) -> &'static str {
        "cone"
    }

    fn eval(&self, z: f64, side: Side) -> Result<ProfileValue, ProfileError> {
        let offset = z - self.apex;
        let sgn = side_sign(offset, side);
        Ok(ProfileValue::new(self.slope * offset.abs(), self.slope * sgn, 0.0))
    }

    fn asymptotics(&self) -> AsymptoticFlags {
        UNBOUNDED_BOTH
    }

    fn pinch_exponent(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Power pinch `c * prod_k |z - z_k|^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Power {
    pub coefficient: f64,
    pub exponent: f64,
    pub zeros: Vec<f64>,
}

impl Power {
    pub fn new(coefficient: f64, exponent: f64, zeros: Vec<f64>) -> Result<Self, ProfileError> {
        let coefficient = positive("c", coefficient)?;
        let exponent = positive("alpha", exponent)?;
        if zeros.is_empty() {
            return Err(ProfileError::InvalidParameter(
                "power profile needs at least one zero".into(),
            ));
        }
        for &z in &zeros {
            finite("zeros", z)?;
        }
        Ok(Self {
            coefficient,
            exponent,
            zeros,
        })
    }
}

impl ProfileCurve for Power {
    fn kind(&self) -> &'static str {
        "power"
    }

    fn eval(&self, z: f64, side: Side) -> Result<ProfileValue, ProfileError> {
        let alpha = self.exponent;
        let k = self.zeros.len();
        let dist: Vec<f64> = self.zeros.iter().map(|&w| (z - w).abs()).collect();
        let sgn: Vec<f64> = self.zeros.iter().map(|&w| side_sign(z - w, side)).collect();
        let pow = |d: f64, e: f64| if e == 0.0 { 1.0 } else { d.powf(e) };
        let all_but = |skip: &[usize]| -> f64 {
            (0..k)
                .filter(|j| !skip.contains(j))
                .map(|j| pow(dist[j], alpha))
                .product()
        };
        let value = self.coefficient * all_but(&[]);
        let mut slope = 0.0;
        let mut curvature = 0.0;
        for i in 0..k {
            slope += alpha * sgn[i] * pow(dist[i], alpha - 1.0) * all_but(&[i]);
            if alpha != 1.0 {
                curvature += alpha * (alpha - 1.0) * pow(dist[i], alpha - 2.0) * all_but(&[i]);
            }
            for l in 0..k {
                if l != i {
                    curvature += alpha * alpha
                        * sgn[i]
                        * sgn[l]
                        * pow(dist[i], alpha - 1.0)
                        * pow(dist[l], alpha - 1.0)
                        * all_but(&[i, l]);
                }
            }
        }
        Ok(ProfileValue::new(
            value,
            self.coefficient * slope,
            self.coefficient * curvature,
        ))
    }

    fn asymptotics(&self) -> AsymptoticFlags {
        UNBOUNDED_BOTH
    }

    fn pinch_exponent(&self) -> Option<f64> {
        Some(1.0 - 1.0 / self.exponent)
    }
}

/// `1/z` beyond the knee, its tangent line before it, blended over
/// `[z_knee - w, z_knee + w]` (`w = z_knee / 4`) by a quintic smoothstep so
/// the profile is C² and monotone decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalMollified {
    pub knee: f64,
}

impl ReciprocalMollified {
    pub fn new(knee: f64) -> Result<Self, ProfileError> {
        Ok(Self {
            knee: positive("z_knee", knee)?,
        })
    }

    fn half_width(&self) -> f64 {
        0.25 * self.knee
    }
}

impl ProfileCurve for ReciprocalMollified {
    fn kind(&self) -> &'static str {
        "reciprocal-mollified"
    }

    fn eval(&self, z: f64, _side: Side) -> Result<ProfileValue, ProfileError> {
        let k = self.knee;
        let w = self.half_width();
        let line = (1.0 / k - (z - k) / (k * k), -1.0 / (k * k), 0.0);
        if z <= k - w {
            return Ok(ProfileValue::new(line.0, line.1, line.2));
        }
        let recip = (1.0 / z, -1.0 / (z * z), 2.0 / (z * z * z));
        if z >= k + w {
            return Ok(ProfileValue::new(recip.0, recip.1, recip.2));
        }
        let width = 2.0 * w;
        let x = (z - (k - w)) / width;
        let step = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
        let dstep = 30.0 * x * x * (1.0 - x) * (1.0 - x) / width;
        let ddstep = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (width * width);
        let diff = (recip.0 - line.0, recip.1 - line.1, recip.2 - line.2);
        Ok(ProfileValue::new(
            line.0 + step * diff.0,
            line.1 + step * diff.1 + dstep * diff.0,
            line.2 + step * diff.2 + 2.0 * dstep * diff.1 + ddstep * diff.0,
        ))
    }

    fn asymptotics(&self) -> AsymptoticFlags {
        AsymptoticFlags {
            // Linear growth as z -> -inf.
            lower: EndFlags {
                eq_condition: true,
                no_shrinking: true,
            },
            // Decays to zero as z -> +inf.
            upper: EndFlags {
                eq_condition: false,
                no_shrinking: false,
            },
            status: FlagStatus::Analytic,
        }
    }

    fn decay_exponent(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// `2 - exp(-z²)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaussianBump;

impl ProfileCurve for GaussianBump {
    fn kind(&self) -> &'static str {
        "gaussian-bump"
    }

    fn eval(&self, z: f64, _side: Side) -> Result<ProfileValue, ProfileError> {
        let g = (-z * z).exp();
        Ok(ProfileValue::new(2.0 - g, 2.0 * z * g, (2.0 - 4.0 * z * z) * g))
    }

    fn asymptotics(&self) -> AsymptoticFlags {
        let end = EndFlags {
            eq_condition: false,
            no_shrinking: true,
        };
        AsymptoticFlags {
            lower: end,
            upper: end,
            status: FlagStatus::Analytic,
        }
    }
}

/// Samples interpolated by a not-a-knot cubic spline.
#[derive(Clone)]
pub struct Tabulated {
    spline: CubicSpline,
}

impl fmt::Debug for Tabulated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tabulated")
            .field("lo", &self.spline.lo())
            .field("hi", &self.spline.hi())
            .finish()
    }
}

impl Tabulated {
    pub fn new(zs: Vec<f64>, values: Vec<f64>) -> Result<Self, ProfileError> {
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(ProfileError::Tabulated(format!(
                "profile samples must be nonnegative, found {v}"
            )));
        }
        Ok(Self {
            spline: CubicSpline::not_a_knot(zs, values)?,
        })
    }

    /// Parse two whitespace- or comma-separated columns `z value`; `#` starts
    /// a comment.
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut zs = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    ProfileError::Tabulated(format!("line {}: cannot parse {s:?}", lineno + 1))
                })
            };
            match cols[..] {
                [z, v] => {
                    zs.push(parse(z)?);
                    values.push(parse(v)?);
                }
                _ => {
                    return Err(ProfileError::Tabulated(format!(
                        "line {}: expected two columns",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(zs, values)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.spline.knots()
    }
}

impl ProfileCurve for Tabulated {
    fn kind(&self) -> &'static str {
        "tabulated"
    }

    fn eval(&self, z: f64, _side: Side) -> Result<ProfileValue, ProfileError> {
        let (lo, hi) = (self.spline.lo(), self.spline.hi());
        if !(z >= lo && z <= hi) {
            return Err(ProfileError::OutOfDomain { z, lo, hi });
        }
        let (v, d, dd) = self.spline.eval(z);
        Ok(ProfileValue::new(v, d, dd))
    }

    fn asymptotics(&self) -> AsymptoticFlags {
        let lo = self.spline.lo();
        let hi = self.spline.hi();
        let seg = 0.1 * (hi - lo);
        let slopes = |a: f64, b: f64| -> Vec<f64> {
            (0..=32)
                .map(|i| self.spline.eval(a + (b - a) * i as f64 / 32.0).1)
                .collect()
        };
        let end_flags = |d: Vec<f64>, outward: f64| {
            let oscillates = d.iter().any(|&x| x > 0.0) && d.iter().any(|&x| x < 0.0);
            let grows_outward = d.iter().all(|&x| x * outward > 0.0);
            EndFlags {
                eq_condition: oscillates || grows_outward,
                no_shrinking: grows_outward,
            }
        };
        AsymptoticFlags {
            lower: end_flags(slopes(lo, lo + seg), -1.0),
            upper: end_flags(slopes(hi - seg, hi), 1.0),
            status: FlagStatus::WindowOnly,
        }
    }

    fn domain(&self) -> Option<Window> {
        Some(Window {
            lo: self.spline.lo(),
            hi: self.spline.hi(),
        })
    }
}
