//! Sampled root location with bisection refinement.
//!
//! Shared by the critical-point, pinch-point and contact-angle searches.

use super::Window;

/// Bracket width at which bisection stops.
pub const ROOT_TOL: f64 = 1e-10;

/// Default number of samples per window.
pub const DEFAULT_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Root {
    /// Isolated sign change. `jump` is the larger of |f| at the two ends of
    /// the final bracket; a large value means the sign change is a
    /// discontinuity rather than a zero.
    Crossing { z: f64, jump: f64, rising: bool },
    /// Consecutive samples that are all zero within tolerance.
    Flat { lo: f64, hi: f64 },
}

pub(crate) fn sample_points(window: Window, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    let step = (window.hi - window.lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                window.hi
            } else {
                window.lo + i as f64 * step
            }
        })
        .collect()
}

fn sign(v: f64, zero_tol: f64) -> i8 {
    if v.abs() <= zero_tol {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

pub(crate) fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut fa = f(a);
    let mut fb = f(b);
    while (b - a) > ROOT_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return (m, 0.0);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    (0.5 * (a + b), fa.abs().max(fb.abs()))
}

/// Scan `f` on `samples` equispaced points of `window` and refine every sign
/// change by bisection.
pub(crate) fn scan_roots(
    f: impl Fn(f64) -> f64,
    window: Window,
    samples: usize,
    zero_tol: f64,
) -> Vec<Root> {
    let zs = sample_points(window, samples);
    let vals: Vec<f64> = zs.iter().map(|&z| f(z)).collect();
    let signs: Vec<i8> = vals.iter().map(|&v| sign(v, zero_tol)).collect();
    let mut roots = Vec::new();
    let n = zs.len();
    let mut i = 0;
    while i < n {
        if signs[i] == 0 {
            let start = i;
            while i + 1 < n && signs[i + 1] == 0 {
                i += 1;
            }
            let end = i;
            if end > start {
                roots.push(Root::Flat {
                    lo: zs[start],
                    hi: zs[end],
                });
            } else {
                let before = if start > 0 { signs[start - 1] } else { 0 };
                let after = if end + 1 < n { signs[end + 1] } else { 0 };
                // Touching zeros are skipped; zeros at a window edge count.
                if before != after || before == 0 || after == 0 {
                    roots.push(Root::Crossing {
                        z: zs[start],
                        jump: vals[start].abs(),
                        rising: after > 0 || before < 0,
                    });
                }
            }
            i += 1;
            continue;
        }
        if i + 1 < n && signs[i + 1] != 0 && signs[i + 1] != signs[i] {
            let (z, jump) = bisect(&f, zs[i], zs[i + 1]);
            roots.push(Root::Crossing {
                z,
                jump,
                rising: signs[i] < 0,
            });
        }
        i += 1;
    }
    roots
}

/// Maximise `f` on `[a, b]`: dense sampling followed by golden-section search
/// around every sampled local maximum. Returns `(argmax, max)`.
pub(crate) fn maximise(f: impl Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> (f64, f64) {
    let zs = sample_points(Window { lo: a, hi: b }, samples);
    let vals: Vec<f64> = zs.iter().map(|&z| f(z)).collect();
    let mut best = (zs[0], vals[0]);
    for (i, (&z, &v)) in zs.iter().zip(&vals).enumerate() {
        if v > best.1 {
            best = (z, v);
        }
        let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < vals.len() {
            vals[i + 1]
        } else {
            f64::NEG_INFINITY
        };
        if v >= left && v >= right && i > 0 && i + 1 < vals.len() {
            let (zr, vr) = golden_max(&f, zs[i - 1], zs[i + 1]);
            if vr > best.1 {
                best = (zr, vr);
            }
        }
    }
    best
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > ROOT_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let z = 0.5 * (a + b);
    (z, f(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sine_zeros() {
        let roots = scan_roots(f64::sin, Window { lo: -1.0, hi: 7.0 }, 4096, 1e-14);
        let zs: Vec<f64> = roots
            .iter()
            .map(|r| match r {
                Root::Crossing { z, .. } => *z,
                Root::Flat { .. } => panic!("unexpected flat run"),
            })
            .collect();
        assert_eq!(zs.len(), 3);
        for (z, expect) in zs.iter().zip([0.0, std::f64::consts::PI, 2.0 * std::f64::consts::PI]) {
            assert!((z - expect).abs() < 1e-9, "{z} vs {expect}");
        }
    }

    #[test]
    fn constant_function_is_one_flat_run() {
        let roots = scan_roots(|_| 0.0, Window { lo: 0.0, hi: 1.0 }, 64, 1e-12);
        assert_eq!(roots, vec![Root::Flat { lo: 0.0, hi: 1.0 }]);
    }

    #[test]
    fn step_discontinuity_reports_jump() {
        let roots = scan_roots(|z| z.signum(), Window { lo: -1.0, hi: 1.3 }, 100, 1e-14);
        match roots[..] {
            [Root::Crossing { z, jump, .. }] => {
                assert!(z.abs() < 1e-9);
                assert!((jump - 1.0).abs() < 1e-12);
            }
            _ => panic!("{roots:?}"),
        }
    }

    #[test]
    fn maximise_finds_interior_peak() {
        let (z, v) = maximise(|z| -(z - 0.3).powi(2), 0.0, 1.0, 17);
        assert!((z - 0.3).abs() < 1e-8);
        assert!(v.abs() < 1e-15);
    }
}
