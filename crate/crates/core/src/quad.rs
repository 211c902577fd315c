//! One-dimensional quadrature: adaptive Gauss-Kronrod (G7/K15) for smooth
//! integrands and tanh-sinh for integrands with algebraic endpoint
//! singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Value of a definite integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        abs_error: 0.0,
        evaluations: 0,
    };

    /// Sum of two independent pieces.
    pub fn combine(self, other: Integral) -> Integral {
        Integral {
            value: self.value + other.value,
            abs_error: self.abs_error + other.abs_error,
            evaluations: self.evaluations + other.evaluations,
        }
    }

    pub fn scale(self, factor: f64) -> Integral {
        Integral {
            value: self.value * factor,
            abs_error: self.abs_error * factor.abs(),
            evaluations: self.evaluations,
        }
    }
}

/// Stopping rule for the adaptive Gauss-Kronrod driver.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }

    pub fn with_rel(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

// Kronrod 15-point abscissae; odd indices are the Gauss 7-point abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn eval_checked<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { at: x })
    }
}

/// Single 15-point Kronrod panel with the QUADPACK error rescaling.
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval_checked(f, center)?;
    let mut result_k = fc * WGK[7];
    let mut result_g = fc * WG[3];
    let mut result_abs = result_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval_checked(f, center - dx)?;
        let f2 = eval_checked(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        result_k += WGK[j] * (f1 + f2);
        result_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            result_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * result_k;
    let mut result_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = result_k * half;
    let result_abs = result_abs * half.abs();
    let result_asc = result_asc * half.abs();
    let mut error = ((result_k - result_g) * half).abs();
    if result_asc != 0.0 && error != 0.0 {
        error = result_asc * (200.0 * error / result_asc).powf(1.5).min(1.0);
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * result_abs);
    }
    Ok(Segment { a, b, value, error })
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Integral> {
    gauss_kronrod_breaks(f, &[a, b], opts)
}

/// Adaptive Gauss-Kronrod over consecutive breakpoints, refined globally.
///
/// `points` must be sorted; the integral runs from the first to the last point.
pub fn gauss_kronrod_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: &QuadOptions) -> Result<Integral> {
    if points.len() < 2 {
        return Ok(Integral::ZERO);
    }
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Segment> = Vec::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod_panel(&f, w[0], w[1])?);
            evaluations += 15;
        }
    }
    loop {
        let value: f64 = heap.iter().chain(frozen.iter()).map(|s| s.value).sum();
        let error: f64 = heap.iter().chain(frozen.iter()).map(|s| s.error).sum();
        if error <= opts.target(value) {
            return Ok(Integral {
                value,
                abs_error: error,
                evaluations,
            });
        }
        if heap.len() + frozen.len() >= opts.max_intervals || heap.is_empty() {
            return Err(Error::Quadrature {
                value,
                abs_error: error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap checked non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-14 * mid.abs().max(1e-300) {
            frozen.push(worst);
            continue;
        }
        heap.push(kronrod_panel(&f, worst.a, mid)?);
        heap.push(kronrod_panel(&f, mid, worst.b)?);
        evaluations += 30;
    }
}

/// Adaptive Gauss-Kronrod over `[a, ∞)` via `x = a + (1 - t)/t`.
pub fn gauss_kronrod_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, opts: &QuadOptions) -> Result<Integral> {
    let mapped = |t: f64| {
        let x = a + (1.0 - t) / t;
        f(x) / (t * t)
    };
    gauss_kronrod(mapped, 0.0, 1.0, opts)
}

/// Integral over the whole real line, split at the origin.
pub fn gauss_kronrod_real_line<F: Fn(f64) -> f64>(f: F, opts: &QuadOptions) -> Result<Integral> {
    let right = gauss_kronrod_semi_infinite(&f, 0.0, opts)?;
    let left = gauss_kronrod_semi_infinite(|x| f(-x), 0.0, opts)?;
    Ok(right.combine(left))
}

const TANH_SINH_MAX_LEVEL: u32 = 12;
const TANH_SINH_T_MAX: f64 = 7.0;

/// Tanh-sinh (double exponential) quadrature on `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)` with both distances computed
/// without cancellation, so densities with singular endpoints can be
/// evaluated from the offset directly.
pub fn tanh_sinh_with<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    if b <= a {
        return Ok(Integral::ZERO);
    }
    let len = b - a;
    let half = 0.5 * len;
    let mut evaluations = 0usize;
    let mut eval = |x: f64, dl: f64, dr: f64| -> Result<f64> {
        evaluations += 1;
        let y = f(x, dl, dr);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { at: x })
        }
    };

    // Unscaled running sum of w(t) f(x(t)) over all nodes visited so far.
    let mut sum = half * FRAC_PI_2 * eval(a + half, half, half)?;
    // Σ w|f|, sets the round-off floor of the error test.
    let mut sum_abs = sum.abs();
    let mut previous = f64::NAN;
    let mut h = 1.0;
    for level in 0..=TANH_SINH_MAX_LEVEL {
        let (start, step) = if level == 0 { (1u64, 1u64) } else { (1u64, 2u64) };
        let mut j = start;
        let mut small_run = 0;
        loop {
            let t = j as f64 * h;
            if t > TANH_SINH_T_MAX {
                break;
            }
            let u = FRAC_PI_2 * t.sinh();
            let e = (-2.0 * u).exp();
            if e == 0.0 {
                break;
            }
            let near = len * e / (1.0 + e);
            let far = len / (1.0 + e);
            if near == 0.0 {
                break;
            }
            let w = half * FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
            // Offsets this small carry no weight; an overflow there ends the level.
            let extreme = near < 1e-100 * len;
            let (right, left) = match (eval(b - near, far, near), eval(a + near, near, far)) {
                (Ok(r), Ok(l)) => (r, l),
                (Err(_), _) | (_, Err(_)) if extreme => break,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            let term = w * (right + left);
            sum += term;
            sum_abs += w * (right.abs() + left.abs());
            // Only the outer nodes may end a level early: integrands can vanish
            // in the middle and carry their mass next to an endpoint.
            if t > 3.0 && term.abs() <= 1e-20 * sum.abs() {
                small_run += 1;
                if small_run >= 2 {
                    break;
                }
            } else {
                small_run = 0;
            }
            j += step;
        }
        let estimate = h * sum;
        if level >= 3 {
            let err = (estimate - previous).abs();
            if err <= tol.max(64.0 * f64::EPSILON * h * sum_abs) {
                return Ok(Integral {
                    value: estimate,
                    abs_error: err,
                    evaluations,
                });
            }
        }
        previous = estimate;
        h *= 0.5;
    }
    Err(Error::Quadrature {
        value: previous,
        abs_error: f64::NAN,
        evaluations,
    })
}

/// Tanh-sinh on `[a, b]` for an integrand of `x` alone.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    tanh_sinh_with(|x, _, _| f(x), a, b, tol)
}

/// Exponents at or above this are left to plain tanh-sinh.
const POWER_SUBSTITUTION_BELOW: f64 = -0.5;

/// `∫_0^len g(s) ds` for `g(s) ~ c·s^p` at `s → 0`, `p > −1`.
///
/// Strong singularities go through `s = len·t^β`, `β = 1/(1+p)`, where the
/// integrand becomes `β·len·(s/len)^{−p}·g(s)`, bounded at `t = 0`. Offsets
/// below `1e-30·len` are clamped there.
pub fn tanh_sinh_endpoint_power<F: Fn(f64) -> f64>(g: F, len: f64, p: Option<f64>, tol: f64) -> Result<Integral> {
    let Some(p) = p.filter(|p| *p > -1.0 && *p < POWER_SUBSTITUTION_BELOW) else {
        return tanh_sinh_with(|_, s, _| g(s), 0.0, len, tol);
    };
    let beta = 1.0 / (1.0 + p);
    tanh_sinh_with(
        |_, t, _| {
            let x = t.powf(beta).max(1e-30);
            beta * len * x.powf(-p) * g(len * x)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Nodes of [`tanh_sinh_tail`] beyond this point are dropped.
const TAIL_HORIZON: f64 = 1e150;

/// `∫_b^∞ f(u) du` for `b > 0` through `u = 1/t` and tanh-sinh on `(0, 1/b]`.
pub fn tanh_sinh_tail<F: Fn(f64) -> f64>(f: F, b: f64, tol: f64) -> Result<Integral> {
    debug_assert!(b > 0.0);
    tanh_sinh_with(
        |_, t, _| {
            let u = 1.0 / t;
            if u > TAIL_HORIZON {
                return 0.0;
            }
            let y = f(u);
            if y == 0.0 {
                0.0
            } else {
                y / (t * t)
            }
        },
        0.0,
        1.0 / b,
        tol,
    )
}

/// `∫_b^∞ f(u) du` for `f(u) ~ c·u^q` with `q` known.
///
/// Slow tails, `−2 < q < −1`, go through `u = b·t^{−1/κ}`, `κ = −(1 + q)`,
/// which makes the mapped integrand nearly constant at `t → 0`. Below the
/// horizon node `t_h` it is integrated as a power of `t` fitted at
/// `t_h`.
pub fn tanh_sinh_tail_power<F: Fn(f64) -> f64>(f: F, b: f64, q: Option<f64>, tol: f64) -> Result<Integral> {
    let Some(q) = q.filter(|q| *q > -2.0 && *q < -1.0) else {
        return tanh_sinh_tail(f, b, tol);
    };
    debug_assert!(b > 0.0);
    let kappa = -(1.0 + q);
    let ln_b = b.ln();
    let mapped = |t: f64| {
        let u = (ln_b - t.ln() / kappa).exp();
        let y = f(u);
        if y == 0.0 {
            0.0
        } else {
            y * u / (kappa * t)
        }
    };
    let t_h = (kappa * (ln_b - TAIL_HORIZON.ln())).exp();
    if !(t_h < 1.0) {
        return tanh_sinh_tail(f, b, tol);
    }
    let g_h = mapped(t_h);
    let far = if g_h == 0.0 {
        Integral::ZERO
    } else {
        let slope = |r: f64| (mapped(r * t_h) / g_h).ln() / r.ln();
        let (e2, e4) = (slope(t_h.powf(-0.25).min(2.0)), slope(t_h.powf(-0.5).min(4.0)));
        let value = g_h * t_h / (1.0 + e2);
        if !(e2 > -1.0 && value.is_finite() && e4.is_finite()) {
            return Err(Error::Quadrature {
                value,
                abs_error: f64::NAN,
                evaluations: 3,
            });
        }
        Integral {
            value,
            abs_error: (value * (e2 - e4) / (1.0 + e4)).abs(),
            evaluations: 3,
        }
    };
    Ok(far.combine(tanh_sinh_with(|t, _, _| mapped(t), t_h, 1.0, tol)?))
}
