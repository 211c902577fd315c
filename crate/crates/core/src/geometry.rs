//! Reduction of radial momentum integrals to one-dimensional densities over
//! the resonant shells `ω(k) − ω = u`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fit::{fit_power_law, log_grid};
use crate::quad::{gauss_kronrod_breaks, tanh_sinh_endpoint_power, tanh_sinh_tail_power, Integral, QuadOptions};

/// Free one-particle dispersion in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dispersion {
    /// `ω(k) = |k|`.
    #[default]
    Linear,
    /// `ω(k) = k²`.
    Quadratic,
}

impl Dispersion {
    pub fn omega(&self, k: f64) -> f64 {
        match self {
            Dispersion::Linear => k.abs(),
            Dispersion::Quadratic => k * k,
        }
    }

    /// Radius of the shell `ω(k) = level`, if it is non-empty.
    pub fn resonant_radius(&self, level: f64) -> Option<f64> {
        if level < 0.0 {
            return None;
        }
        Some(match self {
            Dispersion::Linear => level,
            Dispersion::Quadratic => level.sqrt(),
        })
    }

    /// `|∇ω|` at radius `k`.
    pub fn gradient_norm(&self, k: f64) -> f64 {
        match self {
            Dispersion::Linear => 1.0,
            Dispersion::Quadratic => 2.0 * k.abs(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dispersion::Linear => "linear",
            Dispersion::Quadratic => "quadratic",
        }
    }

    /// Exponent of `Φ` in `s = u − a` given `φ(r) ~ r^p`.
    pub fn density_exponent(&self, p: f64) -> f64 {
        match self {
            Dispersion::Linear => 2.0 + p,
            Dispersion::Quadratic => 0.5 * (1.0 + p),
        }
    }
}

impl fmt::Display for Dispersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dispersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Dispersion::Linear),
            "quadratic" => Ok(Dispersion::Quadratic),
            other => domain(format!("unknown dispersion '{other}' (expected linear or quadratic)")),
        }
    }
}

type Shared = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A radial function `φ(|k|)` with optional power-law metadata:
/// `φ(r) ~ r^{origin}` as `r → 0` and `φ(r) ~ r^{tail}` as `r → ∞`.
#[derive(Clone)]
pub struct RadialFn {
    f: Shared,
    origin_exponent: Option<f64>,
    tail_exponent: Option<f64>,
}

impl fmt::Debug for RadialFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFn")
            .field("origin_exponent", &self.origin_exponent)
            .field("tail_exponent", &self.tail_exponent)
            .finish_non_exhaustive()
    }
}

impl RadialFn {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            origin_exponent: None,
            tail_exponent: None,
        }
    }

    pub fn from_shared(f: Shared) -> Self {
        Self {
            f,
            origin_exponent: None,
            tail_exponent: None,
        }
    }

    /// `r^p`, with both exponents known.
    pub fn power(p: f64) -> Self {
        Self::new(move |r: f64| if p == 0.0 { 1.0 } else { r.powf(p) }).with_exponents(Some(p), Some(p))
    }

    pub fn with_exponents(mut self, origin: Option<f64>, tail: Option<f64>) -> Self {
        self.origin_exponent = origin;
        self.tail_exponent = tail;
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn origin_exponent(&self) -> Option<f64> {
        self.origin_exponent
    }

    pub fn tail_exponent(&self) -> Option<f64> {
        self.tail_exponent
    }
}

#[derive(Clone)]
enum Repr {
    /// `f(u)` in the level variable.
    Level(Shared),
    /// `f(s)` with `s = u − a`, accurate near the left endpoint.
    Endpoint(Shared),
}

/// How an exponent estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateSource {
    /// Log-log least squares over two decades.
    Fit,
    /// The density's own metadata, used when the fit is not definite.
    Hint,
    /// The samples vanish identically (or underflow) in the probed range.
    Vanishing,
    /// Neither a definite fit nor metadata.
    Unknown,
}

/// Power-law exponent of `Φ` at one end of its domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    /// `None` when the behaviour could not be determined.
    pub exponent: Option<f64>,
    pub r_squared: f64,
    pub source: EstimateSource,
}

impl ExponentEstimate {
    fn unknown(r_squared: f64) -> Self {
        Self {
            exponent: None,
            r_squared,
            source: EstimateSource::Unknown,
        }
    }
}

/// One-dimensional density `Φ(u)` on `[a, b)`, `b` possibly infinite.
#[derive(Clone)]
pub struct RadialDensity {
    repr: Repr,
    a: f64,
    b: Option<f64>,
    endpoint_hint: Option<f64>,
    tail_hint: Option<f64>,
    label: String,
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialDensity")
            .field("label", &self.label)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("endpoint_hint", &self.endpoint_hint)
            .field("tail_hint", &self.tail_hint)
            .finish_non_exhaustive()
    }
}

impl RadialDensity {
    /// Density given as a function of the level variable `u`.
    pub fn from_fn<F>(a: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_repr(a, Repr::Level(Arc::new(f)))
    }

    /// Density given as a function of the offset `s = u − a`.
    pub fn from_endpoint_fn<F>(a: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_repr(a, Repr::Endpoint(Arc::new(f)))
    }

    pub fn zero(a: f64) -> Self {
        Self::from_fn(a, |_| 0.0)
    }

    fn with_repr(a: f64, repr: Repr) -> Self {
        assert!(a.is_finite(), "left endpoint must be finite");
        Self {
            repr,
            a,
            b: None,
            endpoint_hint: None,
            tail_hint: None,
            label: String::from("density"),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Exponent `p` of `Φ(a + s) ~ s^p` as `s → 0`.
    pub fn with_endpoint_exponent(mut self, p: Option<f64>) -> Self {
        self.endpoint_hint = p;
        self
    }

    /// Exponent `q` of `Φ(u) ~ u^q` as `u → ∞`.
    pub fn with_tail_exponent(mut self, q: Option<f64>) -> Self {
        self.tail_hint = q;
        self
    }

    /// Restricts the support to `[a, b]`.
    pub fn truncated(mut self, b: f64) -> Result<Self> {
        if !(b > self.a) || !b.is_finite() {
            return domain(format!("truncation point {b} must be finite and above a = {}", self.a));
        }
        self.b = Some(b);
        self.tail_hint = None;
        Ok(self)
    }

    pub fn left_endpoint(&self) -> f64 {
        self.a
    }

    pub fn right_endpoint(&self) -> Option<f64> {
        self.b
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn endpoint_hint(&self) -> Option<f64> {
        self.endpoint_hint
    }

    pub fn tail_hint(&self) -> Option<f64> {
        self.tail_hint
    }

    /// True when the singular point `u = 0` lies strictly inside the domain.
    pub fn straddles_zero(&self) -> bool {
        self.a < 0.0 && self.b.map_or(true, |b| b > 0.0)
    }

    /// `Φ(u)`; zero outside the domain.
    pub fn eval(&self, u: f64) -> f64 {
        if u < self.a || self.b.is_some_and(|b| u > b) {
            return 0.0;
        }
        match &self.repr {
            Repr::Level(f) => f(u),
            Repr::Endpoint(f) => f(u - self.a),
        }
    }

    /// `Φ(a + s)`, evaluated without cancellation in `s` when possible.
    pub fn eval_from_endpoint(&self, s: f64) -> f64 {
        if s < 0.0 || self.b.is_some_and(|b| s > b - self.a) {
            return 0.0;
        }
        match &self.repr {
            Repr::Level(f) => f(self.a + s),
            Repr::Endpoint(f) => f(s),
        }
    }

    /// `∫_a^end Φ(u) w(u) du` for a weight `w` regular at `a`; integrable
    /// endpoint singularities of `Φ` are removed by a power substitution.
    pub fn integrate_from_endpoint<W: Fn(f64) -> f64>(&self, w: W, end: f64, tol: f64) -> Result<Integral> {
        if end <= self.a {
            return Ok(Integral::ZERO);
        }
        let p = self.endpoint_behavior().exponent;
        tanh_sinh_endpoint_power(|s| self.eval_from_endpoint(s) * w(self.a + s), end - self.a, p, tol)
    }

    /// `∫_start^∞ Φ(u) w(u) du` for `w(u) ~ u^{w_exponent}`; slow power tails
    /// are mapped to match the fitted tail exponent of `Φ`.
    pub fn integrate_tail<W: Fn(f64) -> f64>(&self, w: W, w_exponent: f64, start: f64, tol: f64) -> Result<Integral> {
        let q = self.tail_behavior().exponent.map(|q| q + w_exponent);
        tanh_sinh_tail_power(|u| self.eval(u) * w(u), start, q, tol)
    }

    /// `Φ(−u)` for `0 ≤ u ≤ h`, given `dist = h − u` exactly.
    pub(crate) fn eval_reflected(&self, u: f64, h: f64, dist: f64) -> f64 {
        match &self.repr {
            Repr::Level(_) => self.eval(-u),
            Repr::Endpoint(_) => self.eval_from_endpoint(dist + (-self.a - h)),
        }
    }

    /// The resonant value `Φ(0)` (zero if `0` is outside the domain).
    pub fn at_resonance(&self) -> f64 {
        if self.a < 0.0 {
            self.eval_from_endpoint(-self.a)
        } else if self.a == 0.0 {
            self.eval_from_endpoint(0.0)
        } else {
            0.0
        }
    }

    /// `c·Φ`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.clone();
        let mut out = Self::from_endpoint_fn(self.a, move |s| c * inner.eval_from_endpoint(s));
        out.b = self.b;
        out.endpoint_hint = self.endpoint_hint;
        out.tail_hint = self.tail_hint;
        out.label = format!("{c}*{}", self.label);
        out
    }

    /// `Φ₁ + Φ₂` on a common left endpoint.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.a != other.a {
            return domain("densities must share the left endpoint");
        }
        let (x, y) = (self.clone(), other.clone());
        let mut out = Self::from_endpoint_fn(self.a, move |s| x.eval_from_endpoint(s) + y.eval_from_endpoint(s));
        out.b = match (self.b, other.b) {
            (Some(p), Some(q)) => Some(p.max(q)),
            _ => None,
        };
        out.endpoint_hint = match (self.endpoint_hint, other.endpoint_hint) {
            (Some(p), Some(q)) => Some(p.min(q)),
            _ => None,
        };
        out.tail_hint = match (self.tail_hint, other.tail_hint) {
            (Some(p), Some(q)) => Some(p.max(q)),
            _ => None,
        };
        out.label = format!("{}+{}", self.label, other.label);
        Ok(out)
    }

    /// Scale for the endpoint probes.
    fn endpoint_scale(&self) -> f64 {
        let width = self.b.map_or(f64::INFINITY, |b| b - self.a);
        let near = if self.a != 0.0 { self.a.abs() } else { 1.0 };
        near.min(1.0).min(width)
    }

    /// Exponent of `Φ(a + s)` as `s → 0⁺`, fitted over `s ∈ [1e-8, 1e-6]·L`.
    pub fn endpoint_behavior(&self) -> ExponentEstimate {
        let scale = self.endpoint_scale();
        let xs = log_grid(1e-8 * scale, 1e-6 * scale, 9);
        let ys: Vec<f64> = xs.iter().map(|&s| self.eval_from_endpoint(s)).collect();
        self.classify_samples(&xs, &ys, true, self.endpoint_hint)
    }

    /// Exponent of `Φ(u)` as `u → ∞`, fitted over `u ∈ [1e4, 1e6]·max(1, |a|)`.
    /// Truncated densities report `−∞`.
    pub fn tail_behavior(&self) -> ExponentEstimate {
        if self.b.is_some() {
            return ExponentEstimate {
                exponent: Some(f64::NEG_INFINITY),
                r_squared: 1.0,
                source: EstimateSource::Vanishing,
            };
        }
        let scale = self.a.abs().max(1.0);
        let xs = log_grid(1e4 * scale, 1e6 * scale, 9);
        let ys: Vec<f64> = xs.iter().map(|&u| self.eval(u)).collect();
        self.classify_samples(&xs, &ys, false, self.tail_hint)
    }

    fn classify_samples(&self, xs: &[f64], ys: &[f64], at_endpoint: bool, hint: Option<f64>) -> ExponentEstimate {
        let vanishing = if at_endpoint { f64::INFINITY } else { f64::NEG_INFINITY };
        if ys.iter().all(|y| *y == 0.0) {
            return ExponentEstimate {
                exponent: Some(vanishing),
                r_squared: 1.0,
                source: EstimateSource::Vanishing,
            };
        }
        // Zeros confined to the side approached in the limit mean underflow
        // of a faster-than-power decay.
        let zeros: Vec<bool> = ys.iter().map(|y| *y == 0.0).collect();
        let n = zeros.len();
        let first_nonzero = zeros.iter().position(|z| !z).unwrap_or(n);
        let last_nonzero = zeros.iter().rposition(|z| !z).unwrap_or(0);
        let contiguous_limit_zeros = if at_endpoint {
            first_nonzero > 0 && zeros[first_nonzero..].iter().all(|z| !z)
        } else {
            last_nonzero + 1 < n && zeros[..=last_nonzero].iter().all(|z| !z)
        };
        if contiguous_limit_zeros {
            return ExponentEstimate {
                exponent: Some(vanishing),
                r_squared: 1.0,
                source: EstimateSource::Vanishing,
            };
        }
        let fit = fit_power_law(xs, ys);
        if fit.is_definite() {
            return ExponentEstimate {
                exponent: Some(fit.exponent),
                r_squared: fit.r_squared,
                source: EstimateSource::Fit,
            };
        }
        match hint {
            Some(p) => ExponentEstimate {
                exponent: Some(p),
                r_squared: fit.r_squared,
                source: EstimateSource::Hint,
            },
            None => ExponentEstimate::unknown(fit.r_squared),
        }
    }
}

/// `Φ(u)` for a radial integrand `φ(|k|)` and dispersion `disp` at frequency `ω`:
/// `4π(u+ω)² φ(u+ω)` (linear) or `2π√(u+ω) φ(√(u+ω))` (quadratic), on `[−ω, ∞)`.
pub fn radial_density(phi: &RadialFn, disp: Dispersion, omega: f64) -> Result<RadialDensity> {
    if !omega.is_finite() {
        return domain(format!("frequency must be finite, got {omega}"));
    }
    let f = phi.clone();
    let density = match disp {
        Dispersion::Linear => RadialDensity::from_endpoint_fn(-omega, move |s| 4.0 * PI * s * s * f.eval(s)),
        Dispersion::Quadratic => RadialDensity::from_endpoint_fn(-omega, move |s| {
            let r = s.sqrt();
            2.0 * PI * r * f.eval(r)
        }),
    };
    Ok(density
        .with_endpoint_exponent(phi.origin_exponent.map(|p| disp.density_exponent(p)))
        .with_tail_exponent(phi.tail_exponent.map(|p| disp.density_exponent(p)))
        .with_label(format!("{disp}@{omega}")))
}

/// `⟨δ(ω(k) − ω), φ⟩`: `Φ(0)` for `ω > 0`, exactly `0` for `ω < 0`.
///
/// At `ω = 0` the shell degenerates to the origin; the limit `Φ(0⁺) = 0`
/// is returned when `Φ` vanishes there, otherwise a diagnostic.
pub fn delta_pairing(phi: &RadialFn, disp: Dispersion, omega: f64) -> Result<f64> {
    if !omega.is_finite() {
        return domain(format!("frequency must be finite, got {omega}"));
    }
    if omega < 0.0 {
        return Ok(0.0);
    }
    let density = radial_density(phi, disp, omega)?;
    if omega == 0.0 {
        let behavior = density.endpoint_behavior();
        return match behavior.exponent {
            Some(p) if p > 1e-3 => Ok(0.0),
            Some(p) => Err(Error::Diagnostic(format!(
                "resonant shell collapses to the origin and the density does not vanish there (exponent {p:.4})"
            ))),
            None => Err(Error::Diagnostic(
                "resonant shell collapses to the origin and the density's behaviour there is unknown".into(),
            )),
        };
    }
    let value = density.eval_from_endpoint(omega);
    if !value.is_finite() {
        return Err(Error::NonFinite { at: 0.0 });
    }
    Ok(value)
}

/// The δ-pairing read off a density directly: `Φ(0)` if `0` is inside the domain.
pub fn delta_pairing_density(density: &RadialDensity) -> f64 {
    if density.straddles_zero() {
        density.at_resonance()
    } else {
        0.0
    }
}

/// `⟨δ(ω(k) − ω), φ⟩` as the limit of Gaussian nascent deltas.
///
/// Evaluates `∫ Φ(u) δ_σ(u) du` for `σ = σ₀, σ₀/2, σ₀/4, σ₀/8`,
/// `σ₀ = 0.05·min(ω, 1)`, and extrapolates in `σ²`. Returns the value and an
/// error estimate. Needs `Φ` smooth around `u = 0`.
pub fn nascent_delta_pairing(phi: &RadialFn, disp: Dispersion, omega: f64) -> Result<(f64, f64)> {
    if !omega.is_finite() {
        return domain(format!("frequency must be finite, got {omega}"));
    }
    if omega <= 0.0 {
        return delta_pairing(phi, disp, omega).map(|v| (v, 0.0));
    }
    let density = radial_density(phi, disp, omega)?;
    let sigma0 = 0.05 * omega.min(1.0);
    let opts = QuadOptions::abs(0.0).with_rel(1e-12).with_max_intervals(2000);
    let mut values = [0.0; 4];
    for (i, v) in values.iter_mut().enumerate() {
        let sigma = sigma0 * 0.5f64.powi(i as i32);
        // u = σt; the window ±8σ stays clear of the endpoint −ω.
        let gauss = |t: f64| density.eval(sigma * t) * (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        *v = gauss_kronrod_breaks(gauss, &[-8.0, -2.0, 0.0, 2.0, 8.0], &opts)?.value;
    }
    let (value, err) = richardson(values, 4.0);
    if !value.is_finite() {
        return Err(Error::NonFinite { at: 0.0 });
    }
    Ok((value, err))
}

/// Highest order accepted by [`asymptotic_coefficients`].
pub const MAX_ASYMPTOTIC_ORDER: usize = 6;

/// Taylor coefficients with their error estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticCoefficients {
    pub coefficients: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Richardson table on steps `h, h/2, h/4, h/8` for an error series in `h^k, h^{2k}, ...`.
fn richardson(values: [f64; 4], ratio: f64) -> (f64, f64) {
    let mut table = [[0.0; 4]; 4];
    for (i, v) in values.iter().enumerate() {
        table[i][0] = *v;
    }
    for j in 1..4 {
        let factor = ratio.powi(j as i32);
        for i in j..4 {
            table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
        }
    }
    let value = table[3][3];
    let err = (value - table[3][2]).abs().max((value - table[2][2]).abs());
    (value, err)
}

fn central_difference<F: Fn(f64) -> f64>(f: &F, order: usize, h: f64) -> f64 {
    let half = order as f64 / 2.0;
    let mut binom = 1.0;
    let mut acc = 0.0;
    for j in 0..=order {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f((half - j as f64) * h);
        binom = binom * (order - j) as f64 / (j + 1) as f64;
    }
    acc / h.powi(order as i32)
}

/// `c_n = Φ⁽ⁿ⁾(0)/n!` for `n = 0..=order` by Richardson-extrapolated central
/// differences.
pub fn asymptotic_coefficients(density: &RadialDensity, order: usize) -> Result<Vec<f64>> {
    Ok(asymptotic_coefficients_with_error(density, order)?.coefficients)
}

pub fn asymptotic_coefficients_with_error(density: &RadialDensity, order: usize) -> Result<AsymptoticCoefficients> {
    if order > MAX_ASYMPTOTIC_ORDER {
        return domain(format!(
            "derivative order {order} exceeds {MAX_ASYMPTOTIC_ORDER}; higher orders are dominated by rounding"
        ));
    }
    if !density.straddles_zero() {
        return domain("u = 0 must lie inside the density's domain");
    }
    let reach = density.left_endpoint().abs().min(density.right_endpoint().unwrap_or(f64::INFINITY));
    let f = |u: f64| density.eval(u);
    let c0 = density.at_resonance();
    if !c0.is_finite() {
        return Err(Error::NonFinite { at: 0.0 });
    }
    let mut coefficients = vec![c0];
    let mut errors = vec![0.0];
    let mut factorial = 1.0;
    for n in 1..=order {
        factorial *= n as f64;
        let h0 = (0.2f64).min(0.8 * reach / (n as f64 / 2.0).max(1.0));
        let values = [0, 1, 2, 3].map(|i| central_difference(&f, n, h0 / 2f64.powi(i)));
        let (value, err) = richardson(values, 4.0);
        let stencil_max = (0..=64)
            .map(|i| f(-0.5 * n as f64 * h0 + n as f64 * h0 * i as f64 / 64.0).abs())
            .fold(0.0, f64::max);
        let natural = stencil_max / (0.5 * n as f64 * h0).powi(n as i32);
        let scale = value.abs().max(natural).max(f64::MIN_POSITIVE);
        if !value.is_finite() || err > 1e-4 * scale {
            return Err(Error::Diagnostic(format!(
                "density is not smooth at u = 0: derivative of order {n} estimated as {value:e} with error {err:e}"
            )));
        }
        coefficients.push(value / factorial);
        errors.push(err / factorial);
    }
    if order >= 1 {
        // A kink leaves the symmetric stencils blind; compare one-sided slopes.
        let h0 = (0.2f64).min(0.8 * reach);
        let forward = [0, 1, 2, 3].map(|i| {
            let h = h0 / 2f64.powi(i);
            (f(h) - c0) / h
        });
        let backward = [0, 1, 2, 3].map(|i| {
            let h = h0 / 2f64.powi(i);
            (c0 - f(-h)) / h
        });
        let (fwd, _) = richardson(forward, 2.0);
        let (bwd, _) = richardson(backward, 2.0);
        let stencil_max = c0.abs().max(f(h0).abs()).max(f(-h0).abs());
        let scale = coefficients[1].abs().max(stencil_max / h0).max(f64::MIN_POSITIVE);
        if (fwd - bwd).abs() > 1e-4 * scale {
            return Err(Error::Diagnostic(format!(
                "density has a kink at u = 0: one-sided slopes {fwd:e} and {bwd:e}"
            )));
        }
    }
    Ok(AsymptoticCoefficients { coefficients, errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_density_values() {
        let d = radial_density(&RadialFn::new(|r| 1.0 / r), Dispersion::Linear, 2.0).unwrap();
        assert_relative_eq!(d.eval(0.0), 8.0 * PI, max_relative = 1e-15);
        assert_eq!(d.left_endpoint(), -2.0);
        let zero = radial_density(&RadialFn::new(|_| 0.0), Dispersion::Linear, 1.0).unwrap();
        assert!((0..50).all(|i| zero.eval(-1.0 + 0.1 * i as f64) == 0.0));
    }

    #[test]
    fn quadratic_density_values() {
        let d = radial_density(&RadialFn::new(|_| 1.0), Dispersion::Quadratic, 4.0).unwrap();
        assert_relative_eq!(d.eval(0.0), 4.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn pairing_examples() {
        let inv = RadialFn::power(-1.0);
        assert_relative_eq!(delta_pairing(&inv, Dispersion::Linear, 2.0).unwrap(), 8.0 * PI, max_relative = 1e-15);
        assert_eq!(delta_pairing(&inv, Dispersion::Linear, -1.0).unwrap(), 0.0);
        assert_eq!(delta_pairing(&inv, Dispersion::Quadratic, -1.0).unwrap(), 0.0);
        let inv2 = RadialFn::power(-2.0);
        assert_relative_eq!(delta_pairing(&inv2, Dispersion::Linear, 1.0).unwrap(), 4.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn pairing_at_zero_frequency() {
        // φ = r^{-1}: Φ(s) = 4π s → 0.
        assert_eq!(delta_pairing(&RadialFn::new(|r| 1.0 / r), Dispersion::Linear, 0.0).unwrap(), 0.0);
        // φ = r^{-2}: Φ(s) = 4π, the shell does not shrink away.
        let err = delta_pairing(&RadialFn::new(|r| r.powi(-2)), Dispersion::Linear, 0.0).unwrap_err();
        assert!(matches!(err, Error::Diagnostic(_)));
        // φ = r^{-3}: Φ blows up.
        assert!(delta_pairing(&RadialFn::new(|r| r.powi(-3)), Dispersion::Linear, 0.0).is_err());
    }

    #[test]
    fn chain_rule_between_dispersions() {
        let phi = RadialFn::new(|r: f64| (-r * r).exp() * (1.0 + r));
        for omega in [0.3, 1.0, 2.5] {
            let lin = delta_pairing(&phi, Dispersion::Linear, omega).unwrap();
            let quad = delta_pairing(&phi, Dispersion::Quadratic, omega * omega).unwrap();
            assert_relative_eq!(quad, lin / (2.0 * omega), max_relative = 1e-12);
        }
    }

    #[test]
    fn coefficients_of_polynomials() {
        let d = RadialDensity::from_fn(-1.0, |u| u * u);
        let c = asymptotic_coefficients(&d, 3).unwrap();
        for (got, want) in c.iter().zip([0.0, 0.0, 1.0, 0.0]) {
            assert!((got - want).abs() < 1e-8, "{c:?}");
        }
        let d = RadialDensity::from_fn(-2.0, |u| 1.0 - 2.0 * u + 0.5 * u.powi(3) - 0.25 * u.powi(5) + u.powi(6));
        let c = asymptotic_coefficients(&d, 6).unwrap();
        for (got, want) in c.iter().zip([1.0, -2.0, 0.0, 0.5, 0.0, -0.25, 1.0]) {
            assert!((got - want).abs() < 1e-8, "{c:?}");
        }
    }

    #[test]
    fn coefficients_of_exponential() {
        let d = RadialDensity::from_fn(-1.0, f64::exp);
        let c = asymptotic_coefficients(&d, 2).unwrap();
        for (got, want) in c.iter().zip([1.0, 1.0, 0.5]) {
            assert!((got - want).abs() < 1e-6);
        }
    }

    #[test]
    fn first_coefficient_is_the_pairing() {
        let phi = RadialFn::new(|r: f64| (-r).exp() / (1.0 + r * r));
        let d = radial_density(&phi, Dispersion::Linear, 0.7).unwrap();
        let c = asymptotic_coefficients(&d, 2).unwrap();
        assert!((c[0] - delta_pairing(&phi, Dispersion::Linear, 0.7).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn refuses_high_orders_and_kinks() {
        let d = RadialDensity::from_fn(-1.0, f64::exp);
        assert!(matches!(asymptotic_coefficients(&d, 7), Err(Error::Domain(_))));
        let kink = RadialDensity::from_fn(-1.0, f64::abs);
        assert!(matches!(asymptotic_coefficients(&kink, 1), Err(Error::Diagnostic(_))));
        assert!(matches!(asymptotic_coefficients(&kink, 2), Err(Error::Diagnostic(_))));
    }

    #[test]
    fn nascent_delta_matches_resonant_value() {
        let phi = RadialFn::new(|r: f64| r.powi(-2));
        let (v, err) = nascent_delta_pairing(&phi, Dispersion::Linear, 1.0).unwrap();
        assert!((v - 4.0 * PI).abs() < 1e-9 * 4.0 * PI && err < 1e-8, "{v} ± {err}");
        assert_eq!(nascent_delta_pairing(&phi, Dispersion::Quadratic, -1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn behaviour_estimates() {
        let d = radial_density(&RadialFn::new(|r| r.powf(-0.9)), Dispersion::Linear, 1.0).unwrap();
        let e = d.endpoint_behavior();
        assert_eq!(e.source, EstimateSource::Fit);
        assert!((e.exponent.unwrap() - 1.1).abs() < 1e-6);
        // (1 + 1/u)^1.1 biases the tail fit by O(1/u)
        let t = d.tail_behavior();
        assert!((t.exponent.unwrap() - 1.1).abs() < 1e-3);

        let g = radial_density(&RadialFn::new(|r: f64| (-r * r).exp()), Dispersion::Linear, 1.0).unwrap();
        assert_eq!(g.tail_behavior().exponent, Some(f64::NEG_INFINITY));
        assert_eq!(g.tail_behavior().source, EstimateSource::Vanishing);

        let q = radial_density(&RadialFn::new(|r| r.powi(-2)), Dispersion::Quadratic, 1.0).unwrap();
        assert!((q.endpoint_behavior().exponent.unwrap() + 0.5).abs() < 1e-6);
    }

    #[test]
    fn dispersion_parsing() {
        assert_eq!("Linear".parse::<Dispersion>().unwrap(), Dispersion::Linear);
        assert_eq!("quadratic".parse::<Dispersion>().unwrap(), Dispersion::Quadratic);
        assert!("cubic".parse::<Dispersion>().is_err());
        assert_eq!(Dispersion::Quadratic.omega(-3.0), 9.0);
        assert_eq!(Dispersion::Linear.resonant_radius(-1.0), None);
    }
}
