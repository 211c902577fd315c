//! Improper and principal-value integrals `∫ Φ(u)/u du` over radial densities,
//! and the convergence classification of the susceptivity integrals.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fit::{fit_power_law, least_squares, linear_fit, log_grid};
use crate::geometry::{Dispersion, EstimateSource, ExponentEstimate, RadialDensity};
use crate::hydrogen::{bohr_frequency, AtomicConstants, ClosedFormElement, Cutoff, LevelPair, SignedTransition, Transition};
use crate::quad::{gauss_kronrod, gauss_kronrod_breaks, tanh_sinh_with, Integral, QuadOptions};
use crate::susceptivity::target_density;

/// Endpoint exponents at or below this make `∫ Φ` diverge at `u → a`.
pub const ENDPOINT_DIVERGENCE: f64 = -1.0 + 1e-3;
/// Tail exponents above this make `∫ Φ/u` diverge at infinity.
pub const TAIL_DIVERGENCE: f64 = -1e-3;
/// `|Φ(0)|` below this fraction of the probe maximum counts as zero.
pub const RESONANCE_ZERO: f64 = 1e-10;
/// Between [`RESONANCE_ZERO`] and this fraction the resonance is borderline.
pub const RESONANCE_BORDERLINE: f64 = 1e-6;

/// Verdict on the plain improper integral `∫_a^∞ Φ(u)/u du`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlainVerdict {
    Finite,
    DivergentLogarithmic,
    DivergentEndpoint,
    DivergentTail,
    Unknown,
}

/// Verdict on the principal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PvVerdict {
    Finite,
    DivergentEndpoint,
    DivergentTail,
    Unknown,
}

impl PlainVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlainVerdict::Finite => "finite",
            PlainVerdict::DivergentLogarithmic => "divergent-logarithmic",
            PlainVerdict::DivergentEndpoint => "divergent-endpoint",
            PlainVerdict::DivergentTail => "divergent-tail",
            PlainVerdict::Unknown => "unknown",
        }
    }
}

impl PvVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            PvVerdict::Finite => "finite",
            PvVerdict::DivergentEndpoint => "divergent-endpoint",
            PvVerdict::DivergentTail => "divergent-tail",
            PvVerdict::Unknown => "unknown",
        }
    }

    pub fn is_finite(&self) -> bool {
        *self == PvVerdict::Finite
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, PvVerdict::DivergentEndpoint | PvVerdict::DivergentTail)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "finite" => Some(PvVerdict::Finite),
            "divergent-endpoint" => Some(PvVerdict::DivergentEndpoint),
            "divergent-tail" => Some(PvVerdict::DivergentTail),
            "unknown" => Some(PvVerdict::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for PlainVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for PvVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification of both integrals with the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub plain: PlainVerdict,
    pub principal_value: PvVerdict,
    /// Exponent of `Φ(a + s)` as `s → 0`.
    pub endpoint_exponent: Option<f64>,
    /// Exponent of `Φ(u)` as `u → ∞`.
    pub tail_exponent: Option<f64>,
    /// `Φ(0)`, when the resonance lies inside the domain.
    pub resonant_density: Option<f64>,
    pub diagnostics: Vec<String>,
}

impl ConvergenceVerdict {
    pub fn finite() -> Self {
        Self {
            plain: PlainVerdict::Finite,
            principal_value: PvVerdict::Finite,
            endpoint_exponent: None,
            tail_exponent: None,
            resonant_density: None,
            diagnostics: Vec::new(),
        }
    }
}

/// A principal value with its error budget and the behaviour estimates used.
#[derive(Debug, Clone, PartialEq)]
pub struct PvResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub endpoint: ExponentEstimate,
    pub tail: ExponentEstimate,
}

fn endpoint_check(density: &RadialDensity) -> Result<ExponentEstimate> {
    let estimate = density.endpoint_behavior();
    // With a = 0 the 1/u factor sits on the endpoint itself.
    let shift = if density.left_endpoint() == 0.0 { 1.0 } else { 0.0 };
    if let Some(p) = estimate.exponent {
        if p - shift <= ENDPOINT_DIVERGENCE {
            return Err(Error::DivergentEndpoint { exponent: p });
        }
    }
    Ok(estimate)
}

fn tail_check(density: &RadialDensity) -> Result<ExponentEstimate> {
    let estimate = density.tail_behavior();
    if let Some(q) = estimate.exponent {
        if q > TAIL_DIVERGENCE {
            return Err(Error::DivergentTail { exponent: q });
        }
    }
    Ok(estimate)
}

/// Where the bounded right-hand piece hands over to the tail map.
fn tail_start(density: &RadialDensity, h: f64) -> f64 {
    (16.0 * density.left_endpoint().abs().max(1.0)).max(2.0 * h)
}

fn finish(parts: Integral, tol: f64, endpoint: ExponentEstimate, tail: ExponentEstimate) -> Result<PvResult> {
    if !(parts.abs_error <= tol) {
        return Err(Error::Quadrature {
            value: parts.value,
            abs_error: parts.abs_error,
            evaluations: parts.evaluations,
        });
    }
    Ok(PvResult {
        value: parts.value,
        abs_error: parts.abs_error,
        evaluations: parts.evaluations,
        endpoint,
        tail,
    })
}

/// `∫_lo^b Φ(u)/u du` (plus the tail when `b = ∞`) for `0 < lo`.
fn right_of(density: &RadialDensity, lo: f64, tol: f64) -> Result<Integral> {
    let phi_over_u = |u: f64| density.eval(u) / u;
    match density.right_endpoint() {
        Some(b) if b <= lo => Ok(Integral::ZERO),
        Some(b) => gauss_kronrod(phi_over_u, lo, b, &QuadOptions::abs(tol).with_max_intervals(8000)),
        None => {
            let big = tail_start(density, lo);
            let body = gauss_kronrod(phi_over_u, lo, big, &QuadOptions::abs(0.5 * tol).with_max_intervals(8000))?;
            let tail = density.integrate_tail(|u| 1.0 / u, -1.0, big, 0.5 * tol)?;
            Ok(body.combine(tail))
        }
    }
}

/// Principal value `lim_{ε→0} [∫_a^{−ε} + ∫_ε^∞] Φ(u)/u du`.
pub fn pp_integral(density: &RadialDensity, tol: f64) -> Result<f64> {
    Ok(pp_integral_detailed(density, tol)?.value)
}

/// As [`pp_integral`], returning the error estimate and behaviour fits.
///
/// The singular neighbourhood `[−h, h]`, `h = min(|a|/2, 1)`, is folded onto
/// `∫_0^h (Φ(u) − Φ(−u))/u du`; the rest is one-sided quadrature with the
/// tail mapped through `u ↦ 1/u`.
pub fn pp_integral_detailed(density: &RadialDensity, tol: f64) -> Result<PvResult> {
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let endpoint = endpoint_check(density)?;
    let tail = tail_check(density)?;
    let a = density.left_endpoint();
    let b = density.right_endpoint();

    if !density.straddles_zero() {
        // No interior singularity: the integral is proper up to the ends.
        let parts = if let Some(b) = b.filter(|b| *b <= 0.0) {
            if b == 0.0 {
                return domain("a density ending exactly at u = 0 has no principal value");
            }
            density.integrate_from_endpoint(|u| 1.0 / u, b, tol)?
        } else {
            let near_end = b.unwrap_or(f64::INFINITY).min(a + a.abs().max(1.0));
            let head = density.integrate_from_endpoint(|u| 1.0 / u, near_end, 0.5 * tol)?;
            head.combine(right_of(density, near_end, 0.5 * tol)?)
        };
        return finish(parts, tol, endpoint, tail);
    }

    let h = (-0.5 * a).min(1.0).min(b.unwrap_or(f64::INFINITY));
    let fold = tanh_sinh_with(
        |_, du, dh| {
            if du == 0.0 {
                return 0.0;
            }
            (density.eval(du) - density.eval_reflected(du, h, dh)) / du
        },
        0.0,
        h,
        0.25 * tol,
    )?;
    let left = if -h > a {
        density.integrate_from_endpoint(|u| 1.0 / u, -h, 0.25 * tol)?
    } else {
        Integral::ZERO
    };
    let right = right_of(density, h, 0.5 * tol)?;
    finish(fold.combine(left).combine(right), tol, endpoint, tail)
}

/// `[∫_a^{−ε} + ∫_ε^∞] Φ(u)/u du` computed directly, without the fold.
pub fn truncated_pp(density: &RadialDensity, eps: f64, tol: f64) -> Result<f64> {
    if !density.straddles_zero() {
        return domain("u = 0 must lie inside the density's domain");
    }
    let a = density.left_endpoint();
    if !(eps > 0.0 && eps < -a) {
        return domain(format!("cut-off {eps} must lie in (0, {})", -a));
    }
    endpoint_check(density)?;
    tail_check(density)?;
    let left = density.integrate_from_endpoint(|u| 1.0 / u, -eps, 0.5 * tol)?;
    let right = right_of(density, eps, 0.5 * tol)?;
    Ok(left.value + right.value)
}

/// Right-hand ε-scan `J(ε) = ∫_ε^h Φ(u)/u du` against `log(1/ε)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogScan {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    /// Fitted coefficient `c` in `J(ε) ≈ c·log(1/ε) + const`.
    pub slope: f64,
    pub slope_stderr: f64,
}

pub fn log_scan(density: &RadialDensity, eps: &[f64]) -> Result<LogScan> {
    if !density.straddles_zero() {
        return domain("u = 0 must lie inside the density's domain");
    }
    let h = density.left_endpoint().abs().min(1.0).min(density.right_endpoint().unwrap_or(f64::INFINITY));
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0 && *e < h)) {
        return domain(format!("need at least two cut-offs in (0, {h})"));
    }
    // u = e^t turns Φ(u)/u du into Φ(e^t) dt.
    let values = eps
        .iter()
        .map(|&e| Ok(gauss_kronrod(|t: f64| density.eval(t.exp()), e.ln(), h.ln(), &QuadOptions::abs(1e-12).with_rel(1e-12))?.value))
        .collect::<Result<Vec<f64>>>()?;
    let logs: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    // J(ε) = c·log(1/ε) + const − Φ'(0)ε + O(ε²); the linear term is fitted out
    // when there are enough points.
    let (slope, slope_stderr) = match least_squares(&[vec![1.0; eps.len()], logs.clone(), eps.to_vec()], &values) {
        Some((c, se)) if eps.len() >= 5 => (c[1], se[1]),
        _ => {
            let fit = linear_fit(&logs, &values);
            (fit.slope, fit.slope_stderr)
        }
    };
    Ok(LogScan {
        eps: eps.to_vec(),
        values,
        slope,
        slope_stderr,
    })
}

/// Default cut-offs for [`log_scan`]: four decades below `h·1e-5`.
pub fn default_log_scan_eps(density: &RadialDensity) -> Vec<f64> {
    let h = density.left_endpoint().abs().min(1.0).min(density.right_endpoint().unwrap_or(f64::INFINITY));
    log_grid(1e-9 * h, 1e-5 * h, 9)
}

/// Largest `|Φ|` over a probe grid spanning the density's domain.
pub fn probe_max(density: &RadialDensity) -> f64 {
    let a = density.left_endpoint();
    let width = density.right_endpoint().map_or(f64::INFINITY, |b| b - a);
    let scale = a.abs().max(1.0);
    let mut max: f64 = 0.0;
    for i in 1..=400 {
        let s = (scale * 4.0 * i as f64 / 400.0).min(width);
        let v = density.eval_from_endpoint(s).abs();
        if v.is_finite() {
            max = max.max(v);
        }
    }
    for s in log_grid(1e-3 * scale, 1e3 * scale, 61) {
        if s <= width {
            let v = density.eval_from_endpoint(s).abs();
            if v.is_finite() {
                max = max.max(v);
            }
        }
    }
    max
}

/// Classification of the resonant value `Φ(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resonance {
    Zero,
    Borderline(f64),
    NonZero(f64),
}

pub fn resonance(density: &RadialDensity) -> Resonance {
    let phi0 = density.at_resonance();
    let max = probe_max(density).max(phi0.abs());
    if phi0.abs() <= RESONANCE_ZERO * max {
        Resonance::Zero
    } else if phi0.abs() < RESONANCE_BORDERLINE * max {
        Resonance::Borderline(phi0)
    } else {
        Resonance::NonZero(phi0)
    }
}

/// The plain improper integral `∫_a^∞ Φ(u)/u du`.
///
/// Finite only when `Φ(0) = 0`; otherwise the ε-scan slope is returned in
/// [`Error::DivergentLogarithmic`].
pub fn plain_integral(density: &RadialDensity, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    if !density.straddles_zero() {
        return pp_integral(density, tol);
    }
    match resonance(density) {
        Resonance::NonZero(_) => {
            let scan = log_scan(density, &default_log_scan_eps(density))?;
            return Err(Error::DivergentLogarithmic { slope: scan.slope });
        }
        Resonance::Borderline(phi0) => {
            return Err(Error::Inconclusive(format!(
                "resonant density {phi0:e} is too small to call divergent and too large to call zero"
            )));
        }
        Resonance::Zero => {
            let scan = log_scan(density, &default_log_scan_eps(density))?;
            let max = probe_max(density);
            if scan.slope.abs() > 1e-6 * max.max(f64::MIN_POSITIVE) {
                return Err(Error::Inconclusive(format!(
                    "resonant density looks zero but the ε-scan grows with slope {:e}",
                    scan.slope
                )));
            }
        }
    }
    endpoint_check(density)?;
    tail_check(density)?;
    let a = density.left_endpoint();
    let phi_over_u = |u: f64| density.eval(u) / u;
    let head = density.integrate_from_endpoint(|u| 1.0 / u, 0.5 * a, 0.25 * tol)?;
    let parts = match density.right_endpoint() {
        Some(b) => gauss_kronrod_breaks(phi_over_u, &[0.5 * a, 0.0, b], &QuadOptions::abs(0.75 * tol).with_max_intervals(8000))?,
        None => {
            let big = tail_start(density, 1.0);
            let body = gauss_kronrod_breaks(phi_over_u, &[0.5 * a, 0.0, big], &QuadOptions::abs(0.5 * tol).with_max_intervals(8000))?;
            body.combine(density.integrate_tail(|u| 1.0 / u, -1.0, big, 0.25 * tol)?)
        }
    };
    let total = head.combine(parts);
    if !(total.abs_error <= tol) {
        return Err(Error::Quadrature {
            value: total.value,
            abs_error: total.abs_error,
            evaluations: total.evaluations,
        });
    }
    Ok(total.value)
}

/// The resonance frequency entering a classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Hydrogen level pair: the density is built from `|g_mn(k)|²`.
    Transition(SignedTransition),
    /// Bare form factor: the density is built from `|g(k)|²` at frequency `ω`.
    Frequency(f64),
}

impl From<Transition> for Target {
    fn from(t: Transition) -> Self {
        Target::Transition(t.into())
    }
}

impl Target {
    pub fn frequency(&self, constants: &AtomicConstants) -> f64 {
        match self {
            Target::Transition(t) => t.bohr_frequency(constants),
            Target::Frequency(w) => *w,
        }
    }
}

/// Input of [`classify`].
#[derive(Debug, Clone)]
pub struct ClassifySpec {
    pub cutoff: Cutoff,
    pub target: Target,
    pub dispersion: Dispersion,
    pub constants: AtomicConstants,
}

fn pv_from_exponents(endpoint: Option<f64>, tail: Option<f64>, a: f64, diagnostics: &mut Vec<String>) -> PvVerdict {
    let shift = if a == 0.0 { 1.0 } else { 0.0 };
    match endpoint {
        Some(p) if p - shift <= ENDPOINT_DIVERGENCE => {
            diagnostics.push(format!("density behaves as s^{p:.4} at the k -> 0 endpoint"));
            return PvVerdict::DivergentEndpoint;
        }
        None => {
            diagnostics.push("endpoint exponent could not be determined".into());
        }
        _ => {}
    }
    match tail {
        Some(q) if q > TAIL_DIVERGENCE => {
            diagnostics.push(format!("density decays only as u^{q:.4}"));
            PvVerdict::DivergentTail
        }
        None => {
            diagnostics.push("tail exponent could not be determined".into());
            PvVerdict::Unknown
        }
        _ if endpoint.is_none() => PvVerdict::Unknown,
        _ => PvVerdict::Finite,
    }
}

fn plain_from(pv: PvVerdict, density: &RadialDensity, diagnostics: &mut Vec<String>) -> (PlainVerdict, Option<f64>) {
    if !density.straddles_zero() {
        let plain = match pv {
            PvVerdict::Finite => PlainVerdict::Finite,
            PvVerdict::DivergentEndpoint => PlainVerdict::DivergentEndpoint,
            PvVerdict::DivergentTail => PlainVerdict::DivergentTail,
            PvVerdict::Unknown => PlainVerdict::Unknown,
        };
        return (plain, None);
    }
    match resonance(density) {
        Resonance::NonZero(phi0) => {
            diagnostics.push(format!("resonant density Φ(0) = {phi0:e} ≠ 0"));
            (PlainVerdict::DivergentLogarithmic, Some(phi0))
        }
        Resonance::Borderline(phi0) => {
            diagnostics.push(format!("resonant density Φ(0) = {phi0:e} is borderline"));
            (PlainVerdict::Unknown, Some(phi0))
        }
        Resonance::Zero => {
            let plain = match pv {
                PvVerdict::Finite => PlainVerdict::Finite,
                PvVerdict::DivergentEndpoint => PlainVerdict::DivergentEndpoint,
                PvVerdict::DivergentTail => PlainVerdict::DivergentTail,
                PvVerdict::Unknown => PlainVerdict::Unknown,
            };
            (plain, Some(density.at_resonance()))
        }
    }
}

/// Numeric classification of an arbitrary density from its exponent fits.
pub fn classify_density(density: &RadialDensity) -> ConvergenceVerdict {
    let mut diagnostics = Vec::new();
    let endpoint = density.endpoint_behavior();
    let tail = density.tail_behavior();
    for (name, e) in [("endpoint", &endpoint), ("tail", &tail)] {
        match e.source {
            EstimateSource::Hint => diagnostics.push(format!("{name} fit not definite (R² = {:.6}); using metadata", e.r_squared)),
            EstimateSource::Unknown => diagnostics.push(format!("{name} fit not definite (R² = {:.6})", e.r_squared)),
            _ => {}
        }
    }
    let pv = pv_from_exponents(endpoint.exponent, tail.exponent, density.left_endpoint(), &mut diagnostics);
    let (plain, resonant_density) = plain_from(pv, density, &mut diagnostics);
    ConvergenceVerdict {
        plain,
        principal_value: pv,
        endpoint_exponent: endpoint.exponent,
        tail_exponent: tail.exponent,
        resonant_density,
        diagnostics,
    }
}

/// Convergence of the susceptivity integrals for a cutoff and a resonance.
///
/// Power-law cutoffs follow the analytic exponents: the hydrogen density goes
/// as `s^{2−2ν+4p₀}` (linear) or `s^{1/2−ν+2p₀}` (quadratic) at `k → 0`, so the
/// principal value is finite iff `ν < 3/2 + 2p₀`. `p₀` is the order at which
/// the bracket's Taylor series first survives; it vanishes unless `Σ_s s C_s = 0`.
/// Radial cutoffs are classified from numeric exponent fits.
pub fn classify(spec: &ClassifySpec) -> Result<ConvergenceVerdict> {
    let density = target_density(&spec.cutoff, &spec.target, spec.dispersion, &spec.constants)?;
    let Some(nu) = spec.cutoff.nu() else {
        return Ok(classify_density(&density));
    };
    let disp = spec.dispersion;
    let (endpoint, tail) = match spec.target {
        // |g_mn|² ~ k^{4p₀−2ν} at the origin and k^{−8−2ν} at infinity.
        Target::Transition(t) => {
            let (m, n) = t.levels();
            let order = ClosedFormElement::new(LevelPair::new(m, n)?, &spec.constants)?.origin_order() as f64;
            (disp.density_exponent(4.0 * order - 2.0 * nu), disp.density_exponent(-8.0 - 2.0 * nu))
        }
        Target::Frequency(_) => (disp.density_exponent(-2.0 * nu), disp.density_exponent(-2.0 * nu)),
    };
    let mut diagnostics = vec![format!("analytic exponents for |k|^-{nu}: endpoint {endpoint}, tail {tail}")];
    let pv = pv_from_exponents(Some(endpoint), Some(tail), density.left_endpoint(), &mut diagnostics);
    let (plain, resonant_density) = plain_from(pv, &density, &mut diagnostics);
    Ok(ConvergenceVerdict {
        plain,
        principal_value: pv,
        endpoint_exponent: Some(endpoint),
        tail_exponent: Some(tail),
        resonant_density,
        diagnostics,
    })
}

/// Sampling ranges for [`check_cutoff_conditions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    /// `x` range for the large-argument fit of `|g|`.
    pub tail: (f64, f64),
    /// `x` range for the small-argument fit of `|g|`.
    pub origin: (f64, f64),
    /// Offsets from the resonance radius, relative to `ω`.
    pub resonance: (f64, f64),
    pub points: usize,
    /// Gap `ε` around `0` and `ω` for the square-integrability test; `ω/10` if unset.
    pub epsilon: Option<f64>,
    /// Right end `b` of the compact; `10·max(1, ω)` if unset.
    pub b: Option<f64>,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self {
            tail: (1e3, 1e5),
            origin: (1e-8, 1e-6),
            resonance: (1e-9, 1e-7),
            points: 9,
            epsilon: None,
            b: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionOutcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub outcome: ConditionOutcome,
    pub exponent: Option<f64>,
    pub detail: String,
}

impl ConditionReport {
    fn new(outcome: ConditionOutcome, exponent: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            outcome,
            exponent,
            detail: detail.into(),
        }
    }
}

/// Sufficient conditions on a cutoff for finite hydrogen susceptivities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffConditions {
    /// `|g(u+ω)|²/u⁴` integrable at infinity.
    pub tail_integrable: ConditionReport,
    /// `g` bounded near the resonance radius.
    pub bounded_at_resonance: ConditionReport,
    /// `|g(x)|² x²` integrable at `x → 0`.
    pub origin_integrable: ConditionReport,
    /// `g` square-integrable on the compacts away from `0` and `ω`.
    pub square_integrable: ConditionReport,
}

impl CutoffConditions {
    pub fn all_pass(&self) -> bool {
        self.reports().iter().all(|r| r.outcome == ConditionOutcome::Pass)
    }

    pub fn reports(&self) -> [&ConditionReport; 4] {
        [
            &self.tail_integrable,
            &self.bounded_at_resonance,
            &self.origin_integrable,
            &self.square_integrable,
        ]
    }
}

/// Fit of `|g|` over `xs`, treating zeros on the limiting side as fast decay.
fn magnitude_exponent(g: &Cutoff, xs: &[f64], limit_is_small: bool) -> std::result::Result<f64, String> {
    let ys: Vec<f64> = xs.iter().map(|&x| g.eval(x).abs()).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err("cutoff is not finite on the probe grid".into());
    }
    let vanishing = if limit_is_small { f64::INFINITY } else { f64::NEG_INFINITY };
    if ys.iter().all(|y| *y == 0.0) {
        return Ok(vanishing);
    }
    let zero: Vec<bool> = ys.iter().map(|y| *y == 0.0).collect();
    if zero.iter().any(|z| *z) {
        let limit_side_only = if limit_is_small {
            let k = zero.iter().position(|z| !z).unwrap_or(zero.len());
            zero[k..].iter().all(|z| !z)
        } else {
            let k = zero.iter().rposition(|z| !z).map_or(0, |k| k + 1);
            zero[..k].iter().all(|z| !z)
        };
        return if limit_side_only {
            Ok(vanishing)
        } else {
            Err("cutoff has isolated zeros on the probe grid".into())
        };
    }
    let fit = fit_power_law(xs, &ys);
    if fit.is_definite() {
        Ok(fit.exponent)
    } else {
        Err(format!("power-law fit not definite (R² = {:.6})", fit.r_squared))
    }
}

/// Checks the four sufficient conditions on `g` for the transition `t`.
pub fn check_cutoff_conditions(g: &Cutoff, t: &Transition, probes: &ProbeGrid, constants: &AtomicConstants) -> CutoffConditions {
    use ConditionOutcome::*;
    let omega = bohr_frequency(t, constants);
    let n = probes.points.max(3);

    let tail_integrable = match magnitude_exponent(g, &log_grid(probes.tail.0, probes.tail.1, n), false) {
        Ok(p) if p < 1.5 - 1e-3 => ConditionReport::new(Pass, Some(p), format!("|g| ~ x^{p:.4}, below 3/2")),
        Ok(p) => ConditionReport::new(Fail, Some(p), format!("|g| ~ x^{p:.4}, at or above 3/2")),
        Err(why) => ConditionReport::new(Inconclusive, None, why),
    };

    let offsets = log_grid(probes.resonance.0 * omega, probes.resonance.1 * omega, n);
    let near: Vec<f64> = offsets
        .iter()
        .map(|&d| g.eval(omega + d).abs().max(g.eval(omega - d).abs()))
        .collect();
    let bounded_at_resonance = if near.iter().any(|v| !v.is_finite()) || !g.eval(omega).is_finite() {
        ConditionReport::new(Inconclusive, None, "cutoff is not finite next to the resonance radius")
    } else if near.iter().all(|v| *v == 0.0) {
        ConditionReport::new(Pass, None, "cutoff vanishes next to the resonance radius")
    } else {
        let fit = fit_power_law(&offsets, &near);
        if fit.is_definite() && fit.exponent < -1e-3 {
            ConditionReport::new(
                Inconclusive,
                Some(fit.exponent),
                format!("|g| grows as d^{:.4} towards the resonance; the symmetric/antisymmetric split is not checkable", fit.exponent),
            )
        } else {
            let max = near.iter().cloned().fold(0.0, f64::max);
            ConditionReport::new(Pass, None, format!("bounded near the resonance radius (max {max:e})"))
        }
    };

    let origin_integrable = match magnitude_exponent(g, &log_grid(probes.origin.0, probes.origin.1, n), true) {
        Ok(p) if 2.0 * p + 2.0 > -1.0 + 1e-3 => ConditionReport::new(Pass, Some(p), format!("|g| ~ x^{p:.4}, above -3/2")),
        Ok(p) => ConditionReport::new(Fail, Some(p), format!("|g| ~ x^{p:.4}, at or below -3/2")),
        Err(why) => ConditionReport::new(Inconclusive, None, why),
    };

    let eps = probes.epsilon.unwrap_or(0.1 * omega);
    let b = probes.b.unwrap_or(10.0 * omega.max(1.0));
    let square_integrable = if !(eps > 0.0 && eps < 0.5 * omega && b > eps) {
        ConditionReport::new(Inconclusive, None, format!("gap {eps} must lie in (0, ω/2) and below b = {b}"))
    } else {
        let opts = QuadOptions::abs(1e-10).with_rel(1e-8).with_max_intervals(4000);
        let sq = |x: f64| g.eval(x).powi(2);
        let pieces = gauss_kronrod(sq, eps, omega - eps, &opts).and_then(|l| Ok(l.combine(gauss_kronrod(sq, omega + eps, omega + b, &opts)?)));
        match pieces {
            Ok(v) => ConditionReport::new(Pass, None, format!("∫|g|² = {:e} on the compacts", v.value)),
            Err(Error::NonFinite { at }) => ConditionReport::new(Fail, None, format!("|g|² not finite at x = {at:e}")),
            Err(e) => ConditionReport::new(Inconclusive, None, e.to_string()),
        }
    };

    CutoffConditions {
        tail_integrable,
        bounded_at_resonance,
        origin_integrable,
        square_integrable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RadialDensity;
    use approx::assert_relative_eq;

    const E1_HALF: f64 = 0.109_691_967_197_760_14;

    #[test]
    fn gaussian_pp() {
        let d = RadialDensity::from_fn(-1.0, |u: f64| (-u * u).exp());
        let v = pp_integral(&d, 1e-10).unwrap();
        assert!((v - E1_HALF).abs() < 1e-9, "{v}");
    }

    #[test]
    fn even_density_inside_fold_is_exactly_zero() {
        let d = RadialDensity::from_fn(-2.0, |u: f64| if u.abs() < 0.5 { (1.0 - 4.0 * u * u).powi(2) } else { 0.0 });
        assert_eq!(pp_integral(&d, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn proper_truncated_integral() {
        let d = RadialDensity::from_fn(-1.0, |u| u).truncated(1.0).unwrap();
        assert_relative_eq!(pp_integral(&d, 1e-12).unwrap(), 2.0, epsilon = 1e-11);
    }

    #[test]
    fn plain_integral_with_vanishing_resonance() {
        let d = RadialDensity::from_fn(-1.0, |u: f64| u * (-u * u).exp());
        let v = plain_integral(&d, 1e-9).unwrap();
        assert!((v - 1.633_051_058_265_185).abs() < 1e-8, "{v}");
        let zero = RadialDensity::zero(-1.0);
        assert_eq!(plain_integral(&zero, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn plain_integral_log_divergence() {
        let d = RadialDensity::from_fn(-1.0, |u: f64| 4.0 * std::f64::consts::PI * (-u * u).exp());
        match plain_integral(&d, 1e-9) {
            Err(Error::DivergentLogarithmic { slope }) => {
                assert!((slope / (4.0 * std::f64::consts::PI) - 1.0).abs() < 0.05)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn endpoint_and_tail_divergence() {
        let endpoint = RadialDensity::from_endpoint_fn(-1.0, |s: f64| s.powi(-1) * (-s).exp());
        assert!(matches!(pp_integral(&endpoint, 1e-8), Err(Error::DivergentEndpoint { .. })));
        let tail = RadialDensity::from_endpoint_fn(-1.0, |s: f64| (1.0 + s).powf(0.1));
        assert!(matches!(pp_integral(&tail, 1e-8), Err(Error::DivergentTail { .. })));
        let ok = RadialDensity::from_endpoint_fn(-1.0, |s: f64| s.powf(-0.9) / (1.0 + s * s));
        assert!(pp_integral(&ok, 1e-8).is_ok());
    }

    #[test]
    fn fold_agrees_with_truncation() {
        let d = RadialDensity::from_fn(-0.5, |u: f64| (1.0 + u).powi(2) * (-(1.0 + u)).exp());
        let pp = pp_integral(&d, 1e-11).unwrap();
        let e = [1e-2, 1e-3, 1e-4];
        let t: Vec<f64> = e.iter().map(|&eps| truncated_pp(&d, eps, 1e-11).unwrap()).collect();
        // the excluded band costs 2Φ'(0)ε, Φ'(0) = e^{-1}
        let slope = 2.0 * (-1.0f64).exp();
        for (v, eps) in t.iter().zip(e) {
            assert_relative_eq!((pp - v) / eps, slope, max_relative = 1e-3);
        }
    }

    #[test]
    fn conditions_for_bounded_compact_cutoff() {
        let t = Transition::new(2, 1).unwrap();
        let g = Cutoff::radial("bump", |x: f64| if (0.2..=0.6).contains(&x) { 1.0 } else { 0.0 });
        let report = check_cutoff_conditions(&g, &t, &ProbeGrid::default(), &AtomicConstants::atomic());
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn conditions_detect_growth() {
        let t = Transition::new(2, 1).unwrap();
        let c = AtomicConstants::atomic();
        let grow = Cutoff::radial("x^1.5", |x: f64| x.powf(1.5));
        assert_eq!(check_cutoff_conditions(&grow, &t, &ProbeGrid::default(), &c).tail_integrable.outcome, ConditionOutcome::Fail);
        let mild = Cutoff::radial("x^1.2", |x: f64| x.powf(1.2));
        assert_eq!(check_cutoff_conditions(&mild, &t, &ProbeGrid::default(), &c).tail_integrable.outcome, ConditionOutcome::Pass);
        let singular = Cutoff::radial("x^-1.5", |x: f64| x.powf(-1.5));
        assert_eq!(check_cutoff_conditions(&singular, &t, &ProbeGrid::default(), &c).origin_integrable.outcome, ConditionOutcome::Fail);
        let mild = Cutoff::radial("x^-1.4", |x: f64| x.powf(-1.4));
        assert_eq!(check_cutoff_conditions(&mild, &t, &ProbeGrid::default(), &c).origin_integrable.outcome, ConditionOutcome::Pass);
        let pole = Cutoff::radial("pole", |x: f64| 1.0 / (x - 0.375));
        assert_eq!(
            check_cutoff_conditions(&pole, &t, &ProbeGrid::default(), &c).bounded_at_resonance.outcome,
            ConditionOutcome::Inconclusive
        );
    }
}
