//! The transport coefficient `γ₋` by the frequency route (resonant surface
//! term plus principal value) and the time route (`e^{εt}`-regularized time
//! integral), its Ito decomposition, and the scaling-limit demonstrations.

mod limits;
mod time_domain;

pub use limits::{
    cross_covariance_decay, scaling_limit_demo, second_order_limit, unit_gaussian_window, ConvergenceTable, TableRow,
};
pub use time_domain::{
    gamma_minus_time_domain, hydrogen_gamma_time_domain, time_route_from_density, CorrelationKernel, TimeRoute,
    DEFAULT_EPS_SEQUENCE,
};

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{delta_pairing_density, radial_density, Dispersion, RadialDensity, RadialFn};
use crate::hydrogen::{AtomicConstants, ClosedFormElement, Cutoff, LevelPair, SignedTransition};
use crate::pv::{classify, pp_integral_detailed, ClassifySpec, ConvergenceVerdict, PvVerdict, Target};

/// Which route produced a [`Susceptivity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    FrequencyDomain,
    TimeDomain,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::FrequencyDomain => "frequency-domain",
            Route::TimeDomain => "time-domain",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign attached to the principal-value part of `Im γ₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// `Im γ₋ = −PP`, the δ/PP split as usually printed.
    Printed,
    /// `Im γ₋ = +PP`, the limit of `∫_{−∞}^0 e^{εt} e^{−itu} dt = 1/(ε − iu)`.
    Regularized,
}

/// Sign relation between the imaginary parts of two routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignRelation {
    Same,
    Opposite,
}

/// `γ₋ = re + i·im`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Susceptivity {
    /// `π⟨δ(ω(k) − ω), |g|²⟩`; exactly zero when the resonant shell is empty.
    pub re: f64,
    /// Absent when the principal value diverges.
    pub im: Option<f64>,
    pub route: Route,
    pub verdict: ConvergenceVerdict,
    pub error_estimate: f64,
    pub convention: SignConvention,
    /// Resonance frequency `ω`.
    pub omega: f64,
}

impl Susceptivity {
    /// A finite value built by hand, e.g. for [`ito_decomposition`].
    pub fn from_value(re: f64, im: f64) -> Result<Self> {
        if !(re >= 0.0 && re.is_finite() && im.is_finite()) {
            return domain(format!("need finite re >= 0 and finite im, got ({re}, {im})"));
        }
        Ok(Self {
            re,
            im: Some(im),
            route: Route::FrequencyDomain,
            verdict: ConvergenceVerdict::finite(),
            error_estimate: 0.0,
            convention: SignConvention::Printed,
            omega: f64::NAN,
        })
    }

    pub fn value(&self) -> Option<Complex64> {
        self.im.map(|im| Complex64::new(self.re, im))
    }

    pub fn is_finite(&self) -> bool {
        self.verdict.principal_value == PvVerdict::Finite && self.im.is_some()
    }

    /// Lowercase verdict string of the principal value.
    pub fn verdict_str(&self) -> &'static str {
        self.verdict.principal_value.as_str()
    }
}

/// Scalars of the Ito correction `Y = γ₋ D⁺D` for one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItoDecomposition {
    /// `2·Re γ₋`.
    pub decay_rate: f64,
    /// `1/decay_rate`, infinite for a purely conservative evolution.
    pub lifetime: f64,
    /// `Im γ₋` under `convention`.
    pub energy_shift: f64,
    pub convention: SignConvention,
}

impl ItoDecomposition {
    /// `decay_rate/2 + i·energy_shift`.
    pub fn gamma(&self) -> Complex64 {
        Complex64::new(self.decay_rate / 2.0, self.energy_shift)
    }
}

pub fn ito_decomposition(gamma: &Susceptivity) -> Result<ItoDecomposition> {
    let Some(im) = gamma.im.filter(|_| gamma.verdict.principal_value == PvVerdict::Finite) else {
        return domain(format!(
            "Ito decomposition needs a finite susceptivity, verdict is {}",
            gamma.verdict.principal_value
        ));
    };
    let decay_rate = 2.0 * gamma.re;
    Ok(ItoDecomposition {
        decay_rate,
        lifetime: if decay_rate == 0.0 { f64::INFINITY } else { 1.0 / decay_rate },
        energy_shift: im,
        convention: gamma.convention,
    })
}

/// Route tolerances and constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaOptions {
    /// Absolute tolerance of the principal value.
    pub tol: f64,
    /// Regularization sequence of the time route, decreasing.
    pub eps_sequence: Vec<f64>,
    pub constants: AtomicConstants,
}

impl Default for GammaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            eps_sequence: DEFAULT_EPS_SEQUENCE.to_vec(),
            constants: AtomicConstants::atomic(),
        }
    }
}

impl GammaOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_eps(mut self, eps: &[f64]) -> Self {
        self.eps_sequence = eps.to_vec();
        self
    }

    pub fn with_constants(mut self, constants: AtomicConstants) -> Self {
        self.constants = constants;
        self
    }
}

/// `|g(k)|²` as a radial function with its exponents.
pub fn squared_cutoff(cutoff: &Cutoff) -> RadialFn {
    let g = cutoff.clone();
    RadialFn::new(move |k| g.eval(k).powi(2)).with_exponents(
        cutoff.endpoint_exponent().map(|p| 2.0 * p),
        cutoff.tail_exponent().map(|p| 2.0 * p),
    )
}

/// `|g_mn(k)|²` from the closed-form matrix element.
pub fn hydrogen_squared_element(pair: LevelPair, cutoff: &Cutoff, constants: &AtomicConstants) -> Result<RadialFn> {
    let closed = ClosedFormElement::new(pair, constants)?;
    let g = cutoff.clone();
    // The bracket is ~ k^{1+2p₀} at the origin and ~ k^{-3} at infinity.
    let order = 4.0 * closed.origin_order() as f64;
    let origin = cutoff.endpoint_exponent().map(|p| 2.0 * p + order);
    let tail = cutoff.tail_exponent().map(|p| 2.0 * p - 8.0);
    Ok(RadialFn::new(move |k| closed.norm_sqr(k, &g)).with_exponents(origin, tail))
}

/// Radial density of `|g_mn|²` (hydrogen level pair) at frequency `ω`.
pub fn hydrogen_density(
    pair: LevelPair,
    omega: f64,
    cutoff: &Cutoff,
    disp: Dispersion,
    constants: &AtomicConstants,
) -> Result<RadialDensity> {
    let phi = hydrogen_squared_element(pair, cutoff, constants)?;
    Ok(radial_density(&phi, disp, omega)?.with_label(format!("({},{}) {} {disp}", pair.m, pair.n, cutoff.label())))
}

/// The density a classification or a route integrates over.
pub fn target_density(cutoff: &Cutoff, target: &Target, disp: Dispersion, constants: &AtomicConstants) -> Result<RadialDensity> {
    match target {
        Target::Transition(t) => {
            let (m, n) = t.levels();
            hydrogen_density(LevelPair::new(m, n)?, t.bohr_frequency(constants), cutoff, disp, constants)
        }
        Target::Frequency(omega) => {
            let phi = squared_cutoff(cutoff);
            Ok(radial_density(&phi, disp, *omega)?.with_label(format!("{} {disp}", cutoff.label())))
        }
    }
}

/// `π·Φ(0)`, exactly zero when `u = 0` is outside the density's domain.
pub fn resonant_part(density: &RadialDensity) -> Result<f64> {
    let value = PI * delta_pairing_density(density);
    if !value.is_finite() {
        return Err(Error::NonFinite { at: 0.0 });
    }
    Ok(value)
}

/// Frequency route over a prepared density: `re = πΦ(0)`, `im = −PP`.
pub fn frequency_route_from_density(density: &RadialDensity, mut verdict: ConvergenceVerdict, tol: f64) -> Result<Susceptivity> {
    let re = resonant_part(density)?;
    let mut im = None;
    let mut error_estimate = 0.0;
    if !verdict.principal_value.is_divergent() {
        match pp_integral_detailed(density, tol) {
            Ok(pp) => {
                im = Some(-pp.value);
                error_estimate = pp.abs_error;
                if verdict.principal_value == PvVerdict::Unknown {
                    verdict.diagnostics.push(format!("principal value converged numerically to {:e}", pp.value));
                }
            }
            Err(Error::DivergentEndpoint { exponent }) => {
                verdict.principal_value = PvVerdict::DivergentEndpoint;
                verdict.diagnostics.push(format!("quadrature found endpoint exponent {exponent:.4}"));
            }
            Err(Error::DivergentTail { exponent }) => {
                verdict.principal_value = PvVerdict::DivergentTail;
                verdict.diagnostics.push(format!("quadrature found tail exponent {exponent:.4}"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Susceptivity {
        re,
        im,
        route: Route::FrequencyDomain,
        verdict,
        error_estimate,
        convention: SignConvention::Printed,
        omega: -density.left_endpoint(),
    })
}

/// `γ₋` for the bare form factor `|g(k)|²` at frequency `ω`.
pub fn gamma_minus(cutoff: &Cutoff, disp: Dispersion, omega: f64) -> Result<Susceptivity> {
    gamma_minus_with(cutoff, disp, omega, &GammaOptions::default())
}

pub fn gamma_minus_with(cutoff: &Cutoff, disp: Dispersion, omega: f64, opts: &GammaOptions) -> Result<Susceptivity> {
    if !omega.is_finite() {
        return domain(format!("frequency must be finite, got {omega}"));
    }
    let spec = ClassifySpec {
        cutoff: cutoff.clone(),
        target: Target::Frequency(omega),
        dispersion: disp,
        constants: opts.constants,
    };
    let verdict = classify(&spec)?;
    let density = target_density(cutoff, &spec.target, disp, &opts.constants)?;
    frequency_route_from_density(&density, verdict, opts.tol)
}

/// `γ₋` of a hydrogen transition; a reversed transition has `ω < 0` and `re = 0`.
pub fn hydrogen_gamma(t: impl Into<SignedTransition>, cutoff: &Cutoff, disp: Dispersion) -> Result<Susceptivity> {
    hydrogen_gamma_with(t, cutoff, disp, &GammaOptions::default())
}

pub fn hydrogen_gamma_with(t: impl Into<SignedTransition>, cutoff: &Cutoff, disp: Dispersion, opts: &GammaOptions) -> Result<Susceptivity> {
    let spec = ClassifySpec {
        cutoff: cutoff.clone(),
        target: Target::Transition(t.into()),
        dispersion: disp,
        constants: opts.constants,
    };
    let verdict = classify(&spec)?;
    let density = target_density(cutoff, &spec.target, disp, &opts.constants)?;
    frequency_route_from_density(&density, verdict, opts.tol)
}

/// Differences between two routes, with `Im` compared in magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteComparison {
    pub re_difference: f64,
    pub im_magnitude_difference: Option<f64>,
    /// Observed relation between the signs of the two imaginary parts.
    pub sign_relation: Option<SignRelation>,
}

impl RouteComparison {
    /// `|Δre| ≤ rel·(1+|re|)` and `||im₁| − |im₂|| ≤ rel·(1+|im|)`.
    pub fn agrees(&self, a: &Susceptivity, rel: f64) -> bool {
        let re_ok = self.re_difference <= rel * (1.0 + a.re.abs());
        let im_ok = match (self.im_magnitude_difference, a.im) {
            (Some(d), Some(im)) => d <= rel * (1.0 + im.abs()),
            (None, None) => true,
            _ => false,
        };
        re_ok && im_ok
    }
}

pub fn compare_routes(a: &Susceptivity, b: &Susceptivity) -> RouteComparison {
    let (im_magnitude_difference, sign_relation) = match (a.im, b.im) {
        (Some(x), Some(y)) => {
            let relation = if x == 0.0 || y == 0.0 {
                None
            } else if x.signum() == y.signum() {
                Some(SignRelation::Same)
            } else {
                Some(SignRelation::Opposite)
            };
            (Some((x.abs() - y.abs()).abs()), relation)
        }
        _ => (None, None),
    };
    RouteComparison {
        re_difference: (a.re - b.re).abs(),
        im_magnitude_difference,
        sign_relation,
    }
}
