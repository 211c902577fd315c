//! Time route: `γ₋ = lim_{ε→0} ∫_{−∞}^0 e^{εt} C(t) dt` with
//! `C(t) = ∫ ρ̃(u) e^{−itu} du`, i.e. `∫ ρ̃(u)/(ε − iu) du`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::{GammaOptions, Route, SignConvention, Susceptivity};
use crate::error::{domain, Error, Result};
use crate::fit::extrapolate_to_zero;
use crate::geometry::{Dispersion, RadialDensity};
use crate::hydrogen::{Cutoff, SignedTransition};
use crate::pv::{classify, ClassifySpec, PvVerdict, Target, ENDPOINT_DIVERGENCE, TAIL_DIVERGENCE};
use crate::quad::{gauss_kronrod, gauss_kronrod_breaks, tanh_sinh_tail, tanh_sinh_with, Integral, QuadOptions};

/// Default regularization sequence of the time route.
pub const DEFAULT_EPS_SEQUENCE: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

#[derive(Clone)]
enum KernelRepr {
    Spectral(RadialDensity),
    Time(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

/// Bath correlation `C(t)`, from a spectral density or given directly in time.
#[derive(Clone)]
pub struct CorrelationKernel {
    repr: KernelRepr,
    /// Damping `ε` of `e^{εt}` used when the kernel is integrated over `t ≤ 0`.
    pub regularization: f64,
    label: String,
}

impl fmt::Debug for CorrelationKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorrelationKernel")
            .field("label", &self.label)
            .field("regularization", &self.regularization)
            .finish_non_exhaustive()
    }
}

impl CorrelationKernel {
    /// `C(t) = ∫ ρ̃(u) e^{−itu} du`.
    pub fn from_spectral_density(density: RadialDensity) -> Self {
        let label = density.label().to_string();
        Self {
            repr: KernelRepr::Spectral(density),
            regularization: 0.0,
            label,
        }
    }

    pub fn from_time_fn<F>(label: impl Into<String>, c: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            repr: KernelRepr::Time(Arc::new(c)),
            regularization: 0.0,
            label: label.into(),
        }
    }

    /// `C(t) = e^{−rate·|t|}`, the spectral density of a Lorentzian line.
    pub fn exponential(rate: f64) -> Self {
        Self::from_time_fn(format!("exp(-{rate}|t|)"), move |t: f64| Complex64::new((-rate * t.abs()).exp(), 0.0))
    }

    pub fn zero() -> Self {
        Self::from_time_fn("zero", |_| Complex64::new(0.0, 0.0))
    }

    pub fn with_regularization(mut self, eps: f64) -> Self {
        self.regularization = eps;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> Result<Complex64> {
        match &self.repr {
            KernelRepr::Time(c) => Ok(c(t)),
            KernelRepr::Spectral(d) => {
                let opts = QuadOptions::abs(1e-10).with_rel(1e-10).with_max_intervals(20_000);
                let a = d.left_endpoint();
                let end = d.right_endpoint().unwrap_or(a + 64.0 * a.abs().max(1.0));
                let re = gauss_kronrod(|u| d.eval(u) * (t * u).cos(), a, end, &opts)?;
                let im = gauss_kronrod(|u| -d.eval(u) * (t * u).sin(), a, end, &opts)?;
                Ok(Complex64::new(re.value, im.value))
            }
        }
    }

    /// `C(0)`, the total spectral weight.
    pub fn total_weight(&self) -> Result<f64> {
        match &self.repr {
            KernelRepr::Time(c) => Ok(c(0.0).re),
            KernelRepr::Spectral(d) => {
                let a = d.left_endpoint();
                let scale = a.abs().max(1.0);
                let opts = QuadOptions::abs(1e-12).with_rel(1e-12).with_max_intervals(20_000);
                let split = d.right_endpoint().map_or(a + 0.5 * scale, |b| b.min(a + 0.5 * scale));
                let head = d.integrate_from_endpoint(|_| 1.0, split, 1e-12)?;
                let rest = match d.right_endpoint() {
                    Some(b) => gauss_kronrod(|u| d.eval(u), split, b, &opts)?,
                    None => {
                        let big = split + 16.0 * scale;
                        gauss_kronrod(|u| d.eval(u), split, big, &opts)?.combine(tanh_sinh_tail(|u| d.eval(u), big, 1e-12)?)
                    }
                };
                Ok(head.value + rest.value)
            }
        }
    }
}

/// One row per `ε` of `G(ε) = ∫ ρ̃(u)/(ε − iu) du` and the extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeRoute {
    pub eps: Vec<f64>,
    pub re_values: Vec<f64>,
    /// Empty when the principal value does not exist.
    pub im_values: Vec<f64>,
    pub re: f64,
    pub re_error: f64,
    pub im: Option<f64>,
    pub im_error: Option<f64>,
    /// Band limit applied to `Re G` when `ρ̃ ε/u²` is not integrable.
    pub band_limit: Option<f64>,
}

/// `(Re, Im)` pieces of `ρ̃(u)·(ε, u)/(ε² + u²)` over a span of `u`.
struct Pieces {
    re: Integral,
    im: Integral,
}

impl Pieces {
    fn zero() -> Self {
        Self {
            re: Integral::ZERO,
            im: Integral::ZERO,
        }
    }

    fn add(&mut self, re: Integral, im: Integral) {
        self.re = self.re.combine(re);
        self.im = self.im.combine(im);
    }
}

fn lorentz(eps: f64, u: f64) -> (f64, f64) {
    let d = eps * eps + u * u;
    (eps / d, u / d)
}

fn regularized(density: &RadialDensity, eps: f64, band: Option<f64>, want_im: bool, tol: f64) -> Result<(f64, f64, f64)> {
    let a = density.left_endpoint();
    let b = density.right_endpoint();
    let gk = QuadOptions::abs(0.1 * tol).with_rel(1e-12).with_max_intervals(20_000);
    let mut out = Pieces::zero();

    let right_start;
    if density.straddles_zero() {
        let h = (-0.5 * a).min(1.0).min(b.unwrap_or(f64::INFINITY));
        let c = (4.0 * eps).min(0.5 * h);
        // Fold [−h, h] onto [0, h]: the even part feeds Re, the odd part Im.
        let fold_re = |u: f64, dist: f64| (density.eval(u) + density.eval_reflected(u, h, dist)) * lorentz(eps, u).0;
        let fold_im = |u: f64, dist: f64| (density.eval(u) - density.eval_reflected(u, h, dist)) * lorentz(eps, u).1;
        let near_breaks = [0.0, 0.25 * c.min(eps), c.min(eps), c];
        let near_re = gauss_kronrod_breaks(|u| fold_re(u, h - u), &near_breaks, &gk)?;
        let near_im = if want_im {
            gauss_kronrod_breaks(|u| fold_im(u, h - u), &near_breaks, &gk)?
        } else {
            Integral::ZERO
        };
        out.add(near_re, near_im);
        let far_re = tanh_sinh_with(|u, _, dist| fold_re(u, dist), c, h, 0.1 * tol)?;
        let far_im = if want_im {
            tanh_sinh_with(|u, _, dist| fold_im(u, dist), c, h, 0.1 * tol)?
        } else {
            Integral::ZERO
        };
        out.add(far_re, far_im);
        if -h > a {
            let left_re = density.integrate_from_endpoint(|u| lorentz(eps, u).0, -h, 0.1 * tol)?;
            let left_im = if want_im {
                density.integrate_from_endpoint(|u| lorentz(eps, u).1, -h, 0.1 * tol)?
            } else {
                Integral::ZERO
            };
            out.add(left_re, left_im);
        }
        right_start = h;
    } else {
        if b.is_some_and(|b| b <= 0.0) {
            return domain("time route needs a density reaching u > 0 or straddling the resonance");
        }
        let end = b.unwrap_or(f64::INFINITY).min(a + a.abs().max(1.0));
        let head_re = density.integrate_from_endpoint(|u| lorentz(eps, u).0, end, 0.1 * tol)?;
        let head_im = if want_im {
            density.integrate_from_endpoint(|u| lorentz(eps, u).1, end, 0.1 * tol)?
        } else {
            Integral::ZERO
        };
        out.add(head_re, head_im);
        right_start = end;
    }

    let finite_end = b.or(band);
    let big = finite_end.unwrap_or_else(|| (16.0 * a.abs().max(1.0)).max(2.0 * right_start));
    if big > right_start {
        let re = gauss_kronrod(|u| density.eval(u) * lorentz(eps, u).0, right_start, big, &gk)?;
        let im = if want_im {
            gauss_kronrod(|u| density.eval(u) * lorentz(eps, u).1, right_start, big, &gk)?
        } else {
            Integral::ZERO
        };
        out.add(re, im);
    }
    if finite_end.is_none() {
        let re = density.integrate_tail(|u| lorentz(eps, u).0, -2.0, big, 0.1 * tol)?;
        let im = if want_im {
            density.integrate_tail(|u| lorentz(eps, u).1, -1.0, big, 0.1 * tol)?
        } else {
            Integral::ZERO
        };
        out.add(re, im);
    } else if band.is_some() && want_im {
        return Err(Error::Diagnostic("a band-limited spectrum has no principal value to report".into()));
    }
    Ok((out.re.value, out.im.value, out.re.abs_error + out.im.abs_error))
}

/// Time route over a prepared spectral density.
///
/// `Re` is extrapolated from `∫ ρ̃ ε/(ε² + u²)`; `Im` from `∫ ρ̃ u/(ε² + u²)`
/// whenever the principal value exists. When `ρ̃ ε/u²` is not integrable the
/// real part uses the band `u ≤ 10⁴·max(1, |a|)`.
///
/// `eps` is in units of `min(|a|, 1)`, the distance from the resonance to the
/// endpoint; the returned route records the absolute values.
pub fn time_route_from_density(density: &RadialDensity, eps: &[f64], tol: f64) -> Result<TimeRoute> {
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return domain("ε sequence must hold at least two positive, strictly decreasing values");
    }
    let scale = match density.left_endpoint().abs().min(1.0) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let eps: Vec<f64> = eps.iter().map(|e| e * scale).collect();
    let eps = eps.as_slice();
    let endpoint = density.endpoint_behavior();
    if let Some(p) = endpoint.exponent {
        if p <= ENDPOINT_DIVERGENCE {
            return Err(Error::DivergentEndpoint { exponent: p });
        }
    }
    let tail = density.tail_behavior();
    let q = tail.exponent;
    let want_im = !q.is_some_and(|q| q > TAIL_DIVERGENCE);
    let band = if q.is_some_and(|q| q >= 1.0 - 1e-3) {
        Some(1e4 * density.left_endpoint().abs().max(1.0))
    } else {
        None
    };

    let mut re_values = Vec::with_capacity(eps.len());
    let mut im_values = Vec::with_capacity(eps.len());
    for &e in eps {
        let (re, im, _) = regularized(density, e, band, want_im, tol)?;
        re_values.push(re);
        if want_im {
            im_values.push(im);
        }
    }
    let (mut re, re_error) = extrapolate_to_zero(eps, &re_values);
    if density.left_endpoint() > 0.0 {
        // The resonant shell is empty: the limit vanishes identically.
        re = 0.0;
    }
    let (im, im_error) = if want_im {
        let (v, e) = extrapolate_to_zero(eps, &im_values);
        (Some(v), Some(e))
    } else {
        (None, None)
    };
    let table = || {
        eps.iter()
            .enumerate()
            .map(|(i, e)| format!("ε={e:e}: re={:e} im={}", re_values[i], im_values.get(i).map_or("-".into(), |v| format!("{v:e}"))))
            .collect::<Vec<_>>()
            .join("; ")
    };
    if !(re_error <= 1e-2 * (1.0 + re.abs())) || im.zip(im_error).is_some_and(|(v, e)| !(e <= 1e-2 * (1.0 + v.abs()))) {
        return Err(Error::Diagnostic(format!("ε-extrapolation did not settle: {}", table())));
    }
    Ok(TimeRoute {
        eps: eps.to_vec(),
        re_values,
        im_values,
        re,
        re_error,
        im,
        im_error,
        band_limit: band,
    })
}

fn susceptivity_from(route: TimeRoute, mut verdict: crate::pv::ConvergenceVerdict, omega: f64) -> Susceptivity {
    if route.im.is_none() && !verdict.principal_value.is_divergent() {
        verdict.principal_value = PvVerdict::DivergentTail;
    }
    let im = if verdict.principal_value.is_divergent() { None } else { route.im };
    Susceptivity {
        re: route.re,
        im,
        route: Route::TimeDomain,
        verdict,
        error_estimate: route.re_error.max(route.im_error.unwrap_or(0.0)),
        convention: SignConvention::Regularized,
        omega,
    }
}

/// Time route for the bare form factor `|g(k)|²` at frequency `ω`.
pub fn gamma_minus_time_domain(cutoff: &Cutoff, disp: Dispersion, omega: f64, eps: &[f64]) -> Result<Susceptivity> {
    let opts = GammaOptions::default().with_eps(eps);
    let spec = ClassifySpec {
        cutoff: cutoff.clone(),
        target: Target::Frequency(omega),
        dispersion: disp,
        constants: opts.constants,
    };
    let verdict = classify(&spec)?;
    let density = super::target_density(cutoff, &spec.target, disp, &opts.constants)?;
    let route = time_route_from_density(&density, &opts.eps_sequence, 1e-10)?;
    Ok(susceptivity_from(route, verdict, omega))
}

/// Time route for a hydrogen transition.
pub fn hydrogen_gamma_time_domain(
    t: impl Into<SignedTransition>,
    cutoff: &Cutoff,
    disp: Dispersion,
    opts: &GammaOptions,
) -> Result<Susceptivity> {
    let t = t.into();
    let spec = ClassifySpec {
        cutoff: cutoff.clone(),
        target: Target::Transition(t),
        dispersion: disp,
        constants: opts.constants,
    };
    let verdict = classify(&spec)?;
    let density = super::target_density(cutoff, &spec.target, disp, &opts.constants)?;
    let route = time_route_from_density(&density, &opts.eps_sequence, 1e-10)?;
    Ok(susceptivity_from(route, verdict, t.bohr_frequency(&opts.constants)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn narrow_line_weight() {
        let w = 2.5;
        let sigma = 0.01;
        let d = RadialDensity::from_fn(-1.0, move |u: f64| w * (-(u * u) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt()));
        let route = time_route_from_density(&d, &[0.004, 0.002, 0.001, 0.0005], 1e-11).unwrap();
        let expected = PI * d.eval(0.0);
        assert!((route.re - expected).abs() < 1e-3 * expected, "{} vs {expected}", route.re);
        assert!(route.im.unwrap().abs() < 1e-6);
    }

    #[test]
    fn power_law_real_part_with_band() {
        let g = gamma_minus_time_domain(&Cutoff::qed(), Dispersion::Linear, 1.0, &DEFAULT_EPS_SEQUENCE).unwrap();
        assert!((g.re / (4.0 * PI * PI) - 1.0).abs() < 1e-3, "{}", g.re);
        assert!(g.im.is_none());
    }

    #[test]
    fn kernel_basics() {
        let k = CorrelationKernel::exponential(1.0);
        assert_eq!(k.total_weight().unwrap(), 1.0);
        let d = RadialDensity::from_fn(-1.0, |u: f64| (-u * u).exp());
        let s = CorrelationKernel::from_spectral_density(d);
        assert!((s.total_weight().unwrap() - PI.sqrt() * (1.0 + 0.842_700_792_949_714_9) / 2.0).abs() < 1e-9);
        let c0 = s.eval(0.0).unwrap();
        assert!((c0.re - s.total_weight().unwrap()).abs() < 1e-8);
        assert!(s.eval(0.7).unwrap().norm() <= c0.re);
    }

    #[test]
    fn rejects_bad_sequences() {
        let d = RadialDensity::from_fn(-1.0, |u: f64| (-u * u).exp());
        assert!(time_route_from_density(&d, &[0.1], 1e-10).is_err());
        assert!(time_route_from_density(&d, &[0.1, 0.2], 1e-10).is_err());
    }
}
