//! Scaling-limit demonstrations: rescaled-time δ-convergence, the second
//! order term, and the independence of distinct-frequency master fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::CorrelationKernel;
use crate::error::{domain, Result};
use crate::fit::linear_fit;
use crate::quad::{gauss_kronrod, gauss_kronrod_breaks, gauss_kronrod_real_line, gauss_kronrod_semi_infinite, QuadOptions};

/// One λ of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub lambda: f64,
    pub value: Complex64,
    pub error: f64,
    /// Set when the row's quadrature failed; `note` carries the reason.
    pub flagged: bool,
    pub note: String,
}

/// Values against a λ → 0 limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub limit: Complex64,
    pub rows: Vec<TableRow>,
}

impl ConvergenceTable {
    fn build(limit: Complex64, lambdas: &[f64], eval: impl Fn(f64) -> Result<Complex64> + Sync) -> Self {
        let rows = lambdas
            .par_iter()
            .map(|&lambda| match eval(lambda) {
                Ok(value) => TableRow {
                    lambda,
                    value,
                    error: (value - limit).norm(),
                    flagged: false,
                    note: String::new(),
                },
                Err(e) => TableRow {
                    lambda,
                    value: Complex64::new(f64::NAN, f64::NAN),
                    error: f64::NAN,
                    flagged: true,
                    note: e.to_string(),
                },
            })
            .collect();
        Self { limit, rows }
    }

    /// Errors non-increasing over the last `n` rows.
    pub fn monotone_tail(&self, n: usize) -> bool {
        let start = self.rows.len().saturating_sub(n);
        self.rows[start..].windows(2).all(|w| w[1].error <= w[0].error)
    }

    /// Slope of `log error` against `log λ` over the unflagged, nonzero rows.
    pub fn observed_order(&self) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter(|r| !r.flagged && r.error > 0.0)
            .map(|r| (r.lambda.ln(), r.error.ln()))
            .unzip();
        (xs.len() >= 2).then(|| linear_fit(&xs, &ys).slope)
    }

    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return domain("λ sequence must be positive and strictly decreasing");
    }
    Ok(())
}

/// `∫ (1/λ²) F((τ − t)/λ²) ψ(τ) dτ = ∫ F(σ) ψ(t + λ²σ) dσ` against `ψ(t)·∫F`.
pub fn scaling_limit_demo<F, P>(f: F, psi: P, t: f64, lambdas: &[f64]) -> Result<ConvergenceTable>
where
    F: Fn(f64) -> f64 + Sync,
    P: Fn(f64) -> f64 + Sync,
{
    check_lambdas(lambdas)?;
    let opts = QuadOptions::abs(1e-13).with_rel(1e-13).with_max_intervals(8000);
    let mass = gauss_kronrod_real_line(&f, &opts)?.value;
    let limit = Complex64::new(psi(t) * mass, 0.0);
    Ok(ConvergenceTable::build(limit, lambdas, |lambda| {
        let l2 = lambda * lambda;
        let v = gauss_kronrod_real_line(|sigma| f(sigma) * psi(t + l2 * sigma), &opts)?;
        Ok(Complex64::new(v.value, 0.0))
    }))
}

/// `∫_{−∞}^0 C(s) ds` for an integrable kernel.
fn past_integral(c: &CorrelationKernel) -> Result<Complex64> {
    let opts = QuadOptions::abs(1e-12).with_rel(1e-12).with_max_intervals(8000);
    let absolute = gauss_kronrod_semi_infinite(|s| c.eval(-s).map_or(f64::NAN, |v| v.norm()), 0.0, &opts)
        .map_err(|e| crate::error::Error::Domain(format!("kernel is not absolutely integrable: {e}")))?;
    if !absolute.value.is_finite() {
        return domain("kernel is not absolutely integrable");
    }
    let re = gauss_kronrod_semi_infinite(|s| c.eval(-s).map_or(f64::NAN, |v| v.re), 0.0, &opts)?;
    let im = gauss_kronrod_semi_infinite(|s| c.eval(-s).map_or(f64::NAN, |v| v.im), 0.0, &opts)?;
    Ok(Complex64::new(re.value, im.value))
}

/// `−λ² ∫_0^t dt₁ ∫_0^{t₁} dt₂ C(t₂ − t₁) = −λ² ∫_0^t (t − s) C(−s) ds`
/// at `t = τ/λ²`, against `−τ ∫_{−∞}^0 C(s) ds`.
pub fn second_order_limit(c: &CorrelationKernel, tau: f64, lambdas: &[f64]) -> Result<ConvergenceTable> {
    check_lambdas(lambdas)?;
    if !(tau >= 0.0) {
        return domain(format!("τ must be >= 0, got {tau}"));
    }
    let limit = -tau * past_integral(c)?;
    let opts = QuadOptions::abs(1e-12).with_rel(1e-12).with_max_intervals(8000);
    Ok(ConvergenceTable::build(limit, lambdas, |lambda| {
        let t = tau / (lambda * lambda);
        if t == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let pieces = (t.ceil() as usize).clamp(1, 2000);
        let breaks: Vec<f64> = (0..=pieces).map(|i| t * i as f64 / pieces as f64).collect();
        let re = gauss_kronrod_breaks(|s| (t - s) * c.eval(-s).map_or(f64::NAN, |v| v.re), &breaks, &opts)?;
        let im = gauss_kronrod_breaks(|s| (t - s) * c.eval(-s).map_or(f64::NAN, |v| v.im), &breaks, &opts)?;
        Ok(-lambda * lambda * Complex64::new(re.value, im.value))
    }))
}

/// Unit-mass Gaussian window of width 1 centred at 0.
pub fn unit_gaussian_window(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

/// Smeared rescaled cross-covariance of the fields at `ω` and `ω'`:
/// `∫ ds C(s) e^{−iωs} ∫ dt' f(t' + λ²s) g(t') e^{−i(ω−ω')t'/λ²}` with unit
/// Gaussian windows `f = g`. The limit is `∫f·g · ∫e^{−isω}C(s) ds` for
/// `ω = ω'` and `0` otherwise.
pub fn cross_covariance_decay(omega: f64, omega_prime: f64, c: &CorrelationKernel, lambdas: &[f64]) -> Result<ConvergenceTable> {
    check_lambdas(lambdas)?;
    let window = unit_gaussian_window;
    let opts = QuadOptions::abs(1e-12).with_rel(1e-10).with_max_intervals(20_000);
    let s_max = 60.0;
    let s_breaks: Vec<f64> = (-60..=60).map(|i| i as f64 * s_max / 60.0).collect();
    let limit = if omega == omega_prime {
        let overlap = gauss_kronrod(|t| window(t) * window(t), -12.0, 12.0, &opts)?.value;
        let re = gauss_kronrod_breaks(|s| c.eval(s).map_or(f64::NAN, |v| (v * Complex64::from_polar(1.0, -omega * s)).re), &s_breaks, &opts)?;
        let im = gauss_kronrod_breaks(|s| c.eval(s).map_or(f64::NAN, |v| (v * Complex64::from_polar(1.0, -omega * s)).im), &s_breaks, &opts)?;
        overlap * Complex64::new(re.value, im.value)
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(ConvergenceTable::build(limit, lambdas, |lambda| {
        let l2 = lambda * lambda;
        let kappa = (omega - omega_prime) / l2;
        let inner = |s: f64| -> Result<Complex64> {
            let shift = l2 * s;
            let centre = -0.5 * shift;
            let span = (kappa.abs() * 24.0 / (2.0 * PI)).ceil().clamp(1.0, 4000.0) as usize;
            let breaks: Vec<f64> = (0..=span).map(|i| centre - 12.0 + 24.0 * i as f64 / span as f64).collect();
            let inner_opts = QuadOptions::abs(1e-14).with_max_intervals(20_000);
            let re = gauss_kronrod_breaks(|tp| window(tp + shift) * window(tp) * (kappa * tp).cos(), &breaks, &inner_opts)?;
            let im = gauss_kronrod_breaks(|tp| -window(tp + shift) * window(tp) * (kappa * tp).sin(), &breaks, &inner_opts)?;
            Ok(Complex64::new(re.value, im.value))
        };
        let integrand = |s: f64, part: fn(Complex64) -> f64| -> f64 {
            match (c.eval(s), inner(s)) {
                (Ok(cv), Ok(iv)) => part(cv * Complex64::from_polar(1.0, -omega * s) * iv),
                _ => f64::NAN,
            }
        };
        let re = gauss_kronrod_breaks(|s| integrand(s, |z| z.re), &s_breaks, &opts)?;
        let im = gauss_kronrod_breaks(|s| integrand(s, |z| z.im), &s_breaks, &opts)?;
        Ok(Complex64::new(re.value, im.value))
    }))
}
