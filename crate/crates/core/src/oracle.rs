//! Brute-force three-dimensional references: a stratified Monte-Carlo
//! estimate of the principal value over exclusion shells, and a spherical
//! product quadrature checking the radial reduction.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fit::weighted_linear_fit;
use crate::geometry::{radial_density, Dispersion, RadialFn};
use crate::quad::{gauss_kronrod, gauss_kronrod_breaks, tanh_sinh_tail, Integral, QuadOptions};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// Shell half-widths `{0.1, 0.05, 0.025, 0.0125}·h`, `h = min(ω, 1)/2`.
pub fn default_shell_eps(omega: f64) -> Vec<f64> {
    let h = 0.5 * omega.abs().min(1.0);
    [0.1, 0.05, 0.025, 0.0125].iter().map(|f| f * h).collect()
}

/// Monte-Carlo estimate at one shell half-width `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellEstimate {
    pub value: f64,
    pub stderr: f64,
    pub eps: f64,
    pub samples: usize,
    /// Largest single weighted term over the sum of absolute terms.
    pub max_term_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McShellResult {
    /// Extrapolation of the ε-rows to `ε = 0`.
    pub value: f64,
    pub stderr: f64,
    pub estimates: Vec<ShellEstimate>,
    /// Raised when single samples dominate or the ε-rows are inconsistent.
    pub divergence_flag: bool,
    pub chi2_per_dof: f64,
    pub truncation_radius: f64,
    pub seed: u64,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McOptions {
    pub seed: u64,
    /// Bound on the neglected tail beyond the truncation ball is `0.1·tail_tol`.
    pub tail_tol: f64,
    /// Symmetric strata of the near-resonance region.
    pub near_strata: usize,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            tail_tol: 1e-6,
            near_strata: 32,
        }
    }
}

impl McOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn random_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

fn norm(k: [f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

#[derive(Clone, Copy)]
enum Stratum {
    /// `ε < |u| ≤ h` band in `[lo, hi]`, sampled in `u` with antithetic `±u`.
    Near { lo: f64, hi: f64 },
    /// Shell `lo < |k| < hi` sampled uniformly in volume.
    Shell { lo: f64, hi: f64 },
}

struct StratumSum {
    mean: f64,
    var_of_mean: f64,
    samples: usize,
    max_abs: f64,
    abs_total: f64,
}

fn sample_stratum(
    stratum: Stratum,
    n: usize,
    mut rng: ChaCha8Rng,
    phi: &RadialFn,
    disp: Dispersion,
    omega: f64,
) -> StratumSum {
    let weight_of = |r: f64| phi.eval(r) / (disp.omega(r) - omega);
    let (terms, scale): (Vec<f64>, f64) = match stratum {
        Stratum::Near { lo, hi } => {
            let pairs = (n / 2).max(2);
            let terms = (0..pairs)
                .map(|_| {
                    let u = rng.gen_range(lo..hi);
                    let dir = random_direction(&mut rng);
                    [omega + u, omega - u]
                        .into_iter()
                        .map(|level| {
                            let r = disp.resonant_radius(level).unwrap_or(0.0);
                            let k = norm([r * dir[0], r * dir[1], r * dir[2]]);
                            // d³k = (r²/|∇ω|) du dΩ
                            4.0 * PI * r * r / disp.gradient_norm(r) * weight_of(k)
                        })
                        .sum()
                })
                .collect();
            (terms, hi - lo)
        }
        Stratum::Shell { lo, hi } => {
            let (c_lo, c_hi) = (lo.powi(3), hi.powi(3));
            let terms = (0..n.max(2))
                .map(|_| {
                    let r = (c_lo + rng.gen::<f64>() * (c_hi - c_lo)).cbrt();
                    let dir = random_direction(&mut rng);
                    weight_of(norm([r * dir[0], r * dir[1], r * dir[2]]))
                })
                .collect();
            (terms, 4.0 * PI / 3.0 * (c_hi - c_lo))
        }
    };
    let m = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / m;
    let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let contribution = |t: &f64| (scale * t / m).abs();
    StratumSum {
        mean: scale * mean,
        var_of_mean: scale * scale * var / m,
        samples: terms.len(),
        max_abs: terms.iter().map(contribution).fold(0.0, f64::max),
        abs_total: terms.iter().map(contribution).sum(),
    }
}

fn stream_id(eps_index: usize, region: u64, stratum: usize) -> u64 {
    ((eps_index as u64) << 40) | (region << 32) | stratum as u64
}

/// Truncation radius from the density's tail: grows until the neglected
/// `∫_R^∞ Φ(u)/u du` is bounded by `0.1·tail_tol`.
fn truncation_radius(phi: &RadialFn, disp: Dispersion, omega: f64, start: f64, tail_tol: f64) -> Result<f64> {
    let density = radial_density(phi, disp, omega)?;
    let q = density.tail_behavior().exponent.unwrap_or(-1.0);
    if q > -1e-3 {
        return Err(Error::DivergentTail { exponent: q });
    }
    // ∫_U^∞ Φ/u ≈ U·Φ(U)/(U·|q|) for Φ ~ u^q; faster decay is bounded by q = −1.
    let rate = q.abs().min(1.0).max(1e-3);
    let mut r = start.max(1.0);
    for _ in 0..200 {
        // max over [r, 4r]: a node of the matrix element must not end the search
        let peak = (0..=24)
            .map(|i| density.eval(disp.omega(r * 4f64.powf(i as f64 / 24.0)) - omega).abs())
            .fold(0.0, f64::max);
        let u = disp.omega(r) - omega;
        if u > 0.0 && peak / rate < 0.1 * tail_tol {
            return Ok(r);
        }
        r *= 1.25;
    }
    Err(Error::Diagnostic("could not bound the tail of the density within the search range".into()))
}

/// Monte-Carlo principal value `lim_{ε→0} ∫_{|ω(k)−ω|>ε} φ(|k|)/(ω(k) − ω) d³k`.
///
/// The near band `ε < |u| ≤ h/2`, `h = min(ω, 1)`, is sampled in `u` with
/// antithetic `±u` pairs; the rest of the ball in volume-uniform shells.
/// Each ε-row and stratum draws from its own ChaCha stream derived from the
/// seed, so results do not depend on scheduling. The rows are extrapolated by
/// a weighted fit `E(ε) = P + cε`.
pub fn mc_shell_pp(
    phi: &RadialFn,
    disp: Dispersion,
    omega: f64,
    eps_sequence: &[f64],
    samples_per_eps: usize,
    opts: &McOptions,
) -> Result<McShellResult> {
    if !(omega > 0.0) {
        return domain("the shell oracle needs a positive frequency");
    }
    if eps_sequence.len() < 2 || eps_sequence.windows(2).any(|w| w[1] >= w[0]) || eps_sequence.iter().any(|e| !(*e > 0.0)) {
        return domain("ε sequence must hold at least two positive, strictly decreasing values");
    }
    let h = 0.5 * omega.min(1.0);
    if eps_sequence[0] >= h {
        return domain(format!("shell half-widths must stay below {h}"));
    }
    if samples_per_eps < 64 {
        return domain("need at least 64 samples per ε");
    }
    let r_left = disp.resonant_radius(omega - h).expect("ω − h > 0");
    let r_right = disp.resonant_radius(omega + h).expect("ω + h > 0");
    let radius = truncation_radius(phi, disp, omega, 2.0 * r_right, opts.tail_tol)?;

    let mut left_bounds = vec![0.0];
    left_bounds.extend((0..=20).rev().map(|j| r_left * 0.5f64.powi(j)));
    let mut right_bounds = vec![r_right];
    while *right_bounds.last().unwrap() < radius {
        let next = (right_bounds.last().unwrap() * 2.0).min(radius);
        right_bounds.push(next);
    }

    let mut estimates = Vec::with_capacity(eps_sequence.len());
    let mut diagnostics = Vec::new();
    for (ei, &eps) in eps_sequence.iter().enumerate() {
        let mut strata: Vec<(u64, usize, Stratum, usize)> = Vec::new();
        let near_n = opts.near_strata.max(1);
        let per_near = (samples_per_eps / 2 / near_n).max(4);
        for j in 0..near_n {
            let lo = eps + (h - eps) * j as f64 / near_n as f64;
            let hi = eps + (h - eps) * (j + 1) as f64 / near_n as f64;
            strata.push((0, j, Stratum::Near { lo, hi }, per_near));
        }
        let per_left = (samples_per_eps / 4 / (left_bounds.len() - 1)).max(4);
        for (j, w) in left_bounds.windows(2).enumerate() {
            strata.push((1, j, Stratum::Shell { lo: w[0], hi: w[1] }, per_left));
        }
        let per_right = (samples_per_eps / 4 / (right_bounds.len() - 1).max(1)).max(4);
        for (j, w) in right_bounds.windows(2).enumerate() {
            strata.push((2, j, Stratum::Shell { lo: w[0], hi: w[1] }, per_right));
        }
        let sums: Vec<StratumSum> = strata
            .par_iter()
            .map(|&(region, j, stratum, n)| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(stream_id(ei, region, j));
                sample_stratum(stratum, n, rng, phi, disp, omega)
            })
            .collect();
        let value: f64 = sums.iter().map(|s| s.mean).sum();
        let variance: f64 = sums.iter().map(|s| s.var_of_mean).sum();
        let samples: usize = sums.iter().map(|s| s.samples).sum();
        let abs_total: f64 = sums.iter().map(|s| s.abs_total).sum();
        let max_abs = sums.iter().map(|s| s.max_abs).fold(0.0, f64::max);
        estimates.push(ShellEstimate {
            value,
            stderr: variance.sqrt(),
            eps,
            samples,
            max_term_fraction: if abs_total > 0.0 { max_abs / abs_total } else { 0.0 },
        });
    }

    let xs: Vec<f64> = estimates.iter().map(|e| e.eps).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let all_exact = estimates.iter().all(|e| e.stderr == 0.0);
    let weights: Vec<f64> = estimates
        .iter()
        .map(|e| if all_exact { 1.0 } else { 1.0 / e.stderr.max(f64::MIN_POSITIVE).powi(2) })
        .collect();
    let fit = weighted_linear_fit(&xs, &ys, &weights);
    let dof = (estimates.len() as f64 - 2.0).max(1.0);
    let chi2_per_dof = if all_exact { 0.0 } else { fit.chi2 / dof };
    let stderr = if all_exact { 0.0 } else { fit.intercept_stderr };

    let worst = estimates.iter().map(|e| e.max_term_fraction).fold(0.0, f64::max);
    let mut divergence_flag = false;
    if worst > 0.05 {
        divergence_flag = true;
        diagnostics.push(format!("a single sample carries {:.1}% of a row's absolute weight", 100.0 * worst));
    }
    if chi2_per_dof > 50.0 {
        divergence_flag = true;
        diagnostics.push(format!("ε-rows inconsistent with a linear law (χ²/dof = {chi2_per_dof:.1})"));
    }
    if estimates.iter().any(|e| !e.value.is_finite()) {
        divergence_flag = true;
        diagnostics.push("non-finite row estimate".into());
    }
    Ok(McShellResult {
        value: fit.intercept,
        stderr,
        estimates,
        divergence_flag,
        chi2_per_dof,
        truncation_radius: radius,
        seed: opts.seed,
        diagnostics,
    })
}

/// Outcome of [`radial_reduction_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    /// `∫_{R³} φ(|k|) ψ(ω(k) − ω) d³k` by spherical product quadrature.
    pub three_d: f64,
    /// `∫_a^∞ Φ(u) ψ(u) du` from the radial density.
    pub radial: f64,
    pub rel_difference: f64,
    pub pass: bool,
}

/// Compares the 3-D integral against the radial-density integral.
pub fn radial_reduction_check<P>(phi: &RadialFn, psi: P, disp: Dispersion, omega: f64, tol: f64) -> Result<ReductionReport>
where
    P: Fn(f64) -> f64 + Sync,
{
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let inconclusive = |e: Error| match e {
        Error::Quadrature { .. } => Error::Inconclusive(format!("quadrature budget exhausted: {e}")),
        other => other,
    };
    let inner_tol = 1e-3 * tol;

    // Spherical coordinates: the angular integrals are done explicitly.
    let angular = QuadOptions::abs(0.0).with_rel(1e-12).with_max_intervals(64);
    // Rounding in |k| can keep steep ψ from meeting the 1e-12 target.
    let settle = |r: Result<Integral>| match r {
        Ok(v) => v.value,
        Err(Error::Quadrature { value, abs_error, .. }) if abs_error <= 1e-8 * value.abs() => value,
        Err(_) => f64::NAN,
    };
    let integrand_r = |r: f64| -> f64 {
        let shell = |theta: f64| {
            let ring = gauss_kronrod(
                |az: f64| {
                    let k = [r * theta.sin() * az.cos(), r * theta.sin() * az.sin(), r * theta.cos()];
                    let kr = norm(k);
                    phi.eval(kr) * psi(disp.omega(kr) - omega)
                },
                0.0,
                2.0 * PI,
                &angular,
            );
            settle(ring) * theta.sin()
        };
        let sphere = settle(gauss_kronrod(shell, 0.0, PI, &angular));
        r * r * sphere
    };
    let resonance = disp.resonant_radius(omega).unwrap_or(0.0);
    let scale = resonance.max(1.0);
    let mut breaks = vec![0.0];
    if resonance > 0.0 {
        breaks.push(0.5 * resonance);
        breaks.push(resonance);
    }
    breaks.extend([2.0 * scale, 4.0 * scale, 8.0 * scale]);
    breaks.retain(|x| *x >= 0.0);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let r_opts = QuadOptions::abs(inner_tol).with_rel(1e-10).with_max_intervals(4000);
    let body = gauss_kronrod_breaks(integrand_r, &breaks, &r_opts).map_err(inconclusive)?;
    let tail = tanh_sinh_tail(integrand_r, *breaks.last().unwrap(), inner_tol).map_err(inconclusive)?;
    let three_d = body.value + tail.value;

    let density = radial_density(phi, disp, omega)?;
    let a = density.left_endpoint();
    let head_end = a + a.abs().max(1.0);
    let head = density.integrate_from_endpoint(|u| psi(u), head_end, inner_tol).map_err(inconclusive)?;
    let far = 64.0 * a.abs().max(1.0);
    let mid = gauss_kronrod(|u| density.eval(u) * psi(u), head_end, far, &r_opts).map_err(inconclusive)?;
    let rest = tanh_sinh_tail(|u| density.eval(u) * psi(u), far, inner_tol).map_err(inconclusive)?;
    let radial = head.value + mid.value + rest.value;

    let denom = three_d.abs().max(radial.abs());
    let rel_difference = if denom == 0.0 { 0.0 } else { (three_d - radial).abs() / denom };
    Ok(ReductionReport {
        three_d,
        radial,
        rel_difference,
        pass: rel_difference <= tol,
    })
}
