//! Hydrogen bound states and the dipole-type matrix elements
//! `g_mn(k) = ⟨ψ_m00, g(|k|) e^{ik·q} ψ_n00⟩` for s-states.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{gauss_kronrod, gauss_kronrod_breaks, QuadOptions};

/// Physical constants of the atom. The default is atomic units
/// (`a0 = e = m = ħ = 1`, `Z = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomicConstants {
    /// Bohr radius.
    pub a0: f64,
    /// Electron charge.
    pub charge: f64,
    /// Electron mass.
    pub mass: f64,
    pub hbar: f64,
    /// Nuclear charge.
    pub z: u32,
}

impl Default for AtomicConstants {
    fn default() -> Self {
        Self::atomic()
    }
}

impl AtomicConstants {
    pub const fn atomic() -> Self {
        Self {
            a0: 1.0,
            charge: 1.0,
            mass: 1.0,
            hbar: 1.0,
            z: 1,
        }
    }

    /// Constants with `a0 = ħ²/(m e²)` (Gaussian units).
    pub fn from_fundamental(hbar: f64, mass: f64, charge: f64) -> Result<Self> {
        if !(hbar > 0.0 && mass > 0.0 && charge > 0.0) {
            return domain("hbar, mass and charge must be positive");
        }
        Self {
            a0: hbar * hbar / (mass * charge * charge),
            charge,
            mass,
            hbar,
            z: 1,
        }
        .validated()
    }

    pub fn with_z(mut self, z: u32) -> Result<Self> {
        self.z = z;
        self.validated()
    }

    pub fn with_a0(mut self, a0: f64) -> Result<Self> {
        self.a0 = a0;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return domain(format!("Bohr radius must be positive, got {}", self.a0));
        }
        if self.z < 1 {
            return domain("nuclear charge Z must be at least 1");
        }
        Ok(self)
    }

    pub fn is_atomic_units(&self) -> bool {
        *self == Self::atomic()
    }
}

/// Quantum numbers `(n, l, m)` of a bound state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumNumbers {
    n: u32,
    l: u32,
    m: i32,
}

impl QuantumNumbers {
    pub fn new(n: u32, l: u32, m: i32) -> Result<Self> {
        if n < 1 {
            return domain("principal quantum number must be >= 1");
        }
        if l >= n {
            return domain(format!("orbital number l = {l} must be below n = {n}"));
        }
        if m.unsigned_abs() > l {
            return domain(format!("magnetic number |m| = {} exceeds l = {l}", m.unsigned_abs()));
        }
        Ok(Self { n, l, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    /// Matrix elements are only defined between s-states.
    pub fn require_s_state(&self) -> Result<()> {
        if self.l != 0 {
            return domain(format!("matrix elements need l = 0 states, got l = {}", self.l));
        }
        Ok(())
    }
}

/// An ordered pair of s-state principal numbers, not necessarily distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelPair {
    pub m: u32,
    pub n: u32,
}

impl LevelPair {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m < 1 || n < 1 {
            return domain("principal quantum numbers must be >= 1");
        }
        Ok(Self { m, n })
    }
}

/// Upward transition `m -> n` with `m > n`, i.e. a positive Bohr frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    upper: u32,
    lower: u32,
}

impl Transition {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if n < 1 {
            return domain("principal quantum numbers must be >= 1");
        }
        if m <= n {
            return domain(format!("transition needs m > n, got m = {m}, n = {n}"));
        }
        Ok(Self { upper: m, lower: n })
    }

    pub fn upper(&self) -> u32 {
        self.upper
    }

    pub fn lower(&self) -> u32 {
        self.lower
    }

    pub fn pair(&self) -> LevelPair {
        LevelPair {
            m: self.upper,
            n: self.lower,
        }
    }

    /// The same level pair read with the negative Bohr frequency.
    pub fn reversed(self) -> SignedTransition {
        SignedTransition {
            transition: self,
            reversed: true,
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.upper, self.lower)
    }
}

/// A transition together with the sign of its Bohr frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTransition {
    pub transition: Transition,
    pub reversed: bool,
}

impl From<Transition> for SignedTransition {
    fn from(transition: Transition) -> Self {
        Self {
            transition,
            reversed: false,
        }
    }
}

impl SignedTransition {
    /// `(m, n)` as written: `(upper, lower)` or `(lower, upper)` when reversed.
    pub fn levels(&self) -> (u32, u32) {
        let t = self.transition;
        if self.reversed {
            (t.lower, t.upper)
        } else {
            (t.upper, t.lower)
        }
    }

    pub fn bohr_frequency(&self, constants: &AtomicConstants) -> f64 {
        let (m, n) = self.levels();
        level_gap(m, n, constants).expect("levels of a Transition are valid")
    }
}

/// Energy `E_n = −Z e²/(2 a0 n²)` of the `n`-th level.
pub fn bound_energy(n: u32, constants: &AtomicConstants) -> Result<f64> {
    if n == 0 {
        return domain("principal quantum number must be >= 1");
    }
    let n = n as f64;
    Ok(-(constants.z as f64) * constants.charge * constants.charge / (2.0 * constants.a0 * n * n))
}

/// `E_m − E_n` for any two levels; antisymmetric in its arguments.
pub fn level_gap(m: u32, n: u32, constants: &AtomicConstants) -> Result<f64> {
    Ok(bound_energy(m, constants)? - bound_energy(n, constants)?)
}

/// Positive Bohr frequency `ω_mn = E_m − E_n` of a transition.
pub fn bohr_frequency(t: &Transition, constants: &AtomicConstants) -> f64 {
    level_gap(t.upper, t.lower, constants).expect("levels of a Transition are valid")
}

/// `ω_mn` from raw level numbers; `m ≤ n` is rejected.
pub fn bohr_frequency_of(m: u32, n: u32, constants: &AtomicConstants) -> Result<f64> {
    let t = Transition::new(m, n)?;
    Ok(bohr_frequency(&t, constants))
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn binomial_u128(n: u32, k: u32) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Coefficients of the associated Laguerre polynomial `L_{n+l}^{2l+1}(x)`
/// in powers of `x`, with the sign convention `(−1)^{s+2l+1}`.
pub fn laguerre_coefficients(n: u32, l: u32) -> Result<Vec<f64>> {
    if n < l + 1 {
        return domain(format!("associated Laguerre polynomial needs n >= l + 1, got n = {n}, l = {l}"));
    }
    let top = factorial(n + l);
    let degree = n - l - 1;
    Ok((0..=degree)
        .map(|s| {
            let sign = if (s + 2 * l + 1) % 2 == 0 { 1.0 } else { -1.0 };
            sign * top * top / (factorial(degree - s) * factorial(2 * l + 1 + s) * factorial(s))
        })
        .collect())
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `L_{n+l}^{2l+1}(x)`, a polynomial of degree `n − l − 1`.
pub fn assoc_laguerre(n: u32, l: u32, x: f64) -> Result<f64> {
    Ok(horner(&laguerre_coefficients(n, l)?, x))
}

/// Radial variable convention for the s-state wavefunctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialConvention {
    /// `ρ = 2r/(n a0)` in the exponential and the Laguerre factor, then
    /// renormalized so that `∫ R² r² dr = 1`.
    #[default]
    Scaled,
    /// The literal printed form `e^{−r/2} L(r)` with the printed prefactor.
    /// Neither normalized nor orthogonal; the closed-form matrix element
    /// coincides with this convention.
    Printed,
}

/// An s-state radial function `R_n0(r) = P(r) e^{−βr}` in expanded form.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialWavefunction {
    n: u32,
    convention: RadialConvention,
    /// Polynomial coefficients in `r`, prefactor included.
    poly: Vec<f64>,
    decay: f64,
}

impl RadialWavefunction {
    pub fn new(n: u32, convention: RadialConvention, constants: &AtomicConstants) -> Result<Self> {
        if n < 1 {
            return domain("principal quantum number must be >= 1");
        }
        let lag = laguerre_coefficients(n, 0)?;
        let a0 = constants.a0;
        let printed_prefactor = {
            let scale = 2.0 / (n as f64 * a0);
            -(scale.powi(3) * factorial(n - 1) / (2.0 * n as f64 * factorial(n).powi(3))).sqrt()
        };
        match convention {
            RadialConvention::Printed => Ok(Self {
                n,
                convention,
                poly: lag.iter().map(|c| printed_prefactor * c).collect(),
                decay: 0.5,
            }),
            RadialConvention::Scaled => {
                let scale = 2.0 / (n as f64 * a0);
                let mut poly: Vec<f64> = lag
                    .iter()
                    .enumerate()
                    .map(|(s, c)| c * scale.powi(s as i32))
                    .collect();
                let decay = 1.0 / (n as f64 * a0);
                let norm_sq = gamma_moment_overlap(&poly, decay, &poly, decay);
                let factor = -1.0 / norm_sq.sqrt();
                poly.iter_mut().for_each(|c| *c *= factor);
                Ok(Self {
                    n,
                    convention,
                    poly,
                    decay,
                })
            }
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn convention(&self) -> RadialConvention {
        self.convention
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn eval(&self, r: f64) -> f64 {
        horner(&self.poly, r) * (-self.decay * r).exp()
    }

    /// Upper bound of `|P(r)|` built from the absolute coefficients.
    fn poly_abs_bound(&self, r: f64) -> f64 {
        self.poly.iter().rev().fold(0.0, |acc, c| acc * r + c.abs())
    }
}

/// `∫_0^∞ P(r) Q(r) r² e^{−(α+β) r} dr` from the Gamma moments.
fn gamma_moment_overlap(p: &[f64], alpha: f64, q: &[f64], beta: f64) -> f64 {
    let rate = alpha + beta;
    let mut total = 0.0;
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            let k = (i + j + 2) as u32;
            total += a * b * factorial(k) / rate.powi(k as i32 + 1);
        }
    }
    total
}

/// `R_n0(r)` in the scaled, normalized convention.
pub fn radial_wavefunction(n: u32, r: f64, constants: &AtomicConstants) -> Result<f64> {
    if r < 0.0 {
        return domain(format!("radial coordinate must be >= 0, got {r}"));
    }
    Ok(RadialWavefunction::new(n, RadialConvention::Scaled, constants)?.eval(r))
}

/// Associated Legendre function `P_l^m(ξ)` from the Rodrigues formula,
/// without the Condon-Shortley phase.
pub fn assoc_legendre(l: u32, m: i32, xi: f64) -> Result<f64> {
    if m.unsigned_abs() > l {
        return domain(format!("|m| = {} exceeds l = {l}", m.unsigned_abs()));
    }
    if m < 0 {
        let mp = m.unsigned_abs();
        let sign = if mp % 2 == 0 { 1.0 } else { -1.0 };
        return Ok(sign * factorial(l - mp) / factorial(l + mp) * assoc_legendre(l, mp as i32, xi)?);
    }
    let m = m as u32;
    let order = l + m;
    // d^{l+m}/dξ^{l+m} (ξ² − 1)^l, expanded term by term.
    let mut derivative = 0.0;
    for k in 0..=l {
        let power = 2 * k;
        if power < order {
            continue;
        }
        let sign = if (l - k) % 2 == 0 { 1.0 } else { -1.0 };
        let binom = factorial(l) / (factorial(k) * factorial(l - k));
        let falling = factorial(power) / factorial(power - order);
        derivative += sign * binom * falling * xi.powi((power - order) as i32);
    }
    let envelope = (1.0 - xi * xi).max(0.0).powf(m as f64 / 2.0);
    Ok(envelope * derivative / (2f64.powi(l as i32) * factorial(l)))
}

/// Spherical harmonic `Y_lm(θ, φ)`.
pub fn spherical_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> Result<Complex64> {
    if m.unsigned_abs() > l {
        return domain(format!("|m| = {} exceeds l = {l}", m.unsigned_abs()));
    }
    if !(0.0..=PI).contains(&theta) {
        return domain(format!("polar angle must lie in [0, π], got {theta}"));
    }
    let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let lm = (l as i64 - m as i64) as u32;
    let lp = (l as i64 + m as i64) as u32;
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(lm) / factorial(lp)).sqrt();
    let radial = sign * norm * assoc_legendre(l, m, theta.cos())?;
    Ok(Complex64::from_polar(radial, m as f64 * phi))
}

/// `C_s^{mn}` of the closed-form matrix element, from exact integer binomials.
pub fn coefficient_c(s: u32, pair: LevelPair, constants: &AtomicConstants) -> Result<f64> {
    let (m, n) = (pair.m, pair.n);
    let sum = coefficient_sum(s, pair)?;
    let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
    let mn = (m as f64 * n as f64).powf(1.5);
    Ok(sign * 4.0 * sum as f64 / (s as f64 * constants.a0.powi(3) * mn))
}

/// Integer part of `C_s`: `Σ_α C(n−1, α) C(m−1, s−2−α) C(s, α+1)`.
fn coefficient_sum(s: u32, pair: LevelPair) -> Result<u128> {
    let (m, n) = (pair.m, pair.n);
    if s < 2 || s > m + n {
        return domain(format!("s = {s} outside [2, {}]", m + n));
    }
    let overflow = || Error::Domain(format!("C_s coefficient overflows for (m, n) = ({m}, {n})"));
    let lo = s.saturating_sub(m + 1);
    let hi = (n - 1).min(s - 2);
    let mut sum: u128 = 0;
    if lo <= hi {
        for alpha in lo..=hi {
            let term = binomial_u128(n - 1, alpha)
                .and_then(|a| a.checked_mul(binomial_u128(m - 1, s - 2 - alpha)?))
                .and_then(|a| a.checked_mul(binomial_u128(s, alpha + 1)?))
                .ok_or_else(overflow)?;
            sum = sum.checked_add(term).ok_or_else(overflow)?;
        }
    }
    Ok(sum)
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Numerators `N_p` of `Σ_s C_s Im((1 + ik)^{−s})/k = Σ_p B_p k^{2p}`, with
/// `B_p = 4 N_p / (L a₀³ (mn)^{3/2})` and `L = lcm(2, …, m+n)`. `None` on
/// overflow.
fn bracket_series_numerators(pair: LevelPair, terms: u32) -> Option<(Vec<i128>, u128)> {
    let top = pair.m + pair.n;
    let mut lcm: u128 = 1;
    for s in 2..=top as u128 {
        lcm = (lcm / gcd(lcm, s)).checked_mul(s)?;
    }
    let mut out = Vec::with_capacity(terms as usize);
    for p in 0..terms {
        let mut acc: i128 = 0;
        for s in 2..=top {
            let q = i128::try_from(coefficient_sum(s, pair).ok()?.checked_mul(lcm / s as u128)?).ok()?;
            let b = i128::try_from(binomial_u128(s + 2 * p, 2 * p + 1)?).ok()?;
            // (1 + ik)^{−s} has k^{2p+1} coefficient −(−1)^p C(s+2p, 2p+1) i
            let sign = if (s + p) % 2 == 0 { -1 } else { 1 };
            acc = acc.checked_add(q.checked_mul(b)?.checked_mul(sign)?)?;
        }
        out.push(acc);
    }
    Some((out, lcm))
}

/// Form factor `g(|k|)` of the response terms `D(k) = g(|k|) e^{ik·q}`.
#[derive(Clone)]
pub enum Cutoff {
    /// `g(k) = |k|^{−ν}`; `ν = 1/2` is the QED form factor.
    PowerLaw { nu: f64 },
    Radial(RadialCutoff),
}

/// A user radial form factor with optional decay metadata.
///
/// Hints are exponents `p` in `g(k) ≈ k^p`: `endpoint_exponent_hint` as
/// `k → 0`, `tail_exponent_hint` as `k → ∞` (`−∞` for faster than any power).
#[derive(Clone)]
pub struct RadialCutoff {
    pub name: String,
    pub g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub tail_exponent_hint: Option<f64>,
    pub endpoint_exponent_hint: Option<f64>,
}

impl fmt::Debug for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::PowerLaw { nu } => f.debug_struct("PowerLaw").field("nu", nu).finish(),
            Cutoff::Radial(r) => f
                .debug_struct("Radial")
                .field("name", &r.name)
                .field("tail_exponent_hint", &r.tail_exponent_hint)
                .field("endpoint_exponent_hint", &r.endpoint_exponent_hint)
                .finish(),
        }
    }
}

/// Named radial form factors shipped with the crate.
pub const RADIAL_PRESETS: [&str; 3] = ["gaussian", "exponential", "lorentzian"];

impl Cutoff {
    pub fn power_law(nu: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return domain(format!("power-law exponent must be finite and >= 0, got {nu}"));
        }
        Ok(Cutoff::PowerLaw { nu })
    }

    /// The electromagnetic form factor `|k|^{−1/2}`.
    pub fn qed() -> Self {
        Cutoff::PowerLaw { nu: 0.5 }
    }

    pub fn radial<F>(name: impl Into<String>, g: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Cutoff::Radial(RadialCutoff {
            name: name.into(),
            g: Arc::new(g),
            tail_exponent_hint: None,
            endpoint_exponent_hint: None,
        })
    }

    pub fn with_hints(self, endpoint: Option<f64>, tail: Option<f64>) -> Self {
        match self {
            Cutoff::Radial(mut r) => {
                r.endpoint_exponent_hint = endpoint;
                r.tail_exponent_hint = tail;
                Cutoff::Radial(r)
            }
            other => other,
        }
    }

    /// Presets: `gaussian` `e^{−k²/2}`, `exponential` `e^{−k}`,
    /// `lorentzian` `1/(1 + k²)`.
    pub fn preset(name: &str) -> Result<Self> {
        let cutoff = match name {
            "gaussian" => Cutoff::radial("gaussian", |k| (-0.5 * k * k).exp()).with_hints(Some(0.0), Some(f64::NEG_INFINITY)),
            "exponential" => Cutoff::radial("exponential", |k| (-k).exp()).with_hints(Some(0.0), Some(f64::NEG_INFINITY)),
            "lorentzian" => Cutoff::radial("lorentzian", |k| 1.0 / (1.0 + k * k)).with_hints(Some(0.0), Some(-2.0)),
            other => {
                return domain(format!(
                    "unknown radial cutoff preset '{other}' (expected one of {})",
                    RADIAL_PRESETS.join(", ")
                ))
            }
        };
        Ok(cutoff)
    }

    pub fn eval(&self, k: f64) -> f64 {
        match self {
            Cutoff::PowerLaw { nu } => {
                if *nu == 0.0 {
                    1.0
                } else {
                    k.powf(-nu)
                }
            }
            Cutoff::Radial(r) => (r.g)(k),
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match self {
            Cutoff::PowerLaw { nu } => Some(*nu),
            Cutoff::Radial(_) => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Cutoff::PowerLaw { nu } => format!("power-law(nu={nu})"),
            Cutoff::Radial(r) => format!("radial({})", r.name),
        }
    }

    /// Exponent of `g` as `k → 0`, when known.
    pub fn endpoint_exponent(&self) -> Option<f64> {
        match self {
            Cutoff::PowerLaw { nu } => Some(-nu),
            Cutoff::Radial(r) => r.endpoint_exponent_hint,
        }
    }

    /// Exponent of `g` as `k → ∞`, when known.
    pub fn tail_exponent(&self) -> Option<f64> {
        match self {
            Cutoff::PowerLaw { nu } => Some(-nu),
            Cutoff::Radial(r) => r.tail_exponent_hint,
        }
    }
}

/// The closed-form matrix element with its coefficients `C_s^{mn}` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormElement {
    pair: LevelPair,
    coefficients: Vec<(i32, f64)>,
    /// `B_p` of the small-`k` expansion of `Im Σ/2k`, when representable.
    series: Option<Vec<f64>>,
    origin_order: u32,
}

const SERIES_TERMS: u32 = 12;
/// Below this `|k|` the bracket is summed from its exact Taylor coefficients.
const SERIES_RADIUS: f64 = 0.02;

impl ClosedFormElement {
    pub fn new(pair: LevelPair, constants: &AtomicConstants) -> Result<Self> {
        let coefficients = (2..=pair.m + pair.n)
            .map(|s| Ok((s as i32, coefficient_c(s, pair, constants)?)))
            .collect::<Result<Vec<_>>>()?;
        let scale = 4.0 / (constants.a0.powi(3) * (pair.m as f64 * pair.n as f64).powf(1.5));
        let exact = bracket_series_numerators(pair, SERIES_TERMS);
        let origin_order = exact.as_ref().and_then(|(num, _)| num.iter().position(|v| *v != 0)).unwrap_or(0) as u32;
        let series = exact.map(|(num, lcm)| num.iter().map(|&v| scale * v as f64 / lcm as f64).collect());
        Ok(Self {
            pair,
            coefficients,
            series,
            origin_order,
        })
    }

    pub fn pair(&self) -> LevelPair {
        self.pair
    }

    pub fn coefficients(&self) -> &[(i32, f64)] {
        &self.coefficients
    }

    /// `p₀` with `Σ/k ~ k^{2p₀}` as `k → 0`; zero unless `Σ_s s C_s` cancels exactly.
    pub fn origin_order(&self) -> u32 {
        self.origin_order
    }

    /// `Σ_s C_s [(1 + ik)^{−s} − (1 − ik)^{−s}]`.
    pub fn bracket_sum(&self, k: f64) -> Complex64 {
        Complex64::new(0.0, 2.0 * k * self.im_over_k(k))
    }

    /// `|Σ|²`, the squared bracket entering the radial density.
    pub fn bracket_norm_sqr(&self, k: f64) -> f64 {
        let v = 2.0 * k * self.im_over_k(k);
        v * v
    }

    /// `Σ_s s C_s`, the small-`k` slope: `g(k)·k^ν → Σ_s s C_s` as `k → 0`.
    pub fn small_k_coefficient(&self) -> f64 {
        match &self.series {
            Some(b) => -b[0],
            None => self.coefficients.iter().map(|&(s, c)| s as f64 * c).sum(),
        }
    }

    /// `Σ_s C_s Im((1 + ik)^{−s}) / k`.
    fn im_over_k(&self, k: f64) -> f64 {
        if let Some(b) = self.series.as_ref().filter(|_| k.abs() < SERIES_RADIUS) {
            let k2 = k * k;
            return b.iter().rev().fold(0.0, |acc, c| acc * k2 + c);
        }
        let plus = Complex64::new(1.0, k);
        let im: f64 = self.coefficients.iter().map(|&(s, c)| c * plus.powi(-s).im).sum();
        im / k
    }

    pub fn eval(&self, k: f64, cutoff: &Cutoff) -> Complex64 {
        Complex64::new(0.0, 1.0) * (cutoff.eval(k) / (2.0 * k)) * self.bracket_sum(k)
    }

    /// `|g_mn(k)|²`.
    pub fn norm_sqr(&self, k: f64, cutoff: &Cutoff) -> f64 {
        (cutoff.eval(k) * self.im_over_k(k)).powi(2)
    }
}

/// Closed-form matrix element `g_mn(k)`; the result is real.
pub fn matrix_element_closed(pair: LevelPair, kmag: f64, cutoff: &Cutoff, constants: &AtomicConstants) -> Result<Complex64> {
    if !(kmag > 0.0) {
        return domain(format!("|k| must be positive, got {kmag}"));
    }
    Ok(ClosedFormElement::new(pair, constants)?.eval(kmag, cutoff))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Quadrature value of `⟨ψ_m00, g(|k|) e^{ik·q} ψ_n00⟩`.
///
/// For s-states the angular integral of the plane wave gives
/// `sin(|k|r)/(|k|r)`, leaving `g(|k|) ∫_0^∞ R_m0 R_n0 sinc(|k|r) r² dr`.
pub fn matrix_element_oracle(
    pair: LevelPair,
    kmag: f64,
    cutoff: &Cutoff,
    tol: f64,
    convention: RadialConvention,
    constants: &AtomicConstants,
) -> Result<Complex64> {
    if !(kmag > 0.0) {
        return domain(format!("|k| must be positive, got {kmag}"));
    }
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let rm = RadialWavefunction::new(pair.m, convention, constants)?;
    let rn = RadialWavefunction::new(pair.n, convention, constants)?;
    let rate = rm.decay + rn.decay;
    let envelope = |r: f64| rm.poly_abs_bound(r) * rn.poly_abs_bound(r) * r * r * (-rate * r).exp();

    // Truncate where the envelope has dropped below 1e-16 of its peak and is
    // decaying at least at half the exponential rate.
    let mut peak: f64 = 0.0;
    let mut r_max = 1.0 / rate;
    loop {
        let e = envelope(r_max);
        peak = peak.max(e);
        let degree = (rm.poly.len() + rn.poly.len()) as f64;
        if e < 1e-16 * peak.max(f64::MIN_POSITIVE) && r_max * rate > 2.0 * (degree + 2.0) {
            break;
        }
        r_max *= 1.25;
    }
    let tail_bound = envelope(r_max) / (0.5 * rate);

    let integrand = |r: f64| rm.eval(r) * rn.eval(r) * sinc(kmag * r) * r * r;
    let pieces = ((r_max * rate).ceil() as usize).max(4);
    let breaks: Vec<f64> = (0..=pieces).map(|i| r_max * i as f64 / pieces as f64).collect();
    let opts = QuadOptions::abs(0.5 * tol).with_max_intervals(20_000);
    let radial = gauss_kronrod_breaks(integrand, &breaks, &opts)?;
    if radial.abs_error + tail_bound > tol {
        return Err(Error::Quadrature {
            value: radial.value,
            abs_error: radial.abs_error + tail_bound,
            evaluations: radial.evaluations,
        });
    }
    Ok(Complex64::new(cutoff.eval(kmag) * radial.value, 0.0))
}

/// Closed form over oracle at a set of momenta; constancy of the ratio is
/// the consistency check between the two routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRatioReport {
    pub pair: LevelPair,
    pub convention: RadialConvention,
    /// Oracle evaluated at `k_scale · |k|`.
    pub k_scale: f64,
    pub momenta: Vec<f64>,
    pub ratios: Vec<f64>,
    pub mean_ratio: f64,
    /// `(max − min)/|mean|` over the ratios.
    pub rel_spread: f64,
}

pub fn oracle_ratio_report(
    pair: LevelPair,
    momenta: &[f64],
    cutoff: &Cutoff,
    convention: RadialConvention,
    k_scale: f64,
    tol: f64,
    constants: &AtomicConstants,
) -> Result<OracleRatioReport> {
    let closed = ClosedFormElement::new(pair, constants)?;
    let mut ratios = Vec::with_capacity(momenta.len());
    for &k in momenta {
        let c = closed.eval(k, cutoff).re;
        let o = matrix_element_oracle(pair, k_scale * k, cutoff, tol, convention, constants)?.re;
        ratios.push(c / o);
    }
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(OracleRatioReport {
        pair,
        convention,
        k_scale,
        momenta: momenta.to_vec(),
        ratios,
        mean_ratio,
        rel_spread: (max - min) / mean_ratio.abs(),
    })
}

/// `∫_0^∞ R_m0 R_n0 r² dr` by adaptive quadrature.
pub fn radial_overlap(m: u32, n: u32, convention: RadialConvention, constants: &AtomicConstants) -> Result<f64> {
    let rm = RadialWavefunction::new(m, convention, constants)?;
    let rn = RadialWavefunction::new(n, convention, constants)?;
    let rate = rm.decay + rn.decay;
    let r_max = 80.0 / rate;
    Ok(gauss_kronrod(|r| rm.eval(r) * rn.eval(r) * r * r, 0.0, r_max, &QuadOptions::abs(1e-13).with_max_intervals(20_000))?.value)
}
