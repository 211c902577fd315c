use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use susceptivity::geometry::{asymptotic_coefficients, delta_pairing, radial_density, Dispersion, RadialDensity, RadialFn};
use susceptivity::hydrogen::{
    bohr_frequency_of, bound_energy, matrix_element_closed, AtomicConstants, ClosedFormElement, Cutoff, LevelPair, Transition,
};
use susceptivity::oracle::{default_shell_eps, mc_shell_pp, radial_reduction_check, McOptions};
use susceptivity::pv::{classify, plain_integral, pp_integral, truncated_pp, ClassifySpec, PvVerdict, Target};
use susceptivity::susceptivity::{
    compare_routes, gamma_minus, hydrogen_gamma, hydrogen_gamma_time_domain, hydrogen_squared_element, ito_decomposition,
    scaling_limit_demo, GammaOptions,
};

const AU: AtomicConstants = AtomicConstants::atomic();

fn bump(width: f64) -> impl Fn(f64) -> f64 + Sync {
    move |u: f64| {
        let x = u / width;
        if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pp_is_linear(alpha in -3.0..3.0f64, beta in -3.0..3.0f64, a in -3.0..-0.2f64, c in 0.2..2.0f64) {
        let d1 = RadialDensity::from_fn(a, |u: f64| (-u * u).exp());
        let d2 = RadialDensity::from_fn(a, move |u: f64| (1.0 + u - a).powi(2) * (-c * (u - a)).exp());
        let combined = d1.scaled(alpha).sum(&d2.scaled(beta)).unwrap();
        let tol = 1e-10;
        let lhs = pp_integral(&combined, tol).unwrap();
        let rhs = alpha * pp_integral(&d1, tol).unwrap() + beta * pp_integral(&d2, tol).unwrap();
        prop_assert!((lhs - rhs).abs() <= 10.0 * tol * (1.0 + alpha.abs() + beta.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn delta_pairing_is_nonnegative(omega in -2.0..5.0f64, w in 0.1..3.0f64, p in 0.0..4.0f64, quad in any::<bool>()) {
        let phi = RadialFn::new(move |k: f64| k.powf(p) * (-k / w).exp());
        let disp = if quad { Dispersion::Quadratic } else { Dispersion::Linear };
        prop_assert!(delta_pairing(&phi, disp, omega).unwrap() >= 0.0);
    }

    #[test]
    fn level_set_chain_rule(omega in 0.05..4.0f64, w in 0.2..3.0f64) {
        let phi = RadialFn::new(move |k: f64| (-k * k / w).exp() / (1.0 + k));
        let lin = delta_pairing(&phi, Dispersion::Linear, omega).unwrap();
        let quad = delta_pairing(&phi, Dispersion::Quadratic, omega * omega).unwrap();
        prop_assert!((quad - lin / (2.0 * omega)).abs() <= 1e-8 * (1.0 + lin.abs()));
    }

    #[test]
    fn polynomial_coefficients_are_recovered(coeffs in prop::collection::vec(-2.0..2.0f64, 1..=5)) {
        let c = coeffs.clone();
        let density = RadialDensity::from_fn(-5.0, move |u: f64| c.iter().rev().fold(0.0, |acc, x| acc * u + x));
        let got = asymptotic_coefficients(&density, coeffs.len() - 1).unwrap();
        for (g, want) in got.iter().zip(&coeffs) {
            prop_assert!((g - want).abs() <= 1e-8, "{got:?} vs {coeffs:?}");
        }
    }

    #[test]
    fn real_part_is_nonnegative(nu in 0.0..3.0f64, omega in -3.0..3.0f64, quad in any::<bool>()) {
        let disp = if quad { Dispersion::Quadratic } else { Dispersion::Linear };
        let g = gamma_minus(&Cutoff::power_law(nu).unwrap(), disp, omega).unwrap();
        prop_assert!(g.re >= 0.0);
        if omega <= 0.0 {
            prop_assert_eq!(g.re, 0.0);
        }
    }

    #[test]
    fn slow_tail_matches_beta_integral(nu in 1.0005..1.45f64, w in 0.1..3.0f64) {
        // ∫_0^∞ 4π s^{2-2ν}/(s + w) ds = 4π w^{2-2ν} π / sin(π(3-2ν))
        let exact = 4.0 * PI * w.powf(2.0 - 2.0 * nu) * PI / (PI * (3.0 - 2.0 * nu)).sin();
        let g = gamma_minus(&Cutoff::power_law(nu).unwrap(), Dispersion::Linear, -w).unwrap();
        prop_assert!((g.im.unwrap() + exact).abs() <= 1e-9 * exact, "{:?} vs {}", g.im, -exact);
    }

    #[test]
    fn ito_reconstructs_gamma(m in 2u32..6, dn in 1u32..4, nu in 0.0..1.4f64) {
        let n = m.saturating_sub(dn).max(1);
        prop_assume!(n < m);
        let g = hydrogen_gamma(Transition::new(m, n).unwrap(), &Cutoff::power_law(nu).unwrap(), Dispersion::Linear).unwrap();
        let ito = ito_decomposition(&g).unwrap();
        let z = ito.gamma();
        prop_assert_eq!(z.re, g.re);
        prop_assert_eq!(Some(z.im), g.im);
    }

    #[test]
    fn bohr_frequency_is_antisymmetric(m in 1u32..30, n in 1u32..30) {
        prop_assume!(m != n);
        let (hi, lo) = (m.max(n), m.min(n));
        let w = bohr_frequency_of(hi, lo, &AU).unwrap();
        prop_assert_eq!(w, bound_energy(hi, &AU).unwrap() - bound_energy(lo, &AU).unwrap());
        let t = Transition::new(hi, lo).unwrap();
        prop_assert_eq!(t.reversed().bohr_frequency(&AU), -w);
    }

    #[test]
    fn closed_form_is_real(m in 2u32..7, dn in 1u32..6, k in 1e-3..50.0f64, nu in 0.0..2.5f64) {
        prop_assume!(dn < m);
        let g = matrix_element_closed(LevelPair::new(m, m - dn).unwrap(), k, &Cutoff::power_law(nu).unwrap(), &AU).unwrap();
        prop_assert!(g.im.abs() <= 1e-15 * (1.0 + g.re.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn shell_oracle_is_seed_reproducible(seed in any::<u64>()) {
        let phi = RadialFn::new(|k: f64| (-k * k).exp());
        let eps = default_shell_eps(1.0);
        let opts = McOptions::default().with_seed(seed);
        let a = mc_shell_pp(&phi, Dispersion::Linear, 1.0, &eps, 4_000, &opts).unwrap();
        let b = mc_shell_pp(&phi, Dispersion::Linear, 1.0, &eps, 4_000, &opts).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn plain_equals_pp_when_plain_is_finite() {
    let tol = 1e-9;
    for a in [-0.5, -1.0, -3.0] {
        let d = RadialDensity::from_fn(a, |u: f64| u * (-u * u).exp() + u * u * u / (1.0 + u.powi(6)));
        let plain = plain_integral(&d, tol).unwrap();
        let pp = pp_integral(&d, tol).unwrap();
        assert!((plain - pp).abs() <= 2.0 * tol, "{plain} vs {pp}");
    }
}

#[test]
fn truncation_converges_at_first_order() {
    let d = RadialDensity::from_fn(-2.0, |u: f64| (1.0 + u) * (-u * u).exp());
    let pp = pp_integral(&d, 1e-12).unwrap();
    let errs: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&e| (truncated_pp(&d, e, 1e-12).unwrap() - pp).abs()).collect();
    let rate = (errs[0] / errs[2]).log10() / 2.0;
    assert!(rate >= 1.0 - 1e-2, "errors {errs:?}, rate {rate}");
}

#[test]
fn classify_matches_direct_quadrature() {
    for (m, n) in [(2, 1), (3, 1), (3, 2)] {
        let t = Transition::new(m, n).unwrap();
        let w = bohr_frequency_of(m, n, &AU).unwrap();
        for nu in [0.0, 0.5, 1.0, 1.25, 1.45, 1.5, 1.75, 2.0] {
            let cutoff = Cutoff::power_law(nu).unwrap();
            let spec = ClassifySpec {
                cutoff: cutoff.clone(),
                target: Target::from(t),
                dispersion: Dispersion::Linear,
                constants: AU,
            };
            let finite = classify(&spec).unwrap().principal_value == PvVerdict::Finite;
            let phi = hydrogen_squared_element(LevelPair::new(m, n).unwrap(), &cutoff, &AU).unwrap();
            let direct = pp_integral(&radial_density(&phi, Dispersion::Linear, w).unwrap(), 1e-9);
            assert_eq!(finite, direct.is_ok(), "({m},{n}) ν={nu}: {direct:?}");
        }
    }
}

#[test]
fn verdict_steps_where_the_element_order_says() {
    for (m, n) in [(2, 1), (3, 2), (3, 1), (4, 2)] {
        let p0 = ClosedFormElement::new(LevelPair::new(m, n).unwrap(), &AU).unwrap().origin_order() as f64;
        let threshold = 1.5 + 2.0 * p0;
        for disp in [Dispersion::Linear, Dispersion::Quadratic] {
            for nu in [threshold - 0.05, threshold, threshold + 0.25] {
                let g = hydrogen_gamma(Transition::new(m, n).unwrap(), &Cutoff::power_law(nu).unwrap(), disp).unwrap();
                assert_eq!(g.verdict.principal_value == PvVerdict::Finite, nu < threshold, "({m},{n}) {disp} ν={nu}");
            }
        }
    }
}

#[test]
fn routes_agree_on_corpus() {
    for (m, n) in [(2, 1), (3, 1), (3, 2)] {
        for nu in [0.0, 0.5, 1.0] {
            let t = Transition::new(m, n).unwrap();
            let cutoff = Cutoff::power_law(nu).unwrap();
            let f = hydrogen_gamma(t, &cutoff, Dispersion::Linear).unwrap();
            let tm = hydrogen_gamma_time_domain(t, &cutoff, Dispersion::Linear, &GammaOptions::default()).unwrap();
            let cmp = compare_routes(&f, &tm);
            assert!(cmp.re_difference <= 1e-3 * (1.0 + f.re.abs()), "({m},{n}) ν={nu}: {cmp:?}");
            let im = f.im.unwrap().abs();
            assert!(cmp.im_magnitude_difference.unwrap() <= 1e-3 * (1.0 + im), "({m},{n}) ν={nu}: {cmp:?}");
        }
    }
}

#[test]
fn scaling_errors_do_not_grow() {
    let t = scaling_limit_demo(|s: f64| (-s * s).exp(), f64::cos, 0.3, &[1.0, 0.5, 0.25, 0.125]).unwrap();
    assert!(t.monotone_tail(3));
}

#[test]
fn closed_form_tail_rate() {
    for nu in [0.0, 0.5, 1.0] {
        for (m, n) in [(2, 1), (3, 1), (3, 2)] {
            let pair = LevelPair::new(m, n).unwrap();
            let g = |k: f64| matrix_element_closed(pair, k, &Cutoff::power_law(nu).unwrap(), &AU).unwrap().re.abs();
            let slope = (g(2e4) / g(1e4)).log2();
            assert_relative_eq!(slope, -(4.0 + nu), epsilon = 1e-3);
        }
    }
}

#[test]
fn radial_reduction_grid() {
    let hydrogen = hydrogen_squared_element(LevelPair::new(2, 1).unwrap(), &Cutoff::qed(), &AU).unwrap();
    let cases: [(&str, RadialFn); 3] = [
        ("gaussian", RadialFn::new(|k: f64| (-k * k).exp())),
        ("exponential", RadialFn::new(|k: f64| (-k).exp())),
        ("hydrogen (2,1)", hydrogen),
    ];
    for (label, phi) in &cases {
        for disp in [Dispersion::Linear, Dispersion::Quadratic] {
            let r = radial_reduction_check(phi, bump(0.3), disp, 0.5, 1e-4).unwrap();
            assert!(r.pass, "{label} {disp}: {r:?}");
        }
    }
}

#[test]
fn nascent_and_exact_delta_agree_on_cutoffs() {
    for nu in [0.0, 0.5, 1.0] {
        let phi = susceptivity::susceptivity::squared_cutoff(&Cutoff::power_law(nu).unwrap());
        for omega in [0.25, 1.0, 3.0] {
            let exact = delta_pairing(&phi, Dispersion::Linear, omega).unwrap();
            let (nascent, _) = susceptivity::geometry::nascent_delta_pairing(&phi, Dispersion::Linear, omega).unwrap();
            assert_relative_eq!(nascent, exact, max_relative = 1e-6);
            assert_relative_eq!(exact, 4.0 * PI * omega.powf(2.0 - 2.0 * nu), max_relative = 1e-12);
        }
    }
}

#[test]
fn near_threshold_values_match_high_precision_reference() {
    // 40-digit quadrature on the exact rational form of the bracket
    for ((m, n), nu, want) in [((3, 1), 2.0, -5.602_780_693_976_71), ((3, 1), 3.45, -2_585.046_259_525_71), ((4, 2), 3.45, -2_849.457_057_366_14)] {
        let phi = hydrogen_squared_element(LevelPair::new(m, n).unwrap(), &Cutoff::power_law(nu).unwrap(), &AU).unwrap();
        let w = bohr_frequency_of(m, n, &AU).unwrap();
        let pp = pp_integral(&radial_density(&phi, Dispersion::Linear, w).unwrap(), 1e-9).unwrap();
        assert_relative_eq!(pp, want, max_relative = 1e-11);
    }
}
