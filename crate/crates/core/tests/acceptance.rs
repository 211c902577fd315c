//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use susceptivity::geometry::{nascent_delta_pairing, radial_density, Dispersion, RadialDensity, RadialFn};
use susceptivity::hydrogen::{oracle_ratio_report, radial_overlap, AtomicConstants, Cutoff, LevelPair, RadialConvention, Transition};
use susceptivity::oracle::{default_shell_eps, mc_shell_pp, McOptions};
use susceptivity::pv::{classify, log_scan, default_log_scan_eps, plain_integral, pp_integral, ClassifySpec, PvVerdict, Target};
use susceptivity::susceptivity::{
    compare_routes, cross_covariance_decay, gamma_minus, hydrogen_density, hydrogen_gamma, hydrogen_gamma_time_domain,
    hydrogen_squared_element, scaling_limit_demo, second_order_limit, squared_cutoff, CorrelationKernel, GammaOptions,
};
use susceptivity::Error;

const AU: AtomicConstants = AtomicConstants::atomic();
const TRANSITIONS: [(u32, u32); 3] = [(2, 1), (3, 1), (3, 2)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn pv_threshold() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for (m, n) in TRANSITIONS {
        let t = Transition::new(m, n).unwrap();
        for (nu, finite) in [(0.0, true), (0.5, true), (1.0, true), (1.25, true), (1.45, true), (1.5, false), (1.75, false), (2.0, false)] {
            let cutoff = Cutoff::power_law(nu).unwrap();
            let verdict = classify(&ClassifySpec {
                cutoff: cutoff.clone(),
                target: Target::from(t),
                dispersion: Dispersion::Linear,
                constants: AU,
            });
            let density = hydrogen_density(LevelPair::new(m, n).unwrap(), t.bohr_frequency_value(), &cutoff, Dispersion::Linear, &AU);
            let direct = density.map(|d| pp_integral(&d, 1e-9));
            let class_ok = match &verdict {
                Ok(v) if finite => v.principal_value == PvVerdict::Finite,
                Ok(v) => v.principal_value.is_divergent(),
                Err(_) => false,
            };
            let direct_ok = match &direct {
                Ok(Ok(v)) => finite && v.is_finite(),
                Ok(Err(Error::DivergentEndpoint { .. } | Error::DivergentTail { .. })) => !finite,
                _ => false,
            };
            if !(class_ok && direct_ok) {
                let phi = hydrogen_squared_element(LevelPair::new(m, n).unwrap(), &cutoff, &AU).unwrap();
                let w = t.bohr_frequency_value();
                let mc = mc_shell_pp(&phi, Dispersion::Linear, w, &default_shell_eps(w), 200_000, &McOptions::default());
                let mc = match (&direct, mc) {
                    (Ok(Ok(p)), Ok(r)) => format!("shell oracle z={:+.2} flagged={}", (r.value - p) / r.stderr, r.divergence_flag),
                    (_, r) => format!("shell oracle {:?}", r.map(|r| r.value)),
                };
                bad.push(format!(
                    "({m},{n}) ν={nu}: classify {:?}, direct {:?}, {mc}",
                    verdict.map(|v| v.principal_value),
                    direct
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = bad.is_empty() && secs <= 60.0;
    outcome(pass, format!("24 cases, {} mismatches, {secs:.2}s; {}", bad.len(), bad.join("; ")))
}

trait BohrValue {
    fn bohr_frequency_value(&self) -> f64;
}

impl BohrValue for Transition {
    fn bohr_frequency_value(&self) -> f64 {
        susceptivity::hydrogen::bohr_frequency(self, &AU)
    }
}

fn analytic_real_part() -> Outcome {
    let mut worst_closed: f64 = 0.0;
    let mut worst_generic: f64 = 0.0;
    for (nu, omega) in [(0.5, 1.0), (1.0, 2.0), (0.0, 0.5)] {
        let want = 4.0 * PI * PI * f64::powf(omega, 2.0 - 2.0 * nu);
        let cutoff = Cutoff::power_law(nu).unwrap();
        let closed = gamma_minus(&cutoff, Dispersion::Linear, omega).map(|g| g.re).unwrap_or(f64::NAN);
        let generic = nascent_delta_pairing(&squared_cutoff(&cutoff), Dispersion::Linear, omega)
            .map(|(v, _)| PI * v)
            .unwrap_or(f64::NAN);
        worst_closed = worst_closed.max(((closed - want) / want).abs());
        worst_generic = worst_generic.max(((generic - want) / want).abs());
    }
    let pass = worst_closed <= 1e-10 && worst_generic <= 1e-6;
    outcome(pass, format!("max rel. error closed {worst_closed:.2e} (≤1e-10), nascent δ {worst_generic:.2e} (≤1e-6)"))
}

fn two_routes() -> Outcome {
    let start = Instant::now();
    let t = Transition::new(2, 1).unwrap();
    let cutoff = Cutoff::power_law(0.5).unwrap();
    let freq = hydrogen_gamma(t, &cutoff, Dispersion::Linear);
    let time = hydrogen_gamma_time_domain(t, &cutoff, Dispersion::Linear, &GammaOptions::default());
    let secs = start.elapsed().as_secs_f64();
    match (freq, time) {
        (Ok(f), Ok(tm)) => {
            let cmp = compare_routes(&f, &tm);
            let pass = cmp.agrees(&f, 1e-3) && secs <= 30.0;
            outcome(
                pass,
                format!(
                    "frequency ({:.10}, {:.10}) time ({:.10}, {:.10}) |Δre| {:.2e} ||Δim|| {:.2e} sign {:?}, {secs:.2}s",
                    f.re,
                    f.im.unwrap_or(f64::NAN),
                    tm.re,
                    tm.im.unwrap_or(f64::NAN),
                    cmp.re_difference,
                    cmp.im_magnitude_difference.unwrap_or(f64::NAN),
                    cmp.sign_relation
                ),
            )
        }
        (a, b) => outcome(false, format!("route failed: {:?} / {:?}", a.err(), b.err())),
    }
}

fn closed_vs_oracle() -> Outcome {
    // k = 1 is a node of the m = 3 brackets
    let momenta = [0.25, 0.5, 0.75, 2.0, 4.0];
    let mut lines = Vec::new();
    let mut pass = true;
    for (m, n) in TRANSITIONS {
        let pair = LevelPair::new(m, n).unwrap();
        match oracle_ratio_report(pair, &momenta, &Cutoff::qed(), RadialConvention::Printed, 1.0, 1e-13, &AU) {
            Ok(r) => {
                pass &= r.rel_spread <= 1e-6;
                lines.push(format!("({m},{n}) ratio {:.12} k-scale {} spread {:.1e}", r.mean_ratio, r.k_scale, r.rel_spread));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("({m},{n}) failed: {e}"));
            }
        }
        if let Ok(r) = oracle_ratio_report(pair, &momenta, &Cutoff::qed(), RadialConvention::Scaled, 1.0, 1e-13, &AU) {
            lines.push(format!("normalized states spread {:.2}", r.rel_spread));
        }
    }
    outcome(pass, lines.join("; "))
}

fn plain_integral_signature() -> Outcome {
    let phi0 = 4.0 * PI;
    let nonzero = RadialDensity::from_fn(-1.0, move |u: f64| phi0 * (-u * u).exp());
    let scan = log_scan(&nonzero, &default_log_scan_eps(&nonzero));
    let diverges = matches!(plain_integral(&nonzero, 1e-9), Err(Error::DivergentLogarithmic { .. }));
    let slope_ok = scan.as_ref().is_ok_and(|s| (s.slope / phi0 - 1.0).abs() <= 0.05);

    let tol = 1e-9;
    let vanishing = RadialDensity::from_fn(-1.0, |u: f64| u * (-u * u).exp());
    let plain = plain_integral(&vanishing, tol);
    let pp = pp_integral(&vanishing, tol);
    let equal = matches!((&plain, &pp), (Ok(a), Ok(b)) if (a - b).abs() <= 2.0 * tol);
    outcome(
        diverges && slope_ok && equal,
        format!(
            "slope/Φ(0) = {:.5}, plain diverges: {diverges}; Φ(0)=0 plain {:?} vs PP {:?}",
            scan.map(|s| s.slope / phi0).unwrap_or(f64::NAN),
            plain,
            pp
        ),
    )
}

fn scaling_demo() -> Outcome {
    let lambdas = [0.5, 0.25, 0.125];
    let cosine = scaling_limit_demo(|s: f64| (-s * s).exp(), f64::cos, 0.0, &lambdas);
    let constant = scaling_limit_demo(|s: f64| (-s * s).exp(), |_| 1.0, 0.0, &lambdas);
    match (cosine, constant) {
        (Ok(c), Ok(k)) => {
            let cos_err = c
                .rows
                .iter()
                .map(|r| (r.value.re - PI.sqrt() * (-r.lambda.powi(4) / 4.0).exp()).abs())
                .fold(0.0, f64::max);
            let const_err = k.rows.iter().map(|r| (r.value.re - PI.sqrt()).abs()).fold(0.0, f64::max);
            outcome(
                cos_err <= 1e-8 && const_err <= 1e-10,
                format!("cosine max error {cos_err:.2e} (≤1e-8), constant max error {const_err:.2e} (≤1e-10)"),
            )
        }
        (a, b) => outcome(false, format!("{:?} / {:?}", a.err(), b.err())),
    }
}

fn second_order_demo() -> Outcome {
    match second_order_limit(&CorrelationKernel::exponential(1.0), 1.0, &[0.2, 0.1, 0.05]) {
        Ok(t) => {
            let within = t.rows.iter().all(|r| !r.flagged && (r.value.re + 1.0).abs() <= 2.0 * r.lambda * r.lambda);
            let order = t.observed_order().unwrap_or(f64::NAN);
            let errs: Vec<String> = t.rows.iter().map(|r| format!("{:.3e}", r.error)).collect();
            outcome(within && order >= 1.8, format!("errors [{}], observed order {order:.3} (≥1.8)", errs.join(", ")))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn independence_demo() -> Outcome {
    let lambdas = [0.5, 0.25, 0.125, 0.0625];
    let c = CorrelationKernel::exponential(1.0);
    let cross = cross_covariance_decay(1.0, 2.0, &c, &lambdas);
    let diagonal = cross_covariance_decay(1.0, 1.0, &c, &lambdas);
    match (cross, diagonal) {
        (Ok(x), Ok(d)) => {
            let cross_last = x.rows.last().map_or(f64::NAN, |r| r.value.norm());
            let diag_last = d.rows.last().map_or(f64::NAN, |r| r.error);
            let limit = 1.0 / (2.0 * PI.sqrt());
            let limit_ok = (d.limit.re - limit).abs() < 1e-10;
            outcome(
                cross_last <= 1e-3 && diag_last <= 1e-3 && limit_ok && !x.any_flagged() && !d.any_flagged(),
                format!(
                    "cross |value| {cross_last:.2e} at λ={}, diagonal limit {:.10} error {diag_last:.2e}",
                    lambdas[3], d.limit.re
                ),
            )
        }
        (a, b) => outcome(false, format!("{:?} / {:?}", a.err(), b.err())),
    }
}

fn negative_frequency_rule() -> Outcome {
    let mut cutoffs: Vec<Cutoff> = [0.0, 0.5, 1.0, 1.5, 2.0].iter().map(|&nu| Cutoff::power_law(nu).unwrap()).collect();
    cutoffs.extend(["gaussian", "exponential", "lorentzian"].iter().map(|p| Cutoff::preset(p).unwrap()));
    let mut checked = 0;
    let mut bad = Vec::new();
    for cutoff in &cutoffs {
        for disp in [Dispersion::Linear, Dispersion::Quadratic] {
            for omega in [-2.0, -0.5, -1e-3, 0.0] {
                match gamma_minus(cutoff, disp, omega) {
                    Ok(g) if g.re == 0.0 => checked += 1,
                    other => bad.push(format!("{} {disp} ω={omega}: {:?}", cutoff.label(), other.map(|g| g.re))),
                }
            }
        }
    }
    for (m, n) in TRANSITIONS {
        for nu in [0.0, 0.5, 1.0, 2.0] {
            let t = Transition::new(m, n).unwrap().reversed();
            match hydrogen_gamma(t, &Cutoff::power_law(nu).unwrap(), Dispersion::Linear) {
                Ok(g) if g.re == 0.0 => checked += 1,
                other => bad.push(format!("reversed ({m},{n}) ν={nu}: {:?}", other.map(|g| g.re))),
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} cases with re == 0 exactly; failures: [{}]", bad.join("; ")))
}

fn monte_carlo_oracle() -> Outcome {
    let samples = 400_000;
    let opts = McOptions::default();
    let mut lines = Vec::new();
    let mut pass = true;
    let mut corpus: Vec<(String, RadialFn, f64)> = Vec::new();
    for (m, n) in TRANSITIONS {
        for nu in [0.0, 0.5] {
            let phi = hydrogen_squared_element(LevelPair::new(m, n).unwrap(), &Cutoff::power_law(nu).unwrap(), &AU).unwrap();
            corpus.push((format!("({m},{n}) ν={nu}"), phi, susceptivity::hydrogen::bohr_frequency_of(m, n, &AU).unwrap()));
        }
    }
    corpus.push(("gaussian ω=1".into(), RadialFn::new(|r: f64| (-r * r).exp()), 1.0));
    for (label, phi, omega) in &corpus {
        let density = radial_density(phi, Dispersion::Linear, *omega).unwrap();
        let pp = pp_integral(&density, 1e-10);
        let mc = mc_shell_pp(phi, Dispersion::Linear, *omega, &default_shell_eps(*omega), samples, &opts);
        match (pp, mc) {
            (Ok(p), Ok(r)) => {
                let z = (r.value - p) / r.stderr;
                let ok = z.abs() <= 3.0 && !r.divergence_flag;
                pass &= ok;
                lines.push(format!("{label}: z={z:+.2}{}", if ok { "" } else { " FAIL" }));
            }
            (p, r) => {
                pass = false;
                lines.push(format!("{label}: {:?} / {:?}", p.err(), r.err()));
            }
        }
    }

    let t21 = LevelPair::new(2, 1).unwrap();
    let phi2 = hydrogen_squared_element(t21, &Cutoff::power_law(2.0).unwrap(), &AU).unwrap();
    let w21 = susceptivity::hydrogen::bohr_frequency_of(2, 1, &AU).unwrap();
    let flagged = mc_shell_pp(&phi2, Dispersion::Linear, w21, &default_shell_eps(w21), samples, &opts).map(|r| r.divergence_flag);
    pass &= flagged.as_ref().is_ok_and(|f| *f);
    lines.push(format!("(2,1) ν=2 flagged: {flagged:?}"));

    let phi = &corpus[2].1;
    let eps = default_shell_eps(corpus[2].2);
    let a = mc_shell_pp(phi, Dispersion::Linear, corpus[2].2, &eps, 20_000, &opts.clone().with_seed(11));
    let b = mc_shell_pp(phi, Dispersion::Linear, corpus[2].2, &eps, 20_000, &opts.clone().with_seed(11));
    let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y && x.value.to_bits() == y.value.to_bits());
    pass &= same;
    lines.push(format!("seed reproducible: {same}"));
    outcome(pass, lines.join("; "))
}

fn wavefunction_hygiene() -> Outcome {
    let mut worst_norm: f64 = 0.0;
    let mut worst_cross: f64 = 0.0;
    for m in 1..=5 {
        for n in 1..=m {
            let v = radial_overlap(m, n, RadialConvention::Scaled, &AU).unwrap_or(f64::NAN);
            if m == n {
                worst_norm = worst_norm.max((v - 1.0).abs());
            } else {
                worst_cross = worst_cross.max(v.abs());
            }
        }
    }
    outcome(
        worst_norm <= 1e-8 && worst_cross <= 1e-8,
        format!("max |norm − 1| {worst_norm:.2e}, max |overlap| {worst_cross:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("pv finite iff nu < 3/2", pv_threshold),
        ("analytic real part", analytic_real_part),
        ("frequency vs time route", two_routes),
        ("closed-form vs oracle matrix element", closed_vs_oracle),
        ("plain-integral divergence signature", plain_integral_signature),
        ("rescaled-time delta convergence", scaling_demo),
        ("second-order term limit", second_order_demo),
        ("distinct-frequency independence", independence_demo),
        ("negative-frequency rule", negative_frequency_rule),
        ("Monte-Carlo shell oracle", monte_carlo_oracle),
        ("wavefunction hygiene", wavefunction_hygiene),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "acceptance {:>2} [{}] {name}: {} ({:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
