//! Python bindings: `import susceptivity_py`.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use susceptivity::geometry::{radial_density, Dispersion, RadialDensity, RadialFn};
use susceptivity::hydrogen::{bohr_frequency, bohr_frequency_of, matrix_element_closed, AtomicConstants, Cutoff, LevelPair, SignedTransition};
use susceptivity::oracle::{default_shell_eps, mc_shell_pp, McOptions};
use susceptivity::pv::{classify as classify_core, pp_integral as pp_core, ClassifySpec, Target};
use susceptivity::susceptivity::{
    gamma_minus_with, hydrogen_gamma_time_domain, hydrogen_gamma_with, hydrogen_squared_element, ito_decomposition, GammaOptions,
};
use susceptivity::Error;

create_exception!(susceptivity_py, SusceptivityError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(msg) => PyValueError::new_err(msg),
        other => SusceptivityError::new_err(other.to_string()),
    }
}

fn dispersion(name: &str) -> PyResult<Dispersion> {
    name.parse().map_err(to_py)
}

/// `m > n` as given, `m < n` as the reversed transition.
fn signed(m: u32, n: u32) -> PyResult<SignedTransition> {
    if m < n {
        Ok(susceptivity::Transition::new(n, m).map_err(to_py)?.reversed())
    } else {
        Ok(susceptivity::Transition::new(m, n).map_err(to_py)?.into())
    }
}

fn cutoff(nu: Option<f64>, preset: Option<&str>) -> PyResult<Cutoff> {
    match (nu, preset) {
        (Some(_), Some(_)) => Err(PyValueError::new_err("give either nu or preset, not both")),
        (_, Some(p)) => Cutoff::preset(p).map_err(to_py),
        (nu, None) => Cutoff::power_law(nu.unwrap_or(0.5)).map_err(to_py),
    }
}

/// A transition `m → n` between hydrogen s-levels, `m > n`.
#[pyclass(frozen, eq, skip_from_py_object, module = "susceptivity_py")]
#[derive(Clone, Copy, PartialEq)]
struct Transition {
    inner: susceptivity::Transition,
}

#[pymethods]
impl Transition {
    #[new]
    fn new(m: u32, n: u32) -> PyResult<Self> {
        Ok(Self {
            inner: susceptivity::Transition::new(m, n).map_err(to_py)?,
        })
    }

    #[getter]
    fn m(&self) -> u32 {
        self.inner.upper()
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.lower()
    }

    /// Bohr frequency `ω_mn` in atomic units.
    fn bohr_frequency(&self) -> f64 {
        bohr_frequency(&self.inner, &AtomicConstants::atomic())
    }

    fn __repr__(&self) -> String {
        format!("Transition({}, {})", self.m(), self.n())
    }
}

/// `γ₋ = re + i·im` with its verdict and provenance.
#[pyclass(frozen, module = "susceptivity_py")]
struct Susceptivity {
    inner: susceptivity::Susceptivity,
}

#[pymethods]
impl Susceptivity {
    #[getter]
    fn re(&self) -> f64 {
        self.inner.re
    }

    /// `None` when the principal value diverges.
    #[getter]
    fn im(&self) -> Option<f64> {
        self.inner.im
    }

    #[getter]
    fn verdict(&self) -> &'static str {
        self.inner.verdict_str()
    }

    #[getter]
    fn route(&self) -> &'static str {
        self.inner.route.as_str()
    }

    #[getter]
    fn error_estimate(&self) -> f64 {
        self.inner.error_estimate
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn convention(&self) -> &'static str {
        match self.inner.convention {
            susceptivity::susceptivity::SignConvention::Printed => "printed",
            susceptivity::susceptivity::SignConvention::Regularized => "regularized",
        }
    }

    #[getter]
    fn diagnostics(&self) -> Vec<String> {
        self.inner.verdict.diagnostics.clone()
    }

    /// `(decay_rate, lifetime, energy_shift)`.
    fn ito(&self) -> PyResult<(f64, f64, f64)> {
        let d = ito_decomposition(&self.inner).map_err(to_py)?;
        Ok((d.decay_rate, d.lifetime, d.energy_shift))
    }

    fn value(&self) -> Option<(f64, f64)> {
        self.inner.value().map(|z| (z.re, z.im))
    }

    fn __repr__(&self) -> String {
        match self.inner.im {
            Some(im) => format!("Susceptivity(re={}, im={}, verdict='{}')", self.inner.re, im, self.verdict()),
            None => format!("Susceptivity(re={}, im=None, verdict='{}')", self.inner.re, self.verdict()),
        }
    }
}

/// `γ₋` for a hydrogen transition; `m < n` gives the reversed (absorbing) one.
#[pyfunction]
#[pyo3(signature = (m, n, nu=None, preset=None, dispersion="linear", route="frequency", tol=1e-9))]
fn hydrogen_gamma(
    py: Python<'_>,
    m: u32,
    n: u32,
    nu: Option<f64>,
    preset: Option<&str>,
    dispersion: &str,
    route: &str,
    tol: f64,
) -> PyResult<Susceptivity> {
    let t = signed(m, n)?;
    let g = cutoff(nu, preset)?;
    let disp = self::dispersion(dispersion)?;
    let opts = GammaOptions::default().with_tol(tol);
    let inner = match route {
        "frequency" => py.detach(|| hydrogen_gamma_with(t, &g, disp, &opts)),
        "time" => py.detach(|| hydrogen_gamma_time_domain(t, &g, disp, &opts)),
        other => return Err(PyValueError::new_err(format!("unknown route '{other}' (expected frequency or time)"))),
    }
    .map_err(to_py)?;
    Ok(Susceptivity { inner })
}

/// `γ₋` for the bare form factor `|g(k)|²` at frequency `omega`.
#[pyfunction]
#[pyo3(signature = (omega, nu=None, preset=None, dispersion="linear", tol=1e-9))]
fn gamma_minus(omega: f64, nu: Option<f64>, preset: Option<&str>, dispersion: &str, tol: f64) -> PyResult<Susceptivity> {
    let g = cutoff(nu, preset)?;
    let inner = gamma_minus_with(&g, self::dispersion(dispersion)?, omega, &GammaOptions::default().with_tol(tol)).map_err(to_py)?;
    Ok(Susceptivity { inner })
}

/// Convergence verdicts as a dict: `principal_value`, `plain` and the exponents.
#[pyfunction]
#[pyo3(signature = (m, n, nu=None, preset=None, dispersion="linear"))]
fn classify<'py>(
    py: Python<'py>,
    m: u32,
    n: u32,
    nu: Option<f64>,
    preset: Option<&str>,
    dispersion: &str,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let spec = ClassifySpec {
        cutoff: cutoff(nu, preset)?,
        target: Target::Transition(signed(m, n)?),
        dispersion: self::dispersion(dispersion)?,
        constants: AtomicConstants::atomic(),
    };
    let v = classify_core(&spec).map_err(to_py)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("principal_value", v.principal_value.as_str())?;
    out.set_item("plain", v.plain.as_str())?;
    out.set_item("endpoint_exponent", v.endpoint_exponent)?;
    out.set_item("tail_exponent", v.tail_exponent)?;
    out.set_item("resonant_density", v.resonant_density)?;
    out.set_item("diagnostics", v.diagnostics)?;
    Ok(out)
}

/// Closed-form `g_mn(k)` (real).
#[pyfunction]
#[pyo3(signature = (m, n, k, nu=None, preset=None))]
fn matrix_element(m: u32, n: u32, k: f64, nu: Option<f64>, preset: Option<&str>) -> PyResult<f64> {
    let pair = LevelPair::new(m, n).map_err(to_py)?;
    Ok(matrix_element_closed(pair, k, &cutoff(nu, preset)?, &AtomicConstants::atomic()).map_err(to_py)?.re)
}

/// `P.P. ∫_a^∞ f(u)/u du` for a Python callable `f`.
#[pyfunction]
#[pyo3(signature = (f, a, tol=1e-9))]
fn pp_integral(f: Py<PyAny>, a: f64, tol: f64) -> PyResult<f64> {
    let density = RadialDensity::from_fn(a, move |u: f64| {
        Python::attach(|py| f.call1(py, (u,)).and_then(|v| v.extract::<f64>(py)).unwrap_or(f64::NAN))
    });
    pp_core(&density, tol).map_err(to_py)
}

/// Principal value of a hydrogen transition through the radial density.
#[pyfunction]
#[pyo3(signature = (m, n, nu=None, preset=None, dispersion="linear", tol=1e-9))]
fn hydrogen_pp(py: Python<'_>, m: u32, n: u32, nu: Option<f64>, preset: Option<&str>, dispersion: &str, tol: f64) -> PyResult<f64> {
    let pair = LevelPair::new(m, n).map_err(to_py)?;
    let g = cutoff(nu, preset)?;
    let disp = self::dispersion(dispersion)?;
    py.detach(|| {
        let au = AtomicConstants::atomic();
        let phi = hydrogen_squared_element(pair, &g, &au)?;
        let w = bohr_frequency_of(m, n, &au)?;
        pp_core(&radial_density(&phi, disp, w)?, tol)
    })
    .map_err(to_py)
}

/// Monte-Carlo exclusion-shell estimate of a hydrogen principal value.
///
/// Returns `(value, stderr, divergence_flag, chi2_per_dof)`.
#[pyfunction]
#[pyo3(signature = (m, n, nu=None, preset=None, samples=200_000, seed=None))]
fn oracle_pp(
    py: Python<'_>,
    m: u32,
    n: u32,
    nu: Option<f64>,
    preset: Option<&str>,
    samples: usize,
    seed: Option<u64>,
) -> PyResult<(f64, f64, bool, f64)> {
    let pair = LevelPair::new(m, n).map_err(to_py)?;
    let g = cutoff(nu, preset)?;
    let opts = seed.map_or_else(McOptions::default, |s| McOptions::default().with_seed(s));
    let r = py
        .detach(|| {
            let au = AtomicConstants::atomic();
            let phi: RadialFn = hydrogen_squared_element(pair, &g, &au)?;
            let w = bohr_frequency_of(m, n, &au)?;
            mc_shell_pp(&phi, Dispersion::Linear, w, &default_shell_eps(w), samples, &opts)
        })
        .map_err(to_py)?;
    Ok((r.value, r.stderr, r.divergence_flag, r.chi2_per_dof))
}

#[pymodule]
fn susceptivity_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SusceptivityError", m.py().get_type::<SusceptivityError>())?;
    m.add_class::<Transition>()?;
    m.add_class::<Susceptivity>()?;
    m.add_function(wrap_pyfunction!(hydrogen_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_minus, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_element, m)?)?;
    m.add_function(wrap_pyfunction!(pp_integral, m)?)?;
    m.add_function(wrap_pyfunction!(hydrogen_pp, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_pp, m)?)?;
    Ok(())
}
