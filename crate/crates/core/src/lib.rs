//! Generalized susceptivity factors γ₋: resonant δ-surface and principal-value parts.
//!
//! The complex transport coefficient
//!
//! ```text
//! γ₋ = ∫_{-∞}^0 dt ∫ dk e^{-it(ω(k)-ω)} |g(k)|²
//!    = π ⟨δ(ω(k)-ω), |g|²⟩ − i P.P.∫ |g(k)|² / (ω(k)-ω) dk
//! ```
//!
//! is evaluated here by reducing the three-dimensional momentum integral to a
//! one-dimensional radial density over the resonant spheres, then splitting it
//! into the resonant surface term and a principal value. The hydrogen atom in
//! an electromagnetic field (s-states, power-law or radial form factors) is
//! the worked physical case; every analytic path has an independent numerical
//! counterpart in [`oracle`].
//!
//! Modules:
//! - [`hydrogen`]: bound states, Bohr frequencies, closed-form matrix elements.
//! - [`geometry`]: dispersion relations, radial densities, δ-pairings.
//! - [`pv`]: principal-value and improper integrals, convergence verdicts.
//! - [`susceptivity`]: γ₋ by frequency and time routes, scaling-limit demos.
//! - [`oracle`]: Monte-Carlo exclusion-shell and 3-D quadrature references.
//! - [`cli`]: the `susceptivity` command-line front end.

pub mod cli;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod hydrogen;
pub mod oracle;
pub mod pv;
pub mod quad;
pub mod susceptivity;

pub use error::{Error, Result};
pub use geometry::{Dispersion, RadialDensity};
pub use hydrogen::{AtomicConstants, Cutoff, LevelPair, Transition};
pub use pv::{ConvergenceVerdict, PlainVerdict, PvVerdict};
pub use susceptivity::{ItoDecomposition, Route, Susceptivity};
