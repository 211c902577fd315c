//! The `susceptivity` command-line front end.
//!
//! Commands: `gamma`, `classify`, `table`, `demo`, `oracle-check`. Settings
//! come from built-in defaults, then a `key = value` config file
//! (`--config`), then flags. Exit status: 0 for finite verdicts and passing
//! demos, 2 for divergent verdicts, 1 for usage or numeric failures.
//!
//! Outputs go to `--output`, to `$SUSCEPTIVITY_OUTPUT_DIR/<command>.<ext>`
//! when only the directory is set, or to stdout. JSON reports embed the
//! resolved config; CSV files and table outputs get it in a
//! `<path>.meta.json` sidecar.

mod output;

pub use output::{emit_table, fmt17, sidecar_path, table_csv, to_json, Format, TableRecord, TABLE_HEADER};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::geometry::{radial_density, Dispersion, RadialFn};
use crate::hydrogen::{bohr_frequency, AtomicConstants, Cutoff, LevelPair, Transition, RADIAL_PRESETS};
use crate::oracle::{default_shell_eps, mc_shell_pp, McOptions, DEFAULT_SEED};
use crate::pv::{classify, pp_integral, ClassifySpec, PvVerdict, Target};
use crate::susceptivity::{
    cross_covariance_decay, hydrogen_gamma_time_domain, hydrogen_gamma_with, hydrogen_squared_element, scaling_limit_demo,
    second_order_limit, squared_cutoff, gamma_minus_time_domain, gamma_minus_with, ConvergenceTable, CorrelationKernel,
    GammaOptions, Susceptivity, DEFAULT_EPS_SEQUENCE,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SUSCEPTIVITY_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_DIVERGENT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Domain(msg) => CliError::Usage(msg),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Gamma,
    Classify,
    Table,
    Demo,
    OracleCheck,
}

impl CommandKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Gamma => "gamma",
            CommandKind::Classify => "classify",
            CommandKind::Table => "table",
            CommandKind::Demo => "demo",
            CommandKind::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffSpec {
    Power { nu: f64 },
    Radial { preset: String },
}

impl CutoffSpec {
    pub fn build(&self) -> Result<Cutoff, CliError> {
        match self {
            CutoffSpec::Power { nu } => Cutoff::power_law(*nu).map_err(|e| CliError::Usage(e.to_string())),
            CutoffSpec::Radial { preset } => Cutoff::preset(preset).map_err(|e| CliError::Usage(e.to_string())),
        }
    }

    fn nu(&self) -> Option<f64> {
        match self {
            CutoffSpec::Power { nu } => Some(*nu),
            CutoffSpec::Radial { .. } => None,
        }
    }
}

/// `start:stop:step`, stop included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl NuGrid {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for NuGrid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Usage(format!("nu grid must be start:stop:step, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let grid = NuGrid {
            start: v[0],
            stop: v[1],
            step: v[2],
        };
        if !(grid.step > 0.0 && grid.start >= 0.0 && grid.stop >= grid.start && grid.stop.is_finite()) {
            return Err(CliError::Usage(format!("nu grid needs 0 <= start <= stop and step > 0, got '{s}'")));
        }
        if grid.values().len() > 10_000 {
            return Err(CliError::Usage("nu grid has more than 10000 points".into()));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteChoice {
    Frequency,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoKind {
    Scaling,
    SecondOrder,
    Independence,
    All,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub transition: Option<(u32, u32)>,
    pub transitions: Vec<(u32, u32)>,
    /// Resonance frequency for a bare form factor, instead of a transition.
    pub omega: Option<f64>,
    pub cutoff: CutoffSpec,
    pub nu_grid: Option<NuGrid>,
    pub dispersion: Dispersion,
    pub route: RouteChoice,
    pub tol: f64,
    pub eps_sequence: Vec<f64>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub samples: usize,
    pub demo: DemoKind,
    pub a0: Option<f64>,
    pub charge: f64,
    pub mass: f64,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            transition: None,
            transitions: Vec::new(),
            omega: None,
            cutoff: CutoffSpec::Power { nu: 0.5 },
            nu_grid: None,
            dispersion: Dispersion::Linear,
            route: RouteChoice::Frequency,
            tol: 1e-9,
            eps_sequence: DEFAULT_EPS_SEQUENCE.to_vec(),
            format: Format::Json,
            output: None,
            seed: DEFAULT_SEED,
            samples: 200_000,
            demo: DemoKind::All,
            a0: None,
            charge: 1.0,
            mass: 1.0,
        }
    }

    /// Applies one `key = value` setting; keys are the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        let num = |v: &str| v.parse::<f64>().map_err(|_| CliError::Usage(format!("{key}: '{v}' is not a number")));
        let positive = |v: &str| match num(v)? {
            x if x > 0.0 && x.is_finite() => Ok(x),
            x => Err(CliError::Usage(format!("{key} must be positive, got {x}"))),
        };
        match key.trim() {
            "transition" => self.transition = Some(parse_transition(value)?),
            "transitions" => {
                self.transitions = value
                    .split(|c: char| c.is_whitespace() || c == ';')
                    .filter(|s| !s.is_empty())
                    .map(parse_transition)
                    .collect::<Result<_, _>>()?
            }
            "omega" => {
                let w = num(value)?;
                if !w.is_finite() {
                    return Err(CliError::Usage(format!("omega must be finite, got {w}")));
                }
                self.omega = Some(w);
            }
            "power-cutoff" => {
                let nu = num(value)?;
                if !(nu >= 0.0 && nu.is_finite()) {
                    return Err(CliError::Usage(format!("power cutoff ν must be >= 0, got {nu}")));
                }
                self.cutoff = CutoffSpec::Power { nu };
            }
            "radial-cutoff" => {
                if !RADIAL_PRESETS.contains(&value) {
                    return Err(CliError::Usage(format!("unknown radial preset '{value}' (known: {})", RADIAL_PRESETS.join(", "))));
                }
                self.cutoff = CutoffSpec::Radial { preset: value.to_string() };
            }
            "nu-grid" => self.nu_grid = Some(value.parse()?),
            "dispersion" => self.dispersion = value.parse().map_err(|e: crate::Error| CliError::Usage(e.to_string()))?,
            "route" => {
                self.route = match value {
                    "frequency" | "frequency-domain" => RouteChoice::Frequency,
                    "time" | "time-domain" => RouteChoice::Time,
                    other => return Err(CliError::Usage(format!("unknown route '{other}' (frequency or time)"))),
                }
            }
            "tol" => self.tol = positive(value)?,
            "eps" => {
                self.eps_sequence = value.split(',').map(|v| positive(v.trim())).collect::<Result<_, _>>()?;
                if self.eps_sequence.len() < 2 || self.eps_sequence.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(CliError::Usage("eps must list at least two strictly decreasing values".into()));
                }
            }
            "format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => return Err(CliError::Usage(format!("unknown format '{other}' (csv or json)"))),
                }
            }
            "output" => self.output = Some(PathBuf::from(value)),
            "seed" => self.seed = value.parse().map_err(|_| CliError::Usage(format!("seed: '{value}' is not an unsigned integer")))?,
            "samples" => {
                self.samples = value.parse().map_err(|_| CliError::Usage(format!("samples: '{value}' is not a count")))?;
                if self.samples < 64 {
                    return Err(CliError::Usage("samples must be at least 64".into()));
                }
            }
            "demo" => {
                self.demo = match value {
                    "scaling" => DemoKind::Scaling,
                    "second-order" => DemoKind::SecondOrder,
                    "independence" => DemoKind::Independence,
                    "all" => DemoKind::All,
                    other => return Err(CliError::Usage(format!("unknown demo '{other}'"))),
                }
            }
            "a0" => self.a0 = Some(positive(value)?),
            "charge" => self.charge = positive(value)?,
            "mass" => self.mass = positive(value)?,
            other => return Err(CliError::Usage(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<AtomicConstants, CliError> {
        let mut c = AtomicConstants::from_fundamental(1.0, self.mass, self.charge)?;
        if let Some(a0) = self.a0 {
            c = c.with_a0(a0)?;
        }
        Ok(c)
    }

    fn gamma_options(&self) -> Result<GammaOptions, CliError> {
        Ok(GammaOptions::default()
            .with_tol(self.tol)
            .with_eps(&self.eps_sequence)
            .with_constants(self.constants()?))
    }

    /// Output path after applying the output-directory variable.
    pub fn resolved_output(&self, dir: Option<&Path>) -> Option<PathBuf> {
        match (&self.output, dir) {
            (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
            (Some(p), _) => Some(p.clone()),
            (None, Some(d)) => Some(d.join(format!("{}.{}", self.command.as_str(), self.format.extension()))),
            (None, None) => None,
        }
    }
}

fn parse_transition(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Usage(format!("transition must be m,n with m > n >= 1, got '{s}'"));
    let (m, n) = s.split_once(',').ok_or_else(bad)?;
    let m: u32 = m.trim().parse().map_err(|_| bad())?;
    let n: u32 = n.trim().parse().map_err(|_| bad())?;
    if !(n >= 1 && m > n) {
        return Err(bad());
    }
    Ok((m, n))
}

#[derive(Debug, Parser)]
#[command(name = "susceptivity", version, about = "Generalized susceptivity factors γ₋ for hydrogen transitions and form factors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// γ₋ for one transition (or one frequency with --omega).
    Gamma(Flags),
    /// Convergence verdicts of the plain integral and the principal value.
    Classify(Flags),
    /// γ₋ over transitions × ν grid.
    Table(Flags),
    /// Scaling-limit demonstrations.
    Demo(Flags),
    /// Monte-Carlo exclusion-shell check of the principal value.
    OracleCheck(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transition `m,n` with `m > n`.
    #[arg(long)]
    transition: Option<String>,
    /// Transitions for `table`.
    #[arg(long, num_args = 1..)]
    transitions: Vec<String>,
    /// Resonance frequency of a bare form factor.
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<String>,
    /// Power-law form factor `|k|^{-ν}`.
    #[arg(long, allow_hyphen_values = true)]
    power_cutoff: Option<String>,
    /// Named radial preset: gaussian, exponential, lorentzian.
    #[arg(long)]
    radial_cutoff: Option<String>,
    /// `start:stop:step` grid of ν for `table`.
    #[arg(long)]
    nu_grid: Option<String>,
    #[arg(long)]
    dispersion: Option<String>,
    /// `frequency` or `time`.
    #[arg(long)]
    route: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Regularization sequence of the time route, comma separated.
    #[arg(long)]
    eps: Option<String>,
    /// `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Monte-Carlo samples per shell width.
    #[arg(long)]
    samples: Option<String>,
    /// scaling, second-order, independence or all.
    #[arg(long)]
    demo: Option<String>,
    #[arg(long)]
    a0: Option<String>,
    #[arg(long)]
    charge: Option<String>,
    #[arg(long)]
    mass: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let single = [
            ("transition", &self.transition),
            ("omega", &self.omega),
            ("power-cutoff", &self.power_cutoff),
            ("radial-cutoff", &self.radial_cutoff),
            ("nu-grid", &self.nu_grid),
            ("dispersion", &self.dispersion),
            ("route", &self.route),
            ("tol", &self.tol),
            ("eps", &self.eps),
            ("format", &self.format),
            ("output", &self.output),
            ("seed", &self.seed),
            ("samples", &self.samples),
            ("demo", &self.demo),
            ("a0", &self.a0),
            ("charge", &self.charge),
            ("mass", &self.mass),
        ];
        for (k, v) in single {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        }
        if !self.transitions.is_empty() {
            out.push(("transitions", self.transitions.join(" ")));
        }
        out
    }
}

/// Parses command-line arguments (including the program name) into a config.
pub fn parse_args<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    let (kind, flags) = match &cli.command {
        Command::Gamma(f) => (CommandKind::Gamma, f),
        Command::Classify(f) => (CommandKind::Classify, f),
        Command::Table(f) => (CommandKind::Table, f),
        Command::Demo(f) => (CommandKind::Demo, f),
        Command::OracleCheck(f) => (CommandKind::OracleCheck, f),
    };
    let mut config = RunConfig::new(kind);
    if let Some(path) = &flags.config {
        config.apply_file(path)?;
    }
    for (k, v) in flags.pairs() {
        config.set(k, &v)?;
    }
    Ok(config)
}

/// Serialized result of a run and the exit status it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub status: i32,
    pub body: String,
    /// Config echo written next to CSV and table outputs.
    pub sidecar: Option<String>,
}

fn status_of(verdict: PvVerdict) -> i32 {
    match verdict {
        PvVerdict::Finite => EXIT_OK,
        PvVerdict::DivergentEndpoint | PvVerdict::DivergentTail => EXIT_DIVERGENT,
        PvVerdict::Unknown => EXIT_FAILURE,
    }
}

enum Subject {
    Transition(Transition),
    Frequency(f64),
}

impl Subject {
    fn of(config: &RunConfig) -> Result<Self, CliError> {
        match (config.transition, config.omega) {
            (Some(_), Some(_)) => Err(CliError::Usage("give either --transition or --omega, not both".into())),
            (Some((m, n)), None) => Ok(Subject::Transition(Transition::new(m, n).map_err(|e| CliError::Usage(e.to_string()))?)),
            (None, Some(w)) => Ok(Subject::Frequency(w)),
            (None, None) => Err(CliError::Usage(format!("{} needs --transition or --omega", config.command.as_str()))),
        }
    }

    fn target(&self) -> Target {
        match self {
            Subject::Transition(t) => Target::from(*t),
            Subject::Frequency(w) => Target::Frequency(*w),
        }
    }

    fn levels(&self) -> Option<(u32, u32)> {
        match self {
            Subject::Transition(t) => Some((t.upper(), t.lower())),
            Subject::Frequency(_) => None,
        }
    }
}

fn gamma_for(subject: &Subject, cutoff: &Cutoff, config: &RunConfig) -> Result<Susceptivity, CliError> {
    let opts = config.gamma_options()?;
    let disp = config.dispersion;
    Ok(match (subject, config.route) {
        (Subject::Transition(t), RouteChoice::Frequency) => hydrogen_gamma_with(*t, cutoff, disp, &opts)?,
        (Subject::Transition(t), RouteChoice::Time) => hydrogen_gamma_time_domain(*t, cutoff, disp, &opts)?,
        (Subject::Frequency(w), RouteChoice::Frequency) => gamma_minus_with(cutoff, disp, *w, &opts)?,
        (Subject::Frequency(w), RouteChoice::Time) => gamma_minus_time_domain(cutoff, disp, *w, &config.eps_sequence)?,
    })
}

fn record_from(m: u32, n: u32, nu: Option<f64>, g: &Susceptivity) -> TableRecord {
    TableRecord {
        m,
        n,
        nu,
        omega_mn: g.omega,
        re: Some(g.re),
        im: g.im,
        verdict: g.verdict_str().to_string(),
        err: g.im.map(|_| g.error_estimate),
        route: g.route.as_str().to_string(),
    }
}

fn config_json(config: &RunConfig) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(config).map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))
}

fn sidecar(config: &RunConfig) -> Result<String, CliError> {
    to_json(&json!({ "config": config_json(config)? }))
}

fn run_gamma(config: &RunConfig) -> Result<Report, CliError> {
    let subject = Subject::of(config)?;
    let cutoff = config.cutoff.build()?;
    let g = gamma_for(&subject, &cutoff, config)?;
    let status = status_of(g.verdict.principal_value);
    let (m, n) = subject.levels().unwrap_or((0, 0));
    match config.format {
        Format::Json => {
            let body = to_json(&json!({
                "config": config_json(config)?,
                "m": subject.levels().map(|l| l.0),
                "n": subject.levels().map(|l| l.1),
                "nu": config.cutoff.nu(),
                "omega_mn": g.omega,
                "re": g.re,
                "im": g.im,
                "verdict": g.verdict_str(),
                "route": g.route.as_str(),
                "error_estimate": g.error_estimate,
                "convention": g.convention,
                "diagnostics": g.verdict.diagnostics,
            }))?;
            Ok(Report { status, body, sidecar: None })
        }
        Format::Csv => Ok(Report {
            status,
            body: table_csv(&[record_from(m, n, config.cutoff.nu(), &g)]),
            sidecar: Some(sidecar(config)?),
        }),
    }
}

fn run_classify(config: &RunConfig) -> Result<Report, CliError> {
    let subject = Subject::of(config)?;
    let cutoff = config.cutoff.build()?;
    let constants = config.constants()?;
    let target = subject.target();
    let verdict = classify(&ClassifySpec {
        cutoff,
        target,
        dispersion: config.dispersion,
        constants,
    })?;
    let status = status_of(verdict.principal_value);
    let omega = target.frequency(&constants);
    let levels = subject.levels();
    match config.format {
        Format::Json => {
            let body = to_json(&json!({
                "config": config_json(config)?,
                "m": levels.map(|l| l.0),
                "n": levels.map(|l| l.1),
                "nu": config.cutoff.nu(),
                "omega_mn": omega,
                "verdict": verdict.principal_value.as_str(),
                "plain": verdict.plain.as_str(),
                "endpoint_exponent": verdict.endpoint_exponent,
                "tail_exponent": verdict.tail_exponent,
                "resonant_density": verdict.resonant_density,
                "diagnostics": verdict.diagnostics,
            }))?;
            Ok(Report { status, body, sidecar: None })
        }
        Format::Csv => {
            let (m, n) = levels.unwrap_or((0, 0));
            let body = format!(
                "m,n,nu,omega_mn,verdict,plain,endpoint_exponent,tail_exponent\n{m},{n},{},{},{},{},{},{}\n",
                output::csv_number(config.cutoff.nu()),
                fmt17(omega),
                verdict.principal_value.as_str(),
                verdict.plain.as_str(),
                output::csv_number(verdict.endpoint_exponent),
                output::csv_number(verdict.tail_exponent),
            );
            Ok(Report {
                status,
                body,
                sidecar: Some(sidecar(config)?),
            })
        }
    }
}

/// Table rows in input order; rows that fail carry verdict `unknown`.
pub fn table_rows(config: &RunConfig) -> Result<(Vec<TableRecord>, Vec<String>), CliError> {
    let transitions = if config.transitions.is_empty() {
        match config.transition {
            Some(t) => vec![t],
            None => vec![(2, 1), (3, 1), (3, 2)],
        }
    } else {
        config.transitions.clone()
    };
    let cutoffs: Vec<CutoffSpec> = match (&config.nu_grid, &config.cutoff) {
        (Some(_), CutoffSpec::Radial { .. }) => return Err(CliError::Usage("--nu-grid needs a power-law cutoff".into())),
        (Some(grid), _) => grid.values().into_iter().map(|nu| CutoffSpec::Power { nu }).collect(),
        (None, c) => vec![c.clone()],
    };
    let mut jobs = Vec::new();
    for &(m, n) in &transitions {
        let t = Transition::new(m, n).map_err(|e| CliError::Usage(e.to_string()))?;
        for c in &cutoffs {
            jobs.push((t, c.clone()));
        }
    }
    let constants = config.constants()?;
    let results: Vec<(TableRecord, Option<String>)> = jobs
        .par_iter()
        .map(|(t, spec)| {
            let (m, n) = (t.upper(), t.lower());
            let computed = spec.build().and_then(|cutoff| gamma_for(&Subject::Transition(*t), &cutoff, config));
            match computed {
                Ok(g) => (record_from(m, n, spec.nu(), &g), None),
                Err(e) => (
                    TableRecord {
                        m,
                        n,
                        nu: spec.nu(),
                        omega_mn: bohr_frequency(t, &constants),
                        re: None,
                        im: None,
                        verdict: PvVerdict::Unknown.as_str().to_string(),
                        err: None,
                        route: match config.route {
                            RouteChoice::Frequency => "frequency-domain",
                            RouteChoice::Time => "time-domain",
                        }
                        .to_string(),
                    },
                    Some(format!("({m},{n}) {}: {e}", spec.build().map(|c| c.label()).unwrap_or_default())),
                ),
            }
        })
        .collect();
    let (rows, failures): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((rows, failures.into_iter().flatten().collect()))
}

fn run_table(config: &RunConfig) -> Result<Report, CliError> {
    let (rows, failures) = table_rows(config)?;
    for f in &failures {
        eprintln!("warning: {f}");
    }
    let body = match config.format {
        Format::Csv => table_csv(&rows),
        Format::Json => to_json(&rows)?,
    };
    Ok(Report {
        status: if failures.is_empty() { EXIT_OK } else { EXIT_FAILURE },
        body,
        sidecar: Some(sidecar(config)?),
    })
}

/// Named demo tables with their pass flags.
pub fn demo_tables(kind: DemoKind) -> Result<Vec<(&'static str, ConvergenceTable, bool)>, CliError> {
    let mut out = Vec::new();
    let wants = |k: DemoKind| kind == DemoKind::All || kind == k;
    if wants(DemoKind::Scaling) {
        let lambdas = [0.5, 0.25, 0.125];
        let cosine = scaling_limit_demo(|s: f64| (-s * s).exp(), f64::cos, 0.0, &lambdas)?;
        let ok = !cosine.any_flagged();
        out.push(("scaling-gaussian-cosine", cosine, ok));
        let constant = scaling_limit_demo(|s: f64| (-s * s).exp(), |_| 1.0, 0.0, &lambdas)?;
        let ok = !constant.any_flagged();
        out.push(("scaling-gaussian-constant", constant, ok));
    }
    if wants(DemoKind::SecondOrder) {
        let table = second_order_limit(&CorrelationKernel::exponential(1.0), 1.0, &[0.2, 0.1, 0.05])?;
        let ok = !table.any_flagged() && table.observed_order().is_some_and(|p| p >= 1.8);
        out.push(("second-order-exponential", table, ok));
    }
    if wants(DemoKind::Independence) {
        let lambdas = [0.5, 0.25, 0.125, 0.0625];
        let c = CorrelationKernel::exponential(1.0);
        let cross = cross_covariance_decay(1.0, 2.0, &c, &lambdas)?;
        let ok = !cross.any_flagged() && cross.rows.last().is_some_and(|r| r.value.norm() <= 1e-3);
        out.push(("independence-cross", cross, ok));
        let diagonal = cross_covariance_decay(1.0, 1.0, &c, &lambdas)?;
        let ok = !diagonal.any_flagged() && diagonal.rows.last().is_some_and(|r| r.error <= 1e-3);
        out.push(("independence-diagonal", diagonal, ok));
    }
    Ok(out)
}

fn run_demo(config: &RunConfig) -> Result<Report, CliError> {
    let tables = demo_tables(config.demo)?;
    let all_ok = tables.iter().all(|t| t.2);
    let status = if all_ok { EXIT_OK } else { EXIT_FAILURE };
    match config.format {
        Format::Json => {
            let demos: Vec<serde_json::Value> = tables
                .iter()
                .map(|(name, t, ok)| {
                    json!({
                        "demo": name,
                        "limit": { "re": t.limit.re, "im": t.limit.im },
                        "rows": t.rows.iter().map(|r| json!({
                            "lambda": r.lambda,
                            "re": r.value.re,
                            "im": r.value.im,
                            "error": r.error,
                            "flagged": r.flagged,
                            "note": r.note,
                        })).collect::<Vec<_>>(),
                        "observed_order": t.observed_order(),
                        "passed": ok,
                    })
                })
                .collect();
            let body = to_json(&json!({ "config": config_json(config)?, "demos": demos }))?;
            Ok(Report { status, body, sidecar: None })
        }
        Format::Csv => {
            let mut body = String::from("demo,lambda,re,im,limit_re,limit_im,error,flagged\n");
            for (name, t, _) in &tables {
                for r in &t.rows {
                    body.push_str(&format!(
                        "{name},{},{},{},{},{},{},{}\n",
                        fmt17(r.lambda),
                        output::csv_number(Some(r.value.re)),
                        output::csv_number(Some(r.value.im)),
                        fmt17(t.limit.re),
                        fmt17(t.limit.im),
                        output::csv_number(Some(r.error)),
                        r.flagged
                    ));
                }
            }
            Ok(Report {
                status,
                body,
                sidecar: Some(sidecar(config)?),
            })
        }
    }
}

fn run_oracle_check(config: &RunConfig) -> Result<Report, CliError> {
    let subject = Subject::of(config)?;
    let cutoff = config.cutoff.build()?;
    let constants = config.constants()?;
    let (phi, omega): (RadialFn, f64) = match &subject {
        Subject::Transition(t) => (
            hydrogen_squared_element(LevelPair::new(t.upper(), t.lower())?, &cutoff, &constants)?,
            bohr_frequency(t, &constants),
        ),
        Subject::Frequency(w) => (squared_cutoff(&cutoff), *w),
    };
    let density = radial_density(&phi, config.dispersion, omega)?;
    let (pp, pp_verdict) = match pp_integral(&density, config.tol.max(1e-10)) {
        Ok(v) => (Some(v), PvVerdict::Finite),
        Err(crate::Error::DivergentEndpoint { .. }) => (None, PvVerdict::DivergentEndpoint),
        Err(crate::Error::DivergentTail { .. }) => (None, PvVerdict::DivergentTail),
        Err(e) => return Err(e.into()),
    };
    let mc = mc_shell_pp(
        &phi,
        config.dispersion,
        omega,
        &default_shell_eps(omega),
        config.samples,
        &McOptions::default().with_seed(config.seed),
    )?;
    let difference = pp.map(|p| mc.value - p);
    let agree = match difference {
        Some(d) => !mc.divergence_flag && d.abs() <= 3.0 * mc.stderr,
        None => mc.divergence_flag,
    };
    let status = match (pp_verdict.is_divergent(), agree) {
        (false, true) => EXIT_OK,
        (true, true) => EXIT_DIVERGENT,
        _ => EXIT_FAILURE,
    };
    match config.format {
        Format::Json => {
            let body = to_json(&json!({
                "config": config_json(config)?,
                "omega": omega,
                "pp": pp,
                "pp_verdict": pp_verdict.as_str(),
                "mc": mc,
                "difference": difference,
                "agree": agree,
            }))?;
            Ok(Report { status, body, sidecar: None })
        }
        Format::Csv => {
            let mut body = String::from("eps,value,stderr,samples,max_term_fraction\n");
            for e in &mc.estimates {
                body.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt17(e.eps),
                    fmt17(e.value),
                    fmt17(e.stderr),
                    e.samples,
                    fmt17(e.max_term_fraction)
                ));
            }
            Ok(Report {
                status,
                body,
                sidecar: Some(sidecar(config)?),
            })
        }
    }
}

/// Executes a resolved config without writing anything.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    match config.command {
        CommandKind::Gamma => run_gamma(config),
        CommandKind::Classify => run_classify(config),
        CommandKind::Table => run_table(config),
        CommandKind::Demo => run_demo(config),
        CommandKind::OracleCheck => run_oracle_check(config),
    }
}

/// Entry point of the binary: parses, runs, writes, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Err(e) = Cli::try_parse_from(&args) {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
            print!("{e}");
            return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_FAILURE } else { EXIT_OK };
        }
    }
    let config = match parse_args(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_FAILURE;
        }
    };
    if !config.constants().is_ok_and(|c| c.is_atomic_units()) {
        eprintln!(
            "warning: non-atomic constants in use (a0 = {:?}, charge = {}, mass = {}); results are not in atomic units",
            config.a0, config.charge, config.mass
        );
    }
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_FAILURE;
        }
    };
    let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let path = config.resolved_output(dir.as_deref());
    if let Err(e) = output::write_output(&report.body, path.as_deref()) {
        eprintln!("{e}");
        return EXIT_FAILURE;
    }
    if let Some(meta) = &report.sidecar {
        match &path {
            Some(p) => {
                if let Err(e) = output::write_output(meta, Some(&sidecar_path(p))) {
                    eprintln!("{e}");
                    return EXIT_FAILURE;
                }
            }
            None => eprint!("# config {meta}"),
        }
    }
    report.status
}
