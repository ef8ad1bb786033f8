//! Experiment configuration: a TOML file with sections, every key of which
//! can be overridden from the command line as `section.key=value`.
//!
//! ```toml
//! output = "out/figure1"
//!
//! [parameters]
//! p = 0.9
//! q = 0.8
//! # or: schedule = "q_over_n_plus_one" | "harmonic" (with alpha, beta)
//!
//! [function]
//! polynomial = [2015.0, -12.0, 18.0]   # ascending degree
//! # or: named = "sin" | tabulated = { x = [...], y = [...] }
//! growth_bound = 2015.0                  # C_f, needed by "bounds"
//!
//! [run]
//! n_list = [10, 20, 50, 100]
//! outputs = ["curves", "moments", "convergence", "bounds", "plot"]
//!
//! [grid]
//! start = 0.0
//! stop = 5.0
//! points = 51
//!
//! [policy]
//! rel_tol = 1e-12
//! abs_tol = 1e-14
//! max_terms = 10000
//!
//! [bounds]
//! kappa = 2.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analysis::{EvalGrid, ParameterSchedule, ParameterSource};
use crate::calculus::{PQPair, TruncationPolicy};
use crate::error::{Error, Result};
use crate::function::FunctionSpec;

pub const DEFAULT_N_LIST: [u32; 4] = [10, 20, 50, 100];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    output: Option<PathBuf>,
    #[serde(default)]
    parameters: RawParameters,
    #[serde(default)]
    function: RawFunction,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    policy: RawPolicy,
    #[serde(default)]
    bounds: RawBounds,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameters {
    p: Option<f64>,
    q: Option<f64>,
    schedule: Option<String>,
    alpha: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    polynomial: Option<Vec<f64>>,
    named: Option<String>,
    tabulated: Option<RawTable>,
    growth_bound: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n_list: Option<Vec<i64>>,
    outputs: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_terms: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    kappa: Option<f64>,
}

/// Which files a run writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutputSet {
    pub curves: bool,
    pub moments: bool,
    pub convergence: bool,
    pub bounds: bool,
    pub plot: bool,
}

impl OutputSet {
    fn parse(names: &[String], diags: &mut Vec<String>) -> Self {
        let mut out = OutputSet::default();
        for name in names {
            match name.as_str() {
                "curves" => out.curves = true,
                "moments" => out.moments = true,
                "convergence" => out.convergence = true,
                "bounds" | "bound-report" => out.bounds = true,
                "plot" => out.plot = true,
                other => diags.push(format!(
                    "run.outputs: unknown output '{other}' (known: curves, moments, convergence, bounds, plot)"
                )),
            }
        }
        out
    }

    fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        for (on, name) in [
            (self.curves, "curves"),
            (self.moments, "moments"),
            (self.convergence, "convergence"),
            (self.bounds, "bounds"),
            (self.plot, "plot"),
        ] {
            if on {
                v.push(name);
            }
        }
        v
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: ParameterSource,
    pub function: FunctionSpec,
    pub n_list: Vec<u32>,
    pub grid: EvalGrid,
    pub policy: TruncationPolicy,
    pub outputs: OutputSet,
    pub kappa: f64,
    pub output_dir: Option<PathBuf>,
}

/// Human-readable violations found while validating a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics(pub Vec<String>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {d}")?;
        }
        Ok(())
    }
}

impl From<Diagnostics> for Error {
    fn from(d: Diagnostics) -> Self {
        Error::Config(format!("invalid configuration:\n{d}"))
    }
}

/// Applies `section.key=value` overrides to the document. Values are read as
/// TOML literals and fall back to plain strings.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<(), Diagnostics> {
    let mut diags = Vec::new();
    for ov in overrides {
        let Some((key, value)) = ov.split_once('=') else {
            diags.push(format!("override '{ov}' is not of the form key=value"));
            continue;
        };
        let value = match toml::from_str::<toml::Table>(&format!("v = {}", value.trim())) {
            Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(String::new())),
            Err(_) => toml::Value::String(value.trim().to_string()),
        };
        let path: Vec<&str> = key.trim().split('.').collect();
        if let Err(part) = set_path(doc, &path, value) {
            diags.push(format!("override '{key}': '{part}' is not a section"));
        }
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(Diagnostics(diags))
    }
}

fn set_path(table: &mut toml::Table, path: &[&str], value: toml::Value) -> Result<(), String> {
    match path {
        [] => Ok(()),
        [last] => {
            table.insert(last.to_string(), value);
            Ok(())
        }
        [head, rest @ ..] => match table
            .entry(head.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        {
            toml::Value::Table(t) => set_path(t, rest, value),
            _ => Err(head.to_string()),
        },
    }
}

/// Parses and validates config text.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, Diagnostics> {
    let raw: RawConfig = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| Diagnostics(vec![format!("parse error: {e}")]))?
    } else {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Diagnostics(vec![format!("parse error: {e}")]))?;
        apply_overrides(&mut doc, overrides)?;
        doc.try_into().map_err(|e| Diagnostics(vec![format!("after overrides: {e}")]))?
    };
    validate_raw(raw)
}

/// Reads, parses and validates a config file.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, Diagnostics> {
    load_config(path, &[])
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, Diagnostics> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Diagnostics(vec![format!("cannot read {}: {e}", path.display())]))?;
    let mut cfg = parse_config(&text, overrides)?;
    if cfg.name.is_empty() {
        cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(cfg)
}

fn validate_raw(raw: RawConfig) -> Result<ExperimentConfig, Diagnostics> {
    let mut diags = Vec::new();

    let outputs = OutputSet::parse(
        &raw.run
            .outputs
            .unwrap_or_else(|| vec!["curves".into(), "moments".into(), "convergence".into()]),
        &mut diags,
    );

    let source = parameter_source(&raw.parameters, &mut diags);
    let function = function_spec(&raw.function, &mut diags);

    let n_list: Vec<u32> = match raw.run.n_list {
        None => DEFAULT_N_LIST.to_vec(),
        Some(list) => {
            if list.is_empty() {
                diags.push("run.n_list must not be empty".into());
            }
            if list.windows(2).any(|w| w[1] <= w[0]) {
                diags.push("run.n_list must be strictly increasing".into());
            }
            list.iter()
                .filter_map(|&n| match u32::try_from(n) {
                    Ok(n) if n >= 1 => Some(n),
                    _ => {
                        diags.push(format!("run.n_list: n must be a positive integer, got {n}"));
                        None
                    }
                })
                .collect()
        }
    };
    if outputs.moments || outputs.bounds {
        for &n in n_list.iter().filter(|&&n| n <= 2) {
            diags.push(format!(
                "run.n_list: n = {n} is too small; moments of order 2 are defined only for n > 2"
            ));
        }
    }
    if let Some(deg) = function.as_ref().and_then(|f| f.polynomial_degree()) {
        if outputs.curves || outputs.convergence || outputs.bounds {
            for &n in n_list.iter().filter(|&&n| n as usize <= deg && n > 2) {
                diags.push(format!(
                    "run.n_list: n = {n} is too small for a degree-{deg} polynomial; D_n needs n > {deg}"
                ));
            }
        }
    }
    if let Some(src) = &source {
        for &n in &n_list {
            if let Err(e) = src.pair(n) {
                diags.push(format!("parameters at n = {n}: {e}"));
            }
        }
        if let (ParameterSource::Fixed(pair), Some(f)) = (src, &function) {
            if pair.is_classical() && f.polynomial_coefficients().is_none() && (outputs.curves || outputs.convergence || outputs.bounds) {
                diags.push(
                    "parameters: p = q = 1 evaluates D_n only for polynomials; Jackson quadrature needs 0 < q < p <= 1".into(),
                );
            }
        }
    }

    let grid = EvalGrid::new(
        raw.grid.start.unwrap_or(0.0),
        raw.grid.stop.unwrap_or(5.0),
        match raw.grid.points {
            None => 51,
            Some(p) if p >= 2 => p as usize,
            Some(p) => {
                diags.push(format!("grid.points must be at least 2, got {p}"));
                2
            }
        },
    )
    .map_err(|e| diags.push(format!("grid: {e}")))
    .ok();

    let defaults = TruncationPolicy::default();
    let max_terms = match raw.policy.max_terms {
        None => defaults.max_terms,
        Some(m) if m >= 1 => m as usize,
        Some(m) => {
            diags.push(format!("policy.max_terms must be at least 1, got {m}"));
            1
        }
    };
    let policy = TruncationPolicy::new(
        raw.policy.rel_tol.unwrap_or(defaults.rel_tol),
        raw.policy.abs_tol.unwrap_or(defaults.abs_tol),
        max_terms,
    )
    .map_err(|e| diags.push(format!("policy: {e}")))
    .ok();

    let kappa = raw.bounds.kappa.unwrap_or(2.0);
    if outputs.bounds {
        if !(kappa > 0.0 && kappa.is_finite()) {
            diags.push(format!("bounds.kappa must be positive, got {kappa}"));
        }
        if function.as_ref().is_some_and(|f| f.growth_bound().is_none()) {
            diags.push("function.growth_bound (C_f) is required for the bounds output".into());
        }
    }

    match (source, function, grid, policy) {
        (Some(source), Some(function), Some(grid), Some(policy)) if diags.is_empty() => Ok(ExperimentConfig {
            name: raw.name.unwrap_or_default(),
            source,
            function,
            n_list,
            grid,
            policy,
            outputs,
            kappa,
            output_dir: raw.output,
        }),
        _ => Err(Diagnostics(diags)),
    }
}

fn parameter_source(raw: &RawParameters, diags: &mut Vec<String>) -> Option<ParameterSource> {
    match (&raw.schedule, raw.p, raw.q) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            diags.push("parameters: give either p and q or a schedule, not both".into());
            None
        }
        (Some(name), None, None) => match name.as_str() {
            "q_over_n_plus_one" => Some(ParameterSource::Schedule(ParameterSchedule::QOverNPlusOne)),
            "harmonic" => match (raw.alpha, raw.beta) {
                (Some(a), Some(b)) => ParameterSchedule::harmonic(a, b)
                    .map(ParameterSource::Schedule)
                    .map_err(|e| diags.push(format!("parameters: {e}")))
                    .ok(),
                _ => {
                    diags.push("parameters: the harmonic schedule needs alpha and beta".into());
                    None
                }
            },
            other => {
                diags.push(format!(
                    "parameters.schedule: unknown schedule '{other}' (known: q_over_n_plus_one, harmonic)"
                ));
                None
            }
        },
        (None, Some(p), Some(q)) => match PQPair::new(p, q).and_then(|pair| pair.require_operator_regime().map(|_| pair)) {
            Ok(pair) => Some(ParameterSource::Fixed(pair)),
            Err(e) => {
                diags.push(format!(
                    "parameters: p = {p}, q = {q} violates 0 < q < p <= 1 (or p = q = 1): {e}"
                ));
                None
            }
        },
        (None, _, _) => {
            diags.push("parameters: both p and q are required when no schedule is given".into());
            None
        }
    }
}

fn function_spec(raw: &RawFunction, diags: &mut Vec<String>) -> Option<FunctionSpec> {
    let given = [raw.polynomial.is_some(), raw.named.is_some(), raw.tabulated.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if given != 1 {
        diags.push("function: give exactly one of polynomial, named, tabulated".into());
        return None;
    }
    let spec = if let Some(c) = &raw.polynomial {
        FunctionSpec::polynomial(c.clone())
    } else if let Some(name) = &raw.named {
        FunctionSpec::named_by_id(name)
    } else {
        let t = raw.tabulated.as_ref().expect("counted above");
        FunctionSpec::tabulated(t.x.clone(), t.y.clone())
    };
    let spec = match raw.growth_bound {
        Some(c) => spec.and_then(|s| s.with_growth_bound(c)),
        None => spec,
    };
    spec.map_err(|e| diags.push(format!("function: {e}"))).ok()
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name        {}", self.name)?;
        match &self.source {
            ParameterSource::Fixed(p) => writeln!(f, "parameters  p = {}, q = {}", p.p(), p.q())?,
            ParameterSource::Schedule(s) => writeln!(f, "parameters  schedule {s:?}")?,
        }
        writeln!(f, "function    {}", self.function)?;
        if let Some(c) = self.function.growth_bound() {
            writeln!(f, "growth      C_f = {c}")?;
        }
        writeln!(f, "n_list      {:?}", self.n_list)?;
        writeln!(
            f,
            "grid        [{}, {}] with {} points",
            self.grid.start(),
            self.grid.stop(),
            self.grid.len()
        )?;
        writeln!(
            f,
            "policy      rel_tol = {}, abs_tol = {}, max_terms = {}",
            self.policy.rel_tol, self.policy.abs_tol, self.policy.max_terms
        )?;
        if self.outputs.bounds {
            writeln!(f, "kappa       {}", self.kappa)?;
        }
        write!(f, "outputs     {}", self.outputs.names().join(", "))
    }
}
