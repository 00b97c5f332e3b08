//! Parameter sweeps and their CSV/JSON serialization.
//!
//! A [`SweepConfig`] names one command (a single point, a sweep over the
//! variance, distance or reconciliation efficiency, or a tolerable-noise scan
//! over distance) plus the fixed parameters. [`run_sweep`] evaluates every
//! grid point and returns a [`Table`] whose column set depends only on the
//! command and on whether `T` is optimized.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Case, ChannelScenario, DEFAULT_KAPPA};
use crate::error::Error;
use crate::keyrate::{plob_bound, secret_key_rate, KeyRateResult};
use crate::optimizer::{maximize_over_t, noise_threshold, variance_to_alpha_sq, Protocol, TSearch, DEFAULT_T_RANGE};

/// Reconciliation efficiency used when none is given.
pub const DEFAULT_BETA: f64 = 0.95;
/// Excess noise per leg used when none is given (SNU).
pub const DEFAULT_XI: f64 = 0.002;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("evaluation failed at row {row} ({axis} = {value}): {source}")]
    Evaluation {
        row: usize,
        axis: &'static str,
        value: f64,
        #[source]
        source: Error,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Config(String),
}

impl SweepError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Usage(_) | SweepError::Config(_) => 2,
            SweepError::Evaluation { .. } | SweepError::Io { .. } => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> SweepError {
    SweepError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Point,
    SweepVariance,
    SweepDistance,
    NoiseThreshold,
    SweepBeta,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Point => "point",
            Command::SweepVariance => "sweep-variance",
            Command::SweepDistance => "sweep-distance",
            Command::NoiseThreshold => "noise-threshold",
            Command::SweepBeta => "sweep-beta",
        }
    }

    /// Column that carries the swept value, if any.
    pub fn axis(self) -> Option<&'static str> {
        match self {
            Command::Point => None,
            Command::SweepVariance => Some("v"),
            Command::SweepDistance | Command::NoiseThreshold => Some("distance_km"),
            Command::SweepBeta => Some("beta"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Inclusive arithmetic grid `start, start + step, …, ≤ stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(usage("range bounds must be finite"));
        }
        if self.step <= 0.0 {
            return Err(usage(format!("range step must be > 0, got {}", self.step)));
        }
        if self.start >= self.stop {
            return Err(usage(format!("range start {} must be below stop {}", self.start, self.stop)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl std::str::FromStr for Range {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(usage(format!("range must be START:STOP:STEP, got {s:?}")));
        };
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("invalid number {p:?} in range {s:?}")))
        };
        let range = Range { start: num(start)?, stop: num(stop)?, step: num(step)? };
        range.validate()?;
        Ok(range)
    }
}

/// A fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub command: Command,
    pub protocol: Protocol,
    pub case: Case,
    pub v: Option<f64>,
    pub t: Option<f64>,
    pub xi: f64,
    pub beta: f64,
    pub kappa: f64,
    pub distance: Option<f64>,
    pub range: Option<Range>,
    pub optimize_t: bool,
    pub strict_bound: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl SweepConfig {
    pub fn new(command: Command, protocol: Protocol, case: Case) -> Self {
        Self {
            command,
            protocol,
            case,
            v: None,
            t: None,
            xi: DEFAULT_XI,
            beta: DEFAULT_BETA,
            kappa: DEFAULT_KAPPA,
            distance: None,
            range: None,
            optimize_t: false,
            strict_bound: false,
            output: None,
            format: Format::Csv,
        }
    }

    /// Layer `overrides` onto `self`; only fields present in `overrides` change.
    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { self.$f = v; } )* };
        }
        macro_rules! take_opt {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { self.$f = Some(v); } )* };
        }
        take!(command, protocol, case, xi, beta, kappa, optimize_t, strict_bound, format);
        take_opt!(v, t, distance, range, output);
    }

    /// Apply the protocol rules, fill defaults, and reject inconsistent settings.
    pub fn normalized(mut self) -> Result<Self, SweepError> {
        match self.protocol {
            Protocol::Original => {
                self.t = Some(1.0);
                self.optimize_t = false;
            }
            Protocol::Zpc => {
                if self.t.is_none() {
                    self.optimize_t = true;
                }
                if self.optimize_t {
                    self.t = None;
                }
            }
        }
        if self.v.is_none() {
            self.v = Some(self.protocol.reference_variance(self.case));
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), SweepError> {
        let check = |name: &str, x: f64, ok: bool, want: &str| {
            if x.is_finite() && ok {
                Ok(())
            } else {
                Err(usage(format!("--{name} must be {want}, got {x}")))
            }
        };
        check("xi", self.xi, self.xi >= 0.0, ">= 0")?;
        check("beta", self.beta, self.beta > 0.0 && self.beta <= 1.0, "in (0, 1]")?;
        check("kappa", self.kappa, self.kappa > 0.0, "> 0")?;
        if let Some(v) = self.v {
            check("v", v, v >= 1.0, ">= 1")?;
        }
        if let Some(t) = self.t {
            check("t", t, t > 0.0 && t <= 1.0, "in (0, 1]")?;
        }
        if let Some(d) = self.distance {
            check("distance", d, d >= 0.0, ">= 0")?;
        }

        let cmd = self.command.as_str();
        match (self.command, &self.range) {
            (Command::Point, Some(_)) => return Err(usage("point takes no --range")),
            (Command::SweepVariance | Command::SweepDistance | Command::SweepBeta, None) => {
                return Err(usage(format!("{cmd} needs --range START:STOP:STEP")))
            }
            (Command::NoiseThreshold, None) if self.distance.is_none() => {
                return Err(usage("noise-threshold needs --range over distance or --distance"))
            }
            _ => {}
        }
        if let Some(r) = &self.range {
            r.validate()?;
            match self.command {
                Command::SweepVariance if r.start < 1.0 => return Err(usage("variance range must start at >= 1")),
                Command::SweepDistance | Command::NoiseThreshold if r.start < 0.0 => {
                    return Err(usage("distance range must start at >= 0"))
                }
                Command::SweepBeta if r.start <= 0.0 || r.stop > 1.0 + 1e-12 => {
                    return Err(usage("beta range must lie in (0, 1]"))
                }
                _ => {}
            }
        }
        if matches!(self.command, Command::Point | Command::SweepVariance | Command::SweepBeta) && self.distance.is_none() {
            return Err(usage(format!("{cmd} needs --distance")));
        }
        if self.command == Command::NoiseThreshold && self.protocol == Protocol::Zpc && !self.optimize_t {
            return Err(usage("noise-threshold always optimizes T for the zpc protocol; drop --t"));
        }
        Ok(())
    }

    fn t_search(&self) -> TSearch {
        TSearch { range: DEFAULT_T_RANGE, strict_bound: self.strict_bound }
    }
}

/// Partial configuration as read from a JSON file or assembled from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub command: Option<Command>,
    pub protocol: Option<Protocol>,
    pub case: Option<Case>,
    pub v: Option<f64>,
    pub t: Option<f64>,
    pub xi: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub distance: Option<f64>,
    pub range: Option<Range>,
    pub optimize_t: Option<bool>,
    pub strict_bound: Option<bool>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ConfigOverrides {
    /// Parse a config file: either a bare config object or a previous JSON
    /// output, whose `metadata.config` is reused.
    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        let inner = match value.get("metadata").and_then(|m| m.get("config")) {
            Some(cfg) => cfg.clone(),
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| SweepError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path).map_err(|source| SweepError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Bool(bool),
    Text(&'static str),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => (*s).to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, serde_json::Value::Number),
            Cell::Bool(b) => serde_json::Value::Bool(*b),
            Cell::Text(s) => serde_json::Value::String((*s).to_string()),
        }
    }
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rows of one run, in ascending order of the swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub config: SweepConfig,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

const RESULT_COLUMNS: [&str; 14] = [
    "alpha_sq", "p_d", "a", "b", "c", "theta", "zeta", "nu1", "nu2", "nu3", "i_ab", "chi_be", "key_rate", "within_bound",
];

/// Column names for a normalized config.
pub fn columns_for(config: &SweepConfig) -> Vec<&'static str> {
    let mut cols = vec!["protocol", "case", "v", "distance_km"];
    if config.command == Command::NoiseThreshold {
        cols.extend(["beta", "xi_threshold"]);
        return cols;
    }
    cols.extend(["xi", "beta", if config.optimize_t { "t_opt" } else { "t" }]);
    cols.extend(RESULT_COLUMNS);
    if config.command == Command::SweepDistance {
        cols.push("plob");
    }
    cols
}

fn result_cells(r: &KeyRateResult) -> [Cell; 14] {
    [
        Cell::Num(r.alpha_sq),
        Cell::Num(r.p_d),
        Cell::Num(r.cov.a),
        Cell::Num(r.cov.b),
        Cell::Num(r.cov.c),
        Cell::Num(r.theta),
        Cell::Num(r.zeta),
        Cell::Num(r.nu1),
        Cell::Num(r.nu2),
        Cell::Num(r.nu3),
        Cell::Num(r.i_ab),
        Cell::Num(r.chi_be),
        Cell::Num(r.key_rate),
        Cell::Bool(r.within_bound),
    ]
}

struct Point {
    v: f64,
    distance: f64,
    beta: f64,
}

fn evaluate(config: &SweepConfig, p: &Point) -> crate::Result<Vec<Cell>> {
    let alpha_sq = variance_to_alpha_sq(p.v)?;
    let scenario = ChannelScenario::for_case(config.case, p.distance, config.xi)?.with_kappa(config.kappa)?;
    let mut row = vec![
        Cell::Text(config.protocol.as_str()),
        Cell::Text(config.case.as_str()),
        Cell::Num(p.v),
        Cell::Num(p.distance),
    ];
    if config.command == Command::NoiseThreshold {
        let thr = noise_threshold(p.v, config.protocol, &scenario, p.beta, &config.t_search())?;
        row.extend([Cell::Num(p.beta), Cell::Num(thr)]);
        return Ok(row);
    }
    let t = if config.optimize_t {
        maximize_over_t(alpha_sq, &scenario, p.beta, &config.t_search())?.arg_opt
    } else {
        config.t.unwrap_or(1.0)
    };
    let result = secret_key_rate(alpha_sq, t, &scenario, p.beta)?;
    row.extend([Cell::Num(config.xi), Cell::Num(p.beta), Cell::Num(t)]);
    row.extend(result_cells(&result));
    if config.command == Command::SweepDistance {
        let plob = match plob_bound(&scenario) {
            Ok(x) => x,
            Err(Error::Divergence) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        row.push(Cell::Num(plob));
    }
    Ok(row)
}

/// Evaluate every grid point of `config`. Points may be computed in parallel;
/// rows come back in grid order.
pub fn run_sweep(config: SweepConfig) -> Result<Table, SweepError> {
    let config = config.normalized()?;
    let v = config.v.expect("normalized config has a variance");
    let distance = config.distance.unwrap_or(0.0);
    let axis_values = config.range.map(|r| r.values()).unwrap_or_else(|| vec![distance]);
    let points: Vec<Point> = match config.command {
        Command::Point => vec![Point { v, distance, beta: config.beta }],
        Command::SweepVariance => axis_values.iter().map(|&v| Point { v, distance, beta: config.beta }).collect(),
        Command::SweepDistance | Command::NoiseThreshold => {
            axis_values.iter().map(|&d| Point { v, distance: d, beta: config.beta }).collect()
        }
        Command::SweepBeta => axis_values.iter().map(|&b| Point { v, distance, beta: b }).collect(),
    };
    let results: Vec<crate::Result<Vec<Cell>>> = points.par_iter().map(|p| evaluate(&config, p)).collect();
    let axis = config.command.axis().unwrap_or("v");
    let mut rows = Vec::with_capacity(results.len());
    for (i, (res, p)) in results.into_iter().zip(&points).enumerate() {
        let value = match config.command {
            Command::Point | Command::SweepVariance => p.v,
            Command::SweepDistance | Command::NoiseThreshold => p.distance,
            Command::SweepBeta => p.beta,
        };
        rows.push(res.map_err(|source| SweepError::Evaluation { row: i, axis, value, source })?);
    }
    Ok(Table { columns: columns_for(&config), config, rows })
}

/// Serialize `table` in `format`.
pub fn render(table: &Table, format: Format) -> Result<String, SweepError> {
    if table.rows.is_empty() {
        return Err(usage("nothing to write: the table has no rows"));
    }
    match format {
        Format::Csv => {
            let mut out = table.columns.join(",");
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = table
                .rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, serde_json::Value> =
                        table.columns.iter().zip(row).map(|(c, cell)| ((*c).to_string(), cell.json())).collect();
                    serde_json::Value::Object(obj)
                })
                .collect();
            let doc = serde_json::json!({
                "metadata": {
                    "config": table.config,
                    "version": env!("CARGO_PKG_VERSION"),
                    "columns": table.columns,
                },
                "rows": rows,
            });
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| SweepError::Config(e.to_string()))?;
            text.push('\n');
            Ok(text)
        }
    }
}

/// Write `table` to `path`.
pub fn write_output(table: &Table, format: Format, path: &Path) -> Result<(), SweepError> {
    let text = render(table, format)?;
    std::fs::write(path, text).map_err(|source| SweepError::Io { path: path.to_path_buf(), source })
}
