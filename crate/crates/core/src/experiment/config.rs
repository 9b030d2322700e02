//! Sweep configuration files.
//!
//! Flat `key = value` lines; `#` starts a comment. A value is a scalar or a
//! bracketed comma-separated list, and list keys also accept a bare scalar.
//!
//! ```text
//! name = fig5                     # optional, defaults to the file stem
//! N = [2, 3, 4..6]                # required; a..b is an inclusive range
//! spacing = [0.5, 0.25, 0.1]      # required, wavelengths
//! angles = [end-fire, pi/2:0]     # required; preset or alpha_tx:alpha_rx
//! gamma_loss = [0, 0.01]          # default [0]
//! methods = [Decoupled, ElementWise]   # required
//! gamma_dr = 1                    # default 1
//! gamma_rs = 1                    # default 1
//! R = 50                          # default 50
//! max_sweeps = 500                # default 500
//! tol = 1e-10                     # default 1e-10
//! refactor_every = 10             # default 10
//! x_max = 1e9                     # default 1e9
//! grid_points = 72                # default 72
//! allow_small_spacing = false     # default false
//! output = fig5.csv               # default <name>.csv
//! ```
//!
//! Angle presets: `front-fire`, `end-fire`, `corner`, `oblique`. Explicit
//! angles are radians and may use `pi`, e.g. `pi/2`, `0.25pi`, `3*pi/4`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use crate::baselines::MethodId;
use crate::channel::{Geometry, Scenario, DEFAULT_RESISTANCE};
use crate::decoupling::GainOptions;
use crate::elementwise::{Objective, OptimizerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn missing(key: &str) -> Self {
        ConfigError {
            line: None,
            key: Some(key.to_string()),
            message: "required key is missing".into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key '{k}': {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key '{k}': {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A named `(alpha_tx, alpha_rx)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AnglePair {
    pub label: String,
    pub alpha_tx: f64,
    pub alpha_rx: f64,
}

/// One point of the Cartesian product of the sweep axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInstance {
    pub id: usize,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub n_values: Vec<usize>,
    pub spacings: Vec<f64>,
    pub angles: Vec<AnglePair>,
    pub gamma_losses: Vec<f64>,
    pub gamma_dr: f64,
    pub gamma_rs: f64,
    pub r: f64,
    pub methods: Vec<MethodId>,
    pub optimizer: OptimizerConfig,
    pub grid_points: usize,
    pub gain: GainOptions,
    /// File name of the CSV inside the output directory.
    pub output: String,
}

impl SweepSpec {
    /// Scenario instances in the order N, spacing, angles, gamma_loss
    /// (last axis fastest); ids are positions in that order.
    pub fn scenarios(&self) -> Vec<ScenarioInstance> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &spacing in &self.spacings {
                for angle in &self.angles {
                    for &gamma_loss in &self.gamma_losses {
                        let mut s = Scenario::siso(
                            n,
                            spacing,
                            Geometry::Custom {
                                alpha_tx: angle.alpha_tx,
                                alpha_rx: angle.alpha_rx,
                            },
                        );
                        s.gamma_dr = self.gamma_dr;
                        s.gamma_rs = self.gamma_rs;
                        s.gamma_loss = gamma_loss;
                        s.r = self.r;
                        out.push(ScenarioInstance {
                            id: out.len(),
                            scenario: s,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("sweep");
        parse_config_named(&text, stem)
    }
}

/// Parse a configuration; the spec is named `sweep` unless `name` is given.
pub fn parse_config(text: &str) -> Result<SweepSpec, ConfigError> {
    parse_config_named(text, "sweep")
}

pub fn parse_config_named(text: &str, default_name: &str) -> Result<SweepSpec, ConfigError> {
    let mut seen = HashSet::new();
    let mut name = None;
    let mut n_values = None;
    let mut spacings = None;
    let mut angles = None;
    let mut gamma_losses = None;
    let mut methods = None;
    let mut output = None;
    let mut gamma_dr = 1.0;
    let mut gamma_rs = 1.0;
    let mut r = DEFAULT_RESISTANCE;
    let mut optimizer = OptimizerConfig {
        objective: Objective::SisoGain,
        ..OptimizerConfig::default()
    };
    let mut grid_points = 72;
    let mut gain = GainOptions::default();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError {
            line: Some(line),
            key: None,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let key = key.trim();
        let value = Value::parse(value.trim()).map_err(|m| ConfigError::at(line, key, m))?;
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::at(line, key, "duplicate key"));
        }
        let err = |m: String| ConfigError::at(line, key, m);
        match key {
            "name" => name = Some(value.scalar().map_err(err)?.to_string()),
            "output" => output = Some(value.scalar().map_err(err)?.to_string()),
            "N" => n_values = Some(parse_counts(&value).map_err(err)?),
            "spacing" => spacings = Some(value.items().iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>, _>>().map_err(err)?),
            "gamma_loss" => gamma_losses = Some(value.items().iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>, _>>().map_err(err)?),
            "angles" => angles = Some(value.items().iter().map(|s| parse_angle_pair(s)).collect::<Result<Vec<_>, _>>().map_err(err)?),
            "methods" => methods = Some(value.items().iter().map(|s| s.parse::<MethodId>()).collect::<Result<Vec<_>, _>>().map_err(err)?),
            "gamma_dr" => gamma_dr = parse_f64(value.scalar().map_err(err)?).map_err(err)?,
            "gamma_rs" => gamma_rs = parse_f64(value.scalar().map_err(err)?).map_err(err)?,
            "R" => r = parse_f64(value.scalar().map_err(err)?).map_err(err)?,
            "tol" => optimizer.tol = parse_f64(value.scalar().map_err(err)?).map_err(err)?,
            "x_max" => optimizer.x_max = parse_f64(value.scalar().map_err(err)?).map_err(err)?,
            "max_sweeps" => optimizer.max_sweeps = parse_usize(value.scalar().map_err(err)?).map_err(err)?,
            "refactor_every" => optimizer.refactor_every = parse_usize(value.scalar().map_err(err)?).map_err(err)?,
            "grid_points" => grid_points = parse_usize(value.scalar().map_err(err)?).map_err(err)?,
            "allow_small_spacing" => gain.allow_small_spacing = parse_bool(value.scalar().map_err(err)?).map_err(err)?,
            _ => return Err(ConfigError::at(line, key, "unknown key")),
        }
    }

    let n_values = n_values.ok_or_else(|| ConfigError::missing("N"))?;
    let spacings = spacings.ok_or_else(|| ConfigError::missing("spacing"))?;
    let angles = angles.ok_or_else(|| ConfigError::missing("angles"))?;
    let methods = methods.ok_or_else(|| ConfigError::missing("methods"))?;
    let gamma_losses = gamma_losses.unwrap_or_else(|| vec![0.0]);
    let name = name.unwrap_or_else(|| default_name.to_string());
    let output = output.unwrap_or_else(|| format!("{name}.csv"));

    let invalid = |key: &str, message: &str| ConfigError {
        line: None,
        key: Some(key.to_string()),
        message: message.to_string(),
    };
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(invalid("N", "needs at least one positive element count"));
    }
    if spacings.is_empty() || spacings.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(invalid("spacing", "needs at least one positive spacing"));
    }
    if angles.is_empty() {
        return Err(invalid("angles", "needs at least one angle pair"));
    }
    if gamma_losses.is_empty() || gamma_losses.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
        return Err(invalid("gamma_loss", "needs nonnegative loss factors"));
    }
    if methods.is_empty() {
        return Err(invalid("methods", "needs at least one method"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("R", "must be positive"));
    }
    if !(gamma_dr >= 0.0) || !(gamma_rs >= 0.0) {
        return Err(invalid("gamma_dr", "pathloss factors must be nonnegative"));
    }
    if grid_points == 0 {
        return Err(invalid("grid_points", "must be positive"));
    }
    optimizer
        .validate()
        .map_err(|e| invalid("optimizer", &e.to_string()))?;

    Ok(SweepSpec {
        name,
        n_values,
        spacings,
        angles,
        gamma_losses,
        gamma_dr,
        gamma_rs,
        r,
        methods,
        optimizer,
        grid_points,
        gain,
        output,
    })
}

enum Value {
    Scalar(String),
    List(Vec<String>),
}

impl Value {
    fn parse(text: &str) -> Result<Self, String> {
        if let Some(inner) = text.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| "unterminated list".to_string())?
                .trim();
            if inner.is_empty() {
                return Ok(Value::List(Vec::new()));
            }
            let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
            if items.iter().any(|s| s.is_empty()) {
                return Err("empty list item".into());
            }
            Ok(Value::List(items))
        } else if text.is_empty() {
            Err("missing value".into())
        } else {
            Ok(Value::Scalar(text.to_string()))
        }
    }

    fn scalar(&self) -> Result<&str, String> {
        match self {
            Value::Scalar(s) => Ok(s),
            Value::List(_) => Err("expected a single value, got a list".into()),
        }
    }

    fn items(&self) -> Vec<String> {
        match self {
            Value::Scalar(s) => vec![s.clone()],
            Value::List(v) => v.clone(),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("'{s}' is not a finite number"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("'{s}' is not a nonnegative integer"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("'{s}' is not a boolean")),
    }
}

fn parse_counts(v: &Value) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in v.items() {
        if let Some((lo, hi)) = item.split_once("..") {
            let (lo, hi) = (parse_usize(lo.trim())?, parse_usize(hi.trim())?);
            if lo > hi {
                return Err(format!("empty range '{item}'"));
            }
            out.extend(lo..=hi);
        } else {
            out.push(parse_usize(&item)?);
        }
    }
    Ok(out)
}

/// Radians, with optional `pi` factor: `pi`, `-pi/4`, `0.5pi`, `3*pi/4`.
fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.to_ascii_lowercase().replace(['*', ' '], "");
    let Some(idx) = t.find("pi") else {
        return parse_f64(&t);
    };
    let coef = match &t[..idx] {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => parse_f64(c)?,
    };
    let rest = &t[idx + 2..];
    let div = match rest {
        "" => 1.0,
        _ => parse_f64(rest.strip_prefix('/').ok_or_else(|| format!("bad angle '{s}'"))?)?,
    };
    if div == 0.0 {
        return Err(format!("bad angle '{s}'"));
    }
    Ok(coef * PI / div)
}

fn parse_angle_pair(s: &str) -> Result<AnglePair, String> {
    let preset = match s {
        "front-fire" => Some(Geometry::FrontFire),
        "end-fire" => Some(Geometry::EndFire),
        "corner" => Some(Geometry::Corner),
        "oblique" => Some(Geometry::Oblique),
        _ => None,
    };
    if let Some(g) = preset {
        let (alpha_tx, alpha_rx) = g.angles();
        return Ok(AnglePair {
            label: s.to_string(),
            alpha_tx,
            alpha_rx,
        });
    }
    let (tx, rx) = s
        .split_once(':')
        .ok_or_else(|| format!("'{s}' is neither an angle preset nor alpha_tx:alpha_rx"))?;
    Ok(AnglePair {
        label: s.to_string(),
        alpha_tx: parse_angle(tx)?,
        alpha_rx: parse_angle(rx)?,
    })
}
