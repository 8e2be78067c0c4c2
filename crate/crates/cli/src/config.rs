//! Run configuration: TOML sections plus `section.key=value` overrides.
//!
//! ```toml
//! [run]
//! mode = "graph"          # or "curve"
//! n = 128                 # grid points (graph) or vertices (curve)
//! seed = 0
//!
//! [initial]
//! shape = "sine 0.2 1"    # constant c | sine a k [b] | circle R | ellipse a b | file PATH
//! alpha0 = 1.0
//!
//! [sigma]
//! kind = "quadratic_shifted"
//! params = []
//! anisotropy = 0.0        # curve mode: σ(θ, α) = (1 + a·cos(fold·θ))·σ(α)
//! fold = 4
//!
//! [params]
//! mu = 1.0
//! gamma = 1.0
//! dt = "auto"
//! t_end = 0.1
//!
//! [output]
//! snapshot_every = 100
//! reparam_every = 10
//! ```

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use grainflow::curve_solver::{CurveEnergy, CurveState};
use grainflow::{AnisotropicSigma, Grid1D, Params, SigmaModel, TimeStep};
use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Graph,
    Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: Mode,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub shape: String,
    #[serde(default)]
    pub alpha0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSection {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default)]
    pub anisotropy: f64,
    #[serde(default = "default_fold")]
    pub fold: f64,
}

fn default_fold() -> f64 {
    4.0
}

/// "auto" or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "auto")]
    pub dt: DtSpec,
    pub t_end: f64,
    #[serde(default = "half")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub force_dt: bool,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn auto() -> DtSpec {
    DtSpec::Keyword("auto".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "hundred")]
    pub snapshot_every: usize,
    #[serde(default = "ten")]
    pub reparam_every: usize,
}

fn hundred() -> usize {
    100
}

fn ten() -> usize {
    10
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            snapshot_every: hundred(),
            reparam_every: ten(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub initial: InitialSection,
    pub sigma: SigmaSection,
    pub params: ParamsSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Initial data presets.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Constant(f64),
    /// a·sin(2πkx) + b
    Sine { a: f64, k: f64, b: f64 },
    Circle(f64),
    Ellipse(f64, f64),
    File(PathBuf),
}

impl Shape {
    pub fn parse(spec: &str) -> CliResult<Self> {
        let mut words = spec.split_whitespace();
        let name = words.next().unwrap_or("");
        let rest: Vec<&str> = words.collect();
        if name == "file" {
            return match rest.as_slice() {
                [path] => Ok(Shape::File(PathBuf::from(path))),
                _ => Err(usage("initial.shape", "expected `file PATH`")),
            };
        }
        let nums = rest
            .iter()
            .map(|w| w.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| usage("initial.shape", &format!("`{spec}`: {e}")))?;
        if nums.iter().any(|x| !x.is_finite()) {
            return Err(usage("initial.shape", "values must be finite"));
        }
        match (name, nums.as_slice()) {
            ("constant", [c]) => Ok(Shape::Constant(*c)),
            ("sine", [a, k]) => Ok(Shape::Sine { a: *a, k: *k, b: 0.0 }),
            ("sine", [a, k, b]) => Ok(Shape::Sine { a: *a, k: *k, b: *b }),
            ("circle", [r]) if *r > 0.0 => Ok(Shape::Circle(*r)),
            ("ellipse", [a, b]) if *a > 0.0 && *b > 0.0 => Ok(Shape::Ellipse(*a, *b)),
            _ => Err(usage(
                "initial.shape",
                &format!("`{spec}` is not one of: constant c, sine a k [b], circle R, ellipse a b, file PATH"),
            )),
        }
    }
}

fn usage(field: &str, msg: &str) -> CliError {
    CliError::Usage(format!("{field}: {msg}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let value: Value = text.parse().map_err(|e: toml::de::Error| CliError::Usage(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> CliResult<Self> {
        let config: RunConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Value> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        text.parse()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn to_value(&self) -> Value {
        Value::try_from(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        let finite = [
            ("initial.alpha0", self.initial.alpha0),
            ("sigma.anisotropy", self.sigma.anisotropy),
            ("sigma.fold", self.sigma.fold),
            ("params.mu", self.params.mu),
            ("params.gamma", self.params.gamma),
            ("params.t_end", self.params.t_end),
            ("params.cfl_safety", self.params.cfl_safety),
        ];
        for (name, x) in finite {
            if !x.is_finite() {
                return Err(usage(name, "must be finite"));
            }
        }
        if self.sigma.params.iter().any(|x| !x.is_finite()) {
            return Err(usage("sigma.params", "must be finite"));
        }
        if self.output.snapshot_every == 0 {
            return Err(usage("output.snapshot_every", "must be >= 1"));
        }
        if self.output.reparam_every == 0 {
            return Err(usage("output.reparam_every", "must be >= 1"));
        }
        if self.sigma.anisotropy != 0.0 && self.run.mode == Mode::Graph {
            return Err(usage("sigma.anisotropy", "only supported in curve mode"));
        }
        match self.run.mode {
            Mode::Graph => {
                self.grid()?;
            }
            Mode::Curve if self.run.n < 16 => return Err(usage("run.n", "curve mode needs at least 16 vertices")),
            Mode::Curve => {}
        }
        let shape = Shape::parse(&self.initial.shape)?;
        match (self.run.mode, &shape) {
            (Mode::Graph, Shape::Circle(_) | Shape::Ellipse(..)) => {
                return Err(usage("initial.shape", "closed curves need mode = \"curve\""))
            }
            (Mode::Curve, Shape::Constant(_) | Shape::Sine { .. }) => {
                return Err(usage("initial.shape", "graph presets need mode = \"graph\""))
            }
            _ => {}
        }
        self.time_step()?;
        self.solver_params().validate().map_err(|e| usage("params", &e.to_string()))?;
        self.sigma_model()?;
        Ok(())
    }

    pub fn time_step(&self) -> CliResult<TimeStep> {
        match &self.params.dt {
            DtSpec::Value(dt) if dt.is_finite() && *dt > 0.0 => Ok(TimeStep::Fixed(*dt)),
            DtSpec::Keyword(k) if k == "auto" => Ok(TimeStep::Auto),
            _ => Err(usage("params.dt", "expected \"auto\" or a positive number")),
        }
    }

    pub fn solver_params(&self) -> Params {
        Params {
            mu: self.params.mu,
            gamma: self.params.gamma,
            dt: self.time_step().unwrap_or(TimeStep::Auto),
            t_end: self.params.t_end,
            cfl_safety: self.params.cfl_safety,
            force_dt: self.params.force_dt,
        }
    }

    pub fn sigma_model(&self) -> CliResult<SigmaModel> {
        SigmaModel::from_name(&self.sigma.kind, &self.sigma.params).map_err(|e| usage("sigma.kind", &e.to_string()))
    }

    pub fn curve_energy(&self) -> CliResult<CurveEnergy> {
        let model = self.sigma_model()?;
        Ok(if self.sigma.anisotropy == 0.0 {
            CurveEnergy::Isotropic(model)
        } else {
            CurveEnergy::Anisotropic(AnisotropicSigma::modulated(model, 1.0, self.sigma.anisotropy, self.sigma.fold))
        })
    }

    pub fn grid(&self) -> CliResult<Grid1D> {
        Grid1D::new(self.run.n).map_err(|e| usage("run.n", &e.to_string()))
    }

    /// Samples the graph initial data. File paths are relative to `base`.
    pub fn graph_initial(&self, base: &Path) -> CliResult<Vec<f64>> {
        let grid = self.grid()?;
        match Shape::parse(&self.initial.shape)? {
            Shape::Constant(c) => Ok(vec![c; grid.n()]),
            Shape::Sine { a, k, b } => Ok(grid.sample(|x| a * (TAU * k * x).sin() + b)),
            Shape::File(path) => {
                let cols = read_columns(&base.join(path), 1)?;
                if cols.len() != grid.n() {
                    return Err(usage(
                        "initial.shape",
                        &format!("file has {} samples, run.n = {}", cols.len(), grid.n()),
                    ));
                }
                Ok(cols.into_iter().map(|r| r[0]).collect())
            }
            _ => Err(usage("initial.shape", "not a graph preset")),
        }
    }

    pub fn curve_initial(&self, base: &Path) -> CliResult<CurveState> {
        let m = self.run.n;
        let alpha = self.initial.alpha0;
        let curve = match Shape::parse(&self.initial.shape)? {
            Shape::Circle(r) => CurveState::circle([0.0, 0.0], r, m, alpha),
            Shape::Ellipse(a, b) => CurveState::ellipse([0.0, 0.0], a, b, m, alpha),
            Shape::File(path) => {
                let pts = read_columns(&base.join(path), 2)?.into_iter().map(|r| [r[0], r[1]]).collect();
                CurveState::new(pts, alpha, 0.0)
            }
            _ => return Err(usage("initial.shape", "not a curve preset")),
        };
        curve.map_err(|e| usage("initial.shape", &e.to_string()))
    }
}

/// Numeric CSV rows with `width` columns; a header line is skipped.
fn read_columns(path: &Path, width: usize) -> CliResult<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        let parsed: Result<Vec<f64>, _> = record.iter().take(width).map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) if r.len() == width => rows.push(r),
            Err(_) if line == 0 => continue,
            _ => return Err(CliError::io(path, format!("line {}: expected {width} numbers", line + 1))),
        }
    }
    Ok(rows)
}

/// Applies `section.key=value`. The value is read as a TOML literal when
/// possible and as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.len() != 2 || keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Usage(format!("override key `{path}` must be section.key")));
    }
    let value = parse_literal(raw.trim());
    let table = root
        .as_table_mut()
        .ok_or_else(|| CliError::Usage("configuration root is not a table".into()))?;
    let section = table
        .entry(keys[0].to_string())
        .or_insert_with(|| Value::Table(Default::default()));
    let section = section
        .as_table_mut()
        .ok_or_else(|| CliError::Usage(format!("`{}` is not a section", keys[0])))?;
    section.insert(keys[1].to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Overlays `over` on `base`, table by table.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Defaults under every config file and command line.
pub fn default_value() -> Value {
    let text = r#"
[run]
mode = "graph"
n = 128

[initial]
shape = "sine 0.2 1"
alpha0 = 1.0

[sigma]
kind = "quadratic_shifted"

[params]
t_end = 0.01
"#;
    text.parse().expect("default config parses")
}
