//! JSON run configuration.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::family::MatrixFamily;
use crate::grid::{FunctionSpec, GridFunction};
use crate::hardy::{Atom, AtomProfile, DEFAULT_C_DIL, DEFAULT_C_H1};
use crate::kernel::KernelSpec;
use crate::linalg::SquareMatrix;
use crate::operator::DEFAULT_L1_SLACK;
use crate::quadrature::{QuadratureSpec, Region};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Norms,
    Apply,
    VerifyL1,
    VerifyH1,
    AtomCheck,
    Sweep,
    CounterexampleSearch,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Norms,
        Kind::Apply,
        Kind::VerifyL1,
        Kind::VerifyH1,
        Kind::AtomCheck,
        Kind::Sweep,
        Kind::CounterexampleSearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Norms => "norms",
            Kind::Apply => "apply",
            Kind::VerifyL1 => "verify-l1",
            Kind::VerifyH1 => "verify-h1",
            Kind::AtomCheck => "atom-check",
            Kind::Sweep => "sweep",
            Kind::CounterexampleSearch => "counterexample-search",
        }
    }

    pub fn from_name(name: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl GridSpec {
    pub fn region(&self) -> Result<Region> {
        Region::new(self.lo.clone(), self.hi.clone())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

fn default_slack() -> f64 {
    DEFAULT_L1_SLACK
}

fn default_c_h1() -> f64 {
    DEFAULT_C_H1
}

fn default_c_dil() -> f64 {
    DEFAULT_C_DIL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_slack")]
    pub l1_slack: f64,
    #[serde(default = "default_c_h1")]
    pub c_h1: f64,
    #[serde(default = "default_c_dil")]
    pub c_dil: f64,
    /// Atom check tolerance; `2 h L` from the grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            l1_slack: DEFAULT_L1_SLACK,
            c_h1: DEFAULT_C_H1,
            c_dil: DEFAULT_C_DIL,
            atom: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub center: Vec<f64>,
    pub radius: f64,
    pub profile: AtomProfile,
    /// Multiplies the sampled atom; anything above 1 breaks the sup bound.
    #[serde(default = "one")]
    pub scale: f64,
    /// When present the atom is also pushed through `x -> x A` and the
    /// ellipsoid containment is sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<SquareMatrix>,
    #[serde(default = "default_samples")]
    pub ellipsoid_samples: usize,
}

impl AtomConfig {
    pub fn atom(&self) -> Atom {
        Atom::new(self.center.clone(), self.radius, self.profile)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// JSON pointer into this config, e.g. `/matrix/angle`.
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Inclusive, evenly spaced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
}

impl SweepConfig {
    pub fn points(&self) -> Vec<f64> {
        let mut out = self.values.clone().unwrap_or_default();
        if let Some(r) = &self.range {
            match r.count {
                0 => {}
                1 => out.push(r.start),
                c => out.extend((0..c).map(|i| r.start + (r.stop - r.start) * i as f64 / (c - 1) as f64)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub count: usize,
    pub dim: usize,
    #[serde(default)]
    pub symmetric_only: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<AtomConfig>,
    /// Extra `f(. A)` check for verify-h1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation: Option<SquareMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub write_grids: bool,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

fn require<'a, T>(field: &'a Option<T>, name: &str, kind: Kind) -> Result<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| invalid(format!("`{name}` is required for {}", kind.name())))
}

fn as_config_error(e: Error) -> Error {
    match e {
        Error::ConfigInvalid(_) => e,
        other => Error::ConfigInvalid(other.to_string()),
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| invalid(format!("not valid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        match value.get("schema_version").and_then(Value::as_u64) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(invalid(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
            None => return Err(invalid("missing integer field `schema_version`")),
        }
        let config: RunConfig = serde_json::from_value(value).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    pub fn quadrature_for(&self, n: usize) -> QuadratureSpec {
        self.quadrature.clone().unwrap_or_else(|| QuadratureSpec::default_for(n))
    }

    pub fn sample_function(&self) -> Result<GridFunction> {
        let grid = require(&self.grid, "grid", self.kind)?;
        let function = require(&self.function, "function", self.kind)?;
        GridFunction::sample(function, grid.region()?, grid.resolution.clone())
    }

    fn validate_operator_inputs(&self, needs_function: bool) -> Result<()> {
        let kernel = require(&self.kernel, "kernel", self.kind)?;
        let matrix = require(&self.matrix, "matrix", self.kind)?;
        kernel.validate().map_err(as_config_error)?;
        matrix.validate().map_err(as_config_error)?;
        if kernel.dim() != matrix.dim() {
            return Err(invalid(format!(
                "kernel has dimension {} but matrix field has dimension {}",
                kernel.dim(),
                matrix.dim()
            )));
        }
        if needs_function {
            require(&self.function, "function", self.kind)?;
            let grid = require(&self.grid, "grid", self.kind)?;
            grid.region().map_err(as_config_error)?;
            if grid.resolution.len() != grid.dim() {
                return Err(invalid("grid resolution must list one count per axis"));
            }
            if matrix.dim() != grid.dim() {
                return Err(invalid(format!(
                    "matrix field has dimension {} but grid has dimension {}",
                    matrix.dim(),
                    grid.dim()
                )));
            }
        }
        self.quadrature_for(kernel.dim()).validate().map_err(as_config_error)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        if !(t.l1_slack.is_finite() && t.l1_slack > 0.0) {
            return Err(invalid("tolerances.l1_slack must be positive"));
        }
        if !(t.c_h1.is_finite() && t.c_h1 >= 1.0) || !(t.c_dil.is_finite() && t.c_dil >= 1.0) {
            return Err(invalid("tolerances.c_h1 and tolerances.c_dil must be at least 1"));
        }
        if let Some(a) = t.atom {
            if !(a.is_finite() && a > 0.0) {
                return Err(invalid("tolerances.atom must be positive"));
            }
        }
        match self.kind {
            Kind::Norms => self.validate_operator_inputs(false),
            Kind::Apply | Kind::VerifyL1 | Kind::VerifyH1 => self.validate_operator_inputs(true),
            Kind::AtomCheck => {
                let atom = require(&self.atom, "atom", self.kind)?;
                let grid = require(&self.grid, "grid", self.kind)?;
                atom.atom().validate().map_err(as_config_error)?;
                grid.region().map_err(as_config_error)?;
                if atom.center.len() != grid.dim() {
                    return Err(invalid("atom centre and grid have different dimensions"));
                }
                if !(atom.scale.is_finite()) || atom.ellipsoid_samples == 0 {
                    return Err(invalid("atom.scale must be finite and atom.ellipsoid_samples positive"));
                }
                if let Some(m) = &atom.transform {
                    if m.dim() != grid.dim() {
                        return Err(invalid("atom.transform has the wrong dimension"));
                    }
                }
                Ok(())
            }
            Kind::Sweep => {
                self.validate_operator_inputs(false)?;
                let sweep = require(&self.sweep, "sweep", self.kind)?;
                if !sweep.parameter.starts_with('/') {
                    return Err(invalid("sweep.parameter must be a JSON pointer such as /matrix/angle"));
                }
                if self.to_value().pointer(&sweep.parameter).is_none() {
                    return Err(invalid(format!("sweep.parameter {} names no field", sweep.parameter)));
                }
                if sweep.points().iter().any(|v| !v.is_finite()) {
                    return Err(invalid("sweep values must be finite"));
                }
                Ok(())
            }
            Kind::CounterexampleSearch => {
                let search = require(&self.search, "search", self.kind)?;
                if search.count < 1 || !(2..=5).contains(&search.dim) {
                    return Err(invalid("search needs count >= 1 and 2 <= dim <= 5"));
                }
                Ok(())
            }
        }
    }

    /// Copy of this config with the JSON pointer `parameter` set to `value`.
    pub fn with_parameter(&self, parameter: &str, value: f64) -> Result<Self> {
        let mut json = self.to_value();
        let slot = json
            .pointer_mut(parameter)
            .ok_or_else(|| invalid(format!("sweep.parameter {parameter} names no field")))?;
        *slot = serde_json::json!(value);
        serde_json::from_value(json).map_err(|e| invalid(e.to_string()))
    }
}
