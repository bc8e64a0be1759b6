//! The JSON configuration shared by every subcommand.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "scale": { "kind": "fat_cantor", "depth": 12 },
//!   "speed": { "kind": "lebesgue" },
//!   "partition": { "kind": "uniform", "n": 64 },
//!   "test_functions": [{ "kind": "cosine", "k": 1 }],
//!   "lambdas": [1.0],
//!   "resolutions": [32, 128, 512],
//!   "reference": { "kind": "fine_grid", "n_ref": 4096 },
//!   "simulation": { "T": 1.0, "replicas": 1000, "seed": 7, "init": "stationary" },
//!   "verify": { "capacity_window": [0.45, 0.55], "capacity_horizons": [1.0] },
//!   "outputs": { "export_paths": 1 }
//! }
//! ```

use serde::{Deserialize, Serialize};
use tracechain::mosco::{GridFamily, Reference};
use tracechain::simulator::InitialLaw;
use tracechain::{Atom, Partition, PartitionKind, RemovalSchedule, ScaleFunction, SpeedMeasure, TestFunction};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub scale: ScaleConfig,
    pub speed: SpeedConfig,
    #[serde(default)]
    pub partition: Option<PartitionConfig>,
    #[serde(default)]
    pub test_functions: Vec<TestFunctionConfig>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub grid_family: GridFamilyConfig,
    #[serde(default)]
    pub reference: Option<ReferenceConfig>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0]
}

fn default_resolutions() -> Vec<usize> {
    vec![16, 64, 256]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleConfig {
    Identity,
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
    /// Values of `s` on a uniform grid of `[0, 1]`.
    Tabulated {
        values: Vec<f64>,
    },
    FatCantor {
        depth: u32,
        #[serde(default)]
        first: Option<f64>,
        #[serde(default)]
        ratio: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedConfig {
    Lebesgue {
        #[serde(default)]
        atoms: Vec<(f64, f64)>,
    },
    Piecewise {
        breaks: Vec<f64>,
        density: Vec<f64>,
        #[serde(default)]
        atoms: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionConfig {
    Uniform {
        n: usize,
    },
    Explicit {
        points: Vec<f64>,
    },
    SvcEndpoints {
        depth: u32,
        #[serde(default)]
        first: Option<f64>,
        #[serde(default)]
        ratio: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunctionConfig {
    Cosine { k: u32 },
    Polynomial { coeffs: Vec<f64> },
    Constant { value: f64 },
    Indicator { lo: f64, hi: f64 },
    PiecewiseLinear { points: Vec<(f64, f64)> },
    /// `g(s(x))`, with `g` given by knots in scale coordinates.
    SAdapted { points: Vec<(f64, f64)> },
    /// `u = s`.
    Scale,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFamilyConfig {
    #[default]
    Uniform,
    SvcEndpoints,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    ClosedForm {
        #[serde(default = "default_modes")]
        modes: usize,
    },
    FineGrid {
        n_ref: usize,
    },
}

fn default_modes() -> usize {
    tracechain::reference::DEFAULT_MODES
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    Stationary,
    State(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitConfig,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_replicas() -> usize {
    1000
}

fn default_init() -> InitConfig {
    InitConfig::Stationary
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            replicas: default_replicas(),
            seed: 0,
            init: default_init(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_trials")]
    pub identity_trials: usize,
    #[serde(default = "default_window")]
    pub capacity_window: (f64, f64),
    #[serde(default = "default_capacity_horizons")]
    pub capacity_horizons: Vec<f64>,
    #[serde(default = "default_mc_replicas")]
    pub capacity_replicas: usize,
    #[serde(default = "default_dynkin_time")]
    pub dynkin_time: f64,
    #[serde(default = "default_mc_replicas")]
    pub dynkin_replicas: usize,
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
}

fn default_tolerance() -> f64 {
    1e-12
}

fn default_trials() -> usize {
    100
}

fn default_window() -> (f64, f64) {
    (0.45, 0.55)
}

fn default_capacity_horizons() -> Vec<f64> {
    vec![0.25, 1.0]
}

fn default_mc_replicas() -> usize {
    10_000
}

fn default_dynkin_time() -> f64 {
    0.5
}

fn default_sigmas() -> f64 {
    4.0
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            identity_trials: default_trials(),
            capacity_window: default_window(),
            capacity_horizons: default_capacity_horizons(),
            capacity_replicas: default_mc_replicas(),
            dynkin_time: default_dynkin_time(),
            dynkin_replicas: default_mc_replicas(),
            sigmas: default_sigmas(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    /// Number of individual paths written as CSV by `simulate`.
    #[serde(default = "default_export_paths")]
    pub export_paths: usize,
}

fn default_export_paths() -> usize {
    1
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            export_paths: default_export_paths(),
        }
    }
}

/// A parsed config together with the exact bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub raw: serde_json::Value,
    pub sha256: String,
}

impl LoadedConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        use sha2::{Digest, Sha256};
        let config: Config = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "config: schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        let raw = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        let digest = Sha256::digest(text.as_bytes());
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self { config, raw, sha256 })
    }
}

fn schedule(first: Option<f64>, ratio: Option<f64>) -> Result<RemovalSchedule, CliError> {
    let base = RemovalSchedule::CLASSICAL;
    Ok(RemovalSchedule::new(first.unwrap_or(base.first), ratio.unwrap_or(base.ratio))?)
}

fn atoms(list: &[(f64, f64)]) -> Vec<Atom> {
    list.iter()
        .map(|&(location, weight)| Atom { location, weight })
        .collect()
}

impl Config {
    pub fn scale(&self) -> Result<ScaleFunction, CliError> {
        Ok(match &self.scale {
            ScaleConfig::Identity => ScaleFunction::Identity,
            ScaleConfig::PiecewiseLinear { points } => ScaleFunction::piecewise_linear(points)?,
            ScaleConfig::Tabulated { values } => ScaleFunction::tabulated(values)?,
            ScaleConfig::FatCantor { depth, first, ratio } => {
                ScaleFunction::fat_cantor_with(*depth, schedule(*first, *ratio)?)?
            }
        })
    }

    pub fn speed(&self) -> Result<SpeedMeasure, CliError> {
        Ok(match &self.speed {
            SpeedConfig::Lebesgue { atoms: a } if a.is_empty() => SpeedMeasure::lebesgue(),
            SpeedConfig::Lebesgue { atoms: a } => SpeedMeasure::lebesgue().with_atoms(atoms(a))?,
            SpeedConfig::Piecewise { breaks, density, atoms: a } => {
                SpeedMeasure::new(breaks.clone(), density.clone(), atoms(a))?
            }
        })
    }

    pub fn partition(&self) -> Result<Partition, CliError> {
        let kind = match self.partition.as_ref().ok_or_else(|| {
            CliError::Validation("config: missing field `partition`".into())
        })? {
            PartitionConfig::Uniform { n } => PartitionKind::Uniform { n: *n },
            PartitionConfig::Explicit { points } => PartitionKind::Explicit { points: points.clone() },
            PartitionConfig::SvcEndpoints { depth, first, ratio } => PartitionKind::SvcEndpoints {
                depth: *depth,
                schedule: schedule(*first, *ratio)?,
            },
        };
        Ok(Partition::build(&kind)?)
    }

    pub fn test_functions(&self, scale: &ScaleFunction) -> Result<Vec<TestFunction>, CliError> {
        if self.test_functions.is_empty() {
            return Ok(vec![TestFunction::cosine(1)]);
        }
        self.test_functions
            .iter()
            .map(|t| {
                Ok(match t {
                    TestFunctionConfig::Cosine { k } => TestFunction::cosine(*k),
                    TestFunctionConfig::Polynomial { coeffs } => TestFunction::polynomial(coeffs.clone()),
                    TestFunctionConfig::Constant { value } => TestFunction::constant(*value),
                    TestFunctionConfig::Indicator { lo, hi } => TestFunction::indicator(*lo, *hi)?,
                    TestFunctionConfig::PiecewiseLinear { points } => TestFunction::piecewise_linear(points)?,
                    TestFunctionConfig::SAdapted { points } => TestFunction::s_adapted(scale.clone(), points)?,
                    TestFunctionConfig::Scale => TestFunction::scale_itself(scale.clone()),
                })
            })
            .collect()
    }

    pub fn lambdas(&self) -> Result<&[f64], CliError> {
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(CliError::Validation("config: lambdas must be nonempty and > 0".into()));
        }
        Ok(&self.lambdas)
    }

    pub fn grid_family(&self) -> GridFamily {
        match self.grid_family {
            GridFamilyConfig::Uniform => GridFamily::Uniform,
            GridFamilyConfig::SvcEndpoints => GridFamily::SvcEndpoints,
        }
    }

    /// The configured reference, or the closed form when it applies and a
    /// 4096-cell fine grid otherwise.
    pub fn reference(&self, scale: &ScaleFunction, speed: &SpeedMeasure) -> Reference {
        match self.reference {
            Some(ReferenceConfig::ClosedForm { modes }) => Reference::ClosedForm { modes },
            Some(ReferenceConfig::FineGrid { n_ref }) => Reference::FineGrid { n_ref },
            None if scale.is_identity() && speed.is_lebesgue() => Reference::ClosedForm {
                modes: default_modes(),
            },
            None => Reference::FineGrid { n_ref: 4096 },
        }
    }

    pub fn init(&self) -> InitialLaw {
        match self.simulation.init {
            InitConfig::Stationary => InitialLaw::Stationary,
            InitConfig::State(i) => InitialLaw::State(i),
        }
    }
}
