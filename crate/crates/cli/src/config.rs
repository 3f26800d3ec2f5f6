//! Scenario files. Every struct rejects unknown keys so a misspelled field
//! fails with its name in the message.

use serde::Deserialize;

use oscimarket::{
    ConstrainedState, DampedOscillatorModel, IntegratorConfig, MarketSpec, ModeParams,
    RadialConvention,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetConfig {
    pub model: DampedOscillatorModel,
    pub integrator: IntegratorConfig,
    /// `(x0, y0)`.
    #[serde(default = "unit_x")]
    pub initial: [f64; 2],
    pub seed: Option<u64>,
    pub paths: Option<usize>,
}

fn unit_x() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    pub market: MarketSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseConfig {
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub market: MarketSpec,
    pub integrator: IntegratorConfig,
    /// Required for the deterministic model.
    pub initial: Option<ConstrainedState>,
    /// Present for the stochastic model.
    pub stochastic: Option<StochasticConfig>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticConfig {
    pub modes: Vec<ModeParams>,
    pub phase_sigma: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub convention: RadialConvention,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorsConfig {
    pub market: MarketSpec,
    pub tolerance: Option<f64>,
    /// State whose sector energies are split.
    pub state: Option<ConstrainedState>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Brownian { dim: usize, sigma: f64 },
    DampedOscillator { model: DampedOscillatorModel },
    Rotation,
    Constant { vector: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProjectionConfig {
    Coordinate {
        source_dim: usize,
        coords: Vec<usize>,
        #[serde(default = "default_range")]
        range: f64,
    },
    Radius,
}

fn default_range() -> f64 {
    2.0
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    #[default]
    Sds,
    Deterministic,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceConfig {
    pub system: SystemConfig,
    pub projection: ProjectionConfig,
    #[serde(default)]
    pub check: CheckKind,
    #[serde(default = "default_fiber_samples")]
    pub fiber_samples: usize,
    #[serde(default = "default_pass")]
    pub pass_threshold: f64,
    #[serde(default = "default_fail")]
    pub fail_threshold: f64,
}

fn default_fiber_samples() -> usize {
    oscimarket::reduce::DEFAULT_FIBER_SAMPLES
}

fn default_pass() -> f64 {
    oscimarket::reduce::DEFAULT_PASS_THRESHOLD
}

fn default_fail() -> f64 {
    oscimarket::reduce::DEFAULT_FAIL_THRESHOLD
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub model: DampedOscillatorModel,
    #[serde(default)]
    pub convention: RadialConvention,
    pub integrator: IntegratorConfig,
    #[serde(default = "one")]
    pub r0: f64,
    /// Simulated time discarded before histogramming.
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Upper edge of the grid; defaults to the 1 - 1e-6 quantile.
    pub r_max: Option<f64>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn default_burn_in() -> f64 {
    10.0
}

fn default_bins() -> usize {
    80
}
