//! Run configuration: one JSON file, with command-line flags taking precedence.

use std::path::{Path, PathBuf};

use ldp_tails::rare_event_mc::{Estimator, PlanSpec, DEFAULT_EPSILON};
use ldp_tails::rate_functions::RateFormula;
use ldp_tails::svf::SlowlyVaryingSpec;
use ldp_tails::tail_models::TailModel;
use ldp_tails::weight_schemes::{self, WeightScheme, DEFAULT_GRID, DEFAULT_TOL};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SEED_ENV: &str = "LDP_TAILS_SEED";
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate_weights: Option<ValidateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selftest: Option<SelftestConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// A scheme given either by catalogue name or in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeRef {
    Named(String),
    Full(WeightScheme),
}

impl SchemeRef {
    pub fn resolve(&self) -> Result<WeightScheme, CliError> {
        match self {
            SchemeRef::Full(s) => Ok(s.clone()),
            SchemeRef::Named(name) => named_scheme(name),
        }
    }
}

/// Catalogue names plus `mixed_sign_thirds`.
pub fn named_scheme(name: &str) -> Result<WeightScheme, CliError> {
    if name == "mixed_sign_thirds" {
        return Ok(WeightScheme::mixed_sign_thirds());
    }
    weight_schemes::catalogue()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s)
        .ok_or_else(|| {
            let known: Vec<&str> = weight_schemes::catalogue()
                .iter()
                .map(|(n, _)| *n)
                .collect();
            CliError::Usage(format!(
                "unknown scheme `{name}`; known: {}, mixed_sign_thirds",
                known.join(", ")
            ))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Assumption {
    #[serde(alias = "a")]
    #[value(alias = "a")]
    A,
    #[serde(alias = "b")]
    #[value(alias = "b")]
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub scheme: SchemeRef,
    #[serde(default = "default_assumption")]
    pub assumption: Assumption,
    #[serde(default = "default_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_nu_max")]
    pub nu_max: u32,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_assumption() -> Assumption {
    Assumption::B
}

fn default_grid() -> Vec<usize> {
    DEFAULT_GRID.to_vec()
}

fn default_nu_max() -> u32 {
    3
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub formulas: Vec<RateFormula>,
    pub x_grid: Vec<f64>,
}

/// Shorthand for the common models; anything else is given in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelPreset {
    ExactWeibull {
        r: f64,
        #[serde(default)]
        lower_alpha: Option<f64>,
    },
    ShiftedWeibull {
        r: f64,
        offset: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Preset(ModelPreset),
    Full(Box<TailModel>),
}

impl ModelRef {
    pub fn resolve(&self) -> Result<TailModel, CliError> {
        let m = match self {
            ModelRef::Full(m) => return Ok((**m).clone()),
            ModelRef::Preset(ModelPreset::ExactWeibull {
                r,
                lower_alpha: None,
            }) => TailModel::exact_weibull(*r),
            ModelRef::Preset(ModelPreset::ExactWeibull {
                r,
                lower_alpha: Some(a),
            }) => TailModel::exact_weibull_with_lower(*r, *a),
            ModelRef::Preset(ModelPreset::ShiftedWeibull { r, offset }) => {
                TailModel::shifted_weibull(*r, *offset)
            }
        };
        m.map_err(CliError::Config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulateMode {
    /// The plan's estimator on the fixed weight rows.
    Standard,
    /// One curve per θ seed.
    Quenched,
    /// θ redrawn in every replication.
    Annealed,
    /// Quenched curves and the annealed curve in one table.
    Paired,
    /// rho computed from log p = −rate·speed(n), no sampling.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_mode")]
    pub mode: SimulateMode,
    pub model: ModelRef,
    pub scheme: SchemeRef,
    pub n_grid: Vec<usize>,
    pub x: f64,
    pub replications: u64,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// θ seeds for quenched and paired runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta_seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_rate: Option<f64>,
}

fn default_mode() -> SimulateMode {
    SimulateMode::Standard
}

fn default_estimator() -> Estimator {
    Estimator::BigJumpIs
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl SimulateConfig {
    pub fn plan_spec(&self, seed: u64) -> Result<PlanSpec, CliError> {
        Ok(PlanSpec {
            model: self.model.resolve()?,
            scheme: self.scheme.resolve()?,
            n_grid: self.n_grid.clone(),
            x: self.x,
            replications: self.replications,
            estimator: self.estimator,
            seed,
            epsilon: self.epsilon,
        })
    }
}

/// A Karamata ε-table checked by the self-test; construction failures and
/// non-vanishing deviations both count as failed checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsTable {
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub eta_limit: f64,
    pub eps_table: Vec<(f64, f64)>,
}

fn one() -> f64 {
    1.0
}

impl EpsTable {
    pub fn build(&self) -> ldp_tails::Result<SlowlyVaryingSpec> {
        SlowlyVaryingSpec::karamata(self.a, self.eta_limit, self.eps_table.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    /// Replaces every suite tolerance.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub eps_tables: Vec<EpsTable>,
}

/// Flag, then config (command block before top level), then the environment, then the default.
pub fn resolve_seed(
    flag: Option<u64>,
    block: Option<u64>,
    top: Option<u64>,
) -> Result<u64, CliError> {
    if let Some(s) = flag.or(block).or(top) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Usage(format!("{SEED_ENV}={v} is not an unsigned 64-bit integer"))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}
