//! Scenario runner behind the `divesim` binary.
//!
//! A [`ScenarioConfig`] names a model, a pulse and an η list; [`run_scenario`]
//! produces a [`SweepRecord`] with one row per η (or per energy, time or
//! window), fitted exponents and pass/fail checks. Records serialize to a CSV
//! table, a JSON summary and a gnuplot script. The CSV depends on the
//! configuration only; timing goes to the JSON summary.

mod config;
mod fit;
mod record;
mod scenarios;

pub use config::{
    DispersionConfig, MicroscopicConfig, ModelConfig, OutputConfig, Scenario, ScenarioConfig, SolverConfig,
    SpectralConfig, Tolerances,
};
pub use fit::{fit_exponent, Fit};
pub use record::{Check, OutputPaths, PlotSpec, Row, SweepRecord};

use crate::dynamics::DynamicsError;
use crate::exec::Execution;
use crate::formfactor::FormfactorError;
use crate::spectral::SpectralError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Measure(#[from] FormfactorError),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("output error: {0}")]
    Io(String),
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

/// Runs `scenario` with independent rows fanned out over `execution`.
/// Row order and values do not depend on the worker count.
pub fn run_scenario(
    config: &ScenarioConfig,
    scenario: Scenario,
    execution: Execution,
) -> Result<SweepRecord, HarnessError> {
    scenarios::run(config, scenario, execution)
}
