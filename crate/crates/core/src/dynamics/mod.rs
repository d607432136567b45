//! Adiabatic time evolution of the dot amplitude.
//!
//! The continuum can be integrated out exactly: with `a(t) = ⟨dot, ψ(t)⟩` and
//! an initial state `(a₀, β₀/(λ - x₀))`,
//!
//! ```text
//! a'(t) = -i E(ηt) a(t) - i τ β₀ h(t - t₀; x₀) - τ² ∫_{t₀}^t K(t - s) a(s) ds
//! ```
//!
//! where `K` is the free memory kernel and `h` the resolvent-weighted driving
//! function of the measure. Overlaps of the final state with any state of the
//! same form follow from `a(·)` alone. [`evolve`] integrates this law;
//! [`oracle_evolve`] integrates the finite-mode Schrödinger equation instead
//! and serves as an independent check.

mod observables;
mod oracle;
mod schedule;
mod volterra;

pub use observables::{
    dyson_diagnostics, microscopic_survival, microscopic_window, pulse_survival, threshold_distance,
    DysonTerms, Side, ThresholdDistance,
};
pub use oracle::{oracle_evolve, DiscreteModel, OracleOptions, OracleRun};
pub use schedule::{PulseSchedule, ScheduleConfig, ScheduleError};
pub use volterra::{evolve, LagTable, VolterraOptions};

use num_complex::Complex64;

use crate::formfactor::FormfactorError;
use crate::spectral::{Model, RankOneState, SpectralError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Measure(#[from] FormfactorError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("integrator failure at t = {time}: |a| = {modulus} (step {step})")]
    Unstable { time: f64, modulus: f64, step: f64 },
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("probe {0:?} was not requested")]
    MissingProbe(Probe),
}

/// Starting state of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// Instantaneous bound state at the starting dot energy.
    Bound,
    /// Threshold eigenvector `Ψ_c`.
    Critical,
    /// The bare dot state.
    Dot,
    /// Any state of resolvent form.
    Custom(RankOneState),
}

/// States the evolved vector is projected on at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Probe {
    /// Instantaneous bound state at the final dot energy.
    Bound,
    /// Threshold eigenvector `Ψ_c`.
    Critical,
    /// The bare dot state.
    Dot,
}

impl InitialState {
    pub(crate) fn resolve(&self, model: &Model, energy: f64) -> Result<RankOneState, DynamicsError> {
        Ok(match self {
            InitialState::Bound => RankOneState::bound(model, &model.bound_state(energy)?),
            InitialState::Critical => RankOneState::critical(model)?,
            InitialState::Dot => RankOneState::dot_only(),
            InitialState::Custom(s) => *s,
        })
    }
}

impl Probe {
    pub(crate) fn resolve(&self, model: &Model, energy: f64) -> Result<RankOneState, DynamicsError> {
        Ok(match self {
            Probe::Bound => RankOneState::bound(model, &model.bound_state(energy)?),
            Probe::Critical => RankOneState::critical(model)?,
            Probe::Dot => RankOneState::dot_only(),
        })
    }
}

/// Outcome of one adiabatic run on a uniform microscopic-time grid.
#[derive(Debug, Clone)]
pub struct AdiabaticRun {
    pub eta: f64,
    /// Microscopic start time `s_start/η`.
    pub t_start: f64,
    pub dt: f64,
    /// Dot amplitude at `t_start + k·dt`.
    pub amplitudes: Vec<Complex64>,
    pub initial: RankOneState,
    pub overlaps: Vec<(Probe, Complex64)>,
}

impl AdiabaticRun {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.amplitudes.len()).map(move |k| self.t_start + k as f64 * self.dt)
    }

    pub fn final_amplitude(&self) -> Complex64 {
        *self.amplitudes.last().unwrap()
    }

    /// `⟨probe, ψ(t_end)⟩`
    pub fn overlap(&self, probe: Probe) -> Result<Complex64, DynamicsError> {
        self.overlaps
            .iter()
            .find(|(p, _)| *p == probe)
            .map(|(_, v)| *v)
            .ok_or(DynamicsError::MissingProbe(probe))
    }

    /// `|⟨probe, ψ(t_end)⟩|²`
    pub fn survival_probability(&self, probe: Probe) -> Result<f64, DynamicsError> {
        Ok(self.overlap(probe)?.norm_sqr())
    }
}
