use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::HarnessError;
use crate::dynamics::ScheduleConfig;
use crate::formfactor::MeasureConfig;

/// Named scenarios understood by [`super::run_scenario`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Bound state, spectral weights and threshold behaviour over a dot-energy
    /// table.
    Spectral,
    /// Long-time decay of the frozen survival amplitude.
    Dispersion,
    /// Distance to the critical eigenvector at the threshold crossings.
    ThresholdAdiabatic,
    /// Survival over the full pulse when the bound state dives into the
    /// continuum.
    Breakdown,
    /// Survival over the full pulse for a measure with an infrared gap.
    GapCase,
    /// Survival of the critical eigenvector over short windows after the
    /// crossing.
    Microscopic,
    /// Magnitudes of the Dyson-expansion bounds.
    Dyson,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Spectral,
        Scenario::Dispersion,
        Scenario::ThresholdAdiabatic,
        Scenario::Breakdown,
        Scenario::GapCase,
        Scenario::Microscopic,
        Scenario::Dyson,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Spectral => "spectral",
            Scenario::Dispersion => "dispersion",
            Scenario::ThresholdAdiabatic => "threshold_adiabatic",
            Scenario::Breakdown => "breakdown",
            Scenario::GapCase => "gap_case",
            Scenario::Microscopic => "microscopic",
            Scenario::Dyson => "dyson",
        }
    }

    /// Scenarios that sweep the adiabatic parameter.
    pub fn needs_etas(&self) -> bool {
        !matches!(self, Scenario::Spectral | Scenario::Dispersion)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown scenario `{s}`")))
    }
}

/// Measure plus coupling strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub tau: f64,
    pub measure: MeasureConfig,
}

/// Pass/fail thresholds. Every field has a default, so the block may be
/// omitted or partially given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Largest `|∫ρ + |⟨dot, Ψ⟩|² - 1|` over the spectral table.
    pub sum_rule: f64,
    /// Relative error of `λ(E_c - ε)/(-ε)` against the threshold dot weight.
    pub threshold_slope: f64,
    /// Largest max/min ratio of the rescaled projection derivative.
    pub projection_variation: f64,
    /// Expected log-log slope of the frozen survival amplitude.
    pub dispersion_exponent: f64,
    pub dispersion_slack: f64,
    /// `survival(η_min) < breakdown_ratio · survival(η_max)`.
    pub breakdown_ratio: f64,
    /// Survival floor at the smallest η of a gap sweep.
    pub gap_survival: f64,
    /// Lower bound on the fitted exponent of the threshold distance.
    pub threshold_exponent: f64,
    /// Admissible factor between loss ratios and window ratios.
    pub microscopic_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sum_rule: 1e-6,
            threshold_slope: 0.05,
            projection_variation: 3.0,
            dispersion_exponent: -2.5,
            dispersion_slack: 0.15,
            breakdown_ratio: 0.5,
            gap_survival: 0.99,
            threshold_exponent: 1.0 / 13.0 - 0.02,
            microscopic_factor: 1.8,
        }
    }
}

/// Dot-energy table and threshold probes of the spectral report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    /// Dot energies; empty means `points` values spread over the pulse range.
    pub energies: Vec<f64>,
    pub points: usize,
    /// Offset `ε` below `E_c` at which the eigenvalue slope is compared.
    pub slope_offset: f64,
    /// Offsets `E_c - E` at which the projection derivative is sampled.
    pub derivative_offsets: Vec<f64>,
    /// Power of `E_c - E` multiplying the derivative norm.
    pub derivative_exponent: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            energies: Vec::new(),
            points: 31,
            slope_offset: 1e-3,
            derivative_offsets: vec![1e-4, 1e-3, 1e-2, 1e-1],
            derivative_exponent: 0.75,
        }
    }
}

/// Time window of the dispersion check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    /// Frozen dot energy; defaults to the pulse maximum.
    pub energy: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    /// Log-spaced sample count.
    pub points: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            energy: None,
            t_min: 1e2,
            t_max: 1e4,
            points: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroscopicConfig {
    /// Window prefactors, ascending.
    pub alphas: Vec<f64>,
}

/// Integrator settings shared by every run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Upper bound on the time step of the memory integrator.
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory receiving the CSV, JSON and plot files.
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the scenario name.
    pub stem: Option<String>,
}

/// Full description of one scenario run.
///
/// ```toml
/// scenario = "breakdown"
/// etas = [0.2, 0.1, 0.05, 0.025]
///
/// [model]
/// tau = 0.5
///
/// [model.measure]
/// family = "power_law"
/// nu = 1
/// p = 4.0
///
/// [schedule]
/// e_lo = -1.0
/// e_max = 0.5
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Optional in the file; the command line names the scenario otherwise.
    #[serde(default)]
    pub scenario: Option<Scenario>,
    pub model: ModelConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    /// Adiabatic parameters, positive and strictly descending.
    #[serde(default)]
    pub etas: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub dispersion: DispersionConfig,
    #[serde(default)]
    pub microscopic: Option<MicroscopicConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The scenario to run, reconciling the file with a command-line choice.
    pub fn resolve_scenario(&self, requested: Option<Scenario>) -> Result<Scenario, HarnessError> {
        match (self.scenario, requested) {
            (Some(a), Some(b)) if a != b => Err(HarnessError::Config(format!(
                "config is for scenario `{a}` but `{b}` was requested"
            ))),
            (Some(a), _) | (None, Some(a)) => Ok(a),
            (None, None) => Err(HarnessError::Config("no scenario given".into())),
        }
    }

    /// Checks the structural invariants that do not need a model.
    pub fn validate(&self, scenario: Scenario) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if !(self.model.tau.is_finite() && self.model.tau >= 0.0) {
            return bad(format!("model.tau = {} must be finite and nonnegative", self.model.tau));
        }
        if self.etas.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return bad(format!("etas {:?} must be positive", self.etas));
        }
        if self.etas.windows(2).any(|w| !(w[0] > w[1])) {
            return bad(format!("etas {:?} must be strictly descending", self.etas));
        }
        if scenario.needs_etas() && self.etas.is_empty() {
            return bad(format!("scenario `{scenario}` needs a non-empty `etas` list"));
        }
        if let Some(step) = self.solver.max_step {
            if !(step > 0.0 && step.is_finite()) {
                return bad(format!("solver.max_step = {step} must be positive"));
            }
        }
        match scenario {
            Scenario::Spectral => {
                let s = &self.spectral;
                if s.energies.is_empty() && s.points < 2 {
                    return bad("spectral.points must be at least 2".into());
                }
                if !(s.slope_offset > 0.0) || s.derivative_offsets.iter().any(|&d| !(d > 0.0)) {
                    return bad("spectral offsets must be positive".into());
                }
            }
            Scenario::Dispersion => {
                let d = &self.dispersion;
                if !(d.t_min > 0.0 && d.t_max > d.t_min && d.points >= 3) {
                    return bad(format!(
                        "dispersion window needs 0 < t_min < t_max and at least 3 points, got [{}, {}] with {}",
                        d.t_min, d.t_max, d.points
                    ));
                }
            }
            Scenario::Microscopic => match &self.microscopic {
                None => return bad("scenario `microscopic` needs a [microscopic] block".into()),
                Some(m) => {
                    if m.alphas.is_empty() || m.alphas.iter().any(|&a| !(a > 0.0)) {
                        return bad(format!("microscopic.alphas {:?} must be positive", m.alphas));
                    }
                    if m.alphas.windows(2).any(|w| !(w[0] < w[1])) {
                        return bad(format!("microscopic.alphas {:?} must be ascending", m.alphas));
                    }
                }
            },
            _ => {}
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
etas = [0.2, 0.1]
[model]
tau = 0.5
[model.measure]
family = "power_law"
nu = 1
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.schedule, ScheduleConfig::default());
        assert_eq!(c.tolerances, Tolerances::default());
        assert!(c.validate(Scenario::Breakdown).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[schedule]\ne_lo = -1.0\ne_max = 0.5\nwidth = 2.0\n");
        assert!(ScenarioConfig::from_toml_str(&text).is_err());
        let text = format!("colour = 1\n{MINIMAL}");
        assert!(ScenarioConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn etas_must_descend() {
        let mut c = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        c.etas = vec![0.1, 0.2];
        assert!(c.validate(Scenario::Breakdown).is_err());
        c.etas = vec![0.1, -0.2];
        assert!(c.validate(Scenario::Breakdown).is_err());
        c.etas.clear();
        assert!(c.validate(Scenario::Breakdown).is_err());
        assert!(c.validate(Scenario::Spectral).is_ok());
    }

    #[test]
    fn microscopic_needs_its_block() {
        let c = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert!(c.validate(Scenario::Microscopic).is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("sweep".parse::<Scenario>().is_err());
    }

    #[test]
    fn conflicting_scenarios_are_rejected() {
        let mut c = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        c.scenario = Some(Scenario::Breakdown);
        assert!(c.resolve_scenario(Some(Scenario::Dyson)).is_err());
        assert_eq!(c.resolve_scenario(None).unwrap(), Scenario::Breakdown);
    }
}
