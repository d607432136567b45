//! Stationary analysis of the dot coupled to the continuum.
//!
//! With the dot energy frozen at `E`, eigenvalues below the continuum are the
//! zeros of the Feshbach map `F(x, E) = E - x - τ² m₁(x)`. Above the threshold
//! the same map has boundary values whose imaginary part is `-πτ²μ`, and the
//! dot's spectral density is `ρ = τ²μ/|F|²`.

mod density;
mod state;

pub use density::{DispersiveBound, SpectralDensity, StaticPropagator};
pub use state::{overlap_distance, RankOneState, ResolventTail};

use num_complex::Complex64;

use crate::formfactor::{FormfactorError, SpectralMeasure};
use crate::roots::{brent, RootError, Tolerance};

/// Residual target for bound-state roots.
const ROOT_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Measure(#[from] FormfactorError),
    #[error("no bound state at E = {energy}: the critical energy is {critical}")]
    NoBoundState { energy: f64, critical: f64 },
    #[error("unsupported regime: {0}")]
    Unsupported(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("|F| is not bounded below at E = {energy} (infimum {infimum:.3e})")]
    NotDispersive { energy: f64, infimum: f64 },
    #[error("state is not normalized: norm² = {0}")]
    NotNormalized(f64),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Instantaneous eigenpair of the coupled Hamiltonian below the continuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    /// Dot energy `E`.
    pub energy: f64,
    /// Eigenvalue `λ(E)`.
    pub eigenvalue: f64,
    /// `|⟨dot, Ψ(E)⟩|² = 1/(1 + τ² m₂(λ))`.
    pub dot_weight_sq: f64,
}

/// Threshold limit of the bound state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalData {
    /// `E_c = τ² m₁(0)`
    pub energy: f64,
    /// `1/(1 + τ² m₂(0))`
    pub dot_weight_sq: f64,
}

/// The two-channel model: a spectral measure and a coupling strength.
#[derive(Debug, Clone)]
pub struct Model {
    measure: SpectralMeasure,
    tau: f64,
    critical: Result<CriticalData, SpectralError>,
}

impl Model {
    /// `tau = 0` is allowed and gives the decoupled model.
    pub fn new(measure: SpectralMeasure, tau: f64) -> Result<Self, SpectralError> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(SpectralError::InvalidModel(format!("coupling τ = {tau} must be finite and nonnegative")));
        }
        let critical = (|| {
            let m1 = measure.moment(1, 0.0)?;
            let m2 = measure.moment(2, 0.0)?;
            Ok(CriticalData {
                energy: tau * tau * m1,
                dot_weight_sq: 1.0 / (1.0 + tau * tau * m2),
            })
        })()
        .map_err(|e: FormfactorError| SpectralError::InvalidModel(format!("threshold moments: {e}")));
        Ok(Self {
            measure,
            tau,
            critical,
        })
    }

    pub fn measure(&self) -> &SpectralMeasure {
        &self.measure
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tau_sq(&self) -> f64 {
        self.tau * self.tau
    }

    /// Critical energy and threshold dot weight.
    pub fn critical(&self) -> Result<CriticalData, SpectralError> {
        self.critical.clone()
    }

    /// Requires the bound state to reach the threshold inside the pulse, i.e.
    /// `E_c < E_m`.
    pub fn check_subcritical(&self, e_max: f64) -> Result<(), SpectralError> {
        let c = self.critical()?;
        if c.energy < e_max {
            Ok(())
        } else {
            Err(SpectralError::InvalidModel(format!(
                "critical energy {} is not below the pulse maximum {e_max}; reduce τ",
                c.energy
            )))
        }
    }

    /// `F(x, E)` below the support of the measure.
    pub fn feshbach_below(&self, x: f64, energy: f64) -> Result<f64, SpectralError> {
        let lo = self.measure.support_lo();
        if !(x < lo) {
            return Err(SpectralError::Unsupported(format!(
                "x = {x} is not below the continuum edge {lo}; use the boundary value"
            )));
        }
        Ok(self.feshbach_unchecked(x, energy)?)
    }

    fn feshbach_unchecked(&self, x: f64, energy: f64) -> Result<f64, FormfactorError> {
        if self.tau == 0.0 {
            return Ok(energy - x);
        }
        Ok(energy - x - self.tau_sq() * self.measure.moment(1, x)?)
    }

    /// `F(r² + i0, E)`.
    pub fn feshbach_boundary(&self, r: f64, energy: f64) -> Result<Complex64, SpectralError> {
        let x = r * r;
        let lo = self.measure.support_lo();
        if !(r > 0.0) {
            return Err(SpectralError::Unsupported(format!("boundary value needs r > 0, got {r}")));
        }
        if self.tau == 0.0 {
            return Ok(Complex64::new(energy - x, 0.0));
        }
        if x < lo {
            return Ok(Complex64::new(self.feshbach_unchecked(x, energy)?, 0.0));
        }
        if x >= self.measure.lambda_max() {
            // beyond the truncation the integral term is negligible next to x
            return Ok(Complex64::new(energy - x, 0.0));
        }
        let pv = self.measure.principal_value(x)?;
        let im = -std::f64::consts::PI * self.tau_sq() * self.measure.density(x);
        Ok(Complex64::new(energy - x - self.tau_sq() * pv, im))
    }

    /// `λ(E)`, the eigenvalue below the continuum, for `E < E_c`.
    pub fn bound_state(&self, energy: f64) -> Result<BoundState, SpectralError> {
        if self.measure.support_lo() > 0.0 {
            return self.cutoff_bound_state(energy);
        }
        let critical = self.critical()?;
        if !(energy < critical.energy) {
            return Err(SpectralError::NoBoundState {
                energy,
                critical: critical.energy,
            });
        }
        let lower = energy.min(0.0) - critical.energy - 1.0;
        self.solve_bound_state(energy, lower, 0.0)
    }

    /// Bound state of a cutoff measure, which persists for every `E < δ²`
    /// including energies inside the gap `[0, δ²)`.
    pub fn cutoff_bound_state(&self, energy: f64) -> Result<BoundState, SpectralError> {
        let lo = self.measure.support_lo();
        if lo <= 0.0 {
            return Err(SpectralError::Unsupported("measure has no infrared cutoff".into()));
        }
        if !(energy < lo) {
            return Err(SpectralError::Unsupported(format!(
                "dot energy {energy} is not below the gap edge {lo}"
            )));
        }
        let m1 = self.measure.moment(1, energy)?;
        let lower = energy - self.tau_sq() * m1 - 1.0;
        self.solve_bound_state(energy, lower, energy)
    }

    fn solve_bound_state(&self, energy: f64, lower: f64, upper: f64) -> Result<BoundState, SpectralError> {
        let eigenvalue = if self.tau == 0.0 {
            energy
        } else {
            let mut failure = None;
            let f = |x: f64| match self.feshbach_unchecked(x, energy) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            };
            let tol = Tolerance {
                x: 1e-300,
                f: ROOT_RESIDUAL,
                max_iter: 300,
            };
            let root = brent(f, lower, upper, tol);
            if let Some(e) = failure {
                return Err(e.into());
            }
            root?
        };
        Ok(BoundState {
            energy,
            eigenvalue,
            dot_weight_sq: self.dot_weight_sq(eigenvalue)?,
        })
    }

    /// `1/(1 + τ² m₂(λ))`
    pub fn dot_weight_sq(&self, eigenvalue: f64) -> Result<f64, SpectralError> {
        if self.tau == 0.0 {
            return Ok(1.0);
        }
        Ok(1.0 / (1.0 + self.tau_sq() * self.measure.moment(2, eigenvalue)?))
    }

    /// `ρ(λ) = τ² μ(λ) / |F(λ + i0, E)|²`
    pub fn spectral_density(&self, energy: f64, lambda: f64) -> Result<f64, SpectralError> {
        let m = self.measure.density(lambda);
        if m == 0.0 || self.tau == 0.0 {
            return Ok(0.0);
        }
        let f = self.feshbach_boundary(lambda.sqrt(), energy)?;
        Ok(self.tau_sq() * m / f.norm_sqr())
    }

    /// Real-axis resonance locator: the `r > 0` where `Re F(r² + i0, E)`
    /// vanishes, if it does inside the support.
    pub fn resonance(&self, energy: f64) -> Result<Option<f64>, SpectralError> {
        let lo = self.measure.support_lo();
        let hi = (4.0 * (energy.abs() + 1.0)).min(0.5 * self.measure.lambda_max());
        let re = |x: f64| self.feshbach_boundary(x.sqrt(), energy).map(|f| f.re);
        let mut prev_x = lo + 1e-12 * (1.0 + lo);
        let mut prev = re(prev_x)?;
        let mut x = prev_x;
        while x < hi {
            x = lo + (x - lo) * 1.05;
            let cur = re(x)?;
            if prev.signum() != cur.signum() && self.measure.density(x) > 0.0 {
                let mut failure = None;
                let root = brent(
                    |y| match re(y) {
                        Ok(v) => v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    prev_x,
                    x,
                    Tolerance::default(),
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                return Ok(Some(root?.sqrt()));
            }
            prev_x = x;
            prev = cur;
        }
        Ok(None)
    }
}
