use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::roots::{brent, RootError, Tolerance};

/// Dot-energy pulse `E(s)` on the slow time `s ∈ [-1, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    shape: Shape,
    reversed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `E_lo + (E_m - E_lo) sin²(π(s+1))`
    SinSquared { e_lo: f64, e_max: f64 },
    Frozen(f64),
}

/// Text-configurable pulse parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub e_lo: f64,
    pub e_max: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            e_lo: -1.0,
            e_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("pulse needs E_lo < 0 < E_max, got E_lo = {e_lo}, E_max = {e_max}")]
    InvalidPulse { e_lo: f64, e_max: f64 },
    #[error("energy {0} is not crossed by the pulse")]
    NotCrossed(f64),
    #[error(transparent)]
    Root(#[from] RootError),
}

impl PulseSchedule {
    /// Smooth single-hump pulse rising from `e_lo` at `s = -1` to `e_max` at
    /// `s = -1/2` and back to `e_lo` at `s = 0`.
    pub fn sin_squared(e_lo: f64, e_max: f64) -> Result<Self, ScheduleError> {
        if !(e_lo < 0.0 && e_max > 0.0 && e_lo.is_finite() && e_max.is_finite()) {
            return Err(ScheduleError::InvalidPulse { e_lo, e_max });
        }
        Ok(Self {
            shape: Shape::SinSquared { e_lo, e_max },
            reversed: false,
        })
    }

    pub fn from_config(config: &ScheduleConfig) -> Result<Self, ScheduleError> {
        Self::sin_squared(config.e_lo, config.e_max)
    }

    /// Constant dot energy, for stationary checks.
    pub fn frozen(energy: f64) -> Self {
        Self {
            shape: Shape::Frozen(energy),
            reversed: false,
        }
    }

    /// The time-reversed pulse `s ↦ E(-1 - s)`.
    pub fn reversed(self) -> Self {
        Self {
            reversed: !self.reversed,
            ..self
        }
    }

    pub fn energy(&self, s: f64) -> f64 {
        let s = if self.reversed { -1.0 - s } else { s };
        match self.shape {
            Shape::SinSquared { e_lo, e_max } => {
                let x = (PI * (s + 1.0)).sin();
                e_lo + (e_max - e_lo) * x * x
            }
            Shape::Frozen(e) => e,
        }
    }

    /// `E(-1)`
    pub fn e_lo(&self) -> f64 {
        self.energy(-1.0)
    }

    /// Largest dot energy reached.
    pub fn e_max(&self) -> f64 {
        match self.shape {
            Shape::SinSquared { e_max, .. } => e_max,
            Shape::Frozen(e) => e,
        }
    }

    /// Location of the maximum.
    pub fn s_max(&self) -> f64 {
        -0.5
    }

    /// `(s_c, s_c')`: where the rising and the falling branch cross `level`.
    pub fn crossings(&self, level: f64) -> Result<(f64, f64), ScheduleError> {
        let (e_lo, e_max) = match self.shape {
            Shape::SinSquared { e_lo, e_max } => (e_lo, e_max),
            Shape::Frozen(_) => return Err(ScheduleError::NotCrossed(level)),
        };
        if !(level > e_lo && level < e_max) {
            return Err(ScheduleError::NotCrossed(level));
        }
        let tol = Tolerance {
            x: 1e-13,
            f: 0.0,
            max_iter: 200,
        };
        let f = |s: f64| self.energy(s) - level;
        let rising = brent(f, -1.0, self.s_max(), tol)?;
        let falling = brent(f, self.s_max(), 0.0, tol)?;
        Ok((rising, falling))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_shape() {
        let p = PulseSchedule::sin_squared(-1.0, 0.5).unwrap();
        assert!((p.energy(-1.0) + 1.0).abs() < 1e-15);
        assert!((p.energy(0.0) + 1.0).abs() < 1e-15);
        assert!((p.energy(-0.5) - 0.5).abs() < 1e-15);
        assert!(PulseSchedule::sin_squared(0.1, 0.5).is_err());
    }

    #[test]
    fn crossings_match_closed_form() {
        let p = PulseSchedule::sin_squared(-1.0, 0.5).unwrap();
        let level = 0.25;
        // sin²(π(s+1)) = (level + 1)/1.5
        let s = ((level + 1.0) / 1.5f64).sqrt().asin() / PI - 1.0;
        let (a, b) = p.crossings(level).unwrap();
        assert!((a - s).abs() < 1e-12);
        assert!((b - (-1.0 - s)).abs() < 1e-12);
        assert!(p.crossings(0.6).is_err());
    }

    #[test]
    fn reversal_mirrors_the_pulse() {
        let p = PulseSchedule::sin_squared(-1.0, 0.7).unwrap();
        let r = p.reversed();
        for &s in &[-0.9, -0.6, -0.2] {
            assert_eq!(r.energy(s), p.energy(-1.0 - s));
        }
        assert_eq!(r.reversed(), p);
    }
}
