use num_complex::Complex64;

use super::{Model, SpectralError};
use crate::quadrature::{PanelRule, SampledFunction, Tail};
use crate::roots::golden_min;

/// `inf |F|` below this counts as a zero of the Feshbach map.
const DISPERSIVE_FLOOR: f64 = 1e-6;

/// Outcome of the lower-bound check on `|F(r² + i0, E)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveBound {
    pub holds: bool,
    /// Located infimum of `|F|` over `r > 0`.
    pub infimum: f64,
    /// Where it is attained, as `r`.
    pub argmin: f64,
}

/// The dot's absolutely continuous spectral density at fixed dot energy,
/// tabulated on a grid refined around the resonance.
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    energy: f64,
    rule: PanelRule,
    sampled: SampledFunction,
    resonance: Option<f64>,
}

impl SpectralDensity {
    pub fn new(model: &Model, energy: f64) -> Result<Self, SpectralError> {
        let measure = model.measure();
        let mut grid = measure.rule().grid().clone();
        let resonance = if model.tau() > 0.0 {
            model.resonance(energy)?
        } else {
            None
        };
        if let Some(r) = resonance {
            let x = r * r;
            let width = 0.02 * std::f64::consts::PI * model.tau_sq() * measure.density(x);
            if width > 0.0 && width < 0.05 * x {
                grid = grid.refine_around(x, width, crate::formfactor::PANEL_RATIO);
            }
        }
        let rule = grid.rule();
        let values = rule
            .nodes()
            .iter()
            .map(|&l| model.spectral_density(energy, l))
            .collect::<Result<Vec<_>, _>>()?;
        let sampled = rule.sample(values, Tail::Algebraic);
        Ok(Self {
            energy,
            rule,
            sampled,
            resonance,
        })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `∫ ρ`, the continuum part of the dot's spectral weight.
    pub fn total_weight(&self) -> f64 {
        self.sampled.integral()
    }

    /// `∫ ρ(λ) e^{-iλt} dλ`
    pub fn fourier(&self, t: f64) -> Complex64 {
        self.sampled.fourier(t)
    }

    /// `ρ` multiplied by `f`, for Fourier integrals of filtered states.
    pub fn weighted<F: Fn(f64) -> f64>(&self, f: F) -> SampledFunction {
        let values = self
            .rule
            .nodes()
            .iter()
            .zip(self.sampled.values())
            .map(|(&l, &r)| if r == 0.0 { 0.0 } else { r * f(l) })
            .collect();
        self.rule.sample(values, Tail::Algebraic)
    }

    /// Real-axis resonance position `r_E`, if any.
    pub fn resonance(&self) -> Option<f64> {
        self.resonance
    }
}

/// Survival amplitude `⟨dot, e^{-itH} dot⟩` at a frozen dot energy obeying the
/// dispersive lower bound.
#[derive(Debug, Clone)]
pub struct StaticPropagator {
    density: SpectralDensity,
    check: DispersiveBound,
}

impl StaticPropagator {
    pub fn new(model: &Model, energy: f64) -> Result<Self, SpectralError> {
        let check = model.dispersive_check(energy)?;
        if !check.holds {
            return Err(SpectralError::NotDispersive {
                energy,
                infimum: check.infimum,
            });
        }
        Ok(Self {
            density: SpectralDensity::new(model, energy)?,
            check,
        })
    }

    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.density.fourier(t)
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    pub fn check(&self) -> DispersiveBound {
        self.check
    }
}

impl Model {
    /// Scans `|F(r² + i0, E)|` on a graded grid and refines the smallest value.
    pub fn dispersive_check(&self, energy: f64) -> Result<DispersiveBound, SpectralError> {
        let measure = self.measure();
        let lo = measure.support_lo();
        let critical = self.critical().map(|c| c.energy).unwrap_or(0.0);
        let hi = (4.0 * (energy.abs() + critical.abs() + 1.0) + lo).min(0.5 * measure.lambda_max());
        let eval = |x: f64| self.feshbach_boundary(x.sqrt(), energy);

        let mut xs = Vec::new();
        let first = 1e-10 * (1.0 + lo);
        let mut x = first;
        while x < lo {
            xs.push(x);
            x *= 1.02;
        }
        let mut d = first;
        while lo + d < hi {
            xs.push(lo + d);
            d *= 1.02;
        }
        xs.push(hi);
        let fs = xs.iter().map(|&x| eval(x)).collect::<Result<Vec<_>, _>>()?;

        for i in 1..xs.len() {
            let real_pair = fs[i - 1].im == 0.0 && fs[i].im == 0.0;
            if real_pair && fs[i - 1].re.signum() != fs[i].re.signum() {
                // a genuine real zero: an eigenvalue embedded at r²
                let r = (0.5 * (xs[i - 1] + xs[i])).sqrt();
                return Ok(DispersiveBound {
                    holds: false,
                    infimum: 0.0,
                    argmin: r,
                });
            }
        }

        let (imin, _) = fs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let a = xs[imin.saturating_sub(1)];
        let b = xs[(imin + 1).min(xs.len() - 1)];
        let mut best = (xs[imin], fs[imin].norm());
        if b > a {
            let (x, v) = golden_min(
                |x| eval(x).map(|f| f.norm()).unwrap_or(f64::INFINITY),
                a,
                b,
                1e-12 * (1.0 + b),
            );
            if v < best.1 {
                best = (x, v);
            }
        }
        Ok(DispersiveBound {
            holds: best.1 > DISPERSIVE_FLOOR,
            infimum: best.1,
            argmin: best.0.sqrt(),
        })
    }

    /// `∫ e^{-iλt} ρ(λ) dλ`. Builds the density on every call; use
    /// [`StaticPropagator`] for repeated evaluation.
    pub fn static_survival(&self, energy: f64, t: f64) -> Result<Complex64, SpectralError> {
        Ok(StaticPropagator::new(self, energy)?.amplitude(t))
    }
}
