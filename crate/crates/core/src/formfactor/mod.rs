//! The coupling function, seen only through its reduced spectral measure.
//!
//! Every observable of the model depends on the form factor through the density
//! `μ(λ)` of `|φ̂|²` in the energy variable `λ = k²`. A [`SpectralMeasure`]
//! owns a normalized `μ` together with a quadrature rule adapted to it and
//! provides moments, the free-channel memory kernel, resolvent-weighted driving
//! functions and finite-mode discretizations.

mod family;

pub use family::{Family, FamilyKind, MeasureConfig};

use std::sync::Arc;

use num_complex::Complex64;

use crate::quadrature::{gauss_legendre, PanelGrid, PanelRule, SampledFunction, Tail};

/// Relative weight of the density beyond the truncation energy we accept.
const TAIL_TOLERANCE: f64 = 1e-11;
/// Largest truncation energy tried when none is configured.
const MAX_CUTOFF: f64 = 1e12;
/// Geometric growth of the quadrature panels.
pub(crate) const PANEL_RATIO: f64 = 1.1;
pub const DEFAULT_MODES: usize = 2000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormfactorError {
    #[error("{what} = {value} is outside the domain")]
    Domain { what: &'static str, value: f64 },
    #[error("moment of order {k} diverges at shift {shift}")]
    Divergent { k: u32, shift: f64 },
    #[error("invalid measure parameter: {0}")]
    InvalidParameter(String),
    #[error("measure config: {0}")]
    Config(String),
}

/// Normalized density `μ(λ)` on `[0, ∞)`, immutable and cheap to clone.
#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    inner: Arc<Inner>,
}

#[derive(Debug)]
struct Inner {
    family: Family,
    norm: f64,
    lambda_max: f64,
    n_default: usize,
    rule: PanelRule,
    density: SampledFunction,
    tail_mass: f64,
}

impl SpectralMeasure {
    pub fn new(family: Family) -> Result<Self, FormfactorError> {
        Self::with_options(family, None, None)
    }

    pub fn power_law(nu: u32, p: f64) -> Result<Self, FormfactorError> {
        Self::new(Family::PowerLaw { nu, p })
    }

    pub fn ir_cutoff(base: Family, delta: f64) -> Result<Self, FormfactorError> {
        Self::new(Family::IrCutoff {
            base: Box::new(base),
            delta,
        })
    }

    pub fn exp_flat(scale: f64, p: f64) -> Result<Self, FormfactorError> {
        Self::new(Family::ExpFlat { scale, p })
    }

    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self, FormfactorError> {
        Self::new(Family::Tabulated { nodes, values })
    }

    pub fn from_config(config: &MeasureConfig) -> Result<Self, FormfactorError> {
        Self::with_options(config.family()?, config.lambda_max, config.n_default)
    }

    /// Builds the measure, choosing the truncation energy `Λ` automatically
    /// unless one is given.
    pub fn with_options(
        family: Family,
        lambda_max: Option<f64>,
        n_default: Option<usize>,
    ) -> Result<Self, FormfactorError> {
        family.validate()?;
        let lo = family.support_lo();
        let lambda_max = match (lambda_max, &family) {
            (Some(l), _) => l,
            (None, Family::Tabulated { nodes, .. }) => *nodes.last().unwrap(),
            (None, _) => choose_cutoff(&family)?,
        };
        if !(lambda_max.is_finite() && lambda_max > lo) {
            return Err(FormfactorError::InvalidParameter(format!(
                "truncation energy {lambda_max} must exceed the support edge {lo}"
            )));
        }
        let n_default = n_default.unwrap_or(DEFAULT_MODES);
        if n_default < 2 {
            return Err(FormfactorError::InvalidParameter("n_default must be at least 2".into()));
        }

        let mut grid = measure_grid(lo, lambda_max);
        if let Family::Tabulated { nodes, .. } = &family {
            grid.insert(nodes);
        }
        let rule = grid.rule();
        let raw: Vec<f64> = rule.nodes().iter().map(|&x| family.raw(x)).collect();
        let raw_tail = family.raw_tail_mass(lambda_max);
        let tail = match raw_tail {
            Some(v) => Tail::Fixed(v),
            None => Tail::Algebraic,
        };
        let mass = family
            .raw_mass()
            .unwrap_or_else(|| rule.integrate(&raw, tail));
        if !(mass.is_finite() && mass > 0.0) {
            return Err(FormfactorError::InvalidParameter(format!("measure mass {mass} is not positive")));
        }
        let norm = 1.0 / mass;
        let values: Vec<f64> = raw.iter().map(|v| v * norm).collect();
        let tail_mass = match raw_tail {
            Some(v) => v * norm,
            None => rule.integrate(&values, Tail::Algebraic) - rule.integrate(&values, Tail::None),
        };
        let density = rule.sample(values, Tail::Fixed(tail_mass));
        Ok(Self {
            inner: Arc::new(Inner {
                family,
                norm,
                lambda_max,
                n_default,
                rule,
                density,
                tail_mass,
            }),
        })
    }

    pub fn family(&self) -> &Family {
        &self.inner.family
    }

    /// Factor `c` turning the family shape into a unit-mass density.
    pub fn norm_constant(&self) -> f64 {
        self.inner.norm
    }

    /// Truncation energy `Λ`.
    pub fn lambda_max(&self) -> f64 {
        self.inner.lambda_max
    }

    pub fn n_default(&self) -> usize {
        self.inner.n_default
    }

    /// Lower edge of the support: `0`, or `δ²` for a cutoff measure.
    pub fn support_lo(&self) -> f64 {
        self.inner.family.support_lo()
    }

    /// IR order `ν`, when the family has one.
    pub fn ir_order(&self) -> Option<u32> {
        self.inner.family.ir_order()
    }

    /// Mass of `μ` beyond `Λ`.
    pub fn tail_mass(&self) -> f64 {
        self.inner.tail_mass
    }

    pub(crate) fn rule(&self) -> &PanelRule {
        &self.inner.rule
    }

    /// `μ(λ)`; negative arguments are rejected.
    pub fn mu(&self, lambda: f64) -> Result<f64, FormfactorError> {
        if !(lambda >= 0.0) {
            return Err(FormfactorError::Domain {
                what: "λ",
                value: lambda,
            });
        }
        Ok(self.density(lambda))
    }

    /// `μ(λ)`, zero off the support.
    pub fn density(&self, lambda: f64) -> f64 {
        self.inner.norm * self.inner.family.raw(lambda)
    }

    /// `μ'(λ)`, analytic for power laws and a central difference otherwise.
    pub fn density_derivative(&self, lambda: f64) -> f64 {
        match &self.inner.family {
            Family::PowerLaw { nu, p } if lambda > 0.0 => {
                self.density(lambda) * ((*nu as f64 + 0.5) / lambda - p / (1.0 + lambda))
            }
            _ => {
                let h = 1e-6 * lambda.abs().max(1e-12);
                (self.density(lambda + h) - self.density(lambda - h)) / (2.0 * h)
            }
        }
    }

    /// Checks that `x` does not lie inside the support and that
    /// `μ(λ)/(λ-x)^k` is integrable.
    fn check_shift(&self, k: u32, x: f64) -> Result<(), FormfactorError> {
        let lo = self.support_lo();
        if !(x <= lo) {
            return Err(FormfactorError::Domain {
                what: "shift",
                value: x,
            });
        }
        if x == lo {
            if let Some(beta) = self.inner.family.edge_exponent() {
                if beta - k as f64 <= -1.0 {
                    return Err(FormfactorError::Divergent { k, shift: x });
                }
            }
        }
        Ok(())
    }

    /// `μ(λ)·f(λ)` at the quadrature nodes. The node at the support edge is
    /// never weighted, so a singular value there is dropped.
    fn weighted_values<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let rule = &self.inner.rule;
        let mut v: Vec<f64> = rule
            .nodes()
            .iter()
            .zip(self.inner.density.values())
            .map(|(&x, &m)| if m == 0.0 { 0.0 } else { m * f(x) })
            .collect();
        if !v[0].is_finite() {
            v[0] = 0.0;
        }
        v
    }

    /// `m_k(x) = ∫ μ(λ) (λ - x)^{-k} dλ` for `x` at or below the support.
    pub fn moment(&self, k: u32, shift: f64) -> Result<f64, FormfactorError> {
        self.check_shift(k, shift)?;
        if k == 0 {
            return Ok(self.inner.density.integral());
        }
        let values = self.weighted_values(|l| (l - shift).powi(-(k as i32)));
        Ok(self.inner.rule.integrate(&values, Tail::Algebraic))
    }

    /// `∫ μ(λ) f(λ) dλ` on the measure's own quadrature rule. A singular value
    /// of `f` at the support edge is ignored.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.inner.rule.integrate(&self.weighted_values(f), Tail::Algebraic)
    }

    /// `∫ μ(λ) / ((λ - x0)(λ - x1)) dλ`
    pub fn mixed_moment(&self, x0: f64, x1: f64) -> Result<f64, FormfactorError> {
        self.check_shift(if x0 == x1 { 2 } else { 1 }, x0)?;
        self.check_shift(if x0 == x1 { 2 } else { 1 }, x1)?;
        if x0 == x1 {
            return self.moment(2, x0);
        }
        let values = self.weighted_values(|l| 1.0 / ((l - x0) * (l - x1)));
        Ok(self.inner.rule.integrate(&values, Tail::Algebraic))
    }

    /// `P.V. ∫ μ(λ)/(λ - x) dλ` for `x` inside the support, by subtracting
    /// `μ(x)` and integrating the logarithm it leaves behind in closed form.
    pub fn principal_value(&self, x: f64) -> Result<f64, FormfactorError> {
        let lo = self.support_lo();
        let hi = self.lambda_max();
        if !(x > lo && x < hi) {
            return Err(FormfactorError::Domain {
                what: "principal value point",
                value: x,
            });
        }
        let mx = self.density(x);
        let slope = self.density_derivative(x);
        let rule = &self.inner.rule;
        let values: Vec<f64> = rule
            .nodes()
            .iter()
            .zip(self.inner.density.values())
            .map(|(&l, &m)| {
                let d = l - x;
                if d.abs() <= 1e-7 * x {
                    slope
                } else {
                    (m - mx) / d
                }
            })
            .collect();
        let body = rule.integrate(&values, Tail::None);
        let tail = self.inner.tail_mass / (hi - x);
        Ok(body + mx * ((hi - x) / (x - lo)).ln() + tail)
    }

    /// Memory kernel `K(t) = ∫ μ(λ) e^{-iλt} dλ`.
    pub fn kernel(&self, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        self.inner.density.fourier(t)
    }

    /// `μ(λ)·f(λ)` prepared for repeated Fourier evaluation.
    pub fn weighted<F: Fn(f64) -> f64>(&self, f: F) -> SampledFunction {
        self.inner.rule.sample(self.weighted_values(f), Tail::Algebraic)
    }

    /// `μ(λ)/(λ - x0)` prepared for repeated evaluation of [`driving_h`](Self::driving_h).
    pub fn resolvent_weighted(&self, x0: f64) -> Result<SampledFunction, FormfactorError> {
        self.check_shift(1, x0)?;
        Ok(self.weighted(|l| 1.0 / (l - x0)))
    }

    /// `h(t; x0) = ∫ μ(λ) e^{-iλt} / (λ - x0) dλ`
    pub fn driving_h(&self, t: f64, x0: f64) -> Result<Complex64, FormfactorError> {
        Ok(self.resolvent_weighted(x0)?.fourier(t))
    }

    /// `h₂(t; x0, x1) = ∫ μ(λ) e^{-iλt} / ((λ - x0)(λ - x1)) dλ`
    pub fn driving_h2(&self, t: f64, x0: f64, x1: f64) -> Result<Complex64, FormfactorError> {
        let k = if x0 == x1 { 2 } else { 1 };
        self.check_shift(k, x0)?;
        self.check_shift(k, x1)?;
        Ok(self.weighted(|l| 1.0 / ((l - x0) * (l - x1))).fourier(t))
    }

    /// Finite-mode discretization: nodes `λ_j` and weights `w_j` such that
    /// `Σ w_j μ(λ_j) f(λ_j) ≈ ∫ μ f`.
    ///
    /// Gauss–Legendre in `u` with `λ = lo + (u/(1-u))²` clusters nodes at the
    /// threshold and spreads them out to `Λ`. The weights are rescaled so the
    /// discrete measure has unit mass exactly.
    pub fn discretize(&self, n: usize) -> Vec<(f64, f64)> {
        assert!(n >= 2, "discretization needs at least two modes");
        let lo = self.support_lo();
        let q_max = (self.lambda_max() - lo).sqrt();
        let u_max = q_max / (1.0 + q_max);
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * u_max;
        let mut out: Vec<(f64, f64)> = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| {
                let u = half * (xi + 1.0);
                let q = u / (1.0 - u);
                let dq = 1.0 / ((1.0 - u) * (1.0 - u));
                (lo + q * q, wi * half * 2.0 * q * dq)
            })
            .collect();
        let mass: f64 = out.iter().map(|&(l, w)| w * self.density(l)).sum();
        for node in &mut out {
            node.1 /= mass;
        }
        out
    }

    /// [`discretize`](Self::discretize) with the configured default size.
    pub fn discretize_default(&self) -> Vec<(f64, f64)> {
        self.discretize(self.inner.n_default)
    }
}

/// Geometric panel grid on `[lo, hi]` graded towards the support edge.
pub(crate) fn measure_grid(lo: f64, hi: f64) -> PanelGrid {
    let first = if lo == 0.0 { 1e-14 } else { 1e-12 * lo };
    PanelGrid::graded(lo, first, hi, PANEL_RATIO)
}

/// Smallest power of ten beyond which the normalized density carries less than
/// [`TAIL_TOLERANCE`] of the mass.
fn choose_cutoff(family: &Family) -> Result<f64, FormfactorError> {
    let lo = family.support_lo();
    let probe_hi = (lo + 1.0) * 1e4;
    let probe = measure_grid(lo, probe_hi).rule();
    let mass = probe.integrate_fn(|x| family.raw(x), Tail::Algebraic);
    let gamma = family.tail_exponent().unwrap_or(2.0);
    let mut cutoff = (lo + 1.0) * 1e2;
    while cutoff < MAX_CUTOFF {
        let tail = match family.raw_tail_mass(cutoff) {
            Some(v) => v,
            None => family.raw(cutoff) * cutoff / (gamma - 1.0),
        };
        if tail <= TAIL_TOLERANCE * mass {
            return Ok(cutoff);
        }
        cutoff *= 10.0;
    }
    Ok(MAX_CUTOFF)
}
