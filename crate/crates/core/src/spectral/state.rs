use num_complex::Complex64;

use super::{BoundState, Model, SpectralError};

/// Accepted deviation of `‖ψ‖²` from one.
const NORM_TOLERANCE: f64 = 1e-8;

/// Continuum component `coef/(λ - shift)` of a state, in the representation
/// where the coupling vector is the constant function `1` on `L²(μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventTail {
    pub coef: Complex64,
    pub shift: f64,
}

/// A state `(dot amplitude, continuum tail)` whose tail is a single resolvent
/// applied to the coupling vector. Eigenvectors of the model and the bare dot
/// state all have this form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOneState {
    pub dot: Complex64,
    pub tail: Option<ResolventTail>,
}

impl RankOneState {
    /// The bare dot state.
    pub fn dot_only() -> Self {
        Self {
            dot: Complex64::new(1.0, 0.0),
            tail: None,
        }
    }

    /// `Ψ(E) = c (1, -τ/(λ - λ(E)))` with `c = √dotWeightSq`.
    pub fn bound(model: &Model, state: &BoundState) -> Self {
        Self::eigenvector(model, state.eigenvalue, state.dot_weight_sq)
    }

    /// Threshold eigenvector `Ψ_c`, the `E ↑ E_c` limit of [`bound`](Self::bound).
    pub fn critical(model: &Model) -> Result<Self, SpectralError> {
        let c = model.critical()?;
        Ok(Self::eigenvector(model, 0.0, c.dot_weight_sq))
    }

    fn eigenvector(model: &Model, eigenvalue: f64, dot_weight_sq: f64) -> Self {
        let c = dot_weight_sq.sqrt();
        let tail = (model.tau() > 0.0).then(|| ResolventTail {
            coef: Complex64::new(-model.tau() * c, 0.0),
            shift: eigenvalue,
        });
        Self {
            dot: Complex64::new(c, 0.0),
            tail,
        }
    }

    /// Multiplies by a global phase.
    pub fn with_phase(self, phase: f64) -> Self {
        let z = Complex64::from_polar(1.0, phase);
        Self {
            dot: self.dot * z,
            tail: self.tail.map(|t| ResolventTail {
                coef: t.coef * z,
                shift: t.shift,
            }),
        }
    }

    pub fn norm_sq(&self, model: &Model) -> Result<f64, SpectralError> {
        let tail = match self.tail {
            Some(t) => t.coef.norm_sqr() * model.measure().moment(2, t.shift)?,
            None => 0.0,
        };
        Ok(self.dot.norm_sqr() + tail)
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, model: &Model, other: &Self) -> Result<Complex64, SpectralError> {
        let mut v = self.dot.conj() * other.dot;
        if let (Some(u), Some(w)) = (self.tail, other.tail) {
            v += u.coef.conj() * w.coef * model.measure().mixed_moment(u.shift, w.shift)?;
        }
        Ok(v)
    }

    fn check_normalized(&self, model: &Model) -> Result<(), SpectralError> {
        let n = self.norm_sq(model)?;
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(SpectralError::NotNormalized(n));
        }
        Ok(())
    }
}

/// `‖|u⟩⟨u| - |v⟩⟨v|‖ = √(1 - |⟨u, v⟩|²)` for unit vectors.
///
/// `1 - |⟨u, v⟩|²` is assembled from manifestly nonnegative integrals
/// (Lagrange's identity) instead of by subtraction, so nearby states keep
/// their relative accuracy.
pub fn overlap_distance(model: &Model, u: &RankOneState, v: &RankOneState) -> Result<f64, SpectralError> {
    u.check_normalized(model)?;
    v.check_normalized(model)?;
    let measure = model.measure();
    let (a, b) = (u.dot, v.dot);
    let zero = ResolventTail {
        coef: Complex64::new(0.0, 0.0),
        shift: f64::NEG_INFINITY,
    };
    let tu = u.tail.unwrap_or(zero);
    let tv = v.tail.unwrap_or(zero);

    // dot-continuum pairs: ∫ μ |a β/(λ-y) - b α/(λ-x)|²
    let cross = match (u.tail, v.tail) {
        (None, None) => 0.0,
        (Some(t), None) => b.norm_sqr() * t.coef.norm_sqr() * measure.moment(2, t.shift)?,
        (None, Some(t)) => a.norm_sqr() * t.coef.norm_sqr() * measure.moment(2, t.shift)?,
        (Some(_), Some(_)) => {
            let (x, y) = (tu.shift, tv.shift);
            let p = a * tv.coef;
            let q = b * tu.coef;
            let lin = p - q;
            let cst = p * x - q * y;
            measure.integrate(|l| {
                let num = (lin * l - cst).norm_sqr();
                num / ((l - x) * (l - x) * (l - y) * (l - y))
            })
        }
    };

    // continuum-continuum pairs: |αβ|² (x-y)² (J0 J2 - J1²), W = μ/((λ-x)²(λ-y)²)
    let tail_pair = match (u.tail, v.tail) {
        (Some(tu), Some(tv)) if tu.shift != tv.shift => {
            let (x, y) = (tu.shift, tv.shift);
            let w = |l: f64| 1.0 / ((l - x) * (l - x) * (l - y) * (l - y));
            let j0 = measure.integrate(w);
            let mean = measure.integrate(|l| l * w(l)) / j0;
            let spread = measure.integrate(|l| (l - mean) * (l - mean) * w(l));
            (tu.coef * tv.coef).norm_sqr() * (x - y) * (x - y) * j0 * spread
        }
        _ => 0.0,
    };

    Ok((cross + tail_pair).clamp(0.0, 1.0).sqrt())
}

impl Model {
    /// `‖P'(E)‖` by a forward difference of [`overlap_distance`] with step
    /// `10⁻²(E_c - E)`.
    pub fn projection_derivative_norm(&self, energy: f64) -> Result<f64, SpectralError> {
        let ec = self.critical()?.energy;
        let h = 1e-2 * (ec - energy);
        let here = RankOneState::bound(self, &self.bound_state(energy)?);
        let there = RankOneState::bound(self, &self.bound_state(energy + h)?);
        Ok(overlap_distance(self, &here, &there)? / h)
    }
}
