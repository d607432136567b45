use serde::{Deserialize, Serialize};

use super::FormfactorError;

/// Shape of the reduced coupling density, before normalization.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `λ^{ν+1/2} (1+λ)^{-p}`, an order-`ν` zero of the form factor at `k = 0`.
    PowerLaw { nu: u32, p: f64 },
    /// `base(λ)` restricted to `λ > δ²`.
    IrCutoff { base: Box<Family>, delta: f64 },
    /// `exp(-2·scale/λ) (1+λ)^{-p}`, flat to all orders at the threshold.
    ExpFlat { scale: f64, p: f64 },
    /// Piecewise-linear interpolation of a table, zero outside it.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

impl Family {
    pub(crate) fn validate(&self) -> Result<(), FormfactorError> {
        let bad = |msg: String| Err(FormfactorError::InvalidParameter(msg));
        match self {
            Family::PowerLaw { nu, p } => {
                if *nu < 1 {
                    return bad(format!("IR order must be at least 1, got {nu}"));
                }
                if !(p.is_finite() && *p >= *nu as f64 + 3.0) {
                    return bad(format!("tail exponent p = {p} must be >= nu + 3"));
                }
            }
            Family::IrCutoff { base, delta } => {
                if !(delta.is_finite() && *delta > 0.0) {
                    return bad(format!("cutoff radius must be positive, got {delta}"));
                }
                if matches!(**base, Family::IrCutoff { .. }) {
                    return bad("nested cutoffs are not supported".into());
                }
                base.validate()?;
            }
            Family::ExpFlat { scale, p } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return bad(format!("scale must be positive, got {scale}"));
                }
                if !(p.is_finite() && *p > 1.5) {
                    return bad(format!("tail exponent p = {p} must exceed 3/2"));
                }
            }
            Family::Tabulated { nodes, values } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return bad("table needs at least two nodes and matching values".into());
                }
                if nodes[0] < 0.0 || !nodes.windows(2).all(|w| w[0] < w[1]) {
                    return bad("table nodes must be nonnegative and strictly increasing".into());
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("table values must be finite and nonnegative".into());
                }
                if values.iter().all(|v| *v == 0.0) {
                    return bad("table has no mass".into());
                }
            }
        }
        Ok(())
    }

    /// Unnormalized density.
    pub(crate) fn raw(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return 0.0;
        }
        match self {
            Family::PowerLaw { nu, p } => {
                lambda.powf(*nu as f64 + 0.5) * (1.0 + lambda).powf(-p)
            }
            Family::IrCutoff { base, delta } => {
                if lambda <= delta * delta {
                    0.0
                } else {
                    base.raw(lambda)
                }
            }
            Family::ExpFlat { scale, p } => {
                (-2.0 * scale / lambda).exp() * (1.0 + lambda).powf(-p)
            }
            Family::Tabulated { nodes, values } => {
                let n = nodes.len();
                if lambda < nodes[0] || lambda > nodes[n - 1] {
                    return 0.0;
                }
                let i = nodes.partition_point(|&x| x <= lambda).clamp(1, n - 1);
                let (x0, x1) = (nodes[i - 1], nodes[i]);
                let (y0, y1) = (values[i - 1], values[i]);
                y0 + (y1 - y0) * (lambda - x0) / (x1 - x0)
            }
        }
    }

    /// Lower edge of the support.
    pub(crate) fn support_lo(&self) -> f64 {
        match self {
            Family::PowerLaw { .. } | Family::ExpFlat { .. } => 0.0,
            Family::IrCutoff { base, delta } => (delta * delta).max(base.support_lo()),
            Family::Tabulated { nodes, .. } => nodes[0],
        }
    }

    /// Exponent `β` of `μ(λ) ~ (λ - lo)^β` at the lower edge; `None` when the
    /// density vanishes faster than any power.
    pub(crate) fn edge_exponent(&self) -> Option<f64> {
        match self {
            Family::PowerLaw { nu, .. } => Some(*nu as f64 + 0.5),
            Family::IrCutoff { .. } => Some(0.0),
            Family::ExpFlat { .. } => None,
            Family::Tabulated { values, .. } => Some(if values[0] > 0.0 { 0.0 } else { 1.0 }),
        }
    }

    /// IR order `ν` of the underlying form factor, where one is defined.
    pub fn ir_order(&self) -> Option<u32> {
        match self {
            Family::PowerLaw { nu, .. } => Some(*nu),
            Family::IrCutoff { base, .. } => base.ir_order(),
            _ => None,
        }
    }

    /// Large-`λ` decay exponent of the density.
    pub(crate) fn tail_exponent(&self) -> Option<f64> {
        match self {
            Family::PowerLaw { nu, p } => Some(p - *nu as f64 - 0.5),
            Family::IrCutoff { base, .. } => base.tail_exponent(),
            Family::ExpFlat { p, .. } => Some(*p),
            Family::Tabulated { .. } => None,
        }
    }

    /// Closed form of `∫_0^∞ raw` where one exists.
    pub(crate) fn raw_mass(&self) -> Option<f64> {
        match self {
            Family::PowerLaw { nu, p } => {
                let a = *nu as f64 + 1.5;
                Some(statrs::function::beta::beta(a, p - a))
            }
            _ => None,
        }
    }

    /// Closed form of `∫_Λ^∞ raw` where one exists.
    pub(crate) fn raw_tail_mass(&self, cutoff: f64) -> Option<f64> {
        match self {
            Family::PowerLaw { nu, p } => {
                let a = *nu as f64 + 1.5;
                let b = p - a;
                let x = 1.0 / (1.0 + cutoff);
                Some(statrs::function::beta::beta(a, b) * statrs::function::beta::beta_reg(b, a, x))
            }
            Family::IrCutoff { base, delta } if cutoff >= delta * delta => base.raw_tail_mass(cutoff),
            Family::Tabulated { .. } => Some(0.0),
            _ => None,
        }
    }
}

/// Kind tag used by [`MeasureConfig`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    PowerLaw,
    IrCutoff,
    ExpFlat,
    Tabulated,
}

/// Text-configurable description of a measure.
///
/// ```toml
/// family = "ir_cutoff"
/// base = "power_law"
/// nu = 1
/// p = 4.0
/// delta = 1.0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub family: FamilyKind,
    /// Family of the uncut density for `ir_cutoff`.
    #[serde(default)]
    pub base: Option<FamilyKind>,
    #[serde(default)]
    pub nu: Option<u32>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub nodes: Option<Vec<f64>>,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// Truncation energy Λ.
    #[serde(default)]
    pub lambda_max: Option<f64>,
    /// Default node count for [`super::SpectralMeasure::discretize`].
    #[serde(default)]
    pub n_default: Option<usize>,
}

impl MeasureConfig {
    pub fn power_law(nu: u32, p: f64) -> Self {
        Self {
            family: FamilyKind::PowerLaw,
            base: None,
            nu: Some(nu),
            p: Some(p),
            delta: None,
            scale: None,
            nodes: None,
            values: None,
            lambda_max: None,
            n_default: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, FormfactorError> {
        toml::from_str(text).map_err(|e| FormfactorError::Config(e.to_string()))
    }

    pub fn family(&self) -> Result<Family, FormfactorError> {
        self.family_of(self.family)
    }

    fn family_of(&self, kind: FamilyKind) -> Result<Family, FormfactorError> {
        let missing = |what: &str| FormfactorError::Config(format!("{kind:?} measure requires `{what}`"));
        let family = match kind {
            FamilyKind::PowerLaw => {
                let nu = self.nu.ok_or_else(|| missing("nu"))?;
                Family::PowerLaw {
                    nu,
                    p: self.p.unwrap_or(nu as f64 + 3.0),
                }
            }
            FamilyKind::ExpFlat => Family::ExpFlat {
                scale: self.scale.unwrap_or(1.0),
                p: self.p.unwrap_or(4.0),
            },
            FamilyKind::Tabulated => Family::Tabulated {
                nodes: self.nodes.clone().ok_or_else(|| missing("nodes"))?,
                values: self.values.clone().ok_or_else(|| missing("values"))?,
            },
            FamilyKind::IrCutoff => {
                let base = self.base.unwrap_or(FamilyKind::PowerLaw);
                if base == FamilyKind::IrCutoff {
                    return Err(FormfactorError::Config("cutoff base cannot itself be a cutoff".into()));
                }
                Family::IrCutoff {
                    base: Box::new(self.family_of(base)?),
                    delta: self.delta.ok_or_else(|| missing("delta"))?,
                }
            }
        };
        Ok(family)
    }
}
