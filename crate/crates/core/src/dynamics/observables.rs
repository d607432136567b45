use num_complex::Complex64;

use super::{evolve, DynamicsError, InitialState, Probe, PulseSchedule, VolterraOptions};
use crate::spectral::{Model, StaticPropagator};

/// Which crossing of the critical energy a threshold distance refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `s_c` on the rising branch, reached from `s = -1`.
    Forward,
    /// `s_c'` on the falling branch, reached backwards from `s = 0` by running
    /// the time-reversed pulse.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdDistance {
    /// Slow time of the crossing in the original pulse.
    pub crossing: f64,
    /// `⟨Ψ_c, ψ⟩` at the crossing.
    pub overlap: Complex64,
    /// `√(1 - |⟨Ψ_c, ψ⟩|²)`
    pub distance: f64,
}

/// `|⟨Ψ(E(0)), U(0, -1/η) Ψ(E(-1))⟩|²` over the full pulse.
pub fn pulse_survival(
    model: &Model,
    schedule: &PulseSchedule,
    eta: f64,
    options: &VolterraOptions,
) -> Result<f64, DynamicsError> {
    let run = evolve(model, schedule, eta, -1.0, 0.0, InitialState::Bound, &[Probe::Bound], options)?;
    run.survival_probability(Probe::Bound)
}

/// Distance between the evolved initial bound state and `Ψ_c` at the
/// threshold crossing.
pub fn threshold_distance(
    model: &Model,
    schedule: &PulseSchedule,
    eta: f64,
    side: Side,
    options: &VolterraOptions,
) -> Result<ThresholdDistance, DynamicsError> {
    let ec = model.critical()?.energy;
    let (s_c, s_c_back) = schedule.crossings(ec)?;
    let (pulse, end, crossing) = match side {
        Side::Forward => (*schedule, s_c, s_c),
        Side::Backward => (schedule.reversed(), -1.0 - s_c_back, s_c_back),
    };
    let run = evolve(model, &pulse, eta, -1.0, end, InitialState::Bound, &[Probe::Critical], options)?;
    let overlap = run.overlap(Probe::Critical)?;
    Ok(ThresholdDistance {
        crossing,
        overlap,
        distance: (1.0 - overlap.norm_sqr()).max(0.0).sqrt(),
    })
}

/// Slow-time window `α η^{4/(2ν+7)}` after the crossing.
pub fn microscopic_window(ir_order: u32, eta: f64, alpha: f64) -> f64 {
    alpha * eta.powf(4.0 / (2.0 * ir_order as f64 + 7.0))
}

/// `|⟨Ψ_c, U(t, t_c) Ψ_c⟩|²` with `ηt = s_c + α η^{4/(2ν+7)}`.
pub fn microscopic_survival(
    model: &Model,
    schedule: &PulseSchedule,
    eta: f64,
    alpha: f64,
    options: &VolterraOptions,
) -> Result<f64, DynamicsError> {
    let nu = model.measure().ir_order().ok_or_else(|| {
        DynamicsError::InvalidRun("microscopic window needs a measure with an IR order".into())
    })?;
    let ec = model.critical()?.energy;
    let (s_c, _) = schedule.crossings(ec)?;
    let end = s_c + microscopic_window(nu, eta, alpha);
    if !(end <= 0.0 && alpha > 0.0) {
        return Err(DynamicsError::InvalidRun(format!(
            "window end {end} must lie in (s_c, 0]"
        )));
    }
    let run = evolve(model, schedule, eta, s_c, end, InitialState::Critical, &[Probe::Critical], options)?;
    run.survival_probability(Probe::Critical)
}

/// Magnitudes of the four terms bounding the overlap of a smoothed threshold
/// state evolved from `t_c` to `t_c'`, compared with the frozen evolution at
/// the pulse maximum `E_a = E_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DysonTerms {
    /// `|⟨Ψ_ε, e^{-i(t_c'-t_c)H_a} Ψ_ε⟩|`
    pub i1: f64,
    /// `∫_{t_c}^{t_a} |ε_a(v)| |⟨Ψ_ε, e^{-i(t_c'-v)H_a} dot⟩| dv`
    pub i2: f64,
    /// `∫_{t_a}^{t_c'} |ε_a(u)| |⟨dot, e^{-i(u-t_c)H_a} Ψ_ε⟩| du`
    pub i3: f64,
    /// `∫_{t_a}^{t_c'} ∫_{t_c}^{t_a} |ε_a(u)| |ε_a(v)| |⟨dot, e^{-i(u-v)H_a} dot⟩| dv du`
    pub i4: f64,
}

/// Quadrature spacing for the time integrals of [`dyson_diagnostics`].
const DYSON_STEP: f64 = 0.05;

/// Evaluates the four Dyson-identity bounds. `Ψ_ε = g(H_a)·dot` uses a smooth
/// bump `g` supported on `(x_r/2, 2x_r)` around the resonance `x_r = r_E²`.
pub fn dyson_diagnostics(model: &Model, schedule: &PulseSchedule, eta: f64) -> Result<DysonTerms, DynamicsError> {
    if model.tau() == 0.0 {
        // the dot is an eigenvector of every instantaneous Hamiltonian
        return Ok(DysonTerms {
            i1: 1.0,
            i2: 0.0,
            i3: 0.0,
            i4: 0.0,
        });
    }
    let ec = model.critical()?.energy;
    let (s_c, s_c_back) = schedule.crossings(ec)?;
    let s_a = schedule.s_max();
    let e_a = schedule.energy(s_a);
    let (t_c, t_a, t_c_back) = (s_c / eta, s_a / eta, s_c_back / eta);
    let eps = |t: f64| (e_a - schedule.energy(eta * t)).abs();

    let prop = StaticPropagator::new(model, e_a)?;
    let density = prop.density();
    let center = density.resonance().map(|r| r * r).unwrap_or(e_a.abs());
    let (lo, hi) = (0.5 * center, 2.0 * center);
    let bump = move |l: f64| {
        let y = (2.0 * l - lo - hi) / (hi - lo);
        if y.abs() < 1.0 {
            (-1.0 / (1.0 - y * y)).exp()
        } else {
            0.0
        }
    };
    let norm = density.weighted(|l| bump(l) * bump(l)).integral().sqrt();
    let filtered = density.weighted(|l| bump(l) / norm);
    let filtered_sq = density.weighted(|l| bump(l) * bump(l) / (norm * norm));

    let i1 = filtered_sq.fourier(t_c_back - t_c).norm();

    let rising = uniform(t_c, t_a);
    let falling = uniform(t_a, t_c_back);
    let i2 = trapezoid(&rising, |v| eps(v) * filtered.fourier(t_c_back - v).norm());
    let i3 = trapezoid(&falling, |u| eps(u) * filtered.fourier(u - t_c).norm());

    // |S| on a fine lag grid, linearly interpolated
    let lag_step = 0.25 * rising.1.min(falling.1);
    let max_lag = t_c_back - t_c;
    let lags = (max_lag / lag_step).ceil() as usize + 1;
    let s_abs: Vec<f64> = (0..=lags).map(|k| prop.amplitude(k as f64 * lag_step).norm()).collect();
    let s_at = |lag: f64| {
        let x = lag / lag_step;
        let k = (x.floor() as usize).min(lags - 1);
        let f = x - k as f64;
        s_abs[k] * (1.0 - f) + s_abs[k + 1] * f
    };
    let inner: Vec<(f64, f64)> = nodes(&rising).map(|(v, w)| (v, w * eps(v))).collect();
    let i4 = trapezoid(&falling, |u| {
        eps(u) * inner.iter().map(|&(v, w)| w * s_at(u - v)).sum::<f64>()
    });

    Ok(DysonTerms { i1, i2, i3, i4 })
}

/// `(start, step, count)` of a uniform grid on `[a, b]` with spacing at most
/// [`DYSON_STEP`].
fn uniform(a: f64, b: f64) -> (f64, f64, usize) {
    let n = ((b - a) / DYSON_STEP).ceil().max(1.0) as usize;
    (a, (b - a) / n as f64, n)
}

fn nodes(grid: &(f64, f64, usize)) -> impl Iterator<Item = (f64, f64)> + '_ {
    let &(a, h, n) = grid;
    (0..=n).map(move |k| {
        let w = if k == 0 || k == n { 0.5 * h } else { h };
        (a + k as f64 * h, w)
    })
}

fn trapezoid<F: Fn(f64) -> f64>(grid: &(f64, f64, usize), f: F) -> f64 {
    nodes(grid).map(|(x, w)| w * f(x)).sum()
}
