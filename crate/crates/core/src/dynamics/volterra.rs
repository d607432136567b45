use num_complex::Complex64;

use super::{AdiabaticRun, DynamicsError, InitialState, Probe, PulseSchedule};
use crate::exec::Execution;
use crate::quadrature::{gauss_legendre, SampledFunction};
use crate::spectral::Model;

/// Largest admissible `|a|`; anything beyond signals a broken integration.
const MODULUS_LIMIT: f64 = 1.0 + 1e-3;
/// Levels of the dyadic grading used on the first lag interval.
const CUSP_LEVELS: i32 = 40;

#[derive(Debug, Clone, Copy)]
pub struct VolterraOptions {
    /// Upper bound on the time step; `None` uses `min(0.02, 0.1/E_m)`.
    pub max_step: Option<f64>,
    /// Scheduling of the lag-table construction.
    pub execution: Execution,
}

impl Default for VolterraOptions {
    fn default() -> Self {
        Self {
            max_step: None,
            execution: Execution::Sequential,
        }
    }
}

/// Product-integration weights of a convolution kernel `g` against a
/// piecewise-linear history on a uniform grid of step `dt`:
///
/// ```text
/// ahead[m]  = ∫_0^dt g(m·dt + u) (1 - u/dt) du
/// behind[m] = ∫_0^dt g(m·dt + u) (u/dt) du
/// ```
#[derive(Debug, Clone)]
pub struct LagTable {
    pub dt: f64,
    pub ahead: Vec<Complex64>,
    pub behind: Vec<Complex64>,
}

impl LagTable {
    /// Weights for lags `0..len` of `t ↦ ∫ g(λ) e^{-iλt} dλ`.
    pub fn new(g: &SampledFunction, dt: f64, len: usize, execution: Execution) -> Self {
        let (x, w) = gauss_legendre(8);
        let lags: Vec<usize> = (0..len).collect();
        let pairs = execution.map(&lags, |&m| {
            let mut ahead = Complex64::new(0.0, 0.0);
            let mut behind = Complex64::new(0.0, 0.0);
            let mut add = |lo: f64, hi: f64| {
                let half = 0.5 * (hi - lo);
                for (xi, wi) in x.iter().zip(&w) {
                    let u = lo + half * (xi + 1.0);
                    let v = g.fourier(m as f64 * dt + u) * (wi * half);
                    ahead += v * (1.0 - u / dt);
                    behind += v * (u / dt);
                }
            };
            if m == 0 {
                // the kernel has a fractional-power cusp at zero lag
                let mut hi = dt;
                for _ in 0..CUSP_LEVELS {
                    add(0.5 * hi, hi);
                    hi *= 0.5;
                }
                add(0.0, hi);
            } else {
                add(0.0, dt);
            }
            (ahead, behind)
        });
        let (ahead, behind) = pairs.into_iter().unzip();
        Self { dt, ahead, behind }
    }

    /// `∫_0^{n·dt} g(n·dt - s) y(s) ds` for `y` linear between the samples
    /// `ys[0..=n]`.
    pub fn convolve(&self, ys: &[Complex64]) -> Complex64 {
        let n = ys.len() - 1;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let m = n - 1 - j;
            acc += ys[j] * self.behind[m] + ys[j + 1] * self.ahead[m];
        }
        acc
    }
}

/// Integrates the reduced dot-amplitude law from `s_start` to `s_end` at
/// adiabatic parameter `eta` and projects the final state on `probes`.
///
/// The dot phase is integrated exactly over each step, the remaining terms by
/// the trapezoidal rule, and the memory integral by product integration of
/// the exact kernel against the piecewise-linear amplitude. The resulting
/// implicit step is a scalar linear equation and is solved exactly.
#[allow(clippy::too_many_arguments)]
pub fn evolve(
    model: &Model,
    schedule: &PulseSchedule,
    eta: f64,
    s_start: f64,
    s_end: f64,
    initial: InitialState,
    probes: &[Probe],
    options: &VolterraOptions,
) -> Result<AdiabaticRun, DynamicsError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DynamicsError::InvalidRun(format!("η = {eta} must be positive")));
    }
    if !(s_start < s_end) {
        return Err(DynamicsError::InvalidRun(format!(
            "empty slow-time interval [{s_start}, {s_end}]"
        )));
    }
    let max_step = options
        .max_step
        .unwrap_or_else(|| 0.02f64.min(0.1 / schedule.e_max().abs().max(1e-300)));
    let duration = (s_end - s_start) / eta;
    let steps = (duration / max_step).ceil().max(1.0) as usize;
    let dt = duration / steps as f64;
    let slow = |k: f64| s_start + (s_end - s_start) * (k / steps as f64);

    let measure = model.measure();
    let tau = model.tau();
    let tau_sq = model.tau_sq();
    let u0 = initial.resolve(model, schedule.energy(s_start))?;

    let kernel = if tau > 0.0 {
        let density = measure.weighted(|_| 1.0);
        Some(LagTable::new(&density, dt, steps, options.execution))
    } else {
        None
    };

    // -i τ β₀ h(t - t₀; x₀)
    let drive: Vec<Complex64> = match u0.tail {
        Some(t) if tau > 0.0 => {
            let h = measure.resolvent_weighted(t.shift)?;
            let factor = Complex64::new(0.0, -tau) * t.coef;
            (0..=steps).map(|k| factor * h.fourier(k as f64 * dt)).collect()
        }
        _ => vec![Complex64::new(0.0, 0.0); steps + 1],
    };

    let mut a = Vec::with_capacity(steps + 1);
    a.push(u0.dot);
    let mut rate_prev = drive[0];
    let (a0, denom) = match &kernel {
        Some(k) => (k.ahead[0], 1.0 + 0.5 * dt * tau_sq * k.ahead[0]),
        None => (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
    };
    for k in 1..=steps {
        let history = match &kernel {
            Some(table) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..k {
                    acc += a[j] * table.behind[k - 1 - j];
                }
                for j in 1..k {
                    acc += a[j] * table.ahead[k - j];
                }
                acc
            }
            None => Complex64::new(0.0, 0.0),
        };
        let e0 = schedule.energy(slow((k - 1) as f64));
        let em = schedule.energy(slow(k as f64 - 0.5));
        let e1 = schedule.energy(slow(k as f64));
        let phase = Complex64::from_polar(1.0, -dt * (e0 + 4.0 * em + e1) / 6.0);
        let rhs = phase * (a[k - 1] + 0.5 * dt * rate_prev) + 0.5 * dt * (drive[k] - tau_sq * history);
        let ak = rhs / denom;
        if !(ak.norm() <= MODULUS_LIMIT) {
            return Err(DynamicsError::Unstable {
                time: slow(k as f64) / eta,
                modulus: ak.norm(),
                step: dt,
            });
        }
        rate_prev = drive[k] - tau_sq * (history + ak * a0);
        a.push(ak);
    }

    let e_end = schedule.energy(s_end);
    let mut overlaps = Vec::with_capacity(probes.len());
    for &probe in probes {
        let v = probe.resolve(model, e_end)?;
        let mut value = v.dot.conj() * a[steps];
        if let Some(vt) = v.tail {
            let mut tail = Complex64::new(0.0, 0.0);
            if let Some(ut) = u0.tail {
                tail += ut.coef * measure.driving_h2(duration, ut.shift, vt.shift)?;
            }
            if tau > 0.0 {
                let h = measure.resolvent_weighted(vt.shift)?;
                let table = LagTable::new(&h, dt, steps, options.execution);
                tail += Complex64::new(0.0, -tau) * table.convolve(&a);
            }
            value += vt.coef.conj() * tail;
        }
        overlaps.push((probe, value));
    }

    Ok(AdiabaticRun {
        eta,
        t_start: s_start / eta,
        dt,
        amplitudes: a,
        initial: u0,
        overlaps,
    })
}
