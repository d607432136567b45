use num_complex::Complex64;

use super::{DynamicsError, InitialState, Probe, PulseSchedule};
use crate::roots::{brent, Tolerance};
use crate::spectral::{Model, RankOneState};

/// Points on the contour used to evaluate the φ-functions near `z = 0`.
const CONTOUR_POINTS: usize = 32;

/// Finite-mode version of the model: `N` continuum modes at energies `λ_j`
/// coupled to the dot with strengths `g_j = τ √(w_j μ(λ_j))`.
///
/// Vectors are stored dot first: index `0` is the dot, `1..=N` the modes.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    nodes: Vec<f64>,
    couplings: Vec<f64>,
    /// `√(w_j μ(λ_j))`, the map from continuum functions to mode amplitudes.
    embed: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Number of continuum modes `N`.
    pub modes: usize,
    /// Largest internal time step.
    pub max_step: f64,
    /// Number of output intervals; `None` uses intervals of at most 0.02.
    pub outputs: Option<usize>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            modes: 2000,
            max_step: 0.01,
            outputs: None,
        }
    }
}

/// Outcome of a finite-mode run, sampled on a uniform output grid.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub eta: f64,
    pub t_start: f64,
    pub dt: f64,
    pub amplitudes: Vec<Complex64>,
    /// `‖ψ‖` at the output times.
    pub norms: Vec<f64>,
    pub overlaps: Vec<(Probe, Complex64)>,
    pub final_state: Vec<Complex64>,
}

impl OracleRun {
    pub fn survival_probability(&self, probe: Probe) -> Result<f64, DynamicsError> {
        self.overlaps
            .iter()
            .find(|(p, _)| *p == probe)
            .map(|(_, v)| v.norm_sqr())
            .ok_or(DynamicsError::MissingProbe(probe))
    }
}

impl DiscreteModel {
    pub fn new(model: &Model, modes: usize) -> Self {
        let measure = model.measure();
        let grid = measure.discretize(modes);
        let nodes: Vec<f64> = grid.iter().map(|&(l, _)| l).collect();
        let embed: Vec<f64> = grid.iter().map(|&(l, w)| (w * measure.density(l)).sqrt()).collect();
        let couplings = embed.iter().map(|e| model.tau() * e).collect();
        Self {
            nodes,
            couplings,
            embed,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn dim(&self) -> usize {
        self.nodes.len() + 1
    }

    /// Mode amplitudes of a resolvent-form state, renormalized.
    pub fn project(&self, state: &RankOneState) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(state.dot);
        for (&l, &e) in self.nodes.iter().zip(&self.embed) {
            v.push(match state.tail {
                Some(t) => t.coef * (e / (l - t.shift)),
                None => Complex64::new(0.0, 0.0),
            });
        }
        normalize(&mut v);
        v
    }

    /// Ground state of the finite-mode Hamiltonian at dot energy `energy`,
    /// from its own secular equation, phased so the dot amplitude is positive.
    pub fn bound_vector(&self, energy: f64) -> Result<Vec<Complex64>, DynamicsError> {
        let lowest = self.nodes[0];
        let secular = |x: f64| {
            energy
                - x
                - self
                    .couplings
                    .iter()
                    .zip(&self.nodes)
                    .map(|(g, l)| g * g / (l - x))
                    .sum::<f64>()
        };
        let upper = if energy < lowest { energy } else { 0.0 };
        if !(secular(upper) < 0.0) && self.couplings.iter().any(|&g| g > 0.0) {
            return Err(DynamicsError::InvalidRun(format!(
                "finite-mode model has no bound state below its continuum at E = {energy}"
            )));
        }
        let mut lower = upper - 1.0;
        while secular(lower) <= 0.0 {
            lower = 2.0 * lower - upper;
        }
        let x = if self.couplings.iter().all(|&g| g == 0.0) {
            energy
        } else {
            let tol = Tolerance {
                x: 1e-300,
                f: 1e-13,
                max_iter: 400,
            };
            brent(secular, lower, upper, tol).map_err(crate::spectral::SpectralError::from)?
        };
        let mut v = Vec::with_capacity(self.dim());
        v.push(Complex64::new(1.0, 0.0));
        for (&g, &l) in self.couplings.iter().zip(&self.nodes) {
            v.push(Complex64::new(g / (x - l), 0.0));
        }
        normalize(&mut v);
        Ok(v)
    }

    /// `-i (H(E) - L) ψ` where `L` is the diagonal mode part handled exactly.
    fn forcing(&self, energy: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let a = psi[0];
        let mut coupled = Complex64::new(0.0, 0.0);
        for (j, &g) in self.couplings.iter().enumerate() {
            coupled += psi[j + 1] * g;
            out[j + 1] = Complex64::new(0.0, -g) * a;
        }
        out[0] = Complex64::new(0.0, -1.0) * (a * energy + coupled);
    }

    /// Propagates `psi` from `s_start` to `s_end` with the fourth-order
    /// exponential Runge–Kutta scheme of Cox and Matthews, calling `observe`
    /// at each of the `outputs + 1` output times.
    #[allow(clippy::too_many_arguments)]
    pub fn propagate<F: FnMut(usize, &[Complex64])>(
        &self,
        schedule: &PulseSchedule,
        eta: f64,
        s_start: f64,
        s_end: f64,
        psi: &mut [Complex64],
        outputs: usize,
        max_step: f64,
        mut observe: F,
    ) {
        let duration = (s_end - s_start) / eta;
        let dt_out = duration / outputs as f64;
        let sub = (dt_out / max_step).ceil().max(1.0) as usize;
        let h = dt_out / sub as f64;
        let coeffs = EtdCoefficients::new(&self.nodes, h);
        let n = self.dim();
        let mut nu = vec![Complex64::new(0.0, 0.0); n];
        let mut na = nu.clone();
        let mut nb = nu.clone();
        let mut nc = nu.clone();
        let mut stage_a = nu.clone();
        let mut stage_b = nu.clone();
        let mut stage_c = nu.clone();
        let energy_at = |step: f64| schedule.energy(s_start + (s_end - s_start) * step / (outputs * sub) as f64);

        observe(0, psi);
        for out in 0..outputs {
            for k in 0..sub {
                let step = (out * sub + k) as f64;
                let (e0, em, e1) = (energy_at(step), energy_at(step + 0.5), energy_at(step + 1.0));
                self.forcing(e0, psi, &mut nu);
                for i in 0..n {
                    stage_a[i] = coeffs.half[i] * psi[i] + coeffs.q[i] * nu[i];
                }
                self.forcing(em, &stage_a, &mut na);
                for i in 0..n {
                    stage_b[i] = coeffs.half[i] * psi[i] + coeffs.q[i] * na[i];
                }
                self.forcing(em, &stage_b, &mut nb);
                for i in 0..n {
                    stage_c[i] = coeffs.half[i] * stage_a[i] + coeffs.q[i] * (2.0 * nb[i] - nu[i]);
                }
                self.forcing(e1, &stage_c, &mut nc);
                for i in 0..n {
                    psi[i] = coeffs.full[i] * psi[i]
                        + coeffs.f1[i] * nu[i]
                        + coeffs.f2[i] * (2.0 * (na[i] + nb[i]))
                        + coeffs.f3[i] * nc[i];
                }
            }
            observe(out + 1, psi);
        }
    }
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
}

/// ETDRK4 coefficients for the diagonal linear part `-iλ_j` (and `0` for the dot).
struct EtdCoefficients {
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl EtdCoefficients {
    fn new(nodes: &[f64], h: f64) -> Self {
        let n = nodes.len() + 1;
        let mut c = Self {
            half: Vec::with_capacity(n),
            full: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for lin in std::iter::once(0.0).chain(nodes.iter().map(|l| -l)) {
            let z = Complex64::new(0.0, h * lin);
            let [q, f1, f2, f3] = phi_combinations(z);
            c.half.push((z * 0.5).exp());
            c.full.push(z.exp());
            c.q.push(q * h);
            c.f1.push(f1 * h);
            c.f2.push(f2 * h);
            c.f3.push(f3 * h);
        }
        c
    }
}

/// `[(e^{z/2}-1)/z, (-4-z+e^z(4-3z+z²))/z³, (2+z+e^z(z-2))/z³, (-4-3z-z²+e^z(4-z))/z³]`,
/// averaged over a circle around `z` when `|z|` is small to avoid cancellation.
fn phi_combinations(z: Complex64) -> [Complex64; 4] {
    let direct = |z: Complex64| {
        let e = z.exp();
        let z3 = z * z * z;
        [
            ((z * 0.5).exp() - 1.0) / z,
            (-4.0 - z + e * (4.0 - 3.0 * z + z * z)) / z3,
            (2.0 + z + e * (z - 2.0)) / z3,
            (-4.0 - 3.0 * z - z * z + e * (4.0 - z)) / z3,
        ]
    };
    if z.norm() >= 1.0 {
        return direct(z);
    }
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    for k in 0..CONTOUR_POINTS {
        let theta = std::f64::consts::PI * (k as f64 + 0.5) / CONTOUR_POINTS as f64 * 2.0;
        let v = direct(z + Complex64::from_polar(1.0, theta));
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b;
        }
    }
    acc.map(|a| a / CONTOUR_POINTS as f64)
}

/// Finite-mode counterpart of [`super::evolve`]: integrates the discretized
/// Schrödinger equation and reports the dot amplitude on a uniform grid.
#[allow(clippy::too_many_arguments)]
pub fn oracle_evolve(
    model: &Model,
    schedule: &PulseSchedule,
    eta: f64,
    s_start: f64,
    s_end: f64,
    initial: InitialState,
    probes: &[Probe],
    options: &OracleOptions,
) -> Result<OracleRun, DynamicsError> {
    if !(eta > 0.0 && s_start < s_end) {
        return Err(DynamicsError::InvalidRun(format!(
            "need η > 0 and s_start < s_end, got η = {eta}, [{s_start}, {s_end}]"
        )));
    }
    let discrete = DiscreteModel::new(model, options.modes);
    let start_energy = schedule.energy(s_start);
    let mut psi = match initial {
        InitialState::Bound => discrete.bound_vector(start_energy)?,
        other => discrete.project(&other.resolve(model, start_energy)?),
    };
    let duration = (s_end - s_start) / eta;
    let outputs = options
        .outputs
        .unwrap_or_else(|| (duration / 0.02).ceil().max(1.0) as usize);
    let mut amplitudes = Vec::with_capacity(outputs + 1);
    let mut norms = Vec::with_capacity(outputs + 1);
    discrete.propagate(schedule, eta, s_start, s_end, &mut psi, outputs, options.max_step, |_, v| {
        amplitudes.push(v[0]);
        norms.push(v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    });

    let end_energy = schedule.energy(s_end);
    let mut overlaps = Vec::with_capacity(probes.len());
    for &probe in probes {
        let v = match probe {
            Probe::Bound => discrete.bound_vector(end_energy)?,
            other => discrete.project(&other.resolve(model, end_energy)?),
        };
        let value: Complex64 = v.iter().zip(&psi).map(|(x, y)| x.conj() * y).sum();
        overlaps.push((probe, value));
    }
    Ok(OracleRun {
        eta,
        t_start: s_start / eta,
        dt: duration / outputs as f64,
        amplitudes,
        norms,
        overlaps,
        final_state: psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_functions_are_continuous_across_the_contour_switch() {
        for &r in &[0.999_999, 1.000_001] {
            let z = Complex64::new(0.0, r);
            let a = phi_combinations(z);
            let b = phi_combinations(Complex64::new(0.0, if r < 1.0 { 1.000_001 } else { 0.999_999 }));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-6);
            }
        }
        let zero = phi_combinations(Complex64::new(0.0, 0.0));
        assert!((zero[0].re - 0.5).abs() < 1e-14);
        for v in &zero[1..] {
            assert!((v.re - 1.0 / 6.0).abs() < 1e-14, "{v}");
        }
    }
}
