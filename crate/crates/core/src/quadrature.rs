//! Quadrature on graded panel grids.
//!
//! Every integral in the crate runs over the half line `[lo, ∞)` against a
//! density that may behave like a power of `λ - lo` at the lower end and decays
//! algebraically at infinity. The grid is geometric in the distance from `lo`,
//! each panel carries a degree-six interpolant on Chebyshev–Lobatto points, and
//!
//! * plain integrals use the matching Clenshaw–Curtis weights,
//! * Fourier integrals `∫ g(λ) e^{-iλt} dλ` integrate the interpolant against
//!   the exponential exactly (Filon), so the panel size never depends on `t`.
//!
//! The innermost panel `[lo, lo + d0]` is replaced by a fitted power law and the
//! region beyond the last break by an algebraic (or caller supplied) tail.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Polynomial degree of the per-panel interpolant.
pub const DEGREE: usize = 6;
const NODES: usize = DEGREE + 1;

/// Below this `|ω|` the exponential moments are summed as a power series.
const SERIES_OMEGA: f64 = 2.0;

struct Reference {
    x: [f64; NODES],
    cc: [f64; NODES],
    inv_vandermonde: [[f64; NODES]; NODES],
}

fn reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let mut x = [0.0; NODES];
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = -(PI * k as f64 / DEGREE as f64).cos();
        }
        x[DEGREE / 2] = 0.0;
        let mut v = [[0.0; NODES]; NODES];
        for k in 0..NODES {
            for j in 0..NODES {
                v[k][j] = x[k].powi(j as i32);
            }
        }
        let inv = invert(v);
        let mut cc = [0.0; NODES];
        for (k, w) in cc.iter_mut().enumerate() {
            *w = (0..NODES)
                .map(|j| power_moment(j) * inv[j][k])
                .sum();
        }
        Reference {
            x,
            cc,
            inv_vandermonde: inv,
        }
    })
}

/// `∫_{-1}^{1} x^j dx`
fn power_moment(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        2.0 / (j as f64 + 1.0)
    } else {
        0.0
    }
}

fn invert(mut a: [[f64; NODES]; NODES]) -> [[f64; NODES]; NODES] {
    let mut inv = [[0.0; NODES]; NODES];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..NODES {
        let pivot = (col..NODES)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..NODES {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..NODES {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..NODES {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

/// Exponential moments `M_k(ω) = ∫_{-1}^{1} x^k e^{-iωx} dx`, `k = 0..=DEGREE`.
pub fn exp_moments(omega: f64) -> [Complex64; NODES] {
    let mut m = [Complex64::new(0.0, 0.0); NODES];
    if omega.abs() < SERIES_OMEGA {
        // Σ_j (-iω)^j / j! · ∫ x^{k+j}
        let mut term = Complex64::new(1.0, 0.0);
        let step = Complex64::new(0.0, -omega);
        for j in 0..40 {
            if j > 0 {
                term = term * step / j as f64;
            }
            if term.norm() < 1e-18 {
                break;
            }
            for (k, mk) in m.iter_mut().enumerate() {
                let e = power_moment(k + j);
                if e != 0.0 {
                    *mk += term * e;
                }
            }
        }
    } else {
        let (s, c) = omega.sin_cos();
        let even = Complex64::new(2.0 * s / omega, 0.0);
        let odd = Complex64::new(0.0, 2.0 * c / omega);
        m[0] = even;
        for k in 1..NODES {
            let boundary = if k % 2 == 0 { even } else { odd };
            m[k] = boundary - Complex64::new(0.0, k as f64 / omega) * m[k - 1];
        }
    }
    m
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre integration of a complex-valued function on `[a, b]`.
pub fn gauss_legendre_integrate<F>(f: F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in rule.0.iter().zip(&rule.1) {
        acc += f(mid + half * x) * *w;
    }
    acc * half
}

/// Breakpoints of a panel decomposition of `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct PanelGrid {
    lo: f64,
    breaks: Vec<f64>,
}

impl PanelGrid {
    /// Geometric grading: `lo, lo + d0, lo + d0·r, …` up to `hi`.
    pub fn graded(lo: f64, first: f64, hi: f64, ratio: f64) -> Self {
        assert!(first > 0.0 && hi > lo + first && ratio > 1.0);
        let mut breaks = vec![lo];
        let mut d = first;
        while lo + d < hi {
            breaks.push(lo + d);
            d *= ratio;
        }
        let last = *breaks.last().unwrap();
        if hi - last < 0.25 * (last - lo) && breaks.len() > 2 {
            breaks.pop();
        }
        breaks.push(hi);
        Self { lo, breaks }
    }

    /// Adds geometrically spaced breaks on both sides of `center`, starting at
    /// distance `width`, so that a feature of that width is resolved.
    pub fn refine_around(mut self, center: f64, width: f64, ratio: f64) -> Self {
        let hi = *self.breaks.last().unwrap();
        if !(center > self.lo && center < hi) || width <= 0.0 {
            return self;
        }
        let mut extra = vec![center];
        let mut d = width;
        while d < 0.5 * (center - self.lo) {
            extra.push(center - d);
            d *= ratio;
        }
        let mut d = width;
        while d < center && center + d < hi {
            extra.push(center + d);
            d *= ratio;
        }
        self.insert(&extra);
        self
    }

    /// Inserts extra breakpoints (kinks of the integrand).
    pub fn insert(&mut self, extra: &[f64]) {
        let hi = *self.breaks.last().unwrap();
        self.breaks
            .extend(extra.iter().copied().filter(|&b| b > self.lo && b < hi));
        self.breaks.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(self.breaks.len());
        for &b in &self.breaks {
            match out.last() {
                Some(&prev) if (b - prev) <= 1e-12 * (b - self.lo).abs().max(1e-300) => {}
                _ => out.push(b),
            }
        }
        // the innermost panel is replaced by a power-law fit and must stay small
        self.breaks = out;
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn panel_count(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Node abscissae, panel endpoints shared. Panel `p` owns nodes
    /// `p*DEGREE ..= (p+1)*DEGREE`.
    pub fn nodes(&self) -> Vec<f64> {
        let r = reference();
        let mut out = Vec::with_capacity(self.panel_count() * DEGREE + 1);
        out.push(self.breaks[0]);
        for w in self.breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for &x in &r.x[1..DEGREE] {
                out.push(mid + half * x);
            }
            out.push(b);
        }
        out
    }

    /// Node abscissae paired with plain-integration weights. The innermost
    /// panel is excluded (its contribution is fitted, see [`Tail`]/head).
    pub fn rule(&self) -> PanelRule {
        let r = reference();
        let nodes = self.nodes();
        let mut weights = vec![0.0; nodes.len()];
        for p in 1..self.panel_count() {
            let half = 0.5 * (self.breaks[p + 1] - self.breaks[p]);
            for k in 0..NODES {
                weights[p * DEGREE + k] += half * r.cc[k];
            }
        }
        PanelRule {
            grid: self.clone(),
            nodes,
            weights,
        }
    }
}

/// How to account for the integrand beyond the last break.
#[derive(Clone, Copy, Debug)]
pub enum Tail {
    /// Integrand vanishes beyond the grid.
    None,
    /// Fit `C λ^{-γ}` to the last panel.
    Algebraic,
    /// Caller supplies the value of `∫_hi^∞`.
    Fixed(f64),
}

/// Nodes and weights of a [`PanelGrid`].
#[derive(Clone, Debug)]
pub struct PanelRule {
    grid: PanelGrid,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PanelRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grid(&self) -> &PanelGrid {
        &self.grid
    }

    /// Integrates samples taken at [`nodes`](Self::nodes).
    pub fn integrate(&self, values: &[f64], tail: Tail) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let body: f64 = self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum();
        body + self.head(values).0 + self.tail(values, tail).0
    }

    /// Evaluates `f` at the nodes and integrates.
    pub fn integrate_fn<F: Fn(f64) -> f64>(&self, f: F, tail: Tail) -> f64 {
        let values: Vec<f64> = self.nodes.iter().map(|&x| f(x)).collect();
        self.integrate(&values, tail)
    }

    /// `(∫_lo^{lo+d0} g, centroid)` from a power-law fit through the first two breaks.
    fn head(&self, values: &[f64]) -> (f64, f64) {
        let lo = self.grid.lo;
        let b1 = self.grid.breaks[1];
        let g1 = values[DEGREE];
        if g1 == 0.0 || self.grid.breaks.len() < 3 {
            return (0.0, 0.5 * (lo + b1));
        }
        let b2 = self.grid.breaks[2];
        let g2 = values[2 * DEGREE];
        let d1 = b1 - lo;
        let beta = if g2 / g1 > 0.0 {
            ((g2 / g1).ln() / ((b2 - lo) / d1).ln()).max(-0.999)
        } else {
            0.0
        };
        let integral = g1 * d1 / (beta + 1.0);
        let centroid = lo + d1 * (beta + 1.0) / (beta + 2.0);
        (integral, centroid)
    }

    /// `(∫_hi^∞ g, decay rate κ)` of the exponential proxy used for Fourier tails.
    fn tail(&self, values: &[f64], tail: Tail) -> (f64, f64) {
        let n = values.len();
        let hi = self.grid.hi();
        let g_hi = values[n - 1];
        match tail {
            Tail::None => (0.0, f64::INFINITY),
            Tail::Fixed(v) => {
                if v == 0.0 || g_hi == 0.0 {
                    (v, f64::INFINITY)
                } else {
                    (v, (g_hi / v).abs())
                }
            }
            Tail::Algebraic => {
                if g_hi == 0.0 {
                    return (0.0, f64::INFINITY);
                }
                let prev_x = self.grid.breaks[self.grid.breaks.len() - 2];
                let g_prev = values[n - 1 - DEGREE];
                let gamma = if g_prev / g_hi > 0.0 {
                    (g_prev / g_hi).ln() / (hi / prev_x).ln()
                } else {
                    2.0
                };
                let gamma = gamma.max(1.001);
                let v = g_hi * hi / (gamma - 1.0);
                (v, (gamma - 1.0) / hi)
            }
        }
    }

    /// Builds the per-panel interpolants needed for Fourier integrals.
    pub fn sample(&self, values: Vec<f64>, tail: Tail) -> SampledFunction {
        let r = reference();
        let breaks = &self.grid.breaks;
        let mut panels = Vec::with_capacity(breaks.len().saturating_sub(2));
        for p in 1..self.grid.panel_count() {
            let a = breaks[p];
            let b = breaks[p + 1];
            let g = &values[p * DEGREE..=(p + 1) * DEGREE];
            let mut coeffs = [0.0; NODES];
            for (j, c) in coeffs.iter_mut().enumerate() {
                *c = (0..NODES).map(|k| r.inv_vandermonde[j][k] * g[k]).sum();
            }
            panels.push(Panel {
                mid: 0.5 * (a + b),
                half: 0.5 * (b - a),
                coeffs,
            });
        }
        let (head, head_at) = self.head(&values);
        let (tail_value, tail_rate) = self.tail(&values, tail);
        let integral = self.integrate(&values, tail);
        SampledFunction {
            panels,
            head,
            head_at,
            hi: self.grid.hi(),
            tail_value,
            tail_rate,
            g_hi: *values.last().unwrap(),
            integral,
            values,
        }
    }

    /// Samples `f` at the nodes and builds the interpolants.
    pub fn sample_fn<F: Fn(f64) -> f64>(&self, f: F, tail: Tail) -> SampledFunction {
        let values: Vec<f64> = self.nodes.iter().map(|&x| f(x)).collect();
        self.sample(values, tail)
    }
}

#[derive(Clone, Debug)]
struct Panel {
    mid: f64,
    half: f64,
    coeffs: [f64; NODES],
}

/// A real function on `[lo, ∞)` in piecewise-polynomial form, ready for
/// repeated Fourier integration.
#[derive(Clone, Debug)]
pub struct SampledFunction {
    panels: Vec<Panel>,
    head: f64,
    head_at: f64,
    hi: f64,
    tail_value: f64,
    tail_rate: f64,
    g_hi: f64,
    integral: f64,
    values: Vec<f64>,
}

impl SampledFunction {
    /// `∫ g(λ) dλ`
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// Node values the interpolant was built from.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫ g(λ) e^{-iλt} dλ`
    pub fn fourier(&self, t: f64) -> Complex64 {
        if t == 0.0 {
            return Complex64::new(self.integral, 0.0);
        }
        let mut acc = Complex64::from_polar(self.head, -self.head_at * t);
        for p in &self.panels {
            let m = exp_moments(p.half * t);
            let mut s = Complex64::new(0.0, 0.0);
            for (c, mk) in p.coeffs.iter().zip(m.iter()) {
                s += mk * *c;
            }
            acc += s * Complex64::from_polar(p.half, -p.mid * t);
        }
        if self.tail_value != 0.0 && self.tail_rate.is_finite() {
            // ∫_hi^∞ g(hi) e^{-κ(λ-hi)} e^{-iλt} dλ
            acc += Complex64::from_polar(self.g_hi, -self.hi * t)
                / Complex64::new(self.tail_rate, t);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        for k in 0..16 {
            let v = gauss_legendre_integrate(|x| Complex64::new(x.powi(k), 0.0), -1.0, 1.0, &rule);
            assert!((v.re - power_moment(k as usize)).abs() < 1e-14, "k={k}");
        }
        let big = gauss_legendre(2000);
        let s: f64 = big.1.iter().sum();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(big.0.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn moments_agree_across_the_series_switch() {
        for &w in &[1.999_999, 2.000_001, -2.000_001] {
            let a = exp_moments(w);
            let rule = gauss_legendre(40);
            for k in 0..NODES {
                let exact = gauss_legendre_integrate(
                    |x| x.powi(k as i32) * Complex64::from_polar(1.0, -w * x),
                    -1.0,
                    1.0,
                    &rule,
                );
                assert!((a[k] - exact).norm() < 1e-12, "ω={w} k={k}");
            }
        }
    }

    #[test]
    fn plain_integral_of_power_law_density() {
        // ∫_0^∞ λ^{3/2}(1+λ)^{-4} dλ = B(5/2, 3/2) = π/16
        let rule = PanelGrid::graded(0.0, 1e-14, 1e8, 1.1).rule();
        let v = rule.integrate_fn(|l| l.powf(1.5) / (1.0 + l).powi(4), Tail::Algebraic);
        assert!((v - PI / 16.0).abs() < 1e-11, "{v}");
    }

    #[test]
    fn fourier_of_exponential_matches_closed_form() {
        // ∫_0^∞ e^{-λ} e^{-iλt} dλ = 1 / (1 + it)
        let rule = PanelGrid::graded(0.0, 1e-14, 60.0, 1.1).rule();
        let f = rule.sample_fn(|l| (-l).exp(), Tail::None);
        for &t in &[0.0, 0.3, 5.0, 80.0, 2.0e3] {
            let exact = Complex64::new(1.0, 0.0) / Complex64::new(1.0, t);
            assert!((f.fourier(t) - exact).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn fourier_endpoint_asymptotics_of_half_integer_power() {
        // ∫_0^∞ λ^{1/2} e^{-λ} e^{-iλt} dλ = Γ(3/2) (1+it)^{-3/2}
        let rule = PanelGrid::graded(0.0, 1e-14, 60.0, 1.1).rule();
        let f = rule.sample_fn(|l| l.sqrt() * (-l).exp(), Tail::None);
        for &t in &[1.0, 100.0, 1.0e4] {
            let exact = Complex64::new(0.5 * PI.sqrt(), 0.0) * Complex64::new(1.0, t).powf(-1.5);
            let got = f.fourier(t);
            assert!((got - exact).norm() < 1e-9 * exact.norm().max(1e-3), "t={t}: {got} vs {exact}");
        }
    }
}
