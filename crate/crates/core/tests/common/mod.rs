//! Test-only reference quadrature, independent of the library's panel rules.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Legendre nodes and weights on `[-1, 1]` by the Golub–Welsch
/// eigenvalue method.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn panels<F: Fn(f64) -> f64>(f: &F, breaks: &[f64]) -> f64 {
    let (x, w) = gauss_legendre(16);
    breaks
        .windows(2)
        .map(|p| {
            let (mid, half) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            x.iter().zip(&w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
        })
        .sum()
}

/// `∫_a^b f` for integrands that may be singular (integrably) at `a` only.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let mut breaks = vec![a];
    let mut d = 1e-16 * (b - a).min(1.0);
    while d < b - a {
        breaks.push(a + d);
        d *= 1.08;
    }
    breaks.push(b);
    panels(&f, &breaks)
}

/// `∫_a^b f` on `n` equal panels, for smooth oscillatory integrands.
pub fn quad_uniform<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let breaks: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
    panels(&f, &breaks)
}

/// Unnormalized power-law density `λ^{ν+1/2} (1+λ)^{-p}`.
pub fn power_law_raw(nu: u32, p: f64) -> impl Fn(f64) -> f64 {
    move |l: f64| if l > 0.0 { l.powf(nu as f64 + 0.5) * (1.0 + l).powf(-p) } else { 0.0 }
}

/// The power-law density normalized by reference quadrature.
pub fn power_law_density(nu: u32, p: f64) -> impl Fn(f64) -> f64 {
    let raw = power_law_raw(nu, p);
    let mass = quad(&raw, 0.0, 1e12);
    move |l| raw(l) / mass
}

/// `∫ μ(λ)/(λ - x)^k` below the support, by reference quadrature.
pub fn moment<F: Fn(f64) -> f64>(density: F, k: i32, x: f64) -> f64 {
    quad(|l| density(l) / (l - x).powi(k), 0.0, 1e12)
}
