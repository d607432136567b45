mod common;

use common::{moment, power_law_density, quad, quad_uniform};
use divesim::formfactor::{Family, FormfactorError, MeasureConfig, SpectralMeasure};
use proptest::prelude::*;

#[test]
fn threshold_moments_match_beta_function_values() {
    // ν=1, p=4: m1(0) = B(3/2,5/2)/B(5/2,3/2) = 1 and m2(0) = B(1/2,7/2)/B(5/2,3/2) = 5
    let m = SpectralMeasure::power_law(1, 4.0).unwrap();
    assert!((m.moment(1, 0.0).unwrap() - 1.0).abs() < 1e-10);
    assert!((m.moment(2, 0.0).unwrap() - 5.0).abs() < 1e-9);
}

#[test]
fn density_matches_reference_normalization() {
    for (nu, p) in [(1, 4.0), (1, 5.5), (2, 6.5), (3, 8.0)] {
        let m = SpectralMeasure::power_law(nu, p).unwrap();
        let reference = power_law_density(nu, p);
        for l in [1e-6, 0.1, 1.0, 7.5, 300.0] {
            let rel = (m.density(l) / reference(l) - 1.0).abs();
            assert!(rel < 1e-9, "ν={nu} p={p} λ={l}: relative error {rel:e}");
        }
    }
}

#[test]
fn moments_below_support_match_reference_quadrature() {
    let m = SpectralMeasure::power_law(1, 4.0).unwrap();
    let density = power_law_density(1, 4.0);
    for x in [-2.0, -0.3, -1e-3] {
        for k in [1, 2, 3] {
            let expected = moment(&density, k, x);
            let got = m.moment(k as u32, x).unwrap();
            assert!(((got - expected) / expected).abs() < 1e-8, "k={k} x={x}: {got} vs {expected}");
        }
    }
}

#[test]
fn principal_value_matches_subtracted_reference() {
    let m = SpectralMeasure::power_law(1, 4.0).unwrap();
    let density = power_law_density(1, 4.0);
    for x in [1e-3, 0.2, 1.0, 30.0] {
        // the symmetric interval [0, 2x] carries no principal-value mass
        let near = quad_uniform(|l| (density(l) - density(x)) / (l - x), 0.0, 2.0 * x, 4000);
        let far = quad(|l| density(l + 2.0 * x) / (l + x), 0.0, 1e12);
        let expected = near + far;
        let got = m.principal_value(x).unwrap();
        assert!((got - expected).abs() < 1e-8 * expected.abs().max(1.0), "x={x}: {got} vs {expected}");
    }
}

#[test]
fn principal_value_joins_the_moment_at_the_threshold() {
    let m = SpectralMeasure::power_law(2, 6.0).unwrap();
    let m1 = m.moment(1, 0.0).unwrap();
    assert!((m.principal_value(1e-7).unwrap() - m1).abs() < 1e-5);
    assert!((m.moment(1, -1e-7).unwrap() - m1).abs() < 1e-5);
}

#[test]
fn kernel_matches_brute_force_fourier_integral() {
    let m = SpectralMeasure::power_law(1, 4.0).unwrap();
    let density = power_law_density(1, 4.0);
    // upper limits keep the remainder μ(b)/t below 2e-10
    for (t, b, n) in [(0.7, 1e5, 2_000_000), (5.0, 2e4, 1_000_000), (50.0, 2000.0, 200_000)] {
        let re = quad_uniform(|l| density(l) * (l * t).cos(), 0.0, b, n);
        let im = -quad_uniform(|l| density(l) * (l * t).sin(), 0.0, b, n);
        let k = m.kernel(t);
        assert!((k.re - re).abs() < 1e-8 && (k.im - im).abs() < 1e-8, "t={t}: {k} vs {re}+{im}i");
    }
}

#[test]
fn kernel_decays_with_the_infrared_exponent() {
    // |K(t)| ~ t^{-(ν+3/2)} at large t
    for nu in [1u32, 2] {
        let m = SpectralMeasure::power_law(nu, nu as f64 + 4.0).unwrap();
        let (t0, t1) = (200.0, 2000.0);
        let slope = (m.kernel(t1).norm() / m.kernel(t0).norm()).ln() / (t1 / t0).ln();
        let expected = -(nu as f64 + 1.5);
        assert!((slope - expected).abs() < 0.05, "ν={nu}: slope {slope}");
    }
}

#[test]
fn resolvent_driving_at_zero_time_is_the_first_moment() {
    let m = SpectralMeasure::power_law(1, 4.0).unwrap();
    for x0 in [-0.8, -0.05, 0.0] {
        let h0 = m.driving_h(0.0, x0).unwrap();
        assert!((h0.re - m.moment(1, x0).unwrap()).abs() < 1e-9);
        assert!(h0.im.abs() < 1e-12);
    }
}

#[test]
fn discretization_converges_in_the_mode_count() {
    let m = SpectralMeasure::power_law(1, 4.0).unwrap();
    let m1 = |n: usize| -> f64 { m.discretize(n).iter().map(|&(l, w)| w * m.density(l) / (l + 0.5)).sum() };
    let exact = m.moment(1, -0.5).unwrap();
    assert!((m1(500) - m1(2000)).abs() < 1e-4);
    assert!((m1(2000) - exact).abs() < 1e-4);
    let mass: f64 = m.discretize(300).iter().map(|&(l, w)| w * m.density(l)).sum();
    assert!((mass - 1.0).abs() < 1e-13);
}

#[test]
fn infrared_cutoff_opens_a_gap() {
    let m = SpectralMeasure::ir_cutoff(Family::PowerLaw { nu: 1, p: 4.0 }, 1.0).unwrap();
    assert_eq!(m.support_lo(), 1.0);
    assert_eq!(m.density(0.999), 0.0);
    let base = power_law_density(1, 4.0);
    let kept = quad(&base, 1.0, 1e12);
    assert!((m.density(2.0) - base(2.0) / kept).abs() < 1e-9);
    // inside the gap the resolvent moments stay finite
    assert!(m.moment(2, 0.5).unwrap().is_finite());
    assert!(m.moment(1, 1.5).is_err());
}

#[test]
fn divergent_threshold_moments_are_reported() {
    // ν=1: μ ~ λ^{3/2}, so ∫ μ/λ³ diverges while the first two moments exist
    let m = SpectralMeasure::power_law(1, 4.0).unwrap();
    assert!(m.moment(2, 0.0).unwrap().is_finite());
    assert!(matches!(m.moment(3, 0.0), Err(FormfactorError::Divergent { .. })));
    assert!(matches!(SpectralMeasure::power_law(0, 3.0), Err(FormfactorError::InvalidParameter(_))));
}

#[test]
fn tabulated_and_config_measures_are_normalized() {
    let nodes = vec![0.0, 0.5, 1.0, 2.0, 4.0];
    let values = vec![0.0, 1.0, 0.5, 0.25, 0.0];
    let m = SpectralMeasure::tabulated(nodes, values).unwrap();
    let mass = m.integrate(|_| 1.0);
    assert!((mass - 1.0).abs() < 1e-12);
    // linear interpolation between nodes, scaled by the trapezoid mass 1.25
    assert!((m.density(0.25) - 0.5 / 1.25).abs() < 1e-12);

    let text = "family = \"exp_flat\"\nscale = 0.5\np = 3.0\n";
    let cfg = MeasureConfig::from_toml_str(text).unwrap();
    let m = SpectralMeasure::from_config(&cfg).unwrap();
    assert!((m.integrate(|_| 1.0) - 1.0).abs() < 1e-10);
    assert_eq!(m.ir_order(), None);
    assert!(MeasureConfig::from_toml_str("family = \"power_law\"\nnu = 1\nmu = 2\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn infrared_order_sets_the_threshold_power(nu in 1u32..5, extra in 3.0f64..7.0) {
        let m = SpectralMeasure::power_law(nu, nu as f64 + extra).unwrap();
        prop_assert_eq!(m.ir_order(), Some(nu));
        let scaled: Vec<f64> = [1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&l: &f64| m.density(l) / l.powf(nu as f64 + 0.5))
            .collect();
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        prop_assert!(hi / lo - 1.0 < 0.01);
    }

    #[test]
    fn moments_decrease_as_the_shift_moves_down(x in -3.0f64..-1e-3) {
        let m = SpectralMeasure::power_law(1, 4.0).unwrap();
        let here = m.moment(1, x).unwrap();
        let lower = m.moment(1, x - 0.1).unwrap();
        prop_assert!(lower < here);
        prop_assert!(here <= m.moment(1, 0.0).unwrap());
    }

    #[test]
    fn kernel_is_hermitian_and_bounded(t in 0.0f64..200.0) {
        let m = SpectralMeasure::power_law(1, 4.0).unwrap();
        let k = m.kernel(t);
        prop_assert!(k.norm() <= 1.0 + 1e-12);
        prop_assert!((m.kernel(-t) - k.conj()).norm() < 1e-12);
    }
}
