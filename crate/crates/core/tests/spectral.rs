mod common;

use common::{gauss_legendre, moment, power_law_density};
use divesim::formfactor::{Family, SpectralMeasure};
use divesim::spectral::{overlap_distance, Model, RankOneState, SpectralDensity, SpectralError};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

const TAU: f64 = 0.5;

fn model() -> Model {
    Model::new(SpectralMeasure::power_law(1, 4.0).unwrap(), TAU).unwrap()
}

/// Finite-mode Hamiltonian built from the reference density on its own
/// quadrature grid, diagonalized densely.
fn dense_spectrum(energy: f64, modes: usize) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let density = power_law_density(1, 4.0);
    let (x, w) = gauss_legendre(modes);
    let u_max = 1e4 / (1.0 + 1e4);
    let mut h = DMatrix::<f64>::zeros(modes + 1, modes + 1);
    h[(0, 0)] = energy;
    for (j, (xi, wi)) in x.iter().zip(&w).enumerate() {
        let u = 0.5 * u_max * (xi + 1.0);
        let q = u / (1.0 - u);
        let jac = 0.5 * u_max * 2.0 * q / ((1.0 - u) * (1.0 - u));
        let l = q * q;
        let g = TAU * (wi * jac * density(l)).sqrt();
        h[(j + 1, j + 1)] = l;
        h[(0, j + 1)] = g;
        h[(j + 1, 0)] = g;
    }
    SymmetricEigen::new(h)
}

#[test]
fn critical_data_matches_threshold_moments() {
    let c = model().critical().unwrap();
    assert!((c.energy - TAU * TAU * 1.0).abs() < 1e-10);
    assert!((c.dot_weight_sq - 1.0 / (1.0 + TAU * TAU * 5.0)).abs() < 1e-10);
}

#[test]
fn bound_state_agrees_with_dense_diagonalization() {
    let m = model();
    for energy in [-0.6, 0.0, 0.2] {
        let b = m.bound_state(energy).unwrap();
        let eig = dense_spectrum(energy, 600);
        let k = (0..eig.eigenvalues.len())
            .min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
            .unwrap();
        let lowest = eig.eigenvalues[k];
        let weight = eig.eigenvectors[(0, k)].powi(2);
        assert!((b.eigenvalue - lowest).abs() < 1e-4, "E={energy}: {} vs {lowest}", b.eigenvalue);
        assert!((b.dot_weight_sq - weight).abs() < 1e-4, "E={energy}: {} vs {weight}", b.dot_weight_sq);
    }
}

#[test]
fn static_survival_agrees_with_dense_propagation() {
    let m = model();
    let energy = 0.5;
    let eig = dense_spectrum(energy, 800);
    for t in [0.5, 2.0, 5.0, 10.0] {
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..eig.eigenvalues.len() {
            let w = eig.eigenvectors[(0, k)].powi(2);
            re += w * (eig.eigenvalues[k] * t).cos();
            im -= w * (eig.eigenvalues[k] * t).sin();
        }
        let s = m.static_survival(energy, t).unwrap();
        assert!((s.re - re).abs() < 1e-4 && (s.im - im).abs() < 1e-4, "t={t}: {s} vs {re}+{im}i");
    }
}

#[test]
fn eigenvalue_slope_is_the_dot_weight() {
    // Hellmann–Feynman: dλ/dE = |⟨dot, Ψ(E)⟩|²
    let m = model();
    for energy in [-0.8, -0.1, 0.24] {
        let h = 1e-5;
        let slope = (m.bound_state(energy + h).unwrap().eigenvalue - m.bound_state(energy - h).unwrap().eigenvalue)
            / (2.0 * h);
        let w = m.bound_state(energy).unwrap().dot_weight_sq;
        assert!((slope / w - 1.0).abs() < 1e-6, "E={energy}: {slope} vs {w}");
    }
}

#[test]
fn no_bound_state_above_the_critical_energy() {
    let m = model();
    assert!(matches!(m.bound_state(0.3), Err(SpectralError::NoBoundState { .. })));
}

#[test]
fn threshold_slope_approaches_the_critical_weight() {
    let m = model();
    let c = m.critical().unwrap();
    let ratio = |eps: f64| m.bound_state(c.energy - eps).unwrap().eigenvalue / (-eps) / c.dot_weight_sq;
    let errors: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&e| (ratio(e) - 1.0).abs()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[2] < 0.05);
}

#[test]
fn projection_derivative_matches_analytic_eigenvector_derivative() {
    // Ψ = c(1, -τ/(λ-λ₀)), λ₀' = c², c' = -τ² c⁵ m₃(λ₀); for a real unit vector
    // ‖P'‖ = ‖Ψ'‖
    let m = model();
    let density = power_law_density(1, 4.0);
    for energy in [-0.5, 0.1, 0.2] {
        let b = m.bound_state(energy).unwrap();
        let l0 = b.eigenvalue;
        let c = b.dot_weight_sq.sqrt();
        let dc = -TAU * TAU * c.powi(5) * moment(&density, 3, l0);
        let dl0 = c * c;
        let tail = common::quad(
            |l| {
                let d = l - l0;
                density(l) * (dc / d + c * dl0 / (d * d)).powi(2)
            },
            0.0,
            1e12,
        );
        let expected = (dc * dc + TAU * TAU * tail).sqrt();
        let got = m.projection_derivative_norm(energy).unwrap();
        assert!((got / expected - 1.0).abs() < 0.02, "E={energy}: {got} vs {expected}");
    }
}

#[test]
fn overlap_distance_matches_reference_inner_product() {
    let m = model();
    let density = power_law_density(1, 4.0);
    let (b1, b2) = (m.bound_state(-0.4).unwrap(), m.bound_state(0.1).unwrap());
    let (c1, c2) = (b1.dot_weight_sq.sqrt(), b2.dot_weight_sq.sqrt());
    let cross = common::quad(
        |l| density(l) / ((l - b1.eigenvalue) * (l - b2.eigenvalue)),
        0.0,
        1e12,
    );
    let inner = c1 * c2 * (1.0 + TAU * TAU * cross);
    let expected = (1.0 - inner * inner).sqrt();
    let (u, v) = (RankOneState::bound(&m, &b1), RankOneState::bound(&m, &b2));
    let got = overlap_distance(&m, &u, &v).unwrap();
    assert!((got - expected).abs() < 1e-8, "{got} vs {expected}");
    assert!(overlap_distance(&m, &u, &u).unwrap() < 1e-6);
    assert!((overlap_distance(&m, &v, &u).unwrap() - got).abs() < 1e-12);
}

#[test]
fn bound_states_converge_to_the_critical_eigenvector() {
    let m = model();
    let critical = RankOneState::critical(&m).unwrap();
    let ec = m.critical().unwrap().energy;
    let distances: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let u = RankOneState::bound(&m, &m.bound_state(ec - eps).unwrap());
            overlap_distance(&m, &u, &critical).unwrap()
        })
        .collect();
    assert!(distances.windows(2).all(|w| w[1] < w[0]), "{distances:?}");
    assert!(distances[3] < 0.1);
}

#[test]
fn resonance_is_a_zero_of_the_real_part() {
    let m = model();
    let r = m.resonance(0.5).unwrap().expect("resonance above the critical energy");
    let f = m.feshbach_boundary(r, 0.5).unwrap();
    assert!(f.re.abs() < 1e-9);
    let expected_im = -std::f64::consts::PI * TAU * TAU * m.measure().density(r * r);
    assert!((f.im - expected_im).abs() < 1e-12);
}

#[test]
fn dispersive_bound_examples() {
    // small coupling, E_a = E_c + 0.2: Im F dominates at the real-part zero
    let weak = Model::new(SpectralMeasure::power_law(1, 4.0).unwrap(), 0.2).unwrap();
    let e_a = weak.critical().unwrap().energy + 0.2;
    let check = weak.dispersive_check(e_a).unwrap();
    let r = weak.resonance(e_a).unwrap().unwrap();
    let floor = 0.5 * std::f64::consts::PI * 0.04 * weak.measure().density(r * r);
    assert!(check.holds && check.infimum >= floor, "{check:?} vs {floor}");

    // with an infrared gap F is real with a zero below δ²
    let gap = Model::new(SpectralMeasure::ir_cutoff(Family::PowerLaw { nu: 1, p: 4.0 }, 1.0).unwrap(), 0.5).unwrap();
    assert!(!gap.dispersive_check(0.5).unwrap().holds);

    // decoupled: F = E - r² vanishes at r² = E
    let free = Model::new(SpectralMeasure::power_law(1, 4.0).unwrap(), 0.0).unwrap();
    assert!(!free.dispersive_check(0.5).unwrap().holds);
}

#[test]
fn static_survival_starts_at_one_and_decays() {
    let m = model();
    assert!((m.static_survival(0.5, 0.0).unwrap().norm() - 1.0).abs() < 1e-6);
    assert!(m.static_survival(0.5, 1e3).unwrap().norm() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sum_rule_holds_off_the_threshold(energy in prop_oneof![-1.0f64..0.2, 0.3f64..1.0]) {
        let m = model();
        let continuum = SpectralDensity::new(&m, energy).unwrap().total_weight();
        let discrete = match m.bound_state(energy) {
            Ok(b) => b.dot_weight_sq,
            Err(_) => 0.0,
        };
        prop_assert!((continuum + discrete - 1.0).abs() < 1e-6, "E={}: {}", energy, continuum + discrete);
    }

    #[test]
    fn critical_energy_is_quadratic_in_the_coupling(tau in 0.01f64..2.0) {
        let m = Model::new(SpectralMeasure::power_law(2, 6.0).unwrap(), tau).unwrap();
        let m1 = m.measure().moment(1, 0.0).unwrap();
        prop_assert!((m.critical().unwrap().energy - tau * tau * m1).abs() < 1e-12 * (1.0 + tau * tau));
    }

    #[test]
    fn bound_state_solves_the_secular_equation(energy in -2.0f64..0.24) {
        let m = model();
        let b = m.bound_state(energy).unwrap();
        prop_assert!(b.eigenvalue < energy.min(0.0));
        prop_assert!(m.feshbach_below(b.eigenvalue, energy).unwrap().abs() < 1e-10);
        prop_assert!(b.dot_weight_sq > 0.0 && b.dot_weight_sq < 1.0);
    }
}
