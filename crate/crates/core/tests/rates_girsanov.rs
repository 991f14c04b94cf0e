//! Hand-computed benchmarks for the Girsanov/entropy stack and the
//! structural identities tying the classical and enhanced functionals
//! together.

mod common;

use std::sync::Arc;

use roughchaos_core::measures::enhanced_k_layer;
use roughchaos_core::particle::{
    simulate_brownian_ensemble, simulate_ips, InitialLaw, InteractionField,
};
use roughchaos_core::rates::{
    functional_k_b_classical, functional_k_b_enhanced, girsanov_log_density_rho_n, rate_j_b,
    relative_entropy_girsanov, GirsanovMeasure,
};

fn origin_law() -> InitialLaw {
    InitialLaw::point_mass(vec![0.0])
}

#[test]
fn kb_constant_interaction_hand_value() {
    // b = c constant, mu = enhanced Brownian pair measure from delta_0:
    // term1 -> c E[B_T] = 0 (MC noise), term2 = 0, term3 = c^2 T / 2 exactly,
    // so K_b ~ -c^2 T / 2.
    let c = 0.8;
    let b = Arc::new(InteractionField::constant(vec![c]));
    let n = 64;
    let ens = simulate_brownian_ensemble(&origin_law(), n, 1, 1.0, 64, 1234).unwrap();
    let mu = enhanced_k_layer(&ens, 2, 32, 10_000, false, 0).unwrap().measure;
    let kb = functional_k_b_enhanced(&mu, &b).unwrap();
    assert_eq!(kb.term2, 0.0);
    assert!((kb.term3 - 0.5 * c * c).abs() < 1e-12, "term3 {}", kb.term3);
    // term1 noise: c * sd(mean endpoint) = c / sqrt(n)
    let noise = 4.0 * c / (n as f64).sqrt();
    assert!(
        (kb.total + 0.5 * c * c).abs() < noise,
        "K_b = {} vs -c^2T/2 = {}",
        kb.total,
        -0.5 * c * c
    );
}

#[test]
fn classical_equals_enhanced_on_the_lifted_product() {
    // K_b(Q) = bold K_b(F^2(Q)) realized on grid data
    let theta = 0.6;
    let b = Arc::new(InteractionField::linear_attraction(theta, 1));
    let ens = simulate_brownian_ensemble(&origin_law(), 6, 1, 1.0, 32, 2024).unwrap();
    let q = GirsanovMeasure::wiener(ens.clone());
    let classical = functional_k_b_classical(&q, &b, 16).unwrap();
    let mu = enhanced_k_layer(&ens, 2, 16, 100, false, 0).unwrap().measure;
    let enhanced = functional_k_b_enhanced(&mu, &b).unwrap();
    assert!(
        (classical.total - enhanced.total).abs() < 1e-12,
        "classical {} vs enhanced {}",
        classical.total,
        enhanced.total
    );
    assert!((classical.term1 - enhanced.term1).abs() < 1e-12);
    assert!((classical.term2 - enhanced.term2).abs() < 1e-12);
    assert!((classical.term3 - enhanced.term3).abs() < 1e-12);
    assert!((classical.k_prime - enhanced.k_prime).abs() < 1e-12);
}

#[test]
fn jb_constant_drift_family_hand_value() {
    // Q = constant-drift-theta measure, b = c, lambda = delta_0, d = 1:
    // H = theta^2 T / 2, K_b = c theta T - c^2 T / 2 (up to MC noise in the
    // mean endpoint), so J_b = (theta - c)^2 T / 2.
    let theta = 1.0;
    let c = 0.5;
    let n = 2_000;
    let drift_field = InteractionField::constant(vec![theta]);
    let ens = simulate_ips(&drift_field, &origin_law(), n, 1.0, 16, 555).unwrap();
    let q = GirsanovMeasure::from_drifted_ensemble(ens).unwrap();
    let b = Arc::new(InteractionField::constant(vec![c]));
    let report = rate_j_b(&q, &b, 16).unwrap();
    assert!((report.entropy - 0.5 * theta * theta).abs() < 1e-12);
    let expect = 0.5 * (theta - c) * (theta - c);
    // H - K_b carries Monte Carlo noise c * sqrt(T/n) through the mean
    // endpoint in term1
    let noise = 4.0 * c / (n as f64).sqrt();
    assert!(
        (report.j_b - expect).abs() < noise,
        "J_b = {} vs hand value {} (noise budget {noise})",
        report.j_b,
        expect
    );
    // for constant b the drift-mismatch form is deterministic:
    // (b * Q_t)(x) = c exactly, g = theta exactly
    assert!(
        (report.j_drift_mismatch - expect).abs() < 1e-12,
        "mismatch form {} vs {}",
        report.j_drift_mismatch,
        expect
    );
    assert!(report.j_b >= 0.0);
}

#[test]
fn jb_zero_at_wiener_for_zero_interaction() {
    let ens = simulate_brownian_ensemble(&origin_law(), 32, 1, 1.0, 16, 9).unwrap();
    let q = GirsanovMeasure::wiener(ens);
    let b = Arc::new(InteractionField::zero(1));
    let report = rate_j_b(&q, &b, 16).unwrap();
    assert_eq!(report.entropy, 0.0);
    assert_eq!(report.j_b, 0.0);
    assert_eq!(report.j_drift_mismatch, 0.0);
}

#[test]
fn entropy_requires_drift_representation() {
    let ens = simulate_brownian_ensemble(&origin_law(), 4, 1, 1.0, 8, 2).unwrap();
    assert!(GirsanovMeasure::from_drifted_ensemble(ens).is_err());
}

#[test]
fn reweighting_normalizes_at_small_scale() {
    // E[exp(rho_n)] = 1 within 3 standard errors (small pilot; the
    // acceptance suite runs the full 1e4-sample version)
    let theta = 0.5;
    let b = Arc::new(InteractionField::linear_attraction(theta, 1));
    let samples = 800;
    let weights: Vec<f64> = (0..samples)
        .map(|s| {
            let ens =
                simulate_brownian_ensemble(&origin_law(), 2, 1, 1.0, 256, 70_000 + s).unwrap();
            girsanov_log_density_rho_n(&ens, &b, 64).unwrap().exp()
        })
        .collect();
    let (mean, se) = common::mean_se(&weights);
    assert!(
        (mean - 1.0).abs() < 3.0 * se,
        "E[exp(rho)] = {mean} +- {se}"
    );
}

#[test]
fn reweighted_brownian_matches_interacting_statistics() {
    // E[exp(rho_n) phi(B)] vs E[phi(X)] for a bounded endpoint functional
    let theta = 0.5;
    let b = Arc::new(InteractionField::linear_attraction(theta, 1));
    let law = origin_law();
    let samples = 800;
    let phi = |ens: &roughchaos_core::ParticleEnsemble| {
        (ens.path(0).endpoint()[0] + ens.path(1).endpoint()[0]).tanh()
    };
    let weighted: Vec<f64> = (0..samples)
        .map(|s| {
            let ens = simulate_brownian_ensemble(&law, 2, 1, 1.0, 256, 90_000 + s).unwrap();
            girsanov_log_density_rho_n(&ens, &b, 64).unwrap().exp() * phi(&ens)
        })
        .collect();
    let direct: Vec<f64> = (0..samples)
        .map(|s| {
            let ens = simulate_ips(&b, &law, 2, 1.0, 256, 50_000 + s).unwrap();
            phi(&ens)
        })
        .collect();
    let (mw, sw) = common::mean_se(&weighted);
    let (md, sd) = common::mean_se(&direct);
    let gap = (mw - md).abs();
    let sigma = (sw * sw + sd * sd).sqrt();
    assert!(gap < 3.0 * sigma, "gap {gap} vs sigma {sigma}");
}

#[test]
fn kb_prime_bounded_by_sup() {
    let theta = 0.9;
    let b = Arc::new(InteractionField::linear_attraction(theta, 1));
    for seed in 0..5 {
        let ens = simulate_brownian_ensemble(&origin_law(), 8, 1, 1.0, 32, seed).unwrap();
        let mu = enhanced_k_layer(&ens, 2, 16, 100, false, 0).unwrap().measure;
        let kb = functional_k_b_enhanced(&mu, &b).unwrap();
        // |div_y b| = theta, T = 1
        assert!(kb.k_prime.abs() <= theta + 1e-12);
    }
}

#[test]
fn entropy_positivity_on_drift_family() {
    for (theta, seed) in [(0.0, 1u64), (0.4, 2), (-0.8, 3)] {
        let field = InteractionField::constant(vec![theta]);
        let ens = simulate_ips(&field, &origin_law(), 16, 1.0, 16, seed).unwrap();
        let q = GirsanovMeasure::from_drifted_ensemble(ens).unwrap();
        let h = relative_entropy_girsanov(&q).unwrap();
        if theta == 0.0 {
            assert_eq!(h, 0.0);
        } else {
            assert!(h > 0.0);
        }
    }
}

#[test]
fn enhanced_rate_equals_classical_on_lifted_products() {
    // the k-layer rate at F^k(Q) reduces to the plain rate at Q
    use roughchaos_core::rates::{rate_j_b_enhanced, IkVerdict};
    use roughchaos_core::roughpath::HoelderExponent;
    let theta = 0.4;
    let b = Arc::new(InteractionField::linear_attraction(theta, 1));
    let drift_field = InteractionField::constant(vec![0.3]);
    let ens = simulate_ips(&drift_field, &origin_law(), 5, 1.0, 32, 808).unwrap();
    let q = GirsanovMeasure::from_drifted_ensemble(ens.clone()).unwrap();
    let classical = rate_j_b(&q, &b, 32).unwrap();
    let mu = enhanced_k_layer(&ens, 2, 32, 100, false, 0).unwrap().measure;
    let alpha = HoelderExponent::default();
    match rate_j_b_enhanced(&mu, 1, &b, alpha, 1e-9, &q).unwrap() {
        IkVerdict::Finite { value } => {
            assert!(
                (value - classical.j_b).abs() < 1e-10,
                "enhanced {value} vs classical {}",
                classical.j_b
            );
        }
        other => panic!("expected finite rate, got {other:?}"),
    }
    // a three-layer lift projects down to the same value
    let mu3 = enhanced_k_layer(&ens, 3, 32, 200, false, 0).unwrap().measure;
    match rate_j_b_enhanced(&mu3, 1, &b, alpha, 1e-9, &q).unwrap() {
        IkVerdict::Finite { value } => {
            assert!((value - classical.j_b).abs() < 1e-10);
        }
        other => panic!("expected finite rate, got {other:?}"),
    }
}
