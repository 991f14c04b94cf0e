//! Distributional sanity of the simulated ensembles.

mod common;

use roughchaos_core::particle::{
    sanov_moment_g, simulate_brownian_ensemble, simulate_ips, InitialLaw, InteractionField,
};

#[test]
fn zero_drift_endpoint_variance_is_the_horizon() {
    // simulate_ips with b = 0 reproduces the Brownian ensemble bitwise
    // (see zero_drift_reduces_to_brownian), so the large-sample variance
    // check runs on the O(n m) Brownian path
    let law = InitialLaw::point_mass(vec![0.0, 0.0]);
    let n = 50_000;
    let ens = simulate_brownian_ensemble(&law, n, 2, 1.0, 4, 99).unwrap();
    for c in 0..2 {
        let xs: Vec<f64> = (0..n).map(|i| ens.path(i).endpoint()[c]).collect();
        let (mean, _) = common::mean_se(&xs);
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        assert!(
            (var - 1.0).abs() < 0.03,
            "coordinate {c}: endpoint variance {var}"
        );
    }
}

#[test]
fn brownian_increment_covariance() {
    let law = InitialLaw::point_mass(vec![0.0]);
    let steps = 32;
    let n = 4_000;
    let ens = simulate_brownian_ensemble(&law, n, 1, 1.0, steps, 3).unwrap();
    let h = 1.0 / steps as f64;
    // pool all increments
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for v in ens.increments(i) {
            acc += v * v;
            count += 1;
        }
    }
    let var = acc / count as f64;
    assert!(
        (var - h).abs() < 0.03 * h,
        "increment variance {var} vs h = {h}"
    );
}

#[test]
fn initial_points_match_the_law() {
    use rand::Rng;
    let law = InitialLaw::gaussian(vec![0.5], 0.7);
    let n = 10_000;
    let ens = simulate_brownian_ensemble(&law, n, 1, 1.0, 2, 8).unwrap();
    let mut sampled: Vec<f64> = (0..n).map(|i| ens.path(i).initial()[0]).collect();
    // direct draws from the same sampler through an independent stream
    let mut rng = roughchaos_core::rng::stream_rng(1234, 0);
    let mut direct: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            0.5 + 0.7 * z
        })
        .collect();
    let ks = common::ks_statistic(&mut sampled, &mut direct);
    assert!(ks < 0.02, "KS distance {ks}");
}

#[test]
fn particles_are_uncorrelated() {
    let law = InitialLaw::point_mass(vec![0.0]);
    let steps = 64;
    let pairs = 200;
    let ens = simulate_brownian_ensemble(&law, 2 * pairs, 1, 1.0, steps, 21).unwrap();
    let mut corrs = Vec::new();
    for p in 0..pairs {
        let a = ens.increments(2 * p);
        let b = ens.increments(2 * p + 1);
        let h = 1.0 / steps as f64;
        let corr: f64 =
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (steps as f64 * h);
        corrs.push(corr);
    }
    let (mean, se) = common::mean_se(&corrs);
    assert!(mean.abs() < 3.0 * se, "cross-correlation {mean} +- {se}");
}

#[test]
fn sanov_moment_is_stable_across_sample_sizes() {
    // sample mean of exp(G(B)) for a small constant stays put between
    // 10^3 and 10^4 draws
    let law = InitialLaw::point_mass(vec![0.0]);
    let (beta, c, eps) = (0.45, 0.05, 0.2);
    let eval = |count: usize, seed: u64| -> f64 {
        let ens = simulate_brownian_ensemble(&law, count, 1, 1.0, 32, seed).unwrap();
        (0..count)
            .map(|i| sanov_moment_g(ens.path(i), beta, c, eps).unwrap().exp())
            .sum::<f64>()
            / count as f64
    };
    let small = eval(1_000, 7);
    let large = eval(10_000, 8);
    assert!(small.is_finite() && large.is_finite());
    assert!(
        (large / small - 1.0).abs() < 0.5,
        "exp-moment drift: {small} vs {large}"
    );
}

#[test]
fn beta_range_is_validated() {
    let law = InitialLaw::point_mass(vec![0.0]);
    let ens = simulate_brownian_ensemble(&law, 1, 1, 1.0, 4, 1).unwrap();
    assert!(sanov_moment_g(ens.path(0), 0.6, 1.0, 0.5).is_err());
}

#[test]
fn subsampled_interaction_needs_large_n() {
    use roughchaos_core::particle::{simulate_ips_mode, InteractionMode};
    let law = InitialLaw::point_mass(vec![0.0]);
    let b = InteractionField::linear_attraction(0.5, 1);
    assert!(simulate_ips_mode(
        &b,
        &law,
        16,
        1.0,
        8,
        1,
        InteractionMode::Subsampled { partners: 4 }
    )
    .is_err());
}

#[test]
fn subsampled_interaction_matches_exact_for_constant_b() {
    // a constant drift ignores the partner, so the estimator is exact and
    // the subsampled run reproduces the exact-mode paths bitwise
    use roughchaos_core::particle::{simulate_ips_mode, InteractionMode};
    let law = InitialLaw::point_mass(vec![0.0]);
    // 0.5 is dyadic, so both averaging orders reproduce it exactly
    let b = InteractionField::constant(vec![0.5]);
    let n = 2_100; // above the subsampling threshold
    let exact = simulate_ips_mode(&b, &law, n, 1.0, 4, 9, InteractionMode::Exact).unwrap();
    let sub = simulate_ips_mode(
        &b,
        &law,
        n,
        1.0,
        4,
        9,
        InteractionMode::Subsampled { partners: 8 },
    )
    .unwrap();
    for i in (0..n).step_by(257) {
        assert!(exact.path(i).bitwise_eq(sub.path(i)));
    }
}

#[test]
fn brownian_prefix_is_stable_under_ensemble_growth() {
    // per-particle seed streams: particle i is the same path whether the
    // ensemble holds 2 or 6 particles
    let law = InitialLaw::point_mass(vec![0.0]);
    let small = simulate_brownian_ensemble(&law, 2, 1, 1.0, 16, 77).unwrap();
    let large = simulate_brownian_ensemble(&law, 6, 1, 1.0, 16, 77).unwrap();
    for i in 0..2 {
        assert!(small.path(i).bitwise_eq(large.path(i)));
    }
}
