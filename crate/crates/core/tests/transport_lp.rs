//! Exact transport against the exhaustive basic-solution oracle, plus the
//! metric axioms on larger random instances.

mod common;

use rand::Rng;
use roughchaos_core::transport::{solve_transport, wasserstein1_points};

fn random_instance(
    rng: &mut rand_chacha::ChaCha12Rng,
    n: usize,
    m: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let mut b: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let sa: f64 = a.iter().sum();
    a.iter_mut().for_each(|x| *x /= sa);
    let sb: f64 = b.iter().sum();
    b.iter_mut().for_each(|x| *x /= sb);
    let resid = a.iter().sum::<f64>() - b.iter().sum::<f64>();
    b[m - 1] += resid;
    let costs: Vec<f64> = (0..n * m).map(|_| rng.random_range(0.0..4.0)).collect();
    (costs, a, b)
}

#[test]
fn lp_matches_brute_force_enumeration() {
    let mut rng = roughchaos_core::rng::stream_rng(225, 0);
    for it in 0..200 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let (costs, a, b) = random_instance(&mut rng, n, m);
        let (lp, _) = solve_transport(&costs, &a, &b).unwrap();
        let brute = common::brute_force_transport(&costs, &a, &b);
        assert!(
            (lp - brute).abs() < 1e-10,
            "instance {it} ({n}x{m}): lp {lp} vs brute {brute}"
        );
    }
}

#[test]
fn metric_axioms_on_sixteen_atom_triples() {
    let mut rng = roughchaos_core::rng::stream_rng(99, 3);
    let n = 16;
    let w = vec![1.0 / n as f64; n];
    for _ in 0..10 {
        let cloud = |rng: &mut rand_chacha::ChaCha12Rng| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect()
        };
        let xs = cloud(&mut rng);
        let ys = cloud(&mut rng);
        let zs = cloud(&mut rng);
        let (dxy, _) = wasserstein1_points(&xs, &w, &ys, &w).unwrap();
        let (dyx, _) = wasserstein1_points(&ys, &w, &xs, &w).unwrap();
        let (dxz, _) = wasserstein1_points(&xs, &w, &zs, &w).unwrap();
        let (dzy, _) = wasserstein1_points(&zs, &w, &ys, &w).unwrap();
        let (dxx, _) = wasserstein1_points(&xs, &w, &xs, &w).unwrap();
        assert!(dxx.abs() < 1e-12, "identity: {dxx}");
        assert!((dxy - dyx).abs() < 1e-10, "symmetry: {dxy} vs {dyx}");
        assert!(
            dxy <= dxz + dzy + 1e-10,
            "triangle: {dxy} > {dxz} + {dzy}"
        );
    }
}

#[test]
fn degenerate_weights_are_handled() {
    // one atom carries almost all the mass
    let costs = vec![1.0, 2.0, 3.0, 4.0];
    let a = vec![1.0 - 1e-12, 1e-12];
    let b = vec![0.5, 0.5];
    let (value, plan) = solve_transport(&costs, &a, &b).unwrap();
    assert!(value > 0.0);
    assert_eq!(plan.rows, 2);
}
