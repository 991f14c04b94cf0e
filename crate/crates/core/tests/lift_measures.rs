//! Joint lifts, measure-level pushforwards and projections: structural
//! equalities and sampled-estimator sanity.

mod common;

use std::sync::Arc;

use roughchaos_core::lift::{map_f_k, LiftConfig};
use roughchaos_core::measures::{
    empirical_from_ensemble, enhanced_k_layer, modified_moment, project_pi1, project_pi2,
    TupleEnumeration,
};
use roughchaos_core::particle::{simulate_brownian_ensemble, InitialLaw};
use roughchaos_core::roughpath::HoelderExponent;

fn brownian_ensemble(n: usize, steps: usize, seed: u64) -> roughchaos_core::ParticleEnsemble {
    let law = InitialLaw::point_mass(vec![0.0]);
    simulate_brownian_ensemble(&law, n, 1, 1.0, steps, seed).unwrap()
}

#[test]
fn enhanced_k_layer_equals_map_f_k_atom_for_atom() {
    let ens = brownian_ensemble(3, 16, 5);
    let lifted = enhanced_k_layer(&ens, 2, 16, 100, false, 0).unwrap();
    assert_eq!(lifted.enumeration, TupleEnumeration::Exact);
    let mu = empirical_from_ensemble(&ens).unwrap();
    let pushed = map_f_k(&mu, 2, 16).unwrap();
    assert_eq!(lifted.measure.len(), pushed.len());
    for i in 0..pushed.len() {
        assert_eq!(
            lifted.measure.atom(i).level1(),
            pushed.atom(i).level1(),
            "atom {i} level1"
        );
        assert_eq!(
            lifted.measure.atom(i).level2_steps(),
            pushed.atom(i).level2_steps(),
            "atom {i} level2"
        );
        assert!((lifted.measure.weight(i) - pushed.weight(i)).abs() < 1e-15);
    }
}

#[test]
fn two_atoms_k2_gives_four_product_atoms() {
    let ens = brownian_ensemble(2, 8, 1);
    let lifted = enhanced_k_layer(&ens, 2, 8, 10, false, 0).unwrap();
    assert_eq!(lifted.measure.len(), 4);
    for i in 0..4 {
        assert!((lifted.measure.weight(i) - 0.25).abs() < 1e-15);
    }
    // tuples in lexicographic order: (0,0),(0,1),(1,0),(1,1)
    assert_eq!(lifted.tuples, vec![0, 0, 0, 1, 1, 0, 1, 1]);
}

#[test]
fn budget_exhaustion_is_a_resource_error() {
    let ens = brownian_ensemble(5, 8, 2);
    match enhanced_k_layer(&ens, 3, 8, 100, false, 0) {
        Err(roughchaos_core::Error::Resource(msg)) => {
            assert!(msg.contains("subsampl"), "{msg}")
        }
        other => panic!("expected resource error, got {other:?}"),
    }
}

#[test]
fn pi2_of_k3_equals_two_layer_measure() {
    let ens = brownian_ensemble(2, 8, 9);
    let three = enhanced_k_layer(&ens, 3, 8, 100, false, 0).unwrap().measure;
    let two = enhanced_k_layer(&ens, 2, 8, 100, false, 0).unwrap().measure;
    let projected = project_pi2(&three, 1).unwrap();
    // multiset equality with aggregated weights: match each projected atom
    // to a two-layer atom bitwise
    assert_eq!(projected.len(), two.len());
    for i in 0..projected.len() {
        let pa = projected.atom(i);
        let mut matched = false;
        for j in 0..two.len() {
            if pa.level1() == two.atom(j).level1()
                && pa.level2_steps() == two.atom(j).level2_steps()
            {
                assert!(
                    (projected.weight(i) - two.weight(j)).abs() < 1e-12,
                    "weights differ on matched atom"
                );
                matched = true;
                break;
            }
        }
        assert!(matched, "projected atom {i} has no bitwise partner");
    }
}

#[test]
fn pi1_then_pi2_composes() {
    let ens = brownian_ensemble(2, 8, 10);
    let three = enhanced_k_layer(&ens, 3, 8, 100, false, 0).unwrap().measure;
    let direct = project_pi1(&three, 1).unwrap();
    let via_pi2 = project_pi1(&project_pi2(&three, 1).unwrap(), 1).unwrap();
    assert_eq!(direct.len(), via_pi2.len());
    for i in 0..direct.len() {
        assert!(direct.atom(i).bitwise_eq(via_pi2.atom(i)));
        assert!((direct.weight(i) - via_pi2.weight(i)).abs() < 1e-15);
    }
}

#[test]
fn sampled_k_layer_is_unbiased_for_bounded_functionals() {
    // paired test: the sampled estimator of int phi d mu vs the exact value,
    // within 3 standard errors over replicas
    let ens = brownian_ensemble(6, 32, 77);
    let exact = enhanced_k_layer(&ens, 2, 16, 100, false, 0).unwrap().measure;
    let phi = |p: &roughchaos_core::GridRoughPath| {
        let (x, a) = p.chen_increment(0, p.steps()).unwrap();
        (x[0] + 0.5 * (a[1] - a[2])).tanh()
    };
    let exact_value = exact.integrate(phi);
    let mut estimates = Vec::new();
    for rep in 0..40u64 {
        let sampled = enhanced_k_layer(&ens, 2, 16, 18, true, rep).unwrap();
        assert!(matches!(sampled.enumeration, TupleEnumeration::Sampled { samples: 18 }));
        estimates.push(sampled.measure.integrate(phi));
    }
    let (mean, se) = common::mean_se(&estimates);
    assert!(
        (mean - exact_value).abs() < 3.0 * se + 1e-12,
        "sampled mean {mean} vs exact {exact_value} (se {se})"
    );
}

#[test]
fn modified_moment_stable_in_n() {
    // bounded sequence over n in {8, 32, 128}, a few replicas each
    let alpha = HoelderExponent::default();
    let mut per_n = Vec::new();
    for (idx, n) in [8usize, 32, 128].iter().enumerate() {
        let mut values = Vec::new();
        for rep in 0..4u64 {
            let ens = brownian_ensemble(*n, 64, 1000 + 10 * idx as u64 + rep);
            let mu = enhanced_k_layer(&ens, 1, 32, 200, true, rep).unwrap().measure;
            values.push(modified_moment(&mu, alpha, 0.5));
        }
        let (mean, _) = common::mean_se(&values);
        per_n.push(mean);
    }
    let max = per_n.iter().cloned().fold(f64::MIN, f64::max);
    let min = per_n.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        max / min < 1.6,
        "moment sequence drifts with n: {per_n:?}"
    );
}

#[test]
fn lift_determinism_serializes_identically() {
    use roughchaos_core::io::{save_rough_path, PathHeader};
    let tmp = tempfile::tempdir().unwrap();
    let cfg = LiftConfig::new(32, 4, 99).unwrap();
    let header = PathHeader {
        dim: 2,
        steps: 32,
        horizon: 1.0,
        alpha: None,
        seed_lineage: vec![99],
    };
    let mut bytes = Vec::new();
    for run in 0..2 {
        let p = roughchaos_core::lift::lift_brownian(2, 1.0, &cfg).unwrap();
        let stem = tmp.path().join(format!("run{run}"));
        save_rough_path(&stem, &p, &header).unwrap();
        bytes.push(std::fs::read(stem.with_extension("csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn map_f_k_budget_guard() {
    let law = InitialLaw::point_mass(vec![0.0]);
    let ens = simulate_brownian_ensemble(&law, 4, 1, 1.0, 8, 3).unwrap();
    let mu = empirical_from_ensemble(&ens).unwrap();
    // 4^11 > 1e6
    assert!(matches!(
        map_f_k(&mu, 11, 8),
        Err(roughchaos_core::Error::Resource(_))
    ));
    let atoms: Vec<Arc<roughchaos_core::GridPath>> = ens.paths().to_vec();
    drop(atoms);
}
