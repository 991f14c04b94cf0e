//! Empirical measures with shared atoms: plain path measures, k-layer
//! enhanced measures, the projections to the first layer and the first two
//! layers, and the moment functional of the strengthened Wasserstein
//! topology.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lift::lift_k_layer;
use crate::linalg::norm2;
use crate::particle::ParticleEnsemble;
use crate::path::GridPath;
use crate::roughpath::{GridRoughPath, HoelderExponent};

/// Weight mass-balance tolerance.
pub const WEIGHT_TOL: f64 = 1e-12;

/// A finite weighted measure whose atoms are shared by reference.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure<A> {
    atoms: Vec<Arc<A>>,
    weights: Vec<f64>,
}

pub type PathMeasure = EmpiricalMeasure<GridPath>;
pub type RoughMeasure = EmpiricalMeasure<GridRoughPath>;

impl<A> EmpiricalMeasure<A> {
    pub fn new(atoms: Vec<Arc<A>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::invalid(format!(
                "need matching non-empty atoms/weights, got {} atoms and {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::invalid(format!(
                "weights must sum to 1 within {WEIGHT_TOL}, got {total}"
            )));
        }
        Ok(EmpiricalMeasure { atoms, weights })
    }

    pub fn uniform(atoms: Vec<Arc<A>>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::invalid("need at least one atom"));
        }
        let w = 1.0 / n as f64;
        // force exact mass 1 regardless of n
        let mut weights = vec![w; n];
        let correction = 1.0 - weights.iter().sum::<f64>();
        weights[n - 1] += correction;
        EmpiricalMeasure::new(atoms, weights)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom(&self, i: usize) -> &A {
        &self.atoms[i]
    }

    pub fn atom_arc(&self, i: usize) -> &Arc<A> {
        &self.atoms[i]
    }

    pub fn atoms(&self) -> &[Arc<A>] {
        &self.atoms
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `int f dmu` as the weighted sum over atoms.
    pub fn integrate(&self, f: impl Fn(&A) -> f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| w * f(a))
            .sum()
    }
}

/// Uniform empirical measure of an ensemble: weight 1/n on each path.
pub fn empirical_from_ensemble(ens: &ParticleEnsemble) -> Result<PathMeasure> {
    EmpiricalMeasure::uniform(ens.paths().to_vec())
}

/// How `enhanced_k_layer` chose its tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TupleEnumeration {
    /// All n^k tuples, lexicographic order, weight n^-k each.
    Exact,
    /// Uniform random tuples with repetition, weight 1/samples each.
    Sampled { samples: usize },
}

/// An enhanced k-layer empirical measure plus its tuple provenance.
#[derive(Debug, Clone)]
pub struct KLayerMeasure {
    pub measure: RoughMeasure,
    pub enumeration: TupleEnumeration,
    /// Flat tuple indices, stride k, in atom order.
    pub tuples: Vec<usize>,
    pub k: usize,
}

/// Enhanced k-layer empirical measure of an ensemble: one joint lift per
/// k-tuple of particles (with repetition). Falls back to uniform tuple
/// sampling when n^k exceeds `tuple_budget` and `allow_sampling` is set.
pub fn enhanced_k_layer(
    ens: &ParticleEnsemble,
    k: usize,
    target_steps: usize,
    tuple_budget: usize,
    allow_sampling: bool,
    sample_seed: u64,
) -> Result<KLayerMeasure> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let n = ens.len();
    let exact_count = n.checked_pow(k as u32);
    let (tuples, enumeration): (Vec<usize>, TupleEnumeration) = match exact_count {
        Some(total) if total <= tuple_budget => {
            let mut tuples = Vec::with_capacity(total * k);
            let mut idx = vec![0usize; k];
            loop {
                tuples.extend_from_slice(&idx);
                // lexicographic increment, last slot fastest
                let mut slot = k;
                loop {
                    if slot == 0 {
                        break;
                    }
                    slot -= 1;
                    idx[slot] += 1;
                    if idx[slot] < n {
                        break;
                    }
                    idx[slot] = 0;
                }
                if idx.iter().all(|&v| v == 0) {
                    break;
                }
            }
            (tuples, TupleEnumeration::Exact)
        }
        _ if allow_sampling => {
            use rand::Rng;
            let mut rng = crate::rng::stream_rng(sample_seed, 0x6b6c);
            let samples = tuple_budget;
            let mut tuples = Vec::with_capacity(samples * k);
            for _ in 0..samples {
                for _ in 0..k {
                    tuples.push(rng.random_range(0..n));
                }
            }
            (tuples, TupleEnumeration::Sampled { samples })
        }
        _ => {
            return Err(Error::Resource(format!(
                "n^k = {n}^{k} exceeds the tuple budget {tuple_budget}; \
                 enable tuple subsampling or shrink the ensemble"
            )));
        }
    };
    let count = tuples.len() / k;
    let dim = ens.dim();
    let times = ens.shared_times();
    let atoms: Vec<Arc<GridRoughPath>> = (0..count)
        .into_par_iter()
        .map(|t| {
            let idx = &tuples[t * k..(t + 1) * k];
            let layers: Vec<&[f64]> = idx.iter().map(|&i| ens.path(i).values()).collect();
            Arc::new(lift_k_layer(dim, &times, &layers, target_steps).expect("joint lift"))
        })
        .collect();
    let measure = EmpiricalMeasure::uniform(atoms)?;
    Ok(KLayerMeasure {
        measure,
        enumeration,
        tuples,
        k,
    })
}

fn bits_key_path(p: &GridPath) -> Vec<u64> {
    p.values().iter().map(|x| x.to_bits()).collect()
}

fn bits_key_rough(p: &GridRoughPath) -> Vec<u64> {
    p.level1()
        .iter()
        .chain(p.level2_steps().iter())
        .map(|x| x.to_bits())
        .collect()
}

/// First-layer projection: drops level-2 data and keeps the first `d`
/// level-1 coordinates. Weights of bitwise-equal projected atoms are merged
/// (no epsilon-merging), preserving first-occurrence order.
pub fn project_pi1(mu: &RoughMeasure, d: usize) -> Result<PathMeasure> {
    if mu.is_empty() {
        return Err(Error::invalid("empty measure"));
    }
    let kd = mu.atom(0).dim();
    if d == 0 || kd % d != 0 {
        return Err(Error::invalid(format!(
            "layer dimension {d} does not divide atom dimension {kd}"
        )));
    }
    let mut atoms: Vec<Arc<GridPath>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    for i in 0..mu.len() {
        let atom = mu.atom(i);
        let nodes = atom.steps() + 1;
        let mut values = Vec::with_capacity(nodes * d);
        for j in 0..nodes {
            values.extend_from_slice(&atom.point(j)[..d]);
        }
        let path = GridPath::new(d, atom.shared_times(), values)?;
        let key = bits_key_path(&path);
        match index.get(&key) {
            Some(&slot) => weights[slot] += mu.weight(i),
            None => {
                index.insert(key, atoms.len());
                atoms.push(Arc::new(path));
                weights.push(mu.weight(i));
            }
        }
    }
    EmpiricalMeasure::new(atoms, weights)
}

/// Two-layer projection: keeps the first `2d` level-1 coordinates and the
/// corresponding 2d x 2d level-2 blocks. Requires k >= 2 layers.
pub fn project_pi2(mu: &RoughMeasure, d: usize) -> Result<RoughMeasure> {
    if mu.is_empty() {
        return Err(Error::invalid("empty measure"));
    }
    let kd = mu.atom(0).dim();
    if d == 0 || kd % d != 0 {
        return Err(Error::invalid(format!(
            "layer dimension {d} does not divide atom dimension {kd}"
        )));
    }
    if kd / d < 2 {
        return Err(Error::invalid("projection to two layers requires k >= 2"));
    }
    let sub = 2 * d;
    let mut atoms: Vec<Arc<GridRoughPath>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    for i in 0..mu.len() {
        let atom = mu.atom(i);
        let m = atom.steps();
        let mut level1 = Vec::with_capacity((m + 1) * sub);
        for j in 0..=m {
            level1.extend_from_slice(&atom.point(j)[..sub]);
        }
        let mut level2 = Vec::with_capacity(m * sub * sub);
        for j in 0..m {
            let a = atom.step_area(j);
            for r in 0..sub {
                for c in 0..sub {
                    level2.push(a[r * kd + c]);
                }
            }
        }
        let projected =
            GridRoughPath::with_shared_times(sub, atom.shared_times(), level1, level2)?;
        let key = bits_key_rough(&projected);
        match index.get(&key) {
            Some(&slot) => weights[slot] += mu.weight(i),
            None => {
                index.insert(key, atoms.len());
                atoms.push(Arc::new(projected));
                weights.push(mu.weight(i));
            }
        }
    }
    EmpiricalMeasure::new(atoms, weights)
}

/// Moment functional of the strengthened topology:
/// `sum_a w_a (|X_0^a| + ||X^a||_alpha + N_alpha(X^a))^(1+eps)`.
pub fn modified_moment(mu: &RoughMeasure, alpha: HoelderExponent, eps: f64) -> f64 {
    let per_atom: Vec<f64> = (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let atom = mu.atom(i);
            let base =
                norm2(atom.point(0)) + atom.hoelder_norm(alpha) + atom.n_alpha(alpha) as f64;
            base.powf(1.0 + eps)
        })
        .collect();
    per_atom
        .iter()
        .zip(mu.weights())
        .map(|(v, w)| v * w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::{lift_piecewise_linear, map_f_k};
    use crate::path::uniform_grid;
    use approx::assert_abs_diff_eq;

    fn toy_path(slope: f64, m: usize) -> Arc<GridPath> {
        let times = uniform_grid(1.0, m);
        let values: Vec<f64> = times.iter().map(|t| slope * t).collect();
        Arc::new(GridPath::new(1, times, values).unwrap())
    }

    #[test]
    fn uniform_weights_sum_to_one_exactly() {
        for n in [1usize, 3, 7, 1000] {
            let atoms: Vec<_> = (0..n).map(|i| toy_path(i as f64, 4)).collect();
            let mu = EmpiricalMeasure::uniform(atoms).unwrap();
            assert_eq!(mu.weights().iter().sum::<f64>(), 1.0);
            assert_eq!(mu.integrate(|_| 1.0), 1.0);
        }
    }

    #[test]
    fn integrate_is_the_particle_mean() {
        let atoms: Vec<_> = (0..5).map(|i| toy_path(i as f64, 4)).collect();
        let mu = EmpiricalMeasure::uniform(atoms).unwrap();
        let mean_endpoint = mu.integrate(|p| p.endpoint()[0]);
        assert_abs_diff_eq!(mean_endpoint, (0.0 + 1.0 + 2.0 + 3.0 + 4.0) / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn pi1_inverts_f_k() {
        let atoms: Vec<_> = [0.5, -1.0, 2.0].iter().map(|&s| toy_path(s, 8)).collect();
        let mu = EmpiricalMeasure::uniform(atoms).unwrap();
        let lifted = map_f_k(&mu, 2, 8).unwrap();
        assert_eq!(lifted.len(), 9);
        let back = project_pi1(&lifted, 1).unwrap();
        assert_eq!(back.len(), mu.len());
        for i in 0..mu.len() {
            assert!(back.atom(i).bitwise_eq(mu.atom(i)));
            assert_abs_diff_eq!(back.weight(i), mu.weight(i), epsilon = 1e-15);
        }
    }

    #[test]
    fn pi2_of_two_layers_is_identity() {
        let atoms: Vec<_> = [1.0, -0.5].iter().map(|&s| toy_path(s, 4)).collect();
        let mu = EmpiricalMeasure::uniform(atoms).unwrap();
        let lifted = map_f_k(&mu, 2, 4).unwrap();
        let projected = project_pi2(&lifted, 1).unwrap();
        assert_eq!(projected.len(), lifted.len());
        for i in 0..lifted.len() {
            assert_eq!(projected.atom(i).level1(), lifted.atom(i).level1());
            assert_eq!(projected.atom(i).level2_steps(), lifted.atom(i).level2_steps());
        }
    }

    #[test]
    fn pi2_requires_two_layers() {
        let atoms: Vec<_> = vec![toy_path(1.0, 4)];
        let mu = EmpiricalMeasure::uniform(atoms).unwrap();
        let lifted = map_f_k(&mu, 1, 4).unwrap();
        assert!(project_pi2(&lifted, 1).is_err());
    }

    #[test]
    fn projection_merges_equal_atoms() {
        // two distinct pairs sharing the first layer merge under pi1
        let a = toy_path(1.0, 4);
        let b = toy_path(2.0, 4);
        let mu = EmpiricalMeasure::uniform(vec![a, b]).unwrap();
        let lifted = map_f_k(&mu, 2, 4).unwrap();
        let back = project_pi1(&lifted, 1).unwrap();
        assert_eq!(back.len(), 2);
        assert_abs_diff_eq!(back.weight(0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(back.weight(1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn modified_moment_zero_path() {
        let times = uniform_grid(1.0, 4);
        let p = lift_piecewise_linear(1, &times, &[0.0; 5]).unwrap();
        let mu = EmpiricalMeasure::uniform(vec![Arc::new(p)]).unwrap();
        assert_eq!(modified_moment(&mu, HoelderExponent::default(), 0.5), 0.0);
    }

    #[test]
    fn modified_moment_matches_single_atom_closed_form() {
        let alpha = HoelderExponent::default();
        let eps = 0.5;
        let times = uniform_grid(1.0, 16);
        let values: Vec<f64> = times.iter().map(|t| 0.3 * t).collect();
        let p = lift_piecewise_linear(1, &times, &values).unwrap();
        let expect = (p.hoelder_norm(alpha) + p.n_alpha(alpha) as f64).powf(1.0 + eps);
        let mu = EmpiricalMeasure::uniform(vec![Arc::new(p)]).unwrap();
        assert_abs_diff_eq!(modified_moment(&mu, alpha, eps), expect, epsilon = 1e-12);
    }
}
