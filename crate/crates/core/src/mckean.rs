//! The mean-field map Phi, its Picard fixed point, and i.i.d. sampling of
//! the limiting diffusion with joint lifts.
//!
//! Phi sends a candidate path law Q to the law of
//! `dY = (b * Q_t)(Y) dt + dB`, where `(b * Q_t)(x)` averages `b(x, .)`
//! against the time-t marginal of Q. Its unique fixed point is the
//! McKean-Vlasov law; the Picard iteration below approaches it with common
//! random numbers across iterates.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lift::lift_k_layer;
use crate::measures::{empirical_from_ensemble, PathMeasure};
use crate::particle::{simulate_brownian_ensemble, InitialLaw, InteractionField, ParticleEnsemble};
use crate::path::GridPath;
use crate::rng::{child_seed, rng_from_seed};
use crate::roughpath::GridRoughPath;
use crate::transport::{w1_exact_1d, wasserstein1_points};

/// Time-node decimation used by the multi-dimensional marginal distance in
/// the stopping rule (exact LP per retained node).
const MARGINAL_NODE_STRIDE_DIVISOR: usize = 16;

/// An empirical path law with cached time marginals, standing in for Q.
#[derive(Debug, Clone)]
pub struct FlowMeasure {
    ensemble: ParticleEnsemble,
    measure: PathMeasure,
    /// marginals[j] is the atom-major flattened slice of positions at t_j.
    marginals: Vec<Vec<f64>>,
}

impl FlowMeasure {
    pub fn from_ensemble(ensemble: ParticleEnsemble) -> Result<Self> {
        let measure = empirical_from_ensemble(&ensemble)?;
        let n = ensemble.len();
        let d = ensemble.dim();
        let nodes = ensemble.steps() + 1;
        let mut marginals = vec![vec![0.0; n * d]; nodes];
        for (i, path) in ensemble.paths().iter().enumerate() {
            for (j, marginal) in marginals.iter_mut().enumerate() {
                marginal[i * d..(i + 1) * d].copy_from_slice(path.point(j));
            }
        }
        Ok(FlowMeasure {
            ensemble,
            measure,
            marginals,
        })
    }

    pub fn ensemble(&self) -> &ParticleEnsemble {
        &self.ensemble
    }

    pub fn measure(&self) -> &PathMeasure {
        &self.measure
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ensemble.dim()
    }

    pub fn steps(&self) -> usize {
        self.ensemble.steps()
    }

    pub fn horizon(&self) -> f64 {
        self.ensemble.horizon()
    }

    /// Atom positions at grid node j, atom-major.
    pub fn marginal(&self, j: usize) -> &[f64] {
        &self.marginals[j]
    }

    /// `(b * Q_{t_j})(x) = sum_a w_a b(x, atom_a(t_j))`.
    pub fn mean_field_drift(&self, b: &InteractionField, j: usize, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let marginal = self.marginal(j);
        let weights = self.measure.weights();
        out.fill(0.0);
        let mut tmp = vec![0.0; d];
        for (a, w) in weights.iter().enumerate() {
            b.eval(x, &marginal[a * d..(a + 1) * d], &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += w * t;
            }
        }
    }
}

/// One application of Phi: simulate `n_out` independent copies of the SDE
/// driven by the frozen flow of Q and return their empirical law (with the
/// drift evaluations retained for entropy computations).
pub fn phi_map(
    b: &InteractionField,
    q: &FlowMeasure,
    law: &InitialLaw,
    n_out: usize,
    seed: u64,
) -> Result<FlowMeasure> {
    if q.is_empty() {
        return Err(Error::invalid("Q must be nonempty"));
    }
    if law.dim() != b.dim() || q.dim() != b.dim() {
        return Err(Error::DimensionMismatch(
            "law, interaction and Q must share a dimension".into(),
        ));
    }
    let d = b.dim();
    let steps = q.steps();
    let horizon = q.horizon();
    let h = horizon / steps as f64;
    let sd = h.sqrt();
    let times = q.ensemble().shared_times();

    struct Copy {
        values: Vec<f64>,
        increments: Vec<f64>,
        drift: Vec<f64>,
        seed: u64,
    }

    let copies: Vec<Copy> = (0..n_out)
        .into_par_iter()
        .map(|i| {
            let copy_seed = child_seed(seed, i as u64);
            let mut rng = rng_from_seed(copy_seed);
            let mut x = vec![0.0; d];
            law.sample(&mut rng, &mut x);
            let mut values = Vec::with_capacity((steps + 1) * d);
            values.extend_from_slice(&x);
            let mut increments = Vec::with_capacity(steps * d);
            let mut drift_evals = Vec::with_capacity((steps + 1) * d);
            let mut drift = vec![0.0; d];
            for j in 0..=steps {
                q.mean_field_drift(b, j, &x, &mut drift);
                drift_evals.extend_from_slice(&drift);
                if j == steps {
                    break;
                }
                for c in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    let inc = sd * z;
                    increments.push(inc);
                    x[c] += drift[c] * h + inc;
                }
                values.extend_from_slice(&x);
            }
            Copy {
                values,
                increments,
                drift: drift_evals,
                seed: copy_seed,
            }
        })
        .collect();

    let mut paths = Vec::with_capacity(n_out);
    let mut increments = Vec::with_capacity(n_out);
    let mut drift = Vec::with_capacity(n_out);
    let mut seeds = Vec::with_capacity(n_out);
    for c in copies {
        paths.push(Arc::new(GridPath::new(d, Arc::clone(&times), c.values)?));
        increments.push(c.increments);
        drift.push(c.drift);
        seeds.push(c.seed);
    }
    let ensemble = ParticleEnsemble::from_parts(
        d,
        times,
        paths,
        increments,
        Some(drift),
        seed,
        seeds,
        format!("phi[{}]", b.id()),
    );
    FlowMeasure::from_ensemble(ensemble)
}

/// Sup over grid nodes of the 1-Wasserstein distance between the time
/// marginals of two flows (exact; the multi-d case decimates the node set).
pub fn sup_marginal_w1(a: &FlowMeasure, b: &FlowMeasure) -> Result<f64> {
    if a.dim() != b.dim() || a.steps() != b.steps() {
        return Err(Error::GridMismatch("flows live on different grids".into()));
    }
    let d = a.dim();
    let nodes = a.steps() + 1;
    let mut sup = 0.0_f64;
    if d == 1 {
        for j in 0..nodes {
            let w = w1_exact_1d(
                a.marginal(j),
                a.measure().weights(),
                b.marginal(j),
                b.measure().weights(),
            );
            sup = sup.max(w);
        }
    } else {
        let stride = (a.steps() / MARGINAL_NODE_STRIDE_DIVISOR).max(1);
        let mut j = 0;
        while j < nodes {
            let xs: Vec<Vec<f64>> = (0..a.len())
                .map(|i| a.marginal(j)[i * d..(i + 1) * d].to_vec())
                .collect();
            let ys: Vec<Vec<f64>> = (0..b.len())
                .map(|i| b.marginal(j)[i * d..(i + 1) * d].to_vec())
                .collect();
            let (w, _) =
                wasserstein1_points(&xs, a.measure().weights(), &ys, b.measure().weights())?;
            sup = sup.max(w);
            if j == nodes - 1 {
                break;
            }
            j = (j + stride).min(nodes - 1);
        }
    }
    Ok(sup)
}

/// Picard iteration `Q_{k+1} = Phi(Q_k)` from the Brownian law, with common
/// random numbers across iterates. Stops when the sup-over-grid marginal W1
/// between consecutive iterates drops below `tol`.
#[allow(clippy::too_many_arguments)]
pub fn solve_mkv_fixed_point(
    b: &InteractionField,
    law: &InitialLaw,
    n_out: usize,
    horizon: f64,
    steps: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(FlowMeasure, Vec<f64>)> {
    if tol <= 0.0 {
        return Err(Error::invalid("tol must be positive"));
    }
    let d = b.dim();
    let q0 = FlowMeasure::from_ensemble(simulate_brownian_ensemble(
        law,
        n_out,
        d,
        horizon,
        steps,
        child_seed(seed, 1),
    )?)?;
    // one fixed noise stream for every iterate: common random numbers
    let noise_seed = child_seed(seed, 2);
    let mut current = q0;
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        let next = phi_map(b, &current, law, n_out, noise_seed)?;
        let dist = sup_marginal_w1(&current, &next)?;
        trace.push(dist);
        current = next;
        if dist < tol {
            return Ok((current, trace));
        }
    }
    let last = *trace.last().unwrap_or(&f64::NAN);
    Err(Error::Convergence {
        iterations: max_iter,
        last,
        trace,
    })
}

/// k-tuples of independent copies of the limiting diffusion, each tuple
/// jointly lifted over `R^{kd}`.
#[derive(Debug)]
pub struct MkvSamples {
    /// All `k * n_samples` frozen-flow copies (drift evaluations retained).
    pub copies: FlowMeasure,
    /// One joint lift per consecutive k-tuple of copies.
    pub joint_lifts: Vec<Arc<GridRoughPath>>,
    pub k: usize,
}

/// Simulate fresh independent copies driven by the frozen flow of the fixed
/// point and joint-lift them k at a time.
#[allow(clippy::too_many_arguments)]
pub fn sample_iid_mkv(
    fixed_point: &FlowMeasure,
    b: &InteractionField,
    law: &InitialLaw,
    k: usize,
    n_samples: usize,
    target_steps: usize,
    seed: u64,
) -> Result<MkvSamples> {
    if k == 0 || n_samples == 0 {
        return Err(Error::invalid("need k >= 1 and n_samples >= 1"));
    }
    let copies = phi_map(b, fixed_point, law, k * n_samples, child_seed(seed, 3))?;
    let dim = copies.dim();
    let times = copies.ensemble().shared_times();
    let joint_lifts: Vec<Arc<GridRoughPath>> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let layers: Vec<&[f64]> = (0..k)
                .map(|l| copies.ensemble().path(s * k + l).values())
                .collect();
            Arc::new(lift_k_layer(dim, &times, &layers, target_steps).expect("joint lift"))
        })
        .collect();
    Ok(MkvSamples {
        copies,
        joint_lifts,
        k,
    })
}
