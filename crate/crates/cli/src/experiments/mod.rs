pub mod girsanov;
pub mod klayer_rde;
pub mod lift_approx;
pub mod poc;
pub mod rde_flow;
pub mod sanov;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use roughchaos_core::mckean::{sample_iid_mkv, solve_mkv_fixed_point, FlowMeasure, MkvSamples};
use roughchaos_core::particle::{InitialLaw, InteractionField};
use roughchaos_core::rng::{child_seed, stream_rng};
use roughchaos_core::transport::wasserstein1_points;
use roughchaos_core::{GridRoughPath, Result};

use crate::config::ExperimentConfig;

/// Statistic vector of a k-layer lift: the k endpoint increments, the k
/// diagonal areas, and the k(k-1)/2 upper cross Levy areas over [0, T].
pub fn lift_statistics(lift: &GridRoughPath, k: usize, d: usize) -> Vec<f64> {
    let (x, a) = lift
        .chen_increment(0, lift.steps())
        .expect("statistics of an empty lift");
    let kd = k * d;
    let mut out = Vec::with_capacity(2 * k + k * (k - 1) / 2);
    for layer in 0..k {
        let base = layer * d;
        let norm: f64 = (0..d).map(|c| x[base + c] * x[base + c]).sum();
        out.push(norm.sqrt() * x[base].signum());
        let mut diag = 0.0;
        for c in 0..d {
            diag += a[(base + c) * kd + base + c];
        }
        out.push(diag);
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let mut levy = 0.0;
            for c in 0..d {
                let row = i * d + c;
                let col = j * d + c;
                levy += 0.5 * (a[row * kd + col] - a[col * kd + row]);
            }
            out.push(levy);
        }
    }
    out
}

/// Draw a k-tuple of distinct particle indices.
pub fn distinct_tuple(rng: &mut ChaCha12Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot draw {k} distinct indices from {n}");
    let mut idx = Vec::with_capacity(k);
    while idx.len() < k {
        let cand = rng.random_range(0..n);
        if !idx.contains(&cand) {
            idx.push(cand);
        }
    }
    idx
}

/// Exact W1 between two equally sized point clouds plus a subsampled
/// bootstrap standard deviation.
pub fn w1_with_bootstrap(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    boot_atoms: usize,
    boot_reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let wa = vec![1.0 / a.len() as f64; a.len()];
    let wb = vec![1.0 / b.len() as f64; b.len()];
    let (value, _) = wasserstein1_points(a, &wa, b, &wb)?;
    let boot_atoms = boot_atoms.min(a.len()).min(b.len());
    let boot_w = vec![1.0 / boot_atoms as f64; boot_atoms];
    let mut boots = Vec::with_capacity(boot_reps);
    for rep in 0..boot_reps as u64 {
        let mut rng = stream_rng(seed, rep);
        let pick = |rng: &mut ChaCha12Rng, src: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..boot_atoms)
                .map(|_| src[rng.random_range(0..src.len())].clone())
                .collect()
        };
        let ca = pick(&mut rng, a);
        let cb = pick(&mut rng, b);
        let (w, _) = wasserstein1_points(&ca, &boot_w, &cb, &boot_w)?;
        boots.push(w);
    }
    let mean = boots.iter().sum::<f64>() / boots.len() as f64;
    let var = boots.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (boots.len() as f64 - 1.0);
    Ok((value, var.sqrt()))
}

/// "Distances decrease across the n list up to two sigma bands."
pub fn monotone_up_to_bands(distances: &[f64], sigmas: &[f64]) -> bool {
    distances
        .windows(2)
        .zip(sigmas.windows(2))
        .all(|(d, s)| d[1] <= d[0] + 2.0 * (s[0] + s[1]))
        && distances.last() <= distances.first()
}

/// Mean-field reference shared by the comparison experiments.
pub struct Reference {
    pub fixed_point: FlowMeasure,
    pub samples: MkvSamples,
    pub trace: Vec<f64>,
}

pub fn mean_field_reference(
    cfg: &ExperimentConfig,
    b: &InteractionField,
    law: &InitialLaw,
    k: usize,
    tuples: usize,
    steps: usize,
    target: usize,
) -> Result<Reference> {
    let n_out: usize = cfg.get_or("mkv_samples", 1024)?;
    let tol: f64 = cfg.get_or("tol", 0.02)?;
    let max_iter: usize = cfg.get_or("max_iter", 16)?;
    let horizon: f64 = cfg.get_or("T", 1.0)?;
    let (fixed_point, trace) = solve_mkv_fixed_point(
        b,
        law,
        n_out,
        horizon,
        steps,
        tol,
        max_iter,
        child_seed(cfg.seed, 0xF1),
    )?;
    let samples = sample_iid_mkv(
        &fixed_point,
        b,
        law,
        k,
        tuples,
        target,
        child_seed(cfg.seed, 0xF2),
    )?;
    Ok(Reference {
        fixed_point,
        samples,
        trace,
    })
}

/// Persist the fixed point as an ensemble directory plus its convergence
/// trace when the config asks for it (`persist_fixed_point = true`).
pub fn persist_fixed_point(
    cfg: &ExperimentConfig,
    report: &crate::report::ReportBuilder,
    reference: &Reference,
) -> Result<()> {
    let wanted: bool = cfg.get_or("persist_fixed_point", false)?;
    if !wanted {
        return Ok(());
    }
    let dir = report.out_dir().join("fixed_point");
    roughchaos_core::io::save_ensemble(&dir, reference.fixed_point.ensemble())?;
    let rows: Vec<Vec<f64>> = reference
        .trace
        .iter()
        .enumerate()
        .map(|(i, w)| vec![(i + 1) as f64, *w])
        .collect();
    report.table("fixed_point_trace", &["iter", "sup_marginal_w1"], &rows)?;
    Ok(())
}
