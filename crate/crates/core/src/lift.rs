//! Geometric lifts: piecewise-linear level-2 enhancement, Brownian
//! Stratonovich lifts via fine-mesh refinement, joint k-layer lifts, and the
//! measure-level pushforward that enumerates all k-tuples of atoms.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{EmpiricalMeasure, PathMeasure, RoughMeasure};
use crate::path::uniform_grid;
use crate::rng::stream_rng;
use crate::roughpath::{GridRoughPath, HoelderExponent, PairMode};

/// Guard on the number of enumerated tuples in measure-level lifts.
pub const TUPLE_GUARD: usize = 1_000_000;

/// Resolution parameters for lift construction.
#[derive(Debug, Clone, Copy)]
pub struct LiftConfig {
    /// Grid resolution of the produced rough path.
    pub target_steps: usize,
    /// Fine sub-steps per output step used to accumulate areas.
    pub refine_factor: usize,
    /// Seed for any sampling the lift performs.
    pub seed: u64,
}

impl LiftConfig {
    pub fn new(target_steps: usize, refine_factor: usize, seed: u64) -> Result<Self> {
        if target_steps == 0 {
            return Err(Error::invalid("target_steps must be at least 1"));
        }
        if refine_factor == 0 {
            return Err(Error::invalid("refine_factor must be at least 1"));
        }
        Ok(LiftConfig {
            target_steps,
            refine_factor,
            seed,
        })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        LiftConfig { seed, ..self }
    }

    pub fn fine_steps(&self) -> usize {
        self.target_steps * self.refine_factor
    }
}

impl Default for LiftConfig {
    fn default() -> Self {
        LiftConfig {
            target_steps: 256,
            refine_factor: 16,
            seed: 0,
        }
    }
}

/// Exact level-2 lift of the piecewise-linear interpolant of `points`:
/// each segment contributes `XX = dX (x) dX / 2`.
pub fn lift_piecewise_linear(
    dim: usize,
    times: &[f64],
    points: &[f64],
) -> Result<GridRoughPath> {
    if times.len() < 2 {
        return Err(Error::invalid("need at least 2 points to lift"));
    }
    let m = times.len() - 1;
    if points.len() != (m + 1) * dim {
        return Err(Error::invalid(format!(
            "points length {} does not match (m+1)*dim = {}",
            points.len(),
            (m + 1) * dim
        )));
    }
    let mut level2 = vec![0.0; m * dim * dim];
    for j in 0..m {
        let a = &points[j * dim..(j + 1) * dim];
        let b = &points[(j + 1) * dim..(j + 2) * dim];
        let step = &mut level2[j * dim * dim..(j + 1) * dim * dim];
        for r in 0..dim {
            let dr = b[r] - a[r];
            for c in 0..dim {
                step[r * dim + c] = 0.5 * dr * (b[c] - a[c]);
            }
        }
    }
    GridRoughPath::new(dim, times.to_vec(), points.to_vec(), level2)
}

pub fn lift_piecewise_linear_shared(
    dim: usize,
    times: Arc<[f64]>,
    points: Vec<f64>,
) -> Result<GridRoughPath> {
    let m = times.len() - 1;
    let mut level2 = vec![0.0; m * dim * dim];
    for j in 0..m {
        let a = &points[j * dim..(j + 1) * dim];
        let b = &points[(j + 1) * dim..(j + 2) * dim];
        let step = &mut level2[j * dim * dim..(j + 1) * dim * dim];
        for r in 0..dim {
            let dr = b[r] - a[r];
            for c in 0..dim {
                step[r * dim + c] = 0.5 * dr * (b[c] - a[c]);
            }
        }
    }
    GridRoughPath::with_shared_times(dim, times, points, level2)
}

/// Chen-coarsen a path by grouping `factor` consecutive steps.
pub fn coarsen(path: &GridRoughPath, factor: usize) -> Result<GridRoughPath> {
    if factor == 0 || path.steps() % factor != 0 {
        return Err(Error::invalid(format!(
            "coarsening factor {factor} must divide the step count {}",
            path.steps()
        )));
    }
    if factor == 1 {
        return Ok(path.clone());
    }
    let e = path.dim();
    let m = path.steps() / factor;
    let times: Vec<f64> = (0..=m).map(|j| path.times()[j * factor]).collect();
    let mut level1 = Vec::with_capacity((m + 1) * e);
    for j in 0..=m {
        level1.extend_from_slice(path.point(j * factor));
    }
    let mut level2 = vec![0.0; m * e * e];
    for j in 0..m {
        let (_, area) = path.chen_increment(j * factor, (j + 1) * factor)?;
        level2[j * e * e..(j + 1) * e * e].copy_from_slice(&area);
    }
    GridRoughPath::new(e, times, level1, level2)
}

/// Brownian increments accumulated on a fine grid, started at the origin.
/// Returns `(fine_times, fine_points)` with `steps` increments of variance
/// `horizon/steps` per coordinate.
pub fn brownian_fine_points(
    dim: usize,
    horizon: f64,
    steps: usize,
    seed: u64,
) -> (Arc<[f64]>, Vec<f64>) {
    let times = uniform_grid(horizon, steps);
    let sd = (horizon / steps as f64).sqrt();
    let mut rng = stream_rng(seed, 0);
    let mut points = vec![0.0; (steps + 1) * dim];
    for j in 0..steps {
        for c in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            points[(j + 1) * dim + c] = points[j * dim + c] + sd * z;
        }
    }
    (times, points)
}

/// Stratonovich lift of Brownian motion at resolution `cfg.target_steps`:
/// simulate on the refined grid, lift piecewise-linearly, Chen-coarsen.
/// Deterministic given `cfg.seed`.
pub fn lift_brownian(dim: usize, horizon: f64, cfg: &LiftConfig) -> Result<GridRoughPath> {
    let (times, points) = brownian_fine_points(dim, horizon, cfg.fine_steps(), cfg.seed);
    let fine = lift_piecewise_linear_shared(dim, times, points)?;
    coarsen(&fine, cfg.refine_factor)
}

/// Joint lift of k layers sharing a fine grid. Level-1 components are
/// stacked into `R^{k d}` before lifting, so all cross areas
/// `int X^i (x) dX^j` between layers are produced. Duplicated layers are
/// allowed. The result is coarsened to `target_steps` (which must divide the
/// fine step count).
pub fn lift_k_layer(
    dim: usize,
    times: &Arc<[f64]>,
    layers: &[&[f64]],
    target_steps: usize,
) -> Result<GridRoughPath> {
    if layers.is_empty() {
        return Err(Error::invalid("need at least one layer"));
    }
    let nodes = times.len();
    for (i, layer) in layers.iter().enumerate() {
        if layer.len() != nodes * dim {
            return Err(Error::GridMismatch(format!(
                "layer {i} has {} values, expected {}",
                layer.len(),
                nodes * dim
            )));
        }
    }
    let k = layers.len();
    let joint_dim = k * dim;
    let mut stacked = vec![0.0; nodes * joint_dim];
    for j in 0..nodes {
        for (l, layer) in layers.iter().enumerate() {
            stacked[j * joint_dim + l * dim..j * joint_dim + (l + 1) * dim]
                .copy_from_slice(&layer[j * dim..(j + 1) * dim]);
        }
    }
    let fine_steps = nodes - 1;
    if fine_steps % target_steps != 0 {
        return Err(Error::invalid(format!(
            "target_steps {target_steps} must divide the fine step count {fine_steps}"
        )));
    }
    let fine = lift_piecewise_linear_shared(joint_dim, Arc::clone(times), stacked)?;
    coarsen(&fine, fine_steps / target_steps)
}

/// The polygon through `coarse_points` re-expressed on its refinement by
/// `sub` fine steps per segment, with the exact lift of the linear pieces.
/// Used to compare a coarse approximation against a fine lift on a common
/// grid.
pub fn piecewise_linear_on_fine_grid(
    dim: usize,
    fine_times: &Arc<[f64]>,
    coarse_points: &[f64],
    sub: usize,
) -> Result<GridRoughPath> {
    let coarse_nodes = coarse_points.len() / dim;
    if coarse_points.len() != coarse_nodes * dim || coarse_nodes < 2 {
        return Err(Error::invalid("malformed coarse points"));
    }
    let fine_steps = (coarse_nodes - 1) * sub;
    if fine_times.len() != fine_steps + 1 {
        return Err(Error::GridMismatch(format!(
            "fine grid has {} nodes, expected {}",
            fine_times.len(),
            fine_steps + 1
        )));
    }
    let mut points = vec![0.0; (fine_steps + 1) * dim];
    for seg in 0..coarse_nodes - 1 {
        let a = &coarse_points[seg * dim..(seg + 1) * dim];
        let b = &coarse_points[(seg + 1) * dim..(seg + 2) * dim];
        for s in 0..sub {
            let frac = s as f64 / sub as f64;
            let node = seg * sub + s;
            for c in 0..dim {
                points[node * dim + c] = a[c] + frac * (b[c] - a[c]);
            }
        }
    }
    points[fine_steps * dim..].copy_from_slice(&coarse_points[(coarse_nodes - 1) * dim..]);
    lift_piecewise_linear_shared(dim, Arc::clone(fine_times), points)
}

/// One row of the approximation-decay experiment.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayRow {
    pub m: usize,
    pub mean_distance: f64,
    pub std_distance: f64,
    pub exp_moment: f64,
}

/// For each m in `m_list`, pairs a fine Brownian lift with the
/// piecewise-linear re-lift through its m-subgrid points (same sample), and
/// reports the mean homogeneous distance together with the empirical
/// moment `E[exp(c m^(eta/2) d)]`.
#[allow(clippy::too_many_arguments)]
pub fn approximation_error_decay(
    dim: usize,
    horizon: f64,
    alpha: HoelderExponent,
    m_list: &[usize],
    samples: usize,
    c: f64,
    eta: f64,
    refine: usize,
    seed: u64,
) -> Result<Vec<DecayRow>> {
    if m_list.windows(2).any(|w| w[0] >= w[1]) || m_list.is_empty() {
        return Err(Error::invalid("m_list must be non-empty and increasing"));
    }
    if eta <= 0.0 || eta >= 0.5 - alpha.value() {
        return Err(Error::invalid(format!(
            "eta must lie in (0, 1/2 - alpha), got {eta}"
        )));
    }
    let m_max = *m_list.last().unwrap();
    let fine_steps = m_max * refine;
    for &m in m_list {
        if fine_steps % m != 0 {
            return Err(Error::invalid(format!(
                "m = {m} must divide the fine resolution {fine_steps}"
            )));
        }
    }
    let mode = if fine_steps <= crate::roughpath::DYADIC_THRESHOLD {
        PairMode::Exact
    } else {
        PairMode::Dyadic
    };
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let (times, points) =
                brownian_fine_points(dim, horizon, fine_steps, crate::rng::child_seed(seed, s as u64));
            let fine = lift_piecewise_linear_shared(dim, Arc::clone(&times), points.clone())
                .expect("fine lift");
            m_list
                .iter()
                .map(|&m| {
                    let sub = fine_steps / m;
                    let coarse: Vec<f64> = (0..=m)
                        .flat_map(|j| points[j * sub * dim..(j * sub + 1) * dim].to_vec())
                        .collect();
                    let relift =
                        piecewise_linear_on_fine_grid(dim, &times, &coarse, sub).expect("re-lift");
                    fine.homogeneous_distance_mode(&relift, alpha, mode)
                        .expect("distance")
                })
                .collect()
        })
        .collect();
    let rows = m_list
        .iter()
        .enumerate()
        .map(|(idx, &m)| {
            let dists: Vec<f64> = per_sample.iter().map(|row| row[idx]).collect();
            let mean = dists.iter().sum::<f64>() / samples as f64;
            let var = dists.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
                / (samples.max(2) - 1) as f64;
            let scale = c * (m as f64).powf(eta / 2.0);
            let exp_moment =
                dists.iter().map(|d| (scale * d).exp()).sum::<f64>() / samples as f64;
            DecayRow {
                m,
                mean_distance: mean,
                std_distance: var.sqrt(),
                exp_moment,
            }
        })
        .collect();
    Ok(rows)
}

/// Pushforward of the k-fold product of `measure` under the joint lift:
/// one atom per k-tuple of input atoms (with repetition), weight equal to
/// the product weight. Produces `n^k` atoms, guarded by [`TUPLE_GUARD`].
pub fn map_f_k(measure: &PathMeasure, k: usize, target_steps: usize) -> Result<RoughMeasure> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let n = measure.len();
    if n == 0 {
        return Err(Error::invalid("measure has no atoms"));
    }
    let tuples = n.checked_pow(k as u32).filter(|&t| t <= TUPLE_GUARD);
    let Some(tuples) = tuples else {
        return Err(Error::Resource(format!(
            "n^k = {n}^{k} exceeds the {TUPLE_GUARD}-tuple guard; subsample the measure first"
        )));
    };
    let dim = measure.atom(0).dim();
    let times = measure.atom(0).shared_times();
    let lifted: Vec<(Arc<GridRoughPath>, f64)> = (0..tuples)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; k];
            let mut rem = flat;
            // lexicographic: last index varies fastest
            for slot in (0..k).rev() {
                idx[slot] = rem % n;
                rem /= n;
            }
            let layers: Vec<&[f64]> = idx.iter().map(|&i| measure.atom(i).values()).collect();
            let weight: f64 = idx.iter().map(|&i| measure.weight(i)).product();
            let lift = lift_k_layer(dim, &times, &layers, target_steps).expect("joint lift");
            (Arc::new(lift), weight)
        })
        .collect();
    let (atoms, weights): (Vec<_>, Vec<_>) = lifted.into_iter().unzip();
    EmpiricalMeasure::new(atoms, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn straight_line_lift() {
        let v = [1.0, 2.0];
        let p = lift_piecewise_linear(2, &[0.0, 1.0], &[0.0, 0.0, v[0], v[1]]).unwrap();
        let area = p.step_area(0);
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(area[r * 2 + c], 0.5 * v[r] * v[c], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn too_few_points_is_an_error() {
        assert!(lift_piecewise_linear(1, &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn circle_levy_area_is_pi() {
        // Unit circle traversed once: enclosed (Levy) area pi, and the
        // antisymmetric part of XX_{0,1} is [[0, A], [-A, 0]].
        let m = 512;
        let times: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
        let pts: Vec<f64> = times
            .iter()
            .flat_map(|t| {
                let th = 2.0 * std::f64::consts::PI * t;
                [th.cos(), th.sin()]
            })
            .collect();
        let p = lift_piecewise_linear(2, &times, &pts).unwrap();
        let (_, a) = p.chen_increment(0, m).unwrap();
        let levy = 0.5 * (a[1] - a[2]);
        assert_abs_diff_eq!(levy, std::f64::consts::PI, epsilon = 1e-3);
        assert_abs_diff_eq!(a[1], std::f64::consts::PI, epsilon = 1e-3);
    }

    #[test]
    fn reversal_composes_to_zero() {
        let times = vec![0.0, 0.5, 1.0];
        let pts = vec![0.0, 0.3, 1.0, -0.2, 0.4, 0.9];
        let fwd = lift_piecewise_linear(2, &times, &pts).unwrap();
        let rev_pts: Vec<f64> = pts.chunks(2).rev().flatten().copied().collect();
        let rev = lift_piecewise_linear(2, &times, &rev_pts).unwrap();
        let (xf, af) = fwd.chen_increment(0, 2).unwrap();
        let (xr, ar) = rev.chen_increment(0, 2).unwrap();
        // group inverse: x_rev = -x_fwd, a_rev = a_fwd^T - x x^T ... composed
        // increment of the concatenation must vanish:
        // a_total = af + ar + xf (x) xr = 0.
        for c in 0..2 {
            assert_abs_diff_eq!(xf[c] + xr[c], 0.0, epsilon = 1e-14);
        }
        for r in 0..2 {
            for c in 0..2 {
                let total = af[r * 2 + c] + ar[r * 2 + c] + xf[r] * xr[c];
                assert_abs_diff_eq!(total, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn coarsen_keeps_endpoints_and_chen_totals() {
        let cfg = LiftConfig::new(16, 4, 9).unwrap();
        let (times, points) = brownian_fine_points(2, 1.0, cfg.fine_steps(), cfg.seed);
        let fine = lift_piecewise_linear_shared(2, times, points).unwrap();
        let coarse = coarsen(&fine, 4).unwrap();
        assert_eq!(coarse.steps(), 16);
        let (xf, af) = fine.chen_increment(0, 64).unwrap();
        let (xc, ac) = coarse.chen_increment(0, 16).unwrap();
        for c in 0..2 {
            assert_abs_diff_eq!(xf[c], xc[c], epsilon = 1e-12);
        }
        for i in 0..4 {
            assert_abs_diff_eq!(af[i], ac[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn brownian_diagonal_level2_is_half_square() {
        let cfg = LiftConfig::new(32, 8, 1234).unwrap();
        let b = lift_brownian(2, 1.0, &cfg).unwrap();
        let (x, a) = b.chen_increment(0, 32).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(a[i * 2 + i], 0.5 * x[i] * x[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn k_layer_diagonal_blocks_match_single_lifts_bitwise() {
        let cfg = LiftConfig::new(8, 4, 77).unwrap();
        let (times, pts_a) = brownian_fine_points(1, 1.0, cfg.fine_steps(), 1);
        let (_, pts_b) = brownian_fine_points(1, 1.0, cfg.fine_steps(), 2);
        let joint = lift_k_layer(1, &times, &[&pts_a, &pts_b], 8).unwrap();
        let single_a = coarsen(
            &lift_piecewise_linear_shared(1, Arc::clone(&times), pts_a.clone()).unwrap(),
            4,
        )
        .unwrap();
        for j in 0..8 {
            let ja = joint.step_area(j);
            let sa = single_a.step_area(j);
            assert_eq!(ja[0].to_bits(), sa[0].to_bits());
        }
    }

    #[test]
    fn duplicated_layers_have_equal_blocks() {
        let cfg = LiftConfig::new(8, 2, 5).unwrap();
        let (times, pts) = brownian_fine_points(1, 1.0, cfg.fine_steps(), 3);
        let joint = lift_k_layer(1, &times, &[&pts, &pts], 8).unwrap();
        for j in 0..8 {
            let a = joint.step_area(j);
            // all four blocks coincide for i = j layers
            assert_eq!(a[0].to_bits(), a[3].to_bits());
            // symmetric cross blocks both equal the diagonal by geometricity
            assert_abs_diff_eq!(a[1] + a[2], 2.0 * a[0], epsilon = 1e-15);
        }
    }

    #[test]
    fn relift_at_fine_resolution_is_identity() {
        let rows = approximation_error_decay(
            1,
            1.0,
            HoelderExponent::default(),
            &[4, 8],
            4,
            0.1,
            0.05,
            1,
            42,
        )
        .unwrap();
        // with refine = 1 the last m equals the fine resolution: distance 0.
        assert_eq!(rows.last().unwrap().mean_distance, 0.0);
    }

    #[test]
    fn seed_determinism() {
        let cfg = LiftConfig::new(16, 4, 2024).unwrap();
        let a = lift_brownian(3, 2.0, &cfg).unwrap();
        let b = lift_brownian(3, 2.0, &cfg).unwrap();
        assert_eq!(a.level1(), b.level1());
        assert_eq!(a.level2_steps(), b.level2_steps());
    }
}
