//! Weakly interacting diffusions and i.i.d. Brownian ensembles.
//!
//! The interacting system moves each particle by the averaged pair drift
//!
//! ```text
//! X^i_{j+1} = X^i_j + (1/n) sum_j' b(X^i_j, X^{j'}_j) h + dB^i_j
//! ```
//!
//! on a shared fine grid, retaining the Brownian increments so the ensemble
//! can later be reweighted (Girsanov) or jointly lifted.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::calculus::{Bounds, VectorField};
use crate::error::{Error, Result};
use crate::path::{uniform_grid, GridPath};
use crate::rng::{child_seed, stream_rng};

/// Particle count above which the subsampled interaction estimator is
/// accepted (opt-in).
pub const SUBSAMPLE_MIN_N: usize = 2048;

type PairFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Sync + Send;
type PairJacFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Sync + Send;

/// The mean-field drift b(x, y) with analytic first derivatives.
pub struct InteractionField {
    dim: usize,
    id: String,
    b: Box<PairFn>,
    /// d x 2d row-major: jac[r][c] = d b_r / d (x, y)_c.
    jac: Box<PairJacFn>,
    pub sup_b: f64,
    pub sup_db: f64,
    pub sup_d2b: f64,
}

impl std::fmt::Debug for InteractionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InteractionField")
            .field("dim", &self.dim)
            .field("id", &self.id)
            .finish()
    }
}

impl InteractionField {
    pub fn new(
        dim: usize,
        id: impl Into<String>,
        b: Box<PairFn>,
        jac: Box<PairJacFn>,
        sup_b: f64,
        sup_db: f64,
        sup_d2b: f64,
    ) -> Self {
        InteractionField {
            dim,
            id: id.into(),
            b,
            jac,
            sup_b,
            sup_db,
            sup_d2b,
        }
    }

    /// b identically zero.
    pub fn zero(dim: usize) -> Self {
        InteractionField::new(
            dim,
            "zero",
            Box::new(|_, _, out| out.fill(0.0)),
            Box::new(|_, _, out| out.fill(0.0)),
            0.0,
            0.0,
            0.0,
        )
    }

    /// b identically equal to a fixed vector.
    pub fn constant(c: Vec<f64>) -> Self {
        let dim = c.len();
        let sup = crate::linalg::norm2(&c);
        let cc = c.clone();
        InteractionField::new(
            dim,
            format!("constant[{}]", fmt_vec(&c)),
            Box::new(move |_, _, out| out.copy_from_slice(&cc)),
            Box::new(|_, _, out| out.fill(0.0)),
            sup,
            0.0,
            0.0,
        )
    }

    /// Linear mean-field attraction b(x, y) = theta (y - x).
    pub fn linear_attraction(theta: f64, dim: usize) -> Self {
        InteractionField::new(
            dim,
            format!("linear[theta={theta}]"),
            Box::new(move |x, y, out| {
                for c in 0..x.len() {
                    out[c] = theta * (y[c] - x[c]);
                }
            }),
            Box::new(move |x, _y, out| {
                out.fill(0.0);
                let d = x.len();
                for r in 0..d {
                    out[r * 2 * d + r] = -theta;
                    out[r * 2 * d + d + r] = theta;
                }
            }),
            f64::INFINITY, // unbounded; sup norms below are per-derivative
            theta.abs() * (2.0 * dim as f64).sqrt(),
            0.0,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        (self.b)(x, y, out);
    }

    pub fn eval_vec(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(x, y, &mut out);
        out
    }

    pub fn jacobian(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        (self.jac)(x, y, out);
    }

    /// div_x b(x, y): divergence of the extended drift (x, y) -> (b, 0) in
    /// its first d variables.
    pub fn div_xbar(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim;
        let mut jac = vec![0.0; d * 2 * d];
        self.jacobian(x, y, &mut jac);
        (0..d).map(|r| jac[r * 2 * d + r]).sum()
    }

    /// div_y b(x, y) evaluated on the diagonal y = x.
    pub fn div_y_diag(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut jac = vec![0.0; d * 2 * d];
        self.jacobian(x, x, &mut jac);
        (0..d).map(|r| jac[r * 2 * d + d + r]).sum()
    }

    /// The scalar integrand z = (x, y) -> b(x, y) . dz^x as a vector field on
    /// R^{2d}, for rough integration against two-layer drives.
    pub fn bar_integrand(self: &Arc<Self>) -> VectorField {
        let d = self.dim;
        let field = Arc::clone(self);
        let field_jac = Arc::clone(self);
        VectorField::new(
            2 * d,
            2 * d,
            1,
            Box::new(move |z, out| {
                let (x, y) = z.split_at(d);
                field.eval(x, y, &mut out[..d]);
                out[d..].fill(0.0);
            }),
            Box::new(move |z, out| {
                // out[0][j][i] = d bbar_j / d z_i; rows j >= d vanish.
                out.fill(0.0);
                let (x, y) = z.split_at(d);
                let mut jac = vec![0.0; d * 2 * d];
                field_jac.jacobian(x, y, &mut jac);
                for j in 0..d {
                    for i in 0..2 * d {
                        out[j * 2 * d + i] = jac[j * 2 * d + i];
                    }
                }
            }),
            Bounds {
                sup_value: self.sup_b,
                sup_d1: self.sup_db,
                sup_d2: self.sup_d2b,
            },
        )
    }

    /// Spot-check the analytic Jacobian against central finite differences
    /// at `samples` random points (relative tolerance `tol`).
    pub fn validate_derivatives(&self, seed: u64, samples: usize, tol: f64) -> Result<()> {
        let d = self.dim;
        let mut rng = stream_rng(seed, 0xFD);
        let eps = 1e-5;
        let mut jac = vec![0.0; d * 2 * d];
        for s in 0..samples {
            let z: Vec<f64> = (0..2 * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let (x, y) = z.split_at(d);
            self.jacobian(x, y, &mut jac);
            for c in 0..2 * d {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[c] += eps;
                zm[c] -= eps;
                let bp = self.eval_vec(&zp[..d], &zp[d..]);
                let bm = self.eval_vec(&zm[..d], &zm[d..]);
                for r in 0..d {
                    let fd = (bp[r] - bm[r]) / (2.0 * eps);
                    let an = jac[r * 2 * d + c];
                    let scale = 1.0_f64.max(an.abs()).max(fd.abs());
                    if (fd - an).abs() > tol * scale {
                        return Err(Error::invalid(format!(
                            "analytic jacobian disagrees with finite differences at \
                             sample {s}, entry ({r},{c}): {an} vs {fd}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

type SamplerFn = dyn Fn(&mut ChaCha12Rng, &mut [f64]) + Sync + Send;
type LogRatioFn = dyn Fn(&[f64]) -> f64 + Sync + Send;

/// Initial law with an exponential-integrability certificate (c, eps).
pub struct InitialLaw {
    dim: usize,
    id: String,
    sampler: Box<SamplerFn>,
    /// log d nu / d lambda when this law is used as a tilted initial law nu
    /// over a base lambda.
    pub log_density_ratio: Option<Box<LogRatioFn>>,
    /// Certifies integrability of exp(c |x|^{1+eps}).
    pub exp_moment_params: (f64, f64),
}

impl std::fmt::Debug for InitialLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialLaw")
            .field("dim", &self.dim)
            .field("id", &self.id)
            .finish()
    }
}

impl InitialLaw {
    /// Dirac mass at a point (any (c, eps) certificate holds).
    pub fn point_mass(point: Vec<f64>) -> Self {
        let dim = point.len();
        let id = format!("delta[{}]", fmt_vec(&point));
        InitialLaw {
            dim,
            id,
            sampler: Box::new(move |_, out| out.copy_from_slice(&point)),
            log_density_ratio: None,
            exp_moment_params: (1.0, 1.0),
        }
    }

    /// Isotropic Gaussian N(mu, sigma^2 I). Satisfies the certificate for
    /// any eps < 1; we record eps = 0.5.
    pub fn gaussian(mu: Vec<f64>, sigma: f64) -> Self {
        let dim = mu.len();
        let id = format!("gaussian[mu={},sigma={sigma}]", fmt_vec(&mu));
        InitialLaw {
            dim,
            id,
            sampler: Box::new(move |rng, out| {
                for (o, m) in out.iter_mut().zip(&mu) {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = m + sigma * z;
                }
            }),
            log_density_ratio: None,
            exp_moment_params: (0.1, 0.5),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng, out: &mut [f64]) {
        (self.sampler)(rng, out);
    }

    /// Stability check of the certificate: the sample mean of
    /// exp(c |x|^{1+eps}) must not blow up between 10^3 and 10^4 draws
    /// (ratio below 2).
    pub fn validate_exp_moment(&self, seed: u64) -> Result<(f64, f64)> {
        let (c, eps) = self.exp_moment_params;
        let mut rng = stream_rng(seed, 0xA0);
        let mut x = vec![0.0; self.dim];
        let mean_of = |rng: &mut ChaCha12Rng, x: &mut Vec<f64>, n: usize| -> f64 {
            let mut acc = 0.0;
            for _ in 0..n {
                self.sample(rng, x);
                let r = crate::linalg::norm2(x);
                acc += (c * r.powf(1.0 + eps)).exp();
            }
            acc / n as f64
        };
        let small = mean_of(&mut rng, &mut x, 1_000);
        let large = mean_of(&mut rng, &mut x, 10_000);
        if !small.is_finite() || !large.is_finite() || large / small >= 2.0 || small / large >= 2.0
        {
            return Err(Error::Statistics(format!(
                "exponential moment estimate unstable: {small} at 1e3 vs {large} at 1e4 draws"
            )));
        }
        Ok((small, large))
    }
}

/// n simulated d-dimensional paths on a shared grid, with the Brownian
/// increments retained and a full seed manifest.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    dim: usize,
    times: Arc<[f64]>,
    paths: Vec<Arc<GridPath>>,
    /// Per particle: m * dim Brownian increments.
    increments: Vec<Vec<f64>>,
    /// Per particle: (m+1) * dim drift evaluations along the path; `None`
    /// means drift-free (Brownian).
    drift: Option<Vec<Vec<f64>>>,
    base_seed: u64,
    particle_seeds: Vec<u64>,
    interaction_id: String,
}

impl ParticleEnsemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn shared_times(&self) -> Arc<[f64]> {
        Arc::clone(&self.times)
    }

    pub fn path(&self, i: usize) -> &GridPath {
        &self.paths[i]
    }

    pub fn paths(&self) -> &[Arc<GridPath>] {
        &self.paths
    }

    pub fn increments(&self, i: usize) -> &[f64] {
        &self.increments[i]
    }

    pub fn drift(&self) -> Option<&Vec<Vec<f64>>> {
        self.drift.as_ref()
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn particle_seeds(&self) -> &[u64] {
        &self.particle_seeds
    }

    pub fn interaction_id(&self) -> &str {
        &self.interaction_id
    }

    /// Assemble an ensemble from already-built parts (deserialization,
    /// frozen flows, hand-made test fixtures).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dim: usize,
        times: Arc<[f64]>,
        paths: Vec<Arc<GridPath>>,
        increments: Vec<Vec<f64>>,
        drift: Option<Vec<Vec<f64>>>,
        base_seed: u64,
        particle_seeds: Vec<u64>,
        interaction_id: String,
    ) -> Self {
        ParticleEnsemble {
            dim,
            times,
            paths,
            increments,
            drift,
            base_seed,
            particle_seeds,
            interaction_id,
        }
    }
}

/// Draw the per-particle initial points and Brownian increments. These are
/// derived from per-particle seed streams, so the result is independent of
/// any parallel scheduling.
fn draw_noise(
    law: &InitialLaw,
    n: usize,
    dim: usize,
    steps: usize,
    h: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<u64>, Vec<f64>) {
    let sd = h.sqrt();
    let particle_seeds: Vec<u64> = (0..n).map(|i| child_seed(seed, i as u64)).collect();
    let mut increments = Vec::with_capacity(n);
    let mut initials = vec![0.0; n * dim];
    for i in 0..n {
        let mut rng = crate::rng::rng_from_seed(particle_seeds[i]);
        law.sample(&mut rng, &mut initials[i * dim..(i + 1) * dim]);
        let mut inc = vec![0.0; steps * dim];
        for v in inc.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = sd * z;
        }
        increments.push(inc);
    }
    (increments, particle_seeds, initials)
}

/// Interaction evaluation strategy for the Euler step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionMode {
    /// Exact O(n^2) pair sum (default).
    Exact,
    /// Mean drift estimated from `partners` random partners per particle.
    /// Only accepted for n > [`SUBSAMPLE_MIN_N`].
    Subsampled { partners: usize },
}

/// Euler-Maruyama simulation of the interacting particle system.
pub fn simulate_ips(
    b: &InteractionField,
    law: &InitialLaw,
    n: usize,
    horizon: f64,
    steps: usize,
    seed: u64,
) -> Result<ParticleEnsemble> {
    simulate_ips_mode(b, law, n, horizon, steps, seed, InteractionMode::Exact)
}

pub fn simulate_ips_mode(
    b: &InteractionField,
    law: &InitialLaw,
    n: usize,
    horizon: f64,
    steps: usize,
    seed: u64,
    mode: InteractionMode,
) -> Result<ParticleEnsemble> {
    if n == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    if law.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "law dim {} vs interaction dim {}",
            law.dim(),
            b.dim()
        )));
    }
    if let InteractionMode::Subsampled { partners } = mode {
        if n <= SUBSAMPLE_MIN_N {
            return Err(Error::invalid(format!(
                "subsampled interaction is only accepted for n > {SUBSAMPLE_MIN_N}"
            )));
        }
        if partners == 0 {
            return Err(Error::invalid("need at least one partner"));
        }
    }
    let dim = b.dim();
    let times = uniform_grid(horizon, steps);
    let h = horizon / steps as f64;
    let (increments, particle_seeds, initials) = draw_noise(law, n, dim, steps, h, seed);

    // state[i*dim..] is the current position of particle i
    let mut state = initials;
    let mut values: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = Vec::with_capacity((steps + 1) * dim);
            v.extend_from_slice(&state[i * dim..(i + 1) * dim]);
            v
        })
        .collect();
    let mut drift_evals: Vec<Vec<f64>> = vec![Vec::with_capacity((steps + 1) * dim); n];

    let partner_seed = child_seed(seed, 0x50A7);
    for j in 0..=steps {
        // mean-field drift against the frozen step-j state
        let drifts: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = &state[i * dim..(i + 1) * dim];
                let mut acc = vec![0.0; dim];
                let mut tmp = vec![0.0; dim];
                match mode {
                    InteractionMode::Exact => {
                        for p in 0..n {
                            b.eval(xi, &state[p * dim..(p + 1) * dim], &mut tmp);
                            for (a, t) in acc.iter_mut().zip(&tmp) {
                                *a += t;
                            }
                        }
                        for a in acc.iter_mut() {
                            *a /= n as f64;
                        }
                    }
                    InteractionMode::Subsampled { partners } => {
                        // partner draws come from a dedicated stream keyed by
                        // (step, particle) so the result stays deterministic
                        let mut rng = stream_rng(partner_seed, (j * n + i) as u64);
                        for _ in 0..partners {
                            let p: usize = rng.random_range(0..n);
                            b.eval(xi, &state[p * dim..(p + 1) * dim], &mut tmp);
                            for (a, t) in acc.iter_mut().zip(&tmp) {
                                *a += t;
                            }
                        }
                        for a in acc.iter_mut() {
                            *a /= partners as f64;
                        }
                    }
                }
                acc
            })
            .collect();
        for i in 0..n {
            drift_evals[i].extend_from_slice(&drifts[i]);
        }
        if j == steps {
            break;
        }
        for i in 0..n {
            let inc = &increments[i][j * dim..(j + 1) * dim];
            for c in 0..dim {
                let v = state[i * dim + c] + drifts[i][c] * h + inc[c];
                if !v.is_finite() {
                    return Err(Error::Divergence { step: j });
                }
                state[i * dim + c] = v;
            }
            values[i].extend_from_slice(&state[i * dim..(i + 1) * dim]);
        }
    }

    let paths: Vec<Arc<GridPath>> = values
        .into_iter()
        .map(|v| Ok(Arc::new(GridPath::new(dim, Arc::clone(&times), v)?)))
        .collect::<Result<_>>()?;
    Ok(ParticleEnsemble::from_parts(
        dim,
        times,
        paths,
        increments,
        Some(drift_evals),
        seed,
        particle_seeds,
        b.id().to_string(),
    ))
}

/// i.i.d. Brownian paths with initial law `law`.
pub fn simulate_brownian_ensemble(
    law: &InitialLaw,
    n: usize,
    dim: usize,
    horizon: f64,
    steps: usize,
    seed: u64,
) -> Result<ParticleEnsemble> {
    if n == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    if law.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "law dim {} vs requested dim {dim}",
            law.dim()
        )));
    }
    let times = uniform_grid(horizon, steps);
    let h = horizon / steps as f64;
    let (increments, particle_seeds, initials) = draw_noise(law, n, dim, steps, h, seed);
    let paths: Vec<Arc<GridPath>> = (0..n)
        .map(|i| {
            let mut v = Vec::with_capacity((steps + 1) * dim);
            v.extend_from_slice(&initials[i * dim..(i + 1) * dim]);
            for j in 0..steps {
                for c in 0..dim {
                    let prev = v[j * dim + c];
                    v.push(prev + increments[i][j * dim + c]);
                }
            }
            Ok(Arc::new(GridPath::new(dim, Arc::clone(&times), v)?))
        })
        .collect::<Result<_>>()?;
    Ok(ParticleEnsemble::from_parts(
        dim,
        times,
        paths,
        increments,
        None,
        seed,
        particle_seeds,
        "zero".to_string(),
    ))
}

/// Sanov moment function
/// `G(gamma) = c (beta-Hoelder seminorm)^{1+eps} + c |gamma(0)|^{1+eps}`.
pub fn sanov_moment_g(path: &GridPath, beta: f64, c: f64, eps: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::invalid(format!("beta must lie in (0, 1/2), got {beta}")));
    }
    let seminorm = path.hoelder_seminorm(beta);
    let initial = crate::linalg::norm2(path.initial());
    Ok(c * seminorm.powf(1.0 + eps) + c * initial.powf(1.0 + eps))
}
