//! Relative entropy, the enhanced Girsanov log-density, the mean-field
//! functionals on two-layer measures, and the rate functions built from
//! them.

use std::sync::Arc;

use rayon::prelude::*;

use crate::calculus::rough_integral;
use crate::error::{Error, Result};
use crate::lift::{lift_k_layer, map_f_k};
use crate::linalg::norm2;
use crate::mckean::FlowMeasure;
use crate::measures::{project_pi1, RoughMeasure};
use crate::particle::{InteractionField, ParticleEnsemble};
use crate::roughpath::HoelderExponent;

/// Weight tolerance when matching atoms of two measures.
const WEIGHT_MATCH_TOL: f64 = 1e-9;

/// Atom-count guard for the structural rate-function check.
const STRUCTURAL_GUARD: usize = 4096;

/// Relation of a drift measure's initial law nu to the base law lambda.
#[derive(Debug, Clone)]
pub enum InitialRelation {
    /// nu = lambda.
    Base,
    /// Known density: per-path values of log (d nu / d lambda) at the
    /// initial points.
    Ratio(Vec<f64>),
}

/// A path measure absolutely continuous with respect to the Wiener base:
/// Brownian paths plus a grid-adapted drift.
///
/// Adaptedness is a constructor discipline: the stored drift evaluations
/// come from simulations where `g(t_j)` only saw data up to `t_j`.
#[derive(Debug, Clone)]
pub struct GirsanovMeasure {
    ensemble: ParticleEnsemble,
    /// Per path: (m+1) * d drift values on the grid nodes.
    drift: Vec<Vec<f64>>,
    initial: InitialRelation,
}

impl GirsanovMeasure {
    /// The Wiener measure itself: zero drift on a Brownian ensemble.
    pub fn wiener(ensemble: ParticleEnsemble) -> Self {
        let nodes = ensemble.steps() + 1;
        let d = ensemble.dim();
        let drift = vec![vec![0.0; nodes * d]; ensemble.len()];
        GirsanovMeasure {
            ensemble,
            drift,
            initial: InitialRelation::Base,
        }
    }

    /// Wrap an ensemble that retained its drift evaluations.
    pub fn from_drifted_ensemble(ensemble: ParticleEnsemble) -> Result<Self> {
        let drift = ensemble
            .drift()
            .cloned()
            .ok_or_else(|| Error::invalid("ensemble carries no drift evaluations"))?;
        Ok(GirsanovMeasure {
            ensemble,
            drift,
            initial: InitialRelation::Base,
        })
    }

    pub fn from_flow(flow: &FlowMeasure) -> Result<Self> {
        Self::from_drifted_ensemble(flow.ensemble().clone())
    }

    pub fn with_initial_ratio(mut self, log_ratios: Vec<f64>) -> Result<Self> {
        if log_ratios.len() != self.ensemble.len() {
            return Err(Error::invalid(
                "need one initial log-density value per path",
            ));
        }
        self.initial = InitialRelation::Ratio(log_ratios);
        Ok(self)
    }

    pub fn ensemble(&self) -> &ParticleEnsemble {
        &self.ensemble
    }

    pub fn drift(&self, i: usize) -> &[f64] {
        &self.drift[i]
    }

    pub fn initial_relation(&self) -> &InitialRelation {
        &self.initial
    }
}

/// Trapezoid rule over the grid for per-node samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// `H(nu | lambda) + 1/2 E_Q int |g_t|^2 dt` with the expectation taken as
/// the sample mean over the ensemble.
pub fn relative_entropy_girsanov(q: &GirsanovMeasure) -> Result<f64> {
    let ens = q.ensemble();
    let d = ens.dim();
    let nodes = ens.steps() + 1;
    let h = ens.horizon() / ens.steps() as f64;
    let initial = match &q.initial {
        InitialRelation::Base => 0.0,
        InitialRelation::Ratio(vals) => vals.iter().sum::<f64>() / vals.len() as f64,
    };
    let mut energy = 0.0;
    for i in 0..ens.len() {
        let g = q.drift(i);
        let sq: Vec<f64> = (0..nodes)
            .map(|j| g[j * d..(j + 1) * d].iter().map(|v| v * v).sum())
            .collect();
        energy += trapezoid(&sq, h);
    }
    energy /= ens.len() as f64;
    Ok(initial + 0.5 * energy)
}

/// The enhanced Girsanov log-density of the interacting system relative to
/// the Brownian ensemble, evaluated on (the lift of) one n-particle sample:
///
/// ```text
/// rho_n(Y) = 1/n sum_ij int bbar(Y^ij) . dY^ij
///          - 1/(2n) sum_ij int div bbar(Y^ij_t) dt
///          - 1/(2n) sum_i  int div_y b(Y^ii_t) dt
///          - 1/2    sum_i  int |1/n sum_j bbar(Y^ij_t)|^2 dt
/// ```
///
/// Rough integrals run at stride 1 on pair lifts at `target_steps`; the
/// time integrals use the trapezoid rule on the fine ensemble grid.
pub fn girsanov_log_density_rho_n(
    ens: &ParticleEnsemble,
    b: &Arc<InteractionField>,
    target_steps: usize,
) -> Result<f64> {
    if b.dim() != ens.dim() {
        return Err(Error::DimensionMismatch(
            "interaction and ensemble dimensions differ".into(),
        ));
    }
    let n = ens.len();
    let d = ens.dim();
    let nodes = ens.steps() + 1;
    let h = ens.horizon() / ens.steps() as f64;
    let times = ens.shared_times();
    let integrand = b.bar_integrand();

    let pair_terms: Vec<(f64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / n, flat % n);
            let layers = [ens.path(i).values(), ens.path(j).values()];
            let lift =
                lift_k_layer(d, &times, &layers, target_steps).expect("pair lift");
            let rough = rough_integral(&integrand, &lift, 1).expect("rough integral")[0];
            let div: Vec<f64> = (0..nodes)
                .map(|t| b.div_xbar(ens.path(i).point(t), ens.path(j).point(t)))
                .collect();
            (rough, trapezoid(&div, h))
        })
        .collect();
    let term1: f64 = pair_terms.iter().map(|t| t.0).sum::<f64>() / n as f64;
    let term2: f64 = pair_terms.iter().map(|t| t.1).sum::<f64>() / (2.0 * n as f64);

    let mut term3 = 0.0;
    let mut term4 = 0.0;
    let mut mean_drift = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for i in 0..n {
        let diag: Vec<f64> = (0..nodes)
            .map(|t| b.div_y_diag(ens.path(i).point(t)))
            .collect();
        term3 += trapezoid(&diag, h);
        let sq: Vec<f64> = (0..nodes)
            .map(|t| {
                mean_drift.fill(0.0);
                for j in 0..n {
                    b.eval(ens.path(i).point(t), ens.path(j).point(t), &mut tmp);
                    for (m, v) in mean_drift.iter_mut().zip(&tmp) {
                        *m += v;
                    }
                }
                mean_drift.iter().map(|v| (v / n as f64) * (v / n as f64)).sum()
            })
            .collect();
        term4 += trapezoid(&sq, h);
    }
    term3 /= 2.0 * n as f64;
    term4 *= 0.5;

    Ok(term1 - term2 - term3 - term4)
}

/// Exact collapse of `rho_n` for a constant interaction `b = c`: the rough
/// integral of a constant field telescopes to the increment and every
/// divergence vanishes, leaving
/// `sum_i c . (X^i_T - X^i_0) - n |c|^2 T / 2`.
pub fn constant_tilt_log_density(ens: &ParticleEnsemble, c: &[f64]) -> f64 {
    let d = ens.dim();
    debug_assert_eq!(c.len(), d);
    let t_final = ens.steps();
    let mut linear = 0.0;
    for i in 0..ens.len() {
        let p = ens.path(i);
        for k in 0..d {
            linear += c[k] * (p.point(t_final)[k] - p.point(0)[k]);
        }
    }
    linear - 0.5 * ens.len() as f64 * norm2(c).powi(2) * ens.horizon()
}

/// Itemized value of the two-layer mean-field functional.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KbBreakdown {
    /// Mean rough integral of bbar.
    pub term1: f64,
    /// One half of the mean time-integral of div bbar (subtracted).
    pub term2: f64,
    /// One half of the time-integral of the squared averaged interaction
    /// (subtracted).
    pub term3: f64,
    pub total: f64,
    /// The bounded companion functional
    /// `-int int div_y b(pi1 Y_t, pi1 Y_t) mu(dY) dt`.
    pub k_prime: f64,
}

/// The three-term functional on measures over two-layer rough paths.
pub fn functional_k_b_enhanced(
    mu: &RoughMeasure,
    b: &Arc<InteractionField>,
) -> Result<KbBreakdown> {
    let d = b.dim();
    if mu.is_empty() {
        return Err(Error::invalid("empty measure"));
    }
    if mu.atom(0).dim() != 2 * d {
        return Err(Error::DimensionMismatch(format!(
            "K_b needs atoms of dimension 2d = {}, got {}",
            2 * d,
            mu.atom(0).dim()
        )));
    }
    let nodes = mu.atom(0).steps() + 1;
    let h = mu.atom(0).spacing();
    let integrand = b.bar_integrand();
    let weights = mu.weights();

    let roughs: Vec<f64> = (0..mu.len())
        .into_par_iter()
        .map(|a| rough_integral(&integrand, mu.atom(a), 1).expect("rough integral")[0])
        .collect();
    let term1: f64 = roughs.iter().zip(weights).map(|(r, w)| r * w).sum();

    // time integrals on the atom grid
    let mut div_nodes = vec![0.0; nodes];
    let mut kprime_nodes = vec![0.0; nodes];
    for a in 0..mu.len() {
        let atom = mu.atom(a);
        let w = weights[a];
        for (t, node) in div_nodes.iter_mut().enumerate() {
            let z = atom.point(t);
            *node += w * b.div_xbar(&z[..d], &z[d..]);
        }
        for (t, node) in kprime_nodes.iter_mut().enumerate() {
            let first = &atom.point(t)[..d];
            *node += w * b.div_y_diag(first);
        }
    }
    let term2 = 0.5 * trapezoid(&div_nodes, h);
    let k_prime = -trapezoid(&kprime_nodes, h);

    // inner average per node: sum_a' w_a' b(x, second layer of a' at t)
    let sq_nodes: Vec<f64> = (0..nodes)
        .into_par_iter()
        .map(|t| {
            let mut acc = 0.0;
            let mut inner = vec![0.0; d];
            let mut tmp = vec![0.0; d];
            for a in 0..mu.len() {
                let x1 = &mu.atom(a).point(t)[..d];
                inner.fill(0.0);
                for a2 in 0..mu.len() {
                    let y2 = &mu.atom(a2).point(t)[d..];
                    b.eval(x1, y2, &mut tmp);
                    for (iv, v) in inner.iter_mut().zip(&tmp) {
                        *iv += weights[a2] * v;
                    }
                }
                acc += weights[a] * inner.iter().map(|v| v * v).sum::<f64>();
            }
            acc
        })
        .collect();
    let term3 = 0.5 * trapezoid(&sq_nodes, h);

    Ok(KbBreakdown {
        term1,
        term2,
        term3,
        total: term1 - term2 - term3,
        k_prime,
    })
}

/// The classical form of the functional on a drift measure Q, streaming all
/// ordered pairs of stored paths (never materializing the product measure):
/// Stratonovich integrals are realized as stride-1 rough integrals on
/// self-pair lifts.
pub fn functional_k_b_classical(
    q: &GirsanovMeasure,
    b: &Arc<InteractionField>,
    target_steps: usize,
) -> Result<KbBreakdown> {
    let ens = q.ensemble();
    let d = b.dim();
    if ens.dim() != d {
        return Err(Error::DimensionMismatch(
            "interaction and ensemble dimensions differ".into(),
        ));
    }
    let n = ens.len();
    let times = ens.shared_times();
    if ens.steps() % target_steps != 0 {
        return Err(Error::invalid(format!(
            "target_steps {target_steps} must divide the ensemble resolution {}",
            ens.steps()
        )));
    }
    let sub = ens.steps() / target_steps;
    let nodes = target_steps + 1;
    let h = ens.horizon() / target_steps as f64;
    let integrand = b.bar_integrand();
    let w_pair = 1.0 / (n * n) as f64;

    let pair_values: Vec<(f64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / n, flat % n);
            let layers = [ens.path(i).values(), ens.path(j).values()];
            let lift =
                lift_k_layer(d, &times, &layers, target_steps).expect("pair lift");
            let rough = rough_integral(&integrand, &lift, 1).expect("rough integral")[0];
            let div: Vec<f64> = (0..nodes)
                .map(|t| {
                    b.div_xbar(ens.path(i).point(t * sub), ens.path(j).point(t * sub))
                })
                .collect();
            (rough, trapezoid(&div, h))
        })
        .collect();
    let term1: f64 = pair_values.iter().map(|v| v.0 * w_pair).sum();
    let term2: f64 = 0.5 * pair_values.iter().map(|v| v.1 * w_pair).sum::<f64>();

    // third term: - 1/2 int E_Q | E_Q b(Y_t, Z_t) |^2 dt on the coarse nodes
    let sq_nodes: Vec<f64> = (0..nodes)
        .into_par_iter()
        .map(|t| {
            let mut acc = 0.0;
            let mut inner = vec![0.0; d];
            let mut tmp = vec![0.0; d];
            for i in 0..n {
                let x = ens.path(i).point(t * sub);
                inner.fill(0.0);
                for j in 0..n {
                    b.eval(x, ens.path(j).point(t * sub), &mut tmp);
                    for (iv, v) in inner.iter_mut().zip(&tmp) {
                        *iv += v;
                    }
                }
                let scale = 1.0 / n as f64;
                acc += inner.iter().map(|v| (v * scale) * (v * scale)).sum::<f64>() / n as f64;
            }
            acc
        })
        .collect();
    let term3 = 0.5 * trapezoid(&sq_nodes, h);

    let kprime_nodes: Vec<f64> = (0..nodes)
        .map(|t| {
            (0..n)
                .map(|i| b.div_y_diag(ens.path(i).point(t * sub)))
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let k_prime = -trapezoid(&kprime_nodes, h);

    Ok(KbBreakdown {
        term1,
        term2,
        term3,
        total: term1 - term2 - term3,
        k_prime,
    })
}

/// Itemized rate-function report for a drift measure.
#[derive(Debug, Clone, serde::Serialize)]
pub struct JbReport {
    pub entropy: f64,
    pub kb: KbBreakdown,
    /// `H(Q | P) - K_b(Q)`.
    pub j_b: f64,
    /// The equivalent form `H(Q | Phi(Q))` estimated through the drift
    /// mismatch `1/2 E_Q int |g_t - (b * Q_t)(X_t)|^2 dt`.
    pub j_drift_mismatch: f64,
}

/// Rate function of the interacting system at a drift measure Q.
pub fn rate_j_b(
    q: &GirsanovMeasure,
    b: &Arc<InteractionField>,
    target_steps: usize,
) -> Result<JbReport> {
    let entropy = relative_entropy_girsanov(q)?;
    let kb = functional_k_b_classical(q, b, target_steps)?;
    let ens = q.ensemble();
    let n = ens.len();
    let d = ens.dim();
    let nodes = ens.steps() + 1;
    let h = ens.horizon() / ens.steps() as f64;
    // drift mismatch against Q's own marginals
    let per_path: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let g = q.drift(i);
            let mut inner = vec![0.0; d];
            let mut tmp = vec![0.0; d];
            let sq: Vec<f64> = (0..nodes)
                .map(|t| {
                    let x = ens.path(i).point(t);
                    inner.fill(0.0);
                    for j in 0..n {
                        b.eval(x, ens.path(j).point(t), &mut tmp);
                        for (iv, v) in inner.iter_mut().zip(&tmp) {
                            *iv += v;
                        }
                    }
                    (0..d)
                        .map(|c| {
                            let diff = g[t * d + c] - inner[c] / n as f64;
                            diff * diff
                        })
                        .sum()
                })
                .collect();
            trapezoid(&sq, h)
        })
        .collect();
    let j_drift_mismatch = 0.5 * per_path.iter().sum::<f64>() / n as f64;
    Ok(JbReport {
        entropy,
        j_b: entropy - kb.total,
        kb,
        j_drift_mismatch,
    })
}

/// Rate function on k-layer measures:
/// `H(pi_1 mu | P) - K_b(Pi_2 mu)` when the structural condition
/// `mu = F^k(pi_1 mu)` holds (within `tol`), infinite otherwise. The
/// entropy needs a drift representation of the first-layer marginal.
#[allow(clippy::too_many_arguments)]
pub fn rate_j_b_enhanced(
    mu: &RoughMeasure,
    d: usize,
    b: &Arc<InteractionField>,
    alpha: HoelderExponent,
    tol: f64,
    entropy_source: &GirsanovMeasure,
) -> Result<IkVerdict> {
    match rate_i_k(mu, d, alpha, tol, Some(entropy_source))? {
        IkVerdict::Finite { value } => {
            let two_layer = if mu.atom(0).dim() == 2 * d {
                mu.clone()
            } else {
                crate::measures::project_pi2(mu, d)?
            };
            let kb = functional_k_b_enhanced(&two_layer, b)?;
            Ok(IkVerdict::Finite {
                value: value - kb.total,
            })
        }
        other => Ok(other),
    }
}

/// Verdict of the structural rate function on k-layer measures.
#[derive(Debug, Clone, serde::Serialize)]
pub enum IkVerdict {
    /// The structural condition holds and the rate value is available
    /// through a drift representation (the entropy for the plain rate
    /// function, entropy minus the mean-field functional for the
    /// interacting one).
    Finite { value: f64 },
    /// The structural condition holds but no drift representation was
    /// supplied for the first-layer marginal.
    EntropyUnrepresentable,
    /// The measure is not the k-layer lift of its first marginal; carries
    /// the worst unmatched atom and its distance to the best candidate.
    Infinite { atom: usize, distance: f64 },
}

/// Checks `mu = F^k(pi_1 mu)` within per-atom homogeneous distance `tol`
/// and, when it holds, reports `H(pi_1 mu | P)` via the Girsanov
/// representation if one is supplied.
pub fn rate_i_k(
    mu: &RoughMeasure,
    d: usize,
    alpha: HoelderExponent,
    tol: f64,
    entropy_source: Option<&GirsanovMeasure>,
) -> Result<IkVerdict> {
    if mu.len() > STRUCTURAL_GUARD {
        return Err(Error::Resource(format!(
            "structural check guards at {STRUCTURAL_GUARD} atoms, got {}",
            mu.len()
        )));
    }
    let kd = mu.atom(0).dim();
    if d == 0 || kd % d != 0 {
        return Err(Error::invalid("layer dimension must divide atom dimension"));
    }
    let k = kd / d;
    let first = project_pi1(mu, d)?;
    let rebuilt = map_f_k(&first, k, mu.atom(0).steps())?;
    if rebuilt.len() != mu.len() {
        // weight-aggregation collapsed duplicate tuples differently
        return Ok(IkVerdict::Infinite {
            atom: 0,
            distance: f64::INFINITY,
        });
    }
    let mut used = vec![false; mu.len()];
    let mut worst: (usize, f64) = (0, 0.0);
    for r in 0..rebuilt.len() {
        let target = rebuilt.atom(r);
        let w_target = rebuilt.weight(r);
        // fast path: aligned enumeration
        let mut matched = usize::MAX;
        let mut best = f64::INFINITY;
        let order: Vec<usize> = std::iter::once(r)
            .chain((0..mu.len()).filter(|&i| i != r))
            .collect();
        for i in order {
            if used[i] || (mu.weight(i) - w_target).abs() > WEIGHT_MATCH_TOL {
                continue;
            }
            let dist = target.homogeneous_distance(mu.atom(i), alpha)?;
            if dist <= tol {
                matched = i;
                break;
            }
            if dist < best {
                best = dist;
            }
        }
        if matched == usize::MAX {
            if best > worst.1 {
                worst = (r, best);
            }
            return Ok(IkVerdict::Infinite {
                atom: worst.0,
                distance: worst.1,
            });
        }
        used[matched] = true;
    }
    match entropy_source {
        Some(q) => Ok(IkVerdict::Finite {
            value: relative_entropy_girsanov(q)?,
        }),
        None => Ok(IkVerdict::EntropyUnrepresentable),
    }
}
