//! Exact 1-Wasserstein distances between finite atomic measures.
//!
//! The balanced transport LP is solved exactly by successive shortest
//! augmenting paths with Johnson potentials on the dense bipartite graph
//! (the transportation specialization of min-cost flow). Costs come from a
//! pluggable ground metric on path or rough-path space.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::dist2;
use crate::measures::{PathMeasure, RoughMeasure};
use crate::roughpath::HoelderExponent;

/// Largest cost-matrix size solved exactly.
pub const EXACT_BUDGET: usize = 1_000_000;

/// Marginal feasibility tolerance of a returned plan.
pub const PLAN_TOL: f64 = 1e-10;

/// Ground metric selector for path-space transport.
#[derive(Debug, Clone, Copy)]
pub enum GroundMetric {
    /// Initial-point distance plus the beta-Hölder seminorm of the
    /// difference path (level 1 only).
    HoelderPath { beta: f64 },
    /// The homogeneous rough-path distance surrogate of the core module.
    HomogeneousRough { alpha: HoelderExponent },
    /// Euclidean distance of the terminal values.
    EuclideanEndpoint,
}

/// An optimal transport plan between two atomic measures.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    /// (row atom, col atom, mass), strictly positive masses only.
    pub entries: Vec<(usize, usize, f64)>,
    pub objective: f64,
}

impl TransportPlan {
    fn validate(&self, a: &[f64], b: &[f64], costs: &[f64]) -> Result<()> {
        let mut row_mass = vec![0.0; self.rows];
        let mut col_mass = vec![0.0; self.cols];
        let mut obj = 0.0;
        for &(i, j, w) in &self.entries {
            if w < 0.0 {
                return Err(Error::Solver("negative plan mass".into()));
            }
            row_mass[i] += w;
            col_mass[j] += w;
            obj += w * costs[i * self.cols + j];
        }
        for (i, (&have, &want)) in row_mass.iter().zip(a).enumerate() {
            if (have - want).abs() > PLAN_TOL {
                return Err(Error::Solver(format!(
                    "row marginal {i} off by {:.3e}",
                    have - want
                )));
            }
        }
        for (j, (&have, &want)) in col_mass.iter().zip(b).enumerate() {
            if (have - want).abs() > PLAN_TOL {
                return Err(Error::Solver(format!(
                    "column marginal {j} off by {:.3e}",
                    have - want
                )));
            }
        }
        if (obj - self.objective).abs() > PLAN_TOL * (1.0 + obj.abs()) {
            return Err(Error::Solver("objective/plan inconsistency".into()));
        }
        Ok(())
    }
}

/// Exact balanced transport on a dense cost matrix (row-major `n x m`).
/// Returns the optimal objective and the plan.
pub fn solve_transport(costs: &[f64], a: &[f64], b: &[f64]) -> Result<(f64, TransportPlan)> {
    let n = a.len();
    let m = b.len();
    if costs.len() != n * m || n == 0 || m == 0 {
        return Err(Error::invalid("cost matrix shape mismatch"));
    }
    if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::invalid("costs must be finite and nonnegative"));
    }
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    if (sum_a - sum_b).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "unbalanced problem: masses {sum_a} vs {sum_b}"
        )));
    }

    let v = n + m;
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut flow = vec![0.0_f64; n * m];
    let mut potential = vec![0.0_f64; v];

    const MASS_EPS: f64 = 1e-15;
    let max_rounds = 4 * v + 64;
    let mut rounds = 0usize;

    let mut dist = vec![f64::INFINITY; v];
    let mut visited = vec![false; v];
    // prev[v] = (node we came from, true if the edge was forward)
    let mut prev: Vec<(usize, bool)> = vec![(usize::MAX, true); v];

    // One excess source per phase: Dijkstra from a single root keeps the
    // reduced costs consistent (a multi-source start is only valid when all
    // source potentials agree).
    for root in 0..n {
        while supply[root] > MASS_EPS {
            rounds += 1;
            if rounds > max_rounds {
                return Err(Error::Solver(
                    "augmentation cap exceeded on a balanced problem".into(),
                ));
            }
            dist.fill(f64::INFINITY);
            visited.fill(false);
            prev.fill((usize::MAX, true));
            dist[root] = 0.0;
            let mut target = usize::MAX;
            loop {
                let mut u = usize::MAX;
                let mut best = f64::INFINITY;
                for w in 0..v {
                    if !visited[w] && dist[w] < best {
                        best = dist[w];
                        u = w;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                visited[u] = true;
                if u >= n && demand[u - n] > MASS_EPS {
                    target = u;
                    break;
                }
                if u < n {
                    // forward edges source u -> every sink
                    let base = dist[u] + potential[u];
                    let row = &costs[u * m..(u + 1) * m];
                    for j in 0..m {
                        let w = n + j;
                        if visited[w] {
                            continue;
                        }
                        let rc = (row[j] + base - potential[w]).max(dist[u]);
                        if rc < dist[w] {
                            dist[w] = rc;
                            prev[w] = (u, true);
                        }
                    }
                } else {
                    // backward edges along positive flow
                    let j = u - n;
                    let base = dist[u] + potential[u];
                    for i in 0..n {
                        if visited[i] || flow[i * m + j] <= MASS_EPS {
                            continue;
                        }
                        let rc = (base - costs[i * m + j] - potential[i]).max(dist[u]);
                        if rc < dist[i] {
                            dist[i] = rc;
                            prev[i] = (u, false);
                        }
                    }
                }
            }
            if target == usize::MAX {
                return Err(Error::Solver(
                    "no augmenting path found on a balanced problem".into(),
                ));
            }
            let dist_t = dist[target];
            for w in 0..v {
                // unreached nodes advance by dist_t as well, which keeps
                // their outgoing reduced costs feasible for later phases
                potential[w] += dist[w].min(dist_t);
            }
            // bottleneck along the path
            let mut delta = demand[target - n].min(supply[root]);
            let mut node = target;
            loop {
                let (p, forward) = prev[node];
                if p == usize::MAX {
                    break;
                }
                if !forward {
                    // backward edge consumes existing flow (node is a source,
                    // p is the sink we stepped back from)
                    delta = delta.min(flow[node * m + (p - n)]);
                }
                node = p;
            }
            // apply
            let mut node = target;
            loop {
                let (p, forward) = prev[node];
                if p == usize::MAX {
                    supply[node] -= delta;
                    break;
                }
                if forward {
                    flow[p * m + (node - n)] += delta;
                } else {
                    flow[node * m + (p - n)] -= delta;
                }
                node = p;
            }
            demand[target - n] -= delta;
        }
    }
    if supply.iter().any(|s| *s > 1e-9) {
        return Err(Error::Solver("supply not exhausted".into()));
    }

    let mut entries = Vec::new();
    let mut objective = 0.0;
    for i in 0..n {
        for j in 0..m {
            let w = flow[i * m + j];
            if w > 0.0 {
                entries.push((i, j, w));
                objective += w * costs[i * m + j];
            }
        }
    }
    let plan = TransportPlan {
        rows: n,
        cols: m,
        entries,
        objective,
    };
    plan.validate(a, b, costs)?;
    Ok((objective, plan))
}

fn check_budget(n: usize, m: usize) -> Result<()> {
    if n * m > EXACT_BUDGET {
        return Err(Error::Resource(format!(
            "cost matrix {n} x {m} exceeds the exact budget {EXACT_BUDGET}; \
             subsample the measures first"
        )));
    }
    Ok(())
}

fn ground_cost_paths(
    mu: &PathMeasure,
    nu: &PathMeasure,
    ground: &GroundMetric,
) -> Result<Vec<f64>> {
    let p0 = mu.atom(0);
    let q0 = nu.atom(0);
    if p0.dim() != q0.dim() {
        return Err(Error::DimensionMismatch(
            "measures live over different dimensions".into(),
        ));
    }
    if !matches!(ground, GroundMetric::EuclideanEndpoint)
        && p0.times() != q0.times()
    {
        return Err(Error::GridMismatch(
            "path ground metrics need a common grid".into(),
        ));
    }
    let n = mu.len();
    let m = nu.len();
    let costs: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pi = mu.atom_arc(i).clone();
            let nu_ref = nu;
            let ground = *ground;
            (0..m).map(move |j| {
                let qj = nu_ref.atom(j);
                match ground {
                    GroundMetric::EuclideanEndpoint => dist2(pi.endpoint(), qj.endpoint()),
                    GroundMetric::HoelderPath { beta } => {
                        hoelder_path_distance(&pi, qj, beta)
                    }
                    GroundMetric::HomogeneousRough { .. } => f64::NAN, // rejected above
                }
            })
        })
        .collect();
    Ok(costs)
}

/// |x(0) - y(0)| + beta-Hölder seminorm of the difference path.
pub fn hoelder_path_distance(
    p: &crate::path::GridPath,
    q: &crate::path::GridPath,
    beta: f64,
) -> f64 {
    let d = p.dim();
    let m = p.steps();
    let h = p.times()[1] - p.times()[0];
    let inv_pow: Vec<f64> = (0..=m)
        .map(|lag| if lag == 0 { 0.0 } else { (lag as f64 * h).powf(-beta) })
        .collect();
    let mut sup = 0.0_f64;
    for i in 0..m {
        let pi = p.point(i);
        let qi = q.point(i);
        for j in (i + 1)..=m {
            let pj = p.point(j);
            let qj = q.point(j);
            let mut s = 0.0;
            for c in 0..d {
                let diff = (pj[c] - pi[c]) - (qj[c] - qi[c]);
                s += diff * diff;
            }
            sup = sup.max(s.sqrt() * inv_pow[j - i]);
        }
    }
    dist2(p.point(0), q.point(0)) + sup
}

/// Exact W1 between two path measures.
pub fn wasserstein1_paths(
    mu: &PathMeasure,
    nu: &PathMeasure,
    ground: &GroundMetric,
) -> Result<(f64, TransportPlan)> {
    if matches!(ground, GroundMetric::HomogeneousRough { .. }) {
        return Err(Error::invalid(
            "homogeneous_rough ground metric needs rough-path atoms",
        ));
    }
    check_budget(mu.len(), nu.len())?;
    let costs = ground_cost_paths(mu, nu, ground)?;
    solve_transport(&costs, mu.weights(), nu.weights())
}

/// Exact W1 between two rough-path measures.
pub fn wasserstein1_rough(
    mu: &RoughMeasure,
    nu: &RoughMeasure,
    ground: &GroundMetric,
) -> Result<(f64, TransportPlan)> {
    check_budget(mu.len(), nu.len())?;
    let n = mu.len();
    let m = nu.len();
    let costs: Vec<f64> = match *ground {
        GroundMetric::EuclideanEndpoint => (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let last = mu.atom(i).steps();
                let pi = mu.atom_arc(i).clone();
                (0..m).map(move |j| {
                    let qj = nu.atom(j);
                    dist2(pi.point(last), qj.point(qj.steps()))
                })
            })
            .collect(),
        GroundMetric::HomogeneousRough { alpha } => {
            let costs: Vec<Result<f64>> = (0..n)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let pi = mu.atom_arc(i).clone();
                    (0..m).map(move |j| pi.homogeneous_distance(nu.atom(j), alpha))
                })
                .collect();
            costs.into_iter().collect::<Result<Vec<f64>>>()?
        }
        GroundMetric::HoelderPath { beta } => (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let pi = mu.atom_arc(i).clone();
                (0..m).map(move |j| {
                    let qj = nu.atom(j);
                    // level-1 only
                    let d = pi.dim();
                    let steps = pi.steps();
                    let h = pi.spacing();
                    let mut sup = 0.0_f64;
                    for a in 0..steps {
                        for bnode in (a + 1)..=steps {
                            let lag = ((bnode - a) as f64 * h).powf(-beta);
                            let mut s = 0.0;
                            for c in 0..d {
                                let diff = (pi.point(bnode)[c] - pi.point(a)[c])
                                    - (qj.point(bnode)[c] - qj.point(a)[c]);
                                s += diff * diff;
                            }
                            sup = sup.max(s.sqrt() * lag);
                        }
                    }
                    dist2(pi.point(0), qj.point(0)) + sup
                })
            })
            .collect(),
    };
    solve_transport(&costs, mu.weights(), nu.weights())
}

/// Exact W1 between two weighted point clouds in R^k (euclidean cost).
pub fn wasserstein1_points(
    xs: &[Vec<f64>],
    wx: &[f64],
    ys: &[Vec<f64>],
    wy: &[f64],
) -> Result<(f64, TransportPlan)> {
    if xs.is_empty() || ys.is_empty() || xs.len() != wx.len() || ys.len() != wy.len() {
        return Err(Error::invalid("empty or mismatched point clouds"));
    }
    check_budget(xs.len(), ys.len())?;
    let m = ys.len();
    let costs: Vec<f64> = (0..xs.len())
        .into_par_iter()
        .flat_map_iter(|i| (0..m).map(move |j| dist2(&xs[i], &ys[j])))
        .collect();
    solve_transport(&costs, wx, wy)
}

/// Exact 1-d W1 between weighted samples via the quantile coupling.
pub fn w1_exact_1d(xs: &[f64], wx: &[f64], ys: &[f64], wy: &[f64]) -> f64 {
    let mut a: Vec<(f64, f64)> = xs.iter().copied().zip(wx.iter().copied()).collect();
    let mut b: Vec<(f64, f64)> = ys.iter().copied().zip(wy.iter().copied()).collect();
    a.sort_by(|p, q| p.0.total_cmp(&q.0));
    b.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    loop {
        let mass = ra.min(rb);
        total += mass * (a[i].0 - b[j].0).abs();
        ra -= mass;
        rb -= mass;
        if ra <= 1e-15 {
            i += 1;
            if i >= a.len() {
                break;
            }
            ra = a[i].1;
        }
        if rb <= 1e-15 {
            j += 1;
            if j >= b.len() {
                break;
            }
            rb = b[j].1;
        }
    }
    total
}
