//! Independent oracles used by the integration tests. Everything here is
//! deliberately brute-force and shares no code with the library kernels it
//! checks.

#![allow(dead_code)]

/// Level-2 iterated integral of the piecewise-linear interpolant of
/// `points` over [t_a, t_b], by a plain Riemann sum on a refinement with
/// `sub` sub-steps per segment: `int (X_r - X_a) (x) dX_r`.
pub fn riemann_iterated_integral(
    dim: usize,
    points: &[f64],
    a: usize,
    b: usize,
    sub: usize,
) -> Vec<f64> {
    let mut area = vec![0.0; dim * dim];
    let start = &points[a * dim..(a + 1) * dim];
    let mut prev: Vec<f64> = start.to_vec();
    for seg in a..b {
        let p = &points[seg * dim..(seg + 1) * dim];
        let q = &points[(seg + 1) * dim..(seg + 2) * dim];
        for s in 1..=sub {
            let frac = s as f64 / sub as f64;
            let cur: Vec<f64> = (0..dim).map(|c| p[c] + frac * (q[c] - p[c])).collect();
            // midpoint value of X - X_a on the sub-step
            for r in 0..dim {
                let mid = 0.5 * (prev[r] + cur[r]) - start[r];
                for c in 0..dim {
                    area[r * dim + c] += mid * (cur[c] - prev[c]);
                }
            }
            prev = cur;
        }
    }
    area
}

/// Exhaustive (1/alpha)-variation over a small grid: maximize
/// `sum omega(s_i, s_{i+1})^p` over all 2^(w-1) subpartitions.
pub fn variation_exhaustive(omega: &dyn Fn(usize, usize) -> f64, nodes: usize, p: f64) -> f64 {
    assert!(nodes >= 2 && nodes <= 22, "exhaustive oracle needs a small grid");
    let interior = nodes - 2;
    let mut best = f64::NEG_INFINITY;
    for mask in 0..(1u32 << interior) {
        let mut cut = vec![0usize];
        for i in 0..interior {
            if mask & (1 << i) != 0 {
                cut.push(i + 1);
            }
        }
        cut.push(nodes - 1);
        let total: f64 = cut
            .windows(2)
            .map(|w| omega(w[0], w[1]).powf(p))
            .sum();
        if total > best {
            best = total;
        }
    }
    best
}

/// Exhaustive balanced-transport LP by spanning-tree (basic feasible
/// solution) enumeration; exact for up to ~5x5 instances.
pub fn brute_force_transport(costs: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let m = b.len();
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .collect();
    let basis_size = n + m - 1;
    let mut best = f64::INFINITY;
    // enumerate all edge subsets of size n+m-1
    let mut pick: Vec<usize> = (0..basis_size).collect();
    loop {
        if let Some(value) = evaluate_basis(&edges, &pick, costs, a, b) {
            if value < best {
                best = value;
            }
        }
        // next combination
        let mut i = basis_size;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] != i + edges.len() - basis_size {
                pick[i] += 1;
                for k in (i + 1)..basis_size {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solve the flows on a candidate basis (must form a spanning tree of the
/// bipartite graph); returns the objective if feasible.
fn evaluate_basis(
    edges: &[(usize, usize)],
    pick: &[usize],
    costs: &[f64],
    a: &[f64],
    b: &[f64],
) -> Option<f64> {
    let n = a.len();
    let m = b.len();
    let nodes = n + m;
    let chosen: Vec<(usize, usize)> = pick.iter().map(|&e| edges[e]).collect();
    // check spanning tree via union-find
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    for &(i, j) in &chosen {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, n + j));
        if ri == rj {
            return None; // cycle
        }
        parent[ri] = rj;
    }
    // solve flows by peeling leaves
    let remaining: Vec<(usize, usize)> = chosen.clone();
    let mut excess: Vec<f64> = a.iter().copied().chain(b.iter().map(|x| -x)).collect();
    let mut flow = vec![0.0_f64; remaining.len()];
    let mut solved = vec![false; remaining.len()];
    for _ in 0..remaining.len() {
        // find a node incident to exactly one unsolved edge
        let mut counts = vec![0usize; nodes];
        for (idx, &(i, j)) in remaining.iter().enumerate() {
            if !solved[idx] {
                counts[i] += 1;
                counts[n + j] += 1;
            }
        }
        let leaf = (0..nodes).find(|&v| counts[v] == 1)?;
        let idx = remaining
            .iter()
            .enumerate()
            .position(|(k, &(i, j))| !solved[k] && (i == leaf || n + j == leaf))?;
        let (i, j) = remaining[idx];
        let f = if i == leaf { excess[i] } else { -excess[n + j] };
        flow[idx] = f;
        excess[i] -= f;
        excess[n + j] += f;
        solved[idx] = true;
    }
    if flow.iter().any(|f| *f < -1e-12) {
        return None; // infeasible basis
    }
    Some(
        remaining
            .iter()
            .zip(&flow)
            .map(|(&(i, j), f)| f.max(0.0) * costs[i * m + j])
            .sum(),
    )
}

/// Classical RK4 solve of `dY = f0(Y) dt + f(Y) xdot(t) dt` on [0, T].
pub fn rk4_ode(
    f0: &dyn Fn(&[f64]) -> Vec<f64>,
    f: &dyn Fn(&[f64]) -> Vec<f64>, // n x e row-major
    xdot: &dyn Fn(f64) -> Vec<f64>,
    y0: &[f64],
    horizon: f64,
    steps: usize,
) -> Vec<f64> {
    let n = y0.len();
    let h = horizon / steps as f64;
    let mut y = y0.to_vec();
    let deriv = |t: f64, y: &[f64]| -> Vec<f64> {
        let drift = f0(y);
        let mat = f(y);
        let xd = xdot(t);
        let e = xd.len();
        (0..n)
            .map(|o| drift[o] + (0..e).map(|c| mat[o * e + c] * xd[c]).sum::<f64>())
            .collect()
    };
    for s in 0..steps {
        let t = s as f64 * h;
        let k1 = deriv(t, &y);
        let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
        let k2 = deriv(t + 0.5 * h, &y2);
        let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
        let k3 = deriv(t + 0.5 * h, &y3);
        let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
        let k4 = deriv(t + h, &y4);
        for o in 0..n {
            y[o] += h / 6.0 * (k1[o] + 2.0 * k2[o] + 2.0 * k3[o] + k4[o]);
        }
    }
    y
}

/// Dense classical Riemann-Stieltjes integral of `f` along the polygon
/// through `points` (midpoint rule on a refinement).
pub fn classical_stieltjes(
    dim: usize,
    points: &[f64],
    f: &dyn Fn(&[f64]) -> Vec<f64>, // out x dim
    out_dim: usize,
    sub: usize,
) -> Vec<f64> {
    let segs = points.len() / dim - 1;
    let mut out = vec![0.0; out_dim];
    for seg in 0..segs {
        let p = &points[seg * dim..(seg + 1) * dim];
        let q = &points[(seg + 1) * dim..(seg + 2) * dim];
        for s in 0..sub {
            let f0 = s as f64 / sub as f64;
            let f1 = (s + 1) as f64 / sub as f64;
            let mid: Vec<f64> = (0..dim)
                .map(|c| p[c] + 0.5 * (f0 + f1) * (q[c] - p[c]))
                .collect();
            let val = f(&mid);
            for o in 0..out_dim {
                for c in 0..dim {
                    out[o] += val[o * dim + c] * (f1 - f0) * (q[c] - p[c]);
                }
            }
        }
    }
    out
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &mut Vec<f64>, b: &mut Vec<f64>) -> f64 {
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / a.len() as f64;
        let fb = j as f64 / b.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}
