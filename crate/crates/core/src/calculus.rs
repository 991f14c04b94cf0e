//! Rough integration by compensated Riemann sums and a second-order
//! (Davie-type) solver for differential equations driven by grid rough
//! paths.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::path::GridPath;
use crate::roughpath::{GridRoughPath, HoelderExponent};

/// Sewing-bookkeeping constant used in the growth-bound check
/// `|int f dX| <= C * C_f * (||X|| v ||X||^{1/alpha})`.
pub const GROWTH_BOUND_CONSTANT: f64 = 8.0;

/// Declared sup norms of a coefficient and its first two derivatives on the
/// working domain.
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub sup_value: f64,
    pub sup_d1: f64,
    pub sup_d2: f64,
}

impl Bounds {
    /// The coefficient constant entering the growth bound.
    pub fn coefficient(&self) -> f64 {
        self.sup_value.max(self.sup_d1).max(self.sup_d2)
    }
}

type ValueFn = dyn Fn(&[f64], &mut [f64]) + Sync + Send;

/// A coefficient `f: R^in -> L(R^drive, R^out)` with analytic first
/// derivative.
///
/// `value` writes the `out x drive` matrix (row-major); `jacobian` writes
/// the `out x drive x in` array with entry `[o][j][i] = d f^o_j / d x_i`.
pub struct VectorField {
    in_dim: usize,
    drive_dim: usize,
    out_dim: usize,
    value: Box<ValueFn>,
    jacobian: Box<ValueFn>,
    pub bounds: Bounds,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("in_dim", &self.in_dim)
            .field("drive_dim", &self.drive_dim)
            .field("out_dim", &self.out_dim)
            .finish()
    }
}

impl VectorField {
    pub fn new(
        in_dim: usize,
        drive_dim: usize,
        out_dim: usize,
        value: Box<ValueFn>,
        jacobian: Box<ValueFn>,
        bounds: Bounds,
    ) -> Self {
        VectorField {
            in_dim,
            drive_dim,
            out_dim,
            value,
            jacobian,
            bounds,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn drive_dim(&self) -> usize {
        self.drive_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn value(&self, x: &[f64], out: &mut [f64]) {
        (self.value)(x, out)
    }

    pub fn jacobian_at(&self, x: &[f64], out: &mut [f64]) {
        (self.jacobian)(x, out)
    }

    /// A constant coefficient (zero derivative).
    pub fn constant(matrix: Vec<f64>, drive_dim: usize, in_dim: usize) -> Self {
        assert_eq!(matrix.len() % drive_dim, 0);
        let out_dim = matrix.len() / drive_dim;
        let sup = crate::linalg::norm2(&matrix);
        VectorField::new(
            in_dim,
            drive_dim,
            out_dim,
            Box::new(move |_, out| out.copy_from_slice(&matrix)),
            Box::new(|_, out| out.fill(0.0)),
            Bounds {
                sup_value: sup,
                sup_d1: 0.0,
                sup_d2: 0.0,
            },
        )
    }

    /// Scalar identity integrand f(x) = x (so `int f(X) dX = int X dX`).
    pub fn scalar_identity(domain_bound: f64) -> Self {
        VectorField::new(
            1,
            1,
            1,
            Box::new(|x, out| out[0] = x[0]),
            Box::new(|_, out| out[0] = 1.0),
            Bounds {
                sup_value: domain_bound,
                sup_d1: 1.0,
                sup_d2: 0.0,
            },
        )
    }

    /// Scalar integrand f(x) = sin(x).
    pub fn scalar_sin() -> Self {
        VectorField::new(
            1,
            1,
            1,
            Box::new(|x, out| out[0] = x[0].sin()),
            Box::new(|x, out| out[0] = x[0].cos()),
            Bounds {
                sup_value: 1.0,
                sup_d1: 1.0,
                sup_d2: 1.0,
            },
        )
    }

    /// Scalar linear RDE coefficient f(y) = y viewed as L(R, R).
    pub fn scalar_linear(domain_bound: f64) -> Self {
        VectorField::scalar_identity(domain_bound)
    }

    /// Spot-check the analytic Jacobian against central finite differences
    /// at `samples` standard-normal points.
    pub fn validate_jacobian(&self, seed: u64, samples: usize, tol: f64) -> Result<()> {
        let mut rng = crate::rng::stream_rng(seed, 0xF1E1D);
        let eps = 1e-5;
        let rows = self.out_dim * self.drive_dim;
        let mut jac = vec![0.0; rows * self.in_dim];
        let mut vp = vec![0.0; rows];
        let mut vm = vec![0.0; rows];
        for s in 0..samples {
            let x: Vec<f64> = (0..self.in_dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            self.jacobian_at(&x, &mut jac);
            for i in 0..self.in_dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += eps;
                xm[i] -= eps;
                self.value(&xp, &mut vp);
                self.value(&xm, &mut vm);
                for r in 0..rows {
                    let fd = (vp[r] - vm[r]) / (2.0 * eps);
                    let an = jac[r * self.in_dim + i];
                    let scale = 1.0_f64.max(an.abs()).max(fd.abs());
                    if (fd - an).abs() > tol * scale {
                        return Err(Error::invalid(format!(
                            "jacobian disagrees with finite differences at sample {s}, \
                             row {r}, input {i}: analytic {an} vs fd {fd}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Compensated Riemann sum of `int f(X) dX` on the partition with cells of
/// `stride` grid steps:
///
/// ```text
/// I = sum over cells [s,t] of f(X_s) X_{s,t} + Df(X_s) XX_{s,t}
/// ```
///
/// Stride 1 is the finest grid value, taken as the integral.
pub fn rough_integral(
    f: &VectorField,
    path: &GridRoughPath,
    stride: usize,
) -> Result<Vec<f64>> {
    let e = path.dim();
    if f.in_dim() != e || f.drive_dim() != e {
        return Err(Error::DimensionMismatch(format!(
            "integrand expects in = drive = {e}, got in = {}, drive = {}",
            f.in_dim(),
            f.drive_dim()
        )));
    }
    let m = path.steps();
    if stride == 0 || m % stride != 0 {
        return Err(Error::invalid(format!(
            "stride {stride} must divide the step count {m}"
        )));
    }
    let table = path.pair_table();
    let out_dim = f.out_dim();
    let mut out = vec![0.0; out_dim];
    let mut value = vec![0.0; out_dim * e];
    let mut jac = vec![0.0; out_dim * e * e];
    let mut cell = 0usize;
    while cell < m {
        let s = cell;
        let t = cell + stride;
        let xs = path.point(s);
        f.value(xs, &mut value);
        f.jacobian_at(xs, &mut jac);
        for o in 0..out_dim {
            let mut acc = 0.0;
            for c in 0..e {
                acc += value[o * e + c] * table.increment_entry(s, t, c);
            }
            // compensator: sum_{i,j} d_i f^o_j XX^{ij}
            for j in 0..e {
                for i in 0..e {
                    acc += jac[(o * e + j) * e + i] * table.area_entry(s, t, i, j);
                }
            }
            out[o] += acc;
        }
        cell = t;
    }
    Ok(out)
}

/// Report of the stride-refinement study of a rough integral.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RefinementReport {
    /// (stride, integral value) from coarsest to finest.
    pub values: Vec<(usize, Vec<f64>)>,
    /// Norms of successive differences.
    pub diffs: Vec<f64>,
    /// Fitted per-halving decay exponent of the differences (positive means
    /// Cauchy-like geometric decay).
    pub decay_exponent: f64,
    pub bound_lhs: f64,
    pub bound_rhs: f64,
    pub bound_ok: bool,
}

/// Evaluates the compensated sum over strides m, m/2, ..., 1, checks Cauchy
/// behaviour, and checks the growth bound with `C_f` taken from the
/// integrand's declared bounds times [`GROWTH_BOUND_CONSTANT`].
pub fn rough_integral_refinement_check(
    f: &VectorField,
    path: &GridRoughPath,
    alpha: HoelderExponent,
) -> Result<RefinementReport> {
    let m = path.steps();
    if !m.is_power_of_two() {
        return Err(Error::invalid(format!(
            "refinement check needs a power-of-two step count, got {m}"
        )));
    }
    let mut values = Vec::new();
    let mut stride = m;
    loop {
        values.push((stride, rough_integral(f, path, stride)?));
        if stride == 1 {
            break;
        }
        stride /= 2;
    }
    let diffs: Vec<f64> = values
        .windows(2)
        .map(|w| crate::linalg::max_abs_diff(&w[0].1, &w[1].1))
        .collect();
    let decay_exponent = fit_decay_exponent(&diffs);
    let norm = path.hoelder_norm(alpha);
    let lhs = crate::linalg::norm2(&values.last().unwrap().1);
    let rhs = GROWTH_BOUND_CONSTANT
        * f.bounds.coefficient()
        * norm.max(norm.powf(1.0 / alpha.value()));
    Ok(RefinementReport {
        values,
        diffs,
        decay_exponent,
        bound_lhs: lhs,
        bound_rhs: rhs,
        bound_ok: lhs <= rhs,
    })
}

/// Least-squares slope of -log2(diff) against the refinement level;
/// zero diffs are treated as converged and skipped.
fn fit_decay_exponent(diffs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = diffs
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 0.0)
        .map(|(i, d)| (i as f64, -d.log2()))
        .collect();
    if pts.len() < 2 {
        // all differences vanished: perfectly converged
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Second-order (Davie) step scheme for `dY = f0(Y) dt + f(Y) dX`:
///
/// ```text
/// Y_{j+1} = Y_j + f0(Y_j) h + f(Y_j) X_{j,j+1} + (Df f)(Y_j) XX_{j,j+1}
/// ```
///
/// Returns the level-1 solution path on the drive grid.
pub fn rde_solve(
    f0: Option<&VectorField>,
    f: &VectorField,
    drive: &GridRoughPath,
    y0: &[f64],
) -> Result<GridPath> {
    let e = drive.dim();
    let n = y0.len();
    if f.in_dim() != n || f.out_dim() != n || f.drive_dim() != e {
        return Err(Error::DimensionMismatch(format!(
            "diffusion must map R^{n} -> L(R^{e}, R^{n}); \
             got in {}, drive {}, out {}",
            f.in_dim(),
            f.drive_dim(),
            f.out_dim()
        )));
    }
    if let Some(f0) = f0 {
        if f0.in_dim() != n || f0.out_dim() != n || f0.drive_dim() != 1 {
            return Err(Error::DimensionMismatch(
                "drift must map R^n -> R^n (drive dimension 1)".into(),
            ));
        }
    }
    let m = drive.steps();
    let h = drive.spacing();
    let mut y = y0.to_vec();
    let mut values = Vec::with_capacity((m + 1) * n);
    values.extend_from_slice(&y);
    let mut fy = vec![0.0; n * e];
    let mut jac = vec![0.0; n * e * n];
    let mut drift = vec![0.0; n];
    for j in 0..m {
        let dx = drive.step_increment(j);
        let area = drive.step_area(j);
        f.value(&y, &mut fy);
        f.jacobian_at(&y, &mut jac);
        if let Some(f0) = f0 {
            f0.value(&y, &mut drift);
        }
        let mut next = y.clone();
        for o in 0..n {
            let mut acc = if f0.is_some() { drift[o] * h } else { 0.0 };
            for c in 0..e {
                acc += fy[o * e + c] * dx[c];
            }
            // (Df f)^o_{ij} XX^{ij} = sum_{i,j,k} d_k f^o_j f^k_i XX^{ij}
            for jj in 0..e {
                for i in 0..e {
                    let mut dff = 0.0;
                    for k in 0..n {
                        dff += jac[(o * e + jj) * n + k] * fy[k * e + i];
                    }
                    acc += dff * area[i * e + jj];
                }
            }
            next[o] += acc;
            if !next[o].is_finite() {
                return Err(Error::Divergence { step: j });
            }
        }
        y = next;
        values.extend_from_slice(&y);
    }
    GridPath::new(n, drive.shared_times(), values)
}
