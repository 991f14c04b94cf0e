//! Level-2 geometric rough paths sampled on a uniform time grid.
//!
//! A [`GridRoughPath`] stores the level-1 points `X_{t_j}` and the
//! consecutive level-2 increments `XX_{t_j, t_{j+1}}`; every other pair
//! `(s, t)` of grid nodes is reconstructed through Chen's relation
//!
//! ```text
//! XX_{s,t} = XX_{s,u} + XX_{u,t} + X_{s,u} (x) X_{u,t}
//! ```
//!
//! which keeps storage O(m) while making arbitrary-pair queries exact.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, norm2, outer_add};

/// Tolerance used to validate Chen/symmetry identities at construction.
pub const GEOMETRICITY_TOL: f64 = 1e-12;

/// Grid size above which the pairwise sups switch to the dyadic family.
pub const DYADIC_THRESHOLD: usize = 4096;

/// Hölder exponent restricted to the open interval (1/3, 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoelderExponent(f64);

impl HoelderExponent {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 1.0 / 3.0 && alpha < 0.5 {
            Ok(HoelderExponent(alpha))
        } else {
            Err(Error::invalid(format!(
                "alpha must lie strictly in (1/3, 1/2), got {alpha}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The variation exponent p = 1/alpha (always in (2, 3)).
    pub fn p(self) -> f64 {
        1.0 / self.0
    }
}

impl Default for HoelderExponent {
    fn default() -> Self {
        HoelderExponent(0.4)
    }
}

/// Pair-enumeration mode for the O(m^2) grid sups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// All grid pairs; exact value of the grid sup.
    Exact,
    /// Pairs `(i, i + 2^k)` only; O(m log m) lower bound of the sup,
    /// intended for large grids.
    Dyadic,
}

/// A level-2 geometric rough path on a uniform grid.
#[derive(Debug, Clone)]
pub struct GridRoughPath {
    dim: usize,
    times: Arc<[f64]>,
    /// (m+1) * dim, row j = X_{t_j}.
    level1: Vec<f64>,
    /// m * dim^2, row j = XX_{t_j, t_{j+1}} (row-major e x e).
    level2_steps: Vec<f64>,
}

impl GridRoughPath {
    /// Validates grid shape, uniform spacing and per-step geometricity.
    pub fn new(
        dim: usize,
        times: Vec<f64>,
        level1: Vec<f64>,
        level2_steps: Vec<f64>,
    ) -> Result<Self> {
        Self::with_shared_times(dim, Arc::from(times.into_boxed_slice()), level1, level2_steps)
    }

    pub fn with_shared_times(
        dim: usize,
        times: Arc<[f64]>,
        level1: Vec<f64>,
        level2_steps: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if times.len() < 2 {
            return Err(Error::invalid("need at least one grid step (m >= 1)"));
        }
        let m = times.len() - 1;
        if level1.len() != (m + 1) * dim {
            return Err(Error::invalid(format!(
                "level1 length {} does not match (m+1)*dim = {}",
                level1.len(),
                (m + 1) * dim
            )));
        }
        if level2_steps.len() != m * dim * dim {
            return Err(Error::invalid(format!(
                "level2 length {} does not match m*dim^2 = {}",
                level2_steps.len(),
                m * dim * dim
            )));
        }
        let h = times[1] - times[0];
        if !(h > 0.0) {
            return Err(Error::invalid("times must be strictly increasing"));
        }
        for j in 1..=m {
            let step = times[j] - times[j - 1];
            if !(step > 0.0) {
                return Err(Error::invalid("times must be strictly increasing"));
            }
            if (step - h).abs() > 1e-9 * h.max(1e-300) {
                return Err(Error::invalid(format!(
                    "grid must be uniform: step {j} is {step}, expected {h}"
                )));
            }
        }
        let path = GridRoughPath {
            dim,
            times,
            level1,
            level2_steps,
        };
        path.check_geometricity()?;
        Ok(path)
    }

    fn check_geometricity(&self) -> Result<()> {
        let e = self.dim;
        for j in 0..self.steps() {
            let dx = self.step_increment(j);
            let a = self.step_area(j);
            let scale = 1.0 + norm2(&dx).powi(2) + max_abs(a);
            for r in 0..e {
                for c in 0..e {
                    let sym = 0.5 * (a[r * e + c] + a[c * e + r]);
                    let target = 0.5 * dx[r] * dx[c];
                    if (sym - target).abs() > GEOMETRICITY_TOL * scale {
                        return Err(Error::invalid(format!(
                            "step {j} violates geometricity at ({r},{c}): \
                             sym = {sym:.3e}, 0.5 dx dx = {target:.3e}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid steps m.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn shared_times(&self) -> Arc<[f64]> {
        Arc::clone(&self.times)
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn spacing(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Level-1 point X_{t_j}.
    pub fn point(&self, j: usize) -> &[f64] {
        &self.level1[j * self.dim..(j + 1) * self.dim]
    }

    pub fn level1(&self) -> &[f64] {
        &self.level1
    }

    pub fn level2_steps(&self) -> &[f64] {
        &self.level2_steps
    }

    /// Increment X_{t_j, t_{j+1}}.
    pub fn step_increment(&self, j: usize) -> Vec<f64> {
        let e = self.dim;
        let a = &self.level1[j * e..(j + 1) * e];
        let b = &self.level1[(j + 1) * e..(j + 2) * e];
        b.iter().zip(a).map(|(x, y)| x - y).collect()
    }

    /// Consecutive level-2 increment XX_{t_j, t_{j+1}}.
    pub fn step_area(&self, j: usize) -> &[f64] {
        let ee = self.dim * self.dim;
        &self.level2_steps[j * ee..(j + 1) * ee]
    }

    /// Chen reconstruction of `(X_{t_a,t_b}, XX_{t_a,t_b})` by left-to-right
    /// composition of the stored steps.
    pub fn chen_increment(&self, a: usize, b: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if a >= b || b > self.steps() {
            return Err(Error::invalid(format!(
                "need 0 <= a < b <= m, got a = {a}, b = {b}, m = {}",
                self.steps()
            )));
        }
        let e = self.dim;
        let mut x = vec![0.0; e];
        let mut area = vec![0.0; e * e];
        for j in a..b {
            let dx = self.step_increment(j);
            let step = self.step_area(j);
            // XX_{a,j+1} = XX_{a,j} + XX_{j,j+1} + X_{a,j} (x) X_{j,j+1}
            outer_add(&x, &dx, 1.0, &mut area);
            for (acc, s) in area.iter_mut().zip(step) {
                *acc += s;
            }
            for (acc, d) in x.iter_mut().zip(&dx) {
                *acc += d;
            }
        }
        Ok((x, area))
    }

    /// Prefix table for O(1) arbitrary-pair queries (same algebra as
    /// [`chen_increment`], rearranged around increments from node 0).
    pub fn pair_table(&self) -> PairTable<'_> {
        let e = self.dim;
        let m = self.steps();
        let mut prefix_x = vec![0.0; (m + 1) * e];
        let mut prefix_a = vec![0.0; (m + 1) * e * e];
        for j in 0..m {
            let dx = self.step_increment(j);
            let step = self.step_area(j);
            let (head_x, tail_x) = prefix_x.split_at_mut((j + 1) * e);
            let px = &head_x[j * e..];
            let (head_a, tail_a) = prefix_a.split_at_mut((j + 1) * e * e);
            let pa = &head_a[j * e * e..];
            let na = &mut tail_a[..e * e];
            na.copy_from_slice(pa);
            outer_add(px, &dx, 1.0, na);
            for (acc, s) in na.iter_mut().zip(step) {
                *acc += s;
            }
            for (i, (nx, d)) in tail_x[..e].iter_mut().zip(&dx).enumerate() {
                *nx = px[i] + d;
            }
        }
        PairTable {
            path: self,
            prefix_x,
            prefix_a,
        }
    }

    /// Dilation: level-1 scaled by lambda, level-2 by lambda^2.
    pub fn dilate(&self, lambda: f64) -> GridRoughPath {
        GridRoughPath {
            dim: self.dim,
            times: Arc::clone(&self.times),
            level1: self.level1.iter().map(|x| lambda * x).collect(),
            level2_steps: self.level2_steps.iter().map(|x| lambda * lambda * x).collect(),
        }
    }

    /// Grid Hölder "norm": sup |X_{s,t}|/|t-s|^a + sup |XX_{s,t}|^(1/2)/|t-s|^a,
    /// both sups over grid pairs. Exact O(m^2) scan up to
    /// [`DYADIC_THRESHOLD`] steps, dyadic pairs beyond.
    pub fn hoelder_norm(&self, alpha: HoelderExponent) -> f64 {
        let mode = if self.steps() <= DYADIC_THRESHOLD {
            PairMode::Exact
        } else {
            PairMode::Dyadic
        };
        self.hoelder_norm_mode(alpha, mode)
    }

    pub fn hoelder_norm_mode(&self, alpha: HoelderExponent, mode: PairMode) -> f64 {
        let table = self.pair_table();
        let a = alpha.value();
        let h = self.spacing();
        let m = self.steps();
        // (lag * h)^(-a) and (lag * h)^(-2a), shared across pairs of equal lag.
        let inv_pow: Vec<f64> = (0..=m)
            .map(|lag| if lag == 0 { 0.0 } else { (lag as f64 * h).powf(-a) })
            .collect();
        let mut sup1 = 0.0_f64;
        let mut sup2_sq = 0.0_f64; // sup of |XX| / |t-s|^(2a)
        let mut visit = |i: usize, j: usize| {
            let lag = j - i;
            let inv = inv_pow[lag];
            let x = table.increment_norm(i, j);
            sup1 = sup1.max(x * inv);
            let afrob = table.area_frobenius(i, j);
            sup2_sq = sup2_sq.max(afrob * inv * inv);
        };
        for_pairs(m, mode, &mut visit);
        sup1 + sup2_sq.sqrt()
    }

    /// Inhomogeneous surrogate of the homogeneous rough-path distance:
    /// `|X_0 - Y_0| + sup |dX - dY|/|t-s|^a + sup |dXX - dYY|/|t-s|^(2a)`.
    pub fn homogeneous_distance(
        &self,
        other: &GridRoughPath,
        alpha: HoelderExponent,
    ) -> Result<f64> {
        self.homogeneous_distance_mode(other, alpha, detect_mode(self.steps()))
    }

    pub fn homogeneous_distance_mode(
        &self,
        other: &GridRoughPath,
        alpha: HoelderExponent,
        mode: PairMode,
    ) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "paths have dims {} and {}",
                self.dim, other.dim
            )));
        }
        if !same_grid(self.times(), other.times()) {
            return Err(Error::GridMismatch(
                "homogeneous_distance requires identical grids".into(),
            ));
        }
        let ta = self.pair_table();
        let tb = other.pair_table();
        let a = alpha.value();
        let h = self.spacing();
        let m = self.steps();
        let e = self.dim;
        let inv_pow: Vec<f64> = (0..=m)
            .map(|lag| if lag == 0 { 0.0 } else { (lag as f64 * h).powf(-a) })
            .collect();
        // track squared suprema; sup of sqrt equals sqrt of sup
        let mut sup1_sq = 0.0_f64;
        let mut sup2_sq = 0.0_f64;
        let mut visit = |i: usize, j: usize| {
            let inv = inv_pow[j - i];
            let inv2 = inv * inv;
            let mut dx_sq = 0.0;
            for c in 0..e {
                let d = ta.increment_entry(i, j, c) - tb.increment_entry(i, j, c);
                dx_sq += d * d;
            }
            sup1_sq = sup1_sq.max(dx_sq * inv2);
            let mut da_sq = 0.0;
            for r in 0..e {
                for c in 0..e {
                    let d = ta.area_entry(i, j, r, c) - tb.area_entry(i, j, r, c);
                    da_sq += d * d;
                }
            }
            sup2_sq = sup2_sq.max(da_sq * inv2 * inv2);
        };
        for_pairs(m, mode, &mut visit);
        let x0 = crate::linalg::dist2(self.point(0), other.point(0));
        Ok(x0 + sup1_sq.sqrt() + sup2_sq.sqrt())
    }

    /// Exact (1/alpha)-variation of the rough path over grid nodes
    /// `[t_a, t_b]`, by dynamic programming over subpartitions with the
    /// homogeneous step size `w(s,t) = |X_{s,t}| + |XX_{s,t}|^(1/2)`.
    /// Returns `(max_partition sum w^(1/alpha))^alpha`.
    pub fn p_variation(
        &self,
        a: usize,
        b: usize,
        alpha: HoelderExponent,
    ) -> Result<f64> {
        if a >= b || b > self.steps() {
            return Err(Error::invalid(format!(
                "need 0 <= a < b <= m, got a = {a}, b = {b}"
            )));
        }
        let table = self.pair_table();
        Ok(variation_dp(&table, a, b, alpha.p()).powf(alpha.value()))
    }

    /// Count of unit-size (1/alpha)-variation windows before the horizon:
    /// greedy stopping times `tau_0 = 0`,
    /// `tau_{i+1} = first grid node t with pvar over [tau_i, t] >= 1`,
    /// returning `#{ i >= 1 : tau_i < T }`.
    pub fn n_alpha(&self, alpha: HoelderExponent) -> usize {
        let table = self.pair_table();
        let p = alpha.p();
        let m = self.steps();
        let mut start = 0usize;
        let mut count = 0usize;
        while start < m {
            match first_unit_crossing(&table, start, m, p) {
                Some(j) => {
                    if j < m {
                        // tau lands strictly before T.
                        count += 1;
                        start = j;
                    } else {
                        // crossing exactly at the horizon node: not counted.
                        break;
                    }
                }
                None => break,
            }
        }
        count
    }
}

fn detect_mode(m: usize) -> PairMode {
    if m <= DYADIC_THRESHOLD {
        PairMode::Exact
    } else {
        PairMode::Dyadic
    }
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y)
}

fn for_pairs(m: usize, mode: PairMode, visit: &mut impl FnMut(usize, usize)) {
    match mode {
        PairMode::Exact => {
            for i in 0..m {
                for j in (i + 1)..=m {
                    visit(i, j);
                }
            }
        }
        PairMode::Dyadic => {
            for i in 0..m {
                let mut lag = 1usize;
                while i + lag <= m {
                    visit(i, i + lag);
                    lag <<= 1;
                }
            }
        }
    }
}

/// DP value `max over partitions of [a,b] of sum w^p` (not yet alpha-powered).
fn variation_dp(table: &PairTable<'_>, a: usize, b: usize, p: f64) -> f64 {
    let w = b - a;
    let mut cum = vec![0.0_f64; w + 1];
    for j in 1..=w {
        let mut best = f64::NEG_INFINITY;
        for i in 0..j {
            let omega = table.homogeneous_step(a + i, a + j);
            let cand = cum[i] + omega.powf(p);
            if cand > best {
                best = cand;
            }
        }
        cum[j] = best;
    }
    cum[w]
}

/// Smallest `j > start` with DP value over `[start, j]` at least 1.
/// The DP value is monotone in `j`, so the scan extends one node at a time.
fn first_unit_crossing(
    table: &PairTable<'_>,
    start: usize,
    m: usize,
    p: f64,
) -> Option<usize> {
    let mut cum: Vec<f64> = vec![0.0];
    for j in (start + 1)..=m {
        let rel = j - start;
        let mut best = f64::NEG_INFINITY;
        for i in 0..rel {
            let omega = table.homogeneous_step(start + i, j);
            let cand = cum[i] + omega.powf(p);
            if cand > best {
                best = cand;
            }
        }
        cum.push(best);
        if best >= 1.0 {
            return Some(j);
        }
    }
    None
}

/// Prefix-based O(1) pair queries. For grid nodes `i < j`:
/// `X_{i,j} = P_j - P_i` and `XX_{i,j} = A_j - A_i - P_i (x) X_{i,j}`,
/// where `P_j = X_{t_0, t_j}` and `A_j = XX_{t_0, t_j}`.
pub struct PairTable<'a> {
    path: &'a GridRoughPath,
    prefix_x: Vec<f64>,
    prefix_a: Vec<f64>,
}

impl PairTable<'_> {
    #[inline]
    pub fn dim(&self) -> usize {
        self.path.dim
    }

    #[inline]
    pub fn increment_entry(&self, i: usize, j: usize, c: usize) -> f64 {
        let e = self.path.dim;
        self.prefix_x[j * e + c] - self.prefix_x[i * e + c]
    }

    #[inline]
    pub fn area_entry(&self, i: usize, j: usize, r: usize, c: usize) -> f64 {
        let e = self.path.dim;
        let ee = e * e;
        self.prefix_a[j * ee + r * e + c] - self.prefix_a[i * ee + r * e + c]
            - self.prefix_x[i * e + r] * self.increment_entry(i, j, c)
    }

    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.path.dim)
            .map(|c| self.increment_entry(i, j, c))
            .collect()
    }

    pub fn area(&self, i: usize, j: usize) -> Vec<f64> {
        let e = self.path.dim;
        let mut out = vec![0.0; e * e];
        for r in 0..e {
            for c in 0..e {
                out[r * e + c] = self.area_entry(i, j, r, c);
            }
        }
        out
    }

    #[inline]
    fn increment_norm(&self, i: usize, j: usize) -> f64 {
        let e = self.path.dim;
        let mut s = 0.0;
        for c in 0..e {
            let d = self.increment_entry(i, j, c);
            s += d * d;
        }
        s.sqrt()
    }

    #[inline]
    fn area_frobenius(&self, i: usize, j: usize) -> f64 {
        let e = self.path.dim;
        let mut s = 0.0;
        for r in 0..e {
            for c in 0..e {
                let d = self.area_entry(i, j, r, c);
                s += d * d;
            }
        }
        s.sqrt()
    }

    /// Homogeneous step size `|X_{i,j}| + |XX_{i,j}|^(1/2)`.
    #[inline]
    pub fn homogeneous_step(&self, i: usize, j: usize) -> f64 {
        self.increment_norm(i, j) + self.area_frobenius(i, j).sqrt()
    }
}
