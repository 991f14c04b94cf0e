//! Plain (level-1 only) paths on a shared uniform grid.

use std::sync::Arc;

use crate::error::{Error, Result};

/// A d-dimensional path sampled on a uniform grid, without level-2 data.
#[derive(Debug, Clone)]
pub struct GridPath {
    dim: usize,
    times: Arc<[f64]>,
    /// (m+1) * dim, row j = value at t_j.
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(dim: usize, times: Arc<[f64]>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if times.len() < 2 {
            return Err(Error::invalid("need at least two grid nodes"));
        }
        if values.len() != times.len() * dim {
            return Err(Error::invalid(format!(
                "values length {} does not match nodes*dim = {}",
                values.len(),
                times.len() * dim
            )));
        }
        Ok(GridPath { dim, times, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn initial(&self) -> &[f64] {
        self.point(0)
    }

    pub fn endpoint(&self) -> &[f64] {
        self.point(self.steps())
    }

    /// Grid beta-Hölder seminorm: sup over pairs of |x(t)-x(s)| / |t-s|^beta.
    pub fn hoelder_seminorm(&self, beta: f64) -> f64 {
        let m = self.steps();
        let h = self.times[1] - self.times[0];
        let inv_pow: Vec<f64> = (0..=m)
            .map(|lag| if lag == 0 { 0.0 } else { (lag as f64 * h).powf(-beta) })
            .collect();
        let mut sup = 0.0_f64;
        for i in 0..m {
            let xi = self.point(i);
            for j in (i + 1)..=m {
                let xj = self.point(j);
                let d = crate::linalg::dist2(xi, xj);
                sup = sup.max(d * inv_pow[j - i]);
            }
        }
        sup
    }

    /// Bitwise equality of grid and values (used for atom merging).
    pub fn bitwise_eq(&self, other: &GridPath) -> bool {
        self.dim == other.dim
            && self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(other.times.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Uniform grid 0 = t_0 < ... < t_m = horizon.
pub fn uniform_grid(horizon: f64, steps: usize) -> Arc<[f64]> {
    let times: Vec<f64> = (0..=steps)
        .map(|j| horizon * j as f64 / steps as f64)
        .collect();
    Arc::from(times.into_boxed_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_path_seminorm() {
        let times = uniform_grid(2.0, 16);
        let values: Vec<f64> = times.iter().map(|t| 3.0 * t).collect();
        let p = GridPath::new(1, times, values).unwrap();
        // sup |3(t-s)| / |t-s|^beta = 3 T^(1-beta).
        assert_abs_diff_eq!(
            p.hoelder_seminorm(0.45),
            3.0 * 2.0_f64.powf(0.55),
            epsilon = 1e-12
        );
    }
}
