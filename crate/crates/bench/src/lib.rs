//! Shared fixtures for the criterion benches.

use roughchaos_core::lift::{lift_brownian, LiftConfig};
use roughchaos_core::GridRoughPath;

/// A Brownian lift at the given resolution, seeded for stability.
pub fn brownian_fixture(dim: usize, steps: usize, seed: u64) -> GridRoughPath {
    let cfg = LiftConfig::new(steps, 4, seed).unwrap();
    lift_brownian(dim, 1.0, &cfg).unwrap()
}
