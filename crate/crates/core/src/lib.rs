//! Numerical kernels for level-2 geometric rough paths and weakly
//! interacting diffusions: grid lifts, rough integration and differential
//! equations, enhanced k-layer empirical measures, exact 1-Wasserstein
//! transport, and the Girsanov/entropy rate-function stack of mean-field
//! large deviations.

pub mod calculus;
pub mod error;
pub mod io;
pub mod lift;
pub mod linalg;
pub mod mckean;
pub mod measures;
pub mod particle;
pub mod path;
pub mod rates;
pub mod rng;
pub mod roughpath;
pub mod transport;

pub use calculus::{
    rde_solve, rough_integral, rough_integral_refinement_check, Bounds, RefinementReport,
    VectorField,
};
pub use error::{Error, Result};
pub use lift::{
    approximation_error_decay, coarsen, lift_brownian, lift_k_layer, lift_piecewise_linear,
    map_f_k, DecayRow, LiftConfig,
};
pub use mckean::{phi_map, sample_iid_mkv, solve_mkv_fixed_point, FlowMeasure, MkvSamples};
pub use measures::{
    empirical_from_ensemble, enhanced_k_layer, modified_moment, project_pi1, project_pi2,
    EmpiricalMeasure, KLayerMeasure, PathMeasure, RoughMeasure, TupleEnumeration,
};
pub use particle::{
    sanov_moment_g, simulate_brownian_ensemble, simulate_ips, InitialLaw, InteractionField,
    InteractionMode, ParticleEnsemble,
};
pub use path::{uniform_grid, GridPath};
pub use rates::{
    constant_tilt_log_density, functional_k_b_classical, functional_k_b_enhanced,
    girsanov_log_density_rho_n, rate_i_k, rate_j_b, rate_j_b_enhanced, relative_entropy_girsanov,
    GirsanovMeasure,
    IkVerdict, InitialRelation, JbReport, KbBreakdown,
};
pub use roughpath::{GridRoughPath, HoelderExponent, PairMode};
pub use transport::{
    solve_transport, w1_exact_1d, wasserstein1_paths, wasserstein1_points, wasserstein1_rough,
    GroundMetric, TransportPlan,
};
