//! Euler-Maruyama simulation of `dX = sqrt(2) sigma(t, X) dW + b(t, X) dt` for the
//! mollified singular and degenerate families, with path functionals for
//! occupation-time and tightness estimates.
//!
//! Every path draws its Gaussians from its own ChaCha8 stream keyed by the master
//! seed and the path index, so serial and parallel runs agree bit for bit. Per-path
//! values are reduced in path order.

mod coefficients;
mod reports;
mod simulate;
mod statistics;

pub use coefficients::{build_coefficients, FamilySpec, FamilyTag, Noise, SdeCoefficients};
pub use reports::{
    approximation_cauchy_report, uniqueness_perturbation_report, CauchyReport, CauchyRow, Pairing,
    PerturbationReport, PerturbationRow,
};
pub use simulate::{
    euler_maruyama, path_rng, simulate_path, PathEnsemble, PathRecord, PathRunner, PathStatus,
    SerialRunner, SimulationConfig, MAX_DT, MAX_PATHS, MAX_STORED_ENTRIES,
};
pub use statistics::{
    krylov_functional, modulus_report, sup_moment, terminal_second_moment, wasserstein1, Estimate,
    Integrand, KrylovIntegral, KrylovReport, ModulusReport, ModulusSup, PathSource, PathStatistic,
    PathView, StatTable, Streamed, SupNorm, TerminalDisplacementSq, TerminalState, MIN_DELTA_SPAN,
};
