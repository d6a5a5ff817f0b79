//! Finite-difference solver for `du/dt = div(a grad u) + b.grad u + f` with
//! possibly degenerate `a`, and empirical checks of its hypotheses and bounds.

mod analysis;
mod coefficients;
mod hypotheses;
mod linalg;
mod solver;

pub use analysis::{
    default_test_bank, max_principle_report, steklov_mean, weak_residual, MaxPrincipleReport,
    TestFunction,
};
pub use coefficients::{CoefficientField, Diffusion, Drift, Forcing, Matrix, SINGULAR_FLOOR_SQ};
pub use hypotheses::{
    check_hypotheses, directional_mu, ellipticity_profiles, unit_directions, EllipticityProfile,
    HypothesisReport,
};
pub use linalg::symmetric_eigen;
pub use solver::{solve, solve_with_stats, SolveStats, SolverConfig, CFL_LIMIT};
