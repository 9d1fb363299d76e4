//! Default tolerances shared across the crate.

/// Absolute slack for the in-weight / out-weight balance check.
pub const BALANCE: f64 = 1e-12;

/// Default slack for row-stochasticity checks.
pub const STOCHASTIC: f64 = 1e-12;

/// Power iteration stopping residual for the dominant left eigenvector.
pub const EIGEN: f64 = 1e-12;

/// Iteration cap for the eigen solvers.
pub const EIGEN_MAX_ITER: usize = 100_000;

/// Residual allowed on the consensus-weight fixed-point equation.
pub const FIXED_POINT: f64 = 1e-10;

/// Default spread below which a run counts as converged.
pub const CONSENSUS_SPREAD: f64 = 1e-9;

/// Default step cap for a single run.
pub const MAX_STEPS: usize = 10_000;
