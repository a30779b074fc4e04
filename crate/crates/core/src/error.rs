use thiserror::Error;

/// Errors raised by the solvers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("dispersion is gapless at k = {k} (effective field {omega_x_tilde})")]
    GaplessDispersion { k: f64, omega_x_tilde: f64 },

    #[error("mean-field minimization did not converge: {0}")]
    NonConverged(String),

    #[error("phase-diagram cell (lambda_sq_over_omega = {lambda_sq_over_omega}, omega_x = {omega_x}) failed: {source}")]
    Cell {
        lambda_sq_over_omega: f64,
        omega_x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no phase boundary found on the probed ray")]
    NoCrossing,

    #[error("ray crosses {count} phase boundaries, expected exactly one")]
    MultipleCrossings { count: usize },

    #[error("omega = {omega} lies inside the two-excitation band [{lower}, {upper}]")]
    OmegaInsideBand { omega: f64, lower: f64, upper: f64 },

    #[error("two-oscillator lower branch is unstable (2 Omega_-^2 = {two_omega_minus_sq}); upper branch {omega_plus}")]
    NegativeDiscriminantForLowerBranch { omega_plus: f64, two_omega_minus_sq: f64 },

    #[error("spectral-map column lambda = {lambda} failed: {source}")]
    Column {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid exact-diagonalization config: {0}")]
    InvalidEdConfig(String),

    #[error("Hilbert dimension {dim} exceeds the budget of {budget} states")]
    DimensionBudgetExceeded { dim: usize, budget: usize },

    #[error("eigensolver did not converge: residual {residual:e} after {iterations} iterations")]
    EigenNonConverged { residual: f64, iterations: usize },

    #[error("finite-size scan at N = {n_spins}, lambda = {lambda} failed: {source}")]
    ScanCell {
        n_spins: usize,
        lambda: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
