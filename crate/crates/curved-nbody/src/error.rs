use thiserror::Error;

/// Errors produced by the evaluation, solving, and embedding routines.
#[derive(Error, Debug, Clone)]
pub enum Error {
    /// Two bodies are closer than the collision threshold.
    #[error("collision between bodies {i} and {j}: separation {separation:e}")]
    Collision { i: usize, j: usize, separation: f64 },

    /// The pair denominator B dropped below tolerance (antipodal points, κ > 0).
    #[error("antipodal singularity between bodies {i} and {j}: B = {b:e}")]
    Antipodal { i: usize, j: usize, b: f64 },

    /// A point sits at or beyond the Poincaré disk boundary (κ < 0).
    #[error("body {body} at |u|^2 = {norm_sq} violates the domain for kappa = {kappa}")]
    DomainBoundary { body: usize, norm_sq: f64, kappa: f64 },

    /// Newton iteration did not reach the requested residual.
    #[error("Newton did not converge after {iters} iterations; best residual {residual:e}")]
    NonConvergence {
        iters: usize,
        residual: f64,
        /// Flattened last iterate (u followed by alpha).
        last: Vec<f64>,
        history: Vec<f64>,
    },

    /// The bordered linear system could not be solved.
    #[error("singular Jacobian encountered (fold or bifurcation suspect)")]
    SingularJacobian,

    /// Continuation refused to start from a degenerate seed.
    #[error("seed is degenerate: Hessian kernel dimension {kernel_dimension}")]
    DegenerateSeed { kernel_dimension: usize },

    /// A routine that requires a critical point was handed something else.
    #[error("configuration is not a critical point: gradient max-norm {residual:e}")]
    NotCritical { residual: f64 },

    /// The symmetric eigensolver failed to converge.
    #[error("symmetric eigendecomposition failed")]
    EigenFailure,

    /// Embedding requested at κ = 0, where no curved surface exists.
    #[error("kappa = 0 has no sphere or hyperboloid embedding")]
    FlatEmbedding,

    /// A configuration was rescaled twice.
    #[error("configuration is already rescaled to the unit surface")]
    AlreadyRescaled,

    /// The ODE integrator could not advance (step underflow).
    #[error("integration step underflow at t = {t}")]
    StepUnderflow { t: f64 },

    /// Invalid input (sizes, signs, ranges).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
