//! Error type shared by every solver module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    /// The truncated domain `[-K, K]` is not an integer number of cells wide.
    #[error("non-commensurate grid: 2*{half_width} is not an integer multiple of dx={dx}")]
    NonCommensurate { half_width: f64, dx: f64 },

    /// Fewer than three cells.
    #[error("degenerate grid: {cells} cells (need at least 3)")]
    DegenerateGrid { cells: usize },

    /// A user-supplied function returned NaN or infinity.
    #[error("non-finite input: {context} evaluated to a non-finite value at x={x}")]
    NonFiniteInput { context: &'static str, x: f64 },

    /// A field was constructed with non-finite entries.
    #[error("non-finite field value at cell {cell}")]
    NonFiniteField { cell: usize },

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    DomainError(String),

    /// A field or stencil is bound to a different grid than expected.
    #[error("grid mismatch: operands are bound to different grids")]
    GridMismatch,

    /// Requested step size exceeds the stability bound.
    #[error("CFL violation: dt={dt} exceeds the stable bound {max_dt}")]
    CflViolation { dt: f64, max_dt: f64 },

    /// Adaptive quadrature hit its depth cap before reaching the tolerance.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// Jump intensity is positive but no mark sampler was supplied.
    #[error("mark sampler unavailable while jump intensity is positive")]
    SamplerUnavailable,

    /// Fine grid does not refine the coarse grid by an integer factor.
    #[error("incompatible refinement: fine dx={fine_dx} does not divide coarse dx={coarse_dx}")]
    IncompatibleRefinement { fine_dx: f64, coarse_dx: f64 },

    /// Convergence-order fit is undefined for the given data.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;
