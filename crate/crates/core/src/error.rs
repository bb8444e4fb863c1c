use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh is empty after masking")]
    EmptyMesh,

    #[error("invalid grid size {nx}x{ny}")]
    InvalidGrid { nx: usize, ny: usize },

    #[error("cell id {0} is out of range")]
    CellOutOfRange(usize),

    #[error("refinement closure exceeded depth bound {0}; refinement edges are inconsistent")]
    RefinementDepth(usize),

    #[error("meshes do not belong to the same refinement hierarchy")]
    HierarchyMismatch,

    #[error("operands live on different meshes")]
    MeshMismatch,

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("diffusion coefficient {value} on cell {cell} is not positive")]
    NonPositiveCoefficient { cell: usize, value: f64 },

    #[error("iterative solver hit the cap of {iterations} iterations (relative residual {residual:.3e})")]
    SolverStalled { iterations: usize, residual: f64 },

    #[error("volume multiplier bisection did not converge in {0} iterations")]
    BisectionFailed(usize),

    #[error("volume target {target} is outside the attainable range [{lo}, {hi}]")]
    InfeasibleVolume { target: f64, lo: f64, hi: f64 },

    #[error("predicted reduction {0:.3e} is not positive; the trial step failed the Cauchy decrease test")]
    NonPositivePred(f64),

    #[error("Cauchy point search failed after {0} backtracks")]
    CauchyFailed(usize),

    #[error("initial guess is not in the domain of the nonsmooth term")]
    InfeasibleStart,

    #[error("unknown topology example {0}")]
    UnknownExample(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
