use thiserror::Error;

/// Errors raised by the library. Every variant maps to a module-qualified
/// code (see [`Error::code`]) that the command line surfaces verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("material: {0}")]
    Material(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("loads: {0}")]
    Loads(String),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("dual: {0}")]
    Dual(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Grid(_) => "grid.invalid",
            Error::GridMismatch(_) => "grid.mismatch",
            Error::Material(_) => "plate.material",
            Error::NonFinite(_) => "plate.non_finite",
            Error::Loads(_) => "loads.invalid",
            Error::NotConverged { .. } => "linalg.not_converged",
            Error::Singular(_) => "linalg.singular",
            Error::Solver(_) => "solver.failed",
            Error::Dual(_) => "dual.refused",
            Error::Geometry(_) => "shell.geometry",
            Error::Config(_) => "cli.config",
            Error::Io(_) => "cli.io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
