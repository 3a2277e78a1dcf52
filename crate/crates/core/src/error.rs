use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A density cell fell below the floor required by a geometric query.
    #[error("degenerate density: {count} cell(s) below floor {floor:e} (first: {first})")]
    DegenerateDensity { count: usize, first: usize, floor: f64 },

    /// The spatial density vanishes where the local operator needs `rho^(-2/d)`.
    #[error("vacuum singularity: rho below {floor:e} in cells {cells:?}")]
    VacuumSingularity { cells: Vec<usize>, floor: f64 },

    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("time step {dt:e} violates the stability bound; need dt <= {required:e}")]
    Cfl { dt: f64, required: f64 },

    #[error("quadrature did not converge: achieved {achieved:e}, target {target:e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Every violation found while validating a configuration.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical contract (stability bound, vacuum, degenerate data).
    pub fn is_numerical_contract(&self) -> bool {
        matches!(
            self,
            Error::Cfl { .. }
                | Error::VacuumSingularity { .. }
                | Error::DegenerateDensity { .. }
                | Error::DegenerateKernel(_)
                | Error::Quadrature { .. }
                | Error::Consistency(_)
        )
    }
}
