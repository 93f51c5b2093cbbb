use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("site {site} out of range for a lattice of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("{0} sites exceed the dense cap of {1}")]
    TooManySites(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("state is not faithful: smallest eigenvalue {0:e} is below the floor")]
    NotFaithful(f64),
    #[error("not a density matrix: {0}")]
    InvalidState(String),
    #[error("step too large: occupation left [0,1] by {excursion:e} at dtau={dtau}; reduce the step")]
    StepTooLarge { dtau: f64, excursion: f64 },
    #[error("charges unattainable: {0}")]
    Unattainable(String),
    #[error("numerical range exhausted: {0}")]
    Overflow(String),
    #[error("computation budget exceeded: {0}")]
    Budget(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
