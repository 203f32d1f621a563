use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {coordinate} = {value} lies outside [-{bound}, {bound}]")]
    OutOfDomain { coordinate: usize, value: f64, bound: f64 },

    #[error("probe {probe} leaves the enlarged domain: {source}")]
    ProbeOutOfDomain {
        probe: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("no pairwise-separating family of size {size} found for d = {d}")]
    HashConstruction { d: usize, size: usize },

    #[error("parameter window is empty: {0}")]
    Infeasible(String),

    #[error("noise level {eps:e} is not below the ceiling {ceiling:e} ({stage})")]
    NoiseTooLarge { stage: &'static str, eps: f64, ceiling: f64 },

    #[error("solver did not converge in {iterations} iterations (residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
