use thiserror::Error;

pub type Result<T, E = ReadoutError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReadoutError {
    /// Argument outside the interval the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("singular coefficient: {0}")]
    Singular(String),

    /// The Fock cutoff is too small for the photon population reached.
    #[error("Fock truncation at N={fock} leaves population {population:.3e} in the top levels; try N >= {suggested}")]
    Truncation {
        fock: usize,
        population: f64,
        suggested: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("grid alignment error: {0}")]
    Alignment(String),
}

impl ReadoutError {
    /// Stable machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            ReadoutError::Domain(_) => "domain",
            ReadoutError::Input(_) => "input",
            ReadoutError::Resolution(_) => "resolution",
            ReadoutError::Fit(_) => "fit",
            ReadoutError::Singular(_) => "singular",
            ReadoutError::Truncation { .. } => "truncation",
            ReadoutError::Dimension { .. } => "dimension",
            ReadoutError::Precondition(_) => "precondition",
            ReadoutError::Infeasible(_) => "infeasible",
            ReadoutError::Alignment(_) => "alignment",
        }
    }
}
