use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    /// The brute-force enumeration would visit more sequences than allowed.
    #[error("enumeration needs {required} sequences but the cap is {cap}")]
    ResourceLimit { required: u128, cap: u128 },

    #[error("closed-form evaluator only supports endpoints ({expected_initial},{expected_final}), got ({initial},{final_state})")]
    UnsupportedEndpoints {
        initial: usize,
        final_state: usize,
        expected_initial: usize,
        expected_final: usize,
    },

    #[error("no crossover detected: {0}")]
    NoCrossover(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("evaluation failed at {point:?}: {source}")]
    AtPoint { point: Vec<f64>, source: Box<Error> },
}

impl Error {
    /// Strips `AtPoint` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }
}
