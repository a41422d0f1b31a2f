use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite amplitude at index {index}")]
    NonFinite { index: usize },

    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("input vectors span the zero subspace")]
    ZeroSpan,

    #[error("invalid observable '{name}': {reason}")]
    InvalidObservable { name: String, reason: String },

    #[error("unknown observable '{0}'")]
    UnknownObservable(String),

    #[error("unknown outcome '{outcome}' for observable '{observable}'")]
    UnknownOutcome { observable: String, outcome: String },

    #[error("outcome index {index} out of range for {len} events")]
    OutcomeOutOfRange { index: usize, len: usize },

    #[error("post-selection impossible: denominator {denominator:e} below threshold")]
    PostSelectionImpossible { denominator: f64 },

    #[error(
        "counterfactual query is invalid: merged history family is inconsistent \
         (max interference {max_violation:e})"
    )]
    CounterfactualInvalid {
        max_violation: f64,
        /// Unconditioned CH ratio Tr(D C F C) / Tr(DF) for the queried event.
        /// Diagnostic only; never a valid probability.
        ch_diagnostic: Option<f64>,
    },

    #[error("history family is inconsistent (max interference {max_violation:e})")]
    InconsistentFamily { max_violation: f64 },

    #[error("cannot condition on a null event: Tr(DF) = {trace:e}")]
    ConditioningOnNull { trace: f64 },

    #[error("families do not share the same {0} projector")]
    MismatchedBoundary(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Empty(_) => "Empty",
            Error::NonFinite { .. } => "NonFinite",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::ZeroSpan => "ZeroSpan",
            Error::InvalidObservable { .. } => "InvalidObservable",
            Error::UnknownObservable(_) => "UnknownObservable",
            Error::UnknownOutcome { .. } => "UnknownOutcome",
            Error::OutcomeOutOfRange { .. } => "OutcomeOutOfRange",
            Error::PostSelectionImpossible { .. } => "PostSelectionImpossible",
            Error::CounterfactualInvalid { .. } => "CounterfactualInvalid",
            Error::InconsistentFamily { .. } => "InconsistentFamily",
            Error::ConditioningOnNull { .. } => "ConditioningOnNull",
            Error::MismatchedBoundary(_) => "MismatchedBoundary",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }

    /// True for errors that come from the physics rather than from malformed input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::PostSelectionImpossible { .. }
                | Error::CounterfactualInvalid { .. }
                | Error::InconsistentFamily { .. }
                | Error::ConditioningOnNull { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
