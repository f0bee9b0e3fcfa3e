use thiserror::Error;

/// Domain errors shared by all modules. `kind` strings are stable and used
/// verbatim in CLI error output.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("zero vector")]
    ZeroVector,
    #[error("vector is not primitive: {0}")]
    NotPrimitive(String),
    #[error("determinant is {0}, expected 1")]
    NotUnimodular(String),
    #[error("central parameter has infinite order")]
    InfiniteOrder,
    #[error("matrix is not scalar within tolerance: deviation {0}")]
    NotScalar(String),
    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),
    #[error("partial knowledge: {0}")]
    PartialKnowledge(String),
    #[error("m must be odd")]
    EvenM,
    #[error("bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("case mismatch: {0}")]
    CaseMismatch(String),
    #[error("stratum mismatch: {0}")]
    StratumMismatch(String),
    #[error("stabilizer mismatch: {0}")]
    StabilizerMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("group mismatch: {0}")]
    GroupMismatch(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("unsupported coset space: {0}")]
    UnsupportedCosetSpace(String),
    #[error("primitive ideal parameters differ: {0}")]
    PrimMismatch(String),
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl DomainError {
    pub fn kind(&self) -> &'static str {
        match self {
            DomainError::ZeroVector => "ZeroVector",
            DomainError::NotPrimitive(_) => "NotPrimitive",
            DomainError::NotUnimodular(_) => "NotUnimodular",
            DomainError::InfiniteOrder => "InfiniteOrder",
            DomainError::NotScalar(_) => "NotScalar",
            DomainError::UnsupportedProfile(_) => "UnsupportedProfile",
            DomainError::PartialKnowledge(_) => "PartialKnowledge",
            DomainError::EvenM => "EvenM",
            DomainError::BoundExceeded(_) => "BoundExceeded",
            DomainError::CaseMismatch(_) => "CaseMismatch",
            DomainError::StratumMismatch(_) => "StratumMismatch",
            DomainError::StabilizerMismatch(_) => "StabilizerMismatch",
            DomainError::DimMismatch(_) => "DimMismatch",
            DomainError::GroupMismatch(_) => "GroupMismatch",
            DomainError::NumericalFailure(_) => "NumericalFailure",
            DomainError::UnsupportedCosetSpace(_) => "UnsupportedCosetSpace",
            DomainError::PrimMismatch(_) => "PrimMismatch",
            DomainError::FrameMismatch(_) => "FrameMismatch",
            DomainError::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, DomainError>;
