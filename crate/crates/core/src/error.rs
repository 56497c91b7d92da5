use thiserror::Error;

use crate::poset::Index;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no upper bound for {0} and {1}")]
    JoinFailure(Index, Index),
    #[error("a section must have at least one member")]
    EmptySection,
    #[error("sample must be nonempty")]
    EmptySample,
    #[error("poset is not finitely enumerable")]
    InfinitePoset,
    #[error("{0} and {1} are comparable, not an antichain")]
    NotAntichain(Index, Index),
    #[error("index {0} does not belong to the poset")]
    UnknownIndex(Index),
    #[error("{0} is not below {1}")]
    NotComparable(Index, Index),
    #[error("relation is not a partial order: {0}")]
    NotPartialOrder(String),
    #[error("dimension mismatch: {context} (expected {expected}, got {found})")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("family mismatch: expected `{expected}`, got `{found}`")]
    FamilyMismatch { expected: String, found: String },
    #[error("section data is ill-defined at {index}: residual {residual:e}")]
    IllDefinedSection { index: Index, residual: f64 },
    #[error("index {0} is comparable to no member of the section")]
    Incomparable(Index),
    #[error("projection {lower} <= {upper} is not a morphism: residual {residual:e}")]
    MorphismViolation {
        lower: Index,
        upper: Index,
        residual: f64,
    },
    #[error("commuting square fails for {lower} <= {upper}: residual {residual:e}")]
    CommutingSquare {
        lower: Index,
        upper: Index,
        residual: f64,
    },
    #[error("element is not invertible at level {0}")]
    NotInvertible(Index),
    #[error("level {index} form is singular (rank {rank} < {dim})")]
    SingularForm {
        index: Index,
        rank: usize,
        dim: usize,
    },
    #[error("level {0} form is not the canonical Darboux form required by leapfrog")]
    NonCanonicalForm(Index),
    #[error("implicit solve did not converge after {0} Newton iterations")]
    NonconvergentSolve(usize),
    #[error("action is not symplectic at level {index}: residual {residual:e}")]
    NonSymplecticAction { index: Index, residual: f64 },
    #[error("tangent vector must be nonzero")]
    ZeroVector,
    #[error("time {0} is outside (0, 1]")]
    TimeOutOfRange(f64),
    #[error("{0} is not a refinement of the support")]
    NotRefinement(Index),
    #[error("unknown gallery entry `{0}`")]
    UnknownGallery(String),
    #[error("invalid descriptor: {0}")]
    Descriptor(String),
    #[error("invalid expression: {0}")]
    Expression(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}
