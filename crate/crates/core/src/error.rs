use thiserror::Error;

/// Errors raised by the library. Each variant names the precondition that failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) is {value}; compositional parts must be strictly positive")]
    ZeroOrNegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} has a non-positive sum")]
    EmptyRow { row: usize },
    #[error("row {row} is all zeros")]
    AllZeroRow { row: usize },
    #[error("row {row} sums to {sum}, not 1")]
    NotClosed { row: usize, sum: f64 },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("part index {0} is out of range")]
    UnknownPart(usize),
    #[error("at least two parts are required")]
    FewerThanTwoParts,
    #[error("at least two samples are required")]
    FewerThanTwoSamples,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("part count {0} is too small (need at least 2)")]
    JTooSmall(usize),
    #[error("index {index} out of range for {len} parts")]
    BadIndex { index: usize, len: usize },
    #[error("order is not a permutation of the parts")]
    NotAPermutation,
    #[error("tree leaves do not match the parts: {0}")]
    TreeLeafMismatch(String),
    #[error("malformed tree: {0}")]
    InvalidTree(String),
    #[error("ratio pairs do not form a spanning tree over the parts")]
    NotSpanningTree,
    #[error("expected {expected} ratios, got {got}")]
    WrongPairCount { expected: usize, got: usize },
    #[error("part {0} is not used by any summated logratio")]
    PartUnused(usize),
    #[error("numerator and denominator share part {0}")]
    OverlappingGroups(usize),
    #[error("invalid pattern matrix: {0}")]
    InvalidPattern(String),
    #[error("combination does not reduce to a single pairwise logratio")]
    PathNotFound,

    #[error("summated logratios are not linear in the logs; use slr_transform / invert_slr")]
    SlrNotLinear,
    #[error("pattern kind {0} is not supported here")]
    UnsupportedKind(String),
    #[error("inversion system is singular")]
    SingularSystem,
    #[error("logratios are not realisable by this pattern (non-positive part {0})")]
    NegativeSolution(usize),
    #[error("pattern matrix does not have rank J-1")]
    RankDeficientPattern,
    #[error("logratio vector is outside the range of the pattern (residual {0:e})")]
    InconsistentSystem(f64),

    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("need more samples than predictors + 1 ({samples} samples, {predictors} predictors)")]
    TooFewSamples { samples: usize, predictors: usize },

    #[error("axis {axis} out of range (rank {rank})")]
    AxisOutOfRange { axis: usize, rank: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
