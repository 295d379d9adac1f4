use thiserror::Error;

/// Every failure the library reports. Variants map onto CLI exit codes via
/// [`Error::exit_code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("group has no even cyclic factor, so its order is odd")]
    EmptyEvenPart,
    #[error("group order {order} exceeds the element cap {cap}")]
    OrderOverflow { order: u128, cap: u64 },
    #[error("invalid cyclic factor: {0}")]
    InvalidFactor(String),
    #[error("element out of range: {0}")]
    ElementOutOfRange(String),
    #[error("{count} index-2 subgroups exceed the subgroup cap {cap}")]
    SubgroupCountOverflow { count: u64, cap: u64 },
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("generator {0} is not in the even subgroup")]
    GeneratorNotEven(usize),
    #[error("generator set contains zero")]
    ZeroGenerator,
    #[error("generators x and y satisfy x = y or x = -y")]
    DegeneratePair,
    #[error("generator set contains a pair {{x, -x}}")]
    PairedGenerators,
    #[error("enumeration of {size} candidates exceeds the cap {cap}")]
    EnumerationTooLarge { size: u128, cap: u64 },
    #[error("solver input of size {size} exceeds the cap {cap}")]
    SolverCapExceeded { size: usize, cap: usize },
    #[error("cover analysis on {size} elements exceeds the cap {cap}")]
    CoverCapExceeded { size: usize, cap: usize },
    #[error("vertex {0} is already in A")]
    VertexInA(usize),
    #[error("vertex {0} is not in the odd coset")]
    NotInOddCoset(usize),
    #[error("(S, T) does not witness the local-improvement event")]
    NotAWitness,
    #[error("second Janson form needs 2*c*mu <= Delta and c <= 1/4")]
    SecondFormInapplicable,
    #[error("Janson family contains an empty set")]
    EmptyJansonSet,
    #[error("number of trials must be positive")]
    ZeroTrials,
    #[error("invalid sampling law: {0}")]
    InvalidLaw(String),
    #[error("argument out of range: {0}")]
    RangeError(String),
    #[error("divisibility requirement failed: {0}")]
    DivisibilityError(String),
    #[error("subgroup is not nice at the given delta")]
    NotNice,
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    /// 2 for configuration problems, 3 when a size cap is hit, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OrderOverflow { .. }
            | Error::SubgroupCountOverflow { .. }
            | Error::EnumerationTooLarge { .. }
            | Error::SolverCapExceeded { .. }
            | Error::CoverCapExceeded { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
