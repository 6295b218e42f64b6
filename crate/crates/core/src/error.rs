use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("signal length {0} is not a power of two")]
    LengthNotPowerOfTwo(u64),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: u64, actual: u64 },
    #[error("frequency {0} appears more than once")]
    DuplicateFrequency(u64),
    #[error("index {index} out of range for length {n}")]
    OutOfRange { index: u64, n: u64 },
    #[error("probability {0} outside (0, 1]")]
    InvalidProbability(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no available sample found after {0} draws")]
    AvailabilityExhausted(u64),
    #[error("sample {0} is not available")]
    MissingSample(u64),
    #[error("fewer than three available neighbours of {0} within the search window")]
    InterpolationImpossible(u64),
    #[error("interpolation nodes must be distinct")]
    CoincidentNodes,
    #[error("interpolation system is singular")]
    SingularSystem,
    #[error("unknown neighbour shape `{0}`")]
    UnknownShape(String),
    #[error("oracle length {n} exceeds cap {cap}")]
    OracleCapExceeded { n: u64, cap: u64 },
    #[error("group test exceeded depth {0} without converging")]
    GroupTestDiverged(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
