use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("graph has no edges")]
    EmptyEdgeSet,
    #[error("graph parse error on line {line}: {msg}")]
    GraphParse { line: usize, msg: String },
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: String, value: f64 },
    #[error("maximum degree {0} is below 3")]
    DegreeTooSmall(usize),
    #[error("two-spin system is not antiferromagnetic (beta*gamma = {0} >= 1)")]
    NotAntiferromagnetic(f64),
    #[error("fixed point iteration did not converge for degree {0}")]
    FixedPointNoConverge(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("pinning has zero probability")]
    InfeasiblePinning,
    #[error("function takes a negative value")]
    NegativeFunctionValue,
    #[error("distributions do not share a support")]
    SupportMismatch,
    #[error("influence matrix needs at least two free vertices")]
    TooFewFreeVertices,
    #[error("influence matrix has an eigenvalue with imaginary part {0}")]
    ComplexEigenvalue(f64),
    #[error("eigenvalue iteration did not converge on a {0}x{0} matrix")]
    EigenNoConverge(usize),
    #[error("face is not in the complex")]
    InfeasibleFace,
    #[error("level {level} exceeds allowed maximum {max}")]
    LevelTooHigh { level: usize, max: usize },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("function has zero entropy at the top level")]
    DegenerateEntropy,
    #[error("state is not in the support")]
    InfeasibleState,
    #[error("chain is not ergodic on the support")]
    NotErgodic,
    #[error("KL divergence from stationarity is zero")]
    DegenerateKL,
    #[error("ratio denominator is zero")]
    DegenerateDenominator,
    #[error("theta {theta} exceeds b^2/(12 Delta) = {max}")]
    ThetaTooLarge { theta: f64, max: f64 },
    #[error("n = {n} is below the required {required}")]
    NTooSmall { n: usize, required: f64 },
    #[error("graph is not a tree")]
    NotATree,
    #[error("path tree exceeds {0} nodes")]
    PathTreeTooLarge(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
