use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlateauError {
    #[error("group realizations do not match: {0}")]
    GroupMismatch(String),

    #[error("ball of radius {radius} would hold about {predicted} elements, above the cap of {cap}")]
    BallTooLarge {
        radius: usize,
        predicted: u128,
        cap: usize,
    },

    #[error("identity element is not allowed here")]
    IdentityInput,

    #[error("operation needs a {expected} group, got {found}")]
    WrongRealization { expected: &'static str, found: String },

    #[error("genus must be at least 2, got {0}")]
    GenusTooSmall(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("antipodal points: the geodesic between them is not unique")]
    Antipodal,

    #[error("weight function is not admissible: {0}")]
    InadmissibleWeights(String),

    #[error("homomorphism needs {expected} generator images, got {found}")]
    HomomorphismArity { expected: usize, found: usize },

    #[error("homomorphism does not respect the relations: {0}")]
    NotAHomomorphism(String),

    #[error("degenerate simplex {0}")]
    DegenerateSimplex(usize),

    #[error("mass increased from {before} to {after} under a 1-Lipschitz map")]
    MassIncrease { before: f64, after: f64 },

    #[error("truncation tail mass {tail} exceeds the bound {bound}; raise the word radius")]
    TailTooLarge { tail: f64, bound: f64 },

    #[error("c = {c} must exceed the volume entropy {entropy}")]
    PoissonExponent { c: f64, entropy: f64 },

    #[error("function is not admissible for the barycenter: {0}")]
    NotAdmissible(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("group of order {0} is too large for exact computation")]
    GroupTooLarge(usize),

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PlateauError>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> PlateauError {
    PlateauError::Parse {
        line,
        msg: msg.into(),
    }
}
