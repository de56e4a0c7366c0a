use thiserror::Error;

/// Errors raised by the solver, the oracle and the validation batteries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("measure must be nonempty")]
    EmptyMeasure,

    #[error("time must be positive, got t = {t}")]
    NonPositiveTime { t: f64 },

    #[error("relaxation time must lie in (0, 1], got tau = {tau}")]
    TauOutOfRange { tau: f64 },

    #[error("invalid atom #{index}: {reason}")]
    InvalidAtom { index: usize, reason: &'static str },

    #[error("expected {expected} velocities, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("could not bracket the forward position of atom {atom} at t = {t}")]
    BisectionFailure { atom: usize, t: f64 },

    #[error("constant k = {k} must exceed U0 + M*tau/2 = {bound}")]
    BadConstantK { k: f64, bound: f64 },

    #[error("event count {events} exceeds the merge bound for {atoms} atoms")]
    EventHorizonExceeded { events: usize, atoms: usize },

    #[error("failed to bracket the next collision after t = {t}")]
    RootBracketFailure { t: f64 },

    #[error("no cluster within tolerance of x = {x}")]
    NoClusterAt { x: f64 },

    #[error("drift momentum identity violated at (x, t) = ({x}, {t}): prefix sum {prefix} vs closed form {closed}")]
    IdentityViolation { x: f64, t: f64, prefix: f64, closed: f64 },

    #[error("stencil at (x, t) = ({x}, {t}) with h = {h} touches a concentration or a collision")]
    StencilTooCloseToShock { x: f64, t: f64, h: f64 },

    #[error("residual of '{test}' grows under refinement at level {level}")]
    QuadratureDivergence { test: String, level: usize },

    #[error("potential overflows at t = {t:e}")]
    Overflow { t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
