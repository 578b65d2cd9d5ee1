use thiserror::Error;

/// Crate-wide error taxonomy. Every failure mode a caller can act on gets its
/// own variant; payloads carry the offending values so callers and logs can
/// report them without re-deriving anything.
#[derive(Debug, Error)]
pub enum Error {
    /// A direction parametrization hit a pole (|cos phi| ~ 0, |sin theta| ~ 0,
    /// or a direction cosine outside [-1, 1]) where the requested quantity is
    /// undefined.
    #[error("degenerate direction: {what} = {value:.6e}")]
    DegenerateDirection { what: &'static str, value: f64 },

    /// An input left its documented physical domain.
    #[error("{what} = {value:.6} outside valid range (limit {limit:.6})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    /// A propagated kinematic state left the physical domain
    /// (range through zero, angles past their poles).
    #[error("propagated state escaped physical domain: {field} = {value:.6}")]
    StateEscaped { field: &'static str, value: f64 },

    /// Model-order selection found no signal components.
    #[error("order selection found no signal subspace (all eigenvalues noise-like)")]
    AllNoise,

    /// A subspace block required by the rotational-invariance solve is
    /// numerically singular.
    #[error("singular subspace block: condition number {cond:.3e}")]
    SingularBlock { cond: f64 },

    /// A range estimate aliased across the unambiguous window. The payload
    /// carries the folded value so a caller that knows the true range bracket
    /// can still use it.
    #[error("range estimate aliased: folded value {folded_m:.3} m, window {window_m:.3} m")]
    AmbiguousRange { folded_m: f64, window_m: f64 },

    /// A least-squares system has too few valid equations for its unknowns.
    #[error("rank-deficient fit: {valid} valid samples for {unknowns} unknowns")]
    RankDeficient { valid: usize, unknowns: usize },

    /// Single-frame estimation could not produce a usable observation.
    #[error("target lost: {reason}")]
    TargetLost { reason: &'static str },

    /// An observation handed to the tracker fails its validity contract.
    #[error("invalid observation: {field}")]
    InvalidObservation { field: &'static str },

    /// The innovation covariance is numerically singular.
    #[error("singular innovation covariance: condition number {cond:.3e}")]
    SingularInnovation { cond: f64 },

    /// Too many consecutive missing observations; the track was dropped.
    #[error("track dropped after {consecutive_misses} consecutive missing observations")]
    TrackDropped { consecutive_misses: usize },

    /// An error raised while processing a specific step of a sequence.
    #[error("at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// Configuration file or parameter problem.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
