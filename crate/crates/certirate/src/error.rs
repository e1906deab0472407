//! Crate-wide error type.

use crate::scalar::Index;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Argument outside the domain of a modulus or rate (e.g. epsilon <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// A modulus produced a non-finite value at a queried point.
    #[error("invalid modulus: non-finite output at argument {arg}")]
    InvalidModulus { arg: f64 },

    /// Partial sums did not pass the target within the configured cap. The
    /// series may not diverge fast enough, or the certified index simply
    /// lies beyond `reached`.
    #[error("divergence cap: partial sums scanned up to index {reached} without exceeding {target}")]
    DivergenceCap { reached: Index, target: f64 },

    /// The gauge vanished at a point where 1/psi must be integrated.
    #[error("gauge degenerate: psi({at}) = 0")]
    GaugeDegenerate { at: f64 },

    /// Bracket expansion failed while inverting a monotone function.
    #[error("target out of range: no bracket found after {expansions} expansions")]
    TargetOutOfRange { expansions: u32 },

    /// A constructor was handed an out-of-contract parameter.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Vector dimensions do not match.
    #[error("shape error: {0}")]
    Shape(String),

    /// Metric projections are only available in the p = 2 model.
    #[error("unsupported retraction: p = {p} (sunny retractions require p = 2)")]
    UnsupportedRetraction { p: f64 },

    /// No closed form exists for this pair of sets.
    #[error("not computable: {0}")]
    NotComputable(String),

    /// A sampled theorem hypothesis failed at setup time.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    /// Traditional bound requested below its admissibility threshold.
    #[error("not yet valid: n = {n} is below the admissibility threshold {threshold}")]
    NotYetValid { n: Index, threshold: Index },

    /// A trajectory value needed by a rate was not finite.
    #[error("trajectory error: {0}")]
    Trajectory(String),

    /// An iterate stopped being finite.
    #[error("numerical blowup at iteration {n}")]
    NumericalBlowup { n: Index },

    /// A supplied gauge failed its sampled admissibility checks.
    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem or serialization failure in the harness.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
