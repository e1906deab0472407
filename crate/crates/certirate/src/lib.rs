//! Certified rates of convergence for fixed-point iterations of weakly
//! contractive type, verified empirically against computed trajectories.
//!
//! The crate builds explicit `eps -> index` certificates for Picard, Mann
//! and perturbed Mann schemes driven by (asymptotically) weakly contractive
//! mapping families, evaluates them in finite-dimensional l_p models, and
//! checks every certificate against the actual trajectory it claims to
//! bound. Core math is generic over the scalar type (`f32`/`f64`); the
//! `*64` aliases below fix `f64`, which is what the CLI and the acceptance
//! suite use.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod mappings;
pub mod moduli;
pub mod quadrature;
pub mod rates;
pub mod recineq;
pub mod scalar;
pub mod schemes;
pub mod spaces;

pub use error::Error;
pub use scalar::{Index, Real, IMPRACTICAL_INDEX};

pub type Gauge64 = moduli::GaugeFunction<f64>;
pub type Rate64 = moduli::ConvergenceRate<f64>;
pub type Divergence64 = moduli::DivergenceRate<f64>;
pub type Sigma64 = moduli::ContractivityModulus<f64>;
pub type Steps64 = moduli::StepSequence<f64>;
pub type Space64 = spaces::LpSpace<f64>;
pub type Vector64 = spaces::Vector<f64>;
pub type Family64 = mappings::MappingFamily<f64>;
pub type Scheme64 = schemes::SchemeInstance<f64>;
