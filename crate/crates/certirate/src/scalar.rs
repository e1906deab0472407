//! Scalar abstraction and the saturating index arithmetic used by every
//! certificate.
//!
//! All numeric kernels are generic over [`Real`], which is implemented for
//! `f32` and `f64`. Certificates output natural indices represented as `u64`
//! with saturation at [`IMPRACTICAL_INDEX`]: a certified index that large is
//! reported as impractical rather than treated as an error.

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::Error;

/// Natural index produced by rates and moduli.
pub type Index = u64;

/// Saturation point for index arithmetic (2^63 - 1). Anything at or above
/// this is considered an impractical certificate.
pub const IMPRACTICAL_INDEX: Index = i64::MAX as u64;

/// Floating-point scalar the core is generic over.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + core::fmt::Debug + core::fmt::Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for lifting an `f64` constant into the working scalar type.
pub(crate) fn c<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("constant representable in scalar type")
}

pub(crate) fn index_to_scalar<F: Real>(n: Index) -> F {
    F::from_u64(n).unwrap_or_else(F::max_value)
}

/// Rounds a scalar up to a natural index, saturating at
/// [`IMPRACTICAL_INDEX`]. Negative values map to 0, `+inf` saturates, and
/// `NaN` is an invalid modulus output.
pub fn ceil_index<F: Real>(x: F) -> Result<Index, Error> {
    if x.is_nan() {
        return Err(Error::InvalidModulus {
            arg: x.to_f64().unwrap_or(f64::NAN),
        });
    }
    if x <= F::zero() {
        return Ok(0);
    }
    let ceiled = x.ceil();
    match ceiled.to_u64() {
        Some(n) => Ok(n.min(IMPRACTICAL_INDEX)),
        None => Ok(IMPRACTICAL_INDEX),
    }
}

/// True when an index has saturated and the certificate should be labelled
/// impractical.
pub fn is_impractical(n: Index) -> bool {
    n >= IMPRACTICAL_INDEX
}
