//! Certified numerical kernels: upper bounds on `int_lo^hi dt / psi(t)` and
//! inversion of strictly increasing functions.
//!
//! Since `psi` is nondecreasing, `1/psi` is nonincreasing, so a left-endpoint
//! Riemann sum over-estimates the integral on any partition. We refine a
//! geometric partition until two successive refinements agree to relative
//! tolerance `1e-6` and return the last sum inflated by relative slack
//! `1e-9`. Every rate formula feeds the result into a divergence-rate
//! argument, where a larger input yields a larger, still valid, index — so
//! "over-estimate only" is the certified direction.

use crate::error::Error;
use crate::moduli::GaugeFunction;
use crate::scalar::{c, Real};

/// Relative agreement required between successive refinements.
const REFINE_RTOL: f64 = 1e-6;
/// Relative inflation applied to the final value to absorb rounding.
const UPPER_SLACK: f64 = 1e-9;
/// Panel count at which refinement gives up (the current sum is still a
/// valid upper bound; at this resolution the relative excess stays below
/// 1e-5 even across the full seven-decade working range).
const MAX_PANELS: usize = 1 << 20;

/// Upper bound on `int_lo^hi dt / psi(t)`.
///
/// Empty when `hi <= lo`. Uses the closed-form antiderivative when the
/// gauge carries one, otherwise geometric-partition left sums. Errors with
/// a gauge-degenerate condition when `psi(lo) = 0` (infinite integrand).
pub fn upper_integral<F: Real>(psi: &GaugeFunction<F>, lo: F, hi: F) -> Result<F, Error> {
    if !(lo > F::zero()) || !lo.is_finite() {
        return Err(Error::Domain(format!(
            "upper_integral needs lo > 0, got {}",
            lo.to_f64().unwrap_or(f64::NAN)
        )));
    }
    if hi <= lo {
        return Ok(F::zero());
    }
    let slack = F::one() + c::<F>(UPPER_SLACK);
    let at_lo = psi.eval(lo);
    if !at_lo.is_finite() {
        return Err(Error::InvalidGauge(format!(
            "psi not finite at {}",
            lo.to_f64().unwrap_or(f64::NAN)
        )));
    }
    if at_lo <= F::zero() {
        return Err(Error::GaugeDegenerate {
            at: lo.to_f64().unwrap_or(f64::NAN),
        });
    }
    if let Some(psi_big) = psi.antideriv() {
        let exact = psi_big(hi) - psi_big(lo);
        return Ok(exact.max(F::zero()) * slack);
    }

    let rtol = c::<F>(REFINE_RTOL).max(F::epsilon() * c::<F>(64.0));
    let mut panels: usize = 16;
    let mut prev = left_sum(psi, lo, hi, panels)?;
    loop {
        panels *= 2;
        let cur = left_sum(psi, lo, hi, panels)?;
        let close = (prev - cur).abs() <= rtol * cur.abs().max(F::min_positive_value());
        prev = cur;
        if close || panels >= MAX_PANELS {
            return Ok(cur * slack);
        }
    }
}

/// Left-endpoint Riemann sum of `1/psi` on a geometric partition.
fn left_sum<F: Real>(psi: &GaugeFunction<F>, lo: F, hi: F, panels: usize) -> Result<F, Error> {
    let ratio = (hi / lo).powf(F::one() / c::<F>(panels as f64));
    let mut acc = F::zero();
    let mut left = lo;
    for i in 1..=panels {
        // recompute the node from lo to avoid drift in long products
        let right = if i == panels {
            hi
        } else {
            lo * ratio.powi(i as i32)
        };
        let v = psi.eval(left);
        if !v.is_finite() {
            return Err(Error::InvalidGauge(format!(
                "psi not finite at {}",
                left.to_f64().unwrap_or(f64::NAN)
            )));
        }
        if v <= F::zero() {
            return Err(Error::GaugeDegenerate {
                at: left.to_f64().unwrap_or(f64::NAN),
            });
        }
        acc = acc + (right - left) / v;
        left = right;
    }
    Ok(acc)
}

/// Number of bracket doublings/halvings before giving up.
const MAX_EXPANSIONS: u32 = 200;

/// Inverts a strictly increasing continuous `f` from above: returns `x`
/// with `f(x) >= target` and `f(x (1 - 1e-6)) < target`, found by
/// exponential bracket expansion from `lo_hint` followed by bisection on
/// the right endpoint.
pub fn invert_increasing<F: Real>(
    f: impl Fn(F) -> F,
    target: F,
    lo_hint: F,
) -> Result<F, Error> {
    if !(lo_hint > F::zero()) || !lo_hint.is_finite() {
        return Err(Error::Domain("invert_increasing needs a positive hint".into()));
    }
    let two = c::<F>(2.0);
    let (mut lo, mut hi);
    if f(lo_hint) >= target {
        // shrink left until f drops below the target
        hi = lo_hint;
        lo = lo_hint / two;
        let mut n = 0;
        while f(lo) >= target {
            hi = lo;
            lo = lo / two;
            n += 1;
            if n > MAX_EXPANSIONS || lo <= F::zero() || !lo.is_normal() {
                return Err(Error::TargetOutOfRange { expansions: n });
            }
        }
    } else {
        // grow right until f passes the target
        lo = lo_hint;
        hi = lo_hint * two;
        let mut n = 0;
        while f(hi) < target {
            lo = hi;
            hi = hi * two;
            n += 1;
            if n > MAX_EXPANSIONS || !hi.is_finite() {
                return Err(Error::TargetOutOfRange { expansions: n });
            }
        }
    }
    // invariant: f(lo) < target <= f(hi)
    let rel = c::<F>(1e-9).max(c::<F>(4.0) * F::epsilon());
    let mut iter = 0;
    while hi - lo > rel * hi && iter < 500 {
        let mid = (lo + hi) / two;
        if !(mid > lo && mid < hi) {
            break;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        iter += 1;
    }
    Ok(hi)
}
