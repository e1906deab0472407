//! Finite-dimensional l_p spaces with their duality selection map,
//! smoothness moduli and the continuity modulus for the duality map.
//!
//! For `p > 1` the normalized duality mapping is single-valued with the
//! closed form `(Jx)_i = ||x||^{2-p} |x_i|^{p-1} sign(x_i)`, satisfying
//! `<x, Jx> = ||x||^2` and `||Jx||_q = ||x||` for the conjugate exponent
//! `q = p/(p-1)`. These spaces are uniformly smooth, with textbook moduli
//! realised by [`tau_for_lp`].

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::Error;
use crate::scalar::{c, Real};

/// A finite-dimensional l_p space, `p` in `(1, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpSpace<F> {
    pub dim: usize,
    pub p: F,
}

/// A point of the space (or of its dual), stored as raw coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector<F> {
    pub coords: Vec<F>,
}

impl<F: Real> Vector<F> {
    pub fn new(coords: Vec<F>) -> Self {
        Self { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: vec![F::zero(); dim],
        }
    }

    /// Standard basis vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.coords[i] = F::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|x| x.is_finite())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: F) -> Self {
        Self {
            coords: self.coords.iter().map(|&a| a * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: F, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        }
    }
}

impl<F: Real> LpSpace<F> {
    pub fn new(dim: usize, p: F) -> Result<Self, Error> {
        if dim == 0 {
            return Err(Error::Parameter("space dimension must be >= 1".into()));
        }
        if !(p > F::one()) || !p.is_finite() {
            return Err(Error::Parameter(format!(
                "invalid space: p = {} must lie in (1, inf)",
                p.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(Self { dim, p })
    }

    /// Conjugate exponent `q = p/(p-1)`.
    pub fn conjugate_exponent(&self) -> F {
        self.p / (self.p - F::one())
    }

    /// The p-norm `(sum |x_i|^p)^(1/p)`.
    pub fn norm(&self, x: &Vector<F>) -> F {
        p_norm(x, self.p)
    }

    /// Norm of a dual vector, taken in the conjugate exponent.
    pub fn dual_norm(&self, j: &Vector<F>) -> F {
        p_norm(j, self.conjugate_exponent())
    }

    pub fn distance(&self, x: &Vector<F>, y: &Vector<F>) -> F {
        self.norm(&x.sub(y))
    }

    /// The duality selection map `J`. `J0 = 0`; for `p = 2` it is the
    /// identity, exactly.
    pub fn duality_map(&self, x: &Vector<F>) -> Vector<F> {
        if self.p == c::<F>(2.0) {
            return x.clone();
        }
        let norm = self.norm(x);
        if norm == F::zero() {
            return Vector::zeros(x.dim());
        }
        let pm1 = self.p - F::one();
        // (Jx)_i = ||x|| * (|x_i| / ||x||)^(p-1) * sign(x_i), numerically
        // stable for tiny and large norms alike
        let coords = x
            .coords
            .iter()
            .map(|&xi| {
                if xi == F::zero() {
                    F::zero()
                } else {
                    norm * (xi.abs() / norm).powf(pm1) * xi.signum()
                }
            })
            .collect();
        Vector { coords }
    }

    /// Checks `||x + y||^2 <= ||x||^2 + 2 <y, J(x+y)>` within additive
    /// tolerance `1e-9 (1 + ||x||^2)`, returning the verdict and the slack
    /// (right-hand side minus left-hand side).
    pub fn check_geom_inequality(&self, x: &Vector<F>, y: &Vector<F>) -> GeomCheck<F> {
        let sum = x.add(y);
        let lhs = self.norm(&sum).powi(2);
        let j = self.duality_map(&sum);
        let rhs = self.norm(x).powi(2) + c::<F>(2.0) * pairing(y, &j).unwrap_or_else(|_| F::nan());
        let slack = rhs - lhs;
        let tol = c::<F>(1e-9) * (F::one() + self.norm(x).powi(2));
        GeomCheck {
            pass: slack >= -tol,
            slack,
        }
    }
}

/// Outcome of the geometric-inequality check.
#[derive(Debug, Clone, Copy)]
pub struct GeomCheck<F> {
    pub pass: bool,
    pub slack: F,
}

fn p_norm<F: Real>(x: &Vector<F>, p: F) -> F {
    if x.coords.is_empty() {
        return F::zero();
    }
    // scale by the max coordinate for stability
    let peak = x
        .coords
        .iter()
        .fold(F::zero(), |acc, &v| acc.max(v.abs()));
    if peak == F::zero() {
        return F::zero();
    }
    let mut acc = F::zero();
    for &v in &x.coords {
        acc = acc + (v.abs() / peak).powf(p);
    }
    peak * acc.powf(F::one() / p)
}

/// The duality pairing `<y, j> = sum y_i j_i`.
pub fn pairing<F: Real>(y: &Vector<F>, j: &Vector<F>) -> Result<F, Error> {
    if y.dim() != j.dim() {
        return Err(Error::Shape(format!(
            "pairing of dim {} with dim {}",
            y.dim(),
            j.dim()
        )));
    }
    let mut acc = F::zero();
    for (&a, &b) in y.coords.iter().zip(&j.coords) {
        acc = acc + a * b;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Smoothness and duality-continuity moduli
// ---------------------------------------------------------------------------

/// Modulus of uniform smoothness: `eps -> delta` such that unit `x` and
/// `||y|| <= delta` give `||x+y|| + ||x-y|| <= 2 + eps ||y||`.
#[derive(Clone)]
pub struct SmoothnessModulus<F> {
    eval: Arc<dyn Fn(F) -> F + Send + Sync>,
    label: String,
}

impl<F: Real> SmoothnessModulus<F> {
    pub fn from_fn(label: impl Into<String>, eval: Arc<dyn Fn(F) -> F + Send + Sync>) -> Self {
        Self {
            eval,
            label: label.into(),
        }
    }

    pub fn eval(&self, eps: F) -> F {
        (self.eval)(eps)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<F> std::fmt::Debug for SmoothnessModulus<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothnessModulus").field("label", &self.label).finish()
    }
}

/// Modulus of uniform continuity for the duality map on bounded sets:
/// `||x||, ||y|| <= d` and `||x - y|| <= eval(d, eps)` imply
/// `||Jx - Jy||_q <= eps`.
#[derive(Clone)]
pub struct DualityContinuityModulus<F> {
    eval: Arc<dyn Fn(F, F) -> F + Send + Sync>,
    label: String,
}

impl<F: Real> DualityContinuityModulus<F> {
    pub fn from_fn(label: impl Into<String>, eval: Arc<dyn Fn(F, F) -> F + Send + Sync>) -> Self {
        Self {
            eval,
            label: label.into(),
        }
    }

    /// In the `p = 2` model `J` is the identity, so `omega(d, eps) = eps`.
    pub fn identity() -> Self {
        Self::from_fn("identity", Arc::new(|_, eps| eps))
    }

    pub fn eval(&self, d: F, eps: F) -> F {
        (self.eval)(d, eps)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<F> std::fmt::Debug for DualityContinuityModulus<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DualityContinuityModulus")
            .field("label", &self.label)
            .finish()
    }
}

/// Smoothness modulus for l_p from the textbook estimates
/// `rho(t) <= ((p-1)/2) t^2` for `p >= 2` and `rho(t) <= t^p / p` for
/// `1 < p < 2`, solved for `2 rho(delta) <= eps delta`:
/// `tau_p(eps) = min{eps/(p-1), 1}` respectively
/// `tau_p(eps) = min{(eps p / 2)^(1/(p-1)), 1}`.
pub fn tau_for_lp<F: Real>(p: F) -> Result<SmoothnessModulus<F>, Error> {
    if !(p > F::one()) || !p.is_finite() {
        return Err(Error::Parameter(format!(
            "invalid space: p = {} must lie in (1, inf)",
            p.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let two = c::<F>(2.0);
    let one = F::one();
    let eval: Arc<dyn Fn(F) -> F + Send + Sync> = if p >= two {
        Arc::new(move |eps: F| (eps / (p - one)).min(one))
    } else {
        Arc::new(move |eps: F| ((eps * p / two).powf(one / (p - one))).min(one))
    };
    Ok(SmoothnessModulus::from_fn(format!("tau_lp(p={p})"), eval))
}

/// The duality-continuity modulus built from a smoothness modulus:
/// `omega_tau(d, eps) = (eps^2 / 12d) tau(eps / 2d)` for `eps` in `(0, 2]`
/// and `d >= 1`, clamping `d < 1` to `d = 1` and `eps > 2` to `eps = 2`.
pub fn omega_from_tau<F: Real>(tau: &SmoothnessModulus<F>) -> DualityContinuityModulus<F> {
    let tau = tau.clone();
    let label = format!("omega_tau({})", tau.label());
    DualityContinuityModulus::from_fn(
        label,
        Arc::new(move |d: F, eps: F| {
            let d = d.max(F::one());
            let eps = eps.min(c::<F>(2.0));
            let twelve = c::<F>(12.0);
            (eps * eps / (twelve * d)) * tau.eval(eps / (c::<F>(2.0) * d))
        }),
    )
}
