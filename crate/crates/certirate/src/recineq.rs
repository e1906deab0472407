//! Quantitative treatment of the recursive inequality
//! `mu_{n+1} <= (1 + beta_n) mu_n - alpha_n (psi(mu_n) - delta)`.
//!
//! Given a divergence rate for `sum alpha_n`, an admissibility threshold
//! `N(delta)` and a uniform bound `c` on the sequence, the inequality
//! forces `mu_n -> 0` with an explicit rate of convergence. This module
//! builds those rates, translates them into traditional bounding functions
//! `mu_n <= F^{-1}(...)`, and provides the pointwise-largest sequence
//! satisfying the inequality as a test oracle.

use std::sync::Arc;

use crate::error::Error;
use crate::moduli::{
    monotone_closure_rate, ConvergenceRate, GaugeFunction, ScalarFn, SeqFn, StepSequence,
};
use crate::quadrature::{invert_increasing, upper_integral};
use crate::scalar::{c, Index, Real};

/// Multiplicative drift `beta_n` together with a bound `d >= 1` on
/// `prod (1 + beta_i)`.
#[derive(Clone)]
pub struct BetaSequence<F> {
    pub eval: SeqFn<F>,
    pub product_bound: F,
}

impl<F: Real> BetaSequence<F> {
    pub fn new(eval: SeqFn<F>, product_bound: F) -> Result<Self, Error> {
        if !(product_bound >= F::one()) {
            return Err(Error::Parameter(format!(
                "product bound d = {} must be >= 1",
                product_bound.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(Self {
            eval,
            product_bound,
        })
    }
}

/// One instance of the recursive inequality: gauge, steps, optional drift,
/// admissibility threshold `N` and uniform bound `c`.
#[derive(Clone)]
pub struct RecIneqInstance<F> {
    pub psi: GaugeFunction<F>,
    pub steps: StepSequence<F>,
    pub beta: Option<BetaSequence<F>>,
    pub threshold: ConvergenceRate<F>,
    pub c: F,
}

impl<F: Real> RecIneqInstance<F> {
    pub fn new(
        psi: GaugeFunction<F>,
        steps: StepSequence<F>,
        beta: Option<BetaSequence<F>>,
        threshold: ConvergenceRate<F>,
        c: F,
    ) -> Result<Self, Error> {
        if !(c > F::zero()) {
            return Err(Error::Parameter("uniform bound c must be positive".into()));
        }
        if let Some(b) = &beta {
            // spot-check the declared product bound on an initial segment
            let mut prod = F::one();
            for n in 0..1000u64 {
                prod = prod * (F::one() + (b.eval)(n));
                if prod > b.product_bound * (F::one() + crate::scalar::c::<F>(1e-9)) {
                    return Err(Error::Parameter(format!(
                        "prod(1+beta) exceeds d at n = {n}"
                    )));
                }
            }
        }
        Ok(Self {
            psi,
            steps,
            beta,
            threshold,
            c,
        })
    }

    fn drift_bound(&self) -> F {
        self.beta
            .as_ref()
            .map(|b| b.product_bound)
            .unwrap_or_else(F::one)
    }
}

/// Shared body of both rate lemmas:
/// `eps -> r(N((1/2d) min{psi(eps/2d), eps/alpha}), 2d int_{eps/2d}^{c} dt/psi) + 1`.
fn rate_with_drift<F: Real>(
    inst: &RecIneqInstance<F>,
    d: F,
    provenance: String,
) -> Result<ConvergenceRate<F>, Error> {
    let threshold = monotone_closure_rate(&inst.threshold)?;
    let psi = inst.psi.clone();
    let steps = inst.steps.clone();
    let bound = inst.c;
    let two_d = c::<F>(2.0) * d;
    Ok(ConvergenceRate::from_fn(
        provenance,
        Arc::new(move |eps: F| {
            if !(eps > F::zero()) {
                return Err(Error::Domain("rate needs eps > 0".into()));
            }
            let scaled = eps / two_d;
            let delta = (psi.eval(scaled).min(eps / steps.cap())) / two_d;
            let start = threshold.eval(delta)?;
            let integral = upper_integral(&psi, scaled, bound)?;
            let k = steps.divergence().eval(start, two_d * integral)?;
            Ok(k.saturating_add(1))
        }),
    ))
}

/// Rate of convergence from the drift-free inequality
/// (`beta` absent, i.e. `beta_n = 0`).
pub fn rate_first<F: Real>(inst: &RecIneqInstance<F>) -> Result<ConvergenceRate<F>, Error> {
    if inst.beta.is_some() {
        return Err(Error::Parameter(
            "rate_first needs a drift-free instance (beta absent)".into(),
        ));
    }
    rate_with_drift(inst, F::one(), "recineq_first".into())
}

/// Rate of convergence with multiplicative drift bounded by `d >= 1`;
/// reduces to [`rate_first`] when `d = 1`.
pub fn rate_second<F: Real>(inst: &RecIneqInstance<F>) -> Result<ConvergenceRate<F>, Error> {
    let d = inst.drift_bound();
    if !(d >= F::one()) {
        return Err(Error::Parameter(format!(
            "drift bound d = {} must be >= 1",
            d.to_f64().unwrap_or(f64::NAN)
        )));
    }
    rate_with_drift(inst, d, "recineq_second".into())
}

/// Drift-free rate that replaces the uniform bound `c` by the trajectory
/// value at the admissibility index:
/// `eps -> r(M(eps), 2 int_{eps/2}^{mu(M(eps))} dt/psi) + 1` with
/// `M(eps) = N((1/2) min{psi(eps/2), eps/alpha})`.
pub fn rate_first_nonuniform<F: Real>(
    psi: &GaugeFunction<F>,
    steps: &StepSequence<F>,
    threshold: &ConvergenceRate<F>,
    mu: SeqFn<F>,
) -> Result<ConvergenceRate<F>, Error> {
    let threshold = monotone_closure_rate(threshold)?;
    let psi = psi.clone();
    let steps = steps.clone();
    let two = c::<F>(2.0);
    Ok(ConvergenceRate::from_fn(
        "recineq_first_nonuniform".to_string(),
        Arc::new(move |eps: F| {
            if !(eps > F::zero()) {
                return Err(Error::Domain("rate needs eps > 0".into()));
            }
            let half = eps / two;
            let delta = (psi.eval(half).min(eps / steps.cap())) / two;
            let at = threshold.eval(delta)?;
            let level = mu(at);
            if !level.is_finite() {
                return Err(Error::Trajectory(format!(
                    "mu({at}) is not finite"
                )));
            }
            let integral = upper_integral(&psi, half, level)?;
            let k = steps.divergence().eval(at, two * integral)?;
            Ok(k.saturating_add(1))
        }),
    ))
}

/// Options for [`traditional_bound`]: the anchor used in the sufficiency
/// threshold and an optional explicit continuous bounding function for `N`.
pub struct TraditionalBoundOptions<F> {
    pub anchor: F,
    pub n_tilde: Option<ScalarFn<F>>,
}

impl<F: Real> Default for TraditionalBoundOptions<F> {
    fn default() -> Self {
        Self {
            anchor: F::one(),
            n_tilde: None,
        }
    }
}

/// Continuous nonincreasing bounding function for a (closed) threshold:
/// piecewise-linear interpolation over the dyadic grid of the closure's
/// values shifted one grid step down, plus 1, which strictly dominates the
/// step function everywhere.
fn default_n_tilde<F: Real>(threshold: &ConvergenceRate<F>) -> Result<ScalarFn<F>, Error> {
    let closed = monotone_closure_rate(threshold)?;
    let grid: Vec<F> = (crate::moduli::GRID_MIN_EXP..=crate::moduli::GRID_MAX_EXP)
        .map(|k| c::<F>(2.0).powi(k))
        .collect();
    let mut vals: Vec<F> = Vec::with_capacity(grid.len());
    for &g in &grid {
        let v = closed.eval(g)?;
        vals.push(F::from_u64(v).unwrap_or_else(F::max_value));
    }
    let one = F::one();
    Ok(Arc::new(move |eps: F| {
        if eps <= grid[0] {
            return vals[0] + one;
        }
        if eps >= grid[grid.len() - 1] {
            return vals[grid.len() - 1] + one;
        }
        let i = grid.iter().rposition(|&g| g <= eps).unwrap_or(0);
        // interpolate between the closure values one grid step down,
        // guaranteeing domination of the underlying step function
        let (xa, xb) = (grid[i], grid[i + 1]);
        let ya = vals[i.saturating_sub(1)];
        let yb = vals[i];
        let t = (eps - xa) / (xb - xa);
        ya + (yb - ya) * t + one
    }))
}

/// Explicit bound `mu_n <= F^{-1}(2d Psi(c) - sum_{i=0}^{n-2} alpha_i)` for
/// `F(eps) = 2d Psi(eps/2d) - alpha Ntilde((1/2d) min{psi(eps/2d), eps/alpha})`.
///
/// Requires a closed-form antiderivative on the gauge. Inversion is
/// attempted whenever the target can be bracketed; when it cannot, the
/// anchor-based sufficiency threshold is reported in a not-yet-valid error.
pub fn traditional_bound<F: Real>(
    inst: &RecIneqInstance<F>,
    n: Index,
    opts: &TraditionalBoundOptions<F>,
) -> Result<F, Error> {
    let psi_big = match inst.psi.antideriv() {
        Some(f) => f.clone(),
        None => {
            return Err(Error::Parameter(
                "traditional_bound needs a gauge with a closed-form antiderivative".into(),
            ))
        }
    };
    let n_tilde = match &opts.n_tilde {
        Some(f) => f.clone(),
        None => default_n_tilde(&inst.threshold)?,
    };
    let d = inst.drift_bound();
    let two_d = c::<F>(2.0) * d;
    let alpha_cap = inst.steps.cap();
    let psi = inst.psi.clone();
    let big_f = move |eps: F| -> F {
        let scaled = eps / two_d;
        let arg = (psi.eval(scaled).min(eps / alpha_cap)) / two_d;
        two_d * psi_big(scaled) - alpha_cap * n_tilde(arg)
    };

    // target = 2d Psi(c) - sum_{i=0}^{n-2} alpha_i  (n-1 leading terms)
    let leading = if n >= 1 { n - 1 } else { 0 };
    let target = two_d * inst.psi.antideriv().unwrap()(inst.c) - inst.steps.partial_sum(leading);

    match invert_increasing(&big_f, target, inst.c) {
        Ok(v) => Ok(v),
        Err(Error::TargetOutOfRange { .. }) => {
            let threshold = admissibility_threshold(inst, &big_f, opts.anchor);
            Err(Error::NotYetValid { n, threshold })
        }
        Err(e) => Err(e),
    }
}

/// Least `m` with `sum_{i=0}^{m-2} alpha_i >= 2d Psi(c) - F(anchor)`.
fn admissibility_threshold<F: Real>(
    inst: &RecIneqInstance<F>,
    big_f: &impl Fn(F) -> F,
    anchor: F,
) -> Index {
    let d = inst.drift_bound();
    let two_d = c::<F>(2.0) * d;
    let needed = match inst.psi.antideriv() {
        Some(p) => two_d * p(inst.c) - big_f(anchor),
        None => return 0,
    };
    if needed <= F::zero() {
        return 0;
    }
    let mut acc = F::zero();
    for i in 0..10_000_000u64 {
        acc = acc + inst.steps.alpha(i);
        if acc >= needed {
            return i + 2;
        }
    }
    Index::MAX
}

/// The pointwise-largest sequence satisfying the recursive inequality:
/// `mu_{n+1} = max(0, (1 + beta_n) mu_n - alpha_n (psi(mu_n) - delta_n))`.
pub fn adversarial_sequence<F: Real>(
    inst: &RecIneqInstance<F>,
    delta_schedule: &SeqFn<F>,
    mu0: F,
    n_max: Index,
) -> Vec<F> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut mu = mu0;
    out.push(mu);
    for n in 0..n_max {
        let beta = inst.beta.as_ref().map(|b| (b.eval)(n)).unwrap_or_else(F::zero);
        let alpha = inst.steps.alpha(n);
        let next = (F::one() + beta) * mu - alpha * (inst.psi.eval(mu) - delta_schedule(n));
        mu = next.max(F::zero());
        out.push(mu);
    }
    out
}
