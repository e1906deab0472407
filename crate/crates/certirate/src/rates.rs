//! Theorem-level certificate constructors.
//!
//! Each constructor composes certified moduli into the explicit rate of
//! one convergence theorem. Untrusted moduli are monotone-closed before
//! composition (the closure reproduces already-monotone moduli exactly),
//! sampled hypotheses are cross-checked at construction time, and every
//! certificate carries provenance naming the theorem, the constants and
//! the moduli that went into it.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::Error;
use crate::geometry::{hstar_check, ConvexSet, HStarOptions, Retraction};
use crate::mappings::{ContractKind, MappingFamily};
use crate::moduli::{
    monotone_closure_rate, monotone_closure_sigma, ConvergenceRate, GaugeFunction, SeqFn,
    StepSequence,
};
use crate::quadrature::upper_integral;
use crate::scalar::{c, ceil_index, Index, Real};
use crate::spaces::{DualityContinuityModulus, LpSpace, SmoothnessModulus, Vector};

/// Relative slack applied inside `upper_integral`, recorded in provenance.
pub const INTEGRAL_SLACK: f64 = 1e-9;

fn provenance_json(
    theorem: &str,
    constants: &[(&str, f64)],
    moduli: &[(&str, String)],
) -> String {
    let mut consts = BTreeMap::new();
    for (k, v) in constants {
        consts.insert((*k).to_string(), serde_json::json!(v));
    }
    consts.insert("integral_slack".into(), serde_json::json!(INTEGRAL_SLACK));
    let mut mods = BTreeMap::new();
    for (k, v) in moduli {
        mods.insert((*k).to_string(), serde_json::json!(v));
    }
    serde_json::json!({
        "theorem": theorem,
        "constants": consts,
        "moduli": mods,
    })
    .to_string()
}

fn to_f64<F: Real>(x: F) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Picard-scheme rate for a weakly contractive map with fixpoint residual
/// bound `c0 = ||x_0 - q||`:
/// `Phi(eps) = ceil(2 int_{eps/2}^{c0} dt/psi) + 1`.
pub fn simple_rate<F: Real>(
    psi: &GaugeFunction<F>,
    c0: F,
) -> Result<ConvergenceRate<F>, Error> {
    if !(c0 > F::zero()) {
        return Err(Error::Parameter("c0 = ||x0 - q|| must be positive".into()));
    }
    let psi = psi.clone();
    let two = c::<F>(2.0);
    let prov = provenance_json(
        "picard_weakly_contractive",
        &[("c0", to_f64(c0))],
        &[("psi", psi.label().to_string())],
    );
    Ok(ConvergenceRate::from_fn(
        prov,
        Arc::new(move |eps: F| {
            let integral = upper_integral(&psi, eps / two, c0)?;
            Ok(ceil_index(two * integral)?.saturating_add(1))
        }),
    ))
}

/// Mann-scheme rate for a quasi asymptotically weakly contractive family:
/// `Phi(eps) = r(sigma((1/2d) min{psi(eps/2d), eps/alpha}, c),
///              2d int_{eps/2d}^{c} dt/psi) + 1`.
pub fn mann_rate<F: Real>(
    family: &MappingFamily<F>,
    steps: &StepSequence<F>,
    d: F,
    bound: F,
) -> Result<ConvergenceRate<F>, Error> {
    if !(d >= F::one()) {
        return Err(Error::Parameter(format!(
            "product bound d = {} must be >= 1",
            to_f64(d)
        )));
    }
    if !(bound > F::zero()) {
        return Err(Error::Parameter("residual bound c must be positive".into()));
    }
    if family.kind == ContractKind::DWeakQuasiRelative {
        return Err(Error::Parameter(
            "mann_rate needs a norm-contractive family; use dweakly_rate".into(),
        ));
    }
    let sigma = monotone_closure_sigma(&family.sigma)?;
    let psi = family.psi.clone();
    let steps = steps.clone();
    let two_d = c::<F>(2.0) * d;
    let prov = provenance_json(
        "mann_quasi_asymptotic",
        &[
            ("d", to_f64(d)),
            ("c", to_f64(bound)),
            ("alpha_cap", to_f64(steps.cap())),
        ],
        &[
            ("psi", psi.label().to_string()),
            ("family", family.label().to_string()),
            ("steps", steps.label().to_string()),
        ],
    );
    Ok(ConvergenceRate::from_fn(
        prov,
        Arc::new(move |eps: F| {
            let scaled = eps / two_d;
            let delta = (psi.eval(scaled).min(eps / steps.cap())) / two_d;
            let start = sigma.eval(delta, bound)?;
            let integral = upper_integral(&psi, scaled, bound)?;
            let k = steps.divergence().eval(start, two_d * integral)?;
            Ok(k.saturating_add(1))
        }),
    ))
}

/// Computable residual bound for families whose modulus is independent of
/// the ball argument: `c = max_{n <= k} {||x_n - q||, 1}` with
/// `k = r(M, 2d int_{1/2d}^{||x_M - q||} dt/psi) + 1` and
/// `M = sigma((1/2d) min{psi(1/2d), 1/alpha})`.
pub fn cmax_bound<F: Real>(
    family: &MappingFamily<F>,
    steps: &StepSequence<F>,
    d: F,
    trajectory_residual: &SeqFn<F>,
) -> Result<F, Error> {
    if !family.sigma.b_independent() {
        return Err(Error::Parameter(
            "cmax_bound needs a modulus independent of the ball argument".into(),
        ));
    }
    if !(d >= F::one()) {
        return Err(Error::Parameter(format!(
            "product bound d = {} must be >= 1",
            to_f64(d)
        )));
    }
    let sigma = monotone_closure_sigma(&family.sigma)?;
    let two_d = c::<F>(2.0) * d;
    let one = F::one();
    let delta = (family.psi.eval(one / two_d).min(one / steps.cap())) / two_d;
    let m = sigma.eval(delta, one)?;
    let at_m = trajectory_residual(m);
    if !at_m.is_finite() {
        return Err(Error::Trajectory(format!("residual at {m} is not finite")));
    }
    let integral = upper_integral(&family.psi, one / two_d, at_m)?;
    let k = steps
        .divergence()
        .eval(m, two_d * integral)?
        .saturating_add(1);
    if k > 10_000_000 {
        return Err(Error::NotComputable(format!(
            "cmax horizon {k} is impractically large"
        )));
    }
    let mut best = one;
    for n in 0..=k {
        let v = trajectory_residual(n);
        if !v.is_finite() {
            return Err(Error::Trajectory(format!("residual at {n} is not finite")));
        }
        best = best.max(v);
    }
    Ok(best)
}

/// Samples the promise that `rate` certifies `alpha_n -> 0`: checks
/// `alpha_n <= delta` for a window of indices past `rate(delta)` on a
/// dyadic grid of deltas.
fn check_step_rate<F: Real>(
    steps: &StepSequence<F>,
    rate: &ConvergenceRate<F>,
) -> Result<(), Error> {
    let tol = F::one() + c::<F>(1e-9);
    for k in 0..=8 {
        let delta = c::<F>(2.0).powi(-k);
        let start = rate.eval(delta)?;
        for off in 0..=100u64 {
            let n = start.saturating_add(off);
            if steps.alpha(n) > delta * tol {
                return Err(Error::HypothesisViolation(format!(
                    "step rate does not certify alpha_n -> 0: alpha_{n} = {} > {}",
                    to_f64(steps.alpha(n)),
                    to_f64(delta)
                )));
            }
        }
    }
    Ok(())
}

/// Rate for quasi asymptotically d-weakly contractive families under a
/// uniformly continuous duality selection map with modulus `omega`:
/// with `psibar(t) = 2 psi(sqrt t)`,
/// `Phi(eps) = r(N((1/2) min{2 psi(eps/sqrt 2), eps^2/alpha}),
///              2 int_{eps^2/2}^{c1} dt/psibar) + 1`
/// where `N(delta) = max{sigma(delta/4, c1), f((1/c2) omega(c1, delta/(4 c2)))}`.
pub fn dweakly_rate<F: Real>(
    family: &MappingFamily<F>,
    steps: &StepSequence<F>,
    f_step: &ConvergenceRate<F>,
    omega: &DualityContinuityModulus<F>,
    c1: F,
    c2: F,
) -> Result<ConvergenceRate<F>, Error> {
    if family.kind != ContractKind::DWeakQuasiRelative {
        return Err(Error::Parameter(format!(
            "dweakly_rate needs a d-weak family, got {:?}",
            family.kind
        )));
    }
    if !(c1 > F::zero() && c2 > F::zero()) {
        return Err(Error::Parameter("bounds c1, c2 must be positive".into()));
    }
    check_step_rate(steps, f_step)?;
    let sigma = monotone_closure_sigma(&family.sigma)?;
    let f_cl = monotone_closure_rate(f_step)?;
    let psi = family.psi.clone();
    let psibar = psi.dweak_bar();
    let steps = steps.clone();
    let omega = omega.clone();
    let two = c::<F>(2.0);
    let four = c::<F>(4.0);
    let inv_sqrt2 = c::<F>(core::f64::consts::FRAC_1_SQRT_2);
    let prov = provenance_json(
        "dweak_mann",
        &[
            ("c1", to_f64(c1)),
            ("c2", to_f64(c2)),
            ("alpha_cap", to_f64(steps.cap())),
        ],
        &[
            ("psi", psi.label().to_string()),
            ("omega", omega.label().to_string()),
            ("family", family.label().to_string()),
            ("steps", steps.label().to_string()),
            ("f_step", f_step.provenance().to_string()),
        ],
    );
    Ok(ConvergenceRate::from_fn(
        prov,
        Arc::new(move |eps: F| {
            let eps_sq = eps * eps;
            let delta = (two * psi.eval(eps * inv_sqrt2)).min(eps_sq / steps.cap()) / two;
            let from_sigma = sigma.eval(delta / four, c1)?;
            let omega_val = omega.eval(c1, delta / (four * c2));
            let from_step = f_cl.eval(omega_val / c2)?;
            let start = from_sigma.max(from_step);
            let integral = upper_integral(&psibar, eps_sq / two, c1)?;
            let k = steps.divergence().eval(start, two * integral)?;
            Ok(k.saturating_add(1))
        }),
    ))
}

/// [`dweakly_rate`] with the continuity modulus built from a smoothness
/// modulus (`omega_tau`), covering the retracted Mann scheme as well.
pub fn dweakly_concrete_rate<F: Real>(
    family: &MappingFamily<F>,
    steps: &StepSequence<F>,
    f_step: &ConvergenceRate<F>,
    tau: &SmoothnessModulus<F>,
    c1: F,
    c2: F,
) -> Result<ConvergenceRate<F>, Error> {
    let omega = crate::spaces::omega_from_tau(tau);
    dweakly_rate(family, steps, f_step, &omega, c1, c2)
}

/// Hypotheses and constants of the perturbed-scheme theorem.
pub struct PerturbedParams<F> {
    /// The perturbed targets `E_n`.
    pub retraction_sets: Arc<dyn Fn(Index) -> ConvexSet<F> + Send + Sync>,
    /// The limiting target `E`.
    pub limit_set: ConvexSet<F>,
    /// Hausdorff closeness levels `a_n` in `(0, 1)` with `H*[E_n, E, a_n]`.
    pub a_seq: SeqFn<F>,
    /// Certifies `a_n <= omega(R, (alpha_n delta)^2 / 4R)` from `h(delta)` on.
    pub h: ConvergenceRate<F>,
    /// Bound on `||Q_n 0||` and `||Q 0||`.
    pub d: F,
    /// Rate for `||A_n q - q|| -> 0`.
    pub f: ConvergenceRate<F>,
    /// `||z_n|| <= c1`, `||A_n z_n|| <= c2`, `||x_n - q|| <= c3`,
    /// `||x_n - z_n|| <= c4`.
    pub c1: F,
    pub c2: F,
    pub c3: F,
    pub c4: F,
    /// Continuity modulus of the duality selection map.
    pub omega: DualityContinuityModulus<F>,
    /// How many leading indices get the full `H*` setup check.
    pub setup_horizon: Index,
    pub space: LpSpace<F>,
    pub hstar: HStarOptions,
}

impl<F: Real> PerturbedParams<F> {
    /// `R = 2(2(c1 + alpha c2) + d) + 1`.
    pub fn r_constant(&self, alpha_cap: F) -> F {
        let two = c::<F>(2.0);
        two * (two * (self.c1 + alpha_cap * self.c2) + self.d) + F::one()
    }

    fn validate(&self, steps: &StepSequence<F>) -> Result<(), Error> {
        for (name, v) in [
            ("d", self.d),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
        ] {
            if !(v > F::zero()) {
                return Err(Error::Parameter(format!("{name} must be positive")));
            }
        }
        // retraction base points stay within d of the origin
        let origin = Vector::zeros(self.limit_set.dim());
        let tol = c::<F>(1e-9);
        let q0 = Retraction::new(&self.space, self.limit_set.clone())?
            .apply(&self.space, &origin)?;
        if self.space.norm(&q0) > self.d + tol {
            return Err(Error::HypothesisViolation(format!(
                "||Q 0|| = {} exceeds d = {}",
                to_f64(self.space.norm(&q0)),
                to_f64(self.d)
            )));
        }
        for n in (0..=self.setup_horizon).step_by(7.max(self.setup_horizon as usize / 32).max(1)) {
            let qn0 = Retraction::new(&self.space, (self.retraction_sets)(n))?
                .apply(&self.space, &origin)?;
            if self.space.norm(&qn0) > self.d + tol {
                return Err(Error::HypothesisViolation(format!(
                    "||Q_{n} 0|| exceeds d = {}",
                    to_f64(self.d)
                )));
            }
        }
        // H*[E_n, E, a_n] on the setup horizon, a_n in (0, 1)
        for n in 0..=self.setup_horizon {
            let a = (self.a_seq)(n);
            if !(a > F::zero() && a < F::one()) {
                return Err(Error::HypothesisViolation(format!(
                    "a_{n} = {} outside (0, 1)",
                    to_f64(a)
                )));
            }
            let set = (self.retraction_sets)(n);
            if !hstar_check(&self.space, &set, &self.limit_set, a, &self.hstar)? {
                return Err(Error::HypothesisViolation(format!(
                    "H*[E_{n}, E, a_{n}] fails (a_{n} = {})",
                    to_f64(a)
                )));
            }
        }
        // closeness condition: a_n <= omega(R, (alpha_n delta)^2 / 4R) for
        // n past h(delta), sampled on a delta grid
        let r_const = self.r_constant(steps.cap());
        let four = c::<F>(4.0);
        let tol_mul = F::one() + c::<F>(1e-9);
        for k in 0..=8 {
            let delta = c::<F>(2.0).powi(-k);
            let start = self.h.eval(delta)?;
            for off in 0..=100u64 {
                let n = start.saturating_add(off);
                let alpha_n = steps.alpha(n);
                let budget = self.omega.eval(r_const, (alpha_n * delta).powi(2) / (four * r_const));
                if (self.a_seq)(n) > budget * tol_mul {
                    return Err(Error::HypothesisViolation(format!(
                        "closeness condition fails at n = {n}: a_n = {} > {}",
                        to_f64((self.a_seq)(n)),
                        to_f64(budget)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rate for the perturbed scheme `z_{n+1} = Q_n((1-alpha_n) z_n + alpha_n A_n z_n)`:
/// `Phi(eps) = r(N((1/2) min{psi(eps/4), eps/(2 alpha)}),
///              2 int_{eps/4}^{max{c3,c4}} dt/psi) + 1`
/// with `N(delta) = max{sigma(delta/2, max{c3,c4}), f(delta/2), h(delta)}`.
pub fn perturbed_rate<F: Real>(
    family: &MappingFamily<F>,
    steps: &StepSequence<F>,
    params: &PerturbedParams<F>,
) -> Result<ConvergenceRate<F>, Error> {
    if family.kind == ContractKind::DWeakQuasiRelative {
        return Err(Error::Parameter(
            "perturbed_rate needs a norm-contractive family".into(),
        ));
    }
    params.validate(steps)?;
    let sigma = monotone_closure_sigma(&family.sigma)?;
    let f_cl = monotone_closure_rate(&params.f)?;
    let h_cl = monotone_closure_rate(&params.h)?;
    let psi = family.psi.clone();
    let steps = steps.clone();
    let (c3, c4) = (params.c3, params.c4);
    let m34 = c3.max(c4);
    let two = c::<F>(2.0);
    let four = c::<F>(4.0);
    let prov = provenance_json(
        "perturbed_mann",
        &[
            ("d", to_f64(params.d)),
            ("c1", to_f64(params.c1)),
            ("c2", to_f64(params.c2)),
            ("c3", to_f64(c3)),
            ("c4", to_f64(c4)),
            ("R", to_f64(params.r_constant(steps.cap()))),
            ("alpha_cap", to_f64(steps.cap())),
        ],
        &[
            ("psi", psi.label().to_string()),
            ("omega", params.omega.label().to_string()),
            ("family", family.label().to_string()),
            ("steps", steps.label().to_string()),
            ("h", params.h.provenance().to_string()),
            ("f", params.f.provenance().to_string()),
        ],
    );
    Ok(ConvergenceRate::from_fn(
        prov,
        Arc::new(move |eps: F| {
            let delta = (psi.eval(eps / four).min(eps / (two * steps.cap()))) / two;
            let half = delta / two;
            // explicit maxima keep the composition sound even for moduli
            // that are not monotone in the ball argument
            let start = sigma
                .eval(half, m34)?
                .max(sigma.eval(half, c3)?)
                .max(sigma.eval(half, c4)?)
                .max(f_cl.eval(half)?)
                .max(h_cl.eval(delta)?);
            let integral = upper_integral(&psi, eps / four, m34)?;
            let k = steps.divergence().eval(start, two * integral)?;
            Ok(k.saturating_add(1))
        }),
    ))
}

/// Specialisation of [`perturbed_rate`] to a single weakly contractive map
/// with an exact fixpoint (`sigma = 0`, `f = 0`, `c4 = 2 c3`):
/// `Phi(eps) = r(h((1/2) min{psi(eps/4), eps/(2 alpha)}),
///              2 int_{eps/4}^{2 c3} dt/psi) + 1`.
#[allow(clippy::too_many_arguments)]
pub fn perturbed_concrete_rate<F: Real>(
    family: &MappingFamily<F>,
    steps: &StepSequence<F>,
    params: &PerturbedParams<F>,
) -> Result<ConvergenceRate<F>, Error> {
    if family.kind != ContractKind::Plain {
        return Err(Error::Parameter(
            "perturbed_concrete_rate needs a plain weakly contractive map".into(),
        ));
    }
    for k in 0..=6 {
        let delta = c::<F>(2.0).powi(-k);
        if family.sigma.eval(delta, F::one())? != 0 {
            return Err(Error::Parameter(
                "perturbed_concrete_rate needs sigma = 0".into(),
            ));
        }
    }
    params.validate(steps)?;
    let h_cl = monotone_closure_rate(&params.h)?;
    let psi = family.psi.clone();
    let steps = steps.clone();
    let two_c3 = c::<F>(2.0) * params.c3;
    let two = c::<F>(2.0);
    let four = c::<F>(4.0);
    let prov = provenance_json(
        "perturbed_mann_concrete",
        &[
            ("d", to_f64(params.d)),
            ("c1", to_f64(params.c1)),
            ("c2", to_f64(params.c2)),
            ("c3", to_f64(params.c3)),
            ("R", to_f64(params.r_constant(steps.cap()))),
            ("alpha_cap", to_f64(steps.cap())),
        ],
        &[
            ("psi", psi.label().to_string()),
            ("omega", params.omega.label().to_string()),
            ("family", family.label().to_string()),
            ("steps", steps.label().to_string()),
            ("h", params.h.provenance().to_string()),
        ],
    );
    Ok(ConvergenceRate::from_fn(
        prov,
        Arc::new(move |eps: F| {
            let delta = (psi.eval(eps / four).min(eps / (two * steps.cap()))) / two;
            let start = h_cl.eval(delta)?;
            let integral = upper_integral(&psi, eps / four, two_c3)?;
            let k = steps.divergence().eval(start, two * integral)?;
            Ok(k.saturating_add(1))
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::{make_dweak, make_strong, make_total_async};
    use crate::moduli::divergence_from_partial_sums;

    #[test]
    fn simple_rate_examples() {
        let half = GaugeFunction::<f64>::linear(0.5);
        let rate = simple_rate(&half, 1.0).unwrap();
        assert_eq!(rate.eval(0.1).unwrap(), 13);
        assert_eq!(rate.eval(2.0).unwrap(), 1);
        let ident = GaugeFunction::<f64>::linear(1.0);
        let rate = simple_rate(&ident, 1.0).unwrap();
        assert_eq!(rate.eval(0.2).unwrap(), 6);
        assert!(rate.eval(0.0).is_err());
        assert!(simple_rate(&ident, 0.0).is_err());
    }

    #[test]
    fn mann_rate_degenerates_to_simple() {
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let steps = StepSequence::ones();
        let mann = mann_rate(&family, &steps, 1.0, 1.0).unwrap();
        let simple = simple_rate(&family.psi, 1.0).unwrap();
        assert_eq!(mann.eval(0.1).unwrap(), 13);
        for k in 0..12 {
            let eps = 1.5 * 2.0f64.powi(-k);
            assert_eq!(mann.eval(eps).unwrap(), simple.eval(eps).unwrap());
        }
        // eps >= 2dc: empty integral
        assert_eq!(mann.eval(2.0).unwrap(), 1);
    }

    #[test]
    fn mann_rate_total_async_composition() {
        // f1 = f2 = ceil(delta^{-1/2}), psi = t/2, phi = id, alpha = 1,
        // d = 1, c = 1: Phi(0.2) = 20
        let base = make_strong(0.5, Vector::zeros(2)).unwrap();
        let seq: SeqFn<f64> = Arc::new(|n| 1.0 / ((n as f64 + 1.0) * (n as f64 + 1.0)));
        let family = make_total_async(
            GaugeFunction::linear(1.0),
            seq.clone(),
            seq,
            &base,
            ConvergenceRate::ceil_inv_sqrt(),
            ConvergenceRate::ceil_inv_sqrt(),
        )
        .unwrap();
        let rate = mann_rate(&family, &StepSequence::ones(), 1.0, 1.0).unwrap();
        assert_eq!(rate.eval(0.2).unwrap(), 20);
    }

    #[test]
    fn mann_rate_rejects_bad_parameters() {
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let steps = StepSequence::ones();
        assert!(mann_rate(&family, &steps, 0.5, 1.0).is_err());
        assert!(mann_rate(&family, &steps, 1.0, 0.0).is_err());
        let dweak = make_dweak(0.5, Vector::zeros(2)).unwrap();
        assert!(mann_rate(&dweak, &steps, 1.0, 1.0).is_err());
    }

    #[test]
    fn cmax_bound_examples() {
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let steps = StepSequence::ones();
        // nonincreasing trajectory from 1: c = 1
        let residual: SeqFn<f64> = Arc::new(|n| 2.0f64.powi(-(n as i32)));
        let v = cmax_bound(&family, &steps, 1.0, &residual).unwrap();
        assert_eq!(v, 1.0);
        // constant zero trajectory: the max with 1
        let residual: SeqFn<f64> = Arc::new(|_| 0.0);
        let v = cmax_bound(&family, &steps, 1.0, &residual).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn cmax_bound_horizon_value() {
        // psi = t/2, d = 1, alpha = 1, sigma = 0, residual(0) = 1:
        // M = 0, k = ceil(4 ln 2) + 1 = 4
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let steps = StepSequence::ones();
        // residual 1 at the admissibility index, then growing past 1
        let residual: SeqFn<f64> = Arc::new(|n| if n == 0 { 1.0 } else { 1.0 + n as f64 * 0.1 });
        let v = cmax_bound(&family, &steps, 1.0, &residual).unwrap();
        // k = 4, so c = max{1, residuals up to n = 4} = 1.4
        assert!((v - 1.4).abs() < 1e-12);
    }

    #[test]
    fn cmax_requires_b_independent_sigma() {
        let base = make_strong(0.5, Vector::zeros(2)).unwrap();
        let seq: SeqFn<f64> = Arc::new(|n| 1.0 / ((n as f64 + 1.0) * (n as f64 + 1.0)));
        let family = make_total_async(
            GaugeFunction::linear(1.0),
            seq.clone(),
            seq,
            &base,
            ConvergenceRate::ceil_inv_sqrt(),
            ConvergenceRate::ceil_inv_sqrt(),
        )
        .unwrap();
        let residual: SeqFn<f64> = Arc::new(|_| 1.0);
        assert!(cmax_bound(&family, &StepSequence::ones(), 1.0, &residual).is_err());
    }

    #[test]
    fn dweakly_rate_hand_composition() {
        // make_dweak(0.5), omega = identity, alpha_n = 1/(n+1),
        // f_step = ceil(1/delta), c1 = c2 = 1, eps = 1:
        // N = 16, integral = 2 ln 2, r harmonic by brute force
        let family = make_dweak(0.5, Vector::zeros(2)).unwrap();
        let steps = StepSequence::harmonic(10_000_000);
        let f_step = ConvergenceRate::ceil_inv(1.0);
        let omega = DualityContinuityModulus::identity();
        let rate = dweakly_rate(&family, &steps, &f_step, &omega, 1.0, 1.0).unwrap();
        // recompose the displayed formula independently: delta = 1/4,
        // N = max{0, ceil(1/omega(1, 1/16))} = 16, then r(16, 2 ln 2) by
        // direct harmonic summation, plus one
        let delta =
            (2.0 * family.psi.eval(1.0 * std::f64::consts::FRAC_1_SQRT_2)).min(1.0) / 2.0;
        let n_start = (1.0 / omega.eval(1.0, delta / 4.0)).ceil() as u64;
        assert_eq!(n_start, 16);
        let r = divergence_from_partial_sums::<f64>(
            Arc::new(|n| 1.0 / (n as f64 + 1.0)),
            1_000_000,
        );
        let expected = r.eval(n_start, 2.0 * 2.0f64.ln() * (1.0 + 1e-6)).unwrap() + 1;
        assert_eq!(rate.eval(1.0).unwrap(), expected);
        assert_eq!(expected, 66);
    }

    #[test]
    fn dweakly_rate_rejects_non_vanishing_steps() {
        let family = make_dweak(0.5, Vector::zeros(2)).unwrap();
        let steps = StepSequence::ones();
        let omega = DualityContinuityModulus::identity();
        assert!(matches!(
            dweakly_rate(&family, &steps, &ConvergenceRate::zero(), &omega, 1.0, 1.0),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn dweakly_rate_rejects_kind_mismatch() {
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let steps = StepSequence::harmonic(1_000_000);
        let omega = DualityContinuityModulus::identity();
        assert!(dweakly_rate(&family, &steps, &ConvergenceRate::ceil_inv(1.0), &omega, 1.0, 1.0)
            .is_err());
    }

    #[test]
    fn dweakly_concrete_reduces_to_explicit_omega() {
        let family = make_dweak(0.5, Vector::zeros(2)).unwrap();
        let steps = StepSequence::harmonic(10_000_000);
        let f_step = ConvergenceRate::ceil_inv(1.0);
        let tau = crate::spaces::tau_for_lp(2.0).unwrap();
        let concrete =
            dweakly_concrete_rate(&family, &steps, &f_step, &tau, 1.0, 1.0).unwrap();
        let omega = crate::spaces::omega_from_tau(&tau);
        let explicit = dweakly_rate(&family, &steps, &f_step, &omega, 1.0, 1.0).unwrap();
        // eps = 1.5 empties the integral; eps = 1 stays under the
        // divergence-scan cap even with the tiny omega_tau budget
        for eps in [1.5, 1.0] {
            assert_eq!(concrete.eval(eps).unwrap(), explicit.eval(eps).unwrap());
        }
    }

    fn fixed_set_params(space: LpSpace<f64>, set: ConvexSet<f64>) -> PerturbedParams<f64> {
        let set2 = set.clone();
        PerturbedParams {
            retraction_sets: Arc::new(move |_| set2.clone()),
            limit_set: set,
            // E_n = E holds H* at any level, so pick a_n below every
            // sampled closeness budget
            a_seq: Arc::new(|_| 1e-9),
            h: ConvergenceRate::zero(),
            d: 1.0,
            f: ConvergenceRate::zero(),
            c1: 2.0,
            c2: 1.0,
            c3: 2.0,
            c4: 4.0,
            omega: DualityContinuityModulus::identity(),
            setup_horizon: 16,
            space,
            hstar: HStarOptions::default(),
        }
    }

    #[test]
    fn perturbed_rate_unperturbed_example() {
        // E_n = E, h = 0, sigma = 0, f = 0, psi = t/2, alpha = 1,
        // max{c3, c4} = 2: Phi(0.2) = ceil(4 ln 40) + 1 = 16
        let space = LpSpace::new(2, 2.0).unwrap();
        let set = ConvexSet::new_box(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let mut params = fixed_set_params(space, set);
        params.c3 = 1.0;
        params.c4 = 2.0;
        let rate = perturbed_rate(&family, &StepSequence::ones(), &params).unwrap();
        assert_eq!(rate.eval(0.2).unwrap(), 16);
    }

    #[test]
    fn perturbed_threshold_assembly() {
        // sigma = 0, f(delta) = ceil(1/delta), h(delta) = ceil(2/delta):
        // N(0.5) = max{0, f(0.25), h(0.5)} = max{0, 4, 4} = 4, observable
        // at eps = 8 where the integral is empty: Phi(8) = r(4, 0) + 1 = 5
        let space = LpSpace::new(2, 2.0).unwrap();
        let set = ConvexSet::new_box(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let mut params = fixed_set_params(space, set);
        params.f = ConvergenceRate::ceil_inv(1.0);
        params.h = ConvergenceRate::ceil_inv(2.0);
        params.c4 = 2.0;
        // quadratic decay satisfies a_n <= (alpha delta)^2 / 4R past h(delta)
        params.a_seq = Arc::new(|n| 1.0 / (20.0 * (n as f64 + 1.0).powi(2)));
        let rate = perturbed_rate(&family, &StepSequence::ones(), &params).unwrap();
        assert_eq!(rate.eval(8.0).unwrap(), 5);
    }

    #[test]
    fn perturbed_rejects_slow_set_convergence() {
        // a_n decaying too slowly for the identity omega budget is a
        // hypothesis violation, not a silent certificate
        let space = LpSpace::new(2, 2.0).unwrap();
        let set = ConvexSet::new_box(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let mut params = fixed_set_params(space, set);
        params.h = ConvergenceRate::ceil_inv(2.0);
        params.a_seq = Arc::new(|n| (0.9f64.powi(n as i32 + 1)).min(0.5));
        assert!(matches!(
            perturbed_rate(&family, &StepSequence::ones(), &params),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn perturbed_r_constant() {
        let space = LpSpace::new(2, 2.0).unwrap();
        let set = ConvexSet::new_box(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let params = fixed_set_params(space, set);
        // c1 = 1, alpha = 1, c2 = 1, d = 1 -> R = 11
        let mut p = params;
        p.c1 = 1.0;
        p.c2 = 1.0;
        assert_eq!(p.r_constant(1.0), 11.0);
    }

    #[test]
    fn perturbed_hstar_violation_reports_index() {
        let space = LpSpace::new(2, 2.0).unwrap();
        let e = ConvexSet::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let far = ConvexSet::new_box(vec![3.0, 3.0], vec![4.0, 4.0]).unwrap();
        let mut params = fixed_set_params(space, e);
        params.retraction_sets = Arc::new(move |_| far.clone());
        params.d = 6.0;
        match perturbed_rate(&family, &StepSequence::ones(), &params) {
            Err(Error::HypothesisViolation(msg)) => assert!(msg.contains("H*"), "{msg}"),
            other => panic!("expected hypothesis violation, got {other:?}"),
        }
    }

    #[test]
    fn concrete_perturbed_hand_values() {
        // h = 0, psi = t/2, alpha = 1, c3 = 1: Phi(0.2) = 16
        let space = LpSpace::new(2, 2.0).unwrap();
        let set = ConvexSet::new_box(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let mut params = fixed_set_params(space.clone(), set.clone());
        params.c3 = 1.0;
        let rate = perturbed_concrete_rate(&family, &StepSequence::ones(), &params).unwrap();
        assert_eq!(rate.eval(0.2).unwrap(), 16);
        // eps >= 8 c3: empty integral
        assert_eq!(rate.eval(8.0).unwrap(), 1);

        // h(delta) = ceil(1/delta), psi = t, alpha = 1, c3 = 1, eps = 0.4:
        // inner delta = 0.05 -> h = 20; Phi = ceil(20 + 2 ln 20) + 1 = 27
        let to_fixpoint = crate::mappings::MappingFamily::from_parts(
            "collapse-to-fixpoint",
            Arc::new(|_: Index, x: &Vector<f64>| Vector::zeros(x.dim())),
            GaugeFunction::linear(1.0),
            crate::moduli::ContractivityModulus::zero(),
            ContractKind::Plain,
            Some(Vector::zeros(2)),
            Some(ConvergenceRate::zero()),
        );
        let mut params = fixed_set_params(space, set);
        params.c3 = 1.0;
        params.h = ConvergenceRate::ceil_inv(1.0);
        params.a_seq = Arc::new(|n| 1.0 / (60.0 * (n as f64 + 1.0).powi(2)));
        let rate = perturbed_concrete_rate(&to_fixpoint, &StepSequence::ones(), &params).unwrap();
        assert_eq!(rate.eval(0.4).unwrap(), 27);
    }

    #[test]
    fn degeneracy_perturbed_general_equals_concrete() {
        let space = LpSpace::new(2, 2.0).unwrap();
        let set = ConvexSet::new_box(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let family = make_strong(0.5, Vector::zeros(2)).unwrap();
        let mut params = fixed_set_params(space, set);
        params.c3 = 1.0;
        params.c4 = 2.0;
        let general = perturbed_rate(&family, &StepSequence::ones(), &params).unwrap();
        let concrete = perturbed_concrete_rate(&family, &StepSequence::ones(), &params).unwrap();
        for k in 0..12 {
            let eps = 3.0 * 2.0f64.powi(-k);
            assert_eq!(general.eval(eps).unwrap(), concrete.eval(eps).unwrap());
        }
    }

    #[test]
    fn provenance_is_json_with_theorem() {
        let half = GaugeFunction::<f64>::linear(0.5);
        let rate = simple_rate(&half, 1.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(rate.provenance()).unwrap();
        assert_eq!(v["theorem"], "picard_weakly_contractive");
        assert!(v["constants"]["integral_slack"].is_number());
    }
}
