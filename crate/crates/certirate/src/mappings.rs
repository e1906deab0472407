//! Catalog of concrete mapping families with certified contractivity
//! moduli.
//!
//! Each family carries the gauge and modulus that make its declared
//! inequality checkable: plain families satisfy the pairwise inequality
//! `||A_n x - A_n y|| <= ||x - y|| - psi(||x - y||) + delta`, quasi
//! families the same against a fixed reference point `q`, and the d-weak
//! kind the duality-pairing version
//! `|<A_n x - q, J(x - q)>| <= ||x - q||^2 - psi(||x - q||) + delta`.
//! Rate constructors consume these certified moduli as-is and never
//! re-derive them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::error::Error;
use crate::moduli::{ContractivityModulus, ConvergenceRate, GaugeFunction, SeqFn};
use crate::scalar::{c, Index, Real};
use crate::spaces::{pairing, LpSpace, Vector};

/// Which contractive inequality the family certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractKind {
    /// Pairwise inequality on all of the domain.
    Plain,
    /// Inequality against the fixed reference point only.
    QuasiRelative,
    /// Duality-pairing inequality against the reference point (p = 2 model).
    DWeakQuasiRelative,
}

type ApplyFn<F> = Arc<dyn Fn(Index, &Vector<F>) -> Vector<F> + Send + Sync>;

/// A family of mappings `A_n` together with its certified data.
#[derive(Clone)]
pub struct MappingFamily<F> {
    apply: ApplyFn<F>,
    pub psi: GaugeFunction<F>,
    pub sigma: ContractivityModulus<F>,
    pub kind: ContractKind,
    pub q: Option<Vector<F>>,
    pub fix_residual_rate: Option<ConvergenceRate<F>>,
    label: String,
}

impl<F: Real> MappingFamily<F> {
    /// Assembles a family from user-supplied parts. The caller vouches for
    /// the certification; [`check_contract`](Self::check_contract) samples it.
    pub fn from_parts(
        label: impl Into<String>,
        apply: ApplyFn<F>,
        psi: GaugeFunction<F>,
        sigma: ContractivityModulus<F>,
        kind: ContractKind,
        q: Option<Vector<F>>,
        fix_residual_rate: Option<ConvergenceRate<F>>,
    ) -> Self {
        Self {
            apply,
            psi,
            sigma,
            kind,
            q,
            fix_residual_rate,
            label: label.into(),
        }
    }

    pub fn apply(&self, n: Index, x: &Vector<F>) -> Vector<F> {
        (self.apply)(n, x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn reference(&self) -> Result<&Vector<F>, Error> {
        self.q
            .as_ref()
            .ok_or_else(|| Error::Parameter(format!("family {} has no reference point", self.label)))
    }

    /// Samples the declared inequality for this family's kind: random
    /// points within `b` of the reference (or pairs, for plain families),
    /// at indices `n >= sigma(delta, b)`, must satisfy it within `1e-9`.
    pub fn check_contract(
        &self,
        space: &LpSpace<F>,
        samples: usize,
        seed: u64,
    ) -> Result<(), Error> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = self.reference()?.clone();
        let dim = q.dim();
        let tol = c::<F>(1e-9);
        for _ in 0..samples {
            let delta = c::<F>(rng.gen_range(0.01..1.0f64));
            let b = c::<F>(rng.gen_range(0.5..3.0f64));
            let start = self.sigma.eval(delta, b)?;
            let n = start.saturating_add(rng.gen_range(0..8));
            let x = random_in_ball(&mut rng, space, &q, b, dim);
            match self.kind {
                ContractKind::Plain => {
                    let y = random_in_ball(&mut rng, space, &q, b, dim);
                    let lhs = space.distance(&self.apply(n, &x), &self.apply(n, &y));
                    let dist = space.distance(&x, &y);
                    let rhs = dist - self.psi.eval(dist) + delta;
                    if lhs > rhs + tol {
                        return Err(Error::HypothesisViolation(format!(
                            "pairwise inequality fails for {} at n = {n}",
                            self.label
                        )));
                    }
                }
                ContractKind::QuasiRelative => {
                    let lhs = space.distance(&self.apply(n, &x), &q);
                    let dist = space.distance(&x, &q);
                    let rhs = dist - self.psi.eval(dist) + delta;
                    if lhs > rhs + tol {
                        return Err(Error::HypothesisViolation(format!(
                            "quasi inequality fails for {} at n = {n}",
                            self.label
                        )));
                    }
                }
                ContractKind::DWeakQuasiRelative => {
                    let xq = x.sub(&q);
                    let j = space.duality_map(&xq);
                    let lhs = pairing(&self.apply(n, &x).sub(&q), &j)?.abs();
                    let dist = space.distance(&x, &q);
                    let rhs = dist * dist - self.psi.eval(dist) + delta;
                    if lhs > rhs + tol {
                        return Err(Error::HypothesisViolation(format!(
                            "d-weak inequality fails for {} at n = {n}",
                            self.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl<F> std::fmt::Debug for MappingFamily<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MappingFamily")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .finish()
    }
}

fn random_in_ball<F: Real>(
    rng: &mut ChaCha8Rng,
    space: &LpSpace<F>,
    q: &Vector<F>,
    b: F,
    dim: usize,
) -> Vector<F> {
    loop {
        let v = Vector::new(
            (0..dim)
                .map(|_| c::<F>(rng.gen_range(-1.0..1.0f64)) * b)
                .collect(),
        );
        let x = q.add(&v);
        if space.distance(&x, q) <= b {
            return x;
        }
    }
}

/// Strong contraction `A_n x = q + (1-k)(x - q)` with gauge `psi(t) = k t`
/// and `sigma = 0`; the inequality holds with equality by construction.
pub fn make_strong<F: Real>(k: F, q: Vector<F>) -> Result<MappingFamily<F>, Error> {
    if !(k > F::zero() && k < F::one()) {
        return Err(Error::Parameter(format!(
            "contraction factor k = {} must lie in (0, 1)",
            k.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let q2 = q.clone();
    let one_minus = F::one() - k;
    Ok(MappingFamily {
        apply: Arc::new(move |_, x| q2.add(&x.sub(&q2).scale(one_minus))),
        psi: GaugeFunction::linear(k),
        sigma: ContractivityModulus::zero(),
        kind: ContractKind::Plain,
        q: Some(q),
        fix_residual_rate: Some(ConvergenceRate::zero()),
        label: format!("strong(k={k})"),
    })
}

/// One-dimensional weakly contractive map `T x = x - psi(x)` on `[0, inf)`.
///
/// Needs `psi` convex with `psi(0) = 0` (hence superadditive) and
/// `t - psi(t)` nondecreasing; both are spot-checked on 1000 sampled pairs
/// before the gauge is accepted. Fixpoint 0.
pub fn make_weak_1d<F: Real>(psi: GaugeFunction<F>) -> Result<MappingFamily<F>, Error> {
    psi.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xda7a);
    for _ in 0..1000 {
        let a = c::<F>(rng.gen_range(0.0..8.0f64));
        let b = c::<F>(rng.gen_range(0.0..8.0f64));
        if psi.eval(a + b) + c::<F>(1e-12) < psi.eval(a) + psi.eval(b) {
            return Err(Error::InvalidGauge(format!(
                "gauge {} is not superadditive at ({}, {})",
                psi.label(),
                a.to_f64().unwrap_or(f64::NAN),
                b.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if (hi - psi.eval(hi)) + c::<F>(1e-12) < lo - psi.eval(lo) {
            return Err(Error::InvalidGauge(format!(
                "t - {}(t) decreases between {} and {}",
                psi.label(),
                lo.to_f64().unwrap_or(f64::NAN),
                hi.to_f64().unwrap_or(f64::NAN)
            )));
        }
    }
    let psi2 = psi.clone();
    Ok(MappingFamily {
        apply: Arc::new(move |_, x: &Vector<F>| {
            let t = x.coords[0].max(F::zero());
            Vector::new(vec![t - psi2.eval(t)])
        }),
        psi: psi.clone(),
        sigma: ContractivityModulus::zero(),
        kind: ContractKind::Plain,
        q: Some(Vector::zeros(1)),
        fix_residual_rate: Some(ConvergenceRate::zero()),
        label: format!("weak_1d({})", psi.label()),
    })
}

/// Totally asymptotically weakly contractive family built on `base`:
/// `A_n x = base(x) + (nu_n phi(||x - q||) + l_n) e_0` with the certified
/// quasi modulus `sigma(delta, b) = max{f1(delta / 2 phi(b)), f2(delta / 2)}`
/// from rates `f1`, `f2` for `nu_n -> 0` and `l_n -> 0`.
pub fn make_total_async<F: Real>(
    phi: GaugeFunction<F>,
    nu: SeqFn<F>,
    l: SeqFn<F>,
    base: &MappingFamily<F>,
    f1: ConvergenceRate<F>,
    f2: ConvergenceRate<F>,
) -> Result<MappingFamily<F>, Error> {
    let q = base.reference()?.clone();
    if base.kind == ContractKind::DWeakQuasiRelative {
        return Err(Error::Parameter(
            "total-async construction needs a norm-contractive base".into(),
        ));
    }
    let dim = q.dim();
    let space_probe = LpSpace::new(dim, c::<F>(2.0))?;

    // certified modulus from the corollary assembly
    let phi_sigma = phi.clone();
    let f1s = f1.clone();
    let f2s = f2.clone();
    let two = c::<F>(2.0);
    let sigma = ContractivityModulus::from_fn(Arc::new(move |delta: F, b: F| {
        let phi_b = phi_sigma.eval(b);
        let first = if phi_b > F::zero() {
            f1s.eval(delta / (two * phi_b))?
        } else {
            0
        };
        let second = f2s.eval(delta / two)?;
        Ok(first.max(second))
    }));

    // sanity-sample the certified promise: perturbation within delta from
    // sigma(delta, b) onward
    for k in 0..6 {
        let delta = c::<F>(2.0).powi(-k);
        let b = F::one();
        let start = sigma.eval(delta, b)?;
        for off in [0u64, 1, 5, 20] {
            let n = start.saturating_add(off);
            let pert = nu(n) * phi.eval(b) + l(n);
            if pert > delta + c::<F>(1e-9) {
                return Err(Error::Parameter(format!(
                    "rates do not certify the perturbation at n = {n}: {} > {}",
                    pert.to_f64().unwrap_or(f64::NAN),
                    delta.to_f64().unwrap_or(f64::NAN)
                )));
            }
        }
    }

    let base2 = base.clone();
    let q2 = q.clone();
    let phi2 = phi.clone();
    let nu2 = nu.clone();
    let l2 = l.clone();
    let dir = Vector::basis(dim, 0);
    Ok(MappingFamily {
        apply: Arc::new(move |n, x: &Vector<F>| {
            let dist = space_probe.distance(x, &q2);
            let bump = nu2(n) * phi2.eval(dist) + l2(n);
            base2.apply(n, x).axpy(bump, &dir)
        }),
        psi: base.psi.clone(),
        sigma,
        kind: ContractKind::QuasiRelative,
        q: Some(q),
        fix_residual_rate: Some(f2),
        label: format!("total_async({})", base.label()),
    })
}

/// Family of approximants of a weakly contractive `a`, quasi-contractive
/// relative to `a`'s fixpoint with the b-independent modulus
/// `sigma(delta) = max{f1(delta/4), f2(delta/4c1), f3(delta/4), f4(delta/4)}`
/// where `c1 >= g(||q||)`. Realised as
/// `A_n x = a(x) + (h_n c1 + delta_n + nu_n) e_0`.
#[allow(clippy::too_many_arguments)]
pub fn make_approx_family<F: Real>(
    a: &MappingFamily<F>,
    h: SeqFn<F>,
    delta_seq: SeqFn<F>,
    nu: SeqFn<F>,
    g: GaugeFunction<F>,
    rates: [ConvergenceRate<F>; 4],
    c1: F,
) -> Result<MappingFamily<F>, Error> {
    if !(c1 > F::zero()) {
        return Err(Error::Parameter("c1 must be positive".into()));
    }
    let q = a.reference()?.clone();
    let dim = q.dim();
    let space_probe = LpSpace::new(dim, c::<F>(2.0))?;
    let qnorm = space_probe.norm(&q);
    if g.eval(qnorm) > c1 + c::<F>(1e-12) {
        return Err(Error::Parameter(format!(
            "c1 = {} does not dominate g(||q||) = {}",
            c1.to_f64().unwrap_or(f64::NAN),
            g.eval(qnorm).to_f64().unwrap_or(f64::NAN)
        )));
    }
    let four = c::<F>(4.0);
    let [f1, f2, f3, f4] = rates;
    let f2_for_residual = f2.clone();
    let f3_for_residual = f3.clone();
    let f4_for_residual = f4.clone();
    let sigma = ContractivityModulus::from_delta_fn(move |delta: F| {
        let quarter = delta / four;
        let m = f1.eval(quarter)?
            .max(f2.eval(quarter / c1)?)
            .max(f3.eval(quarter)?)
            .max(f4.eval(quarter)?);
        Ok(m)
    });
    let residual_rate = ConvergenceRate::from_fn(
        "approx_family_residual",
        Arc::new(move |delta: F| {
            let quarter = delta / four;
            Ok(f2_for_residual
                .eval(quarter / c1)?
                .max(f3_for_residual.eval(quarter)?)
                .max(f4_for_residual.eval(quarter)?))
        }),
    );

    let a2 = a.clone();
    let dir = Vector::basis(dim, 0);
    Ok(MappingFamily {
        apply: Arc::new(move |n, x: &Vector<F>| {
            let bump = h(n) * c1 + delta_seq(n) + nu(n);
            a2.apply(n, x).axpy(bump, &dir)
        }),
        psi: a.psi.clone(),
        sigma,
        kind: ContractKind::QuasiRelative,
        q: Some(q),
        fix_residual_rate: Some(residual_rate),
        label: format!("approx({})", a.label()),
    })
}

/// d-weakly contractive map `A x = q + (1-k)(x - q)` in the `p = 2` model,
/// with gauge `psi(t) = k t^2`: the pairing satisfies
/// `<Ax - q, J(x - q)> = ||x-q||^2 - psi(||x-q||)` exactly.
pub fn make_dweak<F: Real>(k: F, q: Vector<F>) -> Result<MappingFamily<F>, Error> {
    if !(k > F::zero() && k <= F::one()) {
        return Err(Error::Parameter(format!(
            "d-weak factor k = {} must lie in (0, 1]",
            k.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let q2 = q.clone();
    let one_minus = F::one() - k;
    Ok(MappingFamily {
        apply: Arc::new(move |_, x| q2.add(&x.sub(&q2).scale(one_minus))),
        psi: GaugeFunction::quadratic(k),
        sigma: ContractivityModulus::zero(),
        kind: ContractKind::DWeakQuasiRelative,
        q: Some(q),
        fix_residual_rate: Some(ConvergenceRate::zero()),
        label: format!("dweak(k={k})"),
    })
}
