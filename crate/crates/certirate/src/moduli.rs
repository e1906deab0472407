//! Proof-theoretic moduli as first-class values.
//!
//! A rate of convergence maps an accuracy `eps` to an index from which the
//! measured quantity stays below `eps`; a rate of divergence witnesses
//! `sum alpha_n = inf` by producing, for `(N, x)`, an index `k >= N` with
//! `sum_{n=N}^{k} alpha_n > x`; a contractivity modulus `sigma(delta, b)`
//! produces the index from which a mapping family satisfies its contractive
//! inequality up to slack `delta` on the `b`-ball. All of them are total
//! callables realised in floating point, with natural-index outputs in
//! saturating 64-bit arithmetic.
//!
//! Monotonicity of user-supplied moduli is not trusted: [`ConvergenceRate`]
//! and [`ContractivityModulus`] support a monotone closure over a fixed
//! dyadic grid spanning `[2^-40, 2^16]`. The closure dominates the raw
//! modulus pointwise (so it stays a valid modulus), is monotone across grid
//! cells, and reproduces already-monotone moduli exactly.

use std::sync::Arc;

use crate::error::Error;
use crate::scalar::{c, ceil_index, index_to_scalar, Index, Real};

pub type ScalarFn<F> = Arc<dyn Fn(F) -> F + Send + Sync>;
pub type SeqFn<F> = Arc<dyn Fn(Index) -> F + Send + Sync>;

/// Smallest exponent of the dyadic closure grid.
pub const GRID_MIN_EXP: i32 = -40;
/// Largest exponent of the dyadic closure grid.
pub const GRID_MAX_EXP: i32 = 16;

fn dyadic_grid<F: Real>() -> Vec<F> {
    (GRID_MIN_EXP..=GRID_MAX_EXP)
        .map(|k| c::<F>(2.0).powi(k))
        .collect()
}

/// Index of the smallest grid point `>= x`, clamping to the endpoints.
fn grid_ceil_idx<F: Real>(grid: &[F], x: F) -> usize {
    if x <= grid[0] {
        return 0;
    }
    match grid.iter().position(|&g| g >= x) {
        Some(i) => i,
        None => grid.len() - 1,
    }
}

/// Index of the largest grid point `<= x`, clamping to the endpoints.
fn grid_floor_idx<F: Real>(grid: &[F], x: F) -> usize {
    if x >= grid[grid.len() - 1] {
        return grid.len() - 1;
    }
    match grid.iter().rposition(|&g| g <= x) {
        Some(i) => i,
        None => 0,
    }
}

// ---------------------------------------------------------------------------
// Gauge functions
// ---------------------------------------------------------------------------

/// The gauge `psi`: nondecreasing, `psi(0) = 0`, positive on `(0, inf)`.
///
/// Optionally carries a closed-form antiderivative `Psi` of `1/psi` with
/// base point fixed at `t = 1`; only differences `Psi(hi) - Psi(lo)` are
/// ever used, so the base point cancels.
#[derive(Clone)]
pub struct GaugeFunction<F> {
    eval: ScalarFn<F>,
    antideriv: Option<ScalarFn<F>>,
    label: String,
}

impl<F: Real> GaugeFunction<F> {
    pub fn new(label: impl Into<String>, eval: ScalarFn<F>) -> Self {
        Self {
            eval,
            antideriv: None,
            label: label.into(),
        }
    }

    pub fn with_antideriv(
        label: impl Into<String>,
        eval: ScalarFn<F>,
        antideriv: ScalarFn<F>,
    ) -> Self {
        Self {
            eval,
            antideriv: Some(antideriv),
            label: label.into(),
        }
    }

    /// `psi(t) = k t`, with `Psi(x) = ln(x) / k`.
    pub fn linear(k: F) -> Self {
        let k2 = k;
        Self::with_antideriv(
            format!("linear(k={k})"),
            Arc::new(move |t| k * t),
            Arc::new(move |x: F| x.ln() / k2),
        )
    }

    /// `psi(t) = coeff * t^s`, with `Psi(x) = (x^(1-s) - 1) / (coeff (1-s))`
    /// for `s != 1`.
    pub fn power(coeff: F, s: F) -> Self {
        let label = format!("power(coeff={coeff}, s={s})");
        if s == F::one() {
            return Self::linear(coeff);
        }
        let one = F::one();
        Self::with_antideriv(
            label,
            Arc::new(move |t: F| coeff * t.powf(s)),
            Arc::new(move |x: F| (x.powf(one - s) - one) / (coeff * (one - s))),
        )
    }

    /// `psi(t) = k t^2`, with `Psi(x) = (1 - 1/x) / k`.
    pub fn quadratic(k: F) -> Self {
        let k2 = k;
        let one = F::one();
        Self::with_antideriv(
            format!("quadratic(k={k})"),
            Arc::new(move |t| k * (t * t)),
            Arc::new(move |x: F| (one - one / x) / k2),
        )
    }

    /// `psi(t) = t^2 / (1 + t)`, with `Psi(x) = ln(x) - 1/x + 1`.
    pub fn rational_quad() -> Self {
        let one = F::one();
        Self::with_antideriv(
            "rational_quad".to_string(),
            Arc::new(move |t: F| t * t / (one + t)),
            Arc::new(move |x: F| x.ln() - one / x + one),
        )
    }

    /// Piecewise-linear gauge through `(x, y)` points, extended by the last
    /// slope on the right and linearly to the origin on the left.
    pub fn table(mut points: Vec<(F, F)>) -> Result<Self, Error> {
        if points.is_empty() {
            return Err(Error::Parameter("table gauge needs at least one point".into()));
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite table abscissae"));
        for w in points.windows(2) {
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidGauge(
                    "table gauge values must be nondecreasing".into(),
                ));
            }
        }
        let pts = points.clone();
        let eval = move |t: F| -> F {
            if t <= F::zero() {
                return F::zero();
            }
            let (x0, y0) = pts[0];
            if t <= x0 {
                return if x0 > F::zero() { y0 * t / x0 } else { y0 };
            }
            for w in pts.windows(2) {
                let (xa, ya) = w[0];
                let (xb, yb) = w[1];
                if t <= xb {
                    return ya + (yb - ya) * (t - xa) / (xb - xa);
                }
            }
            let (xl, yl) = pts[pts.len() - 1];
            if pts.len() >= 2 {
                let (xa, ya) = pts[pts.len() - 2];
                let slope = (yl - ya) / (xl - xa);
                yl + slope.max(F::zero()) * (t - xl)
            } else {
                yl
            }
        };
        Ok(Self::new("table", Arc::new(eval)))
    }

    pub fn eval(&self, t: F) -> F {
        (self.eval)(t)
    }

    pub fn antideriv(&self) -> Option<&ScalarFn<F>> {
        self.antideriv.as_ref()
    }

    /// Drops the closed-form antiderivative, forcing quadrature.
    pub fn without_antideriv(&self) -> Self {
        Self {
            eval: self.eval.clone(),
            antideriv: None,
            label: self.label.clone(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The transformed gauge `t -> 2 psi(sqrt t)` used by the duality-based
    /// rate (squared residuals satisfy the recursion with this gauge).
    pub fn dweak_bar(&self) -> Self {
        let inner = self.eval.clone();
        let two = c::<F>(2.0);
        Self::new(
            format!("dweak_bar({})", self.label),
            Arc::new(move |t: F| two * inner(t.sqrt())),
        )
    }

    /// Sampled admissibility check: nondecreasing and positive on a grid,
    /// and (when present) the antiderivative differentiates to `1/psi` to
    /// relative tolerance `1e-6`.
    pub fn validate(&self) -> Result<(), Error> {
        let grid = dyadic_grid::<F>();
        let mut prev = F::zero();
        for &t in &grid {
            let v = self.eval(t);
            if !v.is_finite() {
                return Err(Error::InvalidGauge(format!(
                    "psi not finite at {}",
                    t.to_f64().unwrap_or(f64::NAN)
                )));
            }
            if v <= F::zero() {
                return Err(Error::InvalidGauge(format!(
                    "psi not positive at {}",
                    t.to_f64().unwrap_or(f64::NAN)
                )));
            }
            if v < prev {
                return Err(Error::InvalidGauge(format!(
                    "psi decreases at {}",
                    t.to_f64().unwrap_or(f64::NAN)
                )));
            }
            prev = v;
        }
        if let Some(psi_big) = &self.antideriv {
            // central difference at moderate sample points
            let rel_tol = c::<F>(1e-6).max(F::epsilon().sqrt() * c::<F>(64.0));
            for k in -8..=8 {
                let t = c::<F>(2.0).powi(k);
                let h = t * c::<F>(1e-5).max(F::epsilon().sqrt());
                let deriv = (psi_big(t + h) - psi_big(t - h)) / (h + h);
                let expect = F::one() / self.eval(t);
                let err = (deriv - expect).abs() / expect.abs().max(F::min_positive_value());
                if err > rel_tol {
                    return Err(Error::InvalidGauge(format!(
                        "antiderivative mismatch at t={}: d(Psi)={} vs 1/psi={}",
                        t.to_f64().unwrap_or(f64::NAN),
                        deriv.to_f64().unwrap_or(f64::NAN),
                        expect.to_f64().unwrap_or(f64::NAN),
                    )));
                }
            }
        }
        Ok(())
    }
}

impl<F> std::fmt::Debug for GaugeFunction<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaugeFunction")
            .field("label", &self.label)
            .field("has_antideriv", &self.antideriv.is_some())
            .finish()
    }
}

// ---------------------------------------------------------------------------
// Convergence rates
// ---------------------------------------------------------------------------

type RateFn<F> = Arc<dyn Fn(F) -> Result<Index, Error> + Send + Sync>;

/// A rate of convergence: `eps -> index` from which the quantity stays
/// below `eps`, together with human-readable provenance.
#[derive(Clone)]
pub struct ConvergenceRate<F> {
    eval: RateFn<F>,
    provenance: String,
}

impl<F: Real> ConvergenceRate<F> {
    pub fn from_fn(provenance: impl Into<String>, eval: RateFn<F>) -> Self {
        Self {
            eval,
            provenance: provenance.into(),
        }
    }

    /// Wraps an index-valued closure that cannot fail.
    pub fn from_index_fn(
        provenance: impl Into<String>,
        f: impl Fn(F) -> Index + Send + Sync + 'static,
    ) -> Self {
        Self::from_fn(provenance, Arc::new(move |eps| Ok(f(eps))))
    }

    /// Wraps a float-valued modulus, rounding up with saturation.
    pub fn from_float_fn(
        provenance: impl Into<String>,
        f: impl Fn(F) -> F + Send + Sync + 'static,
    ) -> Self {
        Self::from_fn(provenance, Arc::new(move |eps| ceil_index(f(eps))))
    }

    /// The constantly-zero rate.
    pub fn zero() -> Self {
        Self::from_index_fn("zero", |_| 0)
    }

    /// `eps -> ceil(scale / eps)`.
    pub fn ceil_inv(scale: F) -> Self {
        Self::from_float_fn(format!("ceil({scale}/eps)"), move |eps| scale / eps)
    }

    /// `eps -> ceil(eps^(-1/2))`.
    pub fn ceil_inv_sqrt() -> Self {
        Self::from_float_fn("ceil(eps^-1/2)", |eps: F| F::one() / eps.sqrt())
    }

    pub fn eval(&self, eps: F) -> Result<Index, Error> {
        if !(eps > F::zero()) {
            return Err(Error::Domain(format!(
                "rate evaluated at eps = {} <= 0",
                eps.to_f64().unwrap_or(f64::NAN)
            )));
        }
        (self.eval)(eps)
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }
}

impl<F> std::fmt::Debug for ConvergenceRate<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvergenceRate")
            .field("provenance", &self.provenance)
            .finish()
    }
}

// ---------------------------------------------------------------------------
// Divergence rates
// ---------------------------------------------------------------------------

type DivFn<F> = Arc<dyn Fn(Index, F) -> Result<Index, Error> + Send + Sync>;

/// A rate of divergence for a positive series `sum alpha_n`: `(N, x)` maps
/// to an index `k >= N` with `sum_{n=N}^{k} alpha_n > x`.
#[derive(Clone)]
pub struct DivergenceRate<F> {
    eval: DivFn<F>,
    label: String,
}

impl<F: Real> DivergenceRate<F> {
    pub fn from_fn(label: impl Into<String>, eval: DivFn<F>) -> Self {
        Self {
            eval,
            label: label.into(),
        }
    }

    pub fn eval(&self, start: Index, x: F) -> Result<Index, Error> {
        let k = (self.eval)(start, x)?;
        Ok(k.max(start))
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<F> std::fmt::Debug for DivergenceRate<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DivergenceRate").field("label", &self.label).finish()
    }
}

/// `r(N, x) = ceil(x + N)` for the all-ones step sequence.
pub fn divergence_constant_one<F: Real>() -> DivergenceRate<F> {
    DivergenceRate::from_fn("ceil(x + N)", Arc::new(|start: Index, x: F| {
        if x <= F::zero() {
            return Ok(start);
        }
        let shifted = x + index_to_scalar::<F>(start);
        ceil_index(shifted)
    }))
}

/// Direct-summation divergence rate: the least `k >= N` with
/// `sum_{n=N}^{k} alpha_n > x`, scanning at most `cap` terms.
pub fn divergence_from_partial_sums<F: Real>(
    alpha: SeqFn<F>,
    cap: Index,
) -> DivergenceRate<F> {
    DivergenceRate::from_fn(
        format!("partial_sums(cap={cap})"),
        Arc::new(move |start: Index, x: F| {
            let mut acc = F::zero();
            let mut n = start;
            loop {
                let a = alpha(n);
                if !(a > F::zero()) {
                    return Err(Error::Parameter(format!(
                        "step sequence not positive at n = {n}"
                    )));
                }
                acc = acc + a;
                if acc > x {
                    return Ok(n);
                }
                if n - start >= cap {
                    return Err(Error::DivergenceCap {
                        reached: n,
                        target: x.to_f64().unwrap_or(f64::NAN),
                    });
                }
                n = n.saturating_add(1);
            }
        }),
    )
}

/// Closed-form divergence rate for the harmonic steps `alpha_n = 1/(n+1)`,
/// via the integral lower bound `sum_{m=N+1}^{k+1} 1/m >= ln((k+2)/(N+1))`.
pub fn divergence_harmonic_closed<F: Real>() -> DivergenceRate<F> {
    DivergenceRate::from_fn("harmonic_closed", Arc::new(|start: Index, x: F| {
        if x <= F::zero() {
            return Ok(start);
        }
        let n1 = index_to_scalar::<F>(start) + F::one();
        let k = ceil_index(n1 * x.exp())?;
        Ok(k.saturating_sub(1).max(start))
    }))
}

// ---------------------------------------------------------------------------
// Contractivity moduli
// ---------------------------------------------------------------------------

type SigmaFn<F> = Arc<dyn Fn(F, F) -> Result<Index, Error> + Send + Sync>;

/// A modulus of asymptotic weak contractivity: `(delta, b)` maps to the
/// index from which the family's inequality holds with slack `delta` on the
/// `b`-ball around the reference point.
#[derive(Clone)]
pub struct ContractivityModulus<F> {
    eval: SigmaFn<F>,
    b_independent: bool,
}

impl<F: Real> ContractivityModulus<F> {
    pub fn from_fn(eval: SigmaFn<F>) -> Self {
        Self {
            eval,
            b_independent: false,
        }
    }

    /// Modulus depending only on the slack argument.
    pub fn from_delta_fn(
        f: impl Fn(F) -> Result<Index, Error> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(move |delta, _| f(delta)),
            b_independent: true,
        }
    }

    pub fn zero() -> Self {
        Self {
            eval: Arc::new(|_, _| Ok(0)),
            b_independent: true,
        }
    }

    pub fn eval(&self, delta: F, b: F) -> Result<Index, Error> {
        if !(delta > F::zero()) {
            return Err(Error::Domain(format!(
                "contractivity modulus at delta = {} <= 0",
                delta.to_f64().unwrap_or(f64::NAN)
            )));
        }
        (self.eval)(delta, b)
    }

    pub fn b_independent(&self) -> bool {
        self.b_independent
    }
}

impl<F> std::fmt::Debug for ContractivityModulus<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContractivityModulus")
            .field("b_independent", &self.b_independent)
            .finish()
    }
}

// ---------------------------------------------------------------------------
// Monotone closure
// ---------------------------------------------------------------------------

/// Monotone closure of a convergence rate over the dyadic grid.
///
/// The closed rate is `max(raw(eps), M(ceil_grid(eps)))` where `M` is the
/// suffix maximum of the raw values over grid points above `eps`. It
/// dominates the raw rate pointwise (hence stays valid), is nonincreasing
/// in `eps` across grid cells, and equals the raw rate wherever the raw
/// rate is already nonincreasing. Raw values are sampled eagerly, so a
/// non-finite modulus output surfaces here as an invalid-modulus error.
pub fn monotone_closure_rate<F: Real>(
    rate: &ConvergenceRate<F>,
) -> Result<ConvergenceRate<F>, Error> {
    let grid = dyadic_grid::<F>();
    let mut vals = Vec::with_capacity(grid.len());
    for &g in &grid {
        vals.push(rate.eval(g)?);
    }
    let mut suffix = vals.clone();
    for i in (0..suffix.len().saturating_sub(1)).rev() {
        suffix[i] = suffix[i].max(suffix[i + 1]);
    }
    let raw = rate.clone();
    let provenance = format!("closure({})", rate.provenance());
    let grid2 = grid;
    Ok(ConvergenceRate::from_fn(
        provenance,
        Arc::new(move |eps: F| {
            let i = grid_ceil_idx(&grid2, eps);
            Ok(raw.eval(eps)?.max(suffix[i]))
        }),
    ))
}

/// Monotone closure of a contractivity modulus: nonincreasing in `delta`,
/// nondecreasing in `b`, dominating the raw modulus. For `b`-independent
/// moduli the closure happens on the `delta` axis alone and preserves the
/// flag.
pub fn monotone_closure_sigma<F: Real>(
    sigma: &ContractivityModulus<F>,
) -> Result<ContractivityModulus<F>, Error> {
    let grid = dyadic_grid::<F>();
    let n = grid.len();
    if sigma.b_independent() {
        let b_probe = F::one();
        let mut vals = Vec::with_capacity(n);
        for &g in &grid {
            vals.push(sigma.eval(g, b_probe)?);
        }
        let mut suffix = vals.clone();
        for i in (0..n - 1).rev() {
            suffix[i] = suffix[i].max(suffix[i + 1]);
        }
        let raw = sigma.clone();
        let grid2 = grid;
        return Ok(ContractivityModulus {
            eval: Arc::new(move |delta: F, b: F| {
                let i = grid_ceil_idx(&grid2, delta);
                Ok(raw.eval(delta, b)?.max(suffix[i]))
            }),
            b_independent: true,
        });
    }
    // quadrant maxima: M[i][j] = max over delta' >= grid[i], b' <= grid[j]
    let mut table = vec![vec![0 as Index; n]; n];
    for i in 0..n {
        for j in 0..n {
            table[i][j] = sigma.eval(grid[i], grid[j])?;
        }
    }
    let mut quad = table.clone();
    for i in (0..n).rev() {
        for j in 0..n {
            let mut m = table[i][j];
            if i + 1 < n {
                m = m.max(quad[i + 1][j]);
            }
            if j > 0 {
                m = m.max(quad[i][j - 1]);
            }
            quad[i][j] = m;
        }
    }
    let raw = sigma.clone();
    let grid2 = grid;
    Ok(ContractivityModulus {
        eval: Arc::new(move |delta: F, b: F| {
            let i = grid_ceil_idx(&grid2, delta);
            let j = grid_floor_idx(&grid2, b);
            Ok(raw.eval(delta, b)?.max(quad[i][j]))
        }),
        b_independent: false,
    })
}

// ---------------------------------------------------------------------------
// Step sequences
// ---------------------------------------------------------------------------

/// Step sizes of a Mann scheme: `alpha(n)` in `(0, cap]` together with a
/// rate of divergence for their sum.
#[derive(Clone)]
pub struct StepSequence<F> {
    alpha: SeqFn<F>,
    cap: F,
    divergence: DivergenceRate<F>,
    label: String,
}

impl<F: Real> StepSequence<F> {
    pub fn from_parts(
        label: impl Into<String>,
        alpha: SeqFn<F>,
        cap: F,
        divergence: DivergenceRate<F>,
    ) -> Result<Self, Error> {
        if !(cap > F::zero()) {
            return Err(Error::Parameter("step cap must be positive".into()));
        }
        Ok(Self {
            alpha,
            cap,
            divergence,
            label: label.into(),
        })
    }

    /// `alpha_n = 1` with the divergence rate `ceil(x + N)`.
    pub fn ones() -> Self {
        Self {
            alpha: Arc::new(|_| F::one()),
            cap: F::one(),
            divergence: divergence_constant_one(),
            label: "ones".into(),
        }
    }

    /// Constant steps `alpha_n = a` with the exact closed-form divergence
    /// rate `N + floor(x / a)`.
    pub fn constant(a: F) -> Result<Self, Error> {
        if !(a > F::zero()) {
            return Err(Error::Parameter("constant step must be positive".into()));
        }
        let div = DivergenceRate::from_fn(
            format!("constant({a})"),
            Arc::new(move |start: Index, x: F| {
                if x <= F::zero() {
                    return Ok(start);
                }
                let extra = ceil_index((x / a).floor())?;
                Ok(start.saturating_add(extra))
            }),
        );
        Ok(Self {
            alpha: Arc::new(move |_| a),
            cap: a,
            divergence: div,
            label: format!("constant({a})"),
        })
    }

    /// Harmonic steps `alpha_n = 1/(n+1)` with a brute-force divergence
    /// rate capped at `cap` scanned terms.
    pub fn harmonic(cap: Index) -> Self {
        let alpha: SeqFn<F> = Arc::new(|n: Index| F::one() / (index_to_scalar::<F>(n) + F::one()));
        let div = divergence_from_partial_sums(alpha.clone(), cap);
        Self {
            alpha,
            cap: F::one(),
            divergence: div,
            label: "harmonic".into(),
        }
    }

    pub fn alpha(&self, n: Index) -> F {
        (self.alpha)(n)
    }

    pub fn alpha_fn(&self) -> SeqFn<F> {
        self.alpha.clone()
    }

    pub fn cap(&self) -> F {
        self.cap
    }

    pub fn divergence(&self) -> &DivergenceRate<F> {
        &self.divergence
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Partial sum `sum_{i=0}^{m-1} alpha_i` (the first `m` terms).
    pub fn partial_sum(&self, m: Index) -> F {
        let mut acc = F::zero();
        for i in 0..m {
            acc = acc + self.alpha(i);
        }
        acc
    }
}

impl<F> std::fmt::Debug for StepSequence<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StepSequence").field("label", &self.label).finish()
    }
}
