//! Convex sets, metric projections (the sunny nonexpansive retractions of
//! the p = 2 model), the quantitative Hausdorff predicate and the
//! two-retraction closeness threshold.
//!
//! Sunny nonexpansive retractions are realised as Hilbert-space metric
//! projections, so retraction-based operations demand `p = 2`; the
//! duality-map machinery stays available for general `p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::{c, Real};
use crate::spaces::{pairing, DualityContinuityModulus, LpSpace, Vector};

/// Axis-aligned box, ball, or halfspace `{x : <normal, x> <= offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ConvexSet<F> {
    Box { lo: Vec<F>, hi: Vec<F> },
    Ball { center: Vector<F>, radius: F },
    Halfspace { normal: Vector<F>, offset: F },
}

impl<F: Real> ConvexSet<F> {
    pub fn new_box(lo: Vec<F>, hi: Vec<F>) -> Result<Self, Error> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Shape("box bounds must have equal nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(&a, &b)| !(a <= b)) {
            return Err(Error::Parameter("box needs lo <= hi in every coordinate".into()));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn new_ball(center: Vector<F>, radius: F) -> Result<Self, Error> {
        if !(radius >= F::zero()) {
            return Err(Error::Parameter("ball radius must be nonnegative".into()));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn new_halfspace(normal: Vector<F>, offset: F) -> Result<Self, Error> {
        if normal.coords.iter().all(|&v| v == F::zero()) {
            return Err(Error::Parameter("halfspace normal must be nonzero".into()));
        }
        Ok(ConvexSet::Halfspace { normal, offset })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.dim(),
            ConvexSet::Halfspace { normal, .. } => normal.dim(),
        }
    }

    /// Membership up to an absolute tolerance, in the Euclidean model.
    pub fn contains(&self, x: &Vector<F>, tol: F) -> bool {
        match self {
            ConvexSet::Box { lo, hi } => x
                .coords
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&a, &b))| v >= a - tol && v <= b + tol),
            ConvexSet::Ball { center, radius } => {
                euclid_norm(&x.sub(center)) <= *radius + tol
            }
            ConvexSet::Halfspace { normal, offset } => {
                pairing(normal, x).map(|p| p <= *offset + tol).unwrap_or(false)
            }
        }
    }

    /// Box inflated by `s` on every side (boxes only).
    pub fn inflate_box(&self, s: F) -> Result<Self, Error> {
        match self {
            ConvexSet::Box { lo, hi } => ConvexSet::new_box(
                lo.iter().map(|&a| a - s).collect(),
                hi.iter().map(|&b| b + s).collect(),
            ),
            _ => Err(Error::NotComputable("inflate_box on a non-box".into())),
        }
    }
}

fn euclid_norm<F: Real>(x: &Vector<F>) -> F {
    let mut acc = F::zero();
    for &v in &x.coords {
        acc = acc + v * v;
    }
    acc.sqrt()
}

/// Metric projection onto the set: per-coordinate clamp for boxes, radial
/// shrink for balls, orthogonal drop for halfspaces. Requires the `p = 2`
/// model, where the projection is the sunny nonexpansive retraction.
pub fn project<F: Real>(
    space: &LpSpace<F>,
    set: &ConvexSet<F>,
    x: &Vector<F>,
) -> Result<Vector<F>, Error> {
    if space.p != c::<F>(2.0) {
        return Err(Error::UnsupportedRetraction {
            p: space.p.to_f64().unwrap_or(f64::NAN),
        });
    }
    if set.dim() != x.dim() {
        return Err(Error::Shape(format!(
            "projecting dim {} point onto dim {} set",
            x.dim(),
            set.dim()
        )));
    }
    Ok(match set {
        ConvexSet::Box { lo, hi } => Vector::new(
            x.coords
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&v, (&a, &b))| v.max(a).min(b))
                .collect(),
        ),
        ConvexSet::Ball { center, radius } => {
            let d = x.sub(center);
            let n = euclid_norm(&d);
            if n <= *radius {
                x.clone()
            } else {
                center.add(&d.scale(*radius / n))
            }
        }
        ConvexSet::Halfspace { normal, offset } => {
            let p = pairing(normal, x)?;
            if p <= *offset {
                x.clone()
            } else {
                let nn = pairing(normal, normal)?;
                x.sub(&normal.scale((p - *offset) / nn))
            }
        }
    })
}

/// A sunny nonexpansive retraction onto a convex target in the `p = 2`
/// model.
#[derive(Debug, Clone)]
pub struct Retraction<F> {
    target: ConvexSet<F>,
}

impl<F: Real> Retraction<F> {
    pub fn new(space: &LpSpace<F>, target: ConvexSet<F>) -> Result<Self, Error> {
        if space.p != c::<F>(2.0) {
            return Err(Error::UnsupportedRetraction {
                p: space.p.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { target })
    }

    pub fn target(&self) -> &ConvexSet<F> {
        &self.target
    }

    pub fn apply(&self, space: &LpSpace<F>, x: &Vector<F>) -> Result<Vector<F>, Error> {
        project(space, &self.target, x)
    }
}

/// Hausdorff distance between two boxes or two balls (closed forms):
/// boxes use the per-coordinate endpoint deviation
/// `max_i max{|lo_i - lo'_i|, |hi_i - hi'_i|}`; balls use
/// `||c - c'|| + |r - r'|`.
pub fn hausdorff_distance<F: Real>(p: &ConvexSet<F>, q: &ConvexSet<F>) -> Result<F, Error> {
    match (p, q) {
        (ConvexSet::Box { lo: la, hi: ha }, ConvexSet::Box { lo: lb, hi: hb }) => {
            if la.len() != lb.len() {
                return Err(Error::Shape("boxes of different dimension".into()));
            }
            let mut m = F::zero();
            for i in 0..la.len() {
                m = m.max((la[i] - lb[i]).abs()).max((ha[i] - hb[i]).abs());
            }
            Ok(m)
        }
        (
            ConvexSet::Ball {
                center: ca,
                radius: ra,
            },
            ConvexSet::Ball {
                center: cb,
                radius: rb,
            },
        ) => {
            if ca.dim() != cb.dim() {
                return Err(Error::Shape("balls of different dimension".into()));
            }
            Ok(euclid_norm(&ca.sub(cb)) + (*ra - *rb).abs())
        }
        _ => Err(Error::NotComputable(
            "no closed-form Hausdorff distance for this pair of sets".into(),
        )),
    }
}

/// Controls for the sampling side of [`hstar_check`].
#[derive(Debug, Clone)]
pub struct HStarOptions {
    /// Per-axis grid resolution is `a / grid_divisor`, capped in total.
    pub grid_divisor: f64,
    /// Hard cap on grid samples per set.
    pub grid_cap: usize,
    /// Additional seeded random samples per set.
    pub random_samples: usize,
    pub seed: u64,
}

impl Default for HStarOptions {
    fn default() -> Self {
        Self {
            grid_divisor: 10.0,
            grid_cap: 4096,
            random_samples: 64,
            seed: 0x5eed,
        }
    }
}

/// The quantitative Hausdorff predicate `H*[P, Q, a]`: every sampled point
/// of each set lies within `a` of the other set, with distances measured
/// through the metric projection. Samples cover vertices / extreme points
/// (exact for box pairs, where the distance function is convex), a grid at
/// resolution `a/10` (capped), and seeded random points. For box/box and
/// ball/ball pairs the closed-form Hausdorff distance is also required to
/// be `<= a`.
pub fn hstar_check<F: Real>(
    space: &LpSpace<F>,
    p: &ConvexSet<F>,
    q: &ConvexSet<F>,
    a: F,
    opts: &HStarOptions,
) -> Result<bool, Error> {
    if !(a > F::zero()) {
        return Err(Error::Parameter("hstar threshold must be positive".into()));
    }
    if let Ok(h) = hausdorff_distance(p, q) {
        if h > a {
            return Ok(false);
        }
    }
    Ok(one_sided(space, p, q, a, opts)? && one_sided(space, q, p, a, opts)?)
}

fn one_sided<F: Real>(
    space: &LpSpace<F>,
    from: &ConvexSet<F>,
    to: &ConvexSet<F>,
    a: F,
    opts: &HStarOptions,
) -> Result<bool, Error> {
    for x in sample_points(from, a, opts) {
        let y = project(space, to, &x)?;
        if euclid_norm(&x.sub(&y)) > a {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sample_points<F: Real>(set: &ConvexSet<F>, a: F, opts: &HStarOptions) -> Vec<Vector<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let dim = set.dim();
    let mut points = Vec::new();
    match set {
        ConvexSet::Box { lo, hi } => {
            // all vertices (capped), where the distance to any convex set
            // attains its maximum over the box
            if dim <= 12 {
                for mask in 0..(1usize << dim) {
                    let coords = (0..dim)
                        .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                        .collect();
                    points.push(Vector::new(coords));
                }
            }
            // grid at resolution a / grid_divisor, capped in total
            let step = a / c::<F>(opts.grid_divisor);
            let mut counts: Vec<usize> = (0..dim)
                .map(|i| {
                    let w = hi[i] - lo[i];
                    let wanted = (w / step).to_f64().unwrap_or(0.0).ceil().min(1e9);
                    (wanted as usize).max(1) + 1
                })
                .collect();
            let sat_product =
                |cs: &[usize]| cs.iter().fold(1usize, |a, &b| a.saturating_mul(b));
            let mut total = sat_product(&counts);
            while total > opts.grid_cap && counts.iter().any(|&n| n > 2) {
                for n in counts.iter_mut() {
                    *n = (*n / 2).max(2);
                }
                total = sat_product(&counts);
            }
            if total > opts.grid_cap {
                // high dimension: vertices and random samples must do
                counts = vec![1; dim];
            }
            let mut idx = vec![0usize; dim];
            'outer: loop {
                let coords = (0..dim)
                    .map(|i| {
                        let t = if counts[i] <= 1 {
                            F::zero()
                        } else {
                            c::<F>(idx[i] as f64 / (counts[i] - 1) as f64)
                        };
                        lo[i] + (hi[i] - lo[i]) * t
                    })
                    .collect();
                points.push(Vector::new(coords));
                for i in 0..dim {
                    idx[i] += 1;
                    if idx[i] < counts[i] {
                        continue 'outer;
                    }
                    idx[i] = 0;
                }
                break;
            }
            for _ in 0..opts.random_samples {
                let coords = (0..dim)
                    .map(|i| {
                        let t = c::<F>(rng.gen_range(0.0..1.0));
                        lo[i] + (hi[i] - lo[i]) * t
                    })
                    .collect();
                points.push(Vector::new(coords));
            }
        }
        ConvexSet::Ball { center, radius } => {
            points.push(center.clone());
            for i in 0..dim {
                for sign in [F::one(), -F::one()] {
                    let mut v = center.clone();
                    v.coords[i] = v.coords[i] + sign * *radius;
                    points.push(v);
                }
            }
            for _ in 0..opts.random_samples.max(2 * dim) {
                let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n == 0.0 {
                    continue;
                }
                let scale: f64 = rng.gen_range(0.0..1.0);
                let coords = (0..dim)
                    .map(|i| center.coords[i] + *radius * c::<F>(dir[i] / n * scale))
                    .collect();
                points.push(Vector::new(coords));
                // boundary point in the same direction
                let coords = (0..dim)
                    .map(|i| center.coords[i] + *radius * c::<F>(dir[i] / n))
                    .collect();
                points.push(Vector::new(coords));
            }
        }
        ConvexSet::Halfspace { normal, offset } => {
            // sample around the boundary hyperplane near the origin
            let nn = pairing(normal, normal).unwrap_or_else(|_| F::one());
            let base = normal.scale(*offset / nn);
            points.push(base.clone());
            for _ in 0..opts.random_samples.max(8) {
                let coords: Vec<F> = (0..dim).map(|_| c::<F>(rng.gen_range(-2.0..2.0))).collect();
                let cand = base.add(&Vector::new(coords));
                let p = pairing(normal, &cand).unwrap_or_else(|_| F::zero());
                if p <= *offset {
                    points.push(cand);
                }
            }
        }
    }
    points
}

/// Threshold of the quantitative two-retraction lemma: for retractions
/// onto `E_1`, `E_2` with `||Q_i 0|| <= d` and points `||x|| <= b`,
/// `H*[E_1, E_2, a]` with `a = min{1, omega(R, eps/R)}`, `R = 2(2b+d)+1`,
/// forces `||Q_1 x - Q_2 x||^2 <= eps`.
pub fn sunnyhaus_threshold<F: Real>(
    omega: &DualityContinuityModulus<F>,
    b: F,
    d: F,
    eps: F,
) -> (F, F) {
    let two = c::<F>(2.0);
    let r = two * (two * b + d) + F::one();
    let a = F::one().min(omega.eval(r, eps / r));
    (r, a)
}
