//! JSON experiment configuration, schema version `certirate/v1`.
//!
//! A config names a space, a mapping family from the catalog, a step
//! sequence, a scheme and a certificate theorem; the builder assembles the
//! runnable experiment at `f64`. Table-based moduli from configs are
//! untrusted and get monotone-closed before use.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::Arc;

use crate::error::Error;
use crate::geometry::{ConvexSet, HStarOptions, Retraction};
use crate::mappings::{
    make_approx_family, make_dweak, make_strong, make_total_async, make_weak_1d, MappingFamily,
};
use crate::moduli::{
    monotone_closure_rate, ConvergenceRate, GaugeFunction, SeqFn, StepSequence,
};
use crate::rates::{
    dweakly_concrete_rate, dweakly_rate, mann_rate, perturbed_concrete_rate, perturbed_rate,
    simple_rate, PerturbedParams,
};
use crate::scalar::{ceil_index, Index};
use crate::schemes::{SchemeInstance, SchemeVariant};
use crate::spaces::{tau_for_lp, DualityContinuityModulus, LpSpace, Vector};

pub const SCHEMA_VERSION: &str = "certirate/v1";
const DEFAULT_HARMONIC_CAP: Index = 10_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub n_max: Index,
    #[serde(default)]
    pub eps_grid: EpsGridSpec,
    pub space: SpaceSpec,
    pub family: FamilySpec,
    pub steps: StepsSpec,
    pub scheme: SchemeSpec,
    pub certificate: CertificateSpec,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dim: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsGridSpec {
    /// `scale * 2^0, ..., scale * 2^{-(count-1)}`.
    Log2 { scale: f64, count: u32 },
    Explicit { values: Vec<f64> },
}

impl Default for EpsGridSpec {
    fn default() -> Self {
        EpsGridSpec::Log2 {
            scale: 1.0,
            count: 11,
        }
    }
}

impl EpsGridSpec {
    pub fn values(&self) -> Result<Vec<f64>, Error> {
        match self {
            EpsGridSpec::Log2 { scale, count } => {
                if !(*scale > 0.0) || *count == 0 {
                    return Err(Error::Config("log2 grid needs scale > 0, count > 0".into()));
                }
                Ok((0..*count).map(|k| scale * 2.0f64.powi(-(k as i32))).collect())
            }
            EpsGridSpec::Explicit { values } => {
                if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::Config("explicit grid needs positive values".into()));
                }
                Ok(values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeSpec {
    Linear { k: f64 },
    Quadratic { k: f64 },
    Power { coeff: f64, exponent: f64 },
    RationalQuad,
    Table { points: Vec<(f64, f64)> },
}

impl GaugeSpec {
    pub fn build(&self) -> Result<GaugeFunction<f64>, Error> {
        let g = match self {
            GaugeSpec::Linear { k } => GaugeFunction::linear(*k),
            GaugeSpec::Quadratic { k } => GaugeFunction::quadratic(*k),
            GaugeSpec::Power { coeff, exponent } => GaugeFunction::power(*coeff, *exponent),
            GaugeSpec::RationalQuad => GaugeFunction::rational_quad(),
            GaugeSpec::Table { points } => GaugeFunction::table(points.clone())?,
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeqSpec {
    Zero,
    Constant { value: f64 },
    /// `scale / (n + 1)`.
    InvLinear { scale: f64 },
    /// `scale / (n + 1)^2`.
    InvSquare { scale: f64 },
    /// `initial * decay^n`.
    Geometric { initial: f64, decay: f64 },
}

impl SeqSpec {
    pub fn build(&self) -> SeqFn<f64> {
        match self {
            SeqSpec::Zero => Arc::new(|_| 0.0),
            SeqSpec::Constant { value } => {
                let v = *value;
                Arc::new(move |_| v)
            }
            SeqSpec::InvLinear { scale } => {
                let s = *scale;
                Arc::new(move |n| s / (n as f64 + 1.0))
            }
            SeqSpec::InvSquare { scale } => {
                let s = *scale;
                Arc::new(move |n| s / ((n as f64 + 1.0) * (n as f64 + 1.0)))
            }
            SeqSpec::Geometric { initial, decay } => {
                let (a, r) = (*initial, *decay);
                Arc::new(move |n| a * r.powi(n.min(1_000_000) as i32))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSpec {
    Zero,
    /// `ceil(scale / delta)`.
    CeilInv { scale: f64 },
    /// `ceil(delta^{-1/2})`.
    CeilInvSqrt,
    /// Step table `(delta, index)`, monotone-closed before use.
    Table { points: Vec<(f64, u64)> },
}

impl RateSpec {
    pub fn build(&self) -> Result<ConvergenceRate<f64>, Error> {
        match self {
            RateSpec::Zero => Ok(ConvergenceRate::zero()),
            RateSpec::CeilInv { scale } => {
                if !(*scale >= 0.0) {
                    return Err(Error::Config("ceil_inv scale must be nonnegative".into()));
                }
                Ok(ConvergenceRate::ceil_inv(*scale))
            }
            RateSpec::CeilInvSqrt => Ok(ConvergenceRate::ceil_inv_sqrt()),
            RateSpec::Table { points } => {
                if points.is_empty() {
                    return Err(Error::Config("rate table needs points".into()));
                }
                let mut pts = points.clone();
                pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite table deltas"));
                let raw = ConvergenceRate::from_index_fn("table", move |delta: f64| {
                    // value of the largest abscissa <= delta, else the first
                    let mut out = pts[0].1;
                    for &(x, v) in &pts {
                        if x <= delta {
                            out = v;
                        } else {
                            break;
                        }
                    }
                    out
                });
                monotone_closure_rate(&raw)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepsSpec {
    Ones,
    Constant { alpha: f64 },
    Harmonic {
        #[serde(default)]
        cap: Option<Index>,
    },
}

impl StepsSpec {
    pub fn build(&self) -> Result<StepSequence<f64>, Error> {
        match self {
            StepsSpec::Ones => Ok(StepSequence::ones()),
            StepsSpec::Constant { alpha } => StepSequence::constant(*alpha),
            StepsSpec::Harmonic { cap } => {
                Ok(StepSequence::harmonic(cap.unwrap_or(DEFAULT_HARMONIC_CAP)))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Strong {
        k: f64,
        q: Vec<f64>,
    },
    Weak1d {
        gauge: GaugeSpec,
    },
    Dweak {
        k: f64,
        q: Vec<f64>,
    },
    TotalAsync {
        base_k: f64,
        q: Vec<f64>,
        phi: GaugeSpec,
        nu: SeqSpec,
        l: SeqSpec,
        f1: RateSpec,
        f2: RateSpec,
    },
    Approx {
        base_k: f64,
        q: Vec<f64>,
        h: SeqSpec,
        delta: SeqSpec,
        nu: SeqSpec,
        g: GaugeSpec,
        f1: RateSpec,
        f2: RateSpec,
        f3: RateSpec,
        f4: RateSpec,
        c1: f64,
    },
}

impl FamilySpec {
    pub fn build(&self, space: &SpaceSpec) -> Result<MappingFamily<f64>, Error> {
        let check_dim = |q: &Vec<f64>| -> Result<(), Error> {
            if q.len() != space.dim {
                return Err(Error::Config(format!(
                    "reference point dim {} does not match space dim {}",
                    q.len(),
                    space.dim
                )));
            }
            Ok(())
        };
        match self {
            FamilySpec::Strong { k, q } => {
                check_dim(q)?;
                make_strong(*k, Vector::new(q.clone()))
            }
            FamilySpec::Weak1d { gauge } => {
                if space.dim != 1 {
                    return Err(Error::Config("weak_1d needs a 1-dimensional space".into()));
                }
                make_weak_1d(gauge.build()?)
            }
            FamilySpec::Dweak { k, q } => {
                check_dim(q)?;
                make_dweak(*k, Vector::new(q.clone()))
            }
            FamilySpec::TotalAsync {
                base_k,
                q,
                phi,
                nu,
                l,
                f1,
                f2,
            } => {
                check_dim(q)?;
                let base = make_strong(*base_k, Vector::new(q.clone()))?;
                make_total_async(
                    phi.build()?,
                    nu.build(),
                    l.build(),
                    &base,
                    f1.build()?,
                    f2.build()?,
                )
            }
            FamilySpec::Approx {
                base_k,
                q,
                h,
                delta,
                nu,
                g,
                f1,
                f2,
                f3,
                f4,
                c1,
            } => {
                check_dim(q)?;
                let base = make_strong(*base_k, Vector::new(q.clone()))?;
                make_approx_family(
                    &base,
                    h.build(),
                    delta.build(),
                    nu.build(),
                    g.build()?,
                    [f1.build()?, f2.build()?, f3.build()?, f4.build()?],
                    *c1,
                )
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    Picard {
        start: Vec<f64>,
    },
    Mann {
        start: Vec<f64>,
    },
    /// Perturbed Mann over shrinking boxes: `E_n` is the base box inflated
    /// by `a_n / 2` with `a_n = a_initial * a_decay^n`, so the Euclidean
    /// Hausdorff condition `H*[E_n, E, a_n]` holds with margin.
    Perturbed {
        start: Vec<f64>,
        box_lo: Vec<f64>,
        box_hi: Vec<f64>,
        a_initial: f64,
        a_decay: f64,
    },
}

impl SchemeSpec {
    pub fn start(&self) -> &[f64] {
        match self {
            SchemeSpec::Picard { start } | SchemeSpec::Mann { start } => start,
            SchemeSpec::Perturbed { start, .. } => start,
        }
    }

    /// The closeness sequence `a_n` of a perturbed scheme.
    pub fn a_seq(&self) -> Option<SeqFn<f64>> {
        match self {
            SchemeSpec::Perturbed {
                a_initial, a_decay, ..
            } => {
                let spec = SeqSpec::Geometric {
                    initial: *a_initial,
                    decay: *a_decay,
                };
                Some(spec.build())
            }
            _ => None,
        }
    }

    pub fn limit_set(&self) -> Result<Option<ConvexSet<f64>>, Error> {
        match self {
            SchemeSpec::Perturbed { box_lo, box_hi, .. } => {
                Ok(Some(ConvexSet::new_box(box_lo.clone(), box_hi.clone())?))
            }
            _ => Ok(None),
        }
    }

    pub fn retraction_sets(
        &self,
    ) -> Result<Option<Arc<dyn Fn(Index) -> ConvexSet<f64> + Send + Sync>>, Error> {
        match self {
            SchemeSpec::Perturbed { .. } => {
                let base = self.limit_set()?.expect("perturbed has a base box");
                let a_seq = self.a_seq().expect("perturbed has a closeness sequence");
                Ok(Some(Arc::new(move |n| {
                    base.inflate_box(a_seq(n) / 2.0)
                        .expect("inflating a box stays a box")
                })))
            }
            _ => Ok(None),
        }
    }
}

fn default_setup_horizon() -> Index {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSpec {
    /// `omega(d, eps) = eps`; valid in the p = 2 model where J = id.
    Identity,
    /// `omega_tau` from the textbook smoothness modulus of the space.
    FromTau,
}

impl OmegaSpec {
    pub fn build(&self, space: &SpaceSpec) -> Result<DualityContinuityModulus<f64>, Error> {
        match self {
            OmegaSpec::Identity => {
                if space.p != 2.0 {
                    return Err(Error::Config(
                        "identity omega is only valid for p = 2".into(),
                    ));
                }
                Ok(DualityContinuityModulus::identity())
            }
            OmegaSpec::FromTau => {
                let tau = tau_for_lp(space.p)?;
                Ok(crate::spaces::omega_from_tau(&tau))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateSpec {
    /// Picard with `c0 = ||start - q||`.
    Simple,
    Mann {
        d: f64,
        c: f64,
    },
    Dweakly {
        c1: f64,
        c2: f64,
        f_step: RateSpec,
        omega: OmegaSpec,
    },
    DweaklyConcrete {
        c1: f64,
        c2: f64,
        f_step: RateSpec,
    },
    Perturbed {
        d: f64,
        c1: f64,
        c2: f64,
        c3: f64,
        c4: f64,
        f: RateSpec,
        h: RateSpec,
        omega: OmegaSpec,
        #[serde(default = "default_setup_horizon")]
        setup_horizon: Index,
    },
    PerturbedConcrete {
        d: f64,
        c1: f64,
        c2: f64,
        c3: f64,
        /// `auto` derives h from the geometric closeness sequence by scan.
        h: ClosenessRateSpec,
        omega: OmegaSpec,
        #[serde(default = "default_setup_horizon")]
        setup_horizon: Index,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClosenessRateSpec {
    Auto,
    Explicit(RateSpec),
}

/// A fully built experiment, ready to run and verify.
pub struct Experiment {
    pub space: LpSpace<f64>,
    pub scheme: SchemeInstance<f64>,
    pub certificate: ConvergenceRate<f64>,
    pub eps_grid: Vec<f64>,
    pub n_max: Index,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {:?}, expected {:?}",
                cfg.version, SCHEMA_VERSION
            )));
        }
        Ok(cfg)
    }

    pub fn build(&self) -> Result<Experiment, Error> {
        let space = LpSpace::new(self.space.dim, self.space.p)?;
        let family = self.family.build(&self.space)?;
        let steps = self.steps.build()?;
        let eps_grid = self.eps_grid.values()?;
        let q = family.reference()?.clone();
        let start = Vector::new(self.scheme.start().to_vec());
        if start.dim() != space.dim {
            return Err(Error::Config(format!(
                "start dim {} does not match space dim {}",
                start.dim(),
                space.dim
            )));
        }

        let variant = match &self.scheme {
            SchemeSpec::Picard { .. } => SchemeVariant::Picard,
            SchemeSpec::Mann { .. } => SchemeVariant::Mann,
            SchemeSpec::Perturbed { .. } => {
                let sets = self.scheme.retraction_sets()?.unwrap();
                let space2 = space;
                SchemeVariant::Perturbed {
                    retractions: Arc::new(move |n| {
                        Retraction::new(&space2, sets(n)).expect("p = 2 checked at build")
                    }),
                }
            }
        };
        if matches!(variant, SchemeVariant::Perturbed { .. }) && space.p != 2.0 {
            return Err(Error::Config("perturbed schemes need p = 2".into()));
        }

        let certificate = self.build_certificate(&space, &family, &steps, &q, &start)?;
        let scheme = SchemeInstance::new(variant, family, steps, start, q)?;
        Ok(Experiment {
            space,
            scheme,
            certificate,
            eps_grid,
            n_max: self.n_max,
            seed: self.seed.unwrap_or(0),
            out: self.out.clone(),
        })
    }

    fn build_certificate(
        &self,
        space: &LpSpace<f64>,
        family: &MappingFamily<f64>,
        steps: &StepSequence<f64>,
        q: &Vector<f64>,
        start: &Vector<f64>,
    ) -> Result<ConvergenceRate<f64>, Error> {
        match &self.certificate {
            CertificateSpec::Simple => {
                let c0 = space.distance(start, q);
                simple_rate(&family.psi, c0)
            }
            CertificateSpec::Mann { d, c } => mann_rate(family, steps, *d, *c),
            CertificateSpec::Dweakly {
                c1,
                c2,
                f_step,
                omega,
            } => {
                let omega = omega.build(&self.space)?;
                dweakly_rate(family, steps, &f_step.build()?, &omega, *c1, *c2)
            }
            CertificateSpec::DweaklyConcrete { c1, c2, f_step } => {
                let tau = tau_for_lp(self.space.p)?;
                dweakly_concrete_rate(family, steps, &f_step.build()?, &tau, *c1, *c2)
            }
            CertificateSpec::Perturbed {
                d,
                c1,
                c2,
                c3,
                c4,
                f,
                h,
                omega,
                setup_horizon,
            } => {
                let params = self.perturbed_params(
                    space,
                    steps,
                    *d,
                    *c1,
                    *c2,
                    *c3,
                    *c4,
                    h.build()?,
                    f.build()?,
                    omega,
                    *setup_horizon,
                )?;
                perturbed_rate(family, steps, &params)
            }
            CertificateSpec::PerturbedConcrete {
                d,
                c1,
                c2,
                c3,
                h,
                omega,
                setup_horizon,
            } => {
                let omega_built = omega.build(&self.space)?;
                let h_rate = match h {
                    ClosenessRateSpec::Explicit(spec) => spec.build()?,
                    ClosenessRateSpec::Auto => self.auto_closeness_rate(
                        steps,
                        &omega_built,
                        *d,
                        *c1,
                        *c2,
                    )?,
                };
                let params = self.perturbed_params(
                    space,
                    steps,
                    *d,
                    *c1,
                    *c2,
                    *c3,
                    2.0 * *c3,
                    h_rate,
                    ConvergenceRate::zero(),
                    omega,
                    *setup_horizon,
                )?;
                perturbed_concrete_rate(family, steps, &params)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn perturbed_params(
        &self,
        space: &LpSpace<f64>,
        _steps: &StepSequence<f64>,
        d: f64,
        c1: f64,
        c2: f64,
        c3: f64,
        c4: f64,
        h: ConvergenceRate<f64>,
        f: ConvergenceRate<f64>,
        omega: &OmegaSpec,
        setup_horizon: Index,
    ) -> Result<PerturbedParams<f64>, Error> {
        let sets = self
            .scheme
            .retraction_sets()?
            .ok_or_else(|| Error::Config("perturbed certificate needs a perturbed scheme".into()))?;
        let limit = self
            .scheme
            .limit_set()?
            .ok_or_else(|| Error::Config("perturbed certificate needs a base box".into()))?;
        let a_seq = self
            .scheme
            .a_seq()
            .ok_or_else(|| Error::Config("perturbed certificate needs a closeness sequence".into()))?;
        Ok(PerturbedParams {
            retraction_sets: sets,
            limit_set: limit,
            a_seq,
            h,
            d,
            f,
            c1,
            c2,
            c3,
            c4,
            omega: omega.build(&self.space)?,
            setup_horizon,
            space: *space,
            hstar: HStarOptions {
                seed: self.seed.unwrap_or(0) ^ 0x5eed,
                ..HStarOptions::default()
            },
        })
    }

    /// Derives the closeness rate by scanning the geometric `a_n` against
    /// the budget `omega(R, (alpha_n delta)^2 / 4R)`.
    fn auto_closeness_rate(
        &self,
        steps: &StepSequence<f64>,
        omega: &DualityContinuityModulus<f64>,
        d: f64,
        c1: f64,
        c2: f64,
    ) -> Result<ConvergenceRate<f64>, Error> {
        if matches!(self.steps, StepsSpec::Harmonic { .. }) {
            return Err(Error::Config(
                "auto closeness rate needs constant steps".into(),
            ));
        }
        let a_seq = self
            .scheme
            .a_seq()
            .ok_or_else(|| Error::Config("auto closeness rate needs a perturbed scheme".into()))?;
        let alpha = steps.alpha(0);
        let r_const = 2.0 * (2.0 * (c1 + steps.cap() * c2) + d) + 1.0;
        let omega = omega.clone();
        Ok(ConvergenceRate::from_fn(
            "auto_closeness_scan",
            Arc::new(move |delta: f64| {
                let budget = omega.eval(r_const, (alpha * delta).powi(2) / (4.0 * r_const));
                for n in 0..2_000_000u64 {
                    if a_seq(n) <= budget {
                        return Ok(n);
                    }
                }
                ceil_index(f64::INFINITY)
            }),
        ))
    }
}
