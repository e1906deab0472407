//! Trajectory generators for the Picard, Mann and perturbed Mann schemes,
//! exactly as the rate theorems consume them.
//!
//! Trajectories are materialised eagerly up to `n_max`; the harness flags
//! certificates demanding indices beyond the run horizon instead of
//! silently truncating.

use std::sync::Arc;

use crate::error::Error;
use crate::geometry::Retraction;
use crate::mappings::MappingFamily;
use crate::moduli::StepSequence;
use crate::scalar::{Index, Real};
use crate::spaces::{LpSpace, Vector};

/// Which recurrence drives the iteration.
#[derive(Clone)]
pub enum SchemeVariant<F> {
    /// `x_{n+1} = A_n x_n` (steps ignored).
    Picard,
    /// `x_{n+1} = (1 - alpha_n) x_n + alpha_n A_n x_n`.
    Mann,
    /// `z_{n+1} = Q_n((1 - alpha_n) z_n + alpha_n A_n z_n)`.
    Perturbed {
        retractions: Arc<dyn Fn(Index) -> Retraction<F> + Send + Sync>,
    },
}

impl<F> std::fmt::Debug for SchemeVariant<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemeVariant::Picard => write!(f, "Picard"),
            SchemeVariant::Mann => write!(f, "Mann"),
            SchemeVariant::Perturbed { .. } => write!(f, "Perturbed"),
        }
    }
}

/// A runnable scheme: mapping family, steps, start point and reference.
#[derive(Debug, Clone)]
pub struct SchemeInstance<F> {
    pub variant: SchemeVariant<F>,
    pub family: MappingFamily<F>,
    pub steps: StepSequence<F>,
    pub start: Vector<F>,
    pub q: Vector<F>,
}

impl<F: Real> SchemeInstance<F> {
    pub fn new(
        variant: SchemeVariant<F>,
        family: MappingFamily<F>,
        steps: StepSequence<F>,
        start: Vector<F>,
        q: Vector<F>,
    ) -> Result<Self, Error> {
        if start.dim() != q.dim() {
            return Err(Error::Shape(format!(
                "start dim {} vs reference dim {}",
                start.dim(),
                q.dim()
            )));
        }
        if !start.is_finite() || !q.is_finite() {
            return Err(Error::Parameter("start and reference must be finite".into()));
        }
        Ok(Self {
            variant,
            family,
            steps,
            start,
            q,
        })
    }

    /// Runs the exact per-step floating-point recurrence, producing
    /// `n_max + 1` iterates (including the start point).
    pub fn run(&self, space: &LpSpace<F>, n_max: Index) -> Result<Vec<Vector<F>>, Error> {
        if n_max < 1 {
            return Err(Error::Parameter("n_max must be at least 1".into()));
        }
        let mut out = Vec::with_capacity(n_max as usize + 1);
        out.push(self.start.clone());
        let mut x = self.start.clone();
        for n in 0..n_max {
            let ax = self.family.apply(n, &x);
            let next = match &self.variant {
                SchemeVariant::Picard => ax,
                SchemeVariant::Mann => {
                    let alpha = self.steps.alpha(n);
                    x.scale(F::one() - alpha).axpy(alpha, &ax)
                }
                SchemeVariant::Perturbed { retractions } => {
                    let alpha = self.steps.alpha(n);
                    let pre = x.scale(F::one() - alpha).axpy(alpha, &ax);
                    retractions(n).apply(space, &pre)?
                }
            };
            if !next.is_finite() {
                return Err(Error::NumericalBlowup { n });
            }
            out.push(next.clone());
            x = next;
        }
        Ok(out)
    }
}

/// Distances `||x_n - q||` along a trajectory.
pub fn residuals<F: Real>(
    space: &LpSpace<F>,
    trajectory: &[Vector<F>],
    q: &Vector<F>,
) -> Result<Vec<F>, Error> {
    if trajectory.iter().any(|x| x.dim() != q.dim()) {
        return Err(Error::Shape("trajectory and reference dimensions differ".into()));
    }
    Ok(trajectory.iter().map(|x| space.distance(x, q)).collect())
}
