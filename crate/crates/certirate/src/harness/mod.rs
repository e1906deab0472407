//! Verification engine and CLI plumbing: builds experiments from config,
//! computes certificates, runs trajectories, and checks every certificate
//! against the trajectory it claims to bound.

pub mod cli;
pub mod config;

use serde::Serialize;

use crate::error::Error;
use crate::moduli::ConvergenceRate;
use crate::scalar::{is_impractical, Index, Real};
use crate::schemes::residuals;
use crate::spaces::{LpSpace, Vector};

/// One epsilon row of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct EpsRow {
    pub epsilon: f64,
    /// Certified index when the certificate evaluated to one.
    pub certified_index: Option<Index>,
    /// The certified index saturated 63-bit arithmetic.
    pub certified_impractical: bool,
    /// The certified index lies within the run horizon, so the window
    /// check below is non-vacuous.
    pub within_horizon: bool,
    /// Least index from which the residual stays at or below epsilon.
    pub first_actual_index: Option<Index>,
    /// Residual stays <= epsilon on [certified, n_max]. Vacuously true
    /// when the certificate points beyond the horizon.
    pub holds: bool,
    /// first_actual / max(certified, 1).
    pub tightness: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub all_hold: bool,
    pub max_tightness: Option<f64>,
    pub n_max: Index,
    pub provenance: serde_json::Value,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub rows: Vec<EpsRow>,
    pub summary: ReportSummary,
}

impl VerificationReport {
    pub fn all_hold(&self) -> bool {
        self.summary.all_hold
    }

    /// Plain-text table, one row per epsilon.
    pub fn human_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>12}  {:>14}  {:>9}  {:>12}  {:>6}  {:>9}  note\n",
            "epsilon", "certified", "horizon", "first_actual", "holds", "tightness"
        ));
        for row in &self.rows {
            let certified = match row.certified_index {
                Some(i) if row.certified_impractical => format!("{i} (sat)"),
                Some(i) => i.to_string(),
                None => "-".into(),
            };
            out.push_str(&format!(
                "{:>12.6e}  {:>14}  {:>9}  {:>12}  {:>6}  {:>9}  {}\n",
                row.epsilon,
                certified,
                if row.within_horizon { "in" } else { "beyond" },
                row.first_actual_index
                    .map(|i| i.to_string())
                    .unwrap_or_else(|| "-".into()),
                row.holds,
                row.tightness
                    .map(|t| format!("{t:.3}"))
                    .unwrap_or_else(|| "-".into()),
                row.note,
            ));
        }
        out.push_str(&format!(
            "all_hold: {}   max_tightness: {}\n",
            self.summary.all_hold,
            self.summary
                .max_tightness
                .map(|t| format!("{t:.3}"))
                .unwrap_or_else(|| "-".into()),
        ));
        out
    }

    /// Markdown summary table.
    pub fn markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| epsilon | certified | horizon | first actual | holds | tightness |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for row in &self.rows {
            out.push_str(&format!(
                "| {:.6e} | {} | {} | {} | {} | {} |\n",
                row.epsilon,
                row.certified_index
                    .map(|i| i.to_string())
                    .unwrap_or_else(|| "-".into()),
                if row.within_horizon { "in" } else { "beyond" },
                row.first_actual_index
                    .map(|i| i.to_string())
                    .unwrap_or_else(|| "-".into()),
                row.holds,
                row.tightness
                    .map(|t| format!("{t:.3}"))
                    .unwrap_or_else(|| "-".into()),
            ));
        }
        out.push_str(&format!("\n**all_hold**: {}\n", self.summary.all_hold));
        out
    }
}

/// Checks a certificate against a trajectory: for each epsilon, the
/// residual must stay at or below epsilon from the certified index through
/// `n_max`. Certificates pointing beyond the horizon (including saturated
/// or divergence-scan-capped evaluations whose scan already passed the
/// horizon) are flagged, not failed.
pub fn verify_rate<F: Real>(
    space: &LpSpace<F>,
    trajectory: &[Vector<F>],
    q: &Vector<F>,
    cert: &ConvergenceRate<F>,
    eps_grid: &[F],
    n_max: Index,
) -> Result<VerificationReport, Error> {
    let res = residuals(space, trajectory, q)?;
    let horizon = n_max.min(res.len().saturating_sub(1) as Index);
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        rows.push(verify_one(&res, cert, eps, horizon));
    }
    let all_hold = rows.iter().all(|r| r.holds);
    let max_tightness = rows
        .iter()
        .filter_map(|r| r.tightness)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))));
    let provenance = serde_json::from_str(cert.provenance())
        .unwrap_or_else(|_| serde_json::json!(cert.provenance()));
    Ok(VerificationReport {
        rows,
        summary: ReportSummary {
            all_hold,
            max_tightness,
            n_max: horizon,
            provenance,
            seed: None,
        },
    })
}

fn verify_one<F: Real>(
    res: &[F],
    cert: &ConvergenceRate<F>,
    eps: F,
    n_max: Index,
) -> EpsRow {
    let epsilon = eps.to_f64().unwrap_or(f64::NAN);
    // least n with residual <= eps on all of [n, n_max]
    let mut first_actual: Option<Index> = None;
    for n in (0..=n_max).rev() {
        if res[n as usize] <= eps {
            first_actual = Some(n);
        } else {
            break;
        }
    }

    match cert.eval(eps) {
        Ok(idx) => {
            let impractical = is_impractical(idx);
            if idx <= n_max {
                let mut holds = true;
                let mut witness = None;
                for n in idx..=n_max {
                    if res[n as usize] > eps {
                        holds = false;
                        witness = Some(n);
                        break;
                    }
                }
                let tightness = first_actual.map(|fa| fa as f64 / (idx.max(1)) as f64);
                EpsRow {
                    epsilon,
                    certified_index: Some(idx),
                    certified_impractical: impractical,
                    within_horizon: true,
                    first_actual_index: first_actual,
                    holds,
                    tightness,
                    note: witness
                        .map(|n| format!("residual exceeds epsilon at n = {n}"))
                        .unwrap_or_default(),
                }
            } else {
                EpsRow {
                    epsilon,
                    certified_index: Some(idx),
                    certified_impractical: impractical,
                    within_horizon: false,
                    first_actual_index: first_actual,
                    holds: true,
                    tightness: first_actual.map(|fa| fa as f64 / (idx.max(1)) as f64),
                    note: "certificate exceeds run horizon".into(),
                }
            }
        }
        Err(Error::DivergenceCap { reached, .. }) if reached >= n_max => EpsRow {
            epsilon,
            certified_index: None,
            certified_impractical: true,
            within_horizon: false,
            first_actual_index: first_actual,
            holds: true,
            tightness: None,
            note: format!(
                "divergence scan passed {reached} without certifying; beyond run horizon"
            ),
        },
        Err(e) => EpsRow {
            epsilon,
            certified_index: None,
            certified_impractical: false,
            within_horizon: false,
            first_actual_index: first_actual,
            holds: false,
            tightness: None,
            note: format!("certificate evaluation failed: {e}"),
        },
    }
}
