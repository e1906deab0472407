//! Command-line interface: `certify`, `run`, `verify`, `sweep`.
//!
//! Exit codes: 0 when everything requested succeeded (for `verify` and
//! `sweep`, additionally every certificate held), 1 when a verification
//! found a violated certificate, 2 for malformed configs, 3 for parameter
//! or hypothesis errors raised by the constructors.

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use std::path::PathBuf;

use crate::error::Error;
use crate::harness::config::{EpsGridSpec, ExperimentConfig, SCHEMA_VERSION};
use crate::harness::{verify_rate, VerificationReport};
use crate::scalar::Index;
use crate::schemes::residuals;

#[derive(Debug, Parser)]
#[command(name = "certirate", version, about = "Certified convergence rates for contractive fixed-point iterations")]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment configuration (JSON, schema certirate/v1).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the output path from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the run horizon.
    #[arg(long = "n-max")]
    pub n_max: Option<Index>,
    /// Override the epsilon grid with comma-separated values.
    #[arg(long = "eps-grid")]
    pub eps_grid: Option<String>,
    /// Override the sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Materialise the certificate as JSON: theorem, constants, grid, indices.
    Certify(CommonArgs),
    /// Run the scheme and emit the trajectory as CSV.
    Run(CommonArgs),
    /// Run the scheme, evaluate the certificate and check every row.
    Verify(CommonArgs),
    /// Run a grid of config overrides and aggregate the reports.
    Sweep(CommonArgs),
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_cli(args: CliArgs) -> i32 {
    let (common, action): (&CommonArgs, fn(ExperimentConfig) -> Result<i32, Error>) =
        match &args.command {
            Command::Certify(c) => (c, cmd_certify),
            Command::Run(c) => (c, cmd_run),
            Command::Verify(c) => (c, cmd_verify),
            Command::Sweep(c) => {
                return finish(cmd_sweep(c));
            }
        };
    let cfg = match load_config(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    finish(action(cfg))
}

fn finish(outcome: Result<i32, Error>) -> i32 {
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("{}: {e}", common.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    apply_overrides(&mut cfg, common)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, common: &CommonArgs) -> Result<(), Error> {
    if let Some(n) = common.n_max {
        cfg.n_max = n;
    }
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(grid) = &common.eps_grid {
        let values: Result<Vec<f64>, _> =
            grid.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let values = values.map_err(|e| Error::Config(format!("bad --eps-grid: {e}")))?;
        cfg.eps_grid = EpsGridSpec::Explicit { values };
    }
    Ok(())
}

fn write_or_print(out: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => {
            std::fs::write(path, content).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn cmd_certify(cfg: ExperimentConfig) -> Result<i32, Error> {
    let exp = cfg.build()?;
    let mut indices = Vec::new();
    for &eps in &exp.eps_grid {
        let entry = match exp.certificate.eval(eps) {
            Ok(idx) => serde_json::json!({"epsilon": eps, "index": idx}),
            Err(e) => serde_json::json!({"epsilon": eps, "index": null, "note": e.to_string()}),
        };
        indices.push(entry);
    }
    let provenance: serde_json::Value = serde_json::from_str(exp.certificate.provenance())
        .unwrap_or_else(|_| serde_json::json!(exp.certificate.provenance()));
    let doc = serde_json::json!({
        "schema": SCHEMA_VERSION,
        "certificate": provenance,
        "epsilon_grid": exp.eps_grid,
        "indices": indices,
    });
    write_or_print(&exp.out, &serde_json::to_string_pretty(&doc).unwrap())?;
    Ok(0)
}

fn cmd_run(cfg: ExperimentConfig) -> Result<i32, Error> {
    let exp = cfg.build()?;
    let traj = exp.scheme.run(&exp.space, exp.n_max)?;
    let res = residuals(&exp.space, &traj, &exp.scheme.q)?;
    let mut csv = String::new();
    let dim = exp.space.dim;
    csv.push_str("n");
    for i in 0..dim {
        csv.push_str(&format!(",x{i}"));
    }
    csv.push_str(",residual\n");
    for (n, (x, r)) in traj.iter().zip(&res).enumerate() {
        csv.push_str(&n.to_string());
        for v in &x.coords {
            csv.push_str(&format!(",{v}"));
        }
        csv.push_str(&format!(",{r}\n"));
    }
    write_or_print(&exp.out, &csv)?;
    Ok(0)
}

fn cmd_verify(cfg: ExperimentConfig) -> Result<i32, Error> {
    let (report, out) = verify_config(cfg)?;
    let doc = serde_json::to_string_pretty(&report).unwrap();
    match &out {
        Some(path) => {
            std::fs::write(path, &doc).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
        None => {}
    }
    print!("{}", report.human_table());
    Ok(if report.all_hold() { 0 } else { 1 })
}

fn verify_config(cfg: ExperimentConfig) -> Result<(VerificationReport, Option<PathBuf>), Error> {
    let seed = cfg.seed;
    let exp = cfg.build()?;
    let traj = exp.scheme.run(&exp.space, exp.n_max)?;
    let mut report = verify_rate(
        &exp.space,
        &traj,
        &exp.scheme.q,
        &exp.certificate,
        &exp.eps_grid,
        exp.n_max,
    )?;
    report.summary.seed = seed;
    Ok((report, exp.out))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    version: String,
    base: serde_json::Value,
    grid: Vec<SweepEntry>,
    #[serde(default)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepEntry {
    name: String,
    #[serde(default)]
    overrides: serde_json::Value,
}

/// Deep merge: objects merge recursively, everything else is replaced.
fn merge(base: &serde_json::Value, over: &serde_json::Value) -> serde_json::Value {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            let mut out = b.clone();
            for (k, v) in o {
                let merged = match b.get(k) {
                    Some(bv) => merge(bv, v),
                    None => v.clone(),
                };
                out.insert(k.clone(), merged);
            }
            serde_json::Value::Object(out)
        }
        (_, over) => over.clone(),
    }
}

fn cmd_sweep(common: &CommonArgs) -> Result<i32, Error> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("{}: {e}", common.config.display())))?;
    let sweep: SweepConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    if sweep.version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema version {:?}",
            sweep.version
        )));
    }
    let mut jobs = Vec::new();
    for entry in &sweep.grid {
        let merged = merge(&sweep.base, &entry.overrides);
        let mut cfg = ExperimentConfig::from_json(&merged.to_string())?;
        cfg.out = None;
        apply_overrides(&mut cfg, common)?;
        jobs.push((entry.name.clone(), cfg));
    }
    let mut results: Vec<(String, Result<VerificationReport, Error>)> = jobs
        .into_par_iter()
        .map(|(name, cfg)| {
            let outcome = verify_config(cfg).map(|(rep, _)| rep);
            (name, outcome)
        })
        .collect();
    // deterministic aggregation independent of worker order
    results.sort_by(|a, b| a.0.cmp(&b.0));
    let mut entries = Vec::new();
    let mut all_hold = true;
    let mut first_error: Option<Error> = None;
    for (name, outcome) in &results {
        match outcome {
            Ok(rep) => {
                all_hold &= rep.all_hold();
                entries.push(serde_json::json!({
                    "name": name,
                    "all_hold": rep.all_hold(),
                    "max_tightness": rep.summary.max_tightness,
                    "rows": rep.rows,
                }));
            }
            Err(e) => {
                all_hold = false;
                if first_error.is_none() {
                    first_error = Some(e.clone());
                }
                entries.push(serde_json::json!({
                    "name": name,
                    "error": e.to_string(),
                }));
            }
        }
    }
    let doc = serde_json::json!({
        "schema": SCHEMA_VERSION,
        "entries": entries,
        "all_hold": all_hold,
    });
    let rendered = serde_json::to_string_pretty(&doc).unwrap();
    let out = common.out.clone().or(sweep.out);
    write_or_print(&out, &rendered)?;
    for (name, outcome) in &results {
        match outcome {
            Ok(rep) => println!(
                "{name}: all_hold = {}, max_tightness = {:?}",
                rep.all_hold(),
                rep.summary.max_tightness
            ),
            Err(e) => println!("{name}: error: {e}"),
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    Ok(if all_hold { 0 } else { 1 })
}
