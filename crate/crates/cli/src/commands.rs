use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use conevol::corpus::{load_corpus, write_corpus};
use conevol::solver::{self, self_similar_sweep, uniqueness_probe, write_sweep_csv, SolverReport};
use conevol::verify::{
    convergence_study, non_monotone, run_corpus, write_convergence_csv, write_csv, ConvergenceRow,
    ReportSummary, VerificationRecord,
};
use log::{info, warn};
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Result of a command that ran to completion. Errors (bad config, missing or corrupt input) are
/// reported separately and exit with code 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Checks failed or the solver did not converge; outputs are still written.
    Failure,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_out(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))
}

fn write_with<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> conevol::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn gen_corpus(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let spec = cfg.corpus_spec(seed);
    let space = cfg.space()?;
    let dir = cfg.corpus_dir();
    let manifest = write_corpus(&dir, &spec, &space)?;
    let clamped = manifest.entries.iter().filter(|e| e.clamped).count();
    info!(
        "wrote {} bodies to {}",
        manifest.entries.len(),
        dir.display()
    );
    if clamped > 0 {
        warn!("{clamped} perturbed bodies were clamped to stay strictly convex (flagged in the manifest)");
    }
    println!(
        "{} bodies written to {}",
        manifest.entries.len(),
        dir.display()
    );
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    corpus: String,
    bodies: usize,
    summary: &'a ReportSummary,
    records: &'a [VerificationRecord],
}

pub fn verify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = cfg.corpus_dir();
    let (_, bodies) = load_corpus(&dir)?;
    info!("verifying {} bodies from {}", bodies.len(), dir.display());
    let records = run_corpus(&bodies, &cfg.verify);
    let summary = ReportSummary::from_records(&records);
    create_out(cfg)?;
    write_with(&cfg.out.join("verify.csv"), |w| write_csv(&records, w))?;
    write_json(
        &cfg.out.join("verify.json"),
        &VerifyReport {
            corpus: dir.display().to_string(),
            bodies: bodies.len(),
            summary: &summary,
            records: &records,
        },
    )?;
    for r in records.iter().filter(|r| r.status.is_failure()) {
        warn!(
            "{} {}: slack {:e} (tol {:e}) {}",
            r.body_id,
            r.check,
            r.slack,
            r.tolerance,
            r.note.as_deref().unwrap_or("")
        );
    }
    println!(
        "{} records: {} pass, {} fail, {} hypothesis-violated, {} skipped, {} reported{}",
        summary.total,
        summary.passed,
        summary.failed,
        summary.hypothesis_violated,
        summary.skipped,
        summary.reported,
        summary
            .alpha_hat_min
            .map(|a| format!("; min alpha_hat {a:.4}"))
            .unwrap_or_default()
    );
    Ok(if summary.all_passed() {
        Outcome::Success
    } else {
        Outcome::Failure
    })
}

pub fn solve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = &cfg.solve;
    let space = cfg.space()?;
    let initial = s.initial.build(&space)?;
    let target = s.target.build(initial.space())?;
    let config = s.settings.config(initial, target, s.p);
    let result = solver::solve(&config)?;
    create_out(cfg)?;
    write_json(
        &cfg.out.join("solve.json"),
        &SolverReport::new(&config, &result),
    )?;
    match result.failure {
        None if result.converged => {
            println!(
                "converged in {} iterations, residual {:e}",
                result.iterations,
                result.final_residual()
            );
            Ok(Outcome::Success)
        }
        reason => {
            let why = reason
                .map(|r| r.to_string())
                .unwrap_or_else(|| "not converged".into());
            eprintln!(
                "solver failed after {} iterations ({why}), residual {:e}",
                result.iterations,
                result.final_residual()
            );
            Ok(Outcome::Failure)
        }
    }
}

pub fn probe(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = &cfg.probe;
    let space = cfg.space()?;
    let starts = p
        .starts
        .iter()
        .map(|s| Ok((s.label.clone(), s.body.build(&space)?)))
        .collect::<Result<Vec<_>>>()?;
    let target = p.target.build(&space)?;
    let report = uniqueness_probe(&target, p.p, &starts, &p.settings)?;
    create_out(cfg)?;
    write_json(&cfg.out.join("probe.json"), &report)?;
    println!(
        "{} starts, {} pairwise distances, max delta_H {:e}, uniqueness-consistent: {}",
        report.runs.len(),
        report.pairwise.len(),
        report.max_pairwise,
        report.uniqueness_consistent
    );
    Ok(if report.all_converged {
        Outcome::Success
    } else {
        Outcome::Failure
    })
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = &cfg.sweep;
    let space = cfg.space()?;
    let rows = self_similar_sweep(&space, &s.p_grid, &s.perturbations, &s.settings);
    create_out(cfg)?;
    write_with(&cfg.out.join("sweep.csv"), |w| write_sweep_csv(&rows, w))?;
    write_json(&cfg.out.join("sweep.json"), &rows)?;
    let converged = rows.iter().filter(|r| r.converged).count();
    for r in rows.iter().filter(|r| !r.converged) {
        warn!(
            "p={} {}: {}",
            r.p,
            r.perturbation,
            r.failure.as_deref().unwrap_or("not converged")
        );
    }
    println!("{} cells, {converged} converged", rows.len());
    let expected = s.p_grid.len() * s.perturbations.len();
    Ok(if rows.len() == expected {
        Outcome::Success
    } else {
        Outcome::Failure
    })
}

#[derive(Serialize)]
struct ConvergenceReport<'a> {
    spec: &'a conevol::verify::ConvergenceSpec,
    floor: f64,
    non_monotone: Vec<String>,
    rows: &'a [ConvergenceRow],
}

pub fn convergence(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.convergence_spec();
    let floor = cfg.convergence.floor.unwrap_or(1e-13);
    let rows = convergence_study(&spec)?;
    let bad = non_monotone(&rows, floor);
    create_out(cfg)?;
    write_with(&cfg.out.join("convergence.csv"), |w| {
        write_convergence_csv(&rows, w)
    })?;
    write_json(
        &cfg.out.join("convergence.json"),
        &ConvergenceReport {
            spec: &spec,
            floor,
            non_monotone: bad.clone(),
            rows: &rows,
        },
    )?;
    for q in &bad {
        warn!("{q}: error does not decrease monotonically above {floor:e}");
    }
    println!(
        "{} rows over degrees {:?}; {} non-monotone quantities",
        rows.len(),
        spec.degrees,
        bad.len()
    );
    Ok(Outcome::Success)
}
