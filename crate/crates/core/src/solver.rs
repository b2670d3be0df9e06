//! Numerical solution of `h^{1-p} / K = f` on S^1 and S^2.
//!
//! The iteration works on `log h`:
//!
//! ```text
//! r      = log(h^{1-p} / (f K))
//! log h ← log h - Δt · P r        (then projected back to degree L)
//! ```
//!
//! `P` is the inverse of the residual's linearization at the unit ball,
//! `δr = (Δ̄ + n + 1 - p) δlog h`, which is diagonal on harmonics with
//! eigenvalue `(n + 1 - p) - l(l + n - 1)`. It is invertible exactly for
//! `p ∈ (-n-1, 1)`. A step is accepted only if `‖r‖_∞` decreases and the
//! body keeps its convexity margin above the guard; otherwise `Δt` shrinks.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{self, BodyRecord, ConvexBody, HarmonicTerm};
use crate::error::{Error, Result};
use crate::sphere::{basis_sup_norm, harmonic_at, HarmonicCoeffs, Harmonics, ScalarField};

/// `r = log(h^{1-p}/K) - log f`; zero exactly where `h^{1-p}/K = f`.
pub fn residual(body: &ConvexBody, f: &ScalarField, p: f64) -> Result<ScalarField> {
    let min_support = body.min_support();
    if !(min_support > 0.0) {
        return Err(Error::OriginNotInterior { min_support });
    }
    f.ensure_on(body.grid())?;
    if !(f.min() > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target density must be positive, min is {}",
            f.min()
        )));
    }
    let h = body.support().values();
    let radii = body.curvature_radii_product().values();
    let vals = (0..h.len())
        .map(|j| (1.0 - p) * h[j].ln() + radii[j].ln() - f.values()[j].ln())
        .collect();
    ScalarField::new(body.grid(), vals)
}

/// `f = 1 + Σ amplitude · Y/‖Y‖_∞`.
pub fn harmonic_target(space: &Harmonics, terms: &[HarmonicTerm]) -> Result<ScalarField> {
    let n = space.dimension();
    let mut c = HarmonicCoeffs::zeros(n, space.degree());
    c.add_constant(1.0);
    for &(l, order, a) in terms {
        let i = c.index(l, order)?;
        c.values_mut()[i] += a / basis_sup_norm(n, l, order);
    }
    space.synthesize(&c)
}

/// `1 + d·q/‖q‖_∞` for the perturbation `q` given by `terms`, so that `‖f - 1‖_∞ = d` on the grid.
pub fn target_with_deviation(
    space: &Harmonics,
    terms: &[HarmonicTerm],
    deviation: f64,
) -> Result<ScalarField> {
    let q = harmonic_target(space, terms)?.map(|v| v - 1.0);
    let norm = q.sup_norm();
    if !(norm > 0.0) || !(0.0..1.0).contains(&deviation) {
        return Err(Error::InvalidParameter(format!(
            "need a nonzero perturbation and deviation in [0, 1), got {deviation}"
        )));
    }
    Ok(q.map(|v| 1.0 + deviation * v / norm))
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub p: f64,
    pub target: ScalarField,
    pub initial: ConvexBody,
    /// Initial and maximal step `Δt₀ ∈ (0, 1]`.
    pub step: f64,
    /// Factor applied to `Δt` after a rejected step.
    pub shrink: f64,
    /// Below this step the solve gives up.
    pub min_step: f64,
    /// Stop when `‖r‖_∞ <= tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Minimum convexity margin a trial body must keep.
    pub convexity_guard: f64,
}

impl SolverConfig {
    /// Defaults: tolerance 1e-9 on S^1 and 1e-8 on S^2, at most 50 000 iterations.
    pub fn new(initial: ConvexBody, target: ScalarField, p: f64) -> Self {
        let tolerance = if initial.dimension() == 1 { 1e-9 } else { 1e-8 };
        SolverConfig {
            p,
            target,
            initial,
            step: 1.0,
            shrink: 0.5,
            min_step: 1e-10,
            tolerance,
            max_iterations: 50_000,
            convexity_guard: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.initial.dimension() as f64;
        if !(self.p > -(n + 1.0) && self.p < 1.0) {
            return Err(Error::ExcludedExponent {
                p: self.p,
                reason: format!("the solver requires p in ({}, 1)", -(n + 1.0)),
            });
        }
        self.target.ensure_on(self.initial.grid())?;
        if !(self.target.min() > 0.0) {
            return Err(Error::InvalidParameter(
                "target density must be positive".into(),
            ));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Δt₀ must lie in (0, 1], got {}",
                self.step
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if self.initial.convexity_margin() <= self.convexity_guard {
            return Err(Error::NotStrictlyConvex {
                margin: self.initial.convexity_margin(),
                threshold: self.convexity_guard,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    MaxIterations,
    LostConvexity,
    /// No step size down to the minimum reduces the residual.
    Stalled,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FailureReason::MaxIterations => "max iterations exceeded",
            FailureReason::LostConvexity => "lost convexity",
            FailureReason::Stalled => "stalled",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub body: ConvexBody,
    pub iterations: usize,
    /// `‖r‖_∞` of the initial body and after every accepted step.
    pub history: Vec<f64>,
    pub converged: bool,
    pub failure: Option<FailureReason>,
}

impl SolverResult {
    pub fn final_residual(&self) -> f64 {
        *self.history.last().unwrap_or(&f64::NAN)
    }
}

/// Applies the inverse linearization at the unit ball, degree by degree.
fn precondition(space: &Harmonics, r: &ScalarField, p: f64) -> Result<ScalarField> {
    let n = space.dimension() as f64;
    let mut c = space.analyze(r)?;
    for (i, v) in c.values_mut().iter_mut().enumerate() {
        let (l, _) = harmonic_at(space.dimension(), i);
        let lf = l as f64;
        *v /= (n + 1.0 - p) - lf * (lf + n - 1.0);
    }
    space.synthesize(&c)
}

enum Trial {
    Accepted(Box<ConvexBody>, f64),
    Rejected { convexity: bool },
}

fn try_step(
    cfg: &SolverConfig,
    body: &ConvexBody,
    direction: &ScalarField,
    dt: f64,
    current: f64,
) -> Result<Trial> {
    let space = body.space();
    let vals: Vec<f64> = body
        .support()
        .values()
        .iter()
        .zip(direction.values())
        .map(|(h, s)| h * (-dt * s).exp())
        .collect();
    let coeffs = space.analyze(&ScalarField::new(space.grid(), vals)?)?;
    let trial = match ConvexBody::with_threshold(space, coeffs, cfg.convexity_guard) {
        Ok(b) if b.min_support() > 0.0 => b,
        Ok(_) | Err(Error::NotStrictlyConvex { .. }) => {
            return Ok(Trial::Rejected { convexity: true })
        }
        Err(e) => return Err(e),
    };
    let norm = residual(&trial, &cfg.target, cfg.p)?.sup_norm();
    if norm < current {
        Ok(Trial::Accepted(Box::new(trial), norm))
    } else {
        Ok(Trial::Rejected { convexity: false })
    }
}

/// Runs the damped iteration from `cfg.initial`.
///
/// Non-convergence is reported in the result, not as an error.
pub fn solve(cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    let mut body = cfg.initial.clone();
    let mut norm = residual(&body, &cfg.target, cfg.p)?.sup_norm();
    let mut history = vec![norm];
    let mut dt = cfg.step;
    let mut iterations = 0;
    let mut failure = None;

    while norm > cfg.tolerance {
        if iterations >= cfg.max_iterations {
            failure = Some(FailureReason::MaxIterations);
            break;
        }
        let r = residual(&body, &cfg.target, cfg.p)?;
        let direction = precondition(body.space(), &r, cfg.p)?;
        let mut last_convexity = false;
        let accepted = loop {
            match try_step(cfg, &body, &direction, dt, norm)? {
                Trial::Accepted(b, n) => break Some((b, n)),
                Trial::Rejected { convexity } => {
                    last_convexity = convexity;
                    dt *= cfg.shrink;
                    if dt < cfg.min_step {
                        break None;
                    }
                }
            }
        };
        match accepted {
            Some((b, n)) => {
                body = *b;
                norm = n;
                history.push(n);
                iterations += 1;
                dt = (dt / cfg.shrink).min(cfg.step);
            }
            None => {
                failure = Some(if last_convexity {
                    FailureReason::LostConvexity
                } else {
                    FailureReason::Stalled
                });
                break;
            }
        }
    }
    Ok(SolverResult {
        converged: norm <= cfg.tolerance,
        body,
        iterations,
        history,
        failure,
    })
}

/// JSON form of a solve: config echo, residual history and final coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverReport {
    pub p: f64,
    pub step: f64,
    pub shrink: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub convexity_guard: f64,
    pub target_deviation: f64,
    pub converged: bool,
    pub iterations: usize,
    pub failure: Option<FailureReason>,
    pub history: Vec<f64>,
    pub initial: BodyRecord,
    #[serde(rename = "final")]
    pub final_body: BodyRecord,
}

impl SolverReport {
    pub fn new(cfg: &SolverConfig, result: &SolverResult) -> Self {
        SolverReport {
            p: cfg.p,
            step: cfg.step,
            shrink: cfg.shrink,
            tolerance: cfg.tolerance,
            max_iterations: cfg.max_iterations,
            convexity_guard: cfg.convexity_guard,
            target_deviation: cfg.target.map(|v| v - 1.0).sup_norm(),
            converged: result.converged,
            iterations: result.iterations,
            failure: result.failure,
            history: result.history.clone(),
            initial: BodyRecord::from_body(&cfg.initial, None),
            final_body: BodyRecord::from_body(&result.body, None),
        }
    }
}

/// Outcome of one start in a uniqueness probe.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeRun {
    pub label: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub failure: Option<FailureReason>,
    #[serde(skip)]
    pub body: Option<ConvexBody>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairDistance {
    pub first: String,
    pub second: String,
    pub delta_h: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub p: f64,
    /// `‖f - 1‖_∞`, the largest deviation the probe was run at.
    pub target_deviation: f64,
    pub tolerance: f64,
    pub runs: Vec<ProbeRun>,
    pub pairwise: Vec<PairDistance>,
    pub max_pairwise: f64,
    pub all_converged: bool,
    /// All starts converged and agree within 10× the solver tolerance.
    pub uniqueness_consistent: bool,
}

/// Solver settings shared by every start of a probe or sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub step: f64,
    pub shrink: f64,
    pub min_step: f64,
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
    pub convexity_guard: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            step: 1.0,
            shrink: 0.5,
            min_step: 1e-10,
            tolerance: None,
            max_iterations: 50_000,
            convexity_guard: 1e-6,
        }
    }
}

impl SolverSettings {
    pub fn config(&self, initial: ConvexBody, target: ScalarField, p: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(initial, target, p);
        cfg.step = self.step;
        cfg.shrink = self.shrink;
        cfg.min_step = self.min_step;
        if let Some(t) = self.tolerance {
            cfg.tolerance = t;
        }
        cfg.max_iterations = self.max_iterations;
        cfg.convexity_guard = self.convexity_guard;
        cfg
    }
}

/// Solves from every start and reports pairwise Hausdorff distances of the converged solutions.
pub fn uniqueness_probe(
    target: &ScalarField,
    p: f64,
    starts: &[(String, ConvexBody)],
    settings: &SolverSettings,
) -> Result<ProbeReport> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter(
            "uniqueness probe needs at least one start".into(),
        ));
    }
    let configs: Vec<SolverConfig> = starts
        .iter()
        .map(|(_, b)| settings.config(b.clone(), target.clone(), p))
        .collect();
    let tolerance = configs[0].tolerance;
    let results: Vec<Result<SolverResult>> = configs.par_iter().map(solve).collect();
    let mut runs = Vec::with_capacity(starts.len());
    for ((label, _), res) in starts.iter().zip(results) {
        let res = res?;
        runs.push(ProbeRun {
            label: label.clone(),
            converged: res.converged,
            iterations: res.iterations,
            final_residual: res.final_residual(),
            failure: res.failure,
            body: Some(res.body),
        });
    }
    let mut pairwise = Vec::new();
    for i in 0..runs.len() {
        for j in (i + 1)..runs.len() {
            if let (Some(a), Some(b)) = (&runs[i].body, &runs[j].body) {
                if runs[i].converged && runs[j].converged {
                    pairwise.push(PairDistance {
                        first: runs[i].label.clone(),
                        second: runs[j].label.clone(),
                        delta_h: body::delta_hausdorff(a, b)?,
                    });
                }
            }
        }
    }
    let max_pairwise = pairwise.iter().fold(0.0f64, |m, d| m.max(d.delta_h));
    let all_converged = runs.iter().all(|r| r.converged);
    Ok(ProbeReport {
        p,
        target_deviation: target.map(|v| v - 1.0).sup_norm(),
        tolerance,
        runs,
        pairwise,
        max_pairwise,
        all_converged,
        uniqueness_consistent: all_converged && max_pairwise <= 10.0 * tolerance,
    })
}

/// A labelled perturbation `1 + Σ amplitude · Ŷ` used as initial body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub label: String,
    pub terms: Vec<HarmonicTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub perturbation: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub delta_h_to_ball: f64,
    pub failure: Option<String>,
}

/// Solves `K = h^{1-p}` (`f ≡ 1`) for every `(p, perturbation)` cell; failures are recorded per cell.
pub fn self_similar_sweep(
    space: &Arc<Harmonics>,
    p_grid: &[f64],
    perturbations: &[Perturbation],
    settings: &SolverSettings,
) -> Vec<SweepRow> {
    let cells: Vec<(f64, &Perturbation)> = p_grid
        .iter()
        .flat_map(|&p| perturbations.iter().map(move |q| (p, q)))
        .collect();
    cells
        .par_iter()
        .map(|&(p, q)| sweep_cell(space, p, q, settings))
        .collect()
}

fn sweep_cell(
    space: &Arc<Harmonics>,
    p: f64,
    q: &Perturbation,
    settings: &SolverSettings,
) -> SweepRow {
    let run = || -> Result<(SolverResult, f64)> {
        let init = ConvexBody::perturbed_ball(space, &q.terms)?;
        let target = ScalarField::constant(space.grid(), 1.0);
        let res = solve(&settings.config(init, target, p))?;
        let ball = ConvexBody::ball(space, 1.0)?;
        let dh = body::delta_hausdorff(&res.body, &ball)?;
        Ok((res, dh))
    };
    match run() {
        Ok((res, dh)) => SweepRow {
            p,
            perturbation: q.label.clone(),
            converged: res.converged,
            iterations: res.iterations,
            final_residual: res.final_residual(),
            delta_h_to_ball: dh,
            failure: res.failure.map(|f| f.to_string()),
        },
        Err(e) => SweepRow {
            p,
            perturbation: q.label.clone(),
            converged: false,
            iterations: 0,
            final_residual: f64::NAN,
            delta_h_to_ball: f64::NAN,
            failure: Some(e.to_string()),
        },
    }
}

/// Sweep table as CSV: `p,perturbation,converged,iterations,final_residual,delta_h_to_ball,failure`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "p",
        "perturbation",
        "converged",
        "iterations",
        "final_residual",
        "delta_h_to_ball",
        "failure",
    ])?;
    for r in rows {
        w.write_record([
            format!("{}", r.p),
            r.perturbation.clone(),
            r.converged.to_string(),
            r.iterations.to_string(),
            format!("{:e}", r.final_residual),
            format!("{:e}", r.delta_h_to_ball),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_exponent_outside_range() {
        let space = Harmonics::for_degree(2, 6).unwrap();
        let ball = ConvexBody::ball(&space, 1.0).unwrap();
        let f = ScalarField::constant(space.grid(), 1.0);
        for p in [1.0, -3.0, -4.0, 2.0] {
            let cfg = SolverConfig::new(ball.clone(), f.clone(), p);
            assert!(
                matches!(solve(&cfg), Err(Error::ExcludedExponent { .. })),
                "p = {p}"
            );
        }
    }

    #[test]
    fn rejects_nonpositive_target() {
        let space = Harmonics::for_degree(1, 8).unwrap();
        let ball = ConvexBody::ball(&space, 1.0).unwrap();
        let f = ScalarField::constant(space.grid(), 0.0);
        assert!(residual(&ball, &f, 0.0).is_err());
        assert!(solve(&SolverConfig::new(ball, f, 0.0)).is_err());
    }

    #[test]
    fn max_iterations_is_not_an_error() {
        let space = Harmonics::for_degree(2, 8).unwrap();
        let init = ConvexBody::perturbed_ball(&space, &[(2, 0, 0.1)]).unwrap();
        let f = ScalarField::constant(space.grid(), 1.0);
        let mut cfg = SolverConfig::new(init, f, 0.0);
        cfg.max_iterations = 1;
        let res = solve(&cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.failure, Some(FailureReason::MaxIterations));
        assert_eq!(res.history.len(), 2);
    }
}
