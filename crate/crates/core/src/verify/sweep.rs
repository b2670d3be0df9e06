//! Running every checker over a corpus and serializing the records.

use std::io::Write;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::identities::*;
use super::inequalities::*;
use super::record::{Status, Tolerances, VerificationRecord};
use crate::body::ConvexBody;
use crate::error::{Error, Result};

/// Which checks a sweep runs and with which parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub tolerances: Tolerances,
    /// Band half-width for the diameter-bound chain.
    pub chain_epsilon: f64,
    pub ibp_exponents: Vec<f64>,
    /// Exponents for the unconditional centroid chain.
    pub chain_exponents: Vec<f64>,
    /// Exponents for the conditional (self-similar) identities.
    pub conditional_exponents: Vec<f64>,
    /// Seed for the test directions of the divergence identity.
    pub seed: u64,
    /// Checks to run, by base name (`ibp-identity`) or full name (`ibp-identity[p=0.5]`). Empty runs all.
    pub checks: Vec<String>,
}

/// Base names of every check a sweep can run.
pub const CHECKS: [&str; 12] = [
    "key-inequality",
    "basic-estimate",
    "poincare",
    "stability-theorem",
    "diameter-chain",
    "hausdorff-comparison",
    "divergence-identity",
    "centroaffine-identity",
    "ibp-identity",
    "centroid-chain",
    "isotropic-identity",
    "centroid-decomposition",
];

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            tolerances: Tolerances::default(),
            chain_epsilon: 0.2,
            ibp_exponents: vec![-2.5, -1.5, -0.5, 0.5, 2.0],
            chain_exponents: vec![-0.5, 0.0, 1.0],
            conditional_exponents: vec![0.0, 1.0],
            seed: 0,
            checks: Vec::new(),
        }
    }
}

impl SweepConfig {
    /// Rejects unknown check names.
    pub fn validate(&self) -> Result<()> {
        for c in &self.checks {
            let base = c.split('[').next().unwrap_or(c);
            if !CHECKS.contains(&base) {
                return Err(Error::InvalidParameter(format!(
                    "unknown check {c:?}; known checks: {}",
                    CHECKS.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn selects(&self, name: &str) -> bool {
        self.checks.is_empty()
            || self
                .checks
                .iter()
                .any(|c| c == name || name.split('[').next() == Some(c.as_str()))
    }

    /// Check names in the order they are run for a body on S^n.
    ///
    /// The excluded exponent `-(n+1)` is left out.
    pub fn check_names(&self, n: usize) -> Vec<String> {
        let ok = |p: &&f64| **p != -(n as f64 + 1.0);
        let mut names: Vec<String> = [
            "key-inequality",
            "basic-estimate",
            "poincare",
            "stability-theorem",
            "diameter-chain",
            "hausdorff-comparison",
            "divergence-identity",
            "centroaffine-identity",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        names.extend(
            self.ibp_exponents
                .iter()
                .filter(ok)
                .map(|p| format!("ibp-identity[p={p}]")),
        );
        names.extend(
            self.chain_exponents
                .iter()
                .filter(ok)
                .map(|p| format!("centroid-chain[p={p}]")),
        );
        for p in self.conditional_exponents.iter().filter(ok) {
            names.push(format!("isotropic-identity[p={p}]"));
            names.push(format!("centroid-decomposition[p={p}]"));
        }
        names.retain(|c| self.selects(c));
        names
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector3<f64> {
    loop {
        let mut v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if n == 1 {
            v.z = 0.0;
        }
        let norm = v.norm();
        if norm > 0.1 && norm <= 1.0 {
            return v / norm;
        }
    }
}

/// Turns a checker error into a record: hypothesis mismatches are skipped, anything else fails.
fn settle(name: &str, result: Result<VerificationRecord>) -> VerificationRecord {
    match result {
        Ok(r) => r,
        Err(e @ Error::OutsideHypothesis { .. }) => {
            VerificationRecord::placeholder(name, "", Status::Skipped, e.to_string())
        }
        Err(e) => VerificationRecord::placeholder(name, "", Status::Fail, e.to_string()),
    }
}

/// All configured checks for one body, in [`SweepConfig::check_names`] order.
pub fn check_body(
    id: &str,
    index: usize,
    body: &ConvexBody,
    cfg: &SweepConfig,
) -> Vec<VerificationRecord> {
    let tol = &cfg.tolerances;
    let n = body.dimension();
    let mut rng =
        ChaCha8Rng::seed_from_u64(cfg.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let w1 = unit_vector(&mut rng, n);
    let w2 = unit_vector(&mut rng, n);

    let mut out = Vec::new();
    let mut add = |name: String, run: &dyn Fn() -> Result<VerificationRecord>| {
        if cfg.selects(&name) {
            out.push(settle(&name, run()));
        }
    };
    add("key-inequality".into(), &|| check_key_inequality(body, tol));
    add("basic-estimate".into(), &|| check_basic_estimate(body, tol));
    add("poincare".into(), &|| check_poincare(body, tol));
    add("stability-theorem".into(), &|| {
        check_stability_theorem(body, tol)
    });
    add("diameter-chain".into(), &|| {
        check_diameter_bound_chain(body, cfg.chain_epsilon, tol)
    });
    add("hausdorff-comparison".into(), &|| {
        body.unit_ball_like()
            .and_then(|b| check_hausdorff_comparison(body, &b))
    });
    add("divergence-identity".into(), &|| {
        check_divergence_identity(body, &w1, &w2, tol)
    });
    add("centroaffine-identity".into(), &|| {
        check_centroaffine_identity(body, tol)
    });
    let applicable = |p: &&f64| **p != -(n as f64 + 1.0);
    for &p in cfg.ibp_exponents.iter().filter(applicable) {
        add(format!("ibp-identity[p={p}]"), &|| {
            check_ibp_identity_body(body, p, tol)
        });
    }
    for &p in cfg.chain_exponents.iter().filter(applicable) {
        add(format!("centroid-chain[p={p}]"), &|| {
            check_centroid_chain(body, p, tol)
        });
    }
    for &p in cfg.conditional_exponents.iter().filter(applicable) {
        add(format!("isotropic-identity[p={p}]"), &|| {
            check_isotropic_identity(body, p, tol)
        });
        add(format!("centroid-decomposition[p={p}]"), &|| {
            check_centroid_decomposition(body, p, tol)
        });
    }
    out.into_iter().map(|r| r.for_body(id)).collect()
}

/// Runs [`check_body`] over a corpus in parallel; records are ordered by body id then check name.
pub fn run_corpus(bodies: &[(String, ConvexBody)], cfg: &SweepConfig) -> Vec<VerificationRecord> {
    let mut records: Vec<VerificationRecord> = bodies
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, (id, body))| check_body(id, i, body, cfg))
        .collect();
    records.sort_by(|a, b| (&a.body_id, &a.check).cmp(&(&b.body_id, &b.check)));
    records
}

/// Header of the record CSV.
pub const CSV_HEADER: [&str; 7] = ["body_id", "check", "lhs", "rhs", "slack", "tol", "pass"];

/// One row per record: `body_id,check,lhs,rhs,slack,tol,pass`.
pub fn write_csv<W: Write>(records: &[VerificationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.body_id.as_str(),
            r.check.as_str(),
            &format_float(r.lhs),
            &format_float(r.rhs),
            &format_float(r.slack),
            &format_float(r.tolerance),
            r.status.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn format_float(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub hypothesis_violated: usize,
    pub skipped: usize,
    pub reported: usize,
    /// Corpus minimum of the empirical Hausdorff-comparison ratio `α̂`.
    pub alpha_hat_min: Option<f64>,
}

impl ReportSummary {
    pub fn from_records(records: &[VerificationRecord]) -> Self {
        let mut s = ReportSummary {
            total: records.len(),
            ..Default::default()
        };
        for r in records {
            match r.status {
                Status::Pass => s.passed += 1,
                Status::Fail => s.failed += 1,
                Status::HypothesisViolated => s.hypothesis_violated += 1,
                Status::Skipped => s.skipped += 1,
                Status::Reported => s.reported += 1,
            }
            if let Some(a) = r.metrics.get("alpha_hat") {
                s.alpha_hat_min = Some(s.alpha_hat_min.map_or(*a, |m: f64| m.min(*a)));
            }
        }
        s
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}
