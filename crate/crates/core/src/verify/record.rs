use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// How a link compares its two sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `lhs <= rhs`, slack `rhs - lhs`.
    Le,
    /// `lhs >= rhs`, slack `lhs - rhs`.
    Ge,
    /// `lhs = rhs`, slack is the (scaled) residual.
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// A conditional identity whose hypothesis the body does not satisfy.
    HypothesisViolated,
    /// Not applicable (e.g. coincident bodies, density outside the hypothesis band).
    Skipped,
    /// Measurement only, no pass/fail claim.
    Reported,
}

impl Status {
    /// Whether the status counts against a verification run.
    pub fn is_failure(self) -> bool {
        self == Status::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "true",
            Status::Fail => "false",
            Status::HypothesisViolated => "hypothesis-violated",
            Status::Skipped => "skipped",
            Status::Reported => "reported",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One compared pair inside a check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Link {
    pub fn le(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        Link {
            name: name.to_string(),
            lhs,
            rhs,
            relation: Relation::Le,
            slack,
            tolerance,
            pass: slack >= -tolerance,
        }
    }

    pub fn ge(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = lhs - rhs;
        Link {
            name: name.to_string(),
            lhs,
            rhs,
            relation: Relation::Ge,
            slack,
            tolerance,
            pass: slack >= -tolerance,
        }
    }

    /// Identity link; `residual` is already scaled, compared against `tolerance`.
    pub fn eq(name: &str, lhs: f64, rhs: f64, residual: f64, tolerance: f64) -> Self {
        Link {
            name: name.to_string(),
            lhs,
            rhs,
            relation: Relation::Eq,
            slack: residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

/// Result of one named check on one body.
///
/// For inequalities `slack = rhs - lhs` and the check passes when
/// `slack >= -tolerance`; for identities `slack` is the residual relative to
/// the natural scale of the two sides and the check passes when
/// `slack <= tolerance`. Ratio reports carry the ratio in `slack`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub body_id: String,
    pub check: String,
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub status: Status,
    pub links: Vec<Link>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationRecord {
    /// Record from links; the headline values are the first failing link, else the first link.
    pub fn from_links(check: &str, anchor: &str, links: Vec<Link>) -> Self {
        assert!(!links.is_empty(), "a record needs at least one link");
        let all_pass = links.iter().all(|l| l.pass);
        let head = links.iter().find(|l| !l.pass).unwrap_or(&links[0]).clone();
        VerificationRecord {
            body_id: String::new(),
            check: check.to_string(),
            anchor: anchor.to_string(),
            lhs: head.lhs,
            rhs: head.rhs,
            slack: head.slack,
            tolerance: head.tolerance,
            status: if all_pass { Status::Pass } else { Status::Fail },
            links,
            metrics: BTreeMap::new(),
            note: None,
        }
    }

    pub fn single(check: &str, anchor: &str, link: Link) -> Self {
        Self::from_links(check, anchor, vec![link])
    }

    /// A record without pass/fail: skipped, reported or hypothesis-violated.
    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn placeholder(check: &str, anchor: &str, status: Status, note: impl Into<String>) -> Self {
        VerificationRecord {
            body_id: String::new(),
            check: check.to_string(),
            anchor: anchor.to_string(),
            lhs: 0.0,
            rhs: 0.0,
            slack: 0.0,
            tolerance: 0.0,
            status,
            links: Vec::new(),
            metrics: BTreeMap::new(),
            note: Some(note.into()),
        }
    }

    pub fn for_body(mut self, id: impl Into<String>) -> Self {
        self.body_id = id.into();
        self
    }

    pub fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn link(&self, name: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.name == name)
    }
}

/// Tolerances used by the checkers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative residual allowed for identities.
    pub identity: f64,
    /// Absolute negative slack allowed for inequalities.
    pub inequality: f64,
    /// `‖h/K - h^p‖_∞ / ‖h^p‖_∞` below which a body counts as self-similar.
    pub hypothesis: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-8,
            inequality: 1e-9,
            hypothesis: 1e-6,
        }
    }
}
