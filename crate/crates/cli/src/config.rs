//! TOML experiment configuration.
//!
//! Every section is optional; missing values fall back to the defaults below.
//! Command-line flags override the matching top-level fields.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use conevol::body::{BodyRecord, SpaceCache};
use conevol::corpus::CorpusSpec;
use conevol::solver::{harmonic_target, target_with_deviation, Perturbation, SolverSettings};
use conevol::sphere::default_degree;
use conevol::verify::{ConvergenceSpec, SweepConfig};
use conevol::{ConvexBody, Harmonics, Resolution, ScalarField, SphereGrid};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

use conevol::body::HarmonicTerm as Term;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub dimension: usize,
    /// Harmonic degree; defaults to 64 on S¹ and 32 on S².
    pub degree: Option<usize>,
    /// Grid resolution; defaults to the smallest grid exact for the degree.
    pub resolution: Option<Resolution>,
    pub out: PathBuf,
    /// Corpus read by `verify`; defaults to `<out>/corpus`.
    pub corpus_dir: Option<PathBuf>,
    /// Corpus written by `gen-corpus`; defaults to a 20-body mixed corpus.
    pub corpus: Option<CorpusSpec>,
    pub verify: SweepConfig,
    pub solve: SolveSection,
    pub probe: ProbeSection,
    pub sweep: SweepSection,
    pub convergence: ConvergenceSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            dimension: 2,
            degree: None,
            resolution: None,
            out: PathBuf::from("out"),
            corpus_dir: None,
            corpus: None,
            verify: SweepConfig::default(),
            solve: SolveSection::default(),
            probe: ProbeSection::default(),
            sweep: SweepSection::default(),
            convergence: ConvergenceSection::default(),
        }
    }
}

/// Initial body or probe start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        #[serde(default = "one")]
        radius: f64,
    },
    Translated {
        offset: [f64; 3],
    },
    Ellipsoid {
        semiaxes: Vec<f64>,
    },
    /// `1 + Σ amplitude · Y/‖Y‖_∞`, terms as `[degree, order, amplitude]`.
    Perturbed {
        terms: Vec<Term>,
    },
    /// A body JSON file; its own grid and degree are used.
    File {
        path: PathBuf,
    },
}

/// Target density `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Constant {
        value: f64,
    },
    /// `1 + <c, x>`: the cone-volume density of the unit ball translated by `c`, at p = 0.
    Linear {
        offset: [f64; 3],
    },
    /// `1 + Σ amplitude · Y/‖Y‖_∞`, rescaled to `‖f - 1‖_∞ = deviation` when given.
    Harmonic {
        terms: Vec<Term>,
        #[serde(default)]
        deviation: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub p: f64,
    pub target: TargetSpec,
    pub initial: BodySpec,
    pub settings: SolverSettings,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            p: 0.0,
            target: TargetSpec::Constant { value: 1.0 },
            initial: BodySpec::Perturbed {
                terms: vec![(2, 2, 0.1)],
            },
            settings: SolverSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Start {
    pub label: String,
    pub body: BodySpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub p: f64,
    pub target: TargetSpec,
    pub starts: Vec<Start>,
    pub settings: SolverSettings,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            p: 0.0,
            target: TargetSpec::Harmonic {
                terms: vec![(2, 2, 0.03), (3, -3, 0.02)],
                deviation: Some(0.05),
            },
            starts: vec![
                Start {
                    label: "ball".into(),
                    body: BodySpec::Ball { radius: 1.0 },
                },
                Start {
                    label: "translated".into(),
                    body: BodySpec::Translated {
                        offset: [0.05, -0.03, 0.0],
                    },
                },
                Start {
                    label: "harmonic".into(),
                    body: BodySpec::Perturbed {
                        terms: vec![(2, 2, 0.1), (3, 3, 0.05)],
                    },
                },
            ],
            settings: SolverSettings::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub p_grid: Vec<f64>,
    pub perturbations: Vec<Perturbation>,
    pub settings: SolverSettings,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            p_grid: vec![-2.5, -1.5, -0.5, 0.0, 0.5],
            perturbations: vec![Perturbation {
                label: "deg2".into(),
                terms: vec![(2, 2, 0.1)],
            }],
            settings: SolverSettings::default(),
        }
    }
}

/// Overrides on top of the per-dimension convergence defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub semiaxes: Option<Vec<f64>>,
    pub offset: Option<[f64; 3]>,
    pub degrees: Option<Vec<usize>>,
    pub reference_degree: Option<usize>,
    pub exponents: Option<Vec<f64>>,
    /// Errors below this are treated as round-off when checking monotone decrease.
    pub floor: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (this build reads version {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        if !(1..=2).contains(&self.dimension) {
            bail!("dimension must be 1 or 2, got {}", self.dimension);
        }
        if let Some(r) = self.resolution {
            if r.dimension() != self.dimension {
                bail!("resolution {r} does not match dimension {}", self.dimension);
            }
        }
        self.verify.validate()?;
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.degree
            .unwrap_or_else(|| default_degree(self.dimension))
    }

    pub fn space(&self) -> Result<Arc<Harmonics>> {
        let degree = self.degree();
        let space = match self.resolution {
            Some(r) => Arc::new(Harmonics::new(Arc::new(SphereGrid::new(r)?), degree)?),
            None => Harmonics::for_degree(self.dimension, degree)?,
        };
        Ok(space)
    }

    pub fn corpus_spec(&self, seed: u64) -> CorpusSpec {
        self.corpus
            .clone()
            .unwrap_or_else(|| CorpusSpec::mixed(20, seed))
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.corpus_dir
            .clone()
            .unwrap_or_else(|| self.out.join("corpus"))
    }

    pub fn convergence_spec(&self) -> ConvergenceSpec {
        let c = &self.convergence;
        let base = ConvergenceSpec::for_dimension(self.dimension);
        ConvergenceSpec {
            dimension: self.dimension,
            semiaxes: c.semiaxes.clone().unwrap_or(base.semiaxes),
            offset: c.offset.unwrap_or(base.offset),
            degrees: c.degrees.clone().unwrap_or(base.degrees),
            reference_degree: c.reference_degree.unwrap_or(base.reference_degree),
            exponents: c.exponents.clone().unwrap_or(base.exponents),
        }
    }
}

impl BodySpec {
    pub fn build(&self, space: &Arc<Harmonics>) -> Result<ConvexBody> {
        let body = match self {
            BodySpec::Ball { radius } => ConvexBody::ball(space, *radius)?,
            BodySpec::Translated { offset } => {
                ConvexBody::translated_ball(space, Vector3::from(*offset))?
            }
            BodySpec::Ellipsoid { semiaxes } => ConvexBody::ellipsoid(space, semiaxes)?,
            BodySpec::Perturbed { terms } => ConvexBody::perturbed_ball(space, terms)?,
            BodySpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading body {}", path.display()))?;
                BodyRecord::from_json(&text)
                    .and_then(|r| r.to_body(&mut SpaceCache::new()))
                    .with_context(|| format!("loading body {}", path.display()))?
            }
        };
        Ok(body)
    }
}

impl TargetSpec {
    pub fn build(&self, space: &Harmonics) -> Result<ScalarField> {
        let f = match self {
            TargetSpec::Constant { value } => ScalarField::constant(space.grid(), *value),
            TargetSpec::Linear { offset } => {
                let c = Vector3::from(*offset);
                ScalarField::from_fn(space.grid(), |x| 1.0 + c.dot(x))
            }
            TargetSpec::Harmonic {
                terms,
                deviation: None,
            } => harmonic_target(space, terms)?,
            TargetSpec::Harmonic {
                terms,
                deviation: Some(d),
            } => target_with_deviation(space, terms, *d)?,
        };
        Ok(f)
    }
}
