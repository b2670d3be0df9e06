//! Seeded test corpora of strictly convex bodies.
//!
//! A corpus directory holds one body JSON per entry plus `manifest.json`
//! listing family, parameters and convexity margin. Generation draws from a
//! single ChaCha8 stream in family order, so a fixed seed gives byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body::{BodyRecord, ConvexBody, HarmonicTerm, SpaceCache};
use crate::error::{Error, Result};
use crate::sphere::{Harmonics, Resolution};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "conevol-corpus";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BallFamily {
    pub radii: Vec<f64>,
}

impl Default for BallFamily {
    fn default() -> Self {
        BallFamily { radii: vec![1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TranslatedFamily {
    pub count: usize,
    /// Offsets are drawn uniformly in the ball of this radius.
    pub max_offset: f64,
    pub explicit: Vec<[f64; 3]>,
}

impl Default for TranslatedFamily {
    fn default() -> Self {
        TranslatedFamily {
            count: 0,
            max_offset: 0.3,
            explicit: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EllipsoidFamily {
    pub count: usize,
    pub min_axis: f64,
    pub max_axis: f64,
    pub explicit: Vec<Vec<f64>>,
}

impl Default for EllipsoidFamily {
    fn default() -> Self {
        EllipsoidFamily {
            count: 0,
            min_axis: 0.8,
            max_axis: 1.25,
            explicit: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbedFamily {
    pub count: usize,
    /// Each body gets between 1 and `max_terms` harmonic terms.
    pub max_terms: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub min_amplitude: f64,
    pub max_amplitude: f64,
}

impl Default for PerturbedFamily {
    fn default() -> Self {
        PerturbedFamily {
            count: 0,
            max_terms: 3,
            min_degree: 1,
            max_degree: 6,
            min_amplitude: 0.01,
            max_amplitude: 0.25,
        }
    }
}

/// Families, counts and parameter ranges of a corpus.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub seed: u64,
    pub balls: BallFamily,
    pub translated: TranslatedFamily,
    pub ellipsoids: EllipsoidFamily,
    pub perturbed: PerturbedFamily,
}

impl CorpusSpec {
    /// No bodies at all.
    pub fn empty(seed: u64) -> Self {
        CorpusSpec {
            seed,
            balls: BallFamily { radii: Vec::new() },
            ..Default::default()
        }
    }

    /// Mixed corpus of `count` bodies: one unit ball, then roughly 1/5 translated
    /// balls, 1/5 ellipsoids and the rest perturbed balls.
    pub fn mixed(count: usize, seed: u64) -> Self {
        let mut spec = CorpusSpec::empty(seed);
        if count == 0 {
            return spec;
        }
        spec.balls.radii = vec![1.0];
        let rest = count - 1;
        spec.translated.count = rest / 5;
        spec.ellipsoids.count = rest / 5;
        spec.perturbed.count = rest - 2 * (rest / 5);
        spec
    }

    pub fn len(&self) -> usize {
        self.balls.radii.len()
            + self.translated.count
            + self.translated.explicit.len()
            + self.ellipsoids.count
            + self.ellipsoids.explicit.len()
            + self.perturbed.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.balls.radii.iter().any(|r| !(*r > 0.0)) {
            return bad("ball radii must be positive".into());
        }
        if !(self.translated.max_offset >= 0.0 && self.translated.max_offset < 1.0) {
            return bad(format!(
                "max_offset must lie in [0, 1), got {}",
                self.translated.max_offset
            ));
        }
        let e = &self.ellipsoids;
        if !(e.min_axis > 0.0 && e.min_axis <= e.max_axis) {
            return bad(format!(
                "ellipsoid axis range [{}, {}] is invalid",
                e.min_axis, e.max_axis
            ));
        }
        let q = &self.perturbed;
        if q.count > 0 {
            if q.max_terms == 0
                || q.min_degree == 0 && q.max_degree == 0
                || q.min_degree > q.max_degree
            {
                return bad(
                    "perturbed family needs max_terms >= 1 and min_degree <= max_degree".into(),
                );
            }
            if !(q.min_amplitude > 0.0 && q.min_amplitude <= q.max_amplitude) {
                return bad(format!(
                    "amplitude range [{}, {}] is invalid",
                    q.min_amplitude, q.max_amplitude
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyParams {
    Ball {
        radius: f64,
    },
    TranslatedBall {
        offset: [f64; 3],
    },
    Ellipsoid {
        semiaxes: Vec<f64>,
    },
    PerturbedBall {
        /// `(degree, order, amplitude)` after clamping.
        terms: Vec<HarmonicTerm>,
        /// Amplitudes as drawn, before clamping.
        drawn: Vec<f64>,
    },
}

impl FamilyParams {
    pub fn family(&self) -> &'static str {
        match self {
            FamilyParams::Ball { .. } => "ball",
            FamilyParams::TranslatedBall { .. } => "translated-ball",
            FamilyParams::Ellipsoid { .. } => "ellipsoid",
            FamilyParams::PerturbedBall { .. } => "perturbed-ball",
        }
    }

    pub fn build(&self, space: &Arc<Harmonics>) -> Result<ConvexBody> {
        match self {
            FamilyParams::Ball { radius } => ConvexBody::ball(space, *radius),
            FamilyParams::TranslatedBall { offset } => {
                ConvexBody::translated_ball(space, Vector3::from(*offset))
            }
            FamilyParams::Ellipsoid { semiaxes } => ConvexBody::ellipsoid(space, semiaxes),
            FamilyParams::PerturbedBall { terms, .. } => ConvexBody::perturbed_ball(space, terms),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub file: String,
    pub family: String,
    pub params: FamilyParams,
    pub margin: f64,
    /// Perturbation amplitudes were scaled down to keep the body strictly convex.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub dimension: usize,
    pub degree: usize,
    pub resolution: Resolution,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported manifest format {:?} version {}",
                m.format, m.version
            )));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug)]
pub struct CorpusBody {
    pub entry: ManifestEntry,
    pub body: ConvexBody,
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vector3<f64> {
    loop {
        let z = if n == 1 {
            0.0
        } else {
            rng.random_range(-1.0..1.0)
        };
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), z);
        let r = v.norm();
        if r > 1e-3 && r <= 1.0 {
            return v / r;
        }
    }
}

fn random_order(rng: &mut ChaCha8Rng, n: usize, l: usize) -> i64 {
    let l = l as i64;
    if n == 1 {
        if rng.random_bool(0.5) {
            l
        } else {
            -l
        }
    } else {
        rng.random_range(-l..=l)
    }
}

/// Scales `terms` to half the amplitude at which convexity is lost, if they exceed it.
fn clamp_terms(
    space: &Arc<Harmonics>,
    terms: &[HarmonicTerm],
) -> Result<(Vec<HarmonicTerm>, bool)> {
    let limit = ConvexBody::perturbation_limit(space, terms)?;
    if limit > 2.0 {
        return Ok((terms.to_vec(), false));
    }
    let s = 0.5 * limit;
    Ok((terms.iter().map(|&(l, m, a)| (l, m, a * s)).collect(), true))
}

/// Draws every body of `spec` on `space`, in family order.
pub fn generate(spec: &CorpusSpec, space: &Arc<Harmonics>) -> Result<Vec<CorpusBody>> {
    spec.validate()?;
    let n = space.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut drafts: Vec<(String, FamilyParams, bool)> = Vec::with_capacity(spec.len());

    for (i, &radius) in spec.balls.radii.iter().enumerate() {
        drafts.push((format!("ball-{i:03}"), FamilyParams::Ball { radius }, false));
    }

    let t = &spec.translated;
    let mut offsets: Vec<[f64; 3]> = t.explicit.clone();
    for _ in 0..t.count {
        let dir = unit_direction(&mut rng, n);
        let r = t.max_offset * rng.random::<f64>().powf(1.0 / (n as f64 + 1.0));
        offsets.push((dir * r).into());
    }
    for (i, offset) in offsets.into_iter().enumerate() {
        drafts.push((
            format!("translated-{i:03}"),
            FamilyParams::TranslatedBall { offset },
            false,
        ));
    }

    let e = &spec.ellipsoids;
    let mut axes: Vec<Vec<f64>> = e.explicit.clone();
    for _ in 0..e.count {
        axes.push(
            (0..=n)
                .map(|_| {
                    if e.max_axis > e.min_axis {
                        rng.random_range(e.min_axis..e.max_axis)
                    } else {
                        e.min_axis
                    }
                })
                .collect(),
        );
    }
    for (i, semiaxes) in axes.into_iter().enumerate() {
        drafts.push((
            format!("ellipsoid-{i:03}"),
            FamilyParams::Ellipsoid { semiaxes },
            false,
        ));
    }

    let q = &spec.perturbed;
    let min_degree = q.min_degree.max(1);
    for i in 0..q.count {
        let count = rng.random_range(1..=q.max_terms);
        let mut drawn_terms = Vec::with_capacity(count);
        for _ in 0..count {
            let l = rng.random_range(min_degree..=q.max_degree);
            let order = random_order(&mut rng, n, l);
            let a = if q.max_amplitude > q.min_amplitude {
                rng.random_range(q.min_amplitude..q.max_amplitude)
            } else {
                q.min_amplitude
            };
            drawn_terms.push((l, order, a));
        }
        let (terms, clamped) = clamp_terms(space, &drawn_terms)?;
        let drawn = drawn_terms.iter().map(|t| t.2).collect();
        drafts.push((
            format!("perturbed-{i:03}"),
            FamilyParams::PerturbedBall { terms, drawn },
            clamped,
        ));
    }

    drafts
        .into_iter()
        .map(|(id, params, clamped)| {
            let body = params.build(space)?;
            Ok(CorpusBody {
                entry: ManifestEntry {
                    file: format!("{id}.json"),
                    family: params.family().to_string(),
                    margin: body.convexity_margin(),
                    id,
                    params,
                    clamped,
                },
                body,
            })
        })
        .collect()
}

pub fn manifest_for(spec: &CorpusSpec, space: &Harmonics, bodies: &[CorpusBody]) -> Manifest {
    Manifest {
        format: MANIFEST_FORMAT.to_string(),
        version: MANIFEST_VERSION,
        dimension: space.dimension(),
        degree: space.degree(),
        resolution: space.grid().resolution(),
        seed: spec.seed,
        entries: bodies.iter().map(|b| b.entry.clone()).collect(),
    }
}

/// Generates `spec` and writes the body files and manifest into `dir`.
pub fn write_corpus(dir: &Path, spec: &CorpusSpec, space: &Arc<Harmonics>) -> Result<Manifest> {
    let bodies = generate(spec, space)?;
    fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    for b in &bodies {
        let path = dir.join(&b.entry.file);
        let text = BodyRecord::from_body(&b.body, Some(b.entry.id.clone())).to_json()?;
        fs::write(&path, text + "\n").map_err(|e| Error::from(e).in_file(&path))?;
    }
    let manifest = manifest_for(spec, space, &bodies);
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .map_err(|e| Error::from(e).in_file(&path))?;
    Ok(manifest)
}

fn read_text(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))
}

/// Loads every body listed in `dir/manifest.json`; errors name the offending file.
pub fn load_corpus(dir: &Path) -> Result<(Manifest, Vec<(String, ConvexBody)>)> {
    let path = dir.join(MANIFEST_FILE);
    let manifest = Manifest::from_json(&read_text(&path)?).map_err(|e| e.in_file(&path))?;
    let mut cache = SpaceCache::new();
    let mut bodies = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let path = dir.join(&entry.file);
        let body = BodyRecord::from_json(&read_text(&path)?)
            .and_then(|r| r.to_body(&mut cache))
            .map_err(|e| e.in_file(&path))?;
        bodies.push((entry.id.clone(), body));
    }
    Ok((manifest, bodies))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_counts_add_up() {
        for count in [0, 1, 7, 20, 50] {
            assert_eq!(CorpusSpec::mixed(count, 1).len(), count);
        }
    }

    #[test]
    fn generation_is_deterministic_and_convex() {
        let space = Harmonics::for_degree(2, 12).unwrap();
        let spec = CorpusSpec::mixed(12, 42);
        let a = generate(&spec, &space).unwrap();
        let b = generate(&spec, &space).unwrap();
        assert_eq!(a.len(), 12);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.entry, y.entry);
            assert!(x.entry.margin > 0.0);
            assert_eq!(x.body.coeffs().values(), y.body.coeffs().values());
        }
    }

    #[test]
    fn large_amplitudes_are_clamped() {
        let space = Harmonics::for_degree(1, 16).unwrap();
        let mut spec = CorpusSpec::empty(3);
        spec.perturbed.count = 5;
        spec.perturbed.min_degree = 6;
        spec.perturbed.min_amplitude = 0.5;
        spec.perturbed.max_amplitude = 0.6;
        for b in generate(&spec, &space).unwrap() {
            assert!(b.entry.clamped);
            assert!(b.entry.margin > 0.4, "margin {}", b.entry.margin);
        }
    }
}
