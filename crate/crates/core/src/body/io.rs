//! JSON layout for bodies.
//!
//! ```json
//! {
//!   "format": "conevol-body",
//!   "version": 1,
//!   "dimension": 2,
//!   "degree": 32,
//!   "resolution": { "sphere": { "lat": 51, "lon": 102 } },
//!   "label": "ellipsoid",
//!   "coefficients": [3.5449077018110318, 0.0, ...]
//! }
//! ```
//!
//! Coefficients are in [`crate::sphere::harmonic_index`] order and round-trip bit-exactly.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ConvexBody;
use crate::error::{Error, Result};
use crate::sphere::{HarmonicCoeffs, Harmonics, Resolution, SphereGrid};

pub const BODY_FORMAT: &str = "conevol-body";
pub const BODY_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyRecord {
    pub format: String,
    pub version: u32,
    pub dimension: usize,
    pub degree: usize,
    pub resolution: Resolution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub coefficients: Vec<f64>,
}

impl BodyRecord {
    pub fn from_body(body: &ConvexBody, label: Option<String>) -> Self {
        BodyRecord {
            format: BODY_FORMAT.to_string(),
            version: BODY_FORMAT_VERSION,
            dimension: body.dimension(),
            degree: body.coeffs().degree(),
            resolution: body.grid().resolution(),
            label,
            coefficients: body.coeffs().values().to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: BodyRecord = serde_json::from_str(text)?;
        if rec.format != BODY_FORMAT || rec.version != BODY_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported body format {:?} version {}",
                rec.format, rec.version
            )));
        }
        if rec.resolution.dimension() != rec.dimension {
            return Err(Error::InvalidParameter(format!(
                "resolution {} does not match dimension {}",
                rec.resolution, rec.dimension
            )));
        }
        Ok(rec)
    }

    pub fn coeffs(&self) -> Result<HarmonicCoeffs> {
        HarmonicCoeffs::new(self.dimension, self.degree, self.coefficients.clone())
    }

    pub fn to_body(&self, cache: &mut SpaceCache) -> Result<ConvexBody> {
        let space = cache.get(self.resolution, self.degree)?;
        ConvexBody::from_coeffs(&space, self.coeffs()?)
    }
}

/// Shares one transform per (grid, degree) across loaded bodies.
#[derive(Default)]
pub struct SpaceCache {
    spaces: HashMap<(Resolution, usize), Arc<Harmonics>>,
}

impl SpaceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, resolution: Resolution, degree: usize) -> Result<Arc<Harmonics>> {
        if let Some(s) = self.spaces.get(&(resolution, degree)) {
            return Ok(s.clone());
        }
        let grid = Arc::new(SphereGrid::new(resolution)?);
        let space = Arc::new(Harmonics::new(grid, degree)?);
        self.spaces.insert((resolution, degree), space.clone());
        Ok(space)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn coefficients_round_trip_bit_exact(raw in proptest::collection::vec(-1.0f64..1.0, 25)) {
            let space = Harmonics::for_degree(2, 4).unwrap();
            let mut coeffs = HarmonicCoeffs::new(2, 4, raw.iter().map(|v| v * 1e-3).collect()).unwrap();
            coeffs.add_constant(1.0);
            let body = ConvexBody::from_coeffs(&space, coeffs.clone()).unwrap();
            let text = BodyRecord::from_body(&body, Some("p".into())).to_json().unwrap();
            let back = BodyRecord::from_json(&text).unwrap();
            let bits: Vec<u64> = back.coefficients.iter().map(|v| v.to_bits()).collect();
            let orig: Vec<u64> = coeffs.values().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(bits, orig);
        }
    }

    #[test]
    fn rejects_foreign_format() {
        let text = r#"{"format":"other","version":1,"dimension":1,"degree":1,
            "resolution":{"circle":{"nodes":8}},"coefficients":[1,0,0]}"#;
        assert!(BodyRecord::from_json(text).is_err());
    }
}
