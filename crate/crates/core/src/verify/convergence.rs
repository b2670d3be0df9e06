//! Grid-refinement study on translated ellipsoids.
//!
//! On a band-limited body every identity holds to round-off at its own
//! degree, so refinement is measured against a reference instead: the
//! closed-form ellipsoid for curvature and volume, and the same body at a
//! much higher degree for the identity integrals.

use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::identities::*;
use super::record::Tolerances;
use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::sphere::{sphere_measure, Harmonics};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceSpec {
    pub dimension: usize,
    pub semiaxes: Vec<f64>,
    /// Translation applied after building the ellipsoid, so odd moments do not vanish.
    pub offset: [f64; 3],
    pub degrees: Vec<usize>,
    pub reference_degree: usize,
    pub exponents: Vec<f64>,
}

impl ConvergenceSpec {
    pub fn for_dimension(dimension: usize) -> Self {
        let (semiaxes, offset, reference_degree) = if dimension == 1 {
            (vec![2.5, 1.0], [0.1, -0.05, 0.0], 128)
        } else {
            (vec![2.0, 1.0, 0.8], [0.1, -0.05, 0.08], 64)
        };
        ConvergenceSpec {
            dimension,
            semiaxes,
            offset,
            degrees: vec![8, 16, 32],
            reference_degree,
            exponents: vec![-2.5, -1.5, -0.5, 0.5, 2.0],
        }
    }
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self::for_dimension(2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dimension: usize,
    pub degree: usize,
    pub quantity: String,
    pub value: f64,
    pub reference: f64,
    /// `|value - reference| / max(|reference|, 1)`.
    pub error: f64,
}

fn closed_form_volume(semiaxes: &[f64]) -> f64 {
    let n = semiaxes.len() - 1;
    let prod: f64 = semiaxes.iter().product();
    // |B^{n+1}| = |S^n| / (n+1)
    prod * sphere_measure(n) / (n as f64 + 1.0)
}

fn build(spec: &ConvergenceSpec, degree: usize) -> Result<ConvexBody> {
    let space = Harmonics::for_degree(spec.dimension, degree)?;
    ConvexBody::ellipsoid(&space, &spec.semiaxes)?.translated(Vector3::from(spec.offset))
}

/// Sampled quantities of `body`, each with its closed-form value when one exists.
fn quantities(
    spec: &ConvergenceSpec,
    body: &ConvexBody,
) -> Result<Vec<(String, f64, Option<f64>)>> {
    let n = spec.dimension;
    let tol = Tolerances::default();
    let a = &spec.semiaxes;
    let prod: f64 = a.iter().product();

    // Curvature depends only on the normal: K = h_E^{n+2} / (Π a)².
    let k = body.gauss_curvature()?;
    let mut worst = 0.0f64;
    let mut kmax = 0.0f64;
    for (x, kv) in body.grid().nodes().iter().zip(k.values()) {
        let he = (0..=n)
            .map(|i| a[i] * a[i] * x[i] * x[i])
            .sum::<f64>()
            .sqrt();
        let exact = he.powi(n as i32 + 2) / (prod * prod);
        worst = worst.max((kv - exact).abs());
        kmax = kmax.max(exact);
    }
    let mut out = vec![
        ("curvature".to_string(), worst / kmax, Some(0.0)),
        (
            "cone-volume-total".to_string(),
            body.cone_volume_total()?,
            Some((n as f64 + 1.0) * closed_form_volume(a)),
        ),
    ];
    let w1 = Vector3::new(1.0, 0.0, 0.0);
    let w2 = if n == 1 {
        Vector3::new(0.6, 0.8, 0.0)
    } else {
        Vector3::new(0.6, 0.0, 0.8)
    };
    out.push((
        "divergence-identity".into(),
        check_divergence_identity(body, &w1, &w2, &tol)?.lhs,
        None,
    ));
    out.push((
        "centroaffine-identity".into(),
        check_centroaffine_identity(body, &tol)?.lhs,
        None,
    ));
    for &p in spec.exponents.iter().filter(|&&p| p != -(n as f64 + 1.0)) {
        out.push((
            format!("ibp-identity[p={p}]"),
            check_ibp_identity_body(body, p, &tol)?.lhs,
            None,
        ));
        out.push((
            format!("centroid-chain[p={p}]"),
            check_centroid_chain(body, p, &tol)?.lhs,
            None,
        ));
    }
    Ok(out)
}

/// One row per (degree, quantity), in `spec.degrees` order.
pub fn convergence_study(spec: &ConvergenceSpec) -> Result<Vec<ConvergenceRow>> {
    if spec.semiaxes.len() != spec.dimension + 1 {
        return Err(Error::InvalidParameter(format!(
            "expected {} semiaxes, got {}",
            spec.dimension + 1,
            spec.semiaxes.len()
        )));
    }
    if spec.degrees.iter().any(|&l| l >= spec.reference_degree) {
        return Err(Error::InvalidParameter(
            "reference degree must exceed every studied degree".into(),
        ));
    }
    let reference = quantities(spec, &build(spec, spec.reference_degree)?)?;
    let mut rows = Vec::new();
    for &degree in &spec.degrees {
        let q = quantities(spec, &build(spec, degree)?)?;
        for ((name, value, exact), (_, ref_value, _)) in q.into_iter().zip(&reference) {
            let reference = exact.unwrap_or(*ref_value);
            rows.push(ConvergenceRow {
                dimension: spec.dimension,
                degree,
                error: (value - reference).abs() / reference.abs().max(1.0),
                quantity: name,
                value,
                reference,
            });
        }
    }
    Ok(rows)
}

/// Error of `quantity` at `degree`, if present.
pub fn row_error(rows: &[ConvergenceRow], quantity: &str, degree: usize) -> Option<f64> {
    rows.iter()
        .find(|r| r.quantity == quantity && r.degree == degree)
        .map(|r| r.error)
}

/// Quantities whose error does not strictly decrease with degree while still above `floor`.
pub fn non_monotone(rows: &[ConvergenceRow], floor: f64) -> Vec<String> {
    let mut names: Vec<&str> = rows.iter().map(|r| r.quantity.as_str()).collect();
    names.dedup();
    let mut bad = Vec::new();
    for name in names {
        let errs: Vec<f64> = rows
            .iter()
            .filter(|r| r.quantity == name)
            .map(|r| r.error)
            .collect();
        if errs.windows(2).any(|w| w[0] > floor && w[1] >= w[0]) {
            bad.push(name.to_string());
        }
    }
    bad
}

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dimension",
        "degree",
        "quantity",
        "value",
        "reference",
        "error",
    ])?;
    for r in rows {
        w.write_record([
            r.dimension.to_string(),
            r.degree.to_string(),
            r.quantity.clone(),
            format!("{:e}", r.value),
            format!("{:e}", r.reference),
            format!("{:e}", r.error),
        ])?;
    }
    w.flush()?;
    Ok(())
}
