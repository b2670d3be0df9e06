//! Checkers for the stability inequalities.

use nalgebra::Vector3;

use super::constants::StabilityConstants;
use super::record::{Link, Status, Tolerances, VerificationRecord};
use crate::body::{self, ConvexBody};
use crate::error::{Error, Result};
use crate::sphere::{Harmonics, ScalarField};

fn require_origin_interior(body: &ConvexBody) -> Result<()> {
    let min_support = body.min_support();
    if min_support > 0.0 {
        Ok(())
    } else {
        Err(Error::OriginNotInterior { min_support })
    }
}

/// `n ∫|X|² dV <= ∫ h(Δ̄h + nh) dV + n |∫X dV|² / ∫dV`.
pub fn check_key_inequality(body: &ConvexBody, tol: &Tolerances) -> Result<VerificationRecord> {
    require_origin_interior(body)?;
    let grid = body.grid();
    let n = body.dimension() as f64;
    let density = body.cone_volume_density()?;
    let rho = density.values();
    let h = body.support().values();
    let lap = body.laplacian();
    let xs = body.boundary_map().values();

    let x2: Vec<f64> = xs
        .iter()
        .zip(rho)
        .map(|(x, r)| x.norm_squared() * r)
        .collect();
    let lhs = n * grid.quadrature(&x2);
    let hh: Vec<f64> = (0..h.len())
        .map(|j| h[j] * (lap.values()[j] + n * h[j]) * rho[j])
        .collect();
    let weighted: Vec<Vector3<f64>> = xs.iter().zip(rho).map(|(x, r)| x * *r).collect();
    let moment = grid.quadrature_vec(&weighted);
    let total = grid.quadrature(rho);
    let rhs = grid.quadrature(&hh) + n * moment.norm_squared() / total;

    Ok(VerificationRecord::single(
        "key-inequality",
        "Let $X=Dh:\\mathbb S^n \\rightarrow \\partial K$",
        Link::le("key-inequality", lhs, rhs, tol.inequality),
    ))
}

/// `n ∫|Dh̃|² dθ <= (M/m) ∫ h̃(Δ̄h̃ + nh̃) dθ`, plus the pointwise identity
/// `Δ̄h̃ + nh̃ = Δ̄h + nh`.
pub fn check_basic_estimate(body: &ConvexBody, tol: &Tolerances) -> Result<VerificationRecord> {
    require_origin_interior(body)?;
    let grid = body.grid();
    let n = body.dimension() as f64;
    let density = body.cone_volume_density()?;
    let ratio = density.max() / density.min();
    let centered = body.translated(-body.centroid()?)?;

    let ht = centered.support().values();
    let grad2 = centered.gradient().norm_squared();
    let lap_t = centered.laplacian();
    let lap = body.laplacian();
    let h = body.support().values();

    let d2: Vec<f64> = ht
        .iter()
        .zip(grad2.values())
        .map(|(h, g)| g + h * h)
        .collect();
    let lhs = n * grid.quadrature(&d2);
    let radial: Vec<f64> = (0..ht.len())
        .map(|j| ht[j] * (lap_t.values()[j] + n * ht[j]))
        .collect();
    let rhs = ratio * grid.quadrature(&radial);

    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..h.len() {
        let a = lap_t.values()[j] + n * ht[j];
        let b = lap.values()[j] + n * h[j];
        worst = worst.max((a - b).abs());
        scale = scale.max(b.abs());
    }
    let pointwise = worst / scale.max(1.0);

    Ok(VerificationRecord::from_links(
        "basic-estimate",
        "Let $m\\leq \\frac{h}{\\mathcal{K}}\\leq M$",
        vec![
            Link::le("basic-estimate", lhs, rhs, tol.inequality),
            Link::eq("translation-invariance", worst, 0.0, pointwise, 1e-10),
        ],
    )
    .metric("density_ratio", ratio))
}

/// Poincaré inequality `n ⨍(u - ū)² <= ⨍|∇̄u|²` for a band-limited field.
pub fn check_poincare_field(
    space: &Harmonics,
    u: &ScalarField,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    let grad = space.gradient(u)?;
    poincare_record(space, u, &grad.field.norm_squared(), tol)
        .map(|r| r.metric("band_residual", grad.band_residual))
}

fn poincare_record(
    space: &Harmonics,
    u: &ScalarField,
    grad2: &ScalarField,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    let grid = space.grid();
    let n = space.dimension() as f64;
    let measure = grid.measure();
    let mean = grid.quadrature(u.values()) / measure;
    let var: Vec<f64> = u.values().iter().map(|v| (v - mean) * (v - mean)).collect();
    let lhs = n * grid.quadrature(&var) / measure;
    let rhs = grid.quadrature(grad2.values()) / measure;
    let rec = VerificationRecord::single(
        "poincare",
        "Applying the Poincar\\'e inequality",
        Link::le("poincare", lhs, rhs, tol.inequality),
    );
    Ok(if rhs > 0.0 {
        rec.metric("ratio", lhs / rhs)
    } else {
        rec
    })
}

/// Poincaré inequality applied to the centred support function `h̃`.
pub fn check_poincare(body: &ConvexBody, tol: &Tolerances) -> Result<VerificationRecord> {
    require_origin_interior(body)?;
    let centered = body.translated(-body.centroid()?)?;
    poincare_record(
        body.space(),
        centered.support(),
        &centered.gradient().norm_squared(),
        tol,
    )
}

/// `δ₂(K̄, B) <= γ ε^{1/2}` with `ε = M/m - 1`.
pub fn check_stability_theorem(body: &ConvexBody, tol: &Tolerances) -> Result<VerificationRecord> {
    require_origin_interior(body)?;
    let k = StabilityConstants::new(body.dimension())?;
    let density = body.cone_volume_density()?;
    let eps = (density.max() / density.min() - 1.0).max(0.0);
    let normalized = body.normalize()?;
    let d2 = body::delta2(&normalized, &normalized.unit_ball_like()?)?;
    let bound = k.gamma * eps.sqrt();
    let mut rec = VerificationRecord::single(
        "stability-theorem",
        "$\\gamma$ depends only on $n$",
        Link::le("stability-theorem", d2, bound, tol.inequality),
    )
    .metric("epsilon", eps)
    .metric("delta2", d2)
    .metric("gamma", k.gamma)
    .metric("bound", bound);
    if bound > 0.0 {
        rec = rec.metric("tightness", d2 / bound);
    }
    Ok(rec)
}

/// Reports `α̂ = δ₂² diam(K₁∪K₂)^n / δ_H^{n+2}`; no pass/fail.
///
/// The record's `slack` carries `α̂`.
pub fn check_hausdorff_comparison(a: &ConvexBody, b: &ConvexBody) -> Result<VerificationRecord> {
    let anchor = "where $\\alpha_n$ is a dimensional constant";
    let n = a.dimension() as i32;
    let d2 = body::delta2(a, b)?;
    let dh = body::delta_hausdorff(a, b)?;
    let diam = body::union_diameter(a, b)?;
    let scale = a.support().sup_norm().max(b.support().sup_norm());
    if dh <= 1e-13 * scale {
        return Ok(VerificationRecord::placeholder(
            "hausdorff-comparison",
            anchor,
            Status::Skipped,
            "coincident",
        )
        .metric("delta_h", dh));
    }
    let lhs = d2 * d2;
    let rhs = diam.powi(-n) * dh.powi(n + 2);
    let alpha = lhs / rhs;
    let mut rec = VerificationRecord::single(
        "hausdorff-comparison",
        anchor,
        Link::le("hausdorff-comparison", lhs, rhs, 0.0),
    )
    .with_status(Status::Reported)
    .metric("delta2", d2)
    .metric("delta_h", dh)
    .metric("diameter", diam)
    .metric("alpha_hat", alpha);
    rec.slack = alpha;
    Ok(rec)
}

/// Links of the uniform diameter bound, for a body with `1-ε <= h/K <= 1+ε`.
///
/// The pinching link uses the measured `δ_H(K̄, B)` in place of the unstated
/// `c₂ ε₀^{1/(n+2)}`.
pub fn check_diameter_bound_chain(
    body: &ConvexBody,
    eps: f64,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    require_origin_interior(body)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "ε must lie in [0, 1), got {eps}"
        )));
    }
    let density = body.cone_volume_density()?;
    let (lo, hi) = (density.min(), density.max());
    if lo < 1.0 - eps - tol.inequality || hi > 1.0 + eps + tol.inequality {
        return Err(Error::OutsideHypothesis {
            lower: 1.0 - eps,
            upper: 1.0 + eps,
            min: lo,
            max: hi,
        });
    }
    let grid = body.grid();
    let n = body.dimension();
    let nf = n as f64;
    let k = StabilityConstants::new(n)?;
    let measure = grid.measure();
    let total = grid.quadrature(density.values());

    let centered = body.centered_support()?;
    let (ht_min, ht_max) = (centered.min(), centered.max());
    let normalized = body.normalize()?;
    let ball = normalized.unit_ball_like()?;
    let eta = body::delta_hausdorff(&normalized, &ball)?;
    let pinch = if eta < 1.0 {
        (1.0 - eta) / (1.0 + eta)
    } else {
        0.0
    };
    let t = tol.inequality;

    let links = vec![
        Link::le(
            "normalized-support-bound",
            normalized.support().max(),
            1.0 / k.c1,
            t,
        ),
        Link::le(
            "union-diameter",
            body::union_diameter(&normalized, &ball)?,
            2.0 * (1.0 + 1.0 / k.c1),
            t,
        ),
        Link::ge(
            "circumscribed-volume",
            ht_max.powi(n as i32 + 1) * measure,
            total,
            t,
        ),
        Link::ge(
            "max-centered-support",
            ht_max,
            (1.0 - eps).powf(1.0 / (nf + 1.0)),
            t,
        ),
        Link::ge("pinching", ht_min, ht_max * pinch, t),
        Link::ge("inradius", ht_min, 0.0, 0.0),
        Link::le("volume-upper", total, (1.0 + eps) * measure, t),
    ];
    Ok(VerificationRecord::from_links(
        "diameter-chain",
        "There exist $\\varepsilon_0>0$ and $C=C(\\varepsilon_0,n)$",
        links,
    )
    .metric("epsilon", eps)
    .metric("eta", eta)
    .metric("inradius_lower", ht_min))
}
