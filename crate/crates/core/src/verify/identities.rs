//! Checkers for the integral identities of the cone-volume measure.

use nalgebra::{Matrix3, Vector3};

use super::record::{Link, Status, Tolerances, VerificationRecord};
use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::sphere::{Harmonics, ScalarField, SphereGrid};

fn require_positive(min: f64) -> Result<()> {
    if min > 0.0 {
        Ok(())
    } else {
        Err(Error::OriginNotInterior { min_support: min })
    }
}

fn excluded(p: f64, n: usize) -> bool {
    p == -(n as f64 + 1.0)
}

fn require_not_excluded(p: f64, n: usize) -> Result<()> {
    if excluded(p, n) || !p.is_finite() {
        Err(Error::ExcludedExponent {
            p,
            reason: format!("requires a finite p != -(n+1) = {}", -(n as f64 + 1.0)),
        })
    } else {
        Ok(())
    }
}

/// `Σ_j w_j a_j ⊗ b_j` over the nodes, restricted to the leading `(n+1)` block by the caller.
fn outer_quadrature(
    grid: &SphereGrid,
    a: impl Fn(usize) -> Vector3<f64>,
    b: impl Fn(usize) -> Vector3<f64>,
    weight: impl Fn(usize) -> f64,
) -> Matrix3<f64> {
    let mut out = Matrix3::zeros();
    for r in 0..3 {
        for c in 0..3 {
            let vals: Vec<f64> = (0..grid.len())
                .map(|j| a(j)[r] * b(j)[c] * weight(j))
                .collect();
            out[(r, c)] = grid.quadrature(&vals);
        }
    }
    out
}

fn block_max_abs(m: &Matrix3<f64>, n: usize) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..=n {
        for c in 0..=n {
            worst = worst.max(m[(r, c)].abs());
        }
    }
    worst
}

fn minus_scaled_identity(m: &Matrix3<f64>, s: f64, n: usize) -> Matrix3<f64> {
    let mut d = *m;
    for i in 0..=n {
        d[(i, i)] -= s;
    }
    d
}

/// `∫ <w₁, x/h> <X, w₂> dV = (∫dV/(n+1)) <w₁, w₂>` and its matrix form
/// `∫ X ⊗ (x/h) dV = (∫dV/(n+1)) Id`.
pub fn check_divergence_identity(
    body: &ConvexBody,
    w1: &Vector3<f64>,
    w2: &Vector3<f64>,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    require_positive(body.min_support())?;
    let grid = body.grid();
    let n = body.dimension();
    let radii = body.curvature_radii_product().values();
    let xs = grid.nodes();
    let bm = body.boundary_map().values();
    let total = body.cone_volume_total()?;
    let iso = total / (n as f64 + 1.0);

    // dV / h = det(∇̄²h + ḡh) dθ
    let vals: Vec<f64> = (0..grid.len())
        .map(|j| w1.dot(&xs[j]) * bm[j].dot(w2) * radii[j])
        .collect();
    let lhs = grid.quadrature(&vals);
    let rhs = iso * w1.dot(w2);
    let scalar_res = (lhs - rhs).abs() / (iso * (w1.norm() * w2.norm()).max(f64::MIN_POSITIVE));

    let m = outer_quadrature(grid, |j| bm[j], |j| xs[j], |j| radii[j]);
    let matrix_res = block_max_abs(&minus_scaled_identity(&m, iso, n), n) / iso;

    Ok(VerificationRecord::from_links(
        "divergence-identity",
        "By the divergence theorem, we have",
        vec![
            Link::eq("scalar", lhs, rhs, scalar_res, tol.identity),
            Link::eq("matrix", m[(0, 0)], iso, matrix_res, tol.identity),
        ],
    ))
}

fn ibp_record(
    grid: &SphereGrid,
    h: &[f64],
    boundary: &[Vector3<f64>],
    p: f64,
    tol: &Tolerances,
) -> VerificationRecord {
    let n = grid.dimension() as f64;
    let xs = grid.nodes();
    let hp: Vec<f64> = h.iter().map(|v| v.powf(p)).collect();
    let lhs_v: Vec<Vector3<f64>> = (0..h.len()).map(|j| xs[j] * (h[j] * hp[j])).collect();
    let rhs_v: Vec<Vector3<f64>> = (0..h.len()).map(|j| boundary[j] * hp[j]).collect();
    let lhs = grid.quadrature_vec(&lhs_v);
    let rhs = grid.quadrature_vec(&rhs_v) * ((p + 1.0) / (n + p + 1.0));
    let scale_vals: Vec<f64> = (0..h.len()).map(|j| h[j] * hp[j]).collect();
    let scale = grid.quadrature(&scale_vals);
    let residual = (lhs - rhs).norm() / scale;
    VerificationRecord::single(
        &format!("ibp-identity[p={p}]"),
        "Using $\\bar\\Delta x+nx=0$ and by integrating by parts",
        Link::eq(
            "ibp-identity",
            lhs.norm(),
            rhs.norm(),
            residual,
            tol.identity,
        ),
    )
    .metric("p", p)
}

/// `∫ h x h^p dθ = ((p+1)/(n+p+1)) ∫ X h^p dθ` for a positive band-limited field.
pub fn check_ibp_identity(
    space: &Harmonics,
    h: &ScalarField,
    p: f64,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    let n = space.dimension();
    require_not_excluded(p, n)?;
    require_positive(h.min())?;
    let grid = space.grid();
    let grad = space.gradient(h)?;
    let tangent = grad.field.to_ambient(grid)?;
    let boundary: Vec<Vector3<f64>> = tangent
        .values()
        .iter()
        .zip(grid.nodes())
        .zip(h.values())
        .map(|((t, x), hv)| t + x * *hv)
        .collect();
    Ok(ibp_record(grid, h.values(), &boundary, p, tol).metric("band_residual", grad.band_residual))
}

/// [`check_ibp_identity`] on a body's support function.
pub fn check_ibp_identity_body(
    body: &ConvexBody,
    p: f64,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    require_not_excluded(p, body.dimension())?;
    require_positive(body.min_support())?;
    Ok(ibp_record(
        body.grid(),
        body.support().values(),
        body.boundary_map().values(),
        p,
        tol,
    ))
}

/// `‖h/K - h^p‖_∞ / ‖h^p‖_∞`: how far the cone-volume density is from `h^p`.
pub fn self_similarity_residual(body: &ConvexBody, p: f64) -> Result<f64> {
    let density = body.cone_volume_density()?;
    let hp = body.support().map(|h| h.powf(p));
    let diff = density.zip_map(&hp, |a, b| (a - b).abs())?;
    Ok(diff.max() / hp.sup_norm())
}

/// `∫ x ⊗ x dV = (∫dV/(n+1)) Id`, conditional on `dV = h^p dθ`.
pub fn check_isotropic_identity(
    body: &ConvexBody,
    p: f64,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    let n = body.dimension();
    if excluded(p, n) {
        return Err(Error::ExcludedExponent {
            p,
            reason: "the isotropic identity requires p != -(n+1)".into(),
        });
    }
    let hyp = self_similarity_residual(body, p)?;
    let grid = body.grid();
    let density = body.cone_volume_density()?;
    let rho = density.values();
    let xs = grid.nodes();
    let total = grid.quadrature(rho);
    let iso = total / (n as f64 + 1.0);
    let m = outer_quadrature(grid, |j| xs[j], |j| xs[j], |j| rho[j]);
    let residual = block_max_abs(&minus_scaled_identity(&m, iso, n), n) / iso;
    let rec = VerificationRecord::single(
        &format!("isotropic-identity[p={p}]"),
        "If $dV=h^pd\\theta$, then",
        Link::eq("isotropic-identity", m[(0, 0)], iso, residual, tol.identity),
    )
    .metric("p", p)
    .metric("hypothesis_residual", hyp);
    Ok(if hyp > tol.hypothesis {
        rec.with_status(Status::HypothesisViolated)
    } else {
        rec
    })
}

/// Probe at the excluded exponent `p = -(n+1)`.
///
/// Measures the anisotropy `(max - min)/mean` of the diagonal of
/// `∫ x ⊗ x h^{-(n+1)} dθ` and how far `h/K` is from a multiple of
/// `h^{-(n+1)}`. Passes when the anisotropy exceeds `threshold`.
pub fn probe_excluded_exponent(body: &ConvexBody, threshold: f64) -> Result<VerificationRecord> {
    require_positive(body.min_support())?;
    let n = body.dimension();
    let p = -(n as f64 + 1.0);
    let grid = body.grid();
    let xs = grid.nodes();
    let h = body.support().values();
    let m = outer_quadrature(grid, |j| xs[j], |j| xs[j], |j| h[j].powf(p));
    let diag: Vec<f64> = (0..=n).map(|i| m[(i, i)]).collect();
    let mean = diag.iter().sum::<f64>() / diag.len() as f64;
    let spread = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - diag.iter().copied().fold(f64::INFINITY, f64::min);
    let anisotropy = spread / mean;

    let density = body.cone_volume_density()?;
    let ratios: Vec<f64> = density
        .values()
        .iter()
        .zip(h)
        .map(|(d, hv)| d / hv.powf(p))
        .collect();
    let rmax = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rmin = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let proportionality = (rmax - rmin) / (0.5 * (rmax + rmin));

    Ok(VerificationRecord::single(
        "excluded-exponent-probe",
        "Let $p\\neq -(n+1)$",
        Link::ge("anisotropy", anisotropy, threshold, 0.0),
    )
    .metric("p", p)
    .metric("anisotropy", anisotropy)
    .metric("proportionality_residual", proportionality))
}

fn tangential(grid: &SphereGrid, c: &Vector3<f64>, j: usize) -> nalgebra::Vector2<f64> {
    let fr = &grid.frames()[j];
    nalgebra::Vector2::new(c.dot(&fr[0]), c.dot(&fr[1]))
}

/// Algebraic chain behind the centroid decomposition, for `dμ = h^p dθ`
/// and `c = ∫X dμ / ∫dμ`:
/// `∫(|∇̄h|² - |∇̄h̃|²) dμ = ∫(|c|² - 2<c,x>h + <c,x>²) dμ`. Holds for every positive `h`.
pub fn check_centroid_chain(
    body: &ConvexBody,
    p: f64,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    let n = body.dimension();
    require_not_excluded(p, n)?;
    require_positive(body.min_support())?;
    let grid = body.grid();
    let xs = grid.nodes();
    let h = body.support().values();
    let grads = body.gradient().values();
    let bm = body.boundary_map().values();
    let mu: Vec<f64> = h.iter().map(|v| v.powf(p)).collect();
    let total = grid.quadrature(&mu);
    let weighted: Vec<Vector3<f64>> = bm.iter().zip(&mu).map(|(x, m)| x * *m).collect();
    let c = grid.quadrature_vec(&weighted) / total;

    let mut lhs_v = Vec::with_capacity(h.len());
    let mut rhs_v = Vec::with_capacity(h.len());
    let mut scale_v = Vec::with_capacity(h.len());
    for j in 0..h.len() {
        let g = grads[j];
        let gt = g - tangential(grid, &c, j);
        let cx = c.dot(&xs[j]);
        lhs_v.push((g.norm_squared() - gt.norm_squared()) * mu[j]);
        rhs_v.push((c.norm_squared() - 2.0 * cx * h[j] + cx * cx) * mu[j]);
        scale_v.push(
            (g.norm_squared() + c.norm_squared() + cx * cx + 2.0 * (cx * h[j]).abs()) * mu[j],
        );
    }
    let lhs = grid.quadrature(&lhs_v);
    let rhs = grid.quadrature(&rhs_v);
    let scale = grid.quadrature(&scale_v).max(f64::MIN_POSITIVE);
    Ok(VerificationRecord::single(
        &format!("centroid-chain[p={p}]"),
        "If $dV=h^pd\\theta$ and $p>-n-1$",
        Link::eq(
            "centroid-chain",
            lhs,
            rhs,
            (lhs - rhs).abs() / scale,
            tol.identity,
        ),
    )
    .metric("p", p)
    .metric("centroid_norm", c.norm()))
}

/// `∫|∇̄h|² dV = ∫|∇̄h̃|² dV + n(n+1-p)|c|²/((n+1)(n+1+p)) ∫dV`, conditional on `dV = h^p dθ`.
pub fn check_centroid_decomposition(
    body: &ConvexBody,
    p: f64,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    let n = body.dimension();
    require_not_excluded(p, n)?;
    let hyp = self_similarity_residual(body, p)?;
    let grid = body.grid();
    let density = body.cone_volume_density()?;
    let rho = density.values();
    let c = body.centroid()?;
    let grads = body.gradient().values();
    let total = grid.quadrature(rho);

    let h = body.support().values();
    let mut g2 = Vec::with_capacity(rho.len());
    let mut gt2 = Vec::with_capacity(rho.len());
    let mut h2 = Vec::with_capacity(rho.len());
    for j in 0..rho.len() {
        g2.push(grads[j].norm_squared() * rho[j]);
        gt2.push((grads[j] - tangential(grid, &c, j)).norm_squared() * rho[j]);
        h2.push(h[j] * h[j] * rho[j]);
    }
    let nf = n as f64;
    let coef = nf * (nf + 1.0 - p) / ((nf + 1.0) * (nf + 1.0 + p));
    let lhs = grid.quadrature(&g2);
    let rhs = grid.quadrature(&gt2) + coef * c.norm_squared() * total;
    // ∫h² dV has the homogeneity of both sides and stays away from zero on the ball.
    let scale = lhs.abs().max(rhs.abs()).max(grid.quadrature(&h2));
    let residual = (lhs - rhs).abs() / scale;
    let rec = VerificationRecord::single(
        &format!("centroid-decomposition[p={p}]"),
        "If $dV=h^pd\\theta$ and $p>-n-1$",
        Link::eq("centroid-decomposition", lhs, rhs, residual, tol.identity),
    )
    .metric("p", p)
    .metric("hypothesis_residual", hyp);
    Ok(if hyp > tol.hypothesis {
        rec.with_status(Status::HypothesisViolated)
    } else {
        rec
    })
}

/// `∫ ∇̄ log(h^{n+2}/K) ⊗ x dV = 0`, for every smooth strictly convex body.
///
/// The log-field is projected at the grid's full capacity before differentiation.
pub fn check_centroaffine_identity(
    body: &ConvexBody,
    tol: &Tolerances,
) -> Result<VerificationRecord> {
    require_positive(body.min_support())?;
    let n = body.dimension();
    let grid = body.grid();
    let h = body.support().values();
    let radii = body.curvature_radii_product().values();
    let log_field: Vec<f64> = h
        .iter()
        .zip(radii)
        .map(|(hv, r)| (n as f64 + 2.0) * hv.ln() + r.ln())
        .collect();
    let field = ScalarField::new(grid, log_field)?;
    let full = body.space().at_capacity()?;
    let grad = full.gradient(&field)?;
    let amb = grad.field.to_ambient(grid)?;
    let g = amb.values();
    let density = body.cone_volume_density()?;
    let rho = density.values();
    let xs = grid.nodes();
    let total = grid.quadrature(rho);
    let m = outer_quadrature(grid, |j| g[j], |j| xs[j], |j| rho[j]);
    let residual = block_max_abs(&m, n) / total;
    Ok(VerificationRecord::single(
        "centroaffine-identity",
        "For the background in centro-affine geometry",
        Link::eq(
            "centroaffine-identity",
            block_max_abs(&m, n),
            0.0,
            residual,
            tol.identity,
        ),
    )
    .metric("band_residual", grad.band_residual))
}
