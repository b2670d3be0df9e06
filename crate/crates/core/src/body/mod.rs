//! Smooth, strictly convex bodies stored by their support functions.

mod io;

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub use io::{BodyRecord, SpaceCache, BODY_FORMAT, BODY_FORMAT_VERSION};

/// `(degree, order, amplitude)` of one sup-normalized harmonic term.
pub type HarmonicTerm = (usize, i64, f64);

use crate::error::{Error, Result};
use crate::sphere::{
    basis_sup_norm, AmbientVectorField, HarmonicCoeffs, Harmonics, ScalarField, SphereGrid,
    SymTensorField, TangentField,
};

/// Bodies whose smallest principal radius of curvature falls below this are rejected.
pub const CONVEXITY_THRESHOLD: f64 = 1e-8;

/// Smallest eigenvalue of `∇̄²h + ḡh` at one node.
fn min_radius(n: usize, hess: &Matrix2<f64>, h: f64) -> f64 {
    if n == 1 {
        hess[(0, 0)] + h
    } else {
        let a = hess[(0, 0)] + h;
        let d = hess[(1, 1)] + h;
        let b = hess[(0, 1)];
        0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
    }
}

/// `det(∇̄²h + ḡh)`, i.e. `1/K`, at one node.
fn radii_product(n: usize, hess: &Matrix2<f64>, h: f64) -> f64 {
    if n == 1 {
        hess[(0, 0)] + h
    } else {
        let a = hess[(0, 0)] + h;
        let d = hess[(1, 1)] + h;
        a * d - hess[(0, 1)] * hess[(1, 0)]
    }
}

/// A smooth, strictly convex body, immutable once built.
///
/// All grid quantities (support values, gradient, Hessian, curvature and the
/// inverse Gauss map `X = ∇̄h + h x`) are computed at construction.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    space: Arc<Harmonics>,
    coeffs: HarmonicCoeffs,
    support: ScalarField,
    gradient: TangentField,
    hessian: SymTensorField,
    radii: ScalarField,
    boundary: AmbientVectorField,
    margin: f64,
}

impl ConvexBody {
    pub fn from_coeffs(space: &Arc<Harmonics>, coeffs: HarmonicCoeffs) -> Result<Self> {
        Self::with_threshold(space, coeffs, CONVEXITY_THRESHOLD)
    }

    /// Like [`ConvexBody::from_coeffs`] with a caller-chosen convexity threshold.
    pub fn with_threshold(
        space: &Arc<Harmonics>,
        coeffs: HarmonicCoeffs,
        threshold: f64,
    ) -> Result<Self> {
        let d = space.derivatives(&coeffs)?;
        let n = space.dimension();
        let grid = space.grid();
        let key = grid.resolution();
        let h = d.value.values();
        let hs = d.hessian.values();
        let mut margin = f64::INFINITY;
        let mut radii = Vec::with_capacity(h.len());
        for (hv, hm) in h.iter().zip(hs) {
            margin = margin.min(min_radius(n, hm, *hv));
            radii.push(radii_product(n, hm, *hv));
        }
        if margin.is_nan() || margin <= threshold {
            return Err(Error::NotStrictlyConvex { margin, threshold });
        }
        let tangent = d.gradient.to_ambient(grid)?;
        let boundary = tangent
            .values()
            .iter()
            .zip(grid.nodes())
            .zip(h)
            .map(|((t, x), hv)| t + x * *hv)
            .collect();
        Ok(ConvexBody {
            space: space.clone(),
            coeffs,
            support: d.value,
            gradient: d.gradient,
            hessian: d.hessian,
            radii: ScalarField::from_raw(key, radii),
            boundary: AmbientVectorField::from_raw(key, boundary),
            margin,
        })
    }

    /// Body whose support function is the degree-`L` projection of `h`.
    pub fn from_support_fn(
        space: &Arc<Harmonics>,
        h: impl Fn(&Vector3<f64>) -> f64,
    ) -> Result<Self> {
        let values = ScalarField::from_fn(space.grid(), h);
        let coeffs = space.analyze(&values)?;
        Self::from_coeffs(space, coeffs)
    }

    /// Ball of radius `r` centred at the origin.
    pub fn ball(space: &Arc<Harmonics>, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {r}"
            )));
        }
        let mut c = HarmonicCoeffs::zeros(space.dimension(), space.degree());
        c.add_constant(r);
        Self::from_coeffs(space, c)
    }

    /// Unit ball translated by `offset`, `|offset| < 1` so the origin stays interior.
    pub fn translated_ball(space: &Arc<Harmonics>, offset: Vector3<f64>) -> Result<Self> {
        let offset = restrict(space.dimension(), offset)?;
        if offset.norm() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "translation |c| = {} must be < 1",
                offset.norm()
            )));
        }
        let mut c = HarmonicCoeffs::zeros(space.dimension(), space.degree());
        c.add_constant(1.0);
        c.add_linear(&offset);
        Self::from_coeffs(space, c)
    }

    /// Ellipse/ellipsoid with the given semiaxes along the coordinate axes.
    pub fn ellipsoid(space: &Arc<Harmonics>, semiaxes: &[f64]) -> Result<Self> {
        let n = space.dimension();
        if semiaxes.len() != n + 1 || semiaxes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "expected {} positive semiaxes, got {semiaxes:?}",
                n + 1
            )));
        }
        let a: Vec<f64> = semiaxes.to_vec();
        Self::from_support_fn(space, move |x| {
            a.iter()
                .enumerate()
                .map(|(i, ai)| ai * ai * x[i] * x[i])
                .sum::<f64>()
                .sqrt()
        })
    }

    /// `1 + Σ amplitude · Y/‖Y‖_∞` over the given `(degree, order, amplitude)` terms.
    ///
    /// Each amplitude is the sup-norm of its term.
    pub fn perturbed_ball(space: &Arc<Harmonics>, terms: &[HarmonicTerm]) -> Result<Self> {
        let mut c = perturbation_coeffs(space, terms)?;
        c.add_constant(1.0);
        Self::from_coeffs(space, c)
    }

    /// Largest `t` such that `1 + t q` stays strictly convex with positive
    /// support at every node, where `q` is the perturbation given by `terms`.
    pub fn perturbation_limit(space: &Arc<Harmonics>, terms: &[HarmonicTerm]) -> Result<f64> {
        let q = perturbation_coeffs(space, terms)?;
        let d = space.derivatives(&q)?;
        let n = space.dimension();
        let mut worst_radius = 0.0f64;
        let mut worst_value = 0.0f64;
        for (v, hm) in d.value.values().iter().zip(d.hessian.values()) {
            worst_radius = worst_radius.min(min_radius(n, hm, *v));
            worst_value = worst_value.min(*v);
        }
        // min eig(I + tB) = 1 + t·min eig(B) for t > 0.
        let limit = |w: f64| if w < 0.0 { -1.0 / w } else { f64::INFINITY };
        Ok(limit(worst_radius).min(limit(worst_value)))
    }

    pub fn space(&self) -> &Arc<Harmonics> {
        &self.space
    }

    pub fn grid(&self) -> &SphereGrid {
        self.space.grid()
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    pub fn coeffs(&self) -> &HarmonicCoeffs {
        &self.coeffs
    }

    /// Support function `h` at the nodes.
    pub fn support(&self) -> &ScalarField {
        &self.support
    }

    /// `∇̄h` in frame components.
    pub fn gradient(&self) -> &TangentField {
        &self.gradient
    }

    /// `∇̄²h` in frame components.
    pub fn hessian(&self) -> &SymTensorField {
        &self.hessian
    }

    /// Inverse Gauss map `X = ∇̄h + h x` at the nodes.
    pub fn boundary_map(&self) -> &AmbientVectorField {
        &self.boundary
    }

    /// `1/K = det(∇̄²h + ḡh)` at the nodes.
    pub fn curvature_radii_product(&self) -> &ScalarField {
        &self.radii
    }

    /// Minimum eigenvalue of `∇̄²h + ḡh` over the nodes.
    pub fn convexity_margin(&self) -> f64 {
        self.margin
    }

    pub fn min_support(&self) -> f64 {
        self.support.min()
    }

    /// `Δ̄h`.
    pub fn laplacian(&self) -> ScalarField {
        self.hessian.trace()
    }

    fn require_origin_interior(&self) -> Result<()> {
        let min_support = self.min_support();
        if min_support > 0.0 {
            Ok(())
        } else {
            Err(Error::OriginNotInterior { min_support })
        }
    }

    /// Gauss curvature `K` as a function of the normal.
    pub fn gauss_curvature(&self) -> Result<ScalarField> {
        if self.margin <= 0.0 {
            return Err(Error::NotStrictlyConvex {
                margin: self.margin,
                threshold: 0.0,
            });
        }
        Ok(self.radii.map(|r| 1.0 / r))
    }

    /// Density `h/K` of `dV` with respect to `dθ`.
    pub fn cone_volume_density(&self) -> Result<ScalarField> {
        self.require_origin_interior()?;
        self.support.zip_map(&self.radii, |h, r| h * r)
    }

    /// `∫ dV = (n+1) · volume`.
    pub fn cone_volume_total(&self) -> Result<f64> {
        Ok(self.grid().quadrature(self.cone_volume_density()?.values()))
    }

    pub fn volume(&self) -> Result<f64> {
        Ok(self.cone_volume_total()? / (self.dimension() as f64 + 1.0))
    }

    /// `c(K) = ∫ X dV / ∫ dV`.
    pub fn centroid(&self) -> Result<Vector3<f64>> {
        let density = self.cone_volume_density()?;
        let grid = self.grid();
        let weighted: Vec<Vector3<f64>> = self
            .boundary
            .values()
            .iter()
            .zip(density.values())
            .map(|(x, d)| x * *d)
            .collect();
        Ok(grid.quadrature_vec(&weighted) / grid.quadrature(density.values()))
    }

    /// `h̃(x) = h(x) - <c(K), x>`, the support function of `K - c(K)`.
    pub fn centered_support(&self) -> Result<ScalarField> {
        let c = self.centroid()?;
        let grid = self.grid();
        let vals = self
            .support
            .values()
            .iter()
            .zip(grid.nodes())
            .map(|(h, x)| h - c.dot(x))
            .collect();
        ScalarField::new(grid, vals)
    }

    /// `K̄ = (K - c(K)) / mean(h)`.
    pub fn normalize(&self) -> Result<ConvexBody> {
        let c = self.centroid()?;
        let mean = self.grid().quadrature(self.support.values()) / self.grid().measure();
        let mut coeffs = self.coeffs.clone();
        coeffs.add_linear(&-c);
        coeffs.scale(1.0 / mean);
        ConvexBody::from_coeffs(&self.space, coeffs)
    }

    /// `|c(K̄)|`; the normalization is a fixed point exactly when this vanishes.
    pub fn normalization_residual(&self) -> Result<f64> {
        Ok(self.normalize()?.centroid()?.norm())
    }

    /// The body translated by `t` (support `h + <t, x>`).
    pub fn translated(&self, t: Vector3<f64>) -> Result<ConvexBody> {
        let t = restrict(self.dimension(), t)?;
        let mut coeffs = self.coeffs.clone();
        coeffs.add_linear(&t);
        ConvexBody::from_coeffs(&self.space, coeffs)
    }

    pub fn scaled(&self, factor: f64) -> Result<ConvexBody> {
        let mut coeffs = self.coeffs.clone();
        coeffs.scale(factor);
        ConvexBody::from_coeffs(&self.space, coeffs)
    }

    /// `R K`, whose support function is `h(Rᵀ x)`.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Result<ConvexBody> {
        let inv = rotation.transpose();
        let coeffs = &self.coeffs;
        ConvexBody::from_support_fn(&self.space, |x| {
            crate::sphere::evaluate_coeffs(coeffs, &(inv * x))
        })
    }

    /// The unit ball on this body's grid and degree.
    pub fn unit_ball_like(&self) -> Result<ConvexBody> {
        ConvexBody::ball(&self.space, 1.0)
    }

    pub fn summary(&self) -> Result<BodySummary> {
        let density = self.cone_volume_density()?;
        let grid = self.grid();
        let total = grid.quadrature(density.values());
        let c = self.centroid()?;
        let (m, big_m) = (density.min(), density.max());
        let centered = self.centered_support()?;
        Ok(BodySummary {
            dimension: self.dimension(),
            volume: total / (self.dimension() as f64 + 1.0),
            cone_volume_total: total,
            centroid: [c.x, c.y, c.z],
            density_min: m,
            density_max: big_m,
            epsilon: big_m / m - 1.0,
            mean_support: grid.quadrature(self.support.values()) / grid.measure(),
            centered_support_min: centered.min(),
            centered_support_max: centered.max(),
            convexity_margin: self.margin,
        })
    }
}

fn restrict(n: usize, v: Vector3<f64>) -> Result<Vector3<f64>> {
    if n == 1 && v.z != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "vector {v:?} leaves the plane of S^1"
        )));
    }
    Ok(v)
}

fn perturbation_coeffs(space: &Harmonics, terms: &[HarmonicTerm]) -> Result<HarmonicCoeffs> {
    let n = space.dimension();
    let mut c = HarmonicCoeffs::zeros(n, space.degree());
    for &(l, order, amplitude) in terms {
        let i = c.index(l, order)?;
        c.values_mut()[i] += amplitude / basis_sup_norm(n, l, order);
    }
    Ok(c)
}

/// Scalar summary of a body's cone-volume measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySummary {
    pub dimension: usize,
    pub volume: f64,
    pub cone_volume_total: f64,
    pub centroid: [f64; 3],
    /// `m = min h/K` over the nodes.
    pub density_min: f64,
    /// `M = max h/K` over the nodes.
    pub density_max: f64,
    /// `M/m - 1`.
    pub epsilon: f64,
    pub mean_support: f64,
    pub centered_support_min: f64,
    pub centered_support_max: f64,
    pub convexity_margin: f64,
}

fn check_same_grid(a: &ConvexBody, b: &ConvexBody) -> Result<()> {
    a.support.ensure_on(b.grid())
}

/// `δ₂(K₁, K₂) = (⨍ |h₁ - h₂|² dθ)^{1/2}`.
pub fn delta2(a: &ConvexBody, b: &ConvexBody) -> Result<f64> {
    check_same_grid(a, b)?;
    let sq = a.support.zip_map(&b.support, |x, y| (x - y) * (x - y))?;
    Ok((a.grid().quadrature(sq.values()) / a.grid().measure()).sqrt())
}

/// `δ_H(K₁, K₂) = max |h₁ - h₂|` over the nodes.
pub fn delta_hausdorff(a: &ConvexBody, b: &ConvexBody) -> Result<f64> {
    check_same_grid(a, b)?;
    Ok(a.support.zip_map(&b.support, |x, y| (x - y).abs())?.max())
}

fn width_max(grid: &SphereGrid, h: &[f64]) -> f64 {
    grid.antipodes()
        .iter()
        .enumerate()
        .map(|(j, &k)| h[j] + h[k])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest width `h(x) + h(-x)` over antipodal node pairs.
pub fn diameter(body: &ConvexBody) -> f64 {
    width_max(body.grid(), body.support.values())
}

/// Diameter of `K₁ ∪ K₂`, from the support function `max(h₁, h₂)` of the hull.
pub fn union_diameter(a: &ConvexBody, b: &ConvexBody) -> Result<f64> {
    check_same_grid(a, b)?;
    let hull = a.support.zip_map(&b.support, f64::max)?;
    Ok(width_max(a.grid(), hull.values()))
}
