use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node layout of a quadrature grid.
///
/// `Circle` is the uniform-angle rule on S^1, `Sphere` the Gauss-Legendre
/// (in cos of the polar angle) times equiangular-longitude rule on S^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Circle { nodes: usize },
    Sphere { lat: usize, lon: usize },
}

impl Resolution {
    pub fn dimension(&self) -> usize {
        match self {
            Resolution::Circle { .. } => 1,
            Resolution::Sphere { .. } => 2,
        }
    }

    /// Resolution used by default for harmonic degree `degree`.
    ///
    /// Chosen so that products of three band-limited factors (degree up to
    /// `3L + 1`, e.g. `<x, X> det(A)`) are integrated exactly, and so that
    /// the grid is antipodally symmetric and contains the coordinate axes
    /// that lie off the poles.
    pub fn for_degree(dimension: usize, degree: usize) -> Result<Self> {
        match dimension {
            1 => {
                let mut nodes = (4 * degree).max(3 * degree + 2).max(8);
                if nodes % 2 == 1 {
                    nodes += 1;
                }
                Ok(Resolution::Circle { nodes })
            }
            2 => {
                let mut lat = (3 * degree).div_ceil(2) + 2;
                if lat.is_multiple_of(2) {
                    lat += 1;
                }
                Ok(Resolution::Sphere { lat, lon: 2 * lat })
            }
            n => Err(Error::UnsupportedDimension(n)),
        }
    }

    /// Largest harmonic degree whose transform pair is exact on this grid.
    pub fn capacity(&self) -> usize {
        match *self {
            Resolution::Circle { nodes } => (nodes - 1) / 2,
            Resolution::Sphere { lat, lon } => (lat - 1).min((lon - 1) / 2),
        }
    }

    pub fn node_count(&self) -> usize {
        match *self {
            Resolution::Circle { nodes } => nodes,
            Resolution::Sphere { lat, lon } => lat * lon,
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Circle { nodes } => write!(f, "S1[{nodes}]"),
            Resolution::Sphere { lat, lon } => write!(f, "S2[{lat}x{lon}]"),
        }
    }
}

/// Quadrature nodes, weights and tangent frames on S^1 or S^2.
///
/// Vectors of R^{n+1} are stored as `Vector3`; on S^1 the third component is
/// identically zero.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    resolution: Resolution,
    nodes: Vec<Vector3<f64>>,
    weights: Vec<f64>,
    frames: Vec<[Vector3<f64>; 2]>,
    antipodes: Vec<usize>,
    // S^1: node angles. S^2: cos/sin of the polar angle per latitude and the longitudes.
    angles: Vec<f64>,
    lat_cos: Vec<f64>,
    lat_sin: Vec<f64>,
    lat_weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(resolution: Resolution) -> Result<Self> {
        match resolution {
            Resolution::Circle { nodes } => Self::circle(nodes),
            Resolution::Sphere { lat, lon } => Self::sphere(lat, lon),
        }
    }

    /// Default grid for harmonic degree `degree` on S^`dimension`.
    pub fn for_degree(dimension: usize, degree: usize) -> Result<Self> {
        Self::new(Resolution::for_degree(dimension, degree)?)
    }

    fn circle(count: usize) -> Result<Self> {
        if count < 4 || count % 2 == 1 {
            return Err(Error::InvalidResolution(format!(
                "S^1 needs an even node count >= 4 for antipodal symmetry, got {count}"
            )));
        }
        let step = 2.0 * PI / count as f64;
        let angles: Vec<f64> = (0..count).map(|j| j as f64 * step).collect();
        let nodes = angles
            .iter()
            .map(|&t| Vector3::new(t.cos(), t.sin(), 0.0))
            .collect();
        let frames = angles
            .iter()
            .map(|&t| [Vector3::new(-t.sin(), t.cos(), 0.0), Vector3::zeros()])
            .collect();
        let antipodes = (0..count).map(|j| (j + count / 2) % count).collect();
        Ok(SphereGrid {
            resolution: Resolution::Circle { nodes: count },
            nodes,
            weights: vec![step; count],
            frames,
            antipodes,
            angles,
            lat_cos: Vec::new(),
            lat_sin: Vec::new(),
            lat_weights: Vec::new(),
        })
    }

    fn sphere(lat: usize, lon: usize) -> Result<Self> {
        if lat < 2 || lon < 4 || lon % 2 == 1 {
            return Err(Error::InvalidResolution(format!(
                "S^2 needs lat >= 2 and an even lon >= 4, got {lat}x{lon}"
            )));
        }
        let (mu, gw) = gauss_legendre(lat);
        let lat_sin: Vec<f64> = mu.iter().map(|&m| (1.0 - m * m).sqrt()).collect();
        let dphi = 2.0 * PI / lon as f64;
        let angles: Vec<f64> = (0..lon).map(|k| k as f64 * dphi).collect();

        let total = lat * lon;
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut frames = Vec::with_capacity(total);
        let mut antipodes = Vec::with_capacity(total);
        for i in 0..lat {
            let (c, s) = (mu[i], lat_sin[i]);
            for (k, &phi) in angles.iter().enumerate() {
                let (sp, cp) = phi.sin_cos();
                nodes.push(Vector3::new(s * cp, s * sp, c));
                weights.push(gw[i] * dphi);
                frames.push([Vector3::new(c * cp, c * sp, -s), Vector3::new(-sp, cp, 0.0)]);
                antipodes.push((lat - 1 - i) * lon + (k + lon / 2) % lon);
            }
        }
        Ok(SphereGrid {
            resolution: Resolution::Sphere { lat, lon },
            nodes,
            weights,
            frames,
            antipodes,
            angles,
            lat_cos: mu,
            lat_sin,
            lat_weights: gw,
        })
    }

    pub fn dimension(&self) -> usize {
        self.resolution.dimension()
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Orthonormal tangent basis per node; only the first vector is meaningful on S^1.
    pub fn frames(&self) -> &[[Vector3<f64>; 2]] {
        &self.frames
    }

    /// Index of the node `-x` for every node `x`.
    pub fn antipodes(&self) -> &[usize] {
        &self.antipodes
    }

    /// Total surface measure |S^n|.
    pub fn measure(&self) -> f64 {
        sphere_measure(self.dimension())
    }

    /// Quadrature of raw node values (pairwise summation, fixed order).
    pub fn quadrature(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        let products: Vec<f64> = values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .collect();
        pairwise_sum(&products)
    }

    /// Quadrature of a vector-valued integrand given per node.
    pub fn quadrature_vec(&self, values: &[Vector3<f64>]) -> Vector3<f64> {
        let mut out = Vector3::zeros();
        for c in 0..3 {
            let comp: Vec<f64> = values.iter().map(|v| v[c]).collect();
            out[c] = self.quadrature(&comp);
        }
        out
    }

    pub(crate) fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub(crate) fn lat_cos(&self) -> &[f64] {
        &self.lat_cos
    }

    pub(crate) fn lat_sin(&self) -> &[f64] {
        &self.lat_sin
    }

    pub(crate) fn lat_weights(&self) -> &[f64] {
        &self.lat_weights
    }
}

/// |S^n| for n = 1, 2.
pub fn sphere_measure(dimension: usize) -> f64 {
    match dimension {
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Pairwise (cascade) summation with a fixed reduction tree.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Gauss-Legendre nodes (descending, from near +1 to near -1) and weights on [-1, 1].
///
/// Nodes are computed for one half and mirrored, so `x[n-1-i] == -x[i]` holds exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        if n % 2 == 1 && i == n / 2 {
            z = 0.0;
            dp = legendre_with_derivative(n, 0.0).1;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_weights_are_uniform() {
        let g = SphereGrid::new(Resolution::Circle { nodes: 64 }).unwrap();
        assert!(g.weights().iter().all(|&w| w == 2.0 * PI / 64.0));
        assert!((g.weights().iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_weights_sum_to_area() {
        let g = SphereGrid::new(Resolution::Sphere { lat: 24, lon: 48 }).unwrap();
        let total = g.quadrature(&vec![1.0; g.len()]);
        assert!((total - 4.0 * PI).abs() < 1e-12 * 4.0 * PI);
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn nodes_and_frames_are_orthonormal() {
        for res in [
            Resolution::Circle { nodes: 30 },
            Resolution::Sphere { lat: 17, lon: 34 },
        ] {
            let g = SphereGrid::new(res).unwrap();
            for (x, fr) in g.nodes().iter().zip(g.frames()) {
                assert!((x.norm() - 1.0).abs() < 1e-14);
                for e in fr.iter().take(g.dimension()) {
                    assert!((e.norm() - 1.0).abs() < 1e-12);
                    assert!(e.dot(x).abs() < 1e-12);
                }
                if g.dimension() == 2 {
                    assert!(fr[0].dot(&fr[1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn antipodes_are_exact() {
        for res in [
            Resolution::Circle { nodes: 40 },
            Resolution::Sphere { lat: 11, lon: 22 },
        ] {
            let g = SphereGrid::new(res).unwrap();
            for (j, &a) in g.antipodes().iter().enumerate() {
                assert!((g.nodes()[j] + g.nodes()[a]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn odd_latitude_count_contains_equator() {
        let res = Resolution::for_degree(2, 32).unwrap();
        let g = SphereGrid::new(res).unwrap();
        assert!(g.nodes().iter().any(|x| (x - Vector3::x()).norm() < 1e-15));
    }

    #[test]
    fn rejects_odd_circle() {
        assert!(SphereGrid::new(Resolution::Circle { nodes: 63 }).is_err());
        assert!(SphereGrid::new(Resolution::Sphere { lat: 8, lon: 15 }).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        for deg in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((q - exact).abs() < 1e-14, "degree {deg}");
        }
    }
}
