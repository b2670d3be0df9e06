use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::field::{ScalarField, SymTensorField, TangentField};
use super::grid::SphereGrid;
use super::legendre::{self, LegendreTable};
use crate::error::{Error, Result};

/// Number of real harmonics of degree `<= degree` on S^`dimension`.
pub fn basis_len(dimension: usize, degree: usize) -> usize {
    match dimension {
        1 => 2 * degree + 1,
        _ => (degree + 1) * (degree + 1),
    }
}

/// Position of the harmonic `(degree, order)` in a coefficient vector.
///
/// On S^2 orders run over `-l..=l` (positive: cosine, negative: sine). On
/// S^1 the order is `0` for the constant and `±l` (cosine/sine) otherwise.
pub fn harmonic_index(dimension: usize, l: usize, order: i64) -> Option<usize> {
    let li = l as i64;
    match dimension {
        1 => match (l, order) {
            (0, 0) => Some(0),
            (0, _) => None,
            _ if order == li => Some(2 * l - 1),
            _ if order == -li => Some(2 * l),
            _ => None,
        },
        2 if order.abs() <= li => Some((li * li + li + order) as usize),
        _ => None,
    }
}

/// Inverse of [`harmonic_index`].
pub fn harmonic_at(dimension: usize, index: usize) -> (usize, i64) {
    match dimension {
        1 => {
            if index == 0 {
                (0, 0)
            } else {
                let l = index.div_ceil(2);
                let order = if index % 2 == 1 {
                    l as i64
                } else {
                    -(l as i64)
                };
                (l, order)
            }
        }
        _ => {
            let l = (index as f64).sqrt().floor() as usize;
            let l = if (l + 1) * (l + 1) <= index { l + 1 } else { l };
            (l, index as i64 - (l * l + l) as i64)
        }
    }
}

/// Real spherical-harmonic coefficients up to a maximal degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCoeffs {
    dimension: usize,
    degree: usize,
    values: Vec<f64>,
}

impl HarmonicCoeffs {
    pub fn new(dimension: usize, degree: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::UnsupportedDimension(dimension));
        }
        let expected = basis_len(dimension, degree);
        if values.len() != expected {
            return Err(Error::CoefficientCount {
                dimension,
                degree,
                expected,
                found: values.len(),
            });
        }
        Ok(HarmonicCoeffs {
            dimension,
            degree,
            values,
        })
    }

    pub fn zeros(dimension: usize, degree: usize) -> Self {
        HarmonicCoeffs {
            dimension,
            degree,
            values: vec![0.0; basis_len(dimension, degree)],
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn index(&self, l: usize, order: i64) -> Result<usize> {
        if l > self.degree {
            return Err(Error::InvalidHarmonic {
                degree: l,
                order,
                max_degree: self.degree,
            });
        }
        harmonic_index(self.dimension, l, order).ok_or(Error::InvalidHarmonic {
            degree: l,
            order,
            max_degree: self.degree,
        })
    }

    pub fn get(&self, l: usize, order: i64) -> Result<f64> {
        Ok(self.values[self.index(l, order)?])
    }

    pub fn set(&mut self, l: usize, order: i64, value: f64) -> Result<()> {
        let i = self.index(l, order)?;
        self.values[i] = value;
        Ok(())
    }

    /// `(degree, order, coefficient)` triples in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| {
            let (l, o) = harmonic_at(self.dimension, i);
            (l, o, v)
        })
    }

    /// Coefficients truncated or zero-padded to `degree`.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut out = HarmonicCoeffs::zeros(self.dimension, degree);
        let n = basis_len(self.dimension, degree.min(self.degree));
        out.values[..n].copy_from_slice(&self.values[..n]);
        out
    }

    /// The ambient vector `c` with `Σ_{degree 1} a Y = <c, x>`.
    pub fn linear_part(&self) -> Vector3<f64> {
        if self.degree == 0 {
            return Vector3::zeros();
        }
        match self.dimension {
            1 => {
                let k = 1.0 / PI.sqrt();
                Vector3::new(self.values[1] * k, self.values[2] * k, 0.0)
            }
            _ => {
                let k = (3.0 / (4.0 * PI)).sqrt();
                // order -1 (sine) ~ y, 0 ~ z, +1 (cosine) ~ x
                Vector3::new(self.values[3] * k, self.values[1] * k, self.values[2] * k)
            }
        }
    }

    /// Adds `<c, x>` to the represented function.
    pub fn add_linear(&mut self, c: &Vector3<f64>) {
        if self.degree == 0 {
            return;
        }
        match self.dimension {
            1 => {
                let k = PI.sqrt();
                self.values[1] += c.x * k;
                self.values[2] += c.y * k;
            }
            _ => {
                let k = (4.0 * PI / 3.0).sqrt();
                self.values[3] += c.x * k;
                self.values[1] += c.y * k;
                self.values[2] += c.z * k;
            }
        }
    }

    /// Adds `value` to the represented function.
    pub fn add_constant(&mut self, value: f64) {
        self.values[0] += value * constant_basis_inverse(self.dimension);
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// Largest |coefficient| of degree > `l`.
    pub fn tail_above(&self, l: usize) -> f64 {
        self.iter()
            .filter(|(deg, _, _)| *deg > l)
            .fold(0.0, |m, (_, _, v)| m.max(v.abs()))
    }
}

/// `1 / Y_0`, the coefficient of the constant function 1.
fn constant_basis_inverse(dimension: usize) -> f64 {
    match dimension {
        1 => (2.0 * PI).sqrt(),
        _ => (4.0 * PI).sqrt(),
    }
}

/// `max |Y_{l,order}|` over the sphere.
pub fn basis_sup_norm(dimension: usize, l: usize, order: i64) -> f64 {
    match dimension {
        1 => {
            if l == 0 {
                1.0 / (2.0 * PI).sqrt()
            } else {
                1.0 / PI.sqrt()
            }
        }
        _ => {
            let m = order.unsigned_abs() as usize;
            let scale = if m == 0 { 1.0 } else { 2f64.sqrt() };
            scale * legendre::sup_abs(l, m)
        }
    }
}

/// Spectral derivatives of a band-limited field.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub value: ScalarField,
    pub gradient: TangentField,
    pub hessian: SymTensorField,
}

/// A field produced by spectral differentiation, with the band-limit residual
/// `‖synthesize(analyze(f)) - f‖_∞` of its input.
#[derive(Clone, Debug)]
pub struct Spectral<T> {
    pub field: T,
    pub band_residual: f64,
}

impl<T> Spectral<T> {
    /// Threshold above which the input is reported as not band-limited.
    pub const BAND_LIMIT_THRESHOLD: f64 = 1e-10;

    pub fn is_band_limited(&self) -> bool {
        self.band_residual <= Self::BAND_LIMIT_THRESHOLD
    }
}

#[derive(Debug)]
enum Tables {
    Circle {
        // node-major, (degree+1) entries per node
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    Sphere {
        legendre: Vec<LegendreTable>,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
}

/// Real harmonic transform pair and covariant derivatives at a fixed degree on a grid.
#[derive(Debug)]
pub struct Harmonics {
    grid: Arc<SphereGrid>,
    degree: usize,
    tables: Tables,
}

impl Harmonics {
    pub fn new(grid: Arc<SphereGrid>, degree: usize) -> Result<Self> {
        let cap = grid.resolution().capacity();
        if degree > cap {
            let reason = match grid.resolution() {
                super::Resolution::Circle { nodes } => format!(
                    "S^1 grid has {nodes} nodes, degree {degree} needs at least {}",
                    2 * degree + 1
                ),
                super::Resolution::Sphere { lat, lon } => format!(
                    "S^2 grid is {lat}x{lon}, degree {degree} needs at least {}x{}",
                    degree + 1,
                    2 * degree + 1
                ),
            };
            return Err(Error::BelowNyquist { degree, reason });
        }
        let width = degree + 1;
        let tables = match grid.dimension() {
            1 => {
                let mut cos = Vec::with_capacity(grid.len() * width);
                let mut sin = Vec::with_capacity(grid.len() * width);
                for &t in grid.angles() {
                    for k in 0..width {
                        let (s, c) = (k as f64 * t).sin_cos();
                        cos.push(c);
                        sin.push(s);
                    }
                }
                Tables::Circle { cos, sin }
            }
            _ => {
                let legendre = grid
                    .lat_cos()
                    .iter()
                    .zip(grid.lat_sin())
                    .map(|(&x, &s)| LegendreTable::new(degree, x, s))
                    .collect();
                let mut cos = Vec::with_capacity(grid.angles().len() * width);
                let mut sin = Vec::with_capacity(grid.angles().len() * width);
                for &phi in grid.angles() {
                    for m in 0..width {
                        let (s, c) = (m as f64 * phi).sin_cos();
                        cos.push(c);
                        sin.push(s);
                    }
                }
                Tables::Sphere { legendre, cos, sin }
            }
        };
        Ok(Harmonics {
            grid,
            degree,
            tables,
        })
    }

    /// Harmonics at the default grid resolution for `degree`.
    pub fn for_degree(dimension: usize, degree: usize) -> Result<Arc<Self>> {
        let grid = Arc::new(SphereGrid::for_degree(dimension, degree)?);
        Ok(Arc::new(Harmonics::new(grid, degree)?))
    }

    /// The same grid with the largest degree it resolves exactly.
    pub fn at_capacity(&self) -> Result<Harmonics> {
        Harmonics::new(self.grid.clone(), self.grid.resolution().capacity())
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        self.grid.dimension()
    }

    pub fn basis_len(&self) -> usize {
        basis_len(self.dimension(), self.degree)
    }

    fn check_coeffs(&self, coeffs: &HarmonicCoeffs) -> Result<()> {
        if coeffs.dimension() != self.dimension() || coeffs.degree() != self.degree {
            return Err(Error::InvalidParameter(format!(
                "coefficients (n={}, L={}) do not match transform (n={}, L={})",
                coeffs.dimension(),
                coeffs.degree(),
                self.dimension(),
                self.degree
            )));
        }
        Ok(())
    }

    /// Projection onto harmonics of degree `<= L` by quadrature.
    pub fn analyze(&self, f: &ScalarField) -> Result<HarmonicCoeffs> {
        f.ensure_on(&self.grid)?;
        Ok(self.analyze_values(f.values()))
    }

    pub(crate) fn analyze_values(&self, f: &[f64]) -> HarmonicCoeffs {
        let n = self.dimension();
        let width = self.degree + 1;
        let mut out = HarmonicCoeffs::zeros(n, self.degree);
        match &self.tables {
            Tables::Circle { cos, sin } => {
                let w = self.grid.weights()[0];
                let mut c = vec![0.0; width];
                let mut s = vec![0.0; width];
                for (j, &v) in f.iter().enumerate() {
                    let row = j * width;
                    for k in 0..width {
                        c[k] += v * cos[row + k];
                        s[k] += v * sin[row + k];
                    }
                }
                out.values[0] = c[0] * w / (2.0 * PI).sqrt();
                let k = w / PI.sqrt();
                for l in 1..width {
                    out.values[2 * l - 1] = c[l] * k;
                    out.values[2 * l] = s[l] * k;
                }
            }
            Tables::Sphere { legendre, cos, sin } => {
                let lon = self.grid.angles().len();
                let dphi = 2.0 * PI / lon as f64;
                let gw = self.grid.lat_weights();
                let mut c = vec![0.0; width];
                let mut s = vec![0.0; width];
                for (i, tab) in legendre.iter().enumerate() {
                    c.iter_mut().for_each(|v| *v = 0.0);
                    s.iter_mut().for_each(|v| *v = 0.0);
                    for k in 0..lon {
                        let v = f[i * lon + k];
                        let row = k * width;
                        for m in 0..width {
                            c[m] += v * cos[row + m];
                            s[m] += v * sin[row + m];
                        }
                    }
                    let w = gw[i] * dphi;
                    for m in 0..width {
                        let norm = if m == 0 {
                            w
                        } else {
                            w * std::f64::consts::SQRT_2
                        };
                        for l in m..width {
                            let p = tab.value(l, m) * norm;
                            let li = (l * l + l) as i64;
                            out.values[(li + m as i64) as usize] += p * c[m];
                            if m > 0 {
                                out.values[(li - m as i64) as usize] += p * s[m];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn synthesize(&self, coeffs: &HarmonicCoeffs) -> Result<ScalarField> {
        self.check_coeffs(coeffs)?;
        Ok(self.derive(coeffs, false).value)
    }

    pub fn derivatives(&self, coeffs: &HarmonicCoeffs) -> Result<Derivatives> {
        self.check_coeffs(coeffs)?;
        Ok(self.derive(coeffs, true))
    }

    /// `‖synthesize(analyze(f)) - f‖_∞`.
    pub fn band_limit_residual(&self, f: &ScalarField) -> Result<f64> {
        let c = self.analyze(f)?;
        let back = self.derive(&c, false).value;
        Ok(back
            .values()
            .iter()
            .zip(f.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    fn spectral<T>(
        &self,
        f: &ScalarField,
        pick: impl FnOnce(Derivatives) -> T,
    ) -> Result<Spectral<T>> {
        let c = self.analyze(f)?;
        let d = self.derive(&c, true);
        let band_residual = d
            .value
            .values()
            .iter()
            .zip(f.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(Spectral {
            field: pick(d),
            band_residual,
        })
    }

    pub fn gradient(&self, f: &ScalarField) -> Result<Spectral<TangentField>> {
        self.spectral(f, |d| d.gradient)
    }

    pub fn covariant_hessian(&self, f: &ScalarField) -> Result<Spectral<SymTensorField>> {
        self.spectral(f, |d| d.hessian)
    }

    pub fn laplace_beltrami(&self, f: &ScalarField) -> Result<Spectral<ScalarField>> {
        self.spectral(f, |d| d.hessian.trace())
    }

    /// Node values of the basis function `Y_{l,order}`.
    pub fn basis_function(&self, l: usize, order: i64) -> Result<ScalarField> {
        let mut c = HarmonicCoeffs::zeros(self.dimension(), self.degree);
        c.set(l, order, 1.0)?;
        self.synthesize(&c)
    }

    /// Evaluates the band-limited function at an arbitrary unit vector.
    pub fn evaluate(&self, coeffs: &HarmonicCoeffs, x: &Vector3<f64>) -> Result<f64> {
        self.check_coeffs(coeffs)?;
        Ok(evaluate_coeffs(coeffs, x))
    }

    fn derive(&self, coeffs: &HarmonicCoeffs, with_derivatives: bool) -> Derivatives {
        let key = self.grid.resolution();
        let count = self.grid.len();
        let width = self.degree + 1;
        let a = coeffs.values();
        let mut value = vec![0.0; count];
        let mut grad = vec![Vector2::zeros(); if with_derivatives { count } else { 0 }];
        let mut hess = vec![Matrix2::zeros(); if with_derivatives { count } else { 0 }];
        match &self.tables {
            Tables::Circle { cos, sin } => {
                let k = 1.0 / PI.sqrt();
                for j in 0..count {
                    let row = j * width;
                    let mut f = a[0] / (2.0 * PI).sqrt();
                    let mut d1 = 0.0;
                    let mut d2 = 0.0;
                    for l in 1..width {
                        let (ac, as_) = (a[2 * l - 1] * k, a[2 * l] * k);
                        let (c, s) = (cos[row + l], sin[row + l]);
                        let lf = l as f64;
                        f += ac * c + as_ * s;
                        if with_derivatives {
                            d1 += lf * (as_ * c - ac * s);
                            d2 -= lf * lf * (ac * c + as_ * s);
                        }
                    }
                    value[j] = f;
                    if with_derivatives {
                        grad[j] = Vector2::new(d1, 0.0);
                        hess[j] = Matrix2::new(d2, 0.0, 0.0, 0.0);
                    }
                }
            }
            Tables::Sphere { legendre, cos, sin } => {
                let lon = self.grid.angles().len();
                let mut acc = vec![[0.0f64; 6]; width];
                for (i, tab) in legendre.iter().enumerate() {
                    let x = self.grid.lat_cos()[i];
                    let s = self.grid.lat_sin()[i];
                    let cot = x / s;
                    // acc[m] = [A, B, A', B', A'', B''] (cos/sin parts and polar derivatives)
                    for (m, slot) in acc.iter_mut().enumerate() {
                        let mf = m as f64;
                        let norm = if m == 0 {
                            1.0
                        } else {
                            std::f64::consts::SQRT_2
                        };
                        let mut v = [0.0; 6];
                        for l in m..width {
                            let li = (l * l + l) as i64;
                            let cc = a[(li + m as i64) as usize];
                            let sc = if m > 0 {
                                a[(li - m as i64) as usize]
                            } else {
                                0.0
                            };
                            if cc == 0.0 && sc == 0.0 {
                                continue;
                            }
                            let p = tab.value(l, m) * norm;
                            v[0] += cc * p;
                            v[1] += sc * p;
                            if with_derivatives {
                                let lf = l as f64;
                                let dp = tab.dtheta(l, m) * norm;
                                let d2p = -lf * (lf + 1.0) * p - cot * dp + mf * mf / (s * s) * p;
                                v[2] += cc * dp;
                                v[3] += sc * dp;
                                v[4] += cc * d2p;
                                v[5] += sc * d2p;
                            }
                        }
                        *slot = v;
                    }
                    for k in 0..lon {
                        let row = k * width;
                        let node = i * lon + k;
                        let mut f = 0.0;
                        let (mut ft, mut fp, mut ftt, mut ftp, mut fpp) = (0.0, 0.0, 0.0, 0.0, 0.0);
                        for (m, v) in acc.iter().enumerate() {
                            let (c, sn) = (cos[row + m], sin[row + m]);
                            f += v[0] * c + v[1] * sn;
                            if with_derivatives {
                                let mf = m as f64;
                                ft += v[2] * c + v[3] * sn;
                                fp += mf * (v[1] * c - v[0] * sn);
                                ftt += v[4] * c + v[5] * sn;
                                ftp += mf * (v[3] * c - v[2] * sn);
                                fpp -= mf * mf * (v[0] * c + v[1] * sn);
                            }
                        }
                        value[node] = f;
                        if with_derivatives {
                            grad[node] = Vector2::new(ft, fp / s);
                            let off = (ftp - cot * fp) / s;
                            hess[node] = Matrix2::new(ftt, off, off, fpp / (s * s) + cot * ft);
                        }
                    }
                }
            }
        }
        Derivatives {
            value: ScalarField::from_raw(key, value),
            gradient: TangentField::from_raw(key, grad),
            hessian: SymTensorField::from_raw(key, hess),
        }
    }
}

/// Evaluates a coefficient vector at an arbitrary unit vector (off-grid).
pub fn evaluate_coeffs(coeffs: &HarmonicCoeffs, x: &Vector3<f64>) -> f64 {
    let a = coeffs.values();
    let degree = coeffs.degree();
    match coeffs.dimension() {
        1 => {
            let t = x.y.atan2(x.x);
            let k = 1.0 / PI.sqrt();
            let mut f = a[0] / (2.0 * PI).sqrt();
            for l in 1..=degree {
                let (s, c) = (l as f64 * t).sin_cos();
                f += k * (a[2 * l - 1] * c + a[2 * l] * s);
            }
            f
        }
        _ => {
            let r = x.norm();
            let z = (x.z / r).clamp(-1.0, 1.0);
            let s = (x.x * x.x + x.y * x.y).sqrt() / r;
            let phi = x.y.atan2(x.x);
            let tab = LegendreTable::new(degree, z, s);
            let mut f = 0.0;
            for l in 0..=degree {
                let li = (l * l + l) as i64;
                f += a[li as usize] * tab.value(l, 0);
                for m in 1..=l {
                    let (sn, c) = (m as f64 * phi).sin_cos();
                    let p = tab.value(l, m) * std::f64::consts::SQRT_2;
                    f += p * (a[(li + m as i64) as usize] * c + a[(li - m as i64) as usize] * sn);
                }
            }
            f
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for n in 1..=2 {
            for i in 0..basis_len(n, 9) {
                let (l, o) = harmonic_at(n, i);
                assert_eq!(harmonic_index(n, l, o), Some(i));
            }
        }
        assert_eq!(harmonic_index(1, 2, 1), None);
        assert_eq!(harmonic_index(2, 2, 3), None);
    }

    #[test]
    fn linear_part_round_trip() {
        for n in 1..=2 {
            let mut c = HarmonicCoeffs::zeros(n, 4);
            let v = if n == 1 {
                Vector3::new(0.3, -0.2, 0.0)
            } else {
                Vector3::new(0.3, -0.2, 0.7)
            };
            c.add_linear(&v);
            assert!((c.linear_part() - v).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_degree_above_capacity() {
        let grid = Arc::new(
            SphereGrid::new(super::super::Resolution::Sphere { lat: 24, lon: 48 }).unwrap(),
        );
        assert!(Harmonics::new(grid.clone(), 23).is_ok());
        let err = Harmonics::new(grid, 24).unwrap_err();
        assert!(err.to_string().contains("needs at least 25x49"), "{err}");
        let circle =
            Arc::new(SphereGrid::new(super::super::Resolution::Circle { nodes: 64 }).unwrap());
        assert!(Harmonics::new(circle.clone(), 31).is_ok());
        assert!(Harmonics::new(circle, 32).is_err());
    }

    #[test]
    fn constant_coefficient() {
        let mut c = HarmonicCoeffs::zeros(2, 3);
        c.add_constant(2.5);
        assert!((evaluate_coeffs(&c, &Vector3::new(0.0, 0.6, 0.8)) - 2.5).abs() < 1e-15);
    }
}
