//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use conevol::sphere::evaluate_coeffs;
use conevol::{HarmonicCoeffs, Harmonics};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn space(n: usize, l: usize) -> Arc<Harmonics> {
    Harmonics::for_degree(n, l).unwrap()
}

/// Point at arclength `t` along the great circle leaving `x` in direction `e`.
fn geodesic(x: &Vector3<f64>, e: &Vector3<f64>, t: f64) -> Vector3<f64> {
    x * t.cos() + e * t.sin()
}

/// Second derivative of `f` along the great circle through `x` with unit tangent `e`,
/// by central differences. Along geodesics this is the covariant Hessian `H(e, e)`.
pub fn fd_second(c: &HarmonicCoeffs, x: &Vector3<f64>, e: &Vector3<f64>, t: f64) -> f64 {
    let f = |s: f64| evaluate_coeffs(c, &geodesic(x, e, s));
    (f(t) - 2.0 * f(0.0) + f(-t)) / (t * t)
}

pub fn fd_first(c: &HarmonicCoeffs, x: &Vector3<f64>, e: &Vector3<f64>, t: f64) -> f64 {
    let f = |s: f64| evaluate_coeffs(c, &geodesic(x, e, s));
    (f(t) - f(-t)) / (2.0 * t)
}

/// Covariant Hessian in the frame `(e1, e2)`, mixed entry by polarization.
pub fn fd_hessian(
    c: &HarmonicCoeffs,
    x: &Vector3<f64>,
    e1: &Vector3<f64>,
    e2: &Vector3<f64>,
    t: f64,
) -> [[f64; 2]; 2] {
    let a = fd_second(c, x, e1, t);
    let b = fd_second(c, x, e2, t);
    let d = (e1 + e2) / 2f64.sqrt();
    let m = fd_second(c, x, &d, t) - 0.5 * (a + b);
    [[a, m], [m, b]]
}

pub fn random_coeffs(n: usize, l: usize, seed: u64, decay: f64) -> HarmonicCoeffs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = HarmonicCoeffs::zeros(n, l);
    let idx: Vec<(usize, i64)> = c.iter().map(|(l, m, _)| (l, m)).collect();
    for (deg, order) in idx {
        let v = rng.random_range(-1.0..1.0) * (-(deg as f64) * decay).exp();
        c.set(deg, order, v).unwrap();
    }
    c
}

pub fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector3<f64> {
    loop {
        let z = if n == 1 {
            0.0
        } else {
            rng.random_range(-1.0..1.0)
        };
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), z);
        if v.norm() > 0.1 && v.norm() <= 1.0 {
            return v.normalize();
        }
    }
}

/// Random rotation of R^{n+1} (about e3 only when n = 1).
pub fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> nalgebra::Matrix3<f64> {
    if n == 1 {
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), a).into_inner()
    } else {
        let axis = nalgebra::Unit::new_normalize(unit_vector(rng, 2));
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        nalgebra::Rotation3::from_axis_angle(&axis, a).into_inner()
    }
}

/// Gauss-Legendre rule on [-1, 1] from the Jacobi matrix eigenproblem (Golub-Welsch).
pub fn golub_welsch(m: usize) -> Vec<(f64, f64)> {
    let mut j = nalgebra::DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(j);
    (0..m)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect()
}

/// `∫ f dθ` by a quadrature unrelated to the library grids: shifted trapezoid
/// in longitude, Golub-Welsch Gauss-Legendre in `cos` of the polar angle.
pub fn brute_integral(n: usize, samples: usize, f: impl Fn(&Vector3<f64>) -> f64) -> f64 {
    use std::f64::consts::PI;
    let hp = 2.0 * PI / (2 * samples) as f64;
    let phis: Vec<f64> = (0..2 * samples).map(|k| (k as f64 + 0.37) * hp).collect();
    if n == 1 {
        return phis
            .iter()
            .map(|t| f(&Vector3::new(t.cos(), t.sin(), 0.0)))
            .sum::<f64>()
            * hp;
    }
    let mut s = 0.0;
    for (mu, w) in golub_welsch(samples) {
        let st = (1.0 - mu * mu).sqrt();
        let ring: f64 = phis
            .iter()
            .map(|p| f(&Vector3::new(st * p.cos(), st * p.sin(), mu)))
            .sum();
        s += w * ring * hp;
    }
    s
}
