//! Grids, quadrature, harmonic transforms and covariant derivatives on S^1 and S^2.

mod field;
mod grid;
mod harmonics;
mod legendre;

pub use field::{integrate, mean, AmbientVectorField, ScalarField, SymTensorField, TangentField};
pub use grid::{gauss_legendre, pairwise_sum, sphere_measure, Resolution, SphereGrid};
pub use harmonics::{
    basis_len, basis_sup_norm, evaluate_coeffs, harmonic_at, harmonic_index, Derivatives,
    HarmonicCoeffs, Harmonics, Spectral,
};

/// Default harmonic degree: 64 Fourier modes on S^1, degree 32 on S^2.
pub fn default_degree(dimension: usize) -> usize {
    match dimension {
        1 => 64,
        _ => 32,
    }
}
