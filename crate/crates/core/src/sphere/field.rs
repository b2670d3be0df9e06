use nalgebra::{Matrix2, Vector2, Vector3};

use super::grid::{Resolution, SphereGrid};
use crate::error::{Error, Result};

fn check_key(expected: Resolution, found: Resolution) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::GridMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

/// One real value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Resolution,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &SphereGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values but grid {} has {} nodes",
                values.len(),
                grid.resolution(),
                grid.len()
            )));
        }
        Ok(ScalarField {
            grid: grid.resolution(),
            values,
        })
    }

    pub fn from_fn(grid: &SphereGrid, f: impl Fn(&Vector3<f64>) -> f64) -> Self {
        ScalarField {
            grid: grid.resolution(),
            values: grid.nodes().iter().map(f).collect(),
        }
    }

    pub fn constant(grid: &SphereGrid, value: f64) -> Self {
        ScalarField {
            grid: grid.resolution(),
            values: vec![value; grid.len()],
        }
    }

    pub(crate) fn from_raw(grid: Resolution, values: Vec<f64>) -> Self {
        ScalarField { grid, values }
    }

    pub fn grid_key(&self) -> Resolution {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ensure_on(&self, grid: &SphereGrid) -> Result<()> {
        check_key(grid.resolution(), self.grid)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_key(self.grid, other.grid)?;
        Ok(ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Quadrature of a scalar field against the spherical Lebesgue measure.
pub fn integrate(f: &ScalarField, grid: &SphereGrid) -> Result<f64> {
    f.ensure_on(grid)?;
    Ok(grid.quadrature(&f.values))
}

/// Average over the sphere, `∫ f dθ / ∫ dθ`.
pub fn mean(f: &ScalarField, grid: &SphereGrid) -> Result<f64> {
    Ok(integrate(f, grid)? / grid.measure())
}

/// A vector of R^{n+1} per node (third component zero on S^1).
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientVectorField {
    grid: Resolution,
    values: Vec<Vector3<f64>>,
}

impl AmbientVectorField {
    pub(crate) fn from_raw(grid: Resolution, values: Vec<Vector3<f64>>) -> Self {
        AmbientVectorField { grid, values }
    }

    pub fn grid_key(&self) -> Resolution {
        self.grid
    }

    pub fn values(&self) -> &[Vector3<f64>] {
        &self.values
    }

    pub fn ensure_on(&self, grid: &SphereGrid) -> Result<()> {
        check_key(grid.resolution(), self.grid)
    }
}

/// Tangent vectors stored as components in the grid's orthonormal frame.
///
/// On S^1 only the first component is used.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentField {
    grid: Resolution,
    values: Vec<Vector2<f64>>,
}

impl TangentField {
    pub(crate) fn from_raw(grid: Resolution, values: Vec<Vector2<f64>>) -> Self {
        TangentField { grid, values }
    }

    pub fn grid_key(&self) -> Resolution {
        self.grid
    }

    pub fn values(&self) -> &[Vector2<f64>] {
        &self.values
    }

    pub fn norm_squared(&self) -> ScalarField {
        ScalarField::from_raw(
            self.grid,
            self.values.iter().map(|v| v.norm_squared()).collect(),
        )
    }

    /// Embeds the frame components into R^{n+1}.
    pub fn to_ambient(&self, grid: &SphereGrid) -> Result<AmbientVectorField> {
        check_key(grid.resolution(), self.grid)?;
        let values = self
            .values
            .iter()
            .zip(grid.frames())
            .map(|(v, fr)| fr[0] * v[0] + fr[1] * v[1])
            .collect();
        Ok(AmbientVectorField::from_raw(self.grid, values))
    }

    pub fn dot(&self, other: &TangentField) -> Result<ScalarField> {
        check_key(self.grid, other.grid)?;
        Ok(ScalarField::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.dot(b))
                .collect(),
        ))
    }
}

/// Symmetric tangent tensors in frame components (a 1x1 block on S^1).
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    grid: Resolution,
    values: Vec<Matrix2<f64>>,
}

impl SymTensorField {
    pub(crate) fn from_raw(grid: Resolution, values: Vec<Matrix2<f64>>) -> Self {
        SymTensorField { grid, values }
    }

    pub fn grid_key(&self) -> Resolution {
        self.grid
    }

    pub fn values(&self) -> &[Matrix2<f64>] {
        &self.values
    }

    pub fn trace(&self) -> ScalarField {
        ScalarField::from_raw(self.grid, self.values.iter().map(|m| m.trace()).collect())
    }
}
