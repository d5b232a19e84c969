//! Unit-norm embeddings, stacked feature sets, and class prototypes.

use alloc::vec::Vec;

use crate::error::Error;
use crate::linalg::{self, Mat};
use crate::math;
use crate::Result;

/// Tolerance on |norm - 1| for vectors consumed by the losses.
pub const UNIT_NORM_TOL: f64 = 1e-6;

fn check_unit_norm(values: &[f64]) -> Result<()> {
    let deviation = math::abs(linalg::norm(values) - 1.0);
    if deviation > UNIT_NORM_TOL {
        return Err(Error::NotUnitNorm {
            deviation,
            tolerance: UNIT_NORM_TOL,
        });
    }
    Ok(())
}

/// A single embedding `z` on the unit sphere, dimension >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    /// Wraps an already unit-norm vector; rejects `d < 2` or off-sphere input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::ShapeMismatch {
                context: "FeatureVector dimension",
                expected: 2,
                actual: values.len(),
            });
        }
        check_unit_norm(&values)?;
        Ok(Self { values })
    }

    /// L2-normalizes `values` and wraps the result.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::ShapeMismatch {
                context: "FeatureVector dimension",
                expected: 2,
                actual: values.len(),
            });
        }
        linalg::normalize(&mut values)?;
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        linalg::dot(&self.values, &other.values)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::ShapeMismatch {
                context: "FeatureVector dimension",
                expected,
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

/// Row-stacked features; rows are samples, columns embedding dimensions.
///
/// Rows are not forced onto the unit sphere here — operations that require
/// normalized rows check at their own boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    mat: Mat,
}

impl FeatureMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            mat: Mat::zeros(rows, dim),
        }
    }

    pub fn from_mat(mat: Mat) -> Self {
        Self { mat }
    }

    pub fn from_vectors(vectors: &[FeatureVector]) -> Result<Self> {
        let rows = vectors.len();
        if rows == 0 {
            return Err(Error::EmptyInput("FeatureMatrix::from_vectors"));
        }
        let dim = vectors[0].dim();
        let mut mat = Mat::zeros(rows, dim);
        for (r, v) in vectors.iter().enumerate() {
            if v.dim() != dim {
                return Err(Error::ShapeMismatch {
                    context: "FeatureMatrix row dimension",
                    expected: dim,
                    actual: v.dim(),
                });
            }
            mat.row_mut(r).copy_from_slice(v.values());
        }
        Ok(Self { mat })
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn dim(&self) -> usize {
        self.mat.cols()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        self.mat.row(r)
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        self.mat.row_mut(r)
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    pub fn row_slices(&self) -> Vec<&[f64]> {
        (0..self.rows()).map(|r| self.row(r)).collect()
    }

    /// Errors unless every row is unit-norm within [`UNIT_NORM_TOL`].
    pub fn check_rows_unit_norm(&self) -> Result<()> {
        for r in 0..self.rows() {
            check_unit_norm(self.row(r))?;
        }
        Ok(())
    }
}

/// Learnable unit-norm class prototypes, one row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeBank {
    prototypes: Mat,
}

impl PrototypeBank {
    /// Validates `N >= 2`, `d >= 2`, and unit-norm rows.
    pub fn new(prototypes: Mat) -> Result<Self> {
        if prototypes.rows() < 2 {
            return Err(Error::ShapeMismatch {
                context: "PrototypeBank classes",
                expected: 2,
                actual: prototypes.rows(),
            });
        }
        if prototypes.cols() < 2 {
            return Err(Error::ShapeMismatch {
                context: "PrototypeBank dimension",
                expected: 2,
                actual: prototypes.cols(),
            });
        }
        for r in 0..prototypes.rows() {
            check_unit_norm(prototypes.row(r))?;
        }
        Ok(Self { prototypes })
    }

    /// Random unit-norm prototypes drawn from the given RNG.
    pub fn random<R: rand::Rng>(num_classes: usize, dim: usize, rng: &mut R) -> Result<Self> {
        let mut mat = Mat::zeros(num_classes, dim);
        for r in 0..num_classes {
            let row = mat.row_mut(r);
            for v in row.iter_mut() {
                *v = rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
            linalg::normalize(row)?;
        }
        Self::new(mat)
    }

    pub fn num_classes(&self) -> usize {
        self.prototypes.rows()
    }

    pub fn dim(&self) -> usize {
        self.prototypes.cols()
    }

    pub fn prototype(&self, class: usize) -> &[f64] {
        self.prototypes.row(class)
    }

    pub fn as_mat(&self) -> &Mat {
        &self.prototypes
    }

    /// Raw mutable access for optimizer steps; call [`Self::renormalize`]
    /// afterwards to restore the unit-norm invariant.
    pub fn as_mat_mut(&mut self) -> &mut Mat {
        &mut self.prototypes
    }

    /// Projects every row back onto the unit sphere.
    pub fn renormalize(&mut self) -> Result<()> {
        for r in 0..self.prototypes.rows() {
            linalg::normalize(self.prototypes.row_mut(r))?;
        }
        Ok(())
    }

    pub fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.num_classes() {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes: self.num_classes(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_off_sphere_vectors() {
        assert!(FeatureVector::new(vec![1.0, 1.0]).is_err());
        assert!(FeatureVector::new(vec![1.0, 0.0]).is_ok());
        // within tolerance
        assert!(FeatureVector::new(vec![1.0 + 5e-7, 0.0]).is_ok());
    }

    #[test]
    fn rejects_scalar_features() {
        assert!(FeatureVector::new(vec![1.0]).is_err());
    }

    #[test]
    fn normalized_constructor() {
        let v = FeatureVector::normalized(vec![3.0, 4.0]).unwrap();
        assert!((v.values()[0] - 0.6).abs() < 1e-12);
        assert!(FeatureVector::normalized(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn bank_requires_two_classes_and_unit_rows() {
        let one = Mat::from_vec(vec![1.0, 0.0], 1, 2).unwrap();
        assert!(PrototypeBank::new(one).is_err());
        let two = Mat::from_vec(vec![1.0, 0.0, 0.0, 2.0], 2, 2).unwrap();
        assert!(PrototypeBank::new(two).is_err());
        let ok = Mat::from_vec(vec![1.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        let bank = PrototypeBank::new(ok).unwrap();
        assert!(bank.check_label(1).is_ok());
        assert!(bank.check_label(2).is_err());
    }
}
