//! Minimal dense row-major matrix and the few decompositions the crate needs.
//!
//! Everything here runs on problem sizes in the tens of dimensions, so the
//! implementations favour clarity and determinism over blocking or SIMD.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::math;
use crate::Result;

/// Dense row-major `rows x cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn from_vec(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                context: "Mat::from_vec",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { data, rows, cols })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// self += alpha * other (elementwise); shapes must match.
    pub fn axpy(&mut self, alpha: f64, other: &Mat) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// Largest absolute deviation from symmetry; 0 for a symmetric matrix.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                let d = math::abs(self.get(i, j) - self.get(j, i));
                worst = worst.max(d);
            }
        }
        worst
    }

    /// y = self * x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            *out = dot(self.row(r), x);
        }
    }

    /// y = self^T * x.
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            let row = self.row(r);
            for (c, out) in y.iter_mut().enumerate() {
                *out += xr * row[c];
            }
        }
    }

    /// self += alpha * a * b^T (rank-one update).
    pub fn add_outer(&mut self, alpha: f64, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (r, &ar) in a.iter().enumerate() {
            let row = self.row_mut(r);
            let f = alpha * ar;
            for (c, out) in row.iter_mut().enumerate() {
                *out += f * b[c];
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

/// Cosine similarity between two vectors of any norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

/// y += alpha * x.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(x: &mut [f64], alpha: f64) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Normalizes `x` to unit L2 norm in place; errors on (near-)zero vectors.
pub fn normalize(x: &mut [f64]) -> Result<()> {
    let n = norm(x);
    if n < 1e-300 {
        return Err(Error::ZeroNorm { norm: n });
    }
    scale(x, 1.0 / n);
    Ok(())
}

/// Column mean and biased covariance C = (1/M) sum (z - mean)(z - mean)^T.
pub fn mean_and_covariance(rows: &[&[f64]], dim: usize) -> (Vec<f64>, Mat) {
    let m = rows.len();
    let mut mean = vec![0.0; dim];
    for row in rows {
        axpy(1.0, row, &mut mean);
    }
    scale(&mut mean, 1.0 / m as f64);

    let mut cov = Mat::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for row in rows {
        for (c, (&x, &mu)) in row.iter().zip(mean.iter()).enumerate() {
            centered[c] = x - mu;
        }
        cov.add_outer(1.0, &centered, &centered);
    }
    cov.scale(1.0 / m as f64);
    (mean, cov)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
///
/// `ridge` is only reported in the error; the caller applies it beforehand.
pub fn cholesky(a: &Mat, ridge: f64) -> Result<Mat> {
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::NotPositiveDefinite { pivot: i, ridge });
                }
                l.set(i, j, math::sqrt(sum));
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solves L L^T x = b given the Cholesky factor L.
pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l.get(i, k) * y[k];
        }
        y[i] = sum / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l.get(k, i) * x[k];
        }
        x[i] = sum / l.get(i, i);
    }
    x
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn cholesky_inverse(l: &Mat) -> Mat {
    let n = l.rows();
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    for c in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[c] = 1.0;
        let col = cholesky_solve(l, &e);
        for (r, v) in col.iter().enumerate() {
            inv.set(r, c, *v);
        }
    }
    // Symmetrize to scrub round-off from the column-by-column solve.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
            inv.set(i, j, v);
            inv.set(j, i, v);
        }
    }
    inv
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, V)` with `a = V diag(eigenvalues) V^T`; columns of
/// `V` are the eigenvectors. Values are unsorted.
pub fn symmetric_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Mat::identity(n);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off <= 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if math::abs(apq) < 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::hypot(1.0, theta))
                } else {
                    -1.0 / (-theta + math::hypot(1.0, theta))
                };
                let c = 1.0 / math::hypot(1.0, t);
                let s = t * c;

                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let eig = (0..n).map(|i| m.get(i, i)).collect();
    (eig, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cholesky_inverse_roundtrip() {
        let a = Mat::from_vec(vec![4.0, 1.0, 1.0, 3.0], 2, 2).unwrap();
        let l = cholesky(&a, 0.0).unwrap();
        let inv = cholesky_inverse(&l);
        // a * inv = I
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += a.get(i, k) * inv.get(k, j);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(s, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_vec(vec![1.0, 2.0, 2.0, 1.0], 2, 2).unwrap();
        assert!(matches!(
            cholesky(&a, 0.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = Mat::from_vec(vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0], 3, 3).unwrap();
        let (eig, v) = symmetric_eigen(&a);
        // reconstruct V diag(eig) V^T
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += v.get(i, k) * eig[k] * v.get(j, k);
                }
                assert_abs_diff_eq!(s, a.get(i, j), epsilon = 1e-10);
            }
        }
        let mut sorted = eig.clone();
        sorted.sort_by(|x, y| x.total_cmp(y));
        // known spectrum: 3 - sqrt(3)? verify against trace/det instead
        let trace: f64 = sorted.iter().sum();
        assert_abs_diff_eq!(trace, 7.0, epsilon = 1e-10);
    }

    #[test]
    fn covariance_of_antipodal_pair() {
        let rows: [&[f64]; 2] = [&[1.0, 0.0], &[-1.0, 0.0]];
        let (mean, cov) = mean_and_covariance(&rows, 2);
        assert_abs_diff_eq!(mean[0], 0.0);
        assert_abs_diff_eq!(cov.get(0, 0), 1.0);
        assert_abs_diff_eq!(cov.get(0, 1), 0.0);
        assert_abs_diff_eq!(cov.get(1, 1), 0.0);
    }
}
