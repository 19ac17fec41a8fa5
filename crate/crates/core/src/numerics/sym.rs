//! Dense symmetric matrices of small dimension with a cyclic Jacobi
//! eigensolver, plus a minimal general matrix type for the handful of
//! non-symmetric products the estimators need.

use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 16;

/// Symmetric `dim x dim` matrix with entries mirrored on write.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "dimension {dim} outside 1..={MAX_DIM}");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.add(&other.scale(-1.0))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_mat(&self) -> Mat {
        Mat {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    /// Eigendecomposition `m = V diag(l) V^T` by cyclic Jacobi rotations,
    /// eigenvalues sorted descending.
    pub fn eigen(&self) -> Eigen {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut v = SymMatrix::identity(n).data;
        let norm: f64 = self.data.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
            if off.sqrt() <= 1e-15 * norm.max(1e-300) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[j * n + j].partial_cmp(&a[i * n + i]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
        let vectors: Vec<Vec<f64>> = order
            .iter()
            .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
            .collect();
        Eigen { values, vectors }
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigen()
            .values
            .iter()
            .fold(0.0, |acc, &l| acc.max(l.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigen().values.last().unwrap()
    }

    /// Inverse via the eigendecomposition; fails if the matrix is singular at
    /// working precision.
    pub fn inverse(&self) -> Result<SymMatrix> {
        let eig = self.eigen();
        let max = eig.values.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
        if eig.values.iter().any(|&l| l.abs() <= 1e-14 * max.max(1e-300)) {
            return Err(Error::domain(format!(
                "matrix is numerically singular (eigenvalues {:?})",
                eig.values
            )));
        }
        Ok(eig.reassemble(|l| 1.0 / l))
    }

    /// Symmetric square root; requires positive definiteness.
    pub fn sqrt(&self) -> Result<SymMatrix> {
        let eig = self.eigen();
        let min = *eig.values.last().unwrap();
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite { lambda_min: min });
        }
        Ok(eig.reassemble(|l| l.sqrt()))
    }
}

/// Sorted eigendecomposition of a [`SymMatrix`].
pub struct Eigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector paired with `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

impl Eigen {
    /// Builds `V diag(f(l)) V^T`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        SymMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| f(self.values[k]) * self.vectors[k][i] * self.vectors[k][j])
                .sum()
        })
    }
}

/// Minimal dense row-major matrix for non-symmetric intermediate products.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::Streams;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn identity_eigenvalues() {
        let eig = SymMatrix::identity(3).eigen();
        for v in eig.values {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn diagonal_square_root() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 4.0);
        m.set(1, 1, 1.0);
        let s = m.sqrt().unwrap();
        assert_abs_diff_eq!(s.get(0, 0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.get(1, 1), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.get(0, 1), 0.0, epsilon = 1e-14);
    }

    fn random_sym(dim: usize, seed: u64) -> SymMatrix {
        let mut rng = Streams::new(seed).derive(&[9]);
        SymMatrix::from_fn(dim, |_, _| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn reconstruction_of_random_symmetric() {
        for seed in 0..5 {
            let m = random_sym(3, seed);
            let eig = m.eigen();
            let back = eig.reassemble(|l| l);
            for i in 0..3 {
                for j in 0..3 {
                    assert_abs_diff_eq!(back.get(i, j), m.get(i, j), epsilon = 1e-12);
                }
            }
            // Eigenvalues sorted descending.
            for w in eig.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn square_root_squares_back() {
        for seed in 0..5 {
            let a = random_sym(3, 100 + seed);
            // A A^T + I is positive definite.
            let mut m = SymMatrix::zeros(3);
            for i in 0..3 {
                for j in 0..3 {
                    let v: f64 = (0..3).map(|k| a.get(i, k) * a.get(j, k)).sum();
                    m.set(i, j, v + if i == j { 1.0 } else { 0.0 });
                }
            }
            let s = m.sqrt().unwrap();
            let s2 = s.to_mat().matmul(&s.to_mat());
            for i in 0..3 {
                for j in 0..3 {
                    assert_abs_diff_eq!(s2.get(i, j), m.get(i, j), epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn square_root_rejects_indefinite_naming_min_eigenvalue() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 1.0);
        m.set(1, 1, -2.0);
        match m.sqrt().unwrap_err() {
            Error::NotPositiveDefinite { lambda_min } => {
                assert_abs_diff_eq!(lambda_min, -2.0, epsilon = 1e-12);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn inverse_round_trip() {
        let a = random_sym(4, 42);
        let mut m = SymMatrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| a.get(i, k) * a.get(j, k)).sum();
                m.set(i, j, v + if i == j { 2.0 } else { 0.0 });
            }
        }
        let inv = m.inverse().unwrap();
        let prod = m.to_mat().matmul(&inv.to_mat());
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod.get(i, j), expected, epsilon = 1e-10);
            }
        }
    }
}
