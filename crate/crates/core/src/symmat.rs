//! Dense symmetric matrices and the factorization kernels everything else
//! leans on: Cholesky (doubling as the positive-definiteness test), log
//! determinant and inverse from the factor, congruence by the inverse factor
//! ("whitening"), and the smallest eigenvalue.

use thiserror::Error;

/// Cholesky elimination hit a pivot that is not strictly positive, so the
/// matrix is not positive definite. `pivot` is the failing row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("matrix is not positive definite (pivot row {pivot})")]
pub struct NotPositiveDefinite {
    pub pivot: usize,
}

/// Dense symmetric matrix with full row-major storage.
///
/// Symmetry is maintained by construction: writes go through [`SymMat::set`],
/// which mirrors the entry, and the bulk constructors fill both triangles
/// from one.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "empty matrix");
        SymMat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    /// Build from `f` evaluated on the lower triangle (i >= j); the upper
    /// triangle is mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                assert!(v.is_finite(), "non-finite entry at ({i},{j})");
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Build from full rows, which must be exactly symmetric.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "ragged rows");
        let m = Self::from_fn(n, |i, j| rows[i][j]);
        for i in 0..n {
            for j in 0..i {
                assert!(rows[i][j] == rows[j][i], "asymmetric input at ({i},{j})");
            }
        }
        m
    }

    /// Build from the row-major lower triangle including the diagonal
    /// (`n(n+1)/2` values: row 0 has 1 entry, row i has i+1).
    pub fn from_lower(n: usize, lower: &[f64]) -> Self {
        assert_eq!(lower.len(), n * (n + 1) / 2, "lower triangle length");
        let mut it = lower.iter();
        Self::from_fn(n, |_, _| *it.next().unwrap())
    }

    /// Row-major lower triangle including the diagonal.
    pub fn to_lower(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n + 1) / 2);
        for i in 0..self.n {
            for j in 0..=i {
                out.push(self.data[i * self.n + j]);
            }
        }
        out
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Write `v` at (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.set(i, j, self.get(i, j) + v);
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// self += t * other.
    pub fn axpy(&mut self, t: f64, other: &SymMat) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += t * b;
        }
    }

    pub fn scale(&mut self, t: f64) {
        for a in &mut self.data {
            *a *= t;
        }
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Frobenius inner product Σ_ij A_ij B_ij over all n^2 entries.
    pub fn frob_inner(&self, other: &SymMat) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Cholesky factor L with A = L L^T. Failure of a pivot is the
    /// positive-definiteness test used throughout.
    pub fn cholesky(&self) -> Result<LowerTri, NotPositiveDefinite> {
        let n = self.n;
        let mut l = vec![0.0; n * (n + 1) / 2];
        for i in 0..n {
            let ri = i * (i + 1) / 2;
            for j in 0..=i {
                let rj = j * (j + 1) / 2;
                let mut s = self.data[i * n + j];
                for k in 0..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(NotPositiveDefinite { pivot: i });
                    }
                    l[ri + j] = s.sqrt();
                } else {
                    l[ri + j] = s / l[rj + j];
                }
            }
        }
        Ok(LowerTri { n, data: l })
    }

    /// Smallest eigenvalue via a symmetric tridiagonal eigensolver.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j));
        m.symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |acc, &v| acc.min(v))
    }
}

/// Lower triangular factor in packed row-major storage with strictly
/// positive diagonal (row i holds i+1 entries).
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTri {
    n: usize,
    data: Vec<f64>,
}

impl LowerTri {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.data[i * (i + 1) / 2 + j]
    }

    /// log det(L L^T) = 2 Σ_i log L_ii.
    pub fn logdet(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.get(i, i).ln();
        }
        2.0 * s
    }

    /// Solve L y = b.
    pub fn forward_solve_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "dimension mismatch");
        let mut y = b.to_vec();
        for i in 0..self.n {
            let ri = i * (i + 1) / 2;
            let mut s = y[i];
            for k in 0..i {
                s -= self.data[ri + k] * y[k];
            }
            y[i] = s / self.data[ri + i];
        }
        y
    }

    /// Solve L Y = B for a full row-major B (columns of B solved at once via
    /// row operations).
    fn forward_solve_rows(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n * n);
        let mut y = b.to_vec();
        for i in 0..n {
            let ri = i * (i + 1) / 2;
            let (done, rest) = y.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            for k in 0..i {
                let lik = self.data[ri + k];
                if lik != 0.0 {
                    let row_k = &done[k * n..(k + 1) * n];
                    for (a, b) in row_i.iter_mut().zip(row_k) {
                        *a -= lik * b;
                    }
                }
            }
            let d = self.data[ri + i];
            for a in row_i.iter_mut() {
                *a /= d;
            }
        }
        y
    }

    /// Solve L^T X = B for a full row-major B.
    fn backward_solve_rows(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n * n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * n);
            let row_i = &mut head[i * n..];
            // L^T[i][k] = L[k][i] for k > i.
            for k in i + 1..n {
                let lki = self.data[k * (k + 1) / 2 + i];
                if lki != 0.0 {
                    let row_k = &tail[(k - i - 1) * n..(k - i) * n];
                    for (a, b) in row_i.iter_mut().zip(row_k) {
                        *a -= lki * b;
                    }
                }
            }
            let d = self.data[i * (i + 1) / 2 + i];
            for a in row_i.iter_mut() {
                *a /= d;
            }
        }
        x
    }

    /// Inverse of the factored matrix: (L L^T)^-1, exactly symmetrized.
    pub fn inverse_spd(&self) -> SymMat {
        let n = self.n;
        let mut eye = vec![0.0; n * n];
        for i in 0..n {
            eye[i * n + i] = 1.0;
        }
        let y = self.forward_solve_rows(&eye);
        let x = self.backward_solve_rows(&y);
        SymMat::from_fn(n, |i, j| 0.5 * (x[i * n + j] + x[j * n + i]))
    }

    /// Congruence by the inverse factor: L^-1 D L^-T for symmetric D,
    /// exactly symmetrized. Two triangular solves, no explicit inverse.
    pub fn whiten(&self, d: &SymMat) -> SymMat {
        let n = self.n;
        assert_eq!(d.n(), n, "dimension mismatch");
        // Y = L^-1 D, then M = L^-1 Y^T = L^-1 D L^-T.
        let y = self.forward_solve_rows(d.data());
        let mut yt = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                yt[j * n + i] = y[i * n + j];
            }
        }
        let m = self.forward_solve_rows(&yt);
        SymMat::from_fn(n, |i, j| 0.5 * (m[i * n + j] + m[j * n + i]))
    }

    /// L L^T, for tests.
    pub fn reconstruct(&self) -> SymMat {
        SymMat::from_fn(self.n, |i, j| {
            let mut s = 0.0;
            for k in 0..=j.min(i) {
                s += self.get(i, k) * self.get(j, k);
            }
            s
        })
    }
}
