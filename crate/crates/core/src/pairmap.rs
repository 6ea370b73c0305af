//! Indexing between strict-upper-triangle matrix positions and flat pair
//! indices, plus the pairwise-difference map on those entries and its
//! adjoint.
//!
//! Order convention everywhere: pair a runs over (0,1), (0,2), ..., (0,n-1),
//! (1,2), ... row-major over i < j. A symmetric n x n matrix with zero
//! diagonal is identified with the vector of its strict-upper entries in
//! this order ("vect").
//!
//! The pairwise-difference map sends that vector x to the nbar x nbar
//! symmetric matrix with entry x_a - x_b at (a, b), a < b (mirrored below).
//! Its adjoint maps an nbar x nbar symmetric matrix back to a zero-diagonal
//! symmetric n x n matrix. Materializing either is O(nbar^2) memory, so the
//! dense forms are reserved for oracles and the small baseline solver; the
//! production path only ever needs `pairwise_abs_sum`, which runs in
//! O(nbar log nbar) via sorting.

use crate::symmat::SymMat;

/// Bijection between ordered pairs (i, j), i < j < n, and flat indices
/// 0..n(n-1)/2 in row-major strict-upper order.
#[derive(Debug, Clone)]
pub struct PairIndex {
    n: usize,
    row_start: Vec<usize>,
}

impl PairIndex {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "empty index");
        let row_start = (0..n).map(|i| i * (2 * n - i - 1) / 2).collect();
        PairIndex { n, row_start }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of pairs nbar = n(n-1)/2.
    #[inline]
    pub fn count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Flat index of pair (i, j) with i < j.
    #[inline]
    pub fn index_of(&self, i: usize, j: usize) -> usize {
        assert!(i < j && j < self.n, "bad pair ({i},{j}) for n={}", self.n);
        self.row_start[i] + (j - i - 1)
    }

    /// Inverse of `index_of`.
    pub fn pair_at(&self, a: usize) -> (usize, usize) {
        assert!(a < self.count(), "pair index out of range");
        let i = self.row_start.partition_point(|&s| s <= a) - 1;
        (i, a - self.row_start[i] + i + 1)
    }
}

/// Strict upper triangle of a symmetric matrix in pair order.
pub fn vect(m: &SymMat) -> Vec<f64> {
    let n = m.n();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(m.get(i, j));
        }
    }
    out
}

/// Rebuild a symmetric matrix from its strict upper triangle in pair order,
/// with every diagonal entry set to `diag`.
pub fn unvect_sym(n: usize, v: &[f64], diag: f64) -> SymMat {
    assert_eq!(v.len(), n * (n - 1) / 2, "pair vector length");
    let mut m = SymMat::zeros(n);
    let mut a = 0;
    for i in 0..n {
        m.set(i, i, diag);
        for j in i + 1..n {
            m.set(i, j, v[a]);
            a += 1;
        }
    }
    m
}

/// Materialized pairwise-difference matrix: entry (a, b) with a < b holds
/// x_a - x_b, mirrored below, zero diagonal. O(nbar^2) storage; oracle and
/// baseline use only.
pub fn pair_diff_matrix(x: &[f64]) -> SymMat {
    let nbar = x.len();
    SymMat::from_fn(nbar, |b, a| {
        // from_fn walks the lower triangle (b >= a); mirror of (a, b).
        if a == b {
            0.0
        } else {
            x[a] - x[b]
        }
    })
}

/// Adjoint of the pairwise-difference map: for Z symmetric nbar x nbar, the
/// entry of the output at pair a = (i, j) is
///
/// ```text
///   sum_{l > a} Z_al - sum_{l < a} Z_la
/// ```
///
/// returned as a zero-diagonal symmetric n x n matrix. Only the strict upper
/// triangle of Z is read.
pub fn pair_diff_adjoint(z: &SymMat, n: usize) -> SymMat {
    let pi = PairIndex::new(n);
    let nbar = pi.count();
    assert_eq!(z.n(), nbar, "Z dimension");
    let mut v = vec![0.0; nbar];
    for a in 0..nbar {
        let mut s = 0.0;
        for l in a + 1..nbar {
            s += z.get(a, l);
        }
        for l in 0..a {
            s -= z.get(l, a);
        }
        v[a] = s;
    }
    unvect_sym(n, &v, 0.0)
}

/// Sum of |x_a - x_b| over unordered pairs a < b, in O(len log len):
/// after sorting ascending, the sum telescopes to
/// sum_i (2i + 1 - len) * sorted[i] (0-based i).
pub fn pairwise_abs_sum(x: &[f64]) -> f64 {
    let len = x.len();
    if len < 2 {
        return 0.0;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut s = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        s += (2 * i as i64 + 1 - len as i64) as f64 * v;
    }
    s
}
