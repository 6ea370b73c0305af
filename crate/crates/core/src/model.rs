//! Problem data and the primal/dual quantities the solver iterates on.
//!
//! Primal (over positive definite X, with linear element constraints):
//!
//! ```text
//!   minimize  C•X - mu log det X
//!             + rho Σ_{i<j} |X_ij|
//!             + lambda Σ_{(i,j)} Σ_{(s,t)} |X_ij - X_st|
//!   subject to A(X) = b
//! ```
//!
//! where the clustering term ranges over ordered pairs of strict-upper
//! positions, i.e. twice the unordered pairwise sum.
//!
//! Dual, over U = (y, W, S) with |W|_inf <= rho (zero diagonal) and S in the
//! image of the pairwise-difference adjoint over a lambda-box:
//!
//! ```text
//!   maximize  b'y + mu log det(C + shift(U)) + n mu - n mu log mu
//!   where     shift(U) = -At(y) + W/2 + S
//! ```
//!
//! valid on the open cone C + shift(U) > 0. The primal iterate is recovered
//! as X(U) = mu (C + shift(U))^-1.

use crate::pairmap::{pairwise_abs_sum, vect};
use crate::symmat::{LowerTri, NotPositiveDefinite, SymMat};
use thiserror::Error;

/// One linear equality A_k • X = b_k.
///
/// `Entry { i, j }` pins the off-diagonal entry (i, j): the underlying A_k
/// has 1/2 at (i, j) and (j, i), so A_k • X = X_ij exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Entry { i: usize, j: usize },
    General(SymMat),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("constraint {k}: pair ({i},{j}) is not strictly upper within n={n}")]
    BadPair { k: usize, i: usize, j: usize, n: usize },
    #[error("constraint {k}: duplicate pair ({i},{j})")]
    DuplicatePair { k: usize, i: usize, j: usize },
    #[error("constraint {k}: matrix is {found}x{found}, expected {expected}")]
    BadDim { k: usize, found: usize, expected: usize },
    #[error("rhs has {found} entries for {expected} constraints")]
    RhsLength { found: usize, expected: usize },
}

/// The constraint list together with the right-hand side b.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMap {
    n: usize,
    items: Vec<Constraint>,
    rhs: Vec<f64>,
}

impl ConstraintMap {
    pub fn new(n: usize, items: Vec<Constraint>, rhs: Vec<f64>) -> Result<Self, ConstraintError> {
        if rhs.len() != items.len() {
            return Err(ConstraintError::RhsLength { found: rhs.len(), expected: items.len() });
        }
        let mut seen = std::collections::HashSet::new();
        for (k, c) in items.iter().enumerate() {
            match c {
                Constraint::Entry { i, j } => {
                    if !(i < j && *j < n) {
                        return Err(ConstraintError::BadPair { k, i: *i, j: *j, n });
                    }
                    if !seen.insert((*i, *j)) {
                        return Err(ConstraintError::DuplicatePair { k, i: *i, j: *j });
                    }
                }
                Constraint::General(a) => {
                    if a.n() != n {
                        return Err(ConstraintError::BadDim { k, found: a.n(), expected: n });
                    }
                }
            }
        }
        Ok(ConstraintMap { n, items, rhs })
    }

    pub fn empty(n: usize) -> Self {
        ConstraintMap { n, items: Vec::new(), rhs: Vec::new() }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of constraints m.
    #[inline]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Constraint] {
        &self.items
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }
}

/// Full problem data. mu > 0, rho >= 0, lambda >= 0.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub c: SymMat,
    pub mu: f64,
    pub rho: f64,
    pub lambda: f64,
    pub constraints: ConstraintMap,
}

impl ProblemData {
    pub fn new(c: SymMat, mu: f64, rho: f64, lambda: f64, constraints: ConstraintMap) -> Self {
        assert!(mu > 0.0 && mu.is_finite(), "mu must be positive");
        assert!(rho >= 0.0 && lambda >= 0.0, "penalty weights must be nonnegative");
        assert_eq!(c.n(), constraints.n(), "dimension mismatch");
        ProblemData { c, mu, rho, lambda, constraints }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.c.n()
    }
}

/// Dual iterate U = (y, W, S). W and S are symmetric with zero diagonal
/// whenever U came out of the feasible-set projection.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub y: Vec<f64>,
    pub w: SymMat,
    pub s: SymMat,
}

impl DualPoint {
    pub fn zeros(n: usize, m: usize) -> Self {
        DualPoint { y: vec![0.0; m], w: SymMat::zeros(n), s: SymMat::zeros(n) }
    }

    /// Direct-product inner product: y'y + W•W + S•S.
    pub fn inner(&self, other: &DualPoint) -> f64 {
        let yy: f64 = self.y.iter().zip(&other.y).map(|(a, b)| a * b).sum();
        yy + self.w.frob_inner(&other.w) + self.s.frob_inner(&other.s)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// self + t * other.
    pub fn add_scaled(&self, t: f64, other: &DualPoint) -> DualPoint {
        let mut out = self.clone();
        for (a, b) in out.y.iter_mut().zip(&other.y) {
            *a += t * b;
        }
        out.w.axpy(t, &other.w);
        out.s.axpy(t, &other.s);
        out
    }

    pub fn sub(&self, other: &DualPoint) -> DualPoint {
        self.add_scaled(-1.0, other)
    }
}

/// Forward constraint map A(X) = (A_1 • X, ..., A_m • X).
pub fn apply_a(x: &SymMat, cmap: &ConstraintMap) -> Vec<f64> {
    assert_eq!(x.n(), cmap.n(), "dimension mismatch");
    cmap.items()
        .iter()
        .map(|c| match c {
            Constraint::Entry { i, j } => x.get(*i, *j),
            Constraint::General(a) => a.frob_inner(x),
        })
        .collect()
}

/// Adjoint constraint map At(y) = Σ_k y_k A_k.
pub fn apply_at(y: &[f64], cmap: &ConstraintMap) -> SymMat {
    assert_eq!(y.len(), cmap.len(), "dimension mismatch");
    let mut out = SymMat::zeros(cmap.n());
    for (c, &yk) in cmap.items().iter().zip(y) {
        match c {
            Constraint::Entry { i, j } => out.add_at(*i, *j, 0.5 * yk),
            Constraint::General(a) => out.axpy(yk, a),
        }
    }
    out
}

/// The linear map added to C inside the dual: -At(y) + W/2 + S.
pub fn dual_shift(u: &DualPoint, cmap: &ConstraintMap) -> SymMat {
    let mut out = apply_at(&u.y, cmap);
    out.scale(-1.0);
    out.axpy(0.5, &u.w);
    out.axpy(1.0, &u.s);
    out
}

/// Primal recovery X(U) = mu (C + shift(U))^-1 together with the Cholesky
/// factor of C + shift(U), which callers reuse.
pub fn primal_estimate(
    u: &DualPoint,
    pd: &ProblemData,
) -> Result<(SymMat, LowerTri), NotPositiveDefinite> {
    let mut k = pd.c.clone();
    k.axpy(1.0, &dual_shift(u, &pd.constraints));
    let l = k.cholesky()?;
    let mut x = l.inverse_spd();
    x.scale(pd.mu);
    Ok((x, l))
}

/// Dual objective value from its pieces; `logdet` is log det(C + shift(U)).
pub fn dual_value(bty: f64, logdet: f64, pd: &ProblemData) -> f64 {
    let n = pd.n() as f64;
    bty + pd.mu * logdet + n * pd.mu * (1.0 - pd.mu.ln())
}

/// Dual objective b'y + mu log det(C + shift(U)) + n mu - n mu log mu.
pub fn dual_objective(u: &DualPoint, pd: &ProblemData) -> Result<f64, NotPositiveDefinite> {
    let mut k = pd.c.clone();
    k.axpy(1.0, &dual_shift(u, &pd.constraints));
    let l = k.cholesky()?;
    let bty: f64 = pd.constraints.rhs().iter().zip(&u.y).map(|(a, b)| a * b).sum();
    Ok(dual_value(bty, l.logdet(), pd))
}

/// Gradient of the dual objective at U, expressed through X = X(U):
/// (b - A(X), X/2, X).
pub fn dual_grad_from_x(x: &SymMat, pd: &ProblemData) -> DualPoint {
    let ax = apply_a(x, &pd.constraints);
    let y: Vec<f64> = pd.constraints.rhs().iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut w = x.clone();
    w.scale(0.5);
    DualPoint { y, w, s: x.clone() }
}

pub fn dual_grad(u: &DualPoint, pd: &ProblemData) -> Result<DualPoint, NotPositiveDefinite> {
    let (x, _) = primal_estimate(u, pd)?;
    Ok(dual_grad_from_x(&x, pd))
}

/// Primal objective. The clustering term is evaluated as
/// 2 lambda Σ_{a<b} |x_a - x_b| over the strict-upper entries (the ordered
/// double sum counts every unordered pair twice), via sorting rather than
/// the quartic loop.
pub fn primal_objective(x: &SymMat, pd: &ProblemData) -> Result<f64, NotPositiveDefinite> {
    assert_eq!(x.n(), pd.n(), "dimension mismatch");
    let logdet = x.cholesky()?.logdet();
    let v = vect(x);
    let l1: f64 = v.iter().map(|t| t.abs()).sum();
    Ok(pd.c.frob_inner(x) - pd.mu * logdet + pd.rho * l1 + 2.0 * pd.lambda * pairwise_abs_sum(&v))
}

/// Relative duality gap |p - d| / max(1, (|p| + |d|) / 2).
pub fn rel_gap(p: f64, d: f64) -> f64 {
    (p - d).abs() / 1.0_f64.max(0.5 * (p.abs() + d.abs()))
}
