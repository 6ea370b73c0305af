//! Sparse inverse covariance estimation with an all-pairs clustering penalty.
//!
//! The estimator minimizes
//!
//! ```text
//!   C•X - mu log det X + rho Σ_{i<j} |X_ij| + lambda Σ_{(i,j)} Σ_{(s,t)} |X_ij - X_st|
//! ```
//!
//! over positive definite X subject to linear element constraints A(X) = b.
//! The last term fuses off-diagonal entries pairwise, so estimated partial
//! correlations collapse into clusters of equal values.
//!
//! The solver works on the dual: a concave log-det objective maximized over a
//! product of simple sets by a non-monotone spectral projected gradient
//! method. The one non-trivial projection (onto the image of the pairwise
//! difference adjoint) reduces to isotonic regression after sorting, giving
//! an O(n^2 log n) iteration overall.
//!
//! Module map:
//! - [`symmat`]: dense symmetric matrices, Cholesky, whitening, eigenvalues
//! - [`pairmap`]: strict-upper-triangle indexing and pairwise-difference maps
//! - [`projection`]: box clamp, isotonic regression, fused prox, dual projection
//! - [`model`]: problem data, objectives, gradient, duality gap
//! - [`dspg`]: the projected gradient solver and its shared driver
//! - [`naive`]: baseline solver on the materialized pair-difference dual
//! - [`datagen`]: seeded instance generators and the binary dataset loader

pub mod datagen;
pub mod dspg;
pub mod model;
pub mod naive;
pub mod pairmap;
pub mod projection;
pub mod symmat;
