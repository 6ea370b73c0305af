//! Baseline solver carrying the pairwise dual block explicitly.
//!
//! Instead of the aggregated matrix S constrained to the image set, this
//! variant keeps the raw multiplier Z: an nbar x nbar symmetric matrix
//! (nbar = n(n-1)/2) with every off-diagonal entry box-constrained to
//! [-lambda, lambda]. The shift contribution of Z is the pair-difference
//! adjoint, and the Z-gradient is the pair-difference matrix of vect(X).
//! Projection is an entrywise clamp — no isotonic machinery — which makes
//! this an independent check on the aggregated solver, at O(n^4) memory.
//!
//! Both solvers maximize the same dual optimum, so final objective values
//! must agree even though the iterates live in different spaces.

use crate::dspg::{run_driver, DualSpace, SolveReport, SolverConfig, SolverError};
use crate::model::{apply_at, ProblemData};
use crate::pairmap::{pair_diff_adjoint, pair_diff_matrix, vect};
use crate::projection::clamp_box;
use crate::symmat::SymMat;

/// Largest n the baseline accepts; beyond this the nbar x nbar block is
/// unreasonably large (n = 25 already means a 300 x 300 dense matrix).
pub const MAX_NAIVE_N: usize = 25;

/// Dual iterate of the baseline: multipliers y, W as usual, and the raw
/// pairwise block Z of size nbar x nbar.
#[derive(Debug, Clone)]
pub struct DualPointZ {
    pub y: Vec<f64>,
    pub w: SymMat,
    pub z: SymMat,
}

impl DualPointZ {
    pub fn zeros(n: usize, m: usize) -> Self {
        let nbar = n * (n - 1) / 2;
        DualPointZ { y: vec![0.0; m], w: SymMat::zeros(n), z: SymMat::zeros(nbar) }
    }
}

struct ZSpace<'a> {
    pd: &'a ProblemData,
}

impl DualSpace for ZSpace<'_> {
    type Point = DualPointZ;

    fn project(&self, p: &DualPointZ) -> DualPointZ {
        DualPointZ {
            y: p.y.clone(),
            w: clamp_box(&p.w, self.pd.rho),
            z: clamp_box(&p.z, self.pd.lambda),
        }
    }

    fn shift(&self, p: &DualPointZ) -> SymMat {
        let n = self.pd.n();
        let mut out = apply_at(&p.y, &self.pd.constraints);
        out.scale(-1.0);
        out.axpy(0.5, &p.w);
        out.axpy(1.0, &pair_diff_adjoint(&p.z, n));
        out
    }

    fn gradient(&self, x: &SymMat) -> DualPointZ {
        let b = self.pd.constraints.rhs();
        let ax = crate::model::apply_a(x, &self.pd.constraints);
        let y: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut w = x.clone();
        w.scale(0.5);
        DualPointZ { y, w, z: pair_diff_matrix(&vect(x)) }
    }

    fn linear_term(&self, p: &DualPointZ) -> f64 {
        self.pd.constraints.rhs().iter().zip(&p.y).map(|(a, b)| a * b).sum()
    }

    fn inner(&self, a: &DualPointZ, b: &DualPointZ) -> f64 {
        let yy: f64 = a.y.iter().zip(&b.y).map(|(p, q)| p * q).sum();
        yy + a.w.frob_inner(&b.w) + a.z.frob_inner(&b.z)
    }

    fn add_scaled(&self, a: &DualPointZ, t: f64, b: &DualPointZ) -> DualPointZ {
        let y = a.y.iter().zip(&b.y).map(|(p, q)| p + t * q).collect();
        let mut w = a.w.clone();
        w.axpy(t, &b.w);
        let mut z = a.z.clone();
        z.axpy(t, &b.z);
        DualPointZ { y, w, z }
    }

    fn sub(&self, a: &DualPointZ, b: &DualPointZ) -> DualPointZ {
        let y = a.y.iter().zip(&b.y).map(|(p, q)| p - q).collect();
        DualPointZ { y, w: a.w.sub(&b.w), z: a.z.sub(&b.z) }
    }

    fn membership_violations(&self, p: &DualPointZ, out: &mut Vec<String>) {
        for (mat, name, bound) in [(&p.w, "W", self.pd.rho), (&p.z, "Z", self.pd.lambda)] {
            let n = mat.n();
            for i in 0..n {
                if mat.get(i, i) != 0.0 {
                    out.push(format!("{name} diagonal nonzero at {i}"));
                }
                for j in i + 1..n {
                    if mat.get(i, j).abs() > bound * (1.0 + 1e-12) {
                        out.push(format!("{name} out of box at ({i},{j})"));
                    }
                }
            }
        }
    }
}

/// Solve with the explicit pairwise block, from the zero start. Refuses
/// n > [`MAX_NAIVE_N`].
pub fn solve_naive(
    pd: &ProblemData,
    cfg: &SolverConfig,
) -> Result<SolveReport<DualPointZ>, SolverError> {
    let n = pd.n();
    if n > MAX_NAIVE_N {
        return Err(SolverError::TooLarge { n, max: MAX_NAIVE_N });
    }
    let u0 = DualPointZ::zeros(n, pd.constraints.len());
    run_driver(&ZSpace { pd }, pd, cfg, u0)
}
