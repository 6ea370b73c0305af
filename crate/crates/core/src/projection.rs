//! Projections onto the dual feasible sets, and the isotonic machinery
//! behind the only non-trivial one.
//!
//! The dual feasible region is a product of three sets: free coordinates,
//! an infinity-norm box (clamp), and the image of the pairwise-difference
//! adjoint over a box. Projecting onto the last set is done indirectly:
//! its support function is the all-pairs fused penalty
//! lambda Σ_{a<b} |u_a - u_b|, so by Moreau's identity
//!
//! ```text
//!   project(s) = s - prox(s),
//! ```
//!
//! where prox minimizes 0.5 ||u - s||^2 + lambda Σ_{a<b} |u_a - u_b|. After
//! sorting s ascending the prox separates: subtracting the linear shift
//! lambda (2i + 1 - nbar) from the i-th sorted value (0-based) reduces the
//! problem to isotonic regression, solved by pool-adjacent-violators (PAVA)
//! in linear time. Total cost O(nbar log nbar), dominated by the sort.

use crate::model::DualPoint;
use crate::pairmap::{unvect_sym, vect};
use crate::symmat::SymMat;

/// Clamp every off-diagonal entry into [-rho, rho] and force the diagonal to
/// zero. This is the exact projection onto the box of symmetric zero-diagonal
/// matrices with infinity norm at most rho.
pub fn clamp_box(w: &SymMat, rho: f64) -> SymMat {
    assert!(rho >= 0.0, "negative box radius");
    SymMat::from_fn(w.n(), |i, j| {
        if i == j {
            0.0
        } else {
            w.get(i, j).clamp(-rho, rho)
        }
    })
}

/// Isotonic (nondecreasing least squares) fit.
///
/// `values` is nondecreasing; each value is the mean of a contiguous block
/// of the input, and the means of maximal equal-value runs strictly
/// increase.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicResult {
    pub values: Vec<f64>,
}

/// Pool-adjacent-violators with unit weights: one left-to-right pass with
/// back-merging, O(len). Merge decisions use running block sums; final
/// values are recomputed once per block as a fresh left-to-right sum over
/// the original input divided by the block length, so the rounding of each
/// output value does not depend on the merge order that formed its block.
pub fn pava_isotonic(y: &[f64]) -> IsotonicResult {
    let n = y.len();
    if n == 0 {
        return IsotonicResult { values: Vec::new() };
    }
    let mut start: Vec<usize> = Vec::with_capacity(n);
    let mut count: Vec<usize> = Vec::with_capacity(n);
    let mut sum: Vec<f64> = Vec::with_capacity(n);
    for (i, &v) in y.iter().enumerate() {
        debug_assert!(v.is_finite(), "non-finite input");
        start.push(i);
        count.push(1);
        sum.push(v);
        while sum.len() > 1 {
            let t = sum.len() - 1;
            if sum[t - 1] / count[t - 1] as f64 > sum[t] / count[t] as f64 {
                sum[t - 1] += sum[t];
                count[t - 1] += count[t];
                sum.pop();
                count.pop();
                start.pop();
            } else {
                break;
            }
        }
    }

    let fresh = |s: usize, c: usize| -> f64 {
        // -0.0 is the additive identity under IEEE rounding (0.0 is not:
        // 0.0 + -0.0 == 0.0), so singleton blocks keep their signed zero
        let mut acc = -0.0;
        for &v in &y[s..s + c] {
            acc += v;
        }
        acc / c as f64
    };

    // Canonical rounding, then repair the (ulp-rare) case where fresh means
    // of adjacent blocks invert relative to the running-sum decision.
    let mut blocks: Vec<(usize, usize, f64)> = Vec::with_capacity(sum.len());
    for (&s, &c) in start.iter().zip(&count) {
        blocks.push((s, c, fresh(s, c)));
        while blocks.len() > 1 {
            let t = blocks.len() - 1;
            if blocks[t - 1].2 > blocks[t].2 {
                let (s0, c0, _) = blocks[t - 1];
                let c1 = blocks[t].1;
                blocks.pop();
                blocks[t - 1] = (s0, c0 + c1, fresh(s0, c0 + c1));
            } else {
                break;
            }
        }
    }

    let mut values = Vec::with_capacity(n);
    for &(_, c, v) in &blocks {
        values.extend(std::iter::repeat_n(v, c));
    }
    IsotonicResult { values }
}

/// Proximal map of lambda Σ_{a<b} |u_a - u_b| at s: stable-sort ascending,
/// subtract the shift lambda (2i + 1 - nbar) at sorted position i, run PAVA,
/// undo the permutation. If s_i <= s_j then out_i <= out_j, which is what
/// makes sorting legitimate.
pub fn fused_allpairs_prox(s: &[f64], lambda: f64) -> Vec<f64> {
    assert!(lambda >= 0.0, "negative penalty weight");
    let nbar = s.len();
    if nbar <= 1 {
        return s.to_vec();
    }
    let mut order: Vec<usize> = (0..nbar).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let shifted: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(i, &idx)| {
            // guard the exact zero-penalty case: 0.0 * negative is -0.0,
            // and s - -0.0 would flip the sign of a zero entry
            if lambda == 0.0 {
                s[idx]
            } else {
                s[idx] - lambda * (2 * i as i64 + 1 - nbar as i64) as f64
            }
        })
        .collect();
    let fit = pava_isotonic(&shifted);
    let mut out = vec![0.0; nbar];
    for (i, &idx) in order.iter().enumerate() {
        out[idx] = fit.values[i];
    }
    out
}

/// Projection of s onto the set of vectors expressible as the
/// pairwise-difference adjoint of a box-bounded matrix: by Moreau,
/// exactly s - prox elementwise.
pub fn project_s(s: &[f64], lambda: f64) -> Vec<f64> {
    let prox = fused_allpairs_prox(s, lambda);
    s.iter().zip(&prox).map(|(a, b)| a - b).collect()
}

/// Matrix form of [`project_s`] on the strict upper triangle; diagonal is
/// zero (every member of the set has zero diagonal).
pub fn project_s_mat(m: &SymMat, lambda: f64) -> SymMat {
    unvect_sym(m.n(), &project_s(&vect(m), lambda), 0.0)
}

/// Projection onto the dual feasible product: y free, W clamped, S through
/// the fused projection.
pub fn project_m(u: &DualPoint, rho: f64, lambda: f64) -> DualPoint {
    DualPoint {
        y: u.y.clone(),
        w: clamp_box(&u.w, rho),
        s: project_s_mat(&u.s, lambda),
    }
}
