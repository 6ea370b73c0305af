//! Dual spectral projected gradient solver.
//!
//! Maximizes the concave dual objective over the product feasible set by
//! projected gradient ascent with a Barzilai-Borwein step length, a
//! feasibility cap keeping the log-det argument positive definite, and a
//! non-monotone backtracking line search. Outline of one iteration at U:
//!
//! 1. residual R = P(U + grad g(U)) - U; stop when ||R|| <= eps
//! 2. direction D = P(U + alpha grad g(U)) - U; with L the Cholesky factor
//!    of C + shift(U) and theta the smallest eigenvalue of
//!    L^-1 shift(D) L^-T, cap the step at nu = 1 if theta >= 0, else
//!    nu = min(1, -tau/theta), which keeps every trial point inside the
//!    positive definite cone; then backtrack sigma in {1, beta, beta^2, ...}
//!    until g(U + sigma nu D) >= min of the last M accepted values
//!    + gamma sigma nu <grad g(U), D>
//! 3. step, and set the next alpha from the Barzilai-Borwein ratio
//!    -||dU||^2 / <dU, dgrad>, clamped to [alpha_min, alpha_max]
//!    (alpha_max when the curvature sign is wrong).
//!
//! The same driver also powers the baseline solver in [`crate::naive`]; the
//! two differ only in how the third dual block is represented and projected.

use crate::model::{
    apply_a, dual_grad_from_x, dual_shift, dual_value, primal_objective, rel_gap, DualPoint,
    ProblemData,
};
use crate::projection::project_m;
use crate::symmat::SymMat;
use std::time::Instant;
use thiserror::Error;

/// Tuning knobs. Defaults follow the reference configuration; `eps` is the
/// residual threshold and `paper_mode` marks a run driven to machine
/// precision (eps = 1e-16), where stalling near the optimum is expected and
/// judged by the final gap instead.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sufficient-increase coefficient of the line search.
    pub gamma: f64,
    /// Positive-definiteness margin of the feasibility step cap, in (0, 1).
    pub tau: f64,
    /// Backtracking ratio, in (0, 1).
    pub beta: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Non-monotone reference window: the line search compares against the
    /// minimum of the last `window` accepted objective values.
    pub window: usize,
    /// Residual stopping threshold.
    pub eps: f64,
    pub max_iter: usize,
    pub paper_mode: bool,
    /// Record invariant violations in the report (testing aid).
    pub validate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 1e-3,
            tau: 0.5,
            beta: 0.5,
            alpha_min: 1e-8,
            alpha_max: 1e8,
            window: 5,
            eps: 1e-7,
            max_iter: 5000,
            paper_mode: false,
            validate: false,
        }
    }
}

impl SolverConfig {
    /// Machine-precision configuration: eps = 1e-16, max_iter = 5000.
    pub fn paper() -> Self {
        SolverConfig { eps: 1e-16, paper_mode: true, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// ||R|| fell below eps: converged.
    ResidualBelowEps,
    /// Iteration budget exhausted.
    MaxIter,
    /// No acceptable step length remained (only seen when eps asks for more
    /// accuracy than double precision can certify).
    LineSearchStall,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ResidualBelowEps => "residual_below_eps",
            Termination::MaxIter => "max_iter",
            Termination::LineSearchStall => "line_search_stall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SolverError {
    /// C + shift(U0) is not positive definite.
    #[error("infeasible start: C + shift(U0) is not positive definite")]
    InfeasibleStart,
    /// Baseline refused: materializing the pair-difference matrix needs
    /// O(n^4) memory.
    #[error("problem too large for the baseline solver (n = {n} > {max})")]
    TooLarge { n: usize, max: usize },
}

/// One row per iterate: objective, residual norm, accepted step sigma*nu
/// (0 on the final row), the alpha used for the direction, and elapsed wall
/// time when the row was recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub g: f64,
    pub rnorm: f64,
    pub step: f64,
    pub alpha: f64,
    pub seconds: f64,
}

/// Solve outcome. `trace.len() == iterations + 1` always holds: one row per
/// iterate including the last.
#[derive(Debug, Clone)]
pub struct SolveReport<P> {
    pub point: P,
    pub x: SymMat,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRow>,
    /// ||A(X) - b|| at the final iterate.
    pub constraint_residual: f64,
    pub wall_seconds: f64,
    /// Smallest accepted sigma*nu (infinity if no step was taken).
    pub min_step: f64,
    /// Invariant violations observed when `validate` was on.
    pub violations: Vec<String>,
}

/// Feasibility step cap: 1 when the direction keeps the cone, otherwise the
/// largest multiple bounded by the margin tau.
pub fn nu_from_theta(theta: f64, tau: f64) -> f64 {
    if theta >= 0.0 {
        1.0
    } else {
        (-tau / theta).min(1.0)
    }
}

/// Barzilai-Borwein step from ||dU||^2 and p = <dU, dgrad>: alpha_max when
/// p >= 0 (no usable curvature), else -||dU||^2 / p clamped to the bounds.
pub fn bb_step(du_sq: f64, p: f64, cfg: &SolverConfig) -> f64 {
    if p >= 0.0 {
        cfg.alpha_max
    } else {
        (-du_sq / p).clamp(cfg.alpha_min, cfg.alpha_max)
    }
}

/// The abstraction both solvers instantiate: a dual space is a point type
/// plus the maps the driver needs. `shift` must be linear.
pub(crate) trait DualSpace {
    type Point: Clone;

    fn project(&self, p: &Self::Point) -> Self::Point;
    fn shift(&self, p: &Self::Point) -> SymMat;
    fn gradient(&self, x: &SymMat) -> Self::Point;
    /// b'y of the point.
    fn linear_term(&self, p: &Self::Point) -> f64;
    fn inner(&self, a: &Self::Point, b: &Self::Point) -> f64;
    fn add_scaled(&self, a: &Self::Point, t: f64, b: &Self::Point) -> Self::Point;
    fn sub(&self, a: &Self::Point, b: &Self::Point) -> Self::Point;
    /// Push descriptions of feasible-set violations of p, if any.
    fn membership_violations(&self, p: &Self::Point, out: &mut Vec<String>);
}

struct State<P> {
    u: P,
    /// C + shift(u)
    k_mat: SymMat,
    l: crate::symmat::LowerTri,
    g: f64,
    x: SymMat,
    grad: P,
}

pub(crate) fn run_driver<S: DualSpace>(
    space: &S,
    pd: &ProblemData,
    cfg: &SolverConfig,
    u0: S::Point,
) -> Result<SolveReport<S::Point>, SolverError> {
    assert!(cfg.window >= 1, "window must be at least 1");
    assert!(cfg.beta > 0.0 && cfg.beta < 1.0, "beta must be in (0,1)");
    let clock = Instant::now();

    let eval = |u: S::Point| -> Option<State<S::Point>> {
        let mut k_mat = pd.c.clone();
        k_mat.axpy(1.0, &space.shift(&u));
        let l = k_mat.cholesky().ok()?;
        let g = dual_value(space.linear_term(&u), l.logdet(), pd);
        let mut x = l.inverse_spd();
        x.scale(pd.mu);
        let grad = space.gradient(&x);
        Some(State { u, k_mat, l, g, x, grad })
    };

    let mut st = eval(space.project(&u0)).ok_or(SolverError::InfeasibleStart)?;
    let g0 = st.g;
    let mut alpha = 1.0_f64;
    let mut window: std::collections::VecDeque<f64> = std::collections::VecDeque::new();
    window.push_back(st.g);
    let mut wmin_hist: Vec<f64> = Vec::new();
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut violations: Vec<String> = Vec::new();
    let mut min_step = f64::INFINITY;
    let mut k = 0usize;

    let termination = loop {
        let r = space.sub(&space.project(&space.add_scaled(&st.u, 1.0, &st.grad)), &st.u);
        let rnorm = space.inner(&r, &r).sqrt();
        trace.push(TraceRow {
            k,
            g: st.g,
            rnorm,
            step: 0.0,
            alpha,
            seconds: clock.elapsed().as_secs_f64(),
        });
        if rnorm <= cfg.eps {
            break Termination::ResidualBelowEps;
        }
        if k >= cfg.max_iter {
            break Termination::MaxIter;
        }

        let d = space.sub(&space.project(&space.add_scaled(&st.u, alpha, &st.grad)), &st.u);
        let dnorm = space.inner(&d, &d).sqrt();
        let gd = space.inner(&st.grad, &d);
        if cfg.validate && rnorm > cfg.alpha_max.max(1.0) * dnorm * (1.0 + 1e-9) {
            violations.push(format!("iter {k}: residual {rnorm} exceeds scaled direction {dnorm}"));
        }
        if dnorm == 0.0 || gd <= 0.0 {
            // Ascent is exhausted to rounding; decide by the residual.
            break if rnorm <= 10.0 * cfg.eps {
                Termination::ResidualBelowEps
            } else {
                Termination::LineSearchStall
            };
        }

        let bd = space.shift(&d);
        let theta = st.l.whiten(&bd).min_eigenvalue();
        let nu = nu_from_theta(theta, cfg.tau);

        let gmin = window.iter().cloned().fold(f64::INFINITY, f64::min);
        if cfg.validate {
            wmin_hist.push(gmin);
            if k >= cfg.window {
                let prev = wmin_hist[k - cfg.window];
                if gmin < prev - 1e-9 * (1.0 + prev.abs()) {
                    violations.push(format!("iter {k}: window minimum decreased {prev} -> {gmin}"));
                }
            }
        }

        match line_search(space, pd, cfg, &st, &bd, &d, nu, gd, gmin) {
            Ok((sigma, unew, knew, lnew, gnew)) => {
                let step = sigma * nu;
                min_step = min_step.min(step);
                trace.last_mut().unwrap().step = step;

                let mut xnew = lnew.inverse_spd();
                xnew.scale(pd.mu);
                let gradnew = space.gradient(&xnew);

                let du = space.sub(&unew, &st.u);
                let dgrad = space.sub(&gradnew, &st.grad);
                let p = space.inner(&du, &dgrad);
                let du_sq = space.inner(&du, &du);
                let alpha_next = bb_step(du_sq, p, cfg);

                if cfg.validate {
                    if !(step > 0.0) {
                        violations.push(format!("iter {k}: nonpositive step {step}"));
                    }
                    if gnew < gmin + cfg.gamma * step * gd {
                        violations.push(format!("iter {k}: accepted step violates line search"));
                    }
                    if gnew < g0 - 1e-9 * (1.0 + g0.abs()) {
                        violations.push(format!("iter {k}: left the level set: {gnew} < {g0}"));
                    }
                    space.membership_violations(&unew, &mut violations);
                }

                st = State { u: unew, k_mat: knew, l: lnew, g: gnew, x: xnew, grad: gradnew };
                alpha = alpha_next;
                window.push_back(st.g);
                if window.len() > cfg.window {
                    window.pop_front();
                }
                k += 1;
            }
            Err(_) => break Termination::LineSearchStall,
        }
    };

    let primal = primal_objective(&st.x, pd).expect("recovered X is positive definite");
    let dual = st.g;
    let ax = apply_a(&st.x, &pd.constraints);
    let constraint_residual = ax
        .iter()
        .zip(pd.constraints.rhs())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();

    Ok(SolveReport {
        point: st.u,
        x: st.x,
        primal,
        dual,
        gap: rel_gap(primal, dual),
        iterations: k,
        termination,
        trace,
        constraint_residual,
        wall_seconds: clock.elapsed().as_secs_f64(),
        min_step,
        violations,
    })
}

/// Sigma underflowed: no acceptable step.
struct Stall;

/// Backtrack sigma through {1, beta, beta^2, ...} until the non-monotone
/// sufficient increase holds. Trial matrices reuse C + shift(U) and
/// shift(D): each trial costs one axpy and one Cholesky. A trial whose
/// Cholesky fails (rounding at the cone boundary) counts as rejected.
#[allow(clippy::too_many_arguments)]
fn line_search<S: DualSpace>(
    space: &S,
    pd: &ProblemData,
    cfg: &SolverConfig,
    st: &State<S::Point>,
    bd: &SymMat,
    d: &S::Point,
    nu: f64,
    gd: f64,
    gmin: f64,
) -> Result<(f64, S::Point, SymMat, crate::symmat::LowerTri, f64), Stall> {
    let mut sigma = 1.0_f64;
    loop {
        let t = sigma * nu;
        let mut trial_k = st.k_mat.clone();
        trial_k.axpy(t, bd);
        if let Ok(trial_l) = trial_k.cholesky() {
            let trial_u = space.add_scaled(&st.u, t, d);
            let trial_g = dual_value(space.linear_term(&trial_u), trial_l.logdet(), pd);
            if trial_g >= gmin + cfg.gamma * t * gd {
                return Ok((sigma, trial_u, trial_k, trial_l, trial_g));
            }
        }
        sigma *= cfg.beta;
        if sigma < 1e-14 {
            return Err(Stall);
        }
    }
}

struct ProductSpace<'a> {
    pd: &'a ProblemData,
}

impl DualSpace for ProductSpace<'_> {
    type Point = DualPoint;

    fn project(&self, p: &DualPoint) -> DualPoint {
        project_m(p, self.pd.rho, self.pd.lambda)
    }

    fn shift(&self, p: &DualPoint) -> SymMat {
        dual_shift(p, &self.pd.constraints)
    }

    fn gradient(&self, x: &SymMat) -> DualPoint {
        dual_grad_from_x(x, self.pd)
    }

    fn linear_term(&self, p: &DualPoint) -> f64 {
        self.pd.constraints.rhs().iter().zip(&p.y).map(|(a, b)| a * b).sum()
    }

    fn inner(&self, a: &DualPoint, b: &DualPoint) -> f64 {
        a.inner(b)
    }

    fn add_scaled(&self, a: &DualPoint, t: f64, b: &DualPoint) -> DualPoint {
        a.add_scaled(t, b)
    }

    fn sub(&self, a: &DualPoint, b: &DualPoint) -> DualPoint {
        a.sub(b)
    }

    fn membership_violations(&self, p: &DualPoint, out: &mut Vec<String>) {
        let n = p.w.n();
        for i in 0..n {
            if p.w.get(i, i) != 0.0 {
                out.push(format!("W diagonal nonzero at {i}"));
            }
            if p.s.get(i, i) != 0.0 {
                out.push(format!("S diagonal nonzero at {i}"));
            }
            for j in i + 1..n {
                if p.w.get(i, j).abs() > self.pd.rho * (1.0 + 1e-12) {
                    out.push(format!("W out of box at ({i},{j}): {}", p.w.get(i, j)));
                }
            }
        }
    }
}

/// Solve from the zero start.
pub fn solve(pd: &ProblemData, cfg: &SolverConfig) -> Result<SolveReport<DualPoint>, SolverError> {
    solve_from(pd, cfg, DualPoint::zeros(pd.n(), pd.constraints.len()))
}

/// Solve from a caller-supplied start (projected before use).
pub fn solve_from(
    pd: &ProblemData,
    cfg: &SolverConfig,
    u0: DualPoint,
) -> Result<SolveReport<DualPoint>, SolverError> {
    run_driver(&ProductSpace { pd }, pd, cfg, u0)
}

/// Residual R = P(U + grad g(U)) - U and its norm, recomputed standalone
/// (the solver computes the same thing inline each iteration).
pub fn residual(
    u: &DualPoint,
    pd: &ProblemData,
) -> Result<(DualPoint, f64), crate::symmat::NotPositiveDefinite> {
    let g = crate::model::dual_grad(u, pd)?;
    let r = project_m(&u.add_scaled(1.0, &g), pd.rho, pd.lambda).sub(u);
    let norm = r.norm();
    Ok((r, norm))
}
