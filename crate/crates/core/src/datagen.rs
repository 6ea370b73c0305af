//! Instance generation and dataset loading.
//!
//! Three instance families:
//! - synthetic: a sparse random precision matrix, a sample covariance drawn
//!   from the implied Gaussian, and equality constraints pinning banded
//!   entries that are zero in the truth;
//! - clustered: a block-structured precision matrix whose within-block
//!   entries share one value, so the pairwise penalty has structure to find;
//! - binary: a 0/1 table loaded from disk (or synthesized), turned into a
//!   shifted sample covariance.
//!
//! All randomness flows through a counter-based generator seeded explicitly,
//! so every artifact is reproducible byte for byte from its seed.

use crate::model::{Constraint, ConstraintMap, ProblemData};
use crate::symmat::SymMat;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use thiserror::Error;

/// Synthetic-family parameters. `new` fills the conventional values:
/// density 0.1, sample count 2n, mu 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    /// Constraint bandwidth: pairs (i,j) with j - i <= p are eligible.
    pub p: usize,
    pub density: f64,
    pub samples: usize,
    pub seed: u64,
    pub mu: f64,
}

impl SynthSpec {
    pub fn new(n: usize, p: usize, seed: u64) -> Self {
        SynthSpec { n, p, density: 0.1, samples: 2 * n, seed, mu: 1.0 }
    }
}

/// Clustered-family parameters. `new` fills rho 0.001, sample count 10n,
/// mu 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub n: usize,
    pub n_groups: usize,
    pub rho: f64,
    pub samples: usize,
    pub seed: u64,
    pub mu: f64,
}

impl ClusterSpec {
    pub fn new(n: usize, n_groups: usize, seed: u64) -> Self {
        ClusterSpec { n, n_groups, rho: 0.001, samples: 10 * n, seed, mu: 1.0 }
    }
}

/// Standard normal draws by the Box-Muller transform, carrying the spare
/// value across calls so no draw is wasted.
struct BoxMuller {
    spare: Option<f64>,
}

impl BoxMuller {
    fn new() -> Self {
        BoxMuller { spare: None }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // u1 in (0, 1] keeps the log finite
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }
}

/// Random sparse positive definite matrix: exactly round(density * nbar)
/// strict-upper positions hold U[-1,1] values, the rest are exact zeros,
/// and the diagonal is |lambda_min| + 1 so the smallest eigenvalue is >= 1.
pub fn gen_sparse_precision(n: usize, density: f64, rng: &mut ChaCha8Rng) -> SymMat {
    assert!((0.0..=1.0).contains(&density));
    let nbar = n * (n - 1) / 2;
    let target = (density * nbar as f64).round() as usize;
    // partial Fisher-Yates: the first `target` slots end up a uniform sample
    let mut slots: Vec<usize> = (0..nbar).collect();
    for a in 0..target {
        let b = rng.gen_range(a..nbar);
        slots.swap(a, b);
    }
    let idx = crate::pairmap::PairIndex::new(n);
    let mut m = SymMat::zeros(n);
    for &a in &slots[..target] {
        let (i, j) = idx.pair_at(a);
        m.set(i, j, rng.gen_range(-1.0..1.0));
    }
    let shift = m.min_eigenvalue().abs() + 1.0;
    for i in 0..n {
        m.set(i, i, shift);
    }
    m
}

/// Sample covariance (1/k) sum of x x' over k draws x ~ N(0, precision^-1).
pub fn sample_covariance(precision: &SymMat, k: usize, rng: &mut ChaCha8Rng) -> SymMat {
    assert!(k > 0);
    let n = precision.n();
    let sigma = precision.cholesky().expect("precision must be positive definite").inverse_spd();
    let g = sigma.cholesky().expect("covariance must be positive definite");
    let mut bm = BoxMuller::new();
    let mut acc = vec![0.0_f64; n * n];
    let mut z = vec![0.0_f64; n];
    let mut x = vec![0.0_f64; n];
    for _ in 0..k {
        for zi in z.iter_mut() {
            *zi = bm.next(rng);
        }
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..=i {
                s += g.get(i, j) * z[j];
            }
            x[i] = s;
        }
        for i in 0..n {
            for j in 0..=i {
                acc[i * n + j] += x[i] * x[j];
            }
        }
    }
    let kf = k as f64;
    SymMat::from_fn(n, |i, j| acc[i * n + j] / kf)
}

/// Equality constraints X_ij = 0 for every pair with j - i <= p whose entry
/// in `truth` is an exact zero.
pub fn build_omega_p(truth: &SymMat, p: usize) -> ConstraintMap {
    let n = truth.n();
    let mut items = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if j - i <= p && truth.get(i, j) == 0.0 {
                items.push(Constraint::Entry { i, j });
            }
        }
    }
    let m = items.len();
    ConstraintMap::new(n, items, vec![0.0; m]).expect("generated pairs are valid")
}

/// Synthetic instance: returns the problem data and the true precision
/// matrix. rho = 5/n, lambda = rho/nbar. The precision draw uses `seed`,
/// the sampling pass `seed + 1`.
pub fn gen_synthetic_instance(spec: &SynthSpec) -> (ProblemData, SymMat) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = gen_sparse_precision(spec.n, spec.density, &mut rng);
    let mut rng2 = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let c = sample_covariance(&truth, spec.samples, &mut rng2);
    assert!(c.cholesky().is_ok(), "sample covariance must be positive definite");
    let nbar = spec.n * (spec.n - 1) / 2;
    let rho = 5.0 / spec.n as f64;
    let lambda = rho / nbar as f64;
    let constraints = build_omega_p(&truth, spec.p);
    (ProblemData::new(c, spec.mu, rho, lambda, constraints), truth)
}

/// Group of each variable under contiguous blocks of near-equal size; the
/// first n mod g blocks are one larger.
pub fn cluster_groups(n: usize, g: usize) -> Vec<usize> {
    assert!(g >= 1 && g <= n);
    let base = n / g;
    let extra = n % g;
    let mut out = Vec::with_capacity(n);
    for block in 0..g {
        let size = base + usize::from(block < extra);
        out.extend(std::iter::repeat_n(block, size));
    }
    out
}

/// Clustered instance: the true precision has 0.5 on every within-block
/// off-diagonal entry, exact zeros across blocks, and a diagonal shift
/// making the smallest eigenvalue 1. Bandwidth p = floor(0.3 n),
/// lambda = rho/nbar.
pub fn gen_cluster_instance(spec: &ClusterSpec) -> (ProblemData, SymMat) {
    let n = spec.n;
    let groups = cluster_groups(n, spec.n_groups);
    let mut truth = SymMat::from_fn(n, |i, j| {
        if i != j && groups[i] == groups[j] {
            0.5
        } else {
            0.0
        }
    });
    let shift = truth.min_eigenvalue().abs() + 1.0;
    for i in 0..n {
        truth.set(i, i, shift);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let c = sample_covariance(&truth, spec.samples, &mut rng);
    assert!(c.cholesky().is_ok(), "sample covariance must be positive definite");
    let nbar = n * (n - 1) / 2;
    let lambda = spec.rho / nbar as f64;
    let p = (0.3 * n as f64).floor() as usize;
    let constraints = build_omega_p(&truth, p);
    (ProblemData::new(c, spec.mu, spec.rho, lambda, constraints), truth)
}

/// Synthesized 0/1 table: columns fall into five contiguous latent groups;
/// each row draws one bit per group and each cell copies its group bit,
/// flipped with probability 0.15.
pub fn gen_binary_table(rows: usize, cols: usize, seed: u64) -> Vec<Vec<u8>> {
    let groups = cluster_groups(cols, 5.min(cols));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_groups = groups.last().map_or(0, |g| g + 1);
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let latent: Vec<u8> = (0..n_groups).map(|_| rng.gen_range(0..2u8)).collect();
        let row = groups
            .iter()
            .map(|&g| {
                let flip = rng.gen::<f64>() < 0.15;
                latent[g] ^ u8::from(flip)
            })
            .collect();
        out.push(row);
    }
    out
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Load a 0/1 table (comma- or whitespace-separated, blank lines skipped)
/// and return the shifted covariance S + I/3, where S is the mean-centered
/// sample covariance with divisor = number of rows.
pub fn load_binary_dataset(path: impl AsRef<Path>) -> Result<SymMat, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        let mut row = Vec::with_capacity(cells.len());
        for cell in cells {
            let v: f64 = cell.parse().map_err(|_| DatasetError::Parse {
                line: lineno + 1,
                msg: format!("not a number: {cell:?}"),
            })?;
            if v != 0.0 && v != 1.0 {
                return Err(DatasetError::Parse {
                    line: lineno + 1,
                    msg: format!("expected 0 or 1, found {v}"),
                });
            }
            row.push(v);
        }
        if rows.is_empty() {
            width = row.len();
        } else if row.len() != width {
            return Err(DatasetError::Parse {
                line: lineno + 1,
                msg: format!("expected {width} columns, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() || width == 0 {
        return Err(DatasetError::Parse { line: 0, msg: "empty table".into() });
    }
    let r = rows.len() as f64;
    let mean: Vec<f64> = (0..width)
        .map(|j| rows.iter().map(|row| row[j]).sum::<f64>() / r)
        .collect();
    let mut acc = vec![0.0_f64; width * width];
    for row in &rows {
        for i in 0..width {
            let di = row[i] - mean[i];
            for j in 0..=i {
                acc[i * width + j] += di * (row[j] - mean[j]);
            }
        }
    }
    Ok(SymMat::from_fn(width, |i, j| {
        acc[i * width + j] / r + if i == j { 1.0 / 3.0 } else { 0.0 }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dspg::{solve, SolverConfig, Termination};
    use crate::testutil::rng;
    use std::io::Write;

    #[test]
    fn sparse_precision_density_and_pd() {
        for seed in 0..10 {
            let mut r = rng(seed);
            let m = gen_sparse_precision(50, 0.1, &mut r);
            let nbar = 50 * 49 / 2;
            let target = (0.1 * nbar as f64).round() as usize;
            let nonzero = (0..50)
                .flat_map(|i| (i + 1..50).map(move |j| (i, j)))
                .filter(|&(i, j)| m.get(i, j) != 0.0)
                .count();
            assert!(
                nonzero + 2 >= target && nonzero <= target,
                "seed {seed}: {nonzero} of {target} positions"
            );
            assert!(m.cholesky().is_ok(), "seed {seed}: not positive definite");
            assert!(m.min_eigenvalue() >= 0.99);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_synthetic_instance(&SynthSpec::new(12, 2, 99));
        let b = gen_synthetic_instance(&SynthSpec::new(12, 2, 99));
        assert_eq!(a.0.c.data(), b.0.c.data());
        assert_eq!(a.1.data(), b.1.data());
        assert_eq!(a.0.constraints.len(), b.0.constraints.len());
        let c = gen_synthetic_instance(&SynthSpec::new(12, 2, 100));
        assert_ne!(a.0.c.data(), c.0.c.data());
    }

    #[test]
    fn sample_covariance_lln() {
        // with many samples the estimate approaches the true covariance
        let mut r = rng(5);
        let prec = gen_sparse_precision(4, 0.5, &mut r);
        let sigma = prec.cholesky().unwrap().inverse_spd();
        let mut r2 = rng(6);
        let c = sample_covariance(&prec, 100_000, &mut r2);
        assert!(c.sub(&sigma).max_abs() <= 0.05, "off by {}", c.sub(&sigma).max_abs());
    }

    #[test]
    fn sample_covariance_is_positive_definite() {
        for seed in 0..5 {
            let mut r = rng(seed);
            let prec = gen_sparse_precision(10, 0.2, &mut r);
            let c = sample_covariance(&prec, 20, &mut r);
            assert!(c.cholesky().is_ok());
        }
    }

    #[test]
    fn omega_band_examples() {
        // nonzero only at (0,1): every banded pair except it is constrained
        let mut truth = SymMat::scaled_identity(4, 2.0);
        truth.set(0, 1, 0.8);
        let empty = build_omega_p(&truth, 0);
        assert_eq!(empty.len(), 0);
        let band = build_omega_p(&truth, 2);
        let got: Vec<(usize, usize)> = band
            .items()
            .iter()
            .map(|c| match c {
                Constraint::Entry { i, j } => (*i, *j),
                _ => panic!("expected entry constraints"),
            })
            .collect();
        assert_eq!(got, vec![(0, 2), (1, 2), (1, 3), (2, 3)]);
        assert!(band.rhs().iter().all(|&b| b == 0.0));
        let full = build_omega_p(&truth, 3);
        assert_eq!(full.len(), 5);
    }

    #[test]
    fn synthetic_parameters() {
        let (pd, truth) = gen_synthetic_instance(&SynthSpec::new(20, 3, 7));
        assert_eq!(pd.n(), 20);
        assert_eq!(pd.rho, 5.0 / 20.0);
        assert_eq!(pd.lambda, pd.rho / 190.0);
        assert_eq!(pd.mu, 1.0);
        assert!(truth.cholesky().is_ok());
        // every constrained pair is banded and zero in the truth
        for c in pd.constraints.items() {
            match c {
                Constraint::Entry { i, j } => {
                    assert!(j - i <= 3);
                    assert_eq!(truth.get(*i, *j), 0.0);
                }
                _ => panic!("expected entry constraints"),
            }
        }
    }

    #[test]
    fn cluster_groups_split() {
        assert_eq!(cluster_groups(10, 3), vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2]);
        assert_eq!(cluster_groups(6, 2), vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(cluster_groups(3, 3), vec![0, 1, 2]);
    }

    #[test]
    fn cluster_truth_structure() {
        let (pd, truth) = gen_cluster_instance(&ClusterSpec::new(9, 3, 1));
        let groups = cluster_groups(9, 3);
        for i in 0..9 {
            for j in i + 1..9 {
                if groups[i] == groups[j] {
                    assert_eq!(truth.get(i, j), 0.5);
                } else {
                    assert_eq!(truth.get(i, j), 0.0);
                }
            }
        }
        assert!(truth.min_eigenvalue() >= 0.99);
        assert_eq!(pd.rho, 0.001);
        assert_eq!(pd.lambda, 0.001 / 36.0);
        // bandwidth floor(0.3 * 9) = 2
        for c in pd.constraints.items() {
            match c {
                Constraint::Entry { i, j } => assert!(j - i <= 2),
                _ => panic!("expected entry constraints"),
            }
        }
    }

    #[test]
    fn generated_instances_solve() {
        let (pd, _) = gen_synthetic_instance(&SynthSpec::new(8, 2, 17));
        let rep = solve(&pd, &SolverConfig::default()).unwrap();
        assert_eq!(rep.termination, Termination::ResidualBelowEps);
        assert!(rep.gap <= 1e-6);
        let (pd2, _) = gen_cluster_instance(&ClusterSpec::new(9, 3, 17));
        let rep2 = solve(&pd2, &SolverConfig::default()).unwrap();
        assert_eq!(rep2.termination, Termination::ResidualBelowEps);
        assert!(rep2.gap <= 1e-6);
    }

    #[test]
    fn binary_table_shape_and_determinism() {
        let t = gen_binary_table(102, 33, 4);
        assert_eq!(t.len(), 102);
        assert!(t.iter().all(|row| row.len() == 33));
        assert!(t.iter().flatten().all(|&v| v <= 1));
        assert_eq!(t, gen_binary_table(102, 33, 4));
        assert_ne!(t, gen_binary_table(102, 33, 5));
        // the flip noise keeps both symbols in play
        let ones: usize = t.iter().flatten().map(|&v| v as usize).sum();
        assert!(ones > 1000 && ones < 2400, "ones = {ones}");
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loader_constant_table_gives_shifted_zero() {
        let f = write_temp("0,0,0\n0,0,0\n\n0,0,0\n");
        let c = load_binary_dataset(f.path()).unwrap();
        assert_eq!(c.n(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert_eq!(c.get(i, j), want);
            }
        }
    }

    #[test]
    fn loader_two_by_two_example() {
        let f = write_temp("0 1\n1 0\n");
        let c = load_binary_dataset(f.path()).unwrap();
        assert!((c.get(0, 0) - (0.25 + 1.0 / 3.0)).abs() <= 1e-15);
        assert!((c.get(1, 1) - (0.25 + 1.0 / 3.0)).abs() <= 1e-15);
        assert!((c.get(0, 1) - (-0.25)).abs() <= 1e-15);
    }

    #[test]
    fn loader_rejects_bad_input() {
        let ragged = write_temp("0,1\n0,1,1\n");
        match load_binary_dataset(ragged.path()) {
            Err(DatasetError::Parse { line: 2, .. }) => {}
            other => panic!("expected ragged-row error, got {other:?}"),
        }
        let nonbinary = write_temp("0,2\n");
        assert!(matches!(
            load_binary_dataset(nonbinary.path()),
            Err(DatasetError::Parse { line: 1, .. })
        ));
        let garbage = write_temp("0,x\n");
        assert!(matches!(
            load_binary_dataset(garbage.path()),
            Err(DatasetError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            load_binary_dataset("/nonexistent/definitely-missing.csv"),
            Err(DatasetError::Io(_))
        ));
        let empty = write_temp("\n\n");
        assert!(matches!(load_binary_dataset(empty.path()), Err(DatasetError::Parse { .. })));
    }

    #[test]
    fn loader_covariance_is_positive_definite_with_shift() {
        let t = gen_binary_table(40, 8, 3);
        let text: String = t
            .iter()
            .map(|row| {
                row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",") + "\n"
            })
            .collect();
        let f = write_temp(&text);
        let c = load_binary_dataset(f.path()).unwrap();
        assert_eq!(c.n(), 8);
        // centered covariance is positive semidefinite; the I/3 shift makes
        // the whole thing comfortably definite
        assert!(c.min_eigenvalue() >= 1.0 / 3.0 - 1e-12);
        assert!(c.cholesky().is_ok());
    }
}
