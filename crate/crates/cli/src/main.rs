//! Command-line front end: generate instances, solve them, compare the two
//! solvers, and post-process iteration traces.
//!
//! Instances travel as JSON (schema_version 1) carrying the covariance
//! lower triangle and zero-pinned entry constraints; traces are CSV with
//! header `k,g,rnorm,step,alpha,seconds`.
//!
//! Exit codes: 0 success (converged, or machine-precision mode ending with
//! a tiny gap), 1 solver disagreement in `compare`, 2 not converged or
//! problem too large for the baseline, 3 input/output or infeasibility
//! errors.

use clap::{Args, Parser, Subcommand};
use cluster_glasso::datagen::{
    gen_binary_table, gen_cluster_instance, gen_synthetic_instance, load_binary_dataset,
    ClusterSpec, SynthSpec,
};
use cluster_glasso::dspg::{solve, SolveReport, SolverConfig, Termination, TraceRow};
use cluster_glasso::model::{Constraint, ConstraintMap, ProblemData};
use cluster_glasso::naive::{solve_naive, MAX_NAIVE_N};
use cluster_glasso::symmat::SymMat;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cluster-glasso", version, about = "Sparse precision estimation with a pairwise clustering penalty")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance file (and, for binary, the data table).
    Gen {
        #[command(subcommand)]
        family: GenCmd,
    },
    /// Solve an instance and write a report and/or trace.
    Solve(SolveArgs),
    /// Run both solvers on one instance and check they agree.
    Compare(CompareArgs),
    /// Post-process a trace CSV (normalized objective error).
    Trace(TraceArgs),
}

#[derive(Subcommand)]
enum GenCmd {
    /// Sparse random precision, sampled covariance, banded zero constraints.
    Synth {
        #[arg(long)]
        n: usize,
        /// Constraint bandwidth (pairs with j - i <= p are eligible).
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        /// Sample count; defaults to 2n.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Block-structured precision with shared within-block values.
    Cluster {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        groups: usize,
        #[arg(long, default_value_t = 0.001)]
        rho: f64,
        /// Sample count; defaults to 10n.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// 0/1 table, either synthesized or loaded from disk.
    Binary {
        #[arg(long, default_value_t = 102)]
        rows: usize,
        #[arg(long, default_value_t = 33)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the synthesized table to this CSV path.
        #[arg(long)]
        write_data: Option<PathBuf>,
        /// Build from an existing table instead of synthesizing one.
        #[arg(long, conflicts_with_all = ["rows", "cols", "write_data"])]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Instance file to write (requires a data path to load back).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Machine-precision run: eps 1e-16, judged by the final gap.
    #[arg(long)]
    paper_mode: bool,
    /// Record invariant violations in the report.
    #[arg(long)]
    validate: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    instance: PathBuf,
    /// CSV with one row per solver: solver,iterations,seconds,gap.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    input: PathBuf,
    /// Emit k,e with e = |g_k - g_last| / |g_0 - g_last| instead of raw rows.
    #[arg(long)]
    normalize: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error("{path}: {msg}")]
    BadFile { path: String, msg: String },
    #[error(transparent)]
    Dataset(#[from] cluster_glasso::datagen::DatasetError),
    #[error(transparent)]
    Solver(#[from] cluster_glasso::dspg::SolverError),
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|err| CliError::Io { path: path.display().to_string(), err })
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|err| CliError::Io { path: path.display().to_string(), err })
}

/// On-disk instance. `c_lower` is the covariance lower triangle, row-major,
/// diagonal included; `constraints` are (i, j, rhs) entry pins with
/// 0-based i < j.
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    schema_version: u32,
    kind: String,
    n: usize,
    mu: f64,
    rho: f64,
    lambda: f64,
    seed: u64,
    c_lower: Vec<f64>,
    constraints: Vec<(usize, usize, f64)>,
}

impl InstanceFile {
    fn from_problem(kind: &str, seed: u64, pd: &ProblemData) -> Self {
        let constraints = pd
            .constraints
            .items()
            .iter()
            .zip(pd.constraints.rhs())
            .map(|(c, &b)| match c {
                Constraint::Entry { i, j } => (*i, *j, b),
                Constraint::General(_) => {
                    unreachable!("generators only emit entry constraints")
                }
            })
            .collect();
        InstanceFile {
            schema_version: 1,
            kind: kind.to_string(),
            n: pd.n(),
            mu: pd.mu,
            rho: pd.rho,
            lambda: pd.lambda,
            seed,
            c_lower: pd.c.to_lower(),
            constraints,
        }
    }

    fn into_problem(self, path: &Path) -> Result<(ProblemData, InstanceMeta), CliError> {
        let bad = |msg: String| CliError::BadFile { path: path.display().to_string(), msg };
        if self.schema_version != 1 {
            return Err(bad(format!("unsupported schema_version {}", self.schema_version)));
        }
        let want = self.n * (self.n + 1) / 2;
        if self.c_lower.len() != want {
            return Err(bad(format!(
                "c_lower has {} entries, expected {want}",
                self.c_lower.len()
            )));
        }
        let c = SymMat::from_lower(self.n, &self.c_lower);
        let items: Vec<Constraint> = self
            .constraints
            .iter()
            .map(|&(i, j, _)| Constraint::Entry { i, j })
            .collect();
        let rhs: Vec<f64> = self.constraints.iter().map(|&(_, _, b)| b).collect();
        let cmap = ConstraintMap::new(self.n, items, rhs).map_err(|e| bad(e.to_string()))?;
        let meta = InstanceMeta {
            n: self.n,
            m: cmap.len(),
            rho: self.rho,
            lambda: self.lambda,
            mu: self.mu,
            seed: self.seed,
            kind: self.kind,
        };
        Ok((ProblemData::new(c, self.mu, self.rho, self.lambda, cmap), meta))
    }
}

#[derive(Serialize, Clone)]
struct InstanceMeta {
    n: usize,
    m: usize,
    rho: f64,
    lambda: f64,
    mu: f64,
    seed: u64,
    kind: String,
}

#[derive(Serialize)]
struct ConfigOut {
    gamma: f64,
    tau: f64,
    beta: f64,
    alpha_min: f64,
    alpha_max: f64,
    window: usize,
    eps: f64,
    max_iter: usize,
    paper_mode: bool,
}

impl ConfigOut {
    fn from(cfg: &SolverConfig) -> Self {
        ConfigOut {
            gamma: cfg.gamma,
            tau: cfg.tau,
            beta: cfg.beta,
            alpha_min: cfg.alpha_min,
            alpha_max: cfg.alpha_max,
            window: cfg.window,
            eps: cfg.eps,
            max_iter: cfg.max_iter,
            paper_mode: cfg.paper_mode,
        }
    }
}

#[derive(Serialize)]
struct ResultOut {
    p: f64,
    d: f64,
    gap: f64,
    iterations: usize,
    termination: String,
    wall_seconds: f64,
    constraint_residual: f64,
    violations: Vec<String>,
}

#[derive(Serialize)]
struct ReportFile {
    schema_version: u32,
    instance: InstanceMeta,
    config: ConfigOut,
    result: ResultOut,
    trace_path: Option<String>,
}

fn load_instance(path: &Path) -> Result<(ProblemData, InstanceMeta), CliError> {
    let text = read_file(path)?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| CliError::BadFile {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    file.into_problem(path)
}

fn write_instance(path: &Path, kind: &str, seed: u64, pd: &ProblemData) -> Result<(), CliError> {
    let file = InstanceFile::from_problem(kind, seed, pd);
    let mut text = serde_json::to_string_pretty(&file).expect("instance serializes");
    text.push('\n');
    write_file(path, &text)
}

fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("k,g,rnorm,step,alpha,seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k, r.g, r.rnorm, r.step, r.alpha, r.seconds
        ));
    }
    out
}

fn build_config(
    paper_mode: bool,
    eps: Option<f64>,
    max_iter: Option<usize>,
    validate: bool,
) -> SolverConfig {
    let mut cfg = if paper_mode { SolverConfig::paper() } else { SolverConfig::default() };
    if let Some(e) = eps {
        cfg.eps = e;
    }
    if let Some(m) = max_iter {
        cfg.max_iter = m;
    }
    cfg.validate = validate;
    cfg
}

fn run_gen(family: GenCmd) -> Result<ExitCode, CliError> {
    match family {
        GenCmd::Synth { n, p, density, samples, seed, mu, out } => {
            let spec = SynthSpec {
                n,
                p,
                density,
                samples: samples.unwrap_or(2 * n),
                seed,
                mu,
            };
            let (pd, _) = gen_synthetic_instance(&spec);
            write_instance(&out, "synthetic", seed, &pd)?;
            println!("wrote {} (n={n}, m={})", out.display(), pd.constraints.len());
        }
        GenCmd::Cluster { n, groups, rho, samples, seed, mu, out } => {
            let spec = ClusterSpec {
                n,
                n_groups: groups,
                rho,
                samples: samples.unwrap_or(10 * n),
                seed,
                mu,
            };
            let (pd, _) = gen_cluster_instance(&spec);
            write_instance(&out, "cluster", seed, &pd)?;
            println!("wrote {} (n={n}, m={})", out.display(), pd.constraints.len());
        }
        GenCmd::Binary { rows, cols, seed, write_data, data, rho, mu, out } => {
            let table_path = if let Some(path) = data {
                path
            } else {
                let table = gen_binary_table(rows, cols, seed);
                let text: String = table
                    .iter()
                    .map(|row| {
                        row.iter().map(u8::to_string).collect::<Vec<_>>().join(",") + "\n"
                    })
                    .collect();
                let Some(path) = write_data else {
                    return Err(CliError::BadFile {
                        path: "--write-data".into(),
                        msg: "synthesized tables need --write-data (or pass --data)".into(),
                    });
                };
                write_file(&path, &text)?;
                println!("wrote {} ({rows}x{cols})", path.display());
                path
            };
            if let Some(out) = out {
                let c = load_binary_dataset(&table_path)?;
                let n = c.n();
                let lambda = 4.0 * rho / (n * (n - 1)) as f64;
                let pd = ProblemData::new(c, mu, rho, lambda, ConstraintMap::empty(n));
                write_instance(&out, "binary", seed, &pd)?;
                println!("wrote {} (n={n}, m=0)", out.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_solve(args: SolveArgs) -> Result<ExitCode, CliError> {
    let (pd, meta) = load_instance(&args.instance)?;
    let cfg = build_config(args.paper_mode, args.eps, args.max_iter, args.validate);
    let rep = solve(&pd, &cfg)?;
    if let Some(path) = &args.trace {
        write_file(path, &trace_csv(&rep.trace))?;
    }
    if let Some(path) = &args.report {
        let report = ReportFile {
            schema_version: 1,
            instance: meta,
            config: ConfigOut::from(&cfg),
            result: ResultOut {
                p: rep.primal,
                d: rep.dual,
                gap: rep.gap,
                iterations: rep.iterations,
                termination: rep.termination.as_str().to_string(),
                wall_seconds: rep.wall_seconds,
                constraint_residual: rep.constraint_residual,
                violations: rep.violations.clone(),
            },
            trace_path: args.trace.as_ref().map(|p| p.display().to_string()),
        };
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        write_file(path, &text)?;
    }
    println!(
        "termination={} iterations={} primal={} dual={} gap={:e} seconds={:.3}",
        rep.termination.as_str(),
        rep.iterations,
        rep.primal,
        rep.dual,
        rep.gap,
        rep.wall_seconds
    );
    let ok = match rep.termination {
        Termination::ResidualBelowEps => true,
        Termination::MaxIter | Termination::LineSearchStall => {
            cfg.paper_mode && rep.gap <= 1e-6
        }
    };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn compare_row<P>(name: &str, rep: &SolveReport<P>) -> String {
    format!("{name},{},{},{:e}\n", rep.iterations, rep.wall_seconds, rep.gap)
}

fn run_compare(args: CompareArgs) -> Result<ExitCode, CliError> {
    let (pd, _) = load_instance(&args.instance)?;
    if pd.n() > MAX_NAIVE_N {
        eprintln!(
            "compare: n = {} exceeds the baseline limit {MAX_NAIVE_N}; refusing",
            pd.n()
        );
        return Ok(ExitCode::from(2));
    }
    let cfg = build_config(false, args.eps, args.max_iter, false);
    let a = solve(&pd, &cfg)?;
    let b = solve_naive(&pd, &cfg)?;
    if let Some(path) = &args.out {
        let mut csv = String::from("solver,iterations,seconds,gap\n");
        csv.push_str(&compare_row("dspg", &a));
        csv.push_str(&compare_row("naive", &b));
        write_file(path, &csv)?;
    }
    let diff = (a.dual - b.dual).abs();
    let tol = 1e-6 * 1.0_f64.max(a.dual.abs());
    println!(
        "dspg: dual={} iterations={}; naive: dual={} iterations={}; |diff|={:e}",
        a.dual, a.iterations, b.dual, b.iterations, diff
    );
    if diff <= tol {
        println!("agreement: OK (tolerance {tol:e})");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("agreement FAILED: |{} - {}| = {diff:e} > {tol:e}", a.dual, b.dual);
        Ok(ExitCode::from(1))
    }
}

fn run_trace(args: TraceArgs) -> Result<ExitCode, CliError> {
    let text = read_file(&args.input)?;
    let bad = |msg: String| CliError::BadFile {
        path: args.input.display().to_string(),
        msg,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty trace".into()))?;
    if header.trim() != "k,g,rnorm,step,alpha,seconds" {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut ks: Vec<u64> = Vec::new();
    let mut gs: Vec<f64> = Vec::new();
    let mut raw: Vec<String> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(bad(format!("row {}: expected 6 fields", i + 2)));
        }
        let k: u64 = cells[0]
            .trim()
            .parse()
            .map_err(|_| bad(format!("row {}: bad k {:?}", i + 2, cells[0])))?;
        let g: f64 = cells[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("row {}: bad g {:?}", i + 2, cells[1])))?;
        ks.push(k);
        gs.push(g);
        raw.push(line.to_string());
    }
    if gs.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let output = if args.normalize {
        let last = *gs.last().unwrap();
        let denom = (gs[0] - last).abs();
        let mut out = String::from("k,e\n");
        for (k, g) in ks.iter().zip(&gs) {
            let e = if denom == 0.0 { 0.0 } else { (g - last).abs() / denom };
            out.push_str(&format!("{k},{e}\n"));
        }
        out
    } else {
        let mut out = String::from("k,g,rnorm,step,alpha,seconds\n");
        for line in &raw {
            out.push_str(line);
            out.push('\n');
        }
        out
    };
    match &args.out {
        Some(path) => write_file(path, &output)?,
        None => print!("{output}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen { family } => run_gen(family),
        Cmd::Solve(args) => run_solve(args),
        Cmd::Compare(args) => run_compare(args),
        Cmd::Trace(args) => run_trace(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
