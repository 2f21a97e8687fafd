//! Command-line front end: `construct`, `scan`, `sweep`, `verify` and `norm`.
//!
//! Exit codes: 0 success, 1 I/O, 2 invalid flags, 3 parse error, 4 solver
//! failure, 5 property failure. `COMMFORGE_THREADS` caps the worker pool.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::expr;
use crate::pipeline::{self, PipelineConfig};
use crate::trunc::{materialize, PowerConfig};
use crate::verify::{self, TestConfig, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_PROPERTY: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "commforge", version, about = "Construct and measure operator pairs whose commutator is nearly the identity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for one n (or search n for a target epsilon) and emit the JSON report.
    Construct(ConstructArgs),
    /// One construction per n; CSV table plus fitted trends on stderr.
    Scan(ScanArgs),
    /// Solve at n = 2 and measure the pair for mu = 2^-k over a range of k.
    Sweep(SweepArgs),
    /// Run the randomized identity suites and print a JSON report.
    Verify(VerifyArgs),
    /// Estimate the norm of an algebra expression at two truncation sizes.
    Norm(NormArgs),
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    /// Truncation dimension (a power of two, at least 8).
    #[arg(long, default_value_t = 2048)]
    trunc_dim: usize,
    #[arg(long, default_value_t = 1e-8)]
    inner_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    outer_tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_inner: usize,
    #[arg(long, default_value_t = 200)]
    max_outer: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also solve at half the dimension and report the discrepancy.
    #[arg(long)]
    compare_half: bool,
    /// Fill in runtime_ms (makes output run-dependent).
    #[arg(long)]
    record_timing: bool,
}

impl SolveArgs {
    fn pipeline(&self, mu: f64) -> PipelineConfig {
        PipelineConfig {
            trunc_dim: self.trunc_dim,
            inner_tol: self.inner_tol,
            outer_tol: self.outer_tol,
            max_inner: self.max_inner,
            max_outer: self.max_outer,
            seed: self.seed,
            mu,
            compare_half: self.compare_half,
            record_timing: self.record_timing,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["epsilon", "n"]))]
struct ConstructArgs {
    /// Target error; n is increased from 2 until it is met.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Fixed tuple length.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// Largest n tried when searching for --epsilon.
    #[arg(long, default_value_t = 8)]
    n_cap: usize,
    #[command(flatten)]
    solve: SolveArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long, default_value_t = 5)]
    n_max: usize,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[command(flatten)]
    solve: SolveArgs,
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write the full scan (reports and summary) as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Smallest k in mu = 2^-k.
    #[arg(long, default_value_t = 1)]
    k_min: i32,
    /// Largest k in mu = 2^-k.
    #[arg(long, default_value_t = 6)]
    k_max: i32,
    #[command(flatten)]
    solve: SolveArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// comm-lemma, reduct, popa-induction, solver-identities, right-inverse,
    /// relations, trace-obstruction or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Matrix size for the algebraic suites.
    #[arg(long, default_value_t = 5)]
    dim: usize,
    /// Truncation size for the suites on the truncated model.
    #[arg(long, default_value_t = 256)]
    trunc_dim: usize,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NormArgs {
    /// Expression in u, v, i and decimals, e.g. "u + v" or "(u v*)* 2".
    #[arg(long)]
    expr: String,
    /// Smaller truncation size; the table also uses twice this.
    #[arg(long, default_value_t = 256)]
    trunc_dim: usize,
    /// Relative tolerance of the power iteration.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return e.exit_code();
    }
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Sizes the global pool from `COMMFORGE_THREADS`; only the first call in a
/// process can take effect.
fn configure_threads() -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("COMMFORGE_THREADS") {
        let k: usize = v
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("COMMFORGE_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(k);
    }
    // an already initialised pool is kept
    let _ = builder.build_global();
    Ok(())
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Construct(a) => construct(a, out, err),
        Command::Scan(a) => scan(a, out, err),
        Command::Sweep(a) => sweep(a, out, err),
        Command::Verify(a) => verify_cmd(a, out),
        Command::Norm(a) => norm(a, out),
    }
}

fn emit(path: Option<&PathBuf>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")?;
            f.flush()?;
        }
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn construct(a: ConstructArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut cfg = a.solve.pipeline(a.mu);
    cfg.n_cap = a.n_cap;
    let report = match (a.epsilon, a.n) {
        (Some(eps), _) => pipeline::construct_epsilon(eps, &cfg)?,
        (None, Some(n)) => pipeline::construct_n(n, &cfg)?,
        (None, None) => unreachable!("clap requires one of --epsilon and --n"),
    };
    emit(a.out.as_ref(), &report.to_json()?, out)?;
    writeln!(
        err,
        "n = {}, epsilon_achieved = {}, product = {}, popa_lower = {}, residual = {}",
        report.n,
        report.epsilon_achieved,
        report.product,
        report.popa_lower,
        report.residual_max()
    )?;
    if !report.solver.outer_converged {
        writeln!(err, "fixed-point iteration did not converge")?;
        return Ok(EXIT_SOLVER);
    }
    if !report.popa_satisfied || report.target_met == Some(false) {
        writeln!(err, "popa check or error target not met")?;
        return Ok(EXIT_PROPERTY);
    }
    Ok(EXIT_OK)
}

fn scan(a: ScanArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if a.n_min < 2 || a.n_min > a.n_max {
        return Err(Error::InvalidParameter(format!("need 2 <= n-min <= n-max, got {}..{}", a.n_min, a.n_max)));
    }
    let cfg = a.solve.pipeline(a.mu);
    let res = pipeline::scan_n(a.n_min..=a.n_max, &cfg);
    let reports: Vec<_> = res.rows.iter().filter_map(|r| r.report.as_ref()).collect();
    let mut buf = Vec::new();
    pipeline::write_csv(&mut buf, reports.iter().copied())?;
    match &a.csv {
        Some(p) => std::fs::write(p, &buf)?,
        None => out.write_all(&buf)?,
    }
    if let Some(p) = &a.json {
        std::fs::write(p, serde_json::to_string_pretty(&res)? + "\n")?;
    }
    let s = &res.summary;
    writeln!(err, "error_entry_bound / (n^3 2^-n): {:?}", s.error_ratios)?;
    writeln!(err, "norm_D / n^5: {:?}", s.norm_ratios)?;
    writeln!(err, "spreads (max/min): error {:?}, norm {:?}", s.error_ratio_spread, s.norm_ratio_spread)?;
    writeln!(err, "largest norm_X: {}", s.norm_x_max)?;
    writeln!(err, "fitted exponent of product vs ln(1/epsilon): {:?}", s.exponent)?;
    writeln!(err, "popa satisfied everywhere: {}", s.all_popa_satisfied)?;
    let mut code = EXIT_OK;
    for row in res.rows.iter().filter(|r| r.error.is_some()) {
        writeln!(err, "n = {}: {}", row.n, row.error.as_deref().unwrap_or_default())?;
        code = EXIT_SOLVER;
    }
    if code == EXIT_OK && !s.all_popa_satisfied {
        code = EXIT_PROPERTY;
    }
    Ok(code)
}

fn sweep(a: SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if a.k_min < 1 || a.k_min > a.k_max {
        return Err(Error::InvalidParameter(format!("need 1 <= k-min <= k-max, got {}..{}", a.k_min, a.k_max)));
    }
    let mus: Vec<f64> = (a.k_min..=a.k_max).map(|k| 0.5f64.powi(k)).collect();
    let res = pipeline::bpp_sweep(&mus, &a.solve.pipeline(0.5))?;
    emit(a.out.as_ref(), &serde_json::to_string_pretty(&res)?, out)?;
    writeln!(err, "slope of ln(product) vs ln(1/epsilon): {:?}", res.slope)?;
    Ok(EXIT_OK)
}

fn verify_cmd(a: VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let names: Vec<&str> = if a.suite == "all" {
        verify::SUITES.to_vec()
    } else if verify::SUITES.contains(&a.suite.as_str()) {
        vec![a.suite.as_str()]
    } else {
        return Err(Error::InvalidParameter(format!("unknown suite {:?}", a.suite)));
    };
    let mut reports: Vec<VerifyReport> = Vec::new();
    for name in names {
        let k = if verify::uses_truncation(name) { a.trunc_dim } else { a.dim };
        let mut cfg = TestConfig::new(k, a.n, a.trials, a.seed);
        cfg.tol = a.tol;
        reports.extend(verify::run_suite(name, &cfg)?);
    }
    emit(a.out.as_ref(), &serde_json::to_string_pretty(&reports)?, out)?;
    Ok(if reports.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_PROPERTY })
}

fn norm(a: NormArgs, out: &mut dyn Write) -> Result<i32> {
    let e = expr::parse(&a.expr)?;
    if a.trunc_dim < 2 {
        return Err(Error::InvalidParameter("trunc-dim must be at least 2".into()));
    }
    if !(a.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", a.tol)));
    }
    let x = e.eval();
    let pc = PowerConfig::new(a.tol, a.max_iter, a.seed);
    let rows: Vec<_> = [a.trunc_dim, 2 * a.trunc_dim]
        .into_iter()
        .map(|dim| (dim, materialize(&x, dim).op_norm_estimate(&pc)))
        .collect();
    let last = rows[rows.len() - 1].1;
    writeln!(out, "expr: {e}")?;
    writeln!(out, "lower_estimate: {}", last.lower_estimate)?;
    writeln!(out, "l1_upper: {}", x.l1_norm_bound())?;
    writeln!(out, "stabilization:")?;
    writeln!(out, "  {:>8}  {:>24}  {:>10}  {:>9}", "N", "estimate", "iterations", "converged")?;
    for (dim, b) in &rows {
        writeln!(out, "  {:>8}  {:>24}  {:>10}  {:>9}", dim, b.lower_estimate, b.iterations, b.converged())?;
    }
    writeln!(out, "change: {}", (rows[1].1.lower_estimate - rows[0].1.lower_estimate).abs())?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("commforge").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn norm_of_u_plus_v() {
        let (code, out, _) = call(&["norm", "--expr", "u + v", "--trunc-dim", "64"]);
        assert_eq!(code, 0);
        let est: f64 = out
            .lines()
            .find_map(|l| l.strip_prefix("lower_estimate: "))
            .unwrap()
            .parse()
            .unwrap();
        assert!((est - 2f64.sqrt()).abs() < 1e-6, "{out}");
        assert!(out.contains("l1_upper: 2\n"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["norm", "--expr", "u + (v"]).0, 3);
        assert_eq!(call(&["norm"]).0, 2);
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["construct", "--n", "2", "--epsilon", "0.1"]).0, 2);
        assert_eq!(call(&["construct", "--n", "1", "--trunc-dim", "64"]).0, 2);
        assert_eq!(call(&["scan", "--n-min", "4", "--n-max", "3"]).0, 2);
        assert_eq!(call(&["verify", "--suite", "nope"]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn verify_relations_passes() {
        let (code, out, _) = call(&["verify", "--suite", "relations", "--trunc-dim", "64"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("\"pass\": true"));
    }

    #[test]
    fn failing_property_gives_code_five() {
        // a tolerance of zero cannot be met by floating-point residuals
        let (code, _, _) = call(&["verify", "--suite", "comm-lemma", "--tol", "0", "--trials", "3"]);
        assert_eq!(code, 5);
    }

    #[test]
    fn construct_small_is_deterministic() {
        let args = ["construct", "--n", "2", "--trunc-dim", "64"];
        let (c1, o1, _) = call(&args);
        let (c2, o2, _) = call(&args);
        assert_eq!(c1, c2);
        assert_eq!(o1, o2);
        assert!(o1.contains("\"popa_satisfied\": true"));
    }
}
