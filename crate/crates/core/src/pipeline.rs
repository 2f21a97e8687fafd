//! End-to-end construction of a pair `D_μ, X_μ` with `[D_μ, X_μ] ≈ 1`, the
//! product-versus-error check, and parameter sweeps.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::Letter::{U, V};
use crate::block::{self, Block, BlockMatrix};
use crate::error::{Error, Result};
use crate::operator::CuntzOperator;
use crate::solver::{self, BTuple, SolveDiagnostics, SolverConfig};
use crate::trunc::{NormBound, PowerConfig, TruncatedOperator};

/// `½ ln(1/ε)`, the smallest possible `‖D‖‖X‖` when `‖[D,X] - 1‖ ≤ ε`.
pub fn popa_lower_bound(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    Ok(0.5 * (1.0 / epsilon).ln())
}

/// The bound is vacuous for `ε ≥ 1`.
fn popa_lower_clamped(epsilon: f64) -> f64 {
    if epsilon >= 1.0 {
        0.0
    } else {
        popa_lower_bound(epsilon).unwrap_or(f64::INFINITY)
    }
}

/// How the error at a given `n` is predicted when picking parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ErrorModel {
    /// `μ^{n-1} (2B + δB + 2δB²)` with `B = 16√2 n³`, built from the
    /// worst-case bound on every `‖b_i‖`.
    APriori,
    /// Measured `(n, error)` pairs.
    Table(Vec<(usize, f64)>),
}

impl ErrorModel {
    pub fn predict(&self, n: usize, mu: f64) -> Option<f64> {
        match self {
            ErrorModel::APriori => {
                let b = solver::b_bound(n);
                let d = solver::default_delta(n);
                Some(mu.powi(n as i32 - 1) * (2.0 * b + d * b + 2.0 * d * b * b))
            }
            ErrorModel::Table(rows) => rows.iter().find(|(m, _)| *m == n).map(|(_, e)| *e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub delta: f64,
    pub mu: f64,
}

/// Largest `n` searched by the a-priori model.
const APRIORI_N_LIMIT: usize = 400;

/// Smallest `n ≥ 2` whose predicted error is at most `ε`, with `μ = 1/2`
/// and `δ = 1/(2000 n⁵)`.
pub fn choose_params(epsilon: f64, model: &ErrorModel) -> Result<Params> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    let mu = 0.5;
    let limit = match model {
        ErrorModel::APriori => APRIORI_N_LIMIT,
        ErrorModel::Table(rows) => rows.iter().map(|r| r.0).max().unwrap_or(0),
    };
    (2..=limit)
        .find(|&n| model.predict(n, mu).is_some_and(|e| e <= epsilon))
        .map(|n| Params { n, delta: solver::default_delta(n), mu })
        .ok_or_else(|| Error::invalid(format!("no n up to {limit} reaches epsilon = {epsilon} under the model")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub trunc_dim: usize,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub seed: u64,
    pub mu: f64,
    /// Largest `n` tried when searching for a target ε.
    pub n_cap: usize,
    pub compare_half: bool,
    pub record_timing: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let s = SolverConfig::for_n(2);
        PipelineConfig {
            trunc_dim: s.trunc_dim,
            inner_tol: s.inner_tol,
            outer_tol: s.outer_tol,
            max_inner: s.max_inner,
            max_outer: s.max_outer,
            seed: 0,
            mu: 0.5,
            n_cap: 8,
            compare_half: false,
            record_timing: false,
        }
    }
}

impl PipelineConfig {
    pub fn solver_config(&self, n: usize) -> SolverConfig {
        SolverConfig {
            n,
            delta: solver::default_delta(n),
            inner_tol: self.inner_tol,
            outer_tol: self.outer_tol,
            max_inner: self.max_inner,
            max_outer: self.max_outer,
            trunc_dim: self.trunc_dim,
            seed: self.seed,
            compare_half: self.compare_half,
        }
    }

    fn power(&self) -> PowerConfig {
        PowerConfig::solver_grade(self.seed)
    }
}

/// Norms and errors of one scaled pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub mu: f64,
    pub norm_d: NormBound,
    pub norm_x: NormBound,
    /// `‖D_μ‖ ‖X_μ‖` from the two estimates.
    pub product: f64,
    /// `[D_μ, X_μ] - 1` restricted to the first `N/2` coordinates of every block.
    pub error_direct: NormBound,
    /// `[D_μ, X_μ] - 1` on the whole truncated space.
    pub error_direct_global: NormBound,
    /// `μ^{n-1} ‖[v,b_1] + δ b_2 + δ b_1 [u,b_n]‖`, entry estimated globally.
    pub error_entry_bound: f64,
    /// The same entry measured on the first `N/2` columns.
    pub error_entry_window: f64,
    /// `μ^{n-1}` times the entry's Schur bound; certificate grade.
    pub error_entry_upper: f64,
    /// Largest entry modulus among blocks of `[D_μ, X_μ] - 1` outside the last column.
    pub off_column_max: f64,
    /// Largest windowed norm among the last-column blocks below the top.
    pub column_residual_max: f64,
    /// Largest entry difference between block `(1, n)` and `μ^{n-1}` times the entry.
    pub entry_consistency: f64,
}

impl Measurement {
    /// `max(error_direct, error_entry_bound)`.
    pub fn epsilon_achieved(&self) -> f64 {
        self.error_direct.lower_estimate.max(self.error_entry_bound)
    }
}

/// Builds `D_μ, X_μ` from a solved tuple and measures them.
pub fn measure_pair(b: &BTuple<TruncatedOperator>, delta: f64, mu: f64, pc: &PowerConfig) -> Result<Measurement> {
    let n = b.n();
    let dim = b.entries()[0].dim();
    let window = dim / 2;
    let scale = mu.powi(n as i32 - 1);
    let d = Complex64::new(delta, 0.0);

    let b1 = b.get(1).unwrap();
    let top = b1
        .gen_commutator(V)
        .add(&b.get(2).unwrap().scale(d))
        .add(&b1.mul(&b.get(n).unwrap().gen_commutator(U)).scale(d));
    let top_global = top.op_norm_estimate(pc).lower_estimate;
    let top_window = top.restrict_cols(window).op_norm_estimate(pc).lower_estimate;
    let top_upper = top.schur_bound();

    let (dm, xm) = {
        let x = block::build_x(b.entries(), delta, dim)?;
        let dd = block::build_d_cuntz(b.entries(), delta, dim)?;
        block::conjugate_scale(&dd, &x, mu)?
    };
    let norm_d = block::block_norm_estimate(&dm, pc);
    let norm_x = block::block_norm_estimate(&xm, pc);

    let comm = block::commutator(&dm, &xm)?.sub(&BlockMatrix::identity(n, dim))?;
    let error_direct = block::block_norm_estimate_windowed(&comm, window, pc);
    let error_direct_global = block::block_norm_estimate(&comm, pc);
    let mut off_column_max = 0.0f64;
    for i in 1..=n {
        for j in 1..n {
            off_column_max = off_column_max.max(match comm.get(i, j) {
                Block::Zero => 0.0,
                Block::Scalar(c) => c.norm(),
                Block::Op(e) => e.max_abs(),
            });
        }
    }
    let column_residual_max = (2..=n)
        .map(|i| comm.expanded(i, n).restrict_cols(window).op_norm_estimate(pc).lower_estimate)
        .fold(0.0, f64::max);
    let entry_consistency = comm.expanded(1, n).sub(&top.scale(Complex64::new(scale, 0.0))).max_abs();

    Ok(Measurement {
        mu,
        product: norm_d.lower_estimate * norm_x.lower_estimate,
        norm_d,
        norm_x,
        error_direct,
        error_direct_global,
        error_entry_bound: scale * top_global,
        error_entry_window: scale * top_window,
        error_entry_upper: scale * top_upper,
        off_column_max,
        column_residual_max,
        entry_consistency,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub epsilon_target: Option<f64>,
    pub n: usize,
    pub delta: f64,
    pub mu: f64,
    pub trunc_dim: usize,
    pub norm_d: NormBound,
    pub norm_x: NormBound,
    pub product: f64,
    pub error_direct: NormBound,
    pub error_direct_global: NormBound,
    pub error_entry_bound: f64,
    pub error_entry_window: f64,
    pub error_entry_upper: f64,
    pub off_column_max: f64,
    pub column_residual_max: f64,
    pub entry_consistency: f64,
    pub epsilon_achieved: f64,
    pub popa_lower: f64,
    pub popa_satisfied: bool,
    pub contraction_condition: bool,
    /// Whether `epsilon_achieved ≤ epsilon_target`, when a target was set.
    pub target_met: Option<bool>,
    pub runtime_ms: Option<u64>,
    pub solver: SolveDiagnostics,
}

impl ConstructionReport {
    fn assemble(m: Measurement, diag: SolveDiagnostics, target: Option<f64>, runtime_ms: Option<u64>) -> Self {
        let eps = m.epsilon_achieved();
        let popa_lower = popa_lower_clamped(eps);
        ConstructionReport {
            epsilon_target: target,
            n: diag.n,
            delta: diag.delta,
            mu: m.mu,
            trunc_dim: diag.trunc_dim,
            norm_d: m.norm_d,
            norm_x: m.norm_x,
            product: m.product,
            error_direct: m.error_direct,
            error_direct_global: m.error_direct_global,
            error_entry_bound: m.error_entry_bound,
            error_entry_window: m.error_entry_window,
            error_entry_upper: m.error_entry_upper,
            off_column_max: m.off_column_max,
            column_residual_max: m.column_residual_max,
            entry_consistency: m.entry_consistency,
            epsilon_achieved: eps,
            popa_lower,
            popa_satisfied: m.product >= popa_lower,
            contraction_condition: diag.condition_value < 1.0,
            target_met: target.map(|t| eps <= t),
            runtime_ms,
            solver: diag,
        }
    }

    pub fn residual_max(&self) -> f64 {
        self.solver.residual_rows.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Solves at the given `n`, builds and measures the scaled pair.
pub fn construct_n(n: usize, cfg: &PipelineConfig) -> Result<ConstructionReport> {
    construct_inner(n, cfg, None)
}

fn construct_inner(n: usize, cfg: &PipelineConfig, target: Option<f64>) -> Result<ConstructionReport> {
    let start = Instant::now();
    let sol = solver::solve_b(&cfg.solver_config(n))?;
    let m = measure_pair(&sol.b, sol.diagnostics.delta, cfg.mu, &cfg.power())?;
    let runtime = cfg.record_timing.then(|| start.elapsed().as_millis() as u64);
    Ok(ConstructionReport::assemble(m, sol.diagnostics, target, runtime))
}

/// Increases `n` from 2 until the achieved error is at most `ε` or
/// `n_cap` is reached; the last report is returned either way.
pub fn construct_epsilon(epsilon: f64, cfg: &PipelineConfig) -> Result<ConstructionReport> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    let mut last = None;
    for n in 2..=cfg.n_cap.max(2) {
        let report = construct_inner(n, cfg, Some(epsilon))?;
        let met = report.target_met == Some(true);
        last = Some(report);
        if met {
            break;
        }
    }
    Ok(last.expect("at least one n is tried"))
}

/// Commutator of the ansatz with `b = 0`: the only nonzero block of
/// `[D_μ, X_μ] - 1` is `-n · 1` at `(n, n)`. Returns its direct norm.
pub fn zero_tuple_error(n: usize, mu: f64, dim: usize, pc: &PowerConfig) -> Result<(f64, BlockMatrix<TruncatedOperator>)> {
    let delta = solver::default_delta(n);
    let zeros = vec![TruncatedOperator::zeros(dim); n];
    let x = block::build_x(&zeros, delta, dim)?;
    let d = block::build_d_cuntz(&zeros, delta, dim)?;
    let (dm, xm) = block::conjugate_scale(&d, &x, mu)?;
    let comm = block::commutator(&dm, &xm)?.sub(&BlockMatrix::identity(n, dim))?;
    Ok((block::block_norm_estimate(&comm, pc).lower_estimate, comm))
}

/// Least-squares slope of `ys` against `xs`; `None` with fewer than two
/// distinct abscissae.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let k = xs.len().min(ys.len());
    if k < 2 {
        return None;
    }
    let mx = xs[..k].iter().sum::<f64>() / k as f64;
    let my = ys[..k].iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs[..k].iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs[..k].iter().zip(&ys[..k]).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn max_over_min(v: &[f64]) -> Option<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    (!v.is_empty() && min > 0.0).then(|| max / min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    pub report: Option<ConstructionReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    /// Slope of `ln(product)` against `ln ln(1/ε)` over rows with `ε < 1`.
    pub exponent: Option<f64>,
    /// `error_entry_bound / (n³ 2⁻ⁿ)` per successful row.
    pub error_ratios: Vec<f64>,
    /// `norm_D / n⁵` per successful row.
    pub norm_ratios: Vec<f64>,
    pub error_ratio_spread: Option<f64>,
    pub norm_ratio_spread: Option<f64>,
    pub norm_x_max: f64,
    pub all_popa_satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub summary: ScanSummary,
}

/// One construction per `n`; failures are recorded and the scan continues.
pub fn scan_n(ns: impl IntoIterator<Item = usize>, cfg: &PipelineConfig) -> ScanResult {
    let ns: Vec<usize> = ns.into_iter().collect();
    let rows: Vec<ScanRow> = ns
        .par_iter()
        .map(|&n| match construct_n(n, cfg) {
            Ok(r) => ScanRow { n, report: Some(r), error: None },
            Err(e) => ScanRow { n, report: None, error: Some(e.to_string()) },
        })
        .collect();
    let ok: Vec<&ConstructionReport> = rows.iter().filter_map(|r| r.report.as_ref()).collect();
    let error_ratios: Vec<f64> = ok
        .iter()
        .map(|r| r.error_entry_bound / ((r.n as f64).powi(3) * 0.5f64.powi(r.n as i32)))
        .collect();
    let norm_ratios: Vec<f64> = ok.iter().map(|r| r.norm_d.lower_estimate / (r.n as f64).powi(5)).collect();
    let fit: Vec<(f64, f64)> = ok
        .iter()
        .filter(|r| r.epsilon_achieved < 1.0 && r.product > 0.0)
        .map(|r| ((1.0 / r.epsilon_achieved).ln().ln(), r.product.ln()))
        .collect();
    let (fx, fy): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
    let summary = ScanSummary {
        exponent: fit_slope(&fx, &fy),
        error_ratio_spread: max_over_min(&error_ratios),
        norm_ratio_spread: max_over_min(&norm_ratios),
        error_ratios,
        norm_ratios,
        norm_x_max: ok.iter().map(|r| r.norm_x.lower_estimate).fold(0.0, f64::max),
        all_popa_satisfied: ok.iter().all(|r| r.popa_satisfied),
    };
    ScanResult { rows, summary }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub measurement: Measurement,
    pub epsilon_achieved: f64,
    pub product: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub n: usize,
    pub delta: f64,
    pub rows: Vec<SweepRow>,
    /// Slope of `ln(product)` against `ln(1/ε)`.
    pub slope: Option<f64>,
    pub solver: SolveDiagnostics,
}

/// Solves once at `n = 2` and measures the scaled pair for every `μ`.
pub fn bpp_sweep(mus: &[f64], cfg: &PipelineConfig) -> Result<SweepResult> {
    if let Some(bad) = mus.iter().find(|m| !(**m > 0.0 && **m <= 0.5)) {
        return Err(Error::invalid(format!("mu must lie in (0, 1/2], got {bad}")));
    }
    let sol = solver::solve_b(&cfg.solver_config(2))?;
    let delta = sol.diagnostics.delta;
    let pc = cfg.power();
    let rows: Vec<SweepRow> = mus
        .par_iter()
        .map(|&mu| {
            measure_pair(&sol.b, delta, mu, &pc).map(|m| SweepRow {
                mu,
                epsilon_achieved: m.epsilon_achieved(),
                product: m.product,
                measurement: m,
            })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.epsilon_achieved).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.product.ln()).collect();
    Ok(SweepResult { n: 2, delta, slope: fit_slope(&xs, &ys), rows, solver: sol.diagnostics })
}

pub const CSV_HEADER: [&str; 16] = [
    "epsilon_target",
    "n",
    "delta",
    "mu",
    "trunc_dim",
    "norm_D",
    "norm_X",
    "product",
    "error_direct",
    "error_entry_bound",
    "popa_lower",
    "popa_ok",
    "inner_iters",
    "outer_iters",
    "residual_max",
    "runtime_ms",
];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ConstructionReport {
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            opt(self.epsilon_target),
            self.n.to_string(),
            self.delta.to_string(),
            self.mu.to_string(),
            self.trunc_dim.to_string(),
            self.norm_d.lower_estimate.to_string(),
            self.norm_x.lower_estimate.to_string(),
            self.product.to_string(),
            self.error_direct.lower_estimate.to_string(),
            self.error_entry_bound.to_string(),
            self.popa_lower.to_string(),
            self.popa_satisfied.to_string(),
            self.solver.inner_iters.to_string(),
            self.solver.outer_iters.to_string(),
            self.residual_max().to_string(),
            opt(self.runtime_ms),
        ]
    }
}

/// Writes one row per successful report under the fixed header.
pub fn write_csv<'a>(out: impl Write, reports: impl IntoIterator<Item = &'a ConstructionReport>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> PipelineConfig {
        PipelineConfig { trunc_dim: 64, ..PipelineConfig::default() }
    }

    #[test]
    fn popa_values() {
        assert!((popa_lower_bound((-2.0f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(popa_lower_bound(1.0).unwrap(), 0.0);
        assert!((popa_lower_bound((-10.0f64).exp()).unwrap() - 5.0).abs() < 1e-14);
        assert!(popa_lower_bound(0.0).is_err());
        assert!(popa_lower_bound(1.5).is_err());
    }

    #[test]
    fn params() {
        let table = ErrorModel::Table(vec![(2, 1.0), (3, 0.6), (4, 0.3), (5, 0.1)]);
        let p = choose_params(0.5, &table).unwrap();
        assert_eq!((p.n, p.mu), (4, 0.5));
        assert_eq!(p.delta, 1.0 / (2000.0 * 1024.0));
        assert!(choose_params(0.01, &table).is_err());
        assert!(choose_params(0.0, &table).is_err());
        assert!(choose_params(0.7, &table).is_err());
        let p = choose_params(0.5, &ErrorModel::APriori).unwrap();
        assert!(ErrorModel::APriori.predict(p.n, 0.5).unwrap() <= 0.5);
        assert!(ErrorModel::APriori.predict(p.n - 1, 0.5).unwrap() > 0.5);
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0];
        assert!((fit_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_slope(&[1.0], &[1.0]).is_none());
        assert!(fit_slope(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn zero_tuple_smoke() {
        let pc = PowerConfig::identity_grade(0);
        for n in [2, 3] {
            let (err, comm) = zero_tuple_error(n, 0.5, 32, &pc).unwrap();
            assert!((err - n as f64).abs() < 1e-9);
            for i in 1..=n {
                for j in 1..=n {
                    let m = comm.expanded(i, j).max_abs();
                    if (i, j) == (n, n) {
                        assert!((m - n as f64).abs() < 1e-9);
                    } else {
                        assert!(m < 1e-9, "({i},{j}) = {m}");
                    }
                }
            }
        }
    }

    #[test]
    fn construct_small() {
        let r = construct_n(2, &small_cfg()).unwrap();
        assert!(r.popa_satisfied);
        assert!(r.off_column_max < 1e-9);
        assert!(r.entry_consistency < 1e-9);
        // b = (-2u*, -2v*) gives the entry -2vu* + O(δ), of norm 2
        assert!((r.error_entry_bound - 1.0).abs() < 1e-3);
        assert!(r.error_direct.lower_estimate <= r.error_entry_bound + 1e-6);
        let mut buf = Vec::new();
        write_csv(&mut buf, [&r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        assert!(text.lines().nth(1).unwrap().ends_with(','));
    }
}
