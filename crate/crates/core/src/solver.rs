//! Solving the commutator system for the tuple `b`.
//!
//! With `T(b)_i = [v, b_i] + [u, b_{i-1}]` (rows `i = 2..n`), the system is
//! `T(b) = a + δ F(b) + δ G(b, b)` where `a = (0, …, 0, n)`,
//! `F(b)_i = -i b_{i+1}` and `G(b, b')_i = -b_i [u, b'_n]`. `T` has the right
//! inverse `R = L (1 - E)^{-1}`, computed by a Neumann series, and the
//! ansatz `b = R c` turns the system into a contraction for `c`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::algebra::Letter::{U, V};
use crate::error::{Error, Result};
use crate::operator::{CuntzOperator, Operator};
use crate::trunc::{PowerConfig, TruncatedOperator};

/// `(b_1, …, b_n)`; reads outside `1..=n` are zero.
#[derive(Clone, Debug)]
pub struct BTuple<E>(Vec<E>);

/// `(c_2, …, c_n)`; reads outside `2..=n` are zero.
#[derive(Clone, Debug)]
pub struct CTuple<E>(Vec<E>);

impl<E> BTuple<E> {
    pub fn new(entries: Vec<E>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::invalid(format!("tuple length must be at least 2, got {}", entries.len())));
        }
        Ok(BTuple(entries))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// `b_i`, 1-based; `None` outside `1..=n`.
    pub fn get(&self, i: usize) -> Option<&E> {
        i.checked_sub(1).and_then(|k| self.0.get(k))
    }

    pub fn entries(&self) -> &[E] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<E> {
        self.0
    }

    /// `max_i ‖b_i‖` under the given entry norm.
    pub fn sup_norm(&self, norm: impl Fn(&E) -> f64) -> f64 {
        self.0.iter().map(norm).fold(0.0, f64::max)
    }
}

impl<E> CTuple<E> {
    /// Entries for rows `2..=n`, so `n = entries.len() + 1`.
    pub fn new(entries: Vec<E>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("tuple must have at least one row"));
        }
        Ok(CTuple(entries))
    }

    pub fn n(&self) -> usize {
        self.0.len() + 1
    }

    /// `c_i`, for `i` in `2..=n`.
    pub fn get(&self, i: usize) -> Option<&E> {
        i.checked_sub(2).and_then(|k| self.0.get(k))
    }

    pub fn entries(&self) -> &[E] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<E> {
        self.0
    }

    pub fn sup_norm(&self, norm: impl Fn(&E) -> f64) -> f64 {
        self.0.iter().map(norm).fold(0.0, f64::max)
    }

    /// `max_i (2 - i²/n²)^{-1/2} ‖c_i‖`.
    pub fn weighted_norm(&self, norm: impl Fn(&E) -> f64) -> f64 {
        let n = self.n();
        self.0
            .iter()
            .enumerate()
            .map(|(k, c)| weight(k + 2, n) * norm(c))
            .fold(0.0, f64::max)
    }
}

impl<E: Operator> CTuple<E> {
    pub fn add(&self, rhs: &Self) -> Self {
        CTuple(self.0.iter().zip(&rhs.0).map(|(a, b)| a.add(b)).collect())
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        CTuple(self.0.iter().zip(&rhs.0).map(|(a, b)| a.sub(b)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        CTuple(self.0.iter().map(|a| a.scale(Complex64::new(s, 0.0))).collect())
    }
}

/// Weight of row `i` in the norm `‖·‖'`; lies in `[1/√2, 1]`.
pub fn weight(i: usize, n: usize) -> f64 {
    let r = (i * i) as f64 / (n * n) as f64;
    (2.0 - r).powf(-0.5)
}

/// `1 - 1/(8n²)`, the contraction factor of `E` in `‖·‖'`.
pub fn contraction_factor(n: usize) -> f64 {
    1.0 - 1.0 / (8.0 * (n * n) as f64)
}

/// `8√2 n²`, the bound on `‖R‖`.
pub fn r_bound(n: usize) -> f64 {
    8.0 * SQRT_2 * (n * n) as f64
}

/// `16√2 n³`, the bound on every `‖b_i‖`.
pub fn b_bound(n: usize) -> f64 {
    16.0 * SQRT_2 * (n * n * n) as f64
}

/// `1 / (2000 n⁵)`.
pub fn default_delta(n: usize) -> f64 {
    1.0 / (2000.0 * (n as f64).powi(5))
}

/// `δ (16√2 (n-1) n² + 1024 n⁵)`, which must stay below 1.
pub fn condition_value(n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    delta * (16.0 * SQRT_2 * (nf - 1.0) * nf * nf + 1024.0 * nf.powi(5))
}

pub fn check_contraction_condition(n: usize, delta: f64) -> bool {
    condition_value(n, delta) < 1.0
}

/// `δ (‖F‖‖R‖ + 4‖G‖‖R‖²‖a‖)` with `‖F‖ = n-1`, `‖G‖ = 2`, `‖a‖ = n`: the
/// Lipschitz constant of the fixed-point map on the ball of radius `2‖a‖`.
pub fn lipschitz_bound(n: usize, delta: f64) -> f64 {
    let r = r_bound(n);
    delta * ((n as f64 - 1.0) * r + 8.0 * r * r * n as f64)
}

/// `T(b)_i = [v, b_i] + [u, b_{i-1}]`, rows `2..=n`.
pub fn apply_t<E: CuntzOperator>(b: &BTuple<E>) -> CTuple<E> {
    let n = b.n();
    CTuple(
        (2..=n)
            .into_par_iter()
            .map(|i| b.get(i).unwrap().gen_commutator(V).add(&b.get(i - 1).unwrap().gen_commutator(U)))
            .collect(),
    )
}

/// `L(x)_i = -½ x_i v* - ½ x_{i+1} u*`, rows `1..=n`, with `x_1 = x_{n+1} = 0`.
pub fn apply_l<E: CuntzOperator>(x: &CTuple<E>) -> BTuple<E> {
    let n = x.n();
    let half = Complex64::new(-0.5, 0.0);
    BTuple(
        (1..=n)
            .into_par_iter()
            .map(|i| {
                let left = x.get(i).map(|xi| xi.mul_gen_adj(V));
                let right = x.get(i + 1).map(|xn| xn.mul_gen_adj(U));
                let sum = match (left, right) {
                    (Some(l), Some(r)) => l.add(&r),
                    (Some(l), None) => l,
                    (None, Some(r)) => r,
                    (None, None) => unreachable!("every row has a neighbour when n >= 2"),
                };
                sum.scale(half)
            })
            .collect(),
    )
}

/// `E(x)_i = ½ (v x_i v* + v x_{i+1} u* + u x_{i-1} v* + u x_i u*)`, rows
/// `2..=n`, with `x_1 = x_{n+1} = 0`. `T L = 1 - E`.
pub fn apply_e<E: CuntzOperator>(x: &CTuple<E>) -> CTuple<E> {
    let n = x.n();
    CTuple(
        (2..=n)
            .into_par_iter()
            .map(|i| E::corner_average(x.get(i - 1), x.get(i).unwrap(), x.get(i + 1)))
            .collect(),
    )
}

/// `F(b)_i = -i b_{i+1}` for `i = 2..n-1`, and `F(b)_n = 0`.
pub fn apply_f<E: CuntzOperator>(b: &BTuple<E>) -> CTuple<E> {
    let n = b.n();
    let space = b.0[0].space();
    CTuple(
        (2..=n)
            .map(|i| match b.get(i + 1) {
                Some(next) => next.scale(Complex64::new(-(i as f64), 0.0)),
                None => E::zero(&space),
            })
            .collect(),
    )
}

/// `G(b, b')_i = -b_i [u, b'_n]`, rows `2..=n`.
pub fn apply_g<E: CuntzOperator>(b: &BTuple<E>, b2: &BTuple<E>) -> CTuple<E> {
    let n = b.n();
    let comm = b2.get(n).unwrap().gen_commutator(U).scale(Complex64::new(-1.0, 0.0));
    CTuple((2..=n).into_par_iter().map(|i| b.get(i).unwrap().mul(&comm)).collect())
}

/// `a = (0, …, 0, n · 1)`.
pub fn make_a<E: Operator>(n: usize, space: &E::Space) -> Result<CTuple<E>> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    let mut entries = vec![E::zero(space); n - 1];
    entries[n - 2] = E::scalar(space, Complex64::new(n as f64, 0.0));
    Ok(CTuple(entries))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannReport {
    pub iterations: usize,
    /// Bound on `‖x - (1 - E) c‖'` for the returned `c`.
    pub residual: f64,
    pub converged: bool,
}

/// Solves `(1 - E) c = x` by `c ← x + E c`, stopping once
/// `‖c_k - c_{k-1}‖' q / (1 - q) < tol` with `q = 1 - 1/(8n²)`. `norm` must
/// bound entry norms from above for the stopping rule to be rigorous.
pub fn neumann_solve<E: CuntzOperator>(
    x: &CTuple<E>,
    tol: f64,
    max_iter: usize,
    norm: impl Fn(&E) -> f64 + Sync,
) -> Result<(CTuple<E>, NeumannReport)> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("inner tolerance must be positive, got {tol}")));
    }
    let q = contraction_factor(x.n());
    let factor = q / (1.0 - q);
    let mut c = x.clone();
    let mut incr = x.clone();
    for it in 1..=max_iter.max(1) {
        incr = apply_e(&incr);
        let size = incr.weighted_norm(&norm);
        c = c.add(&incr);
        if size * factor < tol {
            // residual x - (1 - E) c = E(incr)
            let residual = apply_e(&incr).weighted_norm(&norm);
            return Ok((c, NeumannReport { iterations: it, residual, converged: true }));
        }
    }
    let residual = apply_e(&incr).weighted_norm(&norm);
    Ok((c, NeumannReport { iterations: max_iter.max(1), residual, converged: false }))
}

/// `R x = L (1 - E)^{-1} x`.
pub fn apply_r<E: CuntzOperator>(
    x: &CTuple<E>,
    tol: f64,
    max_iter: usize,
    norm: impl Fn(&E) -> f64 + Sync,
) -> Result<(BTuple<E>, NeumannReport)> {
    let (c, report) = neumann_solve(x, tol, max_iter, norm)?;
    Ok((apply_l(&c), report))
}

/// Cheap rigorous entry norm used inside the iterations.
pub fn schur_norm(x: &TruncatedOperator) -> f64 {
    x.schur_bound()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub delta: f64,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub trunc_dim: usize,
    pub seed: u64,
    /// Also solve at half the dimension and report the discrepancy.
    pub compare_half: bool,
}

impl SolverConfig {
    /// Defaults for a given `n`, with `δ = 1/(2000 n⁵)`.
    pub fn for_n(n: usize) -> Self {
        SolverConfig {
            n,
            delta: default_delta(n),
            inner_tol: 1e-8,
            outer_tol: 1e-8,
            max_inner: 5000,
            max_outer: 200,
            trunc_dim: 2048,
            seed: 0,
            compare_half: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if self.trunc_dim < 8 || !self.trunc_dim.is_power_of_two() {
            return Err(Error::invalid(format!(
                "truncation dimension must be a power of two and at least 8, got {}",
                self.trunc_dim
            )));
        }
        Ok(())
    }

    fn power(&self) -> PowerConfig {
        PowerConfig::solver_grade(self.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub n: usize,
    pub delta: f64,
    #[serde(rename = "N")]
    pub trunc_dim: usize,
    /// Total Neumann iterations over all outer steps.
    pub inner_iters: usize,
    pub inner_iters_per_outer: Vec<usize>,
    pub outer_iters: usize,
    /// System residual for rows `2..=n`, measured on the first `N/2` columns.
    pub residual_rows: Vec<f64>,
    pub residual_window: usize,
    pub b_norms: Vec<f64>,
    pub condition_value: f64,
    /// `1 - condition_value`.
    pub contraction_margin: f64,
    pub lipschitz_bound: f64,
    /// Largest ratio of successive fixed-point increments.
    pub measured_lipschitz: Option<f64>,
    pub ball_radius: f64,
    /// Largest `‖c_k‖_Y` upper bound seen.
    pub ball_max: f64,
    pub outer_converged: bool,
    pub inner_converged: bool,
    /// Every power-iteration estimate behind the reported norms converged.
    pub estimates_converged: bool,
    /// `max_i ‖(b_i^{(N)} - b_i^{(N/2)}) P_{N/4}‖` on the shared corner.
    pub truncation_discrepancy: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub b: BTuple<TruncatedOperator>,
    pub c: CTuple<TruncatedOperator>,
    pub diagnostics: SolveDiagnostics,
}

/// Fixed-point solve of `c = a + δ F(Rc) + δ G(Rc, Rc)` from `c_0 = a`,
/// returning `b = R c`. Refuses to run when the contraction condition fails.
/// Exhausting the outer budget is not an error: the last iterate comes back
/// with `outer_converged = false`.
pub fn solve_b(cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let mut sol = solve_at(cfg, cfg.trunc_dim)?;
    if cfg.compare_half {
        let half = solve_at(cfg, cfg.trunc_dim / 2)?;
        let window = cfg.trunc_dim / 4;
        let pc = cfg.power();
        let mut worst = 0.0f64;
        for (big, small) in sol.b.entries().iter().zip(half.b.entries()) {
            let diff = big.top_left(cfg.trunc_dim / 2).sub(small).restrict_cols(window);
            worst = worst.max(diff.op_norm_estimate(&pc).lower_estimate);
        }
        sol.diagnostics.truncation_discrepancy = Some(worst);
    }
    Ok(sol)
}

fn solve_at(cfg: &SolverConfig, dim: usize) -> Result<Solution> {
    let n = cfg.n;
    let value = condition_value(n, cfg.delta);
    if value >= 1.0 {
        return Err(Error::ContractionCondition { n, delta: cfg.delta, value });
    }
    let alpha = lipschitz_bound(n, cfg.delta);
    let stop_factor = alpha / (1.0 - alpha);
    let a = make_a::<TruncatedOperator>(n, &dim)?;
    let a_norm = n as f64;
    let radius = 2.0 * a_norm;
    let pc = cfg.power();

    let mut c = a.clone();
    let mut inner_per_outer = Vec::new();
    let mut inner_converged = true;
    let mut ball_max = a_norm;
    let mut prev_inc: Option<f64> = None;
    let mut measured: Option<f64> = None;
    let mut outer_converged = false;
    let mut b;
    loop {
        let (bk, rep) = apply_r(&c, cfg.inner_tol, cfg.max_inner, schur_norm)?;
        b = bk;
        inner_per_outer.push(rep.iterations);
        inner_converged &= rep.converged;
        if inner_per_outer.len() > cfg.max_outer {
            break;
        }
        let next = a
            .add(&apply_f(&b).scale(cfg.delta))
            .add(&apply_g(&b, &b).scale(cfg.delta));
        let mut size = next.sup_norm(schur_norm);
        if size > radius {
            size = next.sup_norm(|e| e.op_norm_estimate(&pc).lower_estimate);
            if size > radius * (1.0 + 1e-9) {
                return Err(Error::Solver(format!(
                    "fixed-point iterate left the ball: norm {size} > {radius}"
                )));
            }
        }
        ball_max = ball_max.max(size);
        let inc = next.sub(&c).sup_norm(schur_norm);
        if let Some(p) = prev_inc.filter(|p| *p > 0.0) {
            let ratio = inc / p;
            measured = Some(measured.map_or(ratio, |m: f64| m.max(ratio)));
        }
        prev_inc = Some(inc);
        c = next;
        if inc * stop_factor < cfg.outer_tol {
            outer_converged = true;
            let (bk, rep) = apply_r(&c, cfg.inner_tol, cfg.max_inner, schur_norm)?;
            b = bk;
            inner_per_outer.push(rep.iterations);
            inner_converged &= rep.converged;
            break;
        }
    }

    let window = dim / 2;
    let residual = apply_t(&b).sub(&a.add(&apply_f(&b).scale(cfg.delta)).add(&apply_g(&b, &b).scale(cfg.delta)));
    let mut estimates_converged = true;
    let mut measure = |op: &TruncatedOperator| {
        let nb = op.op_norm_estimate(&pc);
        estimates_converged &= nb.converged();
        nb.lower_estimate
    };
    let residual_rows: Vec<f64> = residual.entries().iter().map(|r| measure(&r.restrict_cols(window))).collect();
    let b_norms: Vec<f64> = b.entries().iter().map(&mut measure).collect();

    let diagnostics = SolveDiagnostics {
        n,
        delta: cfg.delta,
        trunc_dim: dim,
        inner_iters: inner_per_outer.iter().sum(),
        outer_iters: inner_per_outer.len() - 1,
        inner_iters_per_outer: inner_per_outer,
        residual_rows,
        residual_window: window,
        b_norms,
        condition_value: value,
        contraction_margin: 1.0 - value,
        lipschitz_bound: alpha,
        measured_lipschitz: measured,
        ball_radius: radius,
        ball_max,
        outer_converged,
        inner_converged,
        estimates_converged,
        truncation_discrepancy: None,
    };
    Ok(Solution { b, c, diagnostics })
}
