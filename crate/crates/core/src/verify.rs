//! Randomized checks of the algebraic identities behind the construction.
//!
//! The commutator formula and the scaling identity hold in any unital
//! algebra, so they are checked with unconstrained random matrices. The
//! identities involving `E` need genuine isometries and run on the
//! truncated model, restricted to windows where it is exact.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, ExactComplex, ExactElement, Monomial, Word};
use crate::block::{self, Block, BlockMatrix};
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::solver::{self, CTuple};
use crate::trunc::{self, materialize, PowerConfig, TruncatedOperator};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Seeds used by the published runs.
pub const SEEDS: [u64; 10] = [0, 1, 2, 3, 5, 8, 13, 21, 34, 55];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Matrix size for the algebraic suites, truncation size for the others.
    pub k: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

impl TestConfig {
    pub fn new(k: usize, n: usize, trials: usize, seed: u64) -> Self {
        TestConfig { k, n, trials, seed, tol: 1e-10 }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 || self.trials < 1 {
            return Err(Error::invalid("matrix size and trial count must be at least 1"));
        }
        Ok(())
    }

    fn rng(&self, trial: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ trial as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub max_abs_residual: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl VerifyReport {
    fn from_trials(suite: &str, cfg: &TestConfig, results: Vec<(f64, Option<String>)>) -> Self {
        let max = results.iter().map(|r| r.0).fold(0.0, f64::max);
        let first_failure = results.into_iter().find_map(|r| r.1);
        VerifyReport {
            suite: suite.into(),
            n: cfg.n,
            k: cfg.k,
            trials: cfg.trials,
            max_abs_residual: max,
            pass: first_failure.is_none() && max <= cfg.tol,
            first_failure,
        }
    }
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Complex Gaussian matrix scaled to have norm of order one.
pub fn random_matrix(k: usize, rng: &mut impl Rng) -> TruncatedOperator {
    let s = 1.0 / (2.0 * k as f64).sqrt();
    let data = (0..k * k).map(|_| gaussian(rng) * s).collect();
    TruncatedOperator::from_col_major(k, data).expect("buffer has k² entries")
}

fn block_max_diff(a: &BlockMatrix<TruncatedOperator>, b: &BlockMatrix<TruncatedOperator>) -> (f64, (usize, usize)) {
    let mut worst = (0.0, (0, 0));
    for i in 1..=a.n() {
        for j in 1..=a.n() {
            let d = a.expanded(i, j).sub(&b.expanded(i, j)).max_abs();
            if d > worst.0 {
                worst = (d, (i, j));
            }
        }
    }
    worst
}

/// Right-hand side of the commutator formula: identity plus the row
/// expressions in the last column.
pub fn lemma_matrix(
    u: &TruncatedOperator,
    v: &TruncatedOperator,
    b: &[TruncatedOperator],
    delta: f64,
) -> BlockMatrix<TruncatedOperator> {
    let n = b.len();
    let k = u.dim();
    let d = Complex64::new(delta, 0.0);
    let get = |i: usize| (1..=n).contains(&i).then(|| &b[i - 1]);
    let un = u.commutator(&b[n - 1]);
    let mut m = BlockMatrix::identity(n, k);
    for i in 1..=n {
        let mut row = v.commutator(&b[i - 1]).add(&b[i - 1].mul(&un).scale(d));
        if let Some(prev) = get(i - 1) {
            row = row.add(&u.commutator(prev));
        }
        if let Some(next) = get(i + 1) {
            row = row.add(&next.scale(d * i as f64));
        }
        if i == n {
            row = row.add_scalar(Complex64::new(-(n as f64), 0.0));
        }
        m.set(i, n, m.get(i, n).add(&Block::Op(row)));
    }
    m
}

/// Largest entry deviation of `[D, X]` from [`lemma_matrix`], relative to
/// `‖D‖ ‖X‖`, and where it occurred.
pub fn comm_lemma_residual(
    u: &TruncatedOperator,
    v: &TruncatedOperator,
    b: &[TruncatedOperator],
    delta: f64,
) -> Result<(f64, (usize, usize))> {
    let k = u.dim();
    let x = block::build_x(b, delta, k)?;
    let d = block::build_d(u, v, b, delta)?;
    let comm = block::commutator(&d, &x)?;
    let (diff, at) = block_max_diff(&comm, &lemma_matrix(u, v, b, delta));
    let scale = (d.norm_upper().value * x.norm_upper().value).max(1.0);
    Ok((diff / scale, at))
}

fn random_delta(rng: &mut impl Rng) -> f64 {
    10f64.powf(rng.random_range(-1.0..1.0))
}

/// Commutator formula for random `u, v, b` and `δ`.
pub fn check_comm_lemma(cfg: &TestConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let results = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = cfg.rng(t);
            let u = random_matrix(cfg.k, &mut rng);
            let v = random_matrix(cfg.k, &mut rng);
            let b: Vec<_> = (0..cfg.n).map(|_| random_matrix(cfg.k, &mut rng)).collect();
            let delta = random_delta(&mut rng);
            let (res, (i, j)) = comm_lemma_residual(&u, &v, &b, delta)?;
            Ok((res, (res > cfg.tol).then(|| format!("trial {t}, block ({i},{j}), residual {res:e}"))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport::from_trials("comm-lemma", cfg, results))
}

/// Scaling identity: `S M S^{-1}` equals the entrywise `μ^{j-i}` scaling,
/// `[D_μ, X_μ] - 1 = S ([D, X] - 1) S^{-1}`, and the top-right block is
/// `μ^{n-1} ([v,b_1] + δ b_2 + δ b_1 [u,b_n])`.
pub fn check_reduct(cfg: &TestConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let n = cfg.n;
    let results = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = cfg.rng(t);
            let k = cfg.k;
            let u = random_matrix(k, &mut rng);
            let v = random_matrix(k, &mut rng);
            let b: Vec<_> = (0..n).map(|_| random_matrix(k, &mut rng)).collect();
            let delta = random_delta(&mut rng);
            let mu: f64 = rng.random_range(0.05..1.0);

            let x = block::build_x(&b, delta, k)?;
            let d = block::build_d(&u, &v, &b, delta)?;
            let s_diag: Vec<Complex64> = (1..=n).map(|i| Complex64::new(mu.powi((n - i) as i32), 0.0)).collect();
            let s_inv: Vec<Complex64> = s_diag.iter().map(|z| z.inv()).collect();
            let s = BlockMatrix::scalar_diagonal(k, &s_diag);
            let si = BlockMatrix::scalar_diagonal(k, &s_inv);
            let direct = s.mul(&d)?.mul(&si)?;
            let (sim_err, sim_at) = block_max_diff(&direct, &block::similarity_scale(&d, mu));

            let (dm, xm) = block::conjugate_scale(&d, &x, mu)?;
            let id = BlockMatrix::identity(n, k);
            let scaled = block::commutator(&dm, &xm)?.sub(&id)?;
            let base = block::commutator(&d, &x)?.sub(&id)?;
            let (conj_err, conj_at) = block_max_diff(&scaled, &block::similarity_scale(&base, mu));

            let dd = Complex64::new(delta, 0.0);
            let top = v
                .commutator(&b[0])
                .add(&b[1].scale(dd))
                .add(&b[0].mul(&u.commutator(&b[n - 1])).scale(dd))
                .scale(Complex64::new(mu.powi(n as i32 - 1), 0.0));
            let top_err = scaled.expanded(1, n).sub(&top).max_abs();

            let scale = (d.norm_upper().value * x.norm_upper().value).max(1.0);
            let res = sim_err.max(conj_err).max(top_err) / scale;
            let fail = (res > cfg.tol).then(|| {
                format!("trial {t}: similarity at {sim_at:?}, commutator at {conj_at:?}, top entry {top_err:e}")
            });
            Ok((res, fail))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport::from_trials("reduct", cfg, results))
}

/// `[D, X^m] = m X^{m-1} + Σ_j X^{m-1-j} E X^j` with `E = [D, X] - 1`, for
/// `m = 1..=cfg.n`.
pub fn check_popa_induction(cfg: &TestConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let results = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = cfg.rng(t);
            let d = random_matrix(cfg.k, &mut rng);
            let x = random_matrix(cfg.k, &mut rng);
            let e = d.commutator(&x).add_scalar(-ONE);
            let id = TruncatedOperator::identity(cfg.k);
            // powers[j] = X^j
            let mut powers = vec![id];
            for j in 1..=cfg.n {
                powers.push(powers[j - 1].mul(&x));
            }
            let (dn, xn) = (d.norm_upper(), x.norm_upper().max(1.0));
            let mut worst = (0.0f64, 0usize);
            for m in 1..=cfg.n {
                let lhs = d.commutator(&powers[m]);
                let mut rhs = powers[m - 1].scale(Complex64::new(m as f64, 0.0));
                for j in 0..m {
                    rhs = rhs.add(&powers[m - 1 - j].mul(&e).mul(&powers[j]));
                }
                let scale = (m as f64 * (dn + 1.0) * xn.powi(m as i32)).max(1.0);
                let res = lhs.sub(&rhs).max_abs() / scale;
                if res > worst.0 {
                    worst = (res, m);
                }
            }
            Ok((worst.0, (worst.0 > cfg.tol).then(|| format!("trial {t}, power {}", worst.1))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport::from_trials("popa-induction", cfg, results))
}

/// Random element `Σ M_{ab} a b*` over words with `|a| = |b| = depth`.
pub fn random_degree_zero(depth: usize, rng: &mut impl Rng) -> AlgebraElement {
    let words = Word::all_of_length(depth);
    let s = 1.0 / (words.len() as f64).sqrt();
    AlgebraElement::from_terms(
        words
            .iter()
            .flat_map(|a| words.iter().map(move |b| Monomial::new(a.clone(), b.clone())))
            .map(|m| (m, gaussian(rng) * s))
            .collect::<Vec<_>>(),
    )
}

/// Random tuple `(x_2, …, x_n)` of materialized degree-zero elements of
/// depth at most 4, and the largest depth used.
pub fn random_tuple(n: usize, dim: usize, rng: &mut impl Rng) -> (CTuple<TruncatedOperator>, usize) {
    let mut depth = 0;
    let entries = (2..=n)
        .map(|_| {
            let l = rng.random_range(0..=4usize);
            depth = depth.max(l);
            materialize(&random_degree_zero(l, rng), dim)
        })
        .collect();
    (CTuple::new(entries).expect("n >= 2"), depth)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverIdentityStats {
    pub n: usize,
    pub trunc_dim: usize,
    pub trials: usize,
    /// `‖T L x + E x - x‖_Y / ‖x‖_Y` on the first `N/2` columns.
    pub tl_residual: f64,
    /// Largest `‖E x‖' / ‖x‖'`.
    pub max_contraction_ratio: f64,
    pub contraction_factor: f64,
    /// Largest relative gap between `‖E(x)_i‖` and the norm of the 2×2 operator matrix.
    pub embedding_gap: f64,
    /// Largest excess of the 2×2 norm over its Frobenius bound (≤ 0 when the bound holds).
    pub frobenius_excess: f64,
    pub concavity_holds: bool,
}

/// Power iteration settings precise enough to compare norms to ~1e-10.
fn tight_power(seed: u64) -> PowerConfig {
    PowerConfig::new(1e-13, 20_000, seed)
}

fn ratio_norm(x: &TruncatedOperator, seed: u64) -> f64 {
    x.op_norm_estimate(&tight_power(seed)).lower_estimate
}

/// `2 - i²/n² - 1/(2n²) ≤ (1 - 1/(4n²)) (2 - i²/n²)` for `2 ≤ i ≤ n ≤ max_n`.
pub fn weight_concavity_holds(max_n: usize) -> bool {
    (2..=max_n).all(|n| {
        let nn = (n * n) as f64;
        (2..=n).all(|i| {
            let w = 2.0 - (i * i) as f64 / nn;
            w - 1.0 / (2.0 * nn) <= (1.0 - 1.0 / (4.0 * nn)) * w
        })
    })
}

pub fn solver_identity_stats(cfg: &TestConfig) -> Result<SolverIdentityStats> {
    cfg.validate()?;
    let (n, dim) = (cfg.n, cfg.k);
    if n < 2 || dim < 32 || !dim.is_power_of_two() {
        return Err(Error::invalid("solver identities need n >= 2 and a power-of-two dimension >= 32"));
    }
    let window = dim / 2;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = cfg.rng(t);
            let (x, _) = random_tuple(n, dim, &mut rng);
            let seed = cfg.seed ^ t as u64;
            let ex = solver::apply_e(&x);
            let tl = solver::apply_t(&solver::apply_l(&x));
            let diff = tl.add(&ex).sub(&x);
            let x_norms: Vec<f64> = x.entries().iter().map(|e| ratio_norm(e, seed)).collect();
            let xy = x_norms.iter().copied().fold(0.0, f64::max);
            let tl_res = diff
                .entries()
                .iter()
                .map(|e| e.restrict_cols(window).op_norm_estimate(&tight_power(seed)).lower_estimate)
                .fold(0.0, f64::max)
                / xy.max(f64::MIN_POSITIVE);

            let ex_norms: Vec<f64> = ex.entries().iter().map(|e| ratio_norm(e, seed)).collect();
            let weighted = |v: &[f64]| {
                v.iter().enumerate().map(|(k, z)| solver::weight(k + 2, n) * z).fold(0.0, f64::max)
            };
            let ratio = weighted(&ex_norms) / weighted(&x_norms);

            let half = dim / 2;
            let zero = TruncatedOperator::zeros(half);
            let mut gap = 0.0f64;
            let mut excess = f64::NEG_INFINITY;
            for i in 2..=n {
                let corner = |j: usize| x.get(j).map_or_else(|| zero.clone(), |e| e.top_left(half));
                let m = BlockMatrix::from_fn(2, half, |r, c| {
                    let j = match (r, c) {
                        (1, 2) => i + 1,
                        (2, 1) => i - 1,
                        _ => i,
                    };
                    Block::Op(corner(j).scale(Complex64::new(0.5, 0.0)))
                });
                let two_by_two = block::block_norm_estimate(&m, &tight_power(seed)).lower_estimate;
                let direct = ex_norms[i - 2];
                gap = gap.max((two_by_two - direct).abs() / direct.max(f64::MIN_POSITIVE));
                let nb = |j: usize| x.get(j).map_or(0.0, |e| ratio_norm(&e.top_left(half), seed));
                let frob = 0.5 * (2.0 * nb(i).powi(2) + nb(i + 1).powi(2) + nb(i - 1).powi(2)).sqrt();
                excess = excess.max(two_by_two - frob);
            }
            (tl_res, ratio, gap, excess)
        })
        .collect::<Vec<_>>();
    Ok(SolverIdentityStats {
        n,
        trunc_dim: dim,
        trials: cfg.trials,
        tl_residual: per_trial.iter().map(|r| r.0).fold(0.0, f64::max),
        max_contraction_ratio: per_trial.iter().map(|r| r.1).fold(0.0, f64::max),
        contraction_factor: solver::contraction_factor(n),
        embedding_gap: per_trial.iter().map(|r| r.2).fold(0.0, f64::max),
        frobenius_excess: per_trial.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max),
        concavity_holds: weight_concavity_holds(64),
    })
}

/// `T L = 1 - E`, the contraction of `E` in `‖·‖'`, the 2×2 norm identity
/// and its Frobenius bound, on random tuples in the truncated model
/// (`cfg.k` is the truncation size).
pub fn check_solver_identities(cfg: &TestConfig) -> Result<VerifyReport> {
    let s = solver_identity_stats(cfg)?;
    let mut failures = Vec::new();
    if s.tl_residual > cfg.tol {
        failures.push(format!("TL = 1 - E residual {:e}", s.tl_residual));
    }
    if s.max_contraction_ratio > s.contraction_factor + 1e-9 {
        failures.push(format!("contraction ratio {} above {}", s.max_contraction_ratio, s.contraction_factor));
    }
    if s.embedding_gap > 1e-6 {
        failures.push(format!("2x2 norm gap {:e}", s.embedding_gap));
    }
    if s.frobenius_excess > 1e-9 {
        failures.push(format!("Frobenius bound exceeded by {:e}", s.frobenius_excess));
    }
    if !s.concavity_holds {
        failures.push("weight inequality fails".into());
    }
    Ok(VerifyReport {
        suite: "solver-identities".into(),
        n: cfg.n,
        k: cfg.k,
        trials: cfg.trials,
        max_abs_residual: s.tl_residual,
        pass: failures.is_empty(),
        first_failure: failures.into_iter().next(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RightInverseStats {
    pub n: usize,
    pub trunc_dim: usize,
    pub trials: usize,
    pub neumann_tol: f64,
    /// Largest `‖T(R x) - x‖_Y / ‖x‖_Y` on the first `N/2` columns.
    pub residual: f64,
    /// Largest `‖R x‖_X / ‖x‖_Y`.
    pub norm_ratio: f64,
    pub norm_bound: f64,
    pub max_neumann_iters: usize,
    pub all_converged: bool,
}

/// Applies `R` to random tuples and measures how well it inverts `T`.
pub fn right_inverse_stats(cfg: &TestConfig, neumann_tol: f64, max_iter: usize) -> Result<RightInverseStats> {
    cfg.validate()?;
    let (n, dim) = (cfg.n, cfg.k);
    if n < 2 || dim < 32 || !dim.is_power_of_two() {
        return Err(Error::invalid("right inverse check needs n >= 2 and a power-of-two dimension >= 32"));
    }
    let window = dim / 2;
    let mut out = RightInverseStats {
        n,
        trunc_dim: dim,
        trials: cfg.trials,
        neumann_tol,
        residual: 0.0,
        norm_ratio: 0.0,
        norm_bound: solver::r_bound(n),
        max_neumann_iters: 0,
        all_converged: true,
    };
    // trials run one after another: each Neumann solve is already parallel and dense
    for t in 0..cfg.trials {
        let mut rng = cfg.rng(t);
        let (x, _) = random_tuple(n, dim, &mut rng);
        let seed = cfg.seed ^ t as u64;
        let (b, report) = solver::apply_r(&x, neumann_tol, max_iter, solver::schur_norm)?;
        let xy = x.entries().iter().map(|e| ratio_norm(e, seed)).fold(0.0, f64::max);
        let diff = solver::apply_t(&b).sub(&x);
        let res = diff
            .entries()
            .iter()
            .map(|e| e.restrict_cols(window).op_norm_estimate(&tight_power(seed)).lower_estimate)
            .fold(0.0, f64::max);
        let bx = b.sup_norm(|e| ratio_norm(e, seed));
        let xy = xy.max(f64::MIN_POSITIVE);
        out.residual = out.residual.max(res / xy);
        out.norm_ratio = out.norm_ratio.max(bx / xy);
        out.max_neumann_iters = out.max_neumann_iters.max(report.iterations);
        out.all_converged &= report.converged;
    }
    Ok(out)
}

/// `T R = 1` up to the Neumann tolerance and `‖R‖ ≤ 8√2 n²`, in the
/// truncated model (`cfg.k` is the truncation size).
pub fn check_right_inverse(cfg: &TestConfig) -> Result<VerifyReport> {
    let s = right_inverse_stats(cfg, 1e-6, 5000)?;
    let mut failures = Vec::new();
    if !s.all_converged {
        failures.push("Neumann iteration did not converge".to_string());
    }
    if s.residual > 1e-5 {
        failures.push(format!("T R x - x residual {:e}", s.residual));
    }
    if s.norm_ratio > s.norm_bound + 1e-6 {
        failures.push(format!("norm ratio {} above {}", s.norm_ratio, s.norm_bound));
    }
    Ok(VerifyReport {
        suite: "right-inverse".into(),
        n: cfg.n,
        k: cfg.k,
        trials: cfg.trials,
        max_abs_residual: s.residual,
        pass: failures.is_empty(),
        first_failure: failures.into_iter().next(),
    })
}

/// The five defining relations, as exact differences that must vanish.
pub fn relation_defects() -> Vec<(&'static str, ExactElement)> {
    let u = ExactElement::u();
    let v = ExactElement::v();
    let (us, vs) = (u.adjoint(), v.adjoint());
    let one = ExactElement::identity();
    vec![
        ("u*u = 1", &(&us * &u) - &one),
        ("v*v = 1", &(&vs * &v) - &one),
        ("uu* + vv* = 1", &(&(&u * &us) + &(&v * &vs)) - &one),
        ("u*v = 0", &us * &v),
        ("v*u = 0", &vs * &u),
    ]
}

/// Exact symbolic relations, plus vanishing of the truncated defects on
/// the window `N/4` for `N = cfg.k` (when at least 8).
pub fn check_relations(cfg: &TestConfig) -> Result<VerifyReport> {
    let mut failure = None;
    for (name, defect) in relation_defects() {
        if !defect.equals(&ExactElement::zero()) {
            failure.get_or_insert_with(|| format!("relation {name} does not reduce to zero"));
        }
    }
    // exact coefficients survive the roundtrip through complex floats
    let half = ExactComplex::new(num_rational::BigRational::new(1.into(), 2.into()), num_traits::Zero::zero());
    let x = ExactElement::scalar(half.clone()) * (ExactElement::u() + ExactElement::v());
    if !(&x.adjoint() * &x).equals(&ExactElement::scalar(half)) {
        failure.get_or_insert_with(|| "(u+v)*(u+v) != 2".into());
    }
    let mut max = 0.0f64;
    if cfg.k >= 8 {
        let pc = PowerConfig::identity_grade(cfg.seed);
        max = trunc::boundary_defect(&AlgebraElement::<Complex64>::identity(), cfg.k, cfg.k / 4, &pc)?;
        if max != 0.0 {
            failure.get_or_insert_with(|| format!("truncated defect {max} on the interior window"));
        }
    }
    Ok(VerifyReport {
        suite: "relations".into(),
        n: cfg.n,
        k: cfg.k,
        trials: 1,
        max_abs_residual: max,
        pass: failure.is_none(),
        first_failure: failure,
    })
}

/// For random matrices every component of `T(b)` is a sum of commutators,
/// hence traceless; the largest trace relative to the operand scale.
pub fn check_trace_obstruction(cfg: &TestConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let n = cfg.n.max(2);
    let results = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = cfg.rng(t);
            let u = random_matrix(cfg.k, &mut rng);
            let v = random_matrix(cfg.k, &mut rng);
            let b: Vec<_> = (0..n).map(|_| random_matrix(cfg.k, &mut rng)).collect();
            let worst = (2..=n)
                .map(|i| {
                    let ti = v.commutator(&b[i - 1]).add(&u.commutator(&b[i - 2]));
                    let scale = (ti.frobenius() * (cfg.k as f64).sqrt()).max(1.0);
                    ti.trace().norm() / scale
                })
                .fold(0.0, f64::max);
            Ok((worst, (worst > cfg.tol).then(|| format!("trial {t}: trace {worst:e}"))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport::from_trials("trace-obstruction", cfg, results))
}

pub const SUITES: [&str; 7] = [
    "comm-lemma",
    "reduct",
    "popa-induction",
    "solver-identities",
    "right-inverse",
    "relations",
    "trace-obstruction",
];

/// Suites whose size parameter is a truncation dimension rather than a matrix size.
pub fn uses_truncation(suite: &str) -> bool {
    matches!(suite, "solver-identities" | "right-inverse" | "relations")
}

/// Runs a named suite, or every suite for `"all"`.
pub fn run_suite(name: &str, cfg: &TestConfig) -> Result<Vec<VerifyReport>> {
    let one = |s: &str| -> Result<VerifyReport> {
        match s {
            "comm-lemma" => check_comm_lemma(cfg),
            "reduct" => check_reduct(cfg),
            "popa-induction" => check_popa_induction(cfg),
            "solver-identities" => check_solver_identities(cfg),
            "right-inverse" => check_right_inverse(cfg),
            "relations" => check_relations(cfg),
            "trace-obstruction" => check_trace_obstruction(cfg),
            other => Err(Error::invalid(format!("unknown suite {other:?}"))),
        }
    };
    if name == "all" {
        SUITES.iter().map(|s| one(s)).collect()
    } else {
        one(name).map(|r| vec![r])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case_by_hand() {
        // k = 1 and n = 2, against the 2x2 scalar matrices multiplied out by hand
        let c = |re: f64, im: f64| TruncatedOperator::scalar_identity(1, Complex64::new(re, im));
        let (u, v) = (c(0.3, -1.0), c(2.0, 0.5));
        let b = vec![c(1.5, 0.2), c(-0.7, 0.9)];
        let delta = 0.4;
        let x = block::build_x(&b, delta, 1).unwrap();
        let d = block::build_d(&u, &v, &b, delta).unwrap();
        let comm = block::commutator(&d, &x).unwrap();
        let g = |m: &BlockMatrix<TruncatedOperator>, i, j| m.expanded(i, j).get(0, 0);
        // scalar matrices: D = [[v/δ, 1 + b1 u], [u/δ, v/δ + b2 u]], X = [[0, δ b1], [1, δ b2]]
        let (uu, vv, b1, b2) = (u.get(0, 0), v.get(0, 0), b[0].get(0, 0), b[1].get(0, 0));
        let dm = [[vv / delta, ONE + b1 * uu], [uu / delta, vv / delta + b2 * uu]];
        let xm = [[Complex64::new(0.0, 0.0), b1 * delta], [ONE, b2 * delta]];
        for i in 0..2 {
            for j in 0..2 {
                let mut e = Complex64::new(0.0, 0.0);
                for l in 0..2 {
                    e += dm[i][l] * xm[l][j] - xm[i][l] * dm[l][j];
                }
                assert!((g(&comm, i + 1, j + 1) - e).norm() < 1e-12);
            }
        }
        // and the closed form: identity off the last column, then δ b_2 at the top and -2 at the bottom
        assert!((g(&comm, 1, 1) - ONE).norm() < 1e-12);
        assert!((g(&comm, 1, 2) - b[1].get(0, 0) * delta).norm() < 1e-12);
        assert!((g(&comm, 2, 2) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_tuple_lemma() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_matrix(3, &mut rng);
        let v = random_matrix(3, &mut rng);
        let b = vec![TruncatedOperator::zeros(3); 3];
        let m = lemma_matrix(&u, &v, &b, 0.5);
        assert!((m.expanded(3, 3).get(0, 0) - Complex64::new(-2.0, 0.0)).norm() < 1e-15);
        assert!(comm_lemma_residual(&u, &v, &b, 0.5).unwrap().0 < 1e-14);
    }

    #[test]
    fn delta_normalisation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_matrix(4, &mut rng);
        let v = random_matrix(4, &mut rng);
        let b: Vec<_> = (0..3).map(|_| random_matrix(4, &mut rng)).collect();
        let delta = 0.37;
        let s = Complex64::new(1.0 / delta, 0.0);
        let run = |u: &TruncatedOperator, v: &TruncatedOperator, b: &[TruncatedOperator], d: f64| {
            let x = block::build_x(b, d, 4).unwrap();
            let dd = block::build_d(u, v, b, d).unwrap();
            block::commutator(&dd, &x).unwrap()
        };
        let c1 = run(&u, &v, &b, delta);
        let bs: Vec<_> = b.iter().map(|x| x.scale(Complex64::new(delta, 0.0))).collect();
        let c2 = run(&u.scale(s), &v.scale(s), &bs, 1.0);
        assert!(block_max_diff(&c1, &c2).0 < 1e-11);
    }

    #[test]
    fn suites_pass_small() {
        for k in [1, 2, 5] {
            for n in 2..=4 {
                let cfg = TestConfig::new(k, n, 10, 7);
                assert!(check_comm_lemma(&cfg).unwrap().pass, "comm-lemma k={k} n={n}");
                assert!(check_reduct(&cfg).unwrap().pass, "reduct k={k} n={n}");
                assert!(check_trace_obstruction(&cfg).unwrap().pass);
            }
            let cfg = TestConfig::new(k, 8, 10, 7);
            assert!(check_popa_induction(&cfg).unwrap().pass, "popa k={k}");
        }
        assert!(check_relations(&TestConfig::new(64, 2, 1, 0)).unwrap().pass);
        let r = check_solver_identities(&TestConfig { tol: 1e-12, ..TestConfig::new(64, 3, 4, 1) }).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn comm_lemma_detects_wrong_d() {
        // with δ b_i u in the last column of D the formula breaks
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = 3;
        let u = random_matrix(k, &mut rng);
        let v = random_matrix(k, &mut rng);
        let b: Vec<_> = (0..2).map(|_| random_matrix(k, &mut rng)).collect();
        let delta = 0.5;
        let x = block::build_x(&b, delta, k).unwrap();
        let mut d = block::build_d(&u, &v, &b, delta).unwrap();
        for (i, bi) in b.iter().enumerate() {
            let extra = bi.mul(&u).scale(Complex64::new(delta - 1.0, 0.0));
            d.set(i + 1, 2, d.get(i + 1, 2).add(&Block::Op(extra)));
        }
        let comm = block::commutator(&d, &x).unwrap();
        assert!(block_max_diff(&comm, &lemma_matrix(&u, &v, &b, delta)).0 > 1e-3);
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", &TestConfig::new(2, 2, 1, 0)).is_err());
        assert_eq!(run_suite("all", &TestConfig::new(64, 2, 2, 0)).unwrap().len(), SUITES.len());
    }

    #[test]
    fn right_inverse_small() {
        let s = right_inverse_stats(&TestConfig::new(64, 3, 2, 1), 1e-8, 5000).unwrap();
        assert!(s.all_converged);
        assert!(s.residual < 1e-7, "{s:?}");
        assert!(s.norm_ratio <= s.norm_bound, "{s:?}");
    }

    #[test]
    fn concavity() {
        assert!(weight_concavity_holds(64));
    }
}
