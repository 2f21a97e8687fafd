//! Finite-dimensional model of the Cuntz relations on `C^N`.
//!
//! The isometries are the interleaving pair `U e_k = e_{2k}`,
//! `V e_k = e_{2k+1}` (zero once the index leaves `0..N`). With this choice
//! `UU* + VV* = I_N` holds exactly at every size, while `U*U = V*V = I` and
//! `U*V = 0` hold on the first `N/2` basis vectors. A word of length `l` maps
//! `e_k` to an index below `2^l (k + 1)`, so depth-`L` computations are exact
//! on the window `0..N >> L`.
//!
//! Operators are stored sparse (materialized monomials are partial
//! permutations) until they fill in, after which they switch to a dense
//! column-major buffer. Multiplication by a generator is an index shuffle and
//! never goes through a general product.

use std::fmt;
use std::io::Write;

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, Coefficient, Letter, Word};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance for checks that should hold to rounding error.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Tolerance for norms of solver iterates.
pub const SOLVER_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Sparse(Csr),
    /// Column-major `dim × dim`.
    Dense(Vec<Complex64>),
}

/// A square complex matrix standing in for an element of `B(H)`.
#[derive(Clone, PartialEq)]
pub struct TruncatedOperator {
    dim: usize,
    repr: Repr,
}

impl fmt::Debug for TruncatedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.is_dense() { "dense" } else { "sparse" };
        write!(f, "TruncatedOperator({}x{}, {kind}, nnz={})", self.dim, self.dim, self.nnz())
    }
}

impl TruncatedOperator {
    pub fn zeros(dim: usize) -> Self {
        TruncatedOperator {
            dim,
            repr: Repr::Sparse(Csr {
                row_ptr: vec![0; dim + 1],
                cols: Vec::new(),
                vals: Vec::new(),
            }),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar_identity(dim, ONE)
    }

    pub fn scalar_identity(dim: usize, s: Complex64) -> Self {
        if s == ZERO {
            return Self::zeros(dim);
        }
        Self::from_triplets(dim, (0..dim).map(|k| (k, k, s)))
    }

    /// Builds a sparse operator, summing duplicate positions and dropping
    /// exact zeros. Entries outside `0..dim` are ignored.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut entries: Vec<(usize, usize, Complex64)> = triplets
            .into_iter()
            .filter(|&(r, c, _)| r < dim && c < dim)
            .collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                row_ptr[r + 1] += 1;
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let op = TruncatedOperator { dim, repr: Repr::Sparse(Csr { row_ptr, cols, vals }) };
        op.prune()
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for c in 0..dim {
            for r in 0..dim {
                data[c * dim + r] = f(r, c);
            }
        }
        TruncatedOperator { dim, repr: Repr::Dense(data) }
    }

    /// Dense operator from a column-major buffer.
    pub fn from_col_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "buffer of length {} for a {dim}x{dim} operator",
                data.len()
            )));
        }
        Ok(TruncatedOperator { dim, repr: Repr::Dense(data) })
    }

    /// Complex Gaussian entries, deterministic in `seed`.
    pub fn random_gaussian(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..dim * dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        TruncatedOperator { dim, repr: Repr::Dense(data) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    /// Stored entries (all `dim²` for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.repr {
            Repr::Sparse(s) => s.vals.len(),
            Repr::Dense(d) => d.len(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        match &self.repr {
            Repr::Sparse(s) => {
                let range = s.row_ptr[row]..s.row_ptr[row + 1];
                match s.cols[range.clone()].binary_search(&col) {
                    Ok(k) => s.vals[range.start + k],
                    Err(_) => ZERO,
                }
            }
            Repr::Dense(d) => d[col * self.dim + row],
        }
    }

    /// Visits every stored entry as `(row, col, value)`.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, Complex64)) {
        match &self.repr {
            Repr::Sparse(s) => {
                for r in 0..self.dim {
                    for k in s.row_ptr[r]..s.row_ptr[r + 1] {
                        f(r, s.cols[k], s.vals[k]);
                    }
                }
            }
            Repr::Dense(d) => {
                for c in 0..self.dim {
                    for r in 0..self.dim {
                        f(r, c, d[c * self.dim + r]);
                    }
                }
            }
        }
    }

    pub fn to_col_major(&self) -> Vec<Complex64> {
        match &self.repr {
            Repr::Dense(d) => d.clone(),
            Repr::Sparse(_) => {
                let mut out = vec![ZERO; self.dim * self.dim];
                self.for_each_entry(|r, c, v| out[c * self.dim + r] = v);
                out
            }
        }
    }

    pub fn into_dense(self) -> Self {
        match self.repr {
            Repr::Dense(_) => self,
            Repr::Sparse(_) => {
                let data = self.to_col_major();
                TruncatedOperator { dim: self.dim, repr: Repr::Dense(data) }
            }
        }
    }

    fn prune(self) -> Self {
        match self.repr {
            Repr::Sparse(s) if s.vals.contains(&ZERO) => {
                let dim = self.dim;
                let mut row_ptr = vec![0usize; dim + 1];
                let mut cols = Vec::with_capacity(s.vals.len());
                let mut vals = Vec::with_capacity(s.vals.len());
                for r in 0..dim {
                    for k in s.row_ptr[r]..s.row_ptr[r + 1] {
                        if s.vals[k] != ZERO {
                            cols.push(s.cols[k]);
                            vals.push(s.vals[k]);
                        }
                    }
                    row_ptr[r + 1] = cols.len();
                }
                TruncatedOperator { dim, repr: Repr::Sparse(Csr { row_ptr, cols, vals }) }
            }
            _ => self.settle(),
        }
    }

    /// Switches to dense storage once a sparse operator has filled in.
    fn settle(self) -> Self {
        match &self.repr {
            Repr::Sparse(s) if s.vals.len() * 4 > self.dim * self.dim => self.into_dense(),
            _ => self,
        }
    }

    fn check_dim(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
    }

    fn zip_dense(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let a = self.to_col_major();
        let b = other.to_col_major();
        let data = a.iter().zip(&b).map(|(x, y)| f(*x, *y)).collect();
        TruncatedOperator { dim: self.dim, repr: Repr::Dense(data) }
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        self.check_dim(other);
        match (&self.repr, &other.repr) {
            (Repr::Sparse(_), Repr::Sparse(_)) => {
                let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
                self.for_each_entry(|r, c, v| trip.push((r, c, v)));
                other.for_each_entry(|r, c, v| trip.push((r, c, v * sign)));
                Self::from_triplets(self.dim, trip)
            }
            (Repr::Dense(a), Repr::Dense(b)) => {
                let data = a.iter().zip(b).map(|(x, y)| x + y * sign).collect();
                TruncatedOperator { dim: self.dim, repr: Repr::Dense(data) }
            }
            (Repr::Dense(a), Repr::Sparse(_)) => {
                let mut data = a.clone();
                let n = self.dim;
                other.for_each_entry(|r, c, v| data[c * n + r] += v * sign);
                TruncatedOperator { dim: n, repr: Repr::Dense(data) }
            }
            (Repr::Sparse(_), Repr::Dense(_)) => self.zip_dense(other, |x, y| x + y * sign),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    /// `self += s · other`, in place.
    pub fn axpy(&mut self, s: Complex64, other: &Self) {
        self.check_dim(other);
        if let Repr::Dense(d) = &mut self.repr {
            match &other.repr {
                Repr::Dense(o) => d.iter_mut().zip(o).for_each(|(x, y)| *x += s * y),
                Repr::Sparse(_) => {
                    let n = self.dim;
                    other.for_each_entry(|r, c, v| d[c * n + r] += s * v);
                }
            }
        } else {
            *self = self.add(&other.scale(s));
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        if s == ZERO {
            return Self::zeros(self.dim);
        }
        let repr = match &self.repr {
            Repr::Sparse(sp) => Repr::Sparse(Csr {
                row_ptr: sp.row_ptr.clone(),
                cols: sp.cols.clone(),
                vals: sp.vals.iter().map(|v| v * s).collect(),
            }),
            Repr::Dense(d) => Repr::Dense(d.iter().map(|v| v * s).collect()),
        };
        TruncatedOperator { dim: self.dim, repr }
    }

    pub fn add_scalar(&self, s: Complex64) -> Self {
        if s == ZERO {
            return self.clone();
        }
        match &self.repr {
            Repr::Dense(d) => {
                let mut data = d.clone();
                for k in 0..self.dim {
                    data[k * self.dim + k] += s;
                }
                TruncatedOperator { dim: self.dim, repr: Repr::Dense(data) }
            }
            Repr::Sparse(_) => self.add(&Self::scalar_identity(self.dim, s)),
        }
    }

    pub fn adjoint(&self) -> Self {
        match &self.repr {
            Repr::Sparse(_) => {
                let mut trip = Vec::with_capacity(self.nnz());
                self.for_each_entry(|r, c, v| trip.push((c, r, v.conj())));
                Self::from_triplets(self.dim, trip)
            }
            Repr::Dense(d) => {
                let n = self.dim;
                let mut data = vec![ZERO; n * n];
                for c in 0..n {
                    for r in 0..n {
                        data[r * n + c] = d[c * n + r].conj();
                    }
                }
                TruncatedOperator { dim: n, repr: Repr::Dense(data) }
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_dim(other);
        let n = self.dim;
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => {
                let mut data = vec![ZERO; n * n];
                matmul(
                    MatMut::from_column_major_slice_mut(&mut data, n, n),
                    Accum::Replace,
                    MatRef::from_column_major_slice(a, n, n),
                    MatRef::from_column_major_slice(b, n, n),
                    ONE,
                    Par::Seq,
                );
                TruncatedOperator { dim: n, repr: Repr::Dense(data) }
            }
            (Repr::Sparse(s), Repr::Dense(b)) => {
                let mut data = vec![ZERO; n * n];
                for c in 0..n {
                    let col = &b[c * n..(c + 1) * n];
                    let out = &mut data[c * n..(c + 1) * n];
                    for r in 0..n {
                        let mut acc = ZERO;
                        for k in s.row_ptr[r]..s.row_ptr[r + 1] {
                            acc += s.vals[k] * col[s.cols[k]];
                        }
                        out[r] = acc;
                    }
                }
                TruncatedOperator { dim: n, repr: Repr::Dense(data) }
            }
            (Repr::Dense(a), Repr::Sparse(_)) => {
                // column j of the product accumulates a[:, k] * s[k, j]
                let mut data = vec![ZERO; n * n];
                other.for_each_entry(|k, j, v| {
                    let src = &a[k * n..(k + 1) * n];
                    let dst = &mut data[j * n..(j + 1) * n];
                    dst.iter_mut().zip(src).for_each(|(d, x)| *d += x * v);
                });
                TruncatedOperator { dim: n, repr: Repr::Dense(data) }
            }
            (Repr::Sparse(a), Repr::Sparse(b)) => {
                let mut trip = Vec::new();
                let mut acc = vec![ZERO; n];
                let mut touched = Vec::new();
                for r in 0..n {
                    for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                        let mid = a.cols[k];
                        for l in b.row_ptr[mid]..b.row_ptr[mid + 1] {
                            let c = b.cols[l];
                            if acc[c] == ZERO {
                                touched.push(c);
                            }
                            acc[c] += a.vals[k] * b.vals[l];
                        }
                    }
                    for &c in &touched {
                        trip.push((r, c, acc[c]));
                        acc[c] = ZERO;
                    }
                    touched.clear();
                }
                Self::from_triplets(n, trip)
            }
        }
    }

    /// Moves row `r` to row `f(r)` (dropped when `f` gives `None`). `f` must
    /// be injective; this is left multiplication by a partial permutation.
    pub fn remap_rows(&self, f: impl Fn(usize) -> Option<usize>) -> Self {
        let n = self.dim;
        match &self.repr {
            Repr::Sparse(_) => {
                let mut trip = Vec::with_capacity(self.nnz());
                self.for_each_entry(|r, c, v| {
                    if let Some(r2) = f(r).filter(|&r2| r2 < n) {
                        trip.push((r2, c, v));
                    }
                });
                Self::from_triplets(n, trip)
            }
            Repr::Dense(d) => {
                let map: Vec<Option<usize>> = (0..n).map(|r| f(r).filter(|&r2| r2 < n)).collect();
                let mut data = vec![ZERO; n * n];
                for c in 0..n {
                    let src = &d[c * n..(c + 1) * n];
                    let dst = &mut data[c * n..(c + 1) * n];
                    for (r, target) in map.iter().enumerate() {
                        if let Some(r2) = *target {
                            dst[r2] = src[r];
                        }
                    }
                }
                TruncatedOperator { dim: n, repr: Repr::Dense(data) }
            }
        }
    }

    /// Moves column `c` to column `f(c)`; right multiplication by a partial
    /// permutation.
    pub fn remap_cols(&self, f: impl Fn(usize) -> Option<usize>) -> Self {
        let n = self.dim;
        match &self.repr {
            Repr::Sparse(_) => {
                let mut trip = Vec::with_capacity(self.nnz());
                self.for_each_entry(|r, c, v| {
                    if let Some(c2) = f(c).filter(|&c2| c2 < n) {
                        trip.push((r, c2, v));
                    }
                });
                Self::from_triplets(n, trip)
            }
            Repr::Dense(d) => {
                let mut data = vec![ZERO; n * n];
                for c in 0..n {
                    if let Some(c2) = f(c).filter(|&c2| c2 < n) {
                        data[c2 * n..(c2 + 1) * n].copy_from_slice(&d[c * n..(c + 1) * n]);
                    }
                }
                TruncatedOperator { dim: n, repr: Repr::Dense(data) }
            }
        }
    }

    /// `g · self` for a generator `g`.
    pub fn gen_mul(&self, g: Letter) -> Self {
        let b = g.bit();
        self.remap_rows(move |r| Some(2 * r + b))
    }

    /// `g* · self`.
    pub fn gen_adj_mul(&self, g: Letter) -> Self {
        let b = g.bit();
        self.remap_rows(move |r| (r % 2 == b).then_some(r / 2))
    }

    /// `self · g`.
    pub fn mul_gen(&self, g: Letter) -> Self {
        let b = g.bit();
        self.remap_cols(move |c| (c % 2 == b).then_some(c / 2))
    }

    /// `self · g*`.
    pub fn mul_gen_adj(&self, g: Letter) -> Self {
        let b = g.bit();
        self.remap_cols(move |c| Some(2 * c + b))
    }

    /// `self · P_W`: keeps the first `window` columns.
    pub fn restrict_cols(&self, window: usize) -> Self {
        self.remap_cols(|c| (c < window).then_some(c))
    }

    /// Leading `size × size` block.
    pub fn top_left(&self, size: usize) -> Self {
        let size = size.min(self.dim);
        match &self.repr {
            Repr::Dense(d) => {
                let mut data = Vec::with_capacity(size * size);
                for c in 0..size {
                    data.extend_from_slice(&d[c * self.dim..c * self.dim + size]);
                }
                TruncatedOperator { dim: size, repr: Repr::Dense(data) }
            }
            Repr::Sparse(_) => {
                let mut trip = Vec::new();
                self.for_each_entry(|r, c, v| {
                    if r < size && c < size {
                        trip.push((r, c, v));
                    }
                });
                Self::from_triplets(size, trip)
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        self.for_each_entry(|_, _, v| m = m.max(v.norm()));
        m
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        self.for_each_entry(|_, _, v| s += v.norm_sqr());
        s.sqrt()
    }

    /// `sqrt(max column sum · max row sum)` of entry moduli, a rigorous upper
    /// bound on the operator norm.
    pub fn schur_bound(&self) -> f64 {
        let mut rows = vec![0.0f64; self.dim];
        let mut cols = vec![0.0f64; self.dim];
        self.for_each_entry(|r, c, v| {
            let a = v.norm();
            rows[r] += a;
            cols[c] += a;
        });
        let fold = |v: Vec<f64>| v.into_iter().fold(0.0f64, f64::max);
        (fold(rows) * fold(cols)).sqrt()
    }

    pub fn op_norm_estimate(&self, cfg: &PowerConfig) -> NormBound {
        power_norm(self, cfg)
    }

    /// Writes nonzero entries as `row,col,re,im` lines with a header.
    pub fn write_triplets(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "row,col,re,im")?;
        let mut err = Ok(());
        self.for_each_entry(|r, c, v| {
            if v != ZERO && err.is_ok() {
                err = writeln!(out, "{r},{c},{},{}", v.re, v.im);
            }
        });
        err?;
        Ok(())
    }
}

impl LinearMap for TruncatedOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.dim;
        match &self.repr {
            Repr::Sparse(s) => {
                for r in 0..n {
                    let mut acc = ZERO;
                    for k in s.row_ptr[r]..s.row_ptr[r + 1] {
                        acc += s.vals[k] * x[s.cols[k]];
                    }
                    y[r] = acc;
                }
            }
            Repr::Dense(d) => {
                y.fill(ZERO);
                for (c, xc) in x.iter().enumerate() {
                    if *xc != ZERO {
                        let col = &d[c * n..(c + 1) * n];
                        y.iter_mut().zip(col).for_each(|(yi, a)| *yi += a * xc);
                    }
                }
            }
        }
    }

    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.dim;
        match &self.repr {
            Repr::Sparse(s) => {
                y.fill(ZERO);
                for r in 0..n {
                    for k in s.row_ptr[r]..s.row_ptr[r + 1] {
                        y[s.cols[k]] += s.vals[k].conj() * x[r];
                    }
                }
            }
            Repr::Dense(d) => {
                for (c, yc) in y.iter_mut().enumerate() {
                    let col = &d[c * n..(c + 1) * n];
                    *yc = col.iter().zip(x).map(|(a, xi)| a.conj() * xi).sum();
                }
            }
        }
    }
}

/// The interleaving isometries on `C^N`.
pub fn make_isometries(dim: usize) -> Result<(TruncatedOperator, TruncatedOperator)> {
    if dim < 2 {
        return Err(Error::invalid(format!("truncation dimension must be at least 2, got {dim}")));
    }
    let gen = |b: usize| TruncatedOperator::from_triplets(dim, (0..dim).map(|k| (2 * k + b, k, ONE)));
    Ok((gen(0), gen(1)))
}

/// Index reached by applying the word (rightmost letter first) to `e_k`, or
/// `None` once it leaves `0..dim`.
fn word_image(word: &Word, k: usize, dim: usize) -> Option<usize> {
    word.letters().iter().rev().try_fold(k, |idx, l| {
        let next = idx.checked_mul(2)?.checked_add(l.bit())?;
        (next < dim).then_some(next)
    })
}

/// Index `k` with `word e_k = e_m`, if `e_m` lies in the range of the word.
fn word_preimage(word: &Word, m: usize) -> Option<usize> {
    word.letters()
        .iter()
        .try_fold(m, |idx, l| (idx % 2 == l.bit()).then_some(idx / 2))
}

/// Image of a symbolic element under `u ↦ U`, `v ↦ V`; equal to the product
/// of the truncated generator matrices, monomial by monomial.
pub fn materialize<C: Coefficient>(x: &AlgebraElement<C>, dim: usize) -> TruncatedOperator {
    let mut trip = Vec::new();
    for (m, c) in x.terms() {
        let coeff = c.to_c64();
        for col in 0..dim {
            if let Some(k) = word_preimage(&m.right, col) {
                if let Some(row) = word_image(&m.left, k, dim) {
                    trip.push((row, col, coeff));
                }
            }
        }
    }
    TruncatedOperator::from_triplets(dim, trip)
}

/// `½ (V x V* + V above U* + U below V* + U x U*)` in one pass. Entry
/// `(p, q)` of the result is half an entry of one input at `(p/2, q/2)`,
/// the input being chosen by the parities of `p` and `q`.
pub fn corner_average(
    below: Option<&TruncatedOperator>,
    x: &TruncatedOperator,
    above: Option<&TruncatedOperator>,
) -> TruncatedOperator {
    let n = x.dim;
    for other in below.iter().chain(above.iter()) {
        x.check_dim(other);
    }
    let half = Complex64::new(0.5, 0.0);
    // source for (row parity, column parity)
    let pick = |pb: usize, qb: usize| match (pb, qb) {
        (1, 0) => above,
        (0, 1) => below,
        _ => Some(x),
    };
    let any_dense = x.is_dense() || below.is_some_and(|b| b.is_dense()) || above.is_some_and(|a| a.is_dense());
    if !any_dense {
        let mut trip = Vec::new();
        for pb in 0..2 {
            for qb in 0..2 {
                if let Some(src) = pick(pb, qb) {
                    src.for_each_entry(|r, c, v| trip.push((2 * r + pb, 2 * c + qb, v * half)));
                }
            }
        }
        return TruncatedOperator::from_triplets(n, trip);
    }
    let dense: Vec<Option<Vec<Complex64>>> = [below, Some(x), above]
        .iter()
        .map(|o| o.map(|m| m.to_col_major()))
        .collect();
    let buf = |pb: usize, qb: usize| -> Option<&Vec<Complex64>> {
        match (pb, qb) {
            (1, 0) => dense[2].as_ref(),
            (0, 1) => dense[0].as_ref(),
            _ => dense[1].as_ref(),
        }
    };
    let mut data = vec![ZERO; n * n];
    for q in 0..n {
        let (qs, qb) = (q / 2, q % 2);
        let out = &mut data[q * n..(q + 1) * n];
        for pb in 0..2 {
            if let Some(src) = buf(pb, qb) {
                let col = &src[qs * n..(qs + 1) * n];
                for (r, val) in col.iter().enumerate().take((n - pb).div_ceil(2)) {
                    out[2 * r + pb] = val * half;
                }
            }
        }
    }
    TruncatedOperator { dim: n, repr: Repr::Dense(data) }
}

/// Largest window on which depth-`depth` words act without truncation.
pub fn safe_window(dim: usize, depth: usize) -> usize {
    if depth >= usize::BITS as usize {
        0
    } else {
        dim >> depth
    }
}

/// Largest norm, over the five defining relations `r`, of
/// `(lhs_r - rhs_r) · materialize(x) · P_W`, with both sides built from
/// truncated generator products.
pub fn boundary_defect<C: Coefficient>(
    x: &AlgebraElement<C>,
    dim: usize,
    window: usize,
    cfg: &PowerConfig,
) -> Result<f64> {
    if window > dim {
        return Err(Error::invalid(format!("window {window} exceeds dimension {dim}")));
    }
    let (u, v) = make_isometries(dim)?;
    let (us, vs) = (u.adjoint(), v.adjoint());
    let id = TruncatedOperator::identity(dim);
    let relations = [
        us.mul(&u).sub(&id),
        vs.mul(&v).sub(&id),
        u.mul(&us).add(&v.mul(&vs)).sub(&id),
        us.mul(&v),
        vs.mul(&u),
    ];
    let xm = materialize(x, dim).restrict_cols(window);
    Ok(relations
        .iter()
        .map(|r| r.mul(&xm).op_norm_estimate(cfg).lower_estimate)
        .fold(0.0, f64::max))
}

/// A linear operator on `C^dim` given by its action.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl PowerConfig {
    pub fn new(tol: f64, max_iter: usize, seed: u64) -> Self {
        PowerConfig { tol, max_iter, seed }
    }

    pub fn identity_grade(seed: u64) -> Self {
        Self::new(IDENTITY_TOL, 5000, seed)
    }

    pub fn solver_grade(seed: u64) -> Self {
        Self::new(SOLVER_TOL, 2000, seed)
    }
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self::solver_grade(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    PowerIteration,
    /// Iteration budget exhausted before the stopping rule fired.
    PowerIterationUnconverged,
    ZeroOperator,
}

/// Result of a norm measurement. `lower_estimate` comes from a Rayleigh
/// quotient and never exceeds the true norm (up to rounding);
/// `upper_certificate`, when present, is a rigorous bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    pub lower_estimate: f64,
    pub upper_certificate: Option<f64>,
    pub method: NormMethod,
    pub iterations: usize,
    /// `‖A*A x - λ² x‖` for the final unit vector.
    pub residual: f64,
}

impl NormBound {
    pub fn with_upper(mut self, upper: f64) -> Self {
        self.upper_certificate = Some(upper);
        self
    }

    pub fn converged(&self) -> bool {
        self.method != NormMethod::PowerIterationUnconverged
    }

    /// False when the estimate exceeds the certificate beyond `slack`.
    pub fn is_consistent(&self, slack: f64) -> bool {
        self.upper_certificate.is_none_or(|u| self.lower_estimate <= u + slack)
    }
}

fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Seeded complex Gaussian unit vector.
pub fn random_unit_vector(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let s = norm2(&x);
    x.iter_mut().for_each(|z| *z /= s);
    x
}

/// Power iteration on `A*A` from a seeded random start. Stops once two
/// successive estimates agree to `tol` relative to the current estimate.
pub fn power_norm(map: &(impl LinearMap + ?Sized), cfg: &PowerConfig) -> NormBound {
    let n = map.dim();
    let mut x = random_unit_vector(n, cfg.seed);
    let mut y = vec![ZERO; n];
    let mut z = vec![ZERO; n];
    let mut prev = f64::NAN;
    let mut est = 0.0;
    let mut residual = 0.0;
    for it in 1..=cfg.max_iter.max(1) {
        map.apply(&x, &mut y);
        est = norm2(&y);
        if est == 0.0 {
            return NormBound {
                lower_estimate: 0.0,
                upper_certificate: None,
                method: NormMethod::ZeroOperator,
                iterations: it,
                residual: 0.0,
            };
        }
        map.apply_adjoint(&y, &mut z);
        let lambda = est * est;
        residual = z.iter().zip(&x).map(|(zi, xi)| (zi - xi * lambda).norm_sqr()).sum::<f64>().sqrt();
        let zn = norm2(&z);
        if (est - prev).abs() <= cfg.tol * est {
            return NormBound {
                lower_estimate: est,
                upper_certificate: None,
                method: NormMethod::PowerIteration,
                iterations: it,
                residual,
            };
        }
        prev = est;
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi = zi / zn);
    }
    NormBound {
        lower_estimate: est,
        upper_certificate: None,
        method: NormMethod::PowerIterationUnconverged,
        iterations: cfg.max_iter.max(1),
        residual,
    }
}
