//! `n × n` matrices whose entries are operators, and the two ansatz
//! matrices `X`, `D` built from a tuple `b`.
//!
//! Block indices in the public API are 1-based, matching the usual way the
//! ansatz is written down; storage is row-major.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Element, Letter, TermRecord};
use crate::error::{Error, Result};
use crate::operator::{CuntzOperator, Operator};
use crate::trunc::{power_norm, LinearMap, NormBound, PowerConfig, TruncatedOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One entry of a block matrix. Scalar multiples of the identity stay
/// scalars until something forces them to be expanded.
#[derive(Clone, Debug)]
pub enum Block<E> {
    Zero,
    Scalar(Complex64),
    Op(E),
}

impl<E: Operator> Block<E> {
    pub fn is_zero(&self) -> bool {
        matches!(self, Block::Zero) || matches!(self, Block::Scalar(c) if *c == ZERO)
    }

    pub fn expand(&self, space: &E::Space) -> E {
        match self {
            Block::Zero => E::zero(space),
            Block::Scalar(c) => E::scalar(space, *c),
            Block::Op(e) => e.clone(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        match (self, rhs) {
            (Block::Zero, x) | (x, Block::Zero) => x.clone(),
            (Block::Scalar(a), Block::Scalar(b)) => Block::Scalar(a + b),
            (Block::Scalar(a), Block::Op(e)) | (Block::Op(e), Block::Scalar(a)) => Block::Op(e.add_scalar(*a)),
            (Block::Op(a), Block::Op(b)) => Block::Op(a.add(b)),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-ONE)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        match self {
            Block::Zero => Block::Zero,
            _ if s == ZERO => Block::Zero,
            Block::Scalar(a) => Block::Scalar(a * s),
            Block::Op(e) => Block::Op(e.scale(s)),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        match (self, rhs) {
            (Block::Zero, _) | (_, Block::Zero) => Block::Zero,
            (Block::Scalar(a), Block::Scalar(b)) => Block::Scalar(a * b),
            (Block::Scalar(a), Block::Op(e)) | (Block::Op(e), Block::Scalar(a)) => Block::Op(e.scale(*a)),
            (Block::Op(a), Block::Op(b)) => Block::Op(a.mul(b)),
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Block::Zero => Block::Zero,
            Block::Scalar(a) => Block::Scalar(a.conj()),
            Block::Op(e) => Block::Op(e.adjoint()),
        }
    }

    /// Upper bound on the entry norm.
    pub fn norm_upper(&self) -> f64 {
        match self {
            Block::Zero => 0.0,
            Block::Scalar(c) => c.norm(),
            Block::Op(e) => e.norm_upper(),
        }
    }
}

/// Which elementary bound produced a block-norm upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockBoundKind {
    /// Sum of all entry bounds.
    EntrySum,
    /// `sqrt(max row sum · max column sum)` of entry bounds.
    RowColumn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockBound {
    pub value: f64,
    pub kind: BlockBoundKind,
}

/// An `n × n` operator matrix over a common space.
#[derive(Clone, Debug)]
pub struct BlockMatrix<E: Operator> {
    n: usize,
    space: E::Space,
    entries: Vec<Block<E>>,
}

impl<E: Operator> BlockMatrix<E> {
    pub fn zeros(n: usize, space: E::Space) -> Self {
        BlockMatrix { n, space, entries: vec![Block::Zero; n * n] }
    }

    pub fn identity(n: usize, space: E::Space) -> Self {
        let mut m = Self::zeros(n, space);
        for i in 1..=n {
            m.set(i, i, Block::Scalar(ONE));
        }
        m
    }

    /// Diagonal matrix of scalars.
    pub fn scalar_diagonal(space: E::Space, diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), space);
        for (k, d) in diag.iter().enumerate() {
            m.set(k + 1, k + 1, Block::Scalar(*d));
        }
        m
    }

    pub fn from_fn(n: usize, space: E::Space, f: impl Fn(usize, usize) -> Block<E>) -> Self {
        let entries = (0..n * n).map(|k| f(k / n + 1, k % n + 1)).collect();
        BlockMatrix { n, space, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &E::Space {
        &self.space
    }

    /// Entry `(i, j)`, 1-based.
    pub fn get(&self, i: usize, j: usize) -> &Block<E> {
        assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j), "block index ({i},{j}) out of range");
        &self.entries[(i - 1) * self.n + (j - 1)]
    }

    pub fn set(&mut self, i: usize, j: usize, b: Block<E>) {
        assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j), "block index ({i},{j}) out of range");
        if let Block::Op(e) = &b {
            assert_eq!(e.space(), self.space, "block entry from a different space");
        }
        self.entries[(i - 1) * self.n + (j - 1)] = b;
    }

    /// Entry `(i, j)` as an operator.
    pub fn expanded(&self, i: usize, j: usize) -> E {
        self.get(i, j).expand(&self.space)
    }

    fn check_compatible(&self, rhs: &Self) -> Result<()> {
        if self.n != rhs.n || self.space != rhs.space {
            return Err(Error::DimensionMismatch(format!(
                "block matrices {}x{} over {:?} and {}x{} over {:?}",
                self.n, self.n, self.space, rhs.n, rhs.n, rhs.space
            )));
        }
        Ok(())
    }

    fn zip(&self, rhs: &Self, f: impl Fn(&Block<E>, &Block<E>) -> Block<E>) -> Result<Self> {
        self.check_compatible(rhs)?;
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| f(a, b)).collect();
        Ok(BlockMatrix { n: self.n, space: self.space.clone(), entries })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip(rhs, Block::add)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip(rhs, Block::sub)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|_, _, b| b.scale(s))
    }

    pub fn map(&self, f: impl Fn(usize, usize, &Block<E>) -> Block<E>) -> Self {
        let n = self.n;
        let entries = self.entries.iter().enumerate().map(|(k, b)| f(k / n + 1, k % n + 1, b)).collect();
        BlockMatrix { n, space: self.space.clone(), entries }
    }

    /// Block product; output blocks are computed in parallel.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        let n = self.n;
        let entries = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n, k % n);
                (0..n).fold(Block::Zero, |acc, l| {
                    let a = &self.entries[i * n + l];
                    let b = &rhs.entries[l * n + j];
                    if a.is_zero() || b.is_zero() {
                        acc
                    } else {
                        acc.add(&a.mul(b))
                    }
                })
            })
            .collect();
        Ok(BlockMatrix { n, space: self.space.clone(), entries })
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, self.space.clone(), |i, j| self.get(j, i).adjoint())
    }

    /// Block norm bound from per-entry bounds supplied by `entry_bound`.
    pub fn norm_upper_with(&self, entry_bound: impl Fn(&Block<E>) -> f64) -> BlockBound {
        let n = self.n;
        let bounds: Vec<f64> = self.entries.iter().map(entry_bound).collect();
        let total: f64 = bounds.iter().sum();
        let row_max = (0..n).map(|i| bounds[i * n..(i + 1) * n].iter().sum::<f64>()).fold(0.0, f64::max);
        let col_max = (0..n).map(|j| (0..n).map(|i| bounds[i * n + j]).sum::<f64>()).fold(0.0, f64::max);
        let rc = (row_max * col_max).sqrt();
        if rc <= total {
            BlockBound { value: rc, kind: BlockBoundKind::RowColumn }
        } else {
            BlockBound { value: total, kind: BlockBoundKind::EntrySum }
        }
    }

    /// Block norm bound from the entries' own certificates.
    pub fn norm_upper(&self) -> BlockBound {
        self.norm_upper_with(Block::norm_upper)
    }
}

/// `[A, B] = AB - BA`.
pub fn commutator<E: Operator>(a: &BlockMatrix<E>, b: &BlockMatrix<E>) -> Result<BlockMatrix<E>> {
    a.mul(b)?.sub(&b.mul(a)?)
}

/// The matrix `X`: ones on the subdiagonal and `δ b_i` in the last column.
pub fn build_x<E: Operator>(b: &[E], delta: f64, space: E::Space) -> Result<BlockMatrix<E>> {
    let n = b.len();
    check_ansatz(n, delta)?;
    let d = Complex64::new(delta, 0.0);
    let mut m = BlockMatrix::zeros(n, space);
    for i in 2..=n {
        m.set(i, i - 1, Block::Scalar(ONE));
    }
    for (k, bi) in b.iter().enumerate() {
        let i = k + 1;
        m.set(i, n, m.get(i, n).add(&Block::Op(bi.scale(d))));
    }
    Ok(m)
}

/// The matrix `D`: `u/δ` on the subdiagonal, `v/δ` on the diagonal, `i · 1`
/// at `(i, i+1)` and `b_i u` in the last column.
///
/// The last column carries `b_i u` without a factor `δ`; this is what
/// `D = (diag(v) + X diag(u)) / δ + N` gives and what makes the commutator
/// formula hold (see the tests).
pub fn build_d<E: Operator>(u: &E, v: &E, b: &[E], delta: f64) -> Result<BlockMatrix<E>> {
    let n = b.len();
    check_ansatz(n, delta)?;
    let space = u.space();
    if v.space() != space || b.iter().any(|x| x.space() != space) {
        return Err(Error::DimensionMismatch("ansatz entries from different spaces".into()));
    }
    let inv = Complex64::new(1.0 / delta, 0.0);
    let (u_s, v_s) = (u.scale(inv), v.scale(inv));
    let mut m = BlockMatrix::zeros(n, space);
    for i in 1..=n {
        m.set(i, i, Block::Op(v_s.clone()));
        if i >= 2 {
            m.set(i, i - 1, Block::Op(u_s.clone()));
        }
        if i < n {
            m.set(i, i + 1, Block::Scalar(Complex64::new(i as f64, 0.0)));
        }
    }
    for (k, bi) in b.iter().enumerate() {
        let i = k + 1;
        m.set(i, n, m.get(i, n).add(&Block::Op(bi.mul(u))));
    }
    Ok(m)
}

/// `build_d` for operators that provide the generators themselves, using a
/// cheap right multiplication by `u` for the last column.
pub fn build_d_cuntz<E: CuntzOperator>(b: &[E], delta: f64, space: E::Space) -> Result<BlockMatrix<E>> {
    let u = E::generator(&space, Letter::U);
    let v = E::generator(&space, Letter::V);
    let n = b.len();
    check_ansatz(n, delta)?;
    let zeros = vec![E::zero(&space); n];
    let mut m = build_d(&u, &v, &zeros, delta)?;
    for (k, bi) in b.iter().enumerate() {
        let i = k + 1;
        m.set(i, n, m.get(i, n).add(&Block::Op(bi.mul_gen(Letter::U))));
    }
    Ok(m)
}

fn check_ansatz(n: usize, delta: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("block size must be at least 2, got {n}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// `S M S^{-1}` for `S = diag(μ^{n-1}, …, μ, 1)`: entry `(i, j)` picks up
/// `μ^{j-i}`.
pub fn similarity_scale<E: Operator>(m: &BlockMatrix<E>, mu: f64) -> BlockMatrix<E> {
    m.map(|i, j, b| b.scale(Complex64::new(mu.powi(j as i32 - i as i32), 0.0)))
}

/// `(D_μ, X_μ) = (S D S^{-1} / μ, μ S X S^{-1})`.
pub fn conjugate_scale<E: Operator>(
    d: &BlockMatrix<E>,
    x: &BlockMatrix<E>,
    mu: f64,
) -> Result<(BlockMatrix<E>, BlockMatrix<E>)> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("mu must be positive, got {mu}")));
    }
    let dm = similarity_scale(d, mu).scale(Complex64::new(1.0 / mu, 0.0));
    let xm = similarity_scale(x, mu).scale(Complex64::new(mu, 0.0));
    Ok((dm, xm))
}

/// Matrix-free action of a truncated block matrix on `C^{nN}`, optionally
/// composed with the projection onto the first `window` coordinates of
/// every block.
pub struct BlockAction<'a> {
    m: &'a BlockMatrix<TruncatedOperator>,
    window: Option<usize>,
}

impl<'a> BlockAction<'a> {
    pub fn new(m: &'a BlockMatrix<TruncatedOperator>) -> Self {
        BlockAction { m, window: None }
    }

    pub fn windowed(m: &'a BlockMatrix<TruncatedOperator>, window: usize) -> Self {
        BlockAction { m, window: Some(window) }
    }
}

fn apply_block(m: &BlockMatrix<TruncatedOperator>, x: &[Complex64], y: &mut [Complex64], adjoint: bool) {
    let (n, dim) = (m.n, m.space);
    let mut tmp = vec![ZERO; dim];
    y.fill(ZERO);
    for i in 0..n {
        for j in 0..n {
            // y_i += M_ij x_j, or y_j += M_ij^* x_i for the adjoint
            let (src, dst) = if adjoint { (i, j) } else { (j, i) };
            let xs = &x[src * dim..(src + 1) * dim];
            let out = &mut y[dst * dim..(dst + 1) * dim];
            match &m.entries[i * n + j] {
                Block::Zero => {}
                Block::Scalar(c) => {
                    let c = if adjoint { c.conj() } else { *c };
                    out.iter_mut().zip(xs).for_each(|(o, a)| *o += c * a);
                }
                Block::Op(e) => {
                    if adjoint {
                        e.apply_adjoint(xs, &mut tmp);
                    } else {
                        e.apply(xs, &mut tmp);
                    }
                    out.iter_mut().zip(&tmp).for_each(|(o, a)| *o += a);
                }
            }
        }
    }
}

fn project(window: Option<usize>, dim: usize, x: &mut [Complex64]) {
    if let Some(w) = window {
        for block in x.chunks_mut(dim) {
            block[w.min(dim)..].fill(ZERO);
        }
    }
}

impl LinearMap for BlockAction<'_> {
    fn dim(&self) -> usize {
        self.m.n * self.m.space
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut xp = x.to_vec();
        project(self.window, self.m.space, &mut xp);
        apply_block(self.m, &xp, y, false);
    }

    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        apply_block(self.m, x, y, true);
        project(self.window, self.m.space, y);
    }
}

/// Action of `A B - B A - c·1` without forming the products, optionally
/// restricted to the first `window` coordinates of each block on the right.
pub struct CommutatorAction<'a> {
    a: &'a BlockMatrix<TruncatedOperator>,
    b: &'a BlockMatrix<TruncatedOperator>,
    shift: Complex64,
    window: Option<usize>,
}

impl<'a> CommutatorAction<'a> {
    pub fn new(
        a: &'a BlockMatrix<TruncatedOperator>,
        b: &'a BlockMatrix<TruncatedOperator>,
        shift: Complex64,
        window: Option<usize>,
    ) -> Result<Self> {
        a.check_compatible(b)?;
        Ok(CommutatorAction { a, b, shift, window })
    }

    fn run(&self, x: &[Complex64], y: &mut [Complex64], adjoint: bool) {
        // (AB - BA)* = B*A* - A*B*, so the adjoint swaps the roles
        let (first, second) = (self.a, self.b);
        let len = x.len();
        let mut t = vec![ZERO; len];
        let mut ab = vec![ZERO; len];
        let mut ba = vec![ZERO; len];
        apply_block(second, x, &mut t, adjoint);
        apply_block(first, &t, &mut ab, adjoint);
        apply_block(first, x, &mut t, adjoint);
        apply_block(second, &t, &mut ba, adjoint);
        let s = if adjoint { self.shift.conj() } else { self.shift };
        let sign = if adjoint { -1.0 } else { 1.0 };
        for k in 0..len {
            y[k] = (ab[k] - ba[k]) * sign - s * x[k];
        }
    }
}

impl LinearMap for CommutatorAction<'_> {
    fn dim(&self) -> usize {
        self.a.n * self.a.space
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut xp = x.to_vec();
        project(self.window, self.a.space, &mut xp);
        self.run(&xp, y, false);
    }

    fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.run(x, y, true);
        project(self.window, self.a.space, y);
    }
}

/// Power-iteration estimate of the block operator norm, with the entry
/// certificate bound attached.
pub fn block_norm_estimate(m: &BlockMatrix<TruncatedOperator>, cfg: &PowerConfig) -> NormBound {
    power_norm(&BlockAction::new(m), cfg).with_upper(m.norm_upper().value)
}

/// As [`block_norm_estimate`], for `M · (P_W ⊕ … ⊕ P_W)`.
pub fn block_norm_estimate_windowed(m: &BlockMatrix<TruncatedOperator>, window: usize, cfg: &PowerConfig) -> NormBound {
    let restricted = m.map(|_, _, b| match b {
        Block::Zero => Block::Zero,
        other => Block::Op(other.expand(&m.space).restrict_cols(window)),
    });
    power_norm(&BlockAction::windowed(m, window), cfg).with_upper(restricted.norm_upper().value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockRecord {
    Scalar { i: usize, j: usize, re: f64, im: f64 },
    Element { i: usize, j: usize, terms: Vec<TermRecord> },
}

impl BlockMatrix<Element> {
    /// Nonzero entries with their 1-based positions.
    pub fn to_records(&self) -> Vec<BlockRecord> {
        let mut out = Vec::new();
        for i in 1..=self.n {
            for j in 1..=self.n {
                match self.get(i, j) {
                    Block::Zero => {}
                    Block::Scalar(c) => out.push(BlockRecord::Scalar { i, j, re: c.re, im: c.im }),
                    Block::Op(e) => out.push(BlockRecord::Element { i, j, terms: e.to_records() }),
                }
            }
        }
        out
    }

    pub fn from_records(n: usize, records: &[BlockRecord]) -> Result<Self> {
        let mut m = BlockMatrix::zeros(n, ());
        for r in records {
            let (i, j, b) = match r {
                BlockRecord::Scalar { i, j, re, im } => (*i, *j, Block::Scalar(Complex64::new(*re, *im))),
                BlockRecord::Element { i, j, terms } => (*i, *j, Block::Op(Element::from_records(terms)?)),
            };
            if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
                return Err(Error::invalid(format!("block index ({i},{j}) outside 1..={n}")));
            }
            m.set(i, j, b);
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&serde_json::json!({ "n": self.n, "entries": self.to_records() }))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            n: usize,
            entries: Vec<BlockRecord>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        Self::from_records(doc.n, &doc.entries)
    }
}

impl BlockMatrix<TruncatedOperator> {
    /// Writes `i,j,row,col,re,im` lines; scalar blocks are expanded.
    pub fn write_triplets(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "i,j,row,col,re,im")?;
        for i in 1..=self.n {
            for j in 1..=self.n {
                let mut err = Ok(());
                self.expanded(i, j).for_each_entry(|r, c, v| {
                    if v != ZERO && err.is_ok() {
                        err = writeln!(out, "{i},{j},{r},{c},{},{}", v.re, v.im);
                    }
                });
                err?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Element;
    use crate::trunc::materialize;

    fn sc(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn close(a: &TruncatedOperator, b: &TruncatedOperator, tol: f64) -> bool {
        a.sub(b).max_abs() <= tol
    }

    #[test]
    fn x_small_cases() {
        let sp = 4usize;
        let zero = vec![TruncatedOperator::zeros(sp); 2];
        let x = build_x(&zero, 1.0, sp).unwrap();
        for (i, j) in [(1, 1), (1, 2), (2, 2)] {
            assert_eq!(x.expanded(i, j).max_abs(), 0.0);
        }
        assert!(matches!(x.get(2, 1), Block::Scalar(c) if *c == ONE));
        let b: Vec<_> = (0..3).map(|s| TruncatedOperator::random_gaussian(sp, s)).collect();
        let x = build_x(&b, 0.25, sp).unwrap();
        assert!(matches!(x.get(2, 1), Block::Scalar(c) if *c == ONE));
        assert!(x.get(2, 2).is_zero());
        assert!(close(&x.expanded(2, 3), &b[1].scale(sc(0.25)), 0.0));
        assert!(build_x(&b[..1], 1.0, sp).is_err());
        assert!(build_x(&b, 0.0, sp).is_err());
    }

    #[test]
    fn d_zero_tuple() {
        let u = Element::u();
        let v = Element::v();
        let d = build_d(&u, &v, &vec![Element::zero(); 3], 1.0).unwrap();
        let expect = [[v.clone(), Element::identity(), Element::zero()],
            [u.clone(), v.clone(), Element::scalar(sc(2.0))],
            [Element::zero(), u.clone(), v.clone()]];
        for i in 1..=3 {
            for j in 1..=3 {
                assert!(d.expanded(i, j).equals(&expect[i - 1][j - 1]), "({i},{j})");
            }
        }
    }

    #[test]
    fn d_decomposition() {
        let sp = 6usize;
        let n = 4;
        let delta = 0.3;
        let u = TruncatedOperator::random_gaussian(sp, 1);
        let v = TruncatedOperator::random_gaussian(sp, 2);
        let b: Vec<_> = (0..n).map(|s| TruncatedOperator::random_gaussian(sp, 10 + s as u64)).collect();
        let d = build_d(&u, &v, &b, delta).unwrap();
        let x = build_x(&b, delta, sp).unwrap();
        let diag = |e: &TruncatedOperator| BlockMatrix::from_fn(n, sp, |i, j| if i == j { Block::Op(e.clone()) } else { Block::Zero });
        let nil = BlockMatrix::from_fn(n, sp, |i, j| if j == i + 1 { Block::Scalar(sc(i as f64)) } else { Block::Zero });
        let rhs = diag(&v).add(&x.mul(&diag(&u)).unwrap()).unwrap().scale(sc(1.0 / delta)).add(&nil).unwrap();
        for i in 1..=n {
            for j in 1..=n {
                assert!(close(&d.expanded(i, j), &rhs.expanded(i, j), 1e-12), "({i},{j})");
            }
        }
    }

    #[test]
    fn commutator_trivial() {
        let sp = 5usize;
        let a = BlockMatrix::from_fn(3, sp, |i, j| Block::Op(TruncatedOperator::random_gaussian(sp, (i * 3 + j) as u64)));
        let c = commutator(&a, &a).unwrap();
        let c2 = commutator(&BlockMatrix::identity(3, sp), &a).unwrap();
        for i in 1..=3 {
            for j in 1..=3 {
                assert!(c.expanded(i, j).max_abs() < 1e-12);
                assert!(c2.expanded(i, j).max_abs() == 0.0);
            }
        }
        assert!(commutator(&a, &BlockMatrix::identity(2, sp)).is_err());
    }

    #[test]
    fn conjugation_is_similarity() {
        let sp = 4usize;
        let n = 3;
        let mu = 0.5;
        let s = BlockMatrix::<TruncatedOperator>::scalar_diagonal(sp, &[sc(0.25), sc(0.5), sc(1.0)]);
        let si = BlockMatrix::<TruncatedOperator>::scalar_diagonal(sp, &[sc(4.0), sc(2.0), sc(1.0)]);
        let m = BlockMatrix::from_fn(n, sp, |i, j| Block::Op(TruncatedOperator::random_gaussian(sp, (i * 7 + j) as u64)));
        let direct = s.mul(&m).unwrap().mul(&si).unwrap();
        let scaled = similarity_scale(&m, mu);
        for i in 1..=n {
            for j in 1..=n {
                assert!(close(&direct.expanded(i, j), &scaled.expanded(i, j), 1e-13));
            }
        }
        let (d1, x1) = conjugate_scale(&m, &m, 1.0).unwrap();
        assert!(close(&d1.expanded(2, 3), &m.expanded(2, 3), 0.0));
        assert!(close(&x1.expanded(3, 1), &m.expanded(3, 1), 0.0));
        assert!(conjugate_scale(&m, &m, 0.0).is_err());
    }

    #[test]
    fn identity_bounds_and_estimates() {
        let sp = 16usize;
        let id = BlockMatrix::<TruncatedOperator>::identity(3, sp);
        let bound = id.norm_upper();
        assert_eq!(bound.value, 1.0);
        assert_eq!(bound.kind, BlockBoundKind::RowColumn);
        let cfg = PowerConfig::identity_grade(1);
        assert!((block_norm_estimate(&id, &cfg).lower_estimate - 1.0).abs() < 1e-9);
        let x = build_x(&vec![TruncatedOperator::zeros(sp); 4], 0.1, sp).unwrap();
        assert!((block_norm_estimate(&x, &cfg).lower_estimate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn commutator_action_matches_products() {
        let sp = 8usize;
        let n = 3;
        let a = BlockMatrix::from_fn(n, sp, |i, j| if i + j == 4 { Block::Scalar(sc(i as f64)) } else { Block::Op(TruncatedOperator::random_gaussian(sp, (i + 5 * j) as u64)) });
        let b = BlockMatrix::from_fn(n, sp, |i, j| if i == j { Block::Zero } else { Block::Op(TruncatedOperator::random_gaussian(sp, (40 + i * j) as u64)) });
        let explicit = commutator(&a, &b).unwrap().sub(&BlockMatrix::identity(n, sp)).unwrap();
        let cfg = PowerConfig::identity_grade(2);
        let e1 = block_norm_estimate(&explicit, &cfg).lower_estimate;
        let act = CommutatorAction::new(&a, &b, ONE, None).unwrap();
        let e2 = power_norm(&act, &cfg).lower_estimate;
        assert!((e1 - e2).abs() < 1e-6 * e1);
        let w = 5;
        let e3 = block_norm_estimate_windowed(&explicit, w, &cfg).lower_estimate;
        let e4 = power_norm(&CommutatorAction::new(&a, &b, ONE, Some(w)).unwrap(), &cfg).lower_estimate;
        assert!((e3 - e4).abs() < 1e-6 * e3);
    }

    #[test]
    fn symbolic_json_roundtrip() {
        let d = build_d(&Element::u(), &Element::v(), &[Element::u(), Element::v().adjoint()], 0.5).unwrap();
        let back = BlockMatrix::from_json(&d.to_json().unwrap()).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                assert!(back.expanded(i, j).equals(&d.expanded(i, j)));
            }
        }
    }

    #[test]
    fn cuntz_builder_matches_generic() {
        let sp = 16usize;
        let b: Vec<_> = (0..3).map(|s| TruncatedOperator::random_gaussian(sp, s)).collect();
        let u = materialize(&Element::u(), sp);
        let v = materialize(&Element::v(), sp);
        let d1 = build_d(&u, &v, &b, 0.1).unwrap();
        let d2 = build_d_cuntz(&b, 0.1, sp).unwrap();
        for i in 1..=3 {
            for j in 1..=3 {
                assert!(close(&d1.expanded(i, j), &d2.expanded(i, j), 1e-12));
            }
        }
    }
}
