//! Symbolic arithmetic in the *-algebra generated by two isometries `u`, `v`
//! obeying
//!
//! ```text
//! u*u = v*v = uu* + vv* = 1,    u*v = v*u = 0.
//! ```
//!
//! Every element is a finite linear combination of monomials `a b*`, where
//! `a` and `b` are words in `u`, `v`. Products of monomials reduce to at most
//! one monomial, so multiplication never needs a rewriting loop. Because the
//! relation `uu* + vv* = 1` lets a monomial be split into two longer ones,
//! raw term maps are not unique; [`AlgebraElement::normal_form`] pads every
//! right word to a common length, where monomials are linearly independent.
//!
//! Nothing here fixes a concrete pair of isometries; see [`crate::trunc`] for
//! a finite-dimensional model.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two generating isometries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    U,
    V,
}

impl Letter {
    pub fn as_char(self) -> char {
        match self {
            Letter::U => 'u',
            Letter::V => 'v',
        }
    }

    /// Low bit contributed by this letter in the interleaving model.
    pub fn bit(self) -> usize {
        match self {
            Letter::U => 0,
            Letter::V => 1,
        }
    }
}

/// A word `w1 w2 ... wl` in the generators, read as an operator product with
/// `w1` leftmost. The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        Word(letters.into_iter().collect())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.0);
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    pub fn push(&self, letter: Letter) -> Word {
        let mut letters = self.0.clone();
        letters.push(letter);
        Word(letters)
    }

    /// If `self = prefix · rest`, returns `rest`.
    pub fn strip_prefix(&self, prefix: &Word) -> Option<Word> {
        self.0.strip_prefix(prefix.0.as_slice()).map(|rest| Word(rest.to_vec()))
    }

    /// All words of length `len`, in lexicographic order.
    pub fn all_of_length(len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| [w.push(Letter::U), w.push(Letter::V)])
                .collect();
        }
        out
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.char_indices()
            .map(|(i, c)| match c {
                'u' => Ok(Letter::U),
                'v' => Ok(Letter::V),
                _ => Err(Error::Parse {
                    position: i,
                    message: format!("unexpected character {c:?} in word"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// The partial isometry `left · right*`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub left: Word,
    pub right: Word,
}

impl Monomial {
    pub fn new(left: Word, right: Word) -> Self {
        Monomial { left, right }
    }

    pub fn identity() -> Self {
        Monomial::default()
    }

    pub fn is_identity(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial::new(self.right.clone(), self.left.clone())
    }

    /// `|left| - |right|`: the grading preserved by every relation.
    pub fn degree(&self) -> isize {
        self.left.len() as isize - self.right.len() as isize
    }

    pub fn depth(&self) -> usize {
        self.left.len().max(self.right.len())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "1");
        }
        write!(f, "{}", self.left)?;
        match self.right.len() {
            0 => Ok(()),
            1 => write!(f, "{}*", self.right),
            _ => write!(f, "({})*", self.right),
        }
    }
}

/// Exact product of two monomials. Writing `m1 = a b*` and `m2 = c d*`, the
/// middle factor `b* c` is a word when `b` is a prefix of `c`, an adjoint word
/// when `c` is a prefix of `b`, and zero otherwise.
pub fn reduce_product(m1: &Monomial, m2: &Monomial) -> Option<Monomial> {
    if let Some(t) = m2.left.strip_prefix(&m1.right) {
        Some(Monomial::new(m1.left.concat(&t), m2.right.clone()))
    } else {
        m1.right
            .strip_prefix(&m2.left)
            .map(|s| Monomial::new(m1.left.clone(), m2.right.concat(&s)))
    }
}

fn nf_depth<C>(terms: &BTreeMap<Monomial, C>) -> usize {
    terms.keys().map(|m| m.right.len()).max().unwrap_or(0)
}

/// Scalar field for [`AlgebraElement`].
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn conj(&self) -> Self;
    fn modulus(&self) -> f64;
    /// Exact image of a double-precision value.
    fn from_c64(c: Complex64) -> Self;
    fn to_c64(&self) -> Complex64;
}

impl Coefficient for Complex64 {
    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn from_c64(c: Complex64) -> Self {
        c
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }
}

/// Gaussian rationals, for identity checks that must hold exactly.
pub type ExactComplex = Complex<BigRational>;

impl Coefficient for ExactComplex {
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn modulus(&self) -> f64 {
        self.to_c64().norm()
    }

    fn from_c64(c: Complex64) -> Self {
        let conv = |x: f64| BigRational::from_float(x).expect("finite coefficient");
        Complex::new(conv(c.re), conv(c.im))
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// A finite linear combination of monomials. Zero coefficients are never
/// stored.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement<C: Coefficient = Complex64> {
    terms: BTreeMap<Monomial, C>,
}

pub type Element = AlgebraElement<Complex64>;
pub type ExactElement = AlgebraElement<ExactComplex>;

impl<C: Coefficient> Default for AlgebraElement<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coefficient> AlgebraElement<C> {
    pub fn zero() -> Self {
        AlgebraElement { terms: BTreeMap::new() }
    }

    pub fn identity() -> Self {
        Self::scalar(C::one())
    }

    pub fn scalar(c: C) -> Self {
        Self::monomial(Monomial::identity(), c)
    }

    pub fn monomial(m: Monomial, c: C) -> Self {
        let mut x = Self::zero();
        x.accumulate(m, c);
        x
    }

    pub fn generator(letter: Letter) -> Self {
        Self::monomial(Monomial::new(Word::from_letters([letter]), Word::empty()), C::one())
    }

    pub fn u() -> Self {
        Self::generator(Letter::U)
    }

    pub fn v() -> Self {
        Self::generator(Letter::V)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut x = Self::zero();
        for (m, c) in terms {
            x.accumulate(m, c);
        }
        x
    }

    fn accumulate(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Number of stored monomials.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.accumulate(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.accumulate(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, s: &C) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), c.clone() * s.clone())))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                if let Some(m) = reduce_product(m1, m2) {
                    out.accumulate(m, c1.clone() * c2.clone());
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| (m.adjoint(), c.conj())))
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.mul(rhs) - &rhs.mul(self)
    }

    pub fn max_right_len(&self) -> usize {
        self.terms.keys().map(|m| m.right.len()).max().unwrap_or(0)
    }

    /// Longest word appearing on either side.
    pub fn depth(&self) -> usize {
        self.terms.keys().map(Monomial::depth).max().unwrap_or(0)
    }

    /// Canonical representative: every right word is padded to the maximal
    /// right length `d` via `a b* = (a u)(b u)* + (a v)(b v)*`.
    pub fn normal_form(&self) -> Self {
        let d = self.max_right_len();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            for pad in Word::all_of_length(d - m.right.len()) {
                out.accumulate(
                    Monomial::new(m.left.concat(&pad), m.right.concat(&pad)),
                    c.clone(),
                );
            }
        }
        out
    }

    /// Shortest form reachable from the normal form by merging
    /// `(a u)(b u)* + (a v)(b v)*` with equal coefficients back into `a b*`.
    /// Equal elements simplify to the same result.
    pub fn simplified(&self) -> Self {
        let nf = self.normal_form();
        let mut terms = nf.terms;
        for level in (1..=nf_depth(&terms)).rev() {
            let candidates: Vec<Monomial> = terms
                .keys()
                .filter(|m| m.right.len() == level && !m.left.is_empty())
                .filter(|m| m.left.letters().last() == Some(&Letter::U) && m.right.letters().last() == Some(&Letter::U))
                .cloned()
                .collect();
            for m in candidates {
                let strip = |w: &Word| Word::from_letters(w.letters()[..w.len() - 1].iter().copied());
                let (a, b) = (strip(&m.left), strip(&m.right));
                let partner = Monomial::new(a.push(Letter::V), b.push(Letter::V));
                match (terms.get(&m), terms.get(&partner)) {
                    (Some(c1), Some(c2)) if c1 == c2 => {
                        let c = c1.clone();
                        terms.remove(&m);
                        terms.remove(&partner);
                        let target = Monomial::new(a, b);
                        let sum = terms.remove(&target).map_or(c.clone(), |old| old + c);
                        if !sum.is_zero() {
                            terms.insert(target, sum);
                        }
                    }
                    _ => {}
                }
            }
        }
        AlgebraElement { terms }
    }

    /// Operator equality in every representation of the relations.
    pub fn equals(&self, other: &Self) -> bool {
        self.sub(other).normal_form().is_zero()
    }

    /// Equality up to an ℓ¹ residual of `tol` in normal form; for floating
    /// coefficients where exact cancellation may fail by rounding.
    pub fn approx_equals(&self, other: &Self, tol: f64) -> bool {
        self.sub(other).normal_form().l1_norm_bound() <= tol
    }

    /// Sum of coefficient moduli. Every monomial has norm at most one, so this
    /// bounds the operator norm from above.
    pub fn l1_norm_bound(&self) -> f64 {
        self.terms.values().map(Coefficient::modulus).fold(0.0, |a, b| a + b)
    }

    /// Drops every term with modulus below `threshold`; returns the reduced
    /// element and the discarded ℓ¹ mass, which bounds the norm of the change.
    pub fn compress(&self, threshold: f64) -> (Self, f64) {
        let mut dropped = 0.0;
        let kept = self
            .terms
            .iter()
            .filter(|(_, c)| {
                let keep = c.modulus() >= threshold;
                if !keep {
                    dropped += c.modulus();
                }
                keep
            })
            .map(|(m, c)| (m.clone(), c.clone()));
        let kept = Self::from_terms(kept.collect::<Vec<_>>());
        (kept, dropped)
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> AlgebraElement<D> {
        AlgebraElement::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// `x ↦ [[u*xu, u*xv], [v*xu, v*xv]]`, an isometric *-isomorphism onto
    /// 2×2 matrices over the algebra.
    pub fn embed_m2(&self) -> [[Self; 2]; 2] {
        let (u, v) = (Self::u(), Self::v());
        let (us, vs) = (u.adjoint(), v.adjoint());
        let sandwich = |l: &Self, r: &Self| &(l * self) * r;
        [
            [sandwich(&us, &u), sandwich(&us, &v)],
            [sandwich(&vs, &u), sandwich(&vs, &v)],
        ]
    }

    /// Inverse of [`Self::embed_m2`]: `u x1 u* + u x2 v* + v x3 u* + v x4 v*`.
    pub fn extract_m2(blocks: &[[Self; 2]; 2]) -> Self {
        let (u, v) = (Self::u(), Self::v());
        let (us, vs) = (u.adjoint(), v.adjoint());
        let sandwich = |l: &Self, x: &Self, r: &Self| &(l * x) * r;
        sandwich(&u, &blocks[0][0], &us)
            + sandwich(&u, &blocks[0][1], &vs)
            + sandwich(&v, &blocks[1][0], &us)
            + sandwich(&v, &blocks[1][1], &vs)
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(m, c)| {
                let z = c.to_c64();
                TermRecord {
                    left: m.left.to_string(),
                    right: m.right.to_string(),
                    re: z.re,
                    im: z.im,
                }
            })
            .collect()
    }

    pub fn from_records(records: &[TermRecord]) -> Result<Self> {
        let mut x = Self::zero();
        for r in records {
            let m = Monomial::new(r.left.parse()?, r.right.parse()?);
            x.accumulate(m, C::from_c64(Complex64::new(r.re, r.im)));
        }
        Ok(x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_records())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<TermRecord> = serde_json::from_str(text)?;
        Self::from_records(&records)
    }
}

/// JSON row of a serialized element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub left: String,
    pub right: String,
    pub re: f64,
    pub im: f64,
}

pub(crate) fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("({}-{}i)", z.re, -z.im)
    } else {
        format!("({}+{}i)", z.re, z.im)
    }
}

impl<C: Coefficient> fmt::Display for AlgebraElement<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let z = c.to_c64();
            match (z == Complex64::new(1.0, 0.0), m.is_identity()) {
                (true, _) => write!(f, "{m}")?,
                (false, true) => write!(f, "{}", format_complex(z))?,
                (false, false) => write!(f, "{} {m}", format_complex(z))?,
            }
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl<C: Coefficient> $trait<&AlgebraElement<C>> for &AlgebraElement<C> {
            type Output = AlgebraElement<C>;
            fn $method(self, rhs: &AlgebraElement<C>) -> AlgebraElement<C> {
                AlgebraElement::$method(self, rhs)
            }
        }
        impl<C: Coefficient> $trait for AlgebraElement<C> {
            type Output = AlgebraElement<C>;
            fn $method(self, rhs: AlgebraElement<C>) -> AlgebraElement<C> {
                AlgebraElement::$method(&self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl<C: Coefficient> Neg for &AlgebraElement<C> {
    type Output = AlgebraElement<C>;
    fn neg(self) -> AlgebraElement<C> {
        self.scale(&-C::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplified_collapses_range_projections() {
        let (u, v) = (Element::u(), Element::v());
        let one = &u * &u.adjoint() + &v * &v.adjoint();
        assert_eq!(one.simplified(), Element::identity());
        let x = u.adjoint() * v.clone() + v.clone() * v.adjoint() * u.clone();
        assert!(x.simplified().equals(&x));
        let y = Element::identity() - &u * &u.adjoint();
        assert_eq!(y.simplified(), &v * &v.adjoint());
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn mono(l: &str, r: &str) -> Monomial {
        Monomial::new(w(l), w(r))
    }

    fn ex(l: &str, r: &str) -> ExactElement {
        ExactElement::monomial(mono(l, r), ExactComplex::one())
    }

    #[test]
    fn reduce_product_cases() {
        assert_eq!(reduce_product(&mono("", "u"), &mono("u", "")), Some(Monomial::identity()));
        assert_eq!(reduce_product(&mono("", "u"), &mono("v", "")), None);
        assert_eq!(reduce_product(&mono("u", "v"), &mono("v", "u")), Some(mono("u", "u")));
        // b = c s: (a b*)(c d*) = a (d s)*
        assert_eq!(reduce_product(&mono("", "uv"), &mono("u", "")), Some(mono("", "v")));
    }

    #[test]
    fn relations_hold_exactly() {
        let one = ExactElement::identity();
        let (u, v) = (ExactElement::u(), ExactElement::v());
        assert!((u.adjoint() * u.clone()).equals(&one));
        assert!((v.adjoint() * v.clone()).equals(&one));
        assert!((&(&u * &u.adjoint()) + &(&v * &v.adjoint())).equals(&one));
        assert!((u.adjoint() * v.clone()).is_zero());
        assert!((v.adjoint() * u.clone()).is_zero());
        assert!((u.adjoint() * u).equals(&(v.adjoint() * v)));
    }

    #[test]
    fn mul_examples() {
        let x = &ex("u", "v") + &ExactElement::scalar(ExactComplex::from_c64(Complex64::new(3.0, -1.0)));
        assert_eq!(ExactElement::identity() * x.clone(), x);
        let s = &ExactElement::u() + &ExactElement::v();
        let two = ExactElement::scalar(ExactComplex::from_c64(Complex64::new(2.0, 0.0)));
        assert!((s.adjoint() * s).equals(&two));
        assert!((ex("u", "u") * ex("v", "v")).is_zero());
    }

    #[test]
    fn adjoint_and_scale() {
        assert_eq!(ex("u", "v").adjoint(), ex("v", "u"));
        let x = ex("uv", "v");
        assert!(x.scale(&ExactComplex::zero()).is_zero());
        let z = Element::scalar(Complex64::new(1.0, 2.0)) * Element::u();
        assert_eq!(z.adjoint().coefficient(&mono("", "u")), Complex64::new(1.0, -2.0));
    }

    #[test]
    fn normal_form_examples() {
        let x = &ExactElement::identity() + &ex("u", "v");
        let nf = x.normal_form();
        assert_eq!(nf.coefficient(&mono("u", "u")), ExactComplex::one());
        assert_eq!(nf.coefficient(&mono("v", "v")), ExactComplex::one());
        assert_eq!(nf.coefficient(&mono("u", "v")), ExactComplex::one());
        assert_eq!(nf.len(), 3);
        assert_eq!(ex("u", "u").normal_form(), ex("u", "u"));
        assert!(ExactElement::identity().equals(&(&ex("u", "u") + &ex("v", "v"))));
    }

    #[test]
    fn equals_examples() {
        assert!(!ex("u", "v").equals(&ex("v", "u")));
        let x = &ex("uv", "") + &ex("", "vv");
        assert!(x.equals(&x));
        // u = uu u* + uv v*
        assert!(ex("u", "").equals(&(&ex("uu", "u") + &ex("uv", "v"))));
    }

    #[test]
    fn l1_bounds() {
        assert_eq!(Element::u().l1_norm_bound(), 1.0);
        assert_eq!((Element::u() + Element::v()).l1_norm_bound(), 2.0);
        assert_eq!(Element::zero().l1_norm_bound(), 0.0);
    }

    #[test]
    fn compress_reports_dropped_mass() {
        let x = Element::from_terms([
            (mono("u", ""), Complex64::new(1.0, 0.0)),
            (mono("v", ""), Complex64::new(1e-9, 0.0)),
            (mono("", "v"), Complex64::new(0.0, -2e-9)),
        ]);
        let (kept, dropped) = x.compress(1e-6);
        assert_eq!(kept, Element::u());
        assert!((dropped - 3e-9).abs() < 1e-20);
    }

    #[test]
    fn m2_embedding() {
        let e = ExactElement::identity().embed_m2();
        assert!(e[0][0].equals(&ExactElement::identity()));
        assert!(e[0][1].is_zero() && e[1][0].is_zero());
        assert!(e[1][1].equals(&ExactElement::identity()));

        let z = ExactElement::zero();
        let blocks = [[ExactElement::identity(), z.clone()], [z.clone(), z]];
        assert_eq!(ExactElement::extract_m2(&blocks), ex("u", "u"));

        let three = ExactElement::scalar(ExactComplex::from_c64(Complex64::new(3.0, 0.0)));
        let x = &ex("u", "v") + &(&three * &ex("v", "v"));
        assert!(ExactElement::extract_m2(&x.embed_m2()).equals(&x));
    }

    #[test]
    fn json_round_trip() {
        let x = Element::from_terms([
            (mono("uv", "v"), Complex64::new(0.5, -1.25)),
            (mono("", ""), Complex64::new(2.0, 0.0)),
        ]);
        let text = x.to_json().unwrap();
        assert!(text.contains("\"left\":\"uv\""));
        assert_eq!(Element::from_json(&text).unwrap(), x);
    }

    #[test]
    fn display_is_readable() {
        let x = Element::from_terms([
            (mono("u", "uv"), Complex64::new(2.0, 0.0)),
            (mono("", ""), Complex64::new(0.0, 1.0)),
        ]);
        assert_eq!(x.to_string(), "1i + 2 u(uv)*");
    }
}
