//! Common interface for the two operator kinds: symbolic elements and
//! truncated matrices.

use std::fmt::Debug;

use num_complex::Complex64;

use crate::algebra::{AlgebraElement, Coefficient, Letter};
use crate::trunc::{self, TruncatedOperator};

/// An element of a unital *-algebra with a computable norm bound.
pub trait Operator: Clone + Debug + Send + Sync {
    /// Ambient space; operators can only be combined within one space.
    type Space: Clone + Debug + PartialEq + Send + Sync;

    fn space(&self) -> Self::Space;
    fn scalar(space: &Self::Space, c: Complex64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn scale(&self, c: Complex64) -> Self;
    fn add_scalar(&self, c: Complex64) -> Self;
    fn adjoint(&self) -> Self;
    /// A rigorous upper bound on the operator norm.
    fn norm_upper(&self) -> f64;

    fn zero(space: &Self::Space) -> Self {
        Self::scalar(space, Complex64::new(0.0, 0.0))
    }

    fn identity(space: &Self::Space) -> Self {
        Self::scalar(space, Complex64::new(1.0, 0.0))
    }

    fn commutator(&self, rhs: &Self) -> Self {
        self.mul(rhs).sub(&rhs.mul(self))
    }
}

/// Operators that know the two isometries and can multiply by them cheaply.
pub trait CuntzOperator: Operator {
    fn generator(space: &Self::Space, g: Letter) -> Self;
    /// `g · self`
    fn gen_mul(&self, g: Letter) -> Self;
    /// `g* · self`
    fn gen_adj_mul(&self, g: Letter) -> Self;
    /// `self · g`
    fn mul_gen(&self, g: Letter) -> Self;
    /// `self · g*`
    fn mul_gen_adj(&self, g: Letter) -> Self;

    /// `[g, self]`
    fn gen_commutator(&self, g: Letter) -> Self {
        self.gen_mul(g).sub(&self.mul_gen(g))
    }

    /// `½ (v x v* + v above u* + u below v* + u x u*)`, with missing
    /// neighbours read as zero.
    fn corner_average(below: Option<&Self>, x: &Self, above: Option<&Self>) -> Self {
        use Letter::{U, V};
        let mut acc = x.mul_gen_adj(V).gen_mul(V).add(&x.mul_gen_adj(U).gen_mul(U));
        if let Some(a) = above {
            acc = acc.add(&a.mul_gen_adj(U).gen_mul(V));
        }
        if let Some(b) = below {
            acc = acc.add(&b.mul_gen_adj(V).gen_mul(U));
        }
        acc.scale(Complex64::new(0.5, 0.0))
    }
}

impl<C: Coefficient> Operator for AlgebraElement<C> {
    type Space = ();

    fn space(&self) {}

    fn scalar(_: &(), c: Complex64) -> Self {
        AlgebraElement::scalar(C::from_c64(c))
    }

    fn add(&self, rhs: &Self) -> Self {
        AlgebraElement::add(self, rhs)
    }

    fn sub(&self, rhs: &Self) -> Self {
        AlgebraElement::sub(self, rhs)
    }

    fn mul(&self, rhs: &Self) -> Self {
        AlgebraElement::mul(self, rhs)
    }

    fn scale(&self, c: Complex64) -> Self {
        AlgebraElement::scale(self, &C::from_c64(c))
    }

    fn add_scalar(&self, c: Complex64) -> Self {
        AlgebraElement::add(self, &AlgebraElement::scalar(C::from_c64(c)))
    }

    fn adjoint(&self) -> Self {
        AlgebraElement::adjoint(self)
    }

    fn norm_upper(&self) -> f64 {
        self.l1_norm_bound()
    }
}

impl<C: Coefficient> CuntzOperator for AlgebraElement<C> {
    fn generator(_: &(), g: Letter) -> Self {
        AlgebraElement::generator(g)
    }

    fn gen_mul(&self, g: Letter) -> Self {
        AlgebraElement::generator(g).mul(self)
    }

    fn gen_adj_mul(&self, g: Letter) -> Self {
        AlgebraElement::<C>::generator(g).adjoint().mul(self)
    }

    fn mul_gen(&self, g: Letter) -> Self {
        self.mul(&AlgebraElement::generator(g))
    }

    fn mul_gen_adj(&self, g: Letter) -> Self {
        self.mul(&AlgebraElement::<C>::generator(g).adjoint())
    }
}

impl Operator for TruncatedOperator {
    type Space = usize;

    fn space(&self) -> usize {
        self.dim()
    }

    fn scalar(dim: &usize, c: Complex64) -> Self {
        TruncatedOperator::scalar_identity(*dim, c)
    }

    fn add(&self, rhs: &Self) -> Self {
        TruncatedOperator::add(self, rhs)
    }

    fn sub(&self, rhs: &Self) -> Self {
        TruncatedOperator::sub(self, rhs)
    }

    fn mul(&self, rhs: &Self) -> Self {
        TruncatedOperator::mul(self, rhs)
    }

    fn scale(&self, c: Complex64) -> Self {
        TruncatedOperator::scale(self, c)
    }

    fn add_scalar(&self, c: Complex64) -> Self {
        TruncatedOperator::add_scalar(self, c)
    }

    fn adjoint(&self) -> Self {
        TruncatedOperator::adjoint(self)
    }

    fn norm_upper(&self) -> f64 {
        self.schur_bound()
    }
}

impl CuntzOperator for TruncatedOperator {
    fn generator(dim: &usize, g: Letter) -> Self {
        let (u, v) = trunc::make_isometries(*dim).expect("truncation dimension below 2");
        match g {
            Letter::U => u,
            Letter::V => v,
        }
    }

    fn gen_mul(&self, g: Letter) -> Self {
        TruncatedOperator::gen_mul(self, g)
    }

    fn gen_adj_mul(&self, g: Letter) -> Self {
        TruncatedOperator::gen_adj_mul(self, g)
    }

    fn mul_gen(&self, g: Letter) -> Self {
        TruncatedOperator::mul_gen(self, g)
    }

    fn mul_gen_adj(&self, g: Letter) -> Self {
        TruncatedOperator::mul_gen_adj(self, g)
    }

    fn corner_average(below: Option<&Self>, x: &Self, above: Option<&Self>) -> Self {
        trunc::corner_average(below, x, above)
    }
}
