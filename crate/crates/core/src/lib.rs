//! Symbolic and truncated-matrix arithmetic in the Cuntz algebra, with a
//! constructive solver for commutators of prescribed small norm.

pub mod algebra;
pub mod block;
pub mod cli;
pub mod error;
pub mod expr;
pub mod operator;
pub mod pipeline;
pub mod solver;
pub mod trunc;
pub mod verify;

pub use algebra::{AlgebraElement, Element, ExactElement, Letter, Monomial, Word};
pub use error::{Error, Result};
pub use trunc::{NormBound, PowerConfig, TruncatedOperator};
