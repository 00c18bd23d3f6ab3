//! Verification toolkit for k-generalized Pell-Lucas numbers that are
//! concatenations of two repdigits.
//!
//! The crate is split the same way the argument is:
//!
//! - [`numerics`]: adaptive-precision reals with certified comparisons,
//!   exact arithmetic in Q(√5) for golden-ratio identities.
//! - [`sequences`]: exact terms Q_n^(k), the dominant root γ(k), g_k and the
//!   dominant-term estimates.
//! - [`repdigits`]: composing, decomposing and detecting two-run decimals.
//! - [`baker`]: Matveev's bound and the explicit bound pipeline on n.
//! - [`reduction`]: continued fractions and Dujella–Pethő reduction, plus the
//!   full chain that brings n below 250.
//! - [`search`]: exhaustive enumeration reconciled against the expected table.

pub mod baker;
pub mod numerics;
pub mod reduction;
pub mod repdigits;
pub mod search;
pub mod sequences;

pub use numerics::{eval_at_precision, Expr, NumericsError, PrecReal, Sign};
pub use repdigits::RepdigitConcat;
pub use rug::{Float, Integer, Rational};
pub use sequences::PellLucasContext;
