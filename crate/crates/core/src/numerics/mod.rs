//! Exact scalar arithmetic and certified real-number evaluation.
//!
//! The scalar is an arbitrary-precision rational ([`Rational`]). Values that
//! are not rational (rational powers, p-series sums, geometric series) are
//! kept symbolic as [`RealExpr`] trees and evaluated only to certified
//! interval enclosures ([`IntervalEnclosure`]) whose endpoints are rationals.
//! Refining an enclosure never widens it, and a strict comparison either
//! certifies an inequality or reports [`Comparison::Inconclusive`].

mod interval;
mod rational;
mod realexpr;
mod series;

pub use interval::IntervalEnclosure;
pub use rational::Rational;
pub use realexpr::{pseries_tail_bound, Comparison, RealExpr};
pub use series::{partial_zeta, zeta_tail};

pub(crate) use series::{rat_pow_enclosure, rat_pow_exact};

/// Exponent used by triangle-type estimates: `min(p, 1)`.
///
/// For `p >= 1` the norm itself is subadditive; for `0 < p < 1` only its
/// `p`-th power is, so estimates are formed with this exponent instead.
pub fn triangle_exponent(p: &Rational) -> Rational {
    let one = Rational::one();
    if *p >= one {
        one
    } else {
        p.clone()
    }
}
