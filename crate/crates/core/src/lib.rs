//! Exact-arithmetic certificates for membership in `lp` sequence spaces and
//! `Lp[0,1]`, plus the subspace constructions built on top of them.
//!
//! Everything here computes with arbitrary-precision rationals; there is no
//! floating point anywhere in a certificate path. Irrational values (rational
//! powers, p-series sums, geometric series) are represented symbolically by
//! [`numerics::RealExpr`] and evaluated to certified interval enclosures on
//! demand. Decisions are three-valued: an inequality is reported only when an
//! enclosure proves it, and `Inconclusive` is a first-class outcome, never an
//! error and never silently treated as equality.
//!
//! The crate is organised by role:
//!
//! * [`numerics`]: rationals, intervals, symbolic positive reals, certified
//!   comparison, p-series tail bounds.
//! * [`sequences`]: symbolic infinite sequences (finite parts, power-law
//!   blocks, normalized block families, relocated tails), block partitions of
//!   the index set, membership verdicts with divergence certificates.
//! * [`linalg`]: exact rational rank and certified independence of interval
//!   matrices, plus the minimal-independent-head search.
//! * [`spaceability`]: sparse index selection, the relocation operator that
//!   embeds a coefficient space into a sequence space, and the obstruction
//!   reports that show where the construction must stop.
//! * [`lpfun`]: piecewise power functions on `[0,1]` and the interval-based
//!   analogue of the sequence construction.
//! * [`operators`]: non-injective bounded operators between sequence spaces
//!   and the coefficient-indexed family built from masked copies.
//! * [`report`] and [`cli`]: JSON descriptors, certificate reports, and the
//!   command-line front end.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod lpfun;
pub mod numerics;
pub mod operators;
pub mod report;
pub mod sequences;
pub mod spaceability;

pub use error::Error;
pub use numerics::{Comparison, IntervalEnclosure, Rational, RealExpr};

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
