//! The block-family construction of a sequence that is p-summable but
//! q-summable for no exponent below p.
//!
//! Block `k` carries the power law `r^(-e_k)` with `e_k = 1/(p - 1/k)`,
//! normalized by `s_k = 2^(-k) * zeta(p*e_k)^(-1/p)` so its p-th power sums
//! to exactly `2^(-kp)`. Summing the blocks from the first index where
//! `p - 1/k` is positive yields a sequence whose p-th power sum is an exact
//! geometric value, while for any `q < p` some single block already fails
//! q-summability because `q * e_k <= 1` once `1/k <= p - q`.

use num_traits::ToPrimitive;

use crate::error::Error;
use crate::numerics::{Rational, RealExpr};

use super::partition::BlockPartition;
use super::seq::{ScaledPart, Shape, SymbolicSequence};

/// Smallest block index `k` with `p - 1/k > 0`; blocks start there.
pub fn first_escape_block(p: &Rational) -> crate::Result<u32> {
    if !p.is_positive() {
        return Err(Error::Precondition(format!(
            "summability exponent must be positive, got {p}"
        )));
    }
    let k0 = p.recip()?.floor_int() + 1u32;
    k0.to_u32().ok_or_else(|| Error::InvalidConstruction(format!(
        "first usable block index for p = {p} overflows u32"
    )))
}

/// `e_k = 1/(p - 1/k)`; requires `p - 1/k > 0`.
pub(crate) fn family_block_exponent(p: &Rational, k: u32) -> crate::Result<Rational> {
    if k < 1 {
        return Err(Error::Precondition("block indices are 1-based".into()));
    }
    let diff = p - &Rational::new(1, k as i64);
    if !diff.is_positive() {
        return Err(Error::Precondition(format!(
            "block {k} needs p - 1/k > 0, got p = {p}"
        )));
    }
    diff.recip()
}

/// `s_k = 2^(-k) * zeta(p * e_k)^(-1/p)`, the normalization making block
/// `k`'s p-th power sum exactly `2^(-kp)`.
pub(crate) fn family_block_scale(p: &Rational, k: u32) -> crate::Result<RealExpr> {
    let e = family_block_exponent(p, k)?;
    let zeta = RealExpr::pseries(p * &e)?;
    Ok(RealExpr::product(vec![
        RealExpr::from_rational(Rational::pow2_neg(k))?,
        RealExpr::pow(zeta, -&p.recip()?)?,
    ]))
}

/// The full witness: all normalized blocks from the first usable index,
/// laid out along the diagonal partition.
pub fn witness_vector(p: &Rational) -> crate::Result<SymbolicSequence> {
    let k0 = first_escape_block(p)?;
    SymbolicSequence::new(
        p.clone(),
        vec![ScaledPart::new(
            Rational::one(),
            RealExpr::one(),
            Shape::Family {
                partition: BlockPartition::diagonal(),
                k0,
            },
        )],
    )
}

/// A single normalized block `y^(k)`: `s_k * r^(-e_k)` along block `k` of
/// the diagonal partition, zero elsewhere.
pub fn normalized_block_vector(p: &Rational, k: u32) -> crate::Result<SymbolicSequence> {
    let exponent = family_block_exponent(p, k)?;
    let scale = family_block_scale(p, k)?;
    SymbolicSequence::new(
        p.clone(),
        vec![ScaledPart::new(
            Rational::one(),
            scale,
            Shape::Block {
                partition: BlockPartition::diagonal(),
                k,
                exponent,
            },
        )],
    )
}
