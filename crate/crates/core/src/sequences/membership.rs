//! Summability verdicts with machine-checkable certificates.
//!
//! [`lq_membership`] decides whether the q-th power sum of a symbolic
//! sequence is finite. A positive answer carries a symbolic upper bound; a
//! negative one carries a [`DivergenceCertificate`] — a comparison against a
//! divergent series that replays arithmetically and converts any target into
//! an explicit index whose partial sum provably exceeds it. When the
//! structure is too entangled to decide either way, the verdict degrades
//! honestly to certified partial-sum checkpoints rather than guessing.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::numerics::{
    partial_zeta, rat_pow_enclosure, IntervalEnclosure, Rational, RealExpr,
};

use super::partition::BlockPartition;
use super::seq::{
    part_support, support_overlap, Overlap, RelocationMap, ScaledPart, Shape,
    SymbolicSequence,
};
use super::witness::{family_block_exponent, family_block_scale};

/// Exact head terms a single partial-sum evaluation may accumulate before
/// switching to integral bracketing.
const EXACT_HEAD_BUDGET: u64 = 65_536;

/// Largest index for which entangled (non-disjoint) partial sums are
/// evaluated coordinate by coordinate.
const MIXED_SUM_LIMIT: u64 = 65_536;

/// Hard cap on the exponent of an escape index `2^j`; beyond this the
/// certificate is still valid but the explicit index is not materialized.
const MAX_ESCAPE_BITS: u64 = 8_000_000;

/// Strictly increasing embedding of certificate ranks into the ambient
/// index set: either one block of a partition, or such a block composed
/// with a further embedding (a sequence relocated into a block keeps a
/// replayable address for every rank this way).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexLayout {
    /// Rank `rho` sits at `partition.position(block, rho)`.
    Block {
        partition: BlockPartition,
        block: u32,
    },
    /// Rank `rho` embeds through `inner` first; the result is then read as
    /// a rank of `outer_block` in `outer`.
    Nested {
        outer: BlockPartition,
        outer_block: u32,
        inner: Box<IndexLayout>,
    },
}

impl IndexLayout {
    pub fn position(&self, rho: &BigInt) -> BigInt {
        match self {
            IndexLayout::Block { partition, block } => partition.position(*block, rho),
            IndexLayout::Nested {
                outer,
                outer_block,
                inner,
            } => outer.position(*outer_block, &inner.position(rho)),
        }
    }

    /// Rank sitting at ambient position `j`, when `j` is in the image.
    pub fn locate(&self, j: &BigInt) -> Option<BigInt> {
        match self {
            IndexLayout::Block { partition, block } => match partition.locate(j) {
                Some((k, r)) if k == *block => Some(r),
                _ => None,
            },
            IndexLayout::Nested {
                outer,
                outer_block,
                inner,
            } => match outer.locate(j) {
                Some((k, t)) if k == *outer_block => inner.locate(&t),
                _ => None,
            },
        }
    }

    /// The same embedding pushed `by` positions further along the index set.
    pub fn shifted(&self, by: u64) -> crate::Result<Self> {
        Ok(match self {
            IndexLayout::Block { partition, block } => IndexLayout::Block {
                partition: partition.with_added_offset(by)?,
                block: *block,
            },
            IndexLayout::Nested {
                outer,
                outer_block,
                inner,
            } => IndexLayout::Nested {
                outer: outer.with_added_offset(by)?,
                outer_block: *outer_block,
                inner: inner.clone(),
            },
        })
    }
}

impl fmt::Display for IndexLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexLayout::Block { partition, block } => {
                write!(f, "block {block} of {partition:?}")
            }
            IndexLayout::Nested {
                outer,
                outer_block,
                inner,
            } => write!(f, "({inner}) nested in block {outer_block} of {outer:?}"),
        }
    }
}

/// Replayable witness that the q-th power sums of a sequence grow without
/// bound.
///
/// The claim has two halves. Pointwise: for every rank `rho >= min_rank`,
/// the comparison sequence — the certified subject itself, or `underlying`
/// when the subject is a relocation that re-addresses and drops source
/// values — satisfies
/// `|x_{layout.position(rho)}|^q >= constant * rho^(-e_cmp)` with
/// `e_cmp <= 1`. Mass accounting: the subject carries all of the comparison
/// sequence's q-th power mass except for a dropped portion of total at most
/// `removed_upper` (zero when absent). Partial sums of the subject up to
/// `layout.position(R)` therefore dominate
/// `constant * sum_{rho=min_rank..R} rho^(-e_cmp) - removed_upper`, which
/// diverges; [`Self::escape_rank`] makes that explicit for any target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCertificate {
    pub layout: IndexLayout,
    pub q: Rational,
    pub e_cmp: Rational,
    pub constant: RealExpr,
    pub min_rank: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed_upper: Option<RealExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub underlying: Option<Box<SymbolicSequence>>,
}

impl DivergenceCertificate {
    /// Arithmetic sanity of the certificate itself: comparison exponent in
    /// `(0, 1]`, positive constant, 1-based minimum rank.
    pub fn check_structure(&self) -> crate::Result<()> {
        if !self.q.is_positive() {
            return Err(Error::Precondition(format!(
                "certificate exponent q must be positive, got {}",
                self.q
            )));
        }
        if !self.e_cmp.is_positive() || self.e_cmp > Rational::one() {
            return Err(Error::Precondition(format!(
                "comparison exponent must lie in (0, 1], got {}",
                self.e_cmp
            )));
        }
        if self.min_rank < 1 {
            return Err(Error::Precondition("ranks are 1-based".into()));
        }
        if !self.constant.is_provably_positive() {
            return Err(Error::Precondition(
                "certificate constant is not provably positive".into(),
            ));
        }
        Ok(())
    }

    /// Positive rational lower bound on the certified constant.
    fn constant_lower(&self) -> crate::Result<Rational> {
        let mut eps = Rational::new(1, 16);
        for _ in 0..24 {
            let e = self.constant.enclose(&eps);
            if e.lo().is_positive() {
                return Ok(e.lo().clone());
            }
            eps = &eps * &Rational::new(1, 65_536);
        }
        Err(Error::Undecidable(
            "certificate constant could not be bounded away from zero".into(),
        ))
    }

    fn removed_upper_bound(&self) -> Rational {
        match &self.removed_upper {
            None => Rational::zero(),
            Some(r) => {
                let e = r.enclose(&Rational::new(1, 16));
                Rational::max2(e.hi(), &Rational::zero())
            }
        }
    }

    /// Explicit rank `R` such that the certified lower bound
    /// `constant * sum_{rho=min_rank..R} rho^(-e_cmp) - removed_upper`
    /// provably exceeds `target`.
    pub fn escape_rank(&self, target: &Rational) -> crate::Result<BigInt> {
        self.check_structure()?;
        let c_lo = self.constant_lower()?;
        let removed = self.removed_upper_bound();
        let mut t = &(target + &removed) / &c_lo;
        let one = Rational::one();
        if t < one {
            t = one.clone();
        }
        let m = self.min_rank.max(1);
        if self.e_cmp == one {
            // Dyadic blocks (2^a, 2^(a+1)] with 2^a >= m each contribute at
            // least 1/2 to the harmonic sum.
            let a0 = u64::from(64 - (m - 1).leading_zeros().min(63));
            let blocks = (&(&t + &t) + &one).ceil_int();
            let blocks = blocks.to_u64().ok_or_else(|| Error::BudgetExceeded {
                context: "escape target needs more dyadic blocks than fit in u64".into(),
            })?;
            let bits = a0 + blocks;
            if bits > MAX_ESCAPE_BITS {
                return Err(Error::BudgetExceeded {
                    context: format!("escape index would need 2^{bits}"),
                });
            }
            Ok(BigInt::one() << bits)
        } else {
            // sum_{rho=m..R} rho^(-e) >= (R^(1-e) - m^(1-e)) / (1-e) and
            // m^(1-e) <= m, so R with R^(1-e) >= m + t(1-e) suffices.
            let one_minus_e = &one - &self.e_cmp;
            let x = &Rational::from_int(m as i64) + &(&t * &one_minus_e);
            let u = one_minus_e.numer().clone();
            let v = one_minus_e.denom().clone();
            let u = u.to_u64().ok_or_else(|| Error::BudgetExceeded {
                context: "comparison exponent numerator too large".into(),
            })?;
            let v = v.to_u32().ok_or_else(|| Error::BudgetExceeded {
                context: "comparison exponent denominator too large".into(),
            })?;
            let a = x.numer().clone();
            let b = x.denom().clone();
            let rhs = a.pow(v);
            let b_pow = b.pow(v);
            let mut j: u64 = 1;
            loop {
                if j * u > MAX_ESCAPE_BITS {
                    return Err(Error::BudgetExceeded {
                        context: format!("escape index would need 2^{j}"),
                    });
                }
                let lhs = (BigInt::one() << (j * u)) * &b_pow;
                if lhs >= rhs {
                    let rank = BigInt::one() << j;
                    let m_big = BigInt::from(m);
                    return Ok(if rank < m_big { m_big } else { rank });
                }
                j *= 2;
            }
        }
    }

    /// Ambient index of the escape rank.
    pub fn escape_position(&self, target: &Rational) -> crate::Result<BigInt> {
        Ok(self.layout.position(&self.escape_rank(target)?))
    }

    /// Attempts to refute the pointwise half of the claim at the given
    /// ranks against the comparison sequence (`underlying` if present, else
    /// `subject`). Structurally identical values pass exactly; otherwise an
    /// interval test refutes or stays consistent. `Err` means a sampled
    /// rank certifiably violates the claim.
    pub fn spot_check(&self, subject: &SymbolicSequence, ranks: &[u64]) -> crate::Result<()> {
        let x = self
            .underlying
            .as_deref()
            .unwrap_or(subject);
        for &rho in ranks {
            if rho < self.min_rank {
                continue;
            }
            let pos = self.layout.position(&BigInt::from(rho));
            let pos = match pos.to_u64() {
                Some(p) => p,
                None => continue,
            };
            let coord = x.coordinate(pos)?;
            let rho_rat = Rational::from_int(rho as i64);
            // Exact route: single-term coordinate versus the claimed floor.
            if let [(c, e)] = coord.terms() {
                let lhs = RealExpr::product(vec![
                    RealExpr::pow(RealExpr::from_rational(c.abs())?, self.q.clone())?,
                    RealExpr::pow(e.clone(), self.q.clone())?,
                ]);
                let rhs = RealExpr::product(vec![
                    self.constant.clone(),
                    RealExpr::pow(RealExpr::from_rational(rho_rat.clone())?, -&self.e_cmp)?,
                ]);
                if lhs == rhs {
                    continue;
                }
            }
            // Interval route: refute only on certain violation.
            let mut eps = Rational::new(1, 1 << 12);
            let mut violated = false;
            for _ in 0..3 {
                let val = coord.enclose(&eps).abs();
                let bits = eps_to_bits(&eps) + 4;
                let lhs_hi = rat_pow_enclosure(val.hi(), &self.q, bits);
                let rho_pow = rat_pow_enclosure(&rho_rat, &-&self.e_cmp, bits);
                let rhs = self
                    .constant
                    .enclose(&eps)
                    .mul(&rho_pow)
                    .clamp_nonnegative();
                if lhs_hi.hi() < rhs.lo() {
                    violated = true;
                    break;
                }
                // Consistent unless a tighter look separates them.
                if !val.contains(&Rational::zero())
                    && rat_pow_enclosure(val.lo(), &self.q, bits).lo() >= rhs.hi()
                {
                    break;
                }
                eps = &eps * &Rational::new(1, 1 << 16);
            }
            if violated {
                return Err(Error::Precondition(format!(
                    "pointwise claim fails at rank {rho}"
                )));
            }
        }
        Ok(())
    }
}

/// Certified partial-sum observation used when no verdict is decidable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericCheckpoint {
    #[serde(with = "bigint_string")]
    pub upto: BigInt,
    pub lower: Rational,
    pub upper: Rational,
}

/// Outcome of a q-summability query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MembershipVerdict {
    /// The q-th power sum is finite, below the certified symbolic bound.
    Converges { bound: RealExpr },
    /// The q-th power sum diverges, with a replayable certificate.
    Diverges {
        certificate: DivergenceCertificate,
    },
    /// Undecided; certified partial sums are reported instead of a guess.
    NumericEvidence {
        checkpoints: Vec<NumericCheckpoint>,
        threshold: Rational,
        threshold_reached: bool,
    },
}

impl MembershipVerdict {
    pub fn is_decided(&self) -> bool {
        !matches!(self, MembershipVerdict::NumericEvidence { .. })
    }
}

/// Budget for the undecided fallback: partial sums at squaring checkpoints
/// until the certified lower bound clears `threshold` or the caps run out.
#[derive(Clone, Debug)]
pub struct EvidenceBudget {
    pub threshold: Rational,
    pub max_checkpoints: usize,
    pub start: BigInt,
    pub eps: Rational,
    /// Stop growing checkpoints once the index needs this many bits.
    pub max_index_bits: u64,
}

impl Default for EvidenceBudget {
    fn default() -> Self {
        EvidenceBudget {
            threshold: Rational::from_int(1000),
            max_checkpoints: 12,
            start: BigInt::from(16),
            eps: Rational::pow2_neg(20),
            max_index_bits: 4096,
        }
    }
}

/// Decides q-summability of `x` with default budgets.
pub fn lq_membership(x: &SymbolicSequence, q: &Rational) -> crate::Result<MembershipVerdict> {
    lq_membership_with(x, q, &EvidenceBudget::default())
}

/// Decides q-summability of `x`, falling back to certified partial-sum
/// evidence under the given budget when no structural verdict exists.
pub fn lq_membership_with(
    x: &SymbolicSequence,
    q: &Rational,
    budget: &EvidenceBudget,
) -> crate::Result<MembershipVerdict> {
    if !q.is_positive() {
        return Err(Error::Precondition(format!(
            "summability exponent must be positive, got {q}"
        )));
    }
    match structural_verdict(x, q)? {
        PartVerdict::Converges(bound) => Ok(MembershipVerdict::Converges { bound }),
        PartVerdict::Diverges(certificate) => {
            certificate.check_structure()?;
            Ok(MembershipVerdict::Diverges { certificate })
        }
        PartVerdict::Inconclusive => numeric_evidence(x, q, budget),
    }
}

enum PartVerdict {
    Converges(RealExpr),
    Diverges(DivergenceCertificate),
    Inconclusive,
}

fn abs_amplitude(part: &ScaledPart, q: &Rational) -> crate::Result<RealExpr> {
    Ok(RealExpr::product(vec![
        RealExpr::pow(
            RealExpr::from_rational(part.coeff().abs())?,
            q.clone(),
        )?,
        RealExpr::pow(part.scale().clone(), q.clone())?,
    ]))
}

fn part_verdict(p: &Rational, part: &ScaledPart, q: &Rational) -> crate::Result<PartVerdict> {
    let amplitude = abs_amplitude(part, q)?;
    match part.shape() {
        Shape::Finite { values } => {
            let mut terms = Vec::new();
            for v in values.values() {
                if !v.is_zero() {
                    terms.push(RealExpr::pow(
                        RealExpr::from_rational(v.abs())?,
                        q.clone(),
                    )?);
                }
            }
            Ok(PartVerdict::Converges(amplitude.mul(RealExpr::sum_of(terms))))
        }
        Shape::Block {
            partition,
            k,
            exponent,
        } => {
            let qe = q * exponent;
            if qe > Rational::one() {
                Ok(PartVerdict::Converges(
                    amplitude.mul(RealExpr::pseries(qe)?),
                ))
            } else {
                Ok(PartVerdict::Diverges(DivergenceCertificate {
                    layout: IndexLayout::Block {
                        partition: partition.clone(),
                        block: *k,
                    },
                    q: q.clone(),
                    e_cmp: qe,
                    constant: amplitude,
                    min_rank: 1,
                    removed_upper: None,
                    underlying: None,
                }))
            }
        }
        Shape::Family { partition, k0 } => {
            family_verdict(p, partition, *k0, amplitude, q)
        }
        Shape::Relocated { source, map } => {
            let inner = structural_verdict(source, q)?;
            relocated_verdict(part, source, map, inner, amplitude, q)
        }
    }
}

fn family_verdict(
    p: &Rational,
    partition: &BlockPartition,
    k0: u32,
    amplitude: RealExpr,
    q: &Rational,
) -> crate::Result<PartVerdict> {
    let half = Rational::new(1, 2);
    if q == p {
        // Block k contributes exactly 2^(-kp); the sum is geometric.
        let ratio = RealExpr::pow(RealExpr::from_rational(half)?, p.clone())?;
        let geom = RealExpr::geometric(ratio, k0)?;
        return Ok(PartVerdict::Converges(amplitude.mul(geom)));
    }
    if q > p {
        // zeta(q e_k) <= zeta(q/p) and s_k^q <= 2^(-kq).
        let zeta = RealExpr::pseries(q / p)?;
        let ratio = RealExpr::pow(RealExpr::from_rational(half)?, q.clone())?;
        let geom = RealExpr::geometric(ratio, k0)?;
        return Ok(PartVerdict::Converges(amplitude.mul(zeta).mul(geom)));
    }
    // q < p: one block already fails q-summability once 1/k <= p - q.
    let threshold = (p - q).recip()?.ceil_int();
    let threshold = threshold.to_u32().ok_or_else(|| Error::BudgetExceeded {
        context: format!("comparison block index for q = {q} against p = {p} overflows"),
    })?;
    let k_cert = k0.max(threshold.max(1));
    let e_k = family_block_exponent(p, k_cert)?;
    let e_cmp = q * &e_k;
    debug_assert!(e_cmp <= Rational::one());
    let constant = amplitude.mul(RealExpr::pow(
        family_block_scale(p, k_cert)?,
        q.clone(),
    )?);
    Ok(PartVerdict::Diverges(DivergenceCertificate {
        layout: IndexLayout::Block {
            partition: partition.clone(),
            block: k_cert,
        },
        q: q.clone(),
        e_cmp,
        constant,
        min_rank: 1,
        removed_upper: None,
        underlying: None,
    }))
}

fn relocated_verdict(
    part: &ScaledPart,
    source: &SymbolicSequence,
    map: &RelocationMap,
    inner: PartVerdict,
    amplitude: RealExpr,
    q: &Rational,
) -> crate::Result<PartVerdict> {
    match inner {
        PartVerdict::Inconclusive => Ok(PartVerdict::Inconclusive),
        // All relocation maps carry values injectively (a lane additionally
        // drops some), so the source bound still dominates.
        PartVerdict::Converges(b) => Ok(PartVerdict::Converges(amplitude.mul(b))),
        PartVerdict::Diverges(cert) => {
            let scaled_removed = cert
                .removed_upper
                .clone()
                .map(|r| amplitude.clone().mul(r));
            match map {
                RelocationMap::Shift { by } => {
                    let underlying = match cert.underlying {
                        Some(u) => Some(Box::new(
                            SymbolicSequence::relocated(
                                (*u).clone(),
                                RelocationMap::Shift { by: *by },
                            )?
                            .scaled(part.coeff(), part.scale()),
                        )),
                        None => None,
                    };
                    Ok(PartVerdict::Diverges(DivergenceCertificate {
                        layout: cert.layout.shifted(*by)?,
                        q: q.clone(),
                        e_cmp: cert.e_cmp,
                        constant: amplitude.mul(cert.constant),
                        min_rank: cert.min_rank,
                        removed_upper: scaled_removed,
                        underlying,
                    }))
                }
                RelocationMap::IntoBlock { partition, k } => {
                    let underlying = match cert.underlying {
                        Some(u) => Some(Box::new(
                            SymbolicSequence::relocated(
                                (*u).clone(),
                                RelocationMap::IntoBlock {
                                    partition: partition.clone(),
                                    k: *k,
                                },
                            )?
                            .scaled(part.coeff(), part.scale()),
                        )),
                        None => None,
                    };
                    Ok(PartVerdict::Diverges(DivergenceCertificate {
                        layout: IndexLayout::Nested {
                            outer: partition.clone(),
                            outer_block: *k,
                            inner: Box::new(cert.layout),
                        },
                        q: q.clone(),
                        e_cmp: cert.e_cmp,
                        constant: amplitude.mul(cert.constant),
                        min_rank: cert.min_rank,
                        removed_upper: scaled_removed,
                        underlying,
                    }))
                }
                RelocationMap::Lane { .. } => {
                    // The lane re-addresses the source values indexed by the
                    // complement of the selected set. Values dropped relative
                    // to the full source sit at selected indices, where the
                    // selection promises magnitudes below 2^(-l) at depth l,
                    // so at most sum_l 2^(-lq) of q-mass is lost.
                    let promise = RealExpr::geometric(
                        RealExpr::pow(
                            RealExpr::from_rational(Rational::new(1, 2))?,
                            q.clone(),
                        )?,
                        1,
                    )?;
                    let removed = match cert.removed_upper {
                        Some(r) => amplitude.clone().mul(r.add(promise)),
                        None => amplitude.clone().mul(promise),
                    };
                    let base = match cert.underlying {
                        Some(u) => *u,
                        None => source.clone(),
                    };
                    Ok(PartVerdict::Diverges(DivergenceCertificate {
                        layout: cert.layout,
                        q: q.clone(),
                        e_cmp: cert.e_cmp,
                        constant: amplitude.mul(cert.constant),
                        min_rank: cert.min_rank,
                        removed_upper: Some(removed),
                        underlying: Some(Box::new(
                            base.scaled(part.coeff(), part.scale()),
                        )),
                    }))
                }
            }
        }
    }
}

/// Structure-only verdict; `Inconclusive` signals the caller to fall back
/// to partial-sum evidence.
fn structural_verdict(x: &SymbolicSequence, q: &Rational) -> crate::Result<PartVerdict> {
    let parts = x.parts();
    if parts.is_empty() {
        return Ok(PartVerdict::Converges(RealExpr::zero()));
    }
    let mut verdicts = Vec::with_capacity(parts.len());
    for part in parts {
        verdicts.push(part_verdict(x.p(), part, q)?);
    }
    let descs: Vec<_> = parts.iter().map(part_support).collect();
    let mut all_disjoint = true;
    for i in 0..parts.len() {
        for j in (i + 1)..parts.len() {
            if support_overlap(&descs[i], &descs[j]) != Overlap::Disjoint {
                all_disjoint = false;
            }
        }
    }
    if all_disjoint {
        // Exact additivity: one divergent part sinks the whole sum.
        if let Some(i) = verdicts
            .iter()
            .position(|v| matches!(v, PartVerdict::Diverges(_)))
        {
            return Ok(verdicts.swap_remove(i));
        }
        if verdicts
            .iter()
            .any(|v| matches!(v, PartVerdict::Inconclusive))
        {
            return Ok(PartVerdict::Inconclusive);
        }
        let bounds = verdicts.into_iter().map(|v| match v {
            PartVerdict::Converges(b) => b,
            _ => unreachable!("filtered above"),
        });
        return Ok(PartVerdict::Converges(RealExpr::sum_of(bounds)));
    }
    // Entangled supports. All-convergent still bounds via the triangle-type
    // estimate |a_1 + ... + a_m|^q <= m^max(q-1, 0) * (|a_1|^q + ... ).
    if verdicts
        .iter()
        .all(|v| matches!(v, PartVerdict::Converges(_)))
    {
        let m = parts.len() as u64;
        let exponent = Rational::max2(&(q - &Rational::one()), &Rational::zero());
        let factor = if exponent.is_zero() {
            RealExpr::one()
        } else {
            RealExpr::pow(RealExpr::from_int(m), exponent)?
        };
        let bounds = verdicts.into_iter().map(|v| match v {
            PartVerdict::Converges(b) => b,
            _ => unreachable!("filtered above"),
        });
        return Ok(PartVerdict::Converges(factor.mul(RealExpr::sum_of(bounds))));
    }
    // One divergent part whose support only finite parts touch: push the
    // comparison past the finite supports and keep the certificate.
    for i in 0..parts.len() {
        let PartVerdict::Diverges(cert) = &verdicts[i] else {
            continue;
        };
        let finite_only = (0..parts.len()).all(|j| {
            j == i
                || support_overlap(&descs[i], &descs[j]) == Overlap::Disjoint
                || matches!(parts[j].shape(), Shape::Finite { .. })
        });
        if !finite_only {
            continue;
        }
        let mut min_rank = cert.min_rank;
        let mut ok = true;
        for (j, part) in parts.iter().enumerate() {
            if j == i {
                continue;
            }
            if let Shape::Finite { values } = part.shape() {
                for key in values.keys() {
                    if let Some(rho) = cert.layout.locate(&BigInt::from(*key)) {
                        match rho.to_u64().and_then(|r| r.checked_add(1)) {
                            Some(bump) => min_rank = min_rank.max(bump),
                            None => ok = false,
                        }
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        let mut cert = cert.clone();
        cert.min_rank = min_rank;
        return Ok(PartVerdict::Diverges(cert));
    }
    Ok(PartVerdict::Inconclusive)
}

fn numeric_evidence(
    x: &SymbolicSequence,
    q: &Rational,
    budget: &EvidenceBudget,
) -> crate::Result<MembershipVerdict> {
    let mut checkpoints = Vec::new();
    let mut n = budget.start.clone();
    if n < BigInt::from(2) {
        n = BigInt::from(2);
    }
    let mut reached = false;
    for _ in 0..budget.max_checkpoints {
        let enc = match partial_power_sum(x, q, &n, &budget.eps) {
            Ok(e) => e,
            Err(Error::BudgetExceeded { .. }) => break,
            Err(e) => return Err(e),
        };
        checkpoints.push(NumericCheckpoint {
            upto: n.clone(),
            lower: enc.lo().clone(),
            upper: enc.hi().clone(),
        });
        if enc.lo() > &budget.threshold {
            reached = true;
            break;
        }
        if n.bits() >= budget.max_index_bits {
            break;
        }
        n = &n * &n;
    }
    Ok(MembershipVerdict::NumericEvidence {
        checkpoints,
        threshold: budget.threshold.clone(),
        threshold_reached: reached,
    })
}

/// Certified enclosure of `sum_{j=1..upto} |x_j|^q`.
///
/// Pairwise-disjoint parts sum exactly through per-shape closed forms and
/// support astronomically large `upto`; entangled supports fall back to a
/// coordinate walk and are limited to desk-scale `upto`. The enclosure is
/// always valid; its width meets `eps` only when every contribution has an
/// exact closed form at this scale.
pub fn partial_power_sum(
    x: &SymbolicSequence,
    q: &Rational,
    upto: &BigInt,
    eps: &Rational,
) -> crate::Result<IntervalEnclosure> {
    if !q.is_positive() {
        return Err(Error::Precondition(format!(
            "summability exponent must be positive, got {q}"
        )));
    }
    if upto < &BigInt::one() {
        return Ok(IntervalEnclosure::zero());
    }
    let parts = x.parts();
    if parts.is_empty() {
        return Ok(IntervalEnclosure::zero());
    }
    let descs: Vec<_> = parts.iter().map(part_support).collect();
    let mut disjoint = true;
    for i in 0..parts.len() {
        for j in (i + 1)..parts.len() {
            if support_overlap(&descs[i], &descs[j]) != Overlap::Disjoint {
                disjoint = false;
            }
        }
    }
    if disjoint {
        let share = &(eps / &Rational::from_int(parts.len() as i64)) / &Rational::from_int(2);
        let mut acc = IntervalEnclosure::zero();
        for part in parts {
            acc = acc.add(&part_partial(x.p(), part, q, upto, &share)?);
        }
        return Ok(acc);
    }
    mixed_partial(x, q, upto, eps)
}

fn part_partial(
    p: &Rational,
    part: &ScaledPart,
    q: &Rational,
    upto: &BigInt,
    eps: &Rational,
) -> crate::Result<IntervalEnclosure> {
    let bits = eps_to_bits(eps) + 8;
    let amp = abs_amplitude(part, q)?
        .enclose(eps)
        .clamp_nonnegative();
    let inner: IntervalEnclosure = match part.shape() {
        Shape::Finite { values } => {
            let terms = values
                .iter()
                .filter(|(j, v)| BigInt::from(**j) <= *upto && !v.is_zero())
                .map(|(_, v)| {
                    RealExpr::pow(RealExpr::from_rational(v.abs())?, q.clone())
                })
                .collect::<crate::Result<Vec<_>>>()?;
            RealExpr::sum_of(terms).enclose(eps)
        }
        Shape::Block { partition, k, exponent } => {
            let ranks = partition.rank_upto(*k, upto);
            if ranks.is_zero() {
                IntervalEnclosure::zero()
            } else {
                let t = q * exponent;
                let budget = head_budget_for(&t, bits);
                partial_zeta(&t, &ranks, bits, budget)
            }
        }
        Shape::Family { partition, k0 } => {
            family_partial(p, partition, *k0, q, upto, bits)?
        }
        Shape::Relocated { source, map } => match map {
            RelocationMap::Shift { by } => {
                let inner_upto = upto - BigInt::from(*by);
                return Ok(amp.mul(
                    &partial_power_sum(source, q, &inner_upto, eps)?.clamp_nonnegative(),
                ));
            }
            RelocationMap::IntoBlock { partition, k } => {
                let ranks = partition.rank_upto(*k, upto);
                return Ok(amp.mul(
                    &partial_power_sum(source, q, &ranks, eps)?.clamp_nonnegative(),
                ));
            }
            RelocationMap::Lane { table, lane } => {
                lane_partial(source, table, *lane, q, upto, eps)?
            }
        },
    };
    Ok(amp.mul(&inner.clamp_nonnegative()))
}

/// Partial q-power sum of the normalized block family up to `upto`,
/// without its ambient amplitude.
fn family_partial(
    p: &Rational,
    partition: &BlockPartition,
    k0: u32,
    q: &Rational,
    upto: &BigInt,
    bits: u32,
) -> crate::Result<IntervalEnclosure> {
    const BLOCK_CAP: u32 = 64;
    let mut acc = IntervalEnclosure::zero();
    let mut k = k0;
    let mut truncated = false;
    loop {
        if partition.first_position(k) > *upto {
            break;
        }
        if k - k0 >= BLOCK_CAP {
            truncated = true;
            break;
        }
        let ranks = partition.rank_upto(k, upto);
        if !ranks.is_zero() {
            let e_k = family_block_exponent(p, k)?;
            let scale_q = RealExpr::pow(family_block_scale(p, k)?, q.clone())?
                .enclose(&Rational::pow2_neg(bits + 2))
                .clamp_nonnegative();
            let t = q * &e_k;
            let budget = head_budget_for(&t, bits + 2);
            let z = partial_zeta(&t, &ranks, bits + 2, budget);
            acc = acc.add(&scale_q.mul(&z.clamp_nonnegative()));
        }
        k += 1;
    }
    if truncated {
        // Blocks beyond the cap still have material below `upto`; bound
        // their total contribution from above without enumerating them.
        let tail_hi = family_tail_upper(p, k, q, upto)?;
        acc = IntervalEnclosure::new(acc.lo().clone(), acc.hi() + &tail_hi);
    }
    Ok(acc)
}

/// Upper bound on the q-power mass of all family blocks `>= from`, cut at
/// ambient index `upto` (used only when the block walk is truncated).
fn family_tail_upper(
    p: &Rational,
    from: u32,
    q: &Rational,
    upto: &BigInt,
) -> crate::Result<Rational> {
    let half_q = rat_pow_enclosure(&Rational::new(1, 2), q, 24);
    let ratio_hi = Rational::min2(half_q.hi(), &Rational::new(63, 64));
    // sum_{k >= from} (2^-q)^k <= ratio_hi^from / (1 - ratio_hi).
    let geom_hi = {
        let mut head = Rational::one();
        for _ in 0..from {
            head = &head * &ratio_hi;
        }
        &head / &(&Rational::one() - &ratio_hi)
    };
    if q >= p {
        // Whole-block mass: s_k^q zeta(q e_k) <= 2^(-kq) zeta(q/p) for
        // q > p and exactly 2^(-kp) <= 2^(-kq)... s_k^q <= 2^(-kq) and the
        // zeta factor is bounded by zeta(q/p) (or collapses for q = p).
        let zeta_factor = if q == p {
            Rational::one()
        } else {
            RealExpr::pseries(q / p)?
                .enclose(&Rational::new(1, 1024))
                .hi()
                .clone()
        };
        Ok(&geom_hi * &zeta_factor)
    } else {
        // Divergent exponents: each term is at most 1 and each block has at
        // most `upto` ranks below the cut, so block k contributes at most
        // 2^(-kq) * upto.
        let upto_rat = Rational::from_big(upto.clone(), BigInt::one())?;
        Ok(&geom_hi * &upto_rat)
    }
}

/// Partial q-power sum of a lane relocation up to `upto`, without its
/// ambient amplitude: exact over materialized lane positions, with an
/// honest upper slack once `upto` passes the selection horizon.
fn lane_partial(
    source: &SymbolicSequence,
    table: &super::seq::SelectionTable,
    lane: u32,
    q: &Rational,
    upto: &BigInt,
    eps: &Rational,
) -> crate::Result<IntervalEnclosure> {
    let bits = eps_to_bits(eps) + 8;
    let mut acc = IntervalEnclosure::zero();
    for l in 1..=table.depth() {
        let alpha = table.alpha(l).expect("within depth");
        if BigInt::from(alpha) > *upto {
            break;
        }
        let (this_lane, t) = table.lane_of(l);
        if this_lane != lane {
            continue;
        }
        match table.complement_index(t) {
            Ok(src_idx) => {
                let val = source.coordinate(src_idx)?.enclose(eps).abs();
                let term = IntervalEnclosure::new(
                    rat_pow_enclosure(val.lo(), q, bits).lo().clone(),
                    rat_pow_enclosure(val.hi(), q, bits).hi().clone(),
                );
                acc = acc.add(&term.clamp_nonnegative());
            }
            Err(_) => {
                // Source index undecided: contributes between 0 and sup^q.
                let sup_q = sup_power_upper(source, q)?;
                acc = IntervalEnclosure::new(acc.lo().clone(), acc.hi() + &sup_q);
            }
        }
    }
    let horizon = BigInt::from(table.decided_limit());
    if *upto > horizon {
        // Unmaterialized lane positions in (horizon, upto] are unknown in
        // number and value; each carries at most sup^q.
        let count = Rational::from_big(upto - &horizon, BigInt::one())?;
        let sup_q = sup_power_upper(source, q)?;
        acc = IntervalEnclosure::new(acc.lo().clone(), acc.hi() + &(&count * &sup_q));
    }
    Ok(acc)
}

/// Rational upper bound on `sup_j |x_j|^q`.
fn sup_power_upper(x: &SymbolicSequence, q: &Rational) -> crate::Result<Rational> {
    let sup = sup_abs_upper(x)?;
    if sup.is_zero() {
        return Ok(Rational::zero());
    }
    Ok(rat_pow_enclosure(&sup, q, 24).hi().clone())
}

/// Rational upper bound on `sup_j |x_j|`.
pub(crate) fn sup_abs_upper(x: &SymbolicSequence) -> crate::Result<Rational> {
    let mut total = Rational::zero();
    for part in x.parts() {
        let scale_hi = part
            .scale()
            .enclose(&Rational::new(1, 16))
            .hi()
            .clone();
        let shape_sup = match part.shape() {
            Shape::Finite { values } => values
                .values()
                .map(|v| v.abs())
                .max()
                .unwrap_or_else(Rational::zero),
            // Ranks are 1-based and exponents positive: r^(-e) <= 1.
            Shape::Block { .. } => Rational::one(),
            // s_k <= 2^(-k) and r^(-e_k) <= 1.
            Shape::Family { k0, .. } => Rational::pow2_neg(*k0),
            Shape::Relocated { source, .. } => sup_abs_upper(source)?,
        };
        total += &(&part.coeff().abs() * &scale_hi) * &shape_sup;
    }
    Ok(total)
}

/// Coordinate-walk fallback for entangled supports.
fn mixed_partial(
    x: &SymbolicSequence,
    q: &Rational,
    upto: &BigInt,
    eps: &Rational,
) -> crate::Result<IntervalEnclosure> {
    let n = upto.to_u64().filter(|n| *n <= MIXED_SUM_LIMIT).ok_or_else(|| {
        Error::BudgetExceeded {
            context: format!(
                "entangled partial sum up to {upto} exceeds the desk-scale walk limit"
            ),
        }
    })?;
    let share = &(eps / &Rational::from_int(n.max(1) as i64)) / &Rational::from_int(2);
    let bits = eps_to_bits(&share) + 4;
    let mut acc = IntervalEnclosure::zero();
    for j in 1..=n {
        let coord = match x.coordinate(j) {
            Ok(c) => c,
            Err(Error::BudgetExceeded { .. }) => {
                // Beyond a selection horizon the value is unknown; it
                // contributes between 0 and sup^q.
                let sup_q = sup_power_upper(x, q)?;
                acc = IntervalEnclosure::new(acc.lo().clone(), acc.hi() + &sup_q);
                continue;
            }
            Err(e) => return Err(e),
        };
        if coord.terms().is_empty() {
            continue;
        }
        // Outward-round the coordinate enclosure before extracting the
        // q-th power: root extraction cost grows with operand size, and the
        // added width (within the per-coordinate share) is already budgeted.
        let val = coord.enclose(&share).abs().round_out(bits);
        let term = IntervalEnclosure::new(
            rat_pow_enclosure(val.lo(), q, bits).lo().clone(),
            rat_pow_enclosure(val.hi(), q, bits).hi().clone(),
        );
        acc = acc.add(&term.clamp_nonnegative()).snap_to_grid(bits + 16);
    }
    Ok(acc)
}

/// Exact-head length worth paying for when the remainder is bracketed by
/// integrals: past `2^(bits/t)` the bracket width `h^(-t)` is already below
/// target, and when that length is unreachable the bracket dominates anyway,
/// so a long head of verified root extractions buys nothing.
fn head_budget_for(t: &Rational, bits: u32) -> u64 {
    if t.is_integer() {
        return EXACT_HEAD_BUDGET;
    }
    let num = t.numer().to_u64().unwrap_or(1).max(1);
    let den = t.denom().to_u64().unwrap_or(1).max(1);
    let e = ((bits as u64) * den).div_ceil(num);
    if e <= 16 {
        (1u64 << e).max(64)
    } else {
        1024
    }
}

fn eps_to_bits(eps: &Rational) -> u32 {
    let mut bits: u32 = 8;
    while Rational::pow2_neg(bits) > *eps && bits < (1 << 16) {
        bits += 4;
    }
    bits
}

mod bigint_string {
    use num_bigint::BigInt;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse::<BigInt>()
            .map_err(|e| de::Error::custom(format!("invalid integer: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::seq::SelectionTable;
    use crate::sequences::witness::witness_vector;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn eps6() -> Rational {
        r("1/1000000")
    }

    #[test]
    fn witness_p_power_sum_is_exact_geometric_value() {
        // p = 1: sum of block masses 2^-k from k = 2 is exactly 1/2.
        let w = witness_vector(&r("1")).unwrap();
        match lq_membership(&w, &r("1")).unwrap() {
            MembershipVerdict::Converges { bound } => {
                assert_eq!(bound.exact_rational(), Some(&r("1/2")));
            }
            other => panic!("expected convergence, got {other:?}"),
        }
        // p = 2: sum of 4^-k from k = 1 is exactly 1/3.
        let w2 = witness_vector(&r("2")).unwrap();
        match lq_membership(&w2, &r("2")).unwrap() {
            MembershipVerdict::Converges { bound } => {
                assert_eq!(bound.exact_rational(), Some(&r("1/3")));
            }
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn witness_stays_summable_above_p() {
        let w = witness_vector(&r("1")).unwrap();
        match lq_membership(&w, &r("2")).unwrap() {
            MembershipVerdict::Converges { bound } => {
                let enc = bound.enclose(&eps6());
                assert!(enc.lo().is_positive());
                // The bound dominates the true partial sums.
                let partial = partial_power_sum(&w, &r("2"), &BigInt::from(500), &eps6())
                    .unwrap();
                assert!(partial.lo() < enc.hi());
            }
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn witness_diverges_below_p_with_replayable_certificate() {
        let w = witness_vector(&r("1")).unwrap();
        let verdict = lq_membership(&w, &r("1/2")).unwrap();
        let MembershipVerdict::Diverges { certificate } = verdict else {
            panic!("expected divergence");
        };
        certificate.check_structure().unwrap();
        // 1/(p - q) = 2, so the comparison block is max(k0, 2) = 2 and
        // q * e_2 = (1/2) * 2 = 1.
        assert_eq!(certificate.e_cmp, r("1"));
        assert_eq!(
            certificate.layout,
            IndexLayout::Block {
                partition: BlockPartition::diagonal(),
                block: 2
            }
        );
        // The pointwise claim is exact on the witness itself.
        certificate.spot_check(&w, &[1, 2, 3, 10, 50]).unwrap();
        // Escape: an explicit index whose partial sum provably exceeds 10.
        let pos = certificate.escape_position(&r("10")).unwrap();
        let partial = partial_power_sum(&w, &r("1/2"), &pos, &r("1/1024")).unwrap();
        assert!(
            partial.lo() > &r("10"),
            "partial sum lower bound {} at {pos} does not clear 10",
            partial.lo()
        );
    }

    #[test]
    fn escape_works_for_sub_harmonic_comparison() {
        // p = 2, q = 1/2: comparison block 1, e_cmp = 1/2 < 1.
        let w = witness_vector(&r("2")).unwrap();
        let MembershipVerdict::Diverges { certificate } =
            lq_membership(&w, &r("1/2")).unwrap()
        else {
            panic!("expected divergence");
        };
        assert_eq!(certificate.e_cmp, r("1/2"));
        let pos = certificate.escape_position(&r("10")).unwrap();
        let partial = partial_power_sum(&w, &r("1/2"), &pos, &r("1/1024")).unwrap();
        assert!(partial.lo() > &r("10"));
    }

    #[test]
    fn partial_sum_matches_hand_computation() {
        // p = 1 witness at N = 12: blocks 2..5 contribute
        // s_2 (1 + 1/4 + 1/9) + s_3 (1 + 2^-3/2) + s_4 (1 + 2^-4/3) + s_5
        // = 0.30267575...
        let w = witness_vector(&r("1")).unwrap();
        let enc = partial_power_sum(&w, &r("1"), &BigInt::from(12), &eps6()).unwrap();
        assert!(enc.lo() > &r("302675/1000000"));
        assert!(enc.hi() < &r("302676/1000000"));
        // And at N = 2 only the first coordinate of block 2 has appeared.
        let enc2 = partial_power_sum(&w, &r("1"), &BigInt::from(2), &eps6()).unwrap();
        assert!(enc2.lo() > &r("15198/100000"));
        assert!(enc2.hi() < &r("15199/100000"));
    }

    #[test]
    fn finite_perturbation_keeps_divergence_with_bumped_rank() {
        let p = r("1");
        let w = witness_vector(&p).unwrap();
        let spike = SymbolicSequence::finite(
            p.clone(),
            BTreeMap::from([(2, r("5")), (5, r("-7"))]),
        )
        .unwrap();
        let x = SymbolicSequence::linear_combination(&[r("1"), r("1")], &[w, spike])
            .unwrap();
        let MembershipVerdict::Diverges { certificate } =
            lq_membership(&x, &r("1/2")).unwrap()
        else {
            panic!("expected divergence to survive a finite perturbation");
        };
        // Positions 2 and 5 are ranks 1 and 2 of diagonal block 2, so the
        // comparison starts at rank 3.
        assert_eq!(certificate.min_rank, 3);
        certificate.spot_check(&x, &[3, 4, 10]).unwrap();
        // Sampling below min_rank is skipped, not failed.
        certificate.spot_check(&x, &[1, 2]).unwrap();
    }

    #[test]
    fn opposite_witness_copies_cancel_structurally() {
        let w = witness_vector(&r("1")).unwrap();
        let z = SymbolicSequence::linear_combination(
            &[r("1"), r("-1")],
            &[w.clone(), w],
        )
        .unwrap();
        assert!(z.is_zero());
        match lq_membership(&z, &r("1/2")).unwrap() {
            MembershipVerdict::Converges { bound } => assert!(bound.is_zero()),
            other => panic!("expected trivial convergence, got {other:?}"),
        }
    }

    #[test]
    fn entangled_divergent_parts_degrade_to_numeric_evidence() {
        // The witness plus its shift overlap in an unstructured way; both
        // diverge at q = 1/2, and nothing is certified — only observed.
        let p = r("1");
        let w = witness_vector(&p).unwrap();
        let shifted =
            SymbolicSequence::relocated(w.clone(), RelocationMap::Shift { by: 1 })
                .unwrap();
        let x = SymbolicSequence::linear_combination(&[r("1"), r("1")], &[w, shifted])
            .unwrap();
        let budget = EvidenceBudget {
            threshold: r("5"),
            max_checkpoints: 8,
            start: BigInt::from(256),
            eps: r("1/1024"),
            max_index_bits: 17,
        };
        match lq_membership_with(&x, &r("1/2"), &budget).unwrap() {
            MembershipVerdict::NumericEvidence {
                checkpoints,
                threshold_reached,
                ..
            } => {
                assert!(!checkpoints.is_empty());
                for pair in checkpoints.windows(2) {
                    assert!(pair[1].lower > pair[0].lower);
                }
                assert!(threshold_reached, "sqrt partial sums pass 5 by 65536");
            }
            other => panic!("expected numeric evidence, got {other:?}"),
        }
    }

    #[test]
    fn lane_relocation_diverges_with_removed_mass_accounting() {
        let p = r("1");
        let w = witness_vector(&p).unwrap();
        let table = Arc::new(
            SelectionTable::new(
                4,
                (1..=40).map(|l| 100 * l).collect::<Vec<u64>>(),
                vec![],
            )
            .unwrap(),
        );
        let eps1 = SymbolicSequence::relocated(
            w.clone(),
            RelocationMap::Lane {
                table: Arc::clone(&table),
                lane: 1,
            },
        )
        .unwrap();
        let MembershipVerdict::Diverges { certificate } =
            lq_membership(&eps1, &r("1/2")).unwrap()
        else {
            panic!("expected lane divergence");
        };
        certificate.check_structure().unwrap();
        // Dropped mass accounted: sum_l 2^(-l/2) = 1/(sqrt 2 - 1) = 2.4142...
        let removed = certificate
            .removed_upper
            .as_ref()
            .expect("lane certificates must account for dropped mass")
            .enclose(&eps6());
        assert!(removed.lo() > &r("24142/10000"));
        assert!(removed.hi() < &r("24143/10000"));
        // Pointwise claims replay against the underlying witness.
        assert!(certificate.underlying.is_some());
        certificate.spot_check(&eps1, &[1, 2, 5, 20]).unwrap();
        // An escape rank still exists; the removed mass only delays it.
        let rank = certificate.escape_rank(&r("3")).unwrap();
        assert!(rank > BigInt::one());
        // Membership at q = p converges (a sub-multiset of the witness).
        match lq_membership(&eps1, &r("1")).unwrap() {
            MembershipVerdict::Converges { bound } => {
                assert_eq!(bound.exact_rational(), Some(&r("1/2")));
            }
            other => panic!("expected convergence at q = p, got {other:?}"),
        }
    }

    #[test]
    fn lane_partial_sums_stay_within_materialized_horizon() {
        let p = r("1");
        let w = witness_vector(&p).unwrap();
        let table =
            Arc::new(SelectionTable::new(4, vec![10, 20, 30, 40, 50, 60], vec![]).unwrap());
        let eps1 = SymbolicSequence::relocated(
            w,
            RelocationMap::Lane {
                table,
                lane: 1,
            },
        )
        .unwrap();
        // Lane 1 holds ranks 1, 3, 6 -> alpha 10, 30, 60 carrying
        // w_{f(1)} = w_1 = 0, w_{f(2)} = w_2 = s_2, w_{f(3)} = w_3 = 0.
        let enc = partial_power_sum(&eps1, &r("1"), &BigInt::from(60), &eps6()).unwrap();
        assert!(enc.lo() > &r("15198/100000"));
        assert!(enc.hi() < &r("15199/100000"));
        // Past the horizon the lower bound stays and the upper inflates.
        let past = partial_power_sum(&eps1, &r("1"), &BigInt::from(100), &eps6()).unwrap();
        assert!(past.lo() > &r("15198/100000"));
        assert!(past.hi() > enc.hi());
    }

    #[test]
    fn shifted_witness_certificate_replays_after_offset() {
        let p = r("1");
        let w = witness_vector(&p).unwrap();
        let shifted = SymbolicSequence::relocated(w, RelocationMap::Shift { by: 5 })
            .unwrap();
        let MembershipVerdict::Diverges { certificate } =
            lq_membership(&shifted, &r("1/2")).unwrap()
        else {
            panic!("expected divergence to survive a shift");
        };
        // The layout now addresses the shifted copy directly.
        certificate.spot_check(&shifted, &[1, 2, 7]).unwrap();
        let IndexLayout::Block { partition, block } = &certificate.layout else {
            panic!("expected a plain block layout");
        };
        assert_eq!(*block, 2);
        assert_eq!(partition.offset(), 5);
        let pos = certificate.escape_position(&r("4")).unwrap();
        let partial = partial_power_sum(&shifted, &r("1/2"), &pos, &r("1/1024")).unwrap();
        assert!(partial.lo() > &r("4"));
    }

    #[test]
    fn into_block_relocation_nests_the_layout() {
        let p = r("1");
        let w = witness_vector(&p).unwrap();
        let inner_block = SymbolicSequence::relocated(
            w,
            RelocationMap::IntoBlock {
                partition: BlockPartition::diagonal(),
                k: 3,
            },
        )
        .unwrap();
        let MembershipVerdict::Diverges { certificate } =
            lq_membership(&inner_block, &r("1/2")).unwrap()
        else {
            panic!("expected divergence to survive relocation into a block");
        };
        let IndexLayout::Nested { outer_block, .. } = &certificate.layout else {
            panic!("expected a nested layout");
        };
        assert_eq!(*outer_block, 3);
        certificate.spot_check(&inner_block, &[1, 2, 4]).unwrap();
        // Layout positions compose: rank 1 -> source position 2 -> rank 2
        // of diagonal block 3 -> ambient position 8.
        assert_eq!(
            certificate.layout.position(&BigInt::one()),
            BigInt::from(8)
        );
        assert_eq!(
            certificate.layout.locate(&BigInt::from(8)),
            Some(BigInt::one())
        );
    }

    #[test]
    fn verdicts_round_trip_through_json() {
        let w = witness_vector(&r("1")).unwrap();
        for q in [r("1"), r("1/2"), r("3")] {
            let v = lq_membership(&w, &q).unwrap();
            let json = serde_json::to_string(&v).unwrap();
            let back: MembershipVerdict = serde_json::from_str(&json).unwrap();
            assert_eq!(back, v);
            assert_eq!(serde_json::to_string(&back).unwrap(), json);
        }
    }

    #[test]
    fn bad_certificates_are_rejected() {
        let w = witness_vector(&r("1")).unwrap();
        let MembershipVerdict::Diverges { certificate } =
            lq_membership(&w, &r("1/2")).unwrap()
        else {
            panic!("expected divergence");
        };
        let mut broken = certificate.clone();
        broken.e_cmp = r("3/2");
        assert!(broken.check_structure().is_err());
        let mut broken = certificate.clone();
        broken.min_rank = 0;
        assert!(broken.check_structure().is_err());
        // An inflated constant is refuted by sampling.
        let mut inflated = certificate;
        inflated.constant = RealExpr::from_rational(r("50")).unwrap();
        assert!(inflated.spot_check(&w, &[1, 2, 3]).is_err());
    }

    #[test]
    fn sup_bound_dominates_coordinates() {
        let w = witness_vector(&r("1")).unwrap();
        let sup = sup_abs_upper(&w).unwrap();
        for j in 1..=40u64 {
            let enc = w.coordinate(j).unwrap().enclose(&eps6());
            assert!(enc.hi().abs() <= sup, "coordinate {j} above the sup bound");
        }
    }
}
