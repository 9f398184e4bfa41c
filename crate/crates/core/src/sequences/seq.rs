//! Symbolic model of the sequences the toolkit reasons about.
//!
//! A [`SymbolicSequence`] is a formal sum of finitely many scaled parts.
//! Each part is a signed rational coefficient, a nonnegative symbolic scale,
//! and a shape: a finite-support table, a power-law block `r^(-e)` laid out
//! along one block of a partition, the normalized block family (the witness
//! construction), or a relocation of another sequence onto a sparser index
//! set. Coordinates evaluate exactly to signed formal combinations of
//! [`RealExpr`] values ([`Coordinate`]); nothing is ever rounded at the
//! representation level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::numerics::{IntervalEnclosure, Rational, RealExpr};

use super::partition::BlockPartition;
use super::witness::{family_block_exponent, family_block_scale};

/// Pairing used to split a selection's index stream into countably many
/// disjoint infinite lanes; fixed so lane layouts are reproducible.
pub(crate) fn lane_pairing() -> BlockPartition {
    BlockPartition::diagonal()
}

/// Materialized prefix of a sparse index selection: indices `alpha_1 <
/// alpha_2 < ...`, all above the protected head `1..=n0`, each certified at
/// selection time to carry only coordinates of magnitude below `2^(-l)` in
/// every generating sequence. The conceptually infinite selected set is
/// determined by a deterministic rule, so this prefix is stable under
/// deepening; queries beyond the materialized depth fail with a budget
/// error instead of guessing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionTable {
    n0: u64,
    selected: Vec<u64>,
    skipped: Vec<u64>,
}

impl SelectionTable {
    pub fn new(n0: u64, selected: Vec<u64>, skipped: Vec<u64>) -> crate::Result<Self> {
        let mut prev = n0;
        for &a in &selected {
            if a <= prev {
                return Err(Error::InvalidConstruction(format!(
                    "selected indices must be strictly increasing and above {n0}; saw {a} after {prev}"
                )));
            }
            prev = a;
        }
        Ok(SelectionTable {
            n0,
            selected,
            skipped,
        })
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn depth(&self) -> u64 {
        self.selected.len() as u64
    }

    pub fn selected(&self) -> &[u64] {
        &self.selected
    }

    pub fn skipped(&self) -> &[u64] {
        &self.skipped
    }

    /// `alpha_l` (1-based), when materialized.
    pub fn alpha(&self, l: u64) -> Option<u64> {
        if l == 0 {
            return None;
        }
        self.selected.get(l as usize - 1).copied()
    }

    /// Largest index about which membership in the selected set is decided:
    /// everything at or below it is either a materialized `alpha_l` or
    /// permanently outside the selection.
    pub fn decided_limit(&self) -> u64 {
        self.selected.last().copied().unwrap_or(0).max(self.n0)
    }

    /// `Some(l)` when `j = alpha_l`; `None` when `j` is decidably outside;
    /// an error when `j` lies beyond the materialized horizon.
    pub fn selection_rank(&self, j: u64) -> crate::Result<Option<u64>> {
        match self.selected.binary_search(&j) {
            Ok(i) => Ok(Some(i as u64 + 1)),
            Err(_) => {
                if j <= self.decided_limit() {
                    Ok(None)
                } else {
                    Err(Error::BudgetExceeded {
                        context: format!(
                            "index {j} is beyond the materialized selection (depth {})",
                            self.depth()
                        ),
                    })
                }
            }
        }
    }

    /// Lane and in-lane rank of the `l`-th selected index under the fixed
    /// lane pairing.
    pub fn lane_of(&self, l: u64) -> (u32, u64) {
        let (lane, t) = lane_pairing()
            .locate_u64(l)
            .expect("selection ranks are 1-based");
        (lane, t)
    }

    /// Position in the ambient index set of the `t`-th element of lane
    /// `lane`, when materialized.
    pub fn lane_position(&self, lane: u32, t: u64) -> crate::Result<u64> {
        let l = lane_pairing()
            .position_u64(lane, t)
            .ok_or_else(|| Error::BudgetExceeded {
                context: "lane rank overflows the pairing range".into(),
            })?;
        self.alpha(l).ok_or_else(|| Error::BudgetExceeded {
            context: format!(
                "lane {lane} rank {t} needs selection depth {l}, materialized {}",
                self.depth()
            ),
        })
    }

    /// `f(t)`: the `t`-th positive integer outside the selected set, when
    /// that value is already decided by the materialized prefix.
    pub fn complement_index(&self, t: u64) -> crate::Result<u64> {
        assert!(t >= 1, "complement ranks are 1-based");
        let mut ans = t;
        for &a in &self.selected {
            if a <= ans {
                ans += 1;
            } else {
                break;
            }
        }
        if ans <= self.decided_limit() || self.selected.is_empty() && ans <= self.n0 {
            Ok(ans)
        } else {
            Err(Error::BudgetExceeded {
                context: format!(
                    "complement rank {t} reaches past the materialized selection horizon"
                ),
            })
        }
    }

    /// Number of complement ranks `t` for which [`Self::complement_index`]
    /// is decided.
    pub fn decided_complement_ranks(&self) -> u64 {
        self.decided_limit() - self.depth()
    }
}

/// Order-preserving injections used to relocate a sequence onto a sparser
/// index set; the `t`-th carried source index is `t` for `Shift` and
/// `IntoBlock`, and `f(t)` (the complement enumeration of the table) for
/// `Lane`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelocationMap {
    /// Target index `j` carries source index `j - by`.
    Shift { by: u64 },
    /// The rank-`r` element of block `k` carries source index `r`.
    IntoBlock { partition: BlockPartition, k: u32 },
    /// The `t`-th element of the given selection lane carries source index
    /// `f(t)`, the `t`-th index outside the selected set.
    Lane { table: Arc<SelectionTable>, lane: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Finitely many exact coordinates.
    Finite { values: BTreeMap<u64, Rational> },
    /// `r^(-exponent)` at the rank-`r` element of block `k`, zero elsewhere.
    Block {
        partition: BlockPartition,
        k: u32,
        exponent: Rational,
    },
    /// All blocks `k >= k0`, block `k` carrying `s_k * r^(-e_k)` with
    /// `e_k = 1/(p - 1/k)` and `s_k = 2^(-k) * zeta(p e_k)^(-1/p)`, so each
    /// block has p-norm exactly `2^(-k)`.
    Family { partition: BlockPartition, k0: u32 },
    /// Another sequence carried along an order-preserving injection.
    Relocated {
        source: Box<SymbolicSequence>,
        map: RelocationMap,
    },
}

/// One scaled part: `coeff * scale * shape`, with `coeff` a signed rational
/// and `scale` a nonnegative symbolic value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledPart {
    pub(crate) coeff: Rational,
    pub(crate) scale: RealExpr,
    pub(crate) shape: Shape,
}

impl ScaledPart {
    pub fn new(coeff: Rational, scale: RealExpr, shape: Shape) -> Self {
        ScaledPart {
            coeff,
            scale,
            shape,
        }
    }

    pub fn coeff(&self) -> &Rational {
        &self.coeff
    }

    pub fn scale(&self) -> &RealExpr {
        &self.scale
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicSequence {
    p: Rational,
    parts: Vec<ScaledPart>,
}

impl SymbolicSequence {
    pub fn new(p: Rational, parts: Vec<ScaledPart>) -> crate::Result<Self> {
        if !p.is_positive() {
            return Err(Error::InvalidConstruction(format!(
                "sequence exponent p must be positive, got {p}"
            )));
        }
        for part in &parts {
            validate_shape(&p, &part.shape)?;
        }
        Ok(SymbolicSequence {
            p,
            parts: normalize_parts(parts),
        })
    }

    pub fn zero(p: Rational) -> crate::Result<Self> {
        SymbolicSequence::new(p, Vec::new())
    }

    /// The standard basis vector `e_j`.
    pub fn unit(p: Rational, j: u64) -> crate::Result<Self> {
        SymbolicSequence::finite(p, BTreeMap::from([(j, Rational::one())]))
    }

    pub fn finite(p: Rational, values: BTreeMap<u64, Rational>) -> crate::Result<Self> {
        SymbolicSequence::new(
            p,
            vec![ScaledPart::new(
                Rational::one(),
                RealExpr::one(),
                Shape::Finite { values },
            )],
        )
    }

    /// Wraps a whole sequence as a single relocated part.
    pub fn relocated(source: SymbolicSequence, map: RelocationMap) -> crate::Result<Self> {
        let p = source.p.clone();
        SymbolicSequence::new(
            p,
            vec![ScaledPart::new(
                Rational::one(),
                RealExpr::one(),
                Shape::Relocated {
                    source: Box::new(source),
                    map,
                },
            )],
        )
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    pub fn parts(&self) -> &[ScaledPart] {
        &self.parts
    }

    /// Structurally zero (no parts survive normalization).
    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// Exact coordinatewise combination `sum coeffs[i] * seqs[i]`; all
    /// sequences must share the same `p`.
    pub fn linear_combination(
        coeffs: &[Rational],
        seqs: &[SymbolicSequence],
    ) -> crate::Result<Self> {
        if coeffs.len() != seqs.len() {
            return Err(Error::Precondition(
                "coefficient and sequence counts differ".into(),
            ));
        }
        let p = match seqs.first() {
            Some(s) => s.p.clone(),
            None => {
                return Err(Error::Precondition(
                    "empty linear combination has no ambient exponent".into(),
                ))
            }
        };
        let mut parts = Vec::new();
        for (c, s) in coeffs.iter().zip(seqs) {
            if s.p != p {
                return Err(Error::MismatchedExponent {
                    expected: p.to_string(),
                    got: s.p.to_string(),
                });
            }
            if c.is_zero() {
                continue;
            }
            for part in &s.parts {
                parts.push(ScaledPart::new(
                    c * &part.coeff,
                    part.scale.clone(),
                    part.shape.clone(),
                ));
            }
        }
        SymbolicSequence::new(p, parts)
    }

    /// The sequence with every coordinate multiplied by `coeff * scale`.
    pub(crate) fn scaled(&self, coeff: &Rational, scale: &RealExpr) -> Self {
        let parts = self
            .parts
            .iter()
            .map(|part| {
                ScaledPart::new(
                    coeff * &part.coeff,
                    scale.clone().mul(part.scale.clone()),
                    part.shape.clone(),
                )
            })
            .collect();
        SymbolicSequence {
            p: self.p.clone(),
            parts: normalize_parts(parts),
        }
    }

    /// Exact value of the `j`-th coordinate as a signed formal combination.
    /// Fails with a budget error only when `j` lies beyond a selection
    /// shape's materialized horizon.
    pub fn coordinate(&self, j: u64) -> crate::Result<Coordinate> {
        assert!(j >= 1, "coordinates are 1-based");
        let mut out = Coordinate::default();
        for part in &self.parts {
            accumulate_part(part, &self.p, j, &mut out)?;
        }
        Ok(out.normalized())
    }

    /// `Some(true)` when the support is certainly contained in `1..=n`,
    /// `Some(false)` when some coordinate beyond `n` is certainly nonzero.
    /// Infinite shapes always report `false`: their parts are nonzero by
    /// normalization.
    pub fn support_within(&self, n: u64) -> bool {
        self.parts.iter().all(|part| match &part.shape {
            Shape::Finite { values } => values
                .iter()
                .all(|(j, v)| *j <= n || v.is_zero()),
            _ => false,
        })
    }

    /// Smallest index that could carry a nonzero coordinate (a certified
    /// lower bound on the support minimum); `None` for the zero sequence.
    pub fn min_support_bound(&self) -> Option<u64> {
        self.parts
            .iter()
            .filter_map(|part| part_min_support(part))
            .min()
    }

    /// Certified upper bound on `sup_j |x_j|`, as a nonnegative symbolic
    /// value. Each shape's supremum is explicit: a finite table attains its
    /// largest magnitude, a power-law block `r^(-e)` with `e > 0` peaks at
    /// rank 1, and the normalized family peaks on block `k0` because both
    /// `2^(-k)` and `zeta(p e_k)^(-1/p)` decrease in `k` (`e_k` shrinks
    /// toward `1/p`, so the zeta value grows). Relocations move values
    /// without changing them. Summing per-part bounds over-counts only where
    /// parts overlap, so the total stays an upper bound.
    pub fn sup_bound(&self) -> crate::Result<RealExpr> {
        let mut terms = Vec::new();
        for part in &self.parts {
            let shape_sup = match &part.shape {
                Shape::Finite { values } => {
                    let max = values
                        .values()
                        .map(Rational::abs)
                        .max()
                        .unwrap_or_else(Rational::zero);
                    RealExpr::from_rational(max)?
                }
                Shape::Block { .. } => RealExpr::one(),
                Shape::Family { k0, .. } => family_block_scale(&self.p, *k0)?,
                Shape::Relocated { source, .. } => source.sup_bound()?,
            };
            terms.push(RealExpr::product([
                RealExpr::from_rational(part.coeff.abs())?,
                part.scale.clone(),
                shape_sup,
            ]));
        }
        Ok(RealExpr::sum_of(terms))
    }
}

fn validate_shape(p: &Rational, shape: &Shape) -> crate::Result<()> {
    match shape {
        Shape::Finite { .. } => Ok(()),
        Shape::Block { k, exponent, .. } => {
            if *k < 1 {
                return Err(Error::InvalidConstruction("block indices are 1-based".into()));
            }
            if !exponent.is_positive() {
                return Err(Error::InvalidConstruction(format!(
                    "block exponent must be positive, got {exponent}"
                )));
            }
            Ok(())
        }
        Shape::Family { k0, .. } => {
            // Every block k >= k0 must have a defined exponent 1/(p - 1/k).
            family_block_exponent(p, *k0).map(|_| ())
        }
        Shape::Relocated { source, map } => {
            if source.p != *p {
                return Err(Error::MismatchedExponent {
                    expected: p.to_string(),
                    got: source.p.to_string(),
                });
            }
            if let RelocationMap::Lane { lane, .. } = map {
                if *lane < 1 {
                    return Err(Error::InvalidConstruction("lanes are 1-based".into()));
                }
            }
            Ok(())
        }
    }
}

/// Drops parts that are identically zero and merges exactly-rational finite
/// parts into a single table so that cancellations happen at the
/// representation level.
fn normalize_parts(parts: Vec<ScaledPart>) -> Vec<ScaledPart> {
    let mut merged: BTreeMap<u64, Rational> = BTreeMap::new();
    let mut kept = Vec::new();
    for part in parts {
        if part.coeff.is_zero() || part.scale.is_zero() {
            continue;
        }
        match (&part.shape, part.scale.exact_rational()) {
            (Shape::Finite { values }, Some(s)) => {
                let factor = &part.coeff * s;
                for (j, v) in values {
                    if v.is_zero() {
                        continue;
                    }
                    let slot = merged.entry(*j).or_insert_with(Rational::zero);
                    *slot += &factor * v;
                }
            }
            _ => kept.push(part),
        }
    }
    merged.retain(|_, v| !v.is_zero());
    // Identical shapes under the same scale combine linearly, so opposite
    // copies cancel structurally instead of lingering as an entangled pair.
    let mut folded: Vec<ScaledPart> = Vec::new();
    for part in kept {
        match folded
            .iter_mut()
            .find(|e| e.scale == part.scale && e.shape == part.shape)
        {
            Some(existing) => existing.coeff += &part.coeff,
            None => folded.push(part),
        }
    }
    folded.retain(|part| !part.coeff.is_zero());
    let mut out = Vec::new();
    if !merged.is_empty() {
        out.push(ScaledPart::new(
            Rational::one(),
            RealExpr::one(),
            Shape::Finite { values: merged },
        ));
    }
    out.extend(folded);
    out
}

fn accumulate_part(
    part: &ScaledPart,
    p: &Rational,
    j: u64,
    out: &mut Coordinate,
) -> crate::Result<()> {
    match &part.shape {
        Shape::Finite { values } => {
            if let Some(v) = values.get(&j) {
                out.push(&part.coeff * v, part.scale.clone());
            }
            Ok(())
        }
        Shape::Block {
            partition,
            k,
            exponent,
        } => {
            if let Some((kk, r)) = partition.locate_u64(j) {
                if kk == *k {
                    let term = RealExpr::pow(
                        RealExpr::from_rational(Rational::from_int(r as i64))?,
                        -exponent,
                    )?;
                    out.push(part.coeff.clone(), part.scale.clone().mul(term));
                }
            }
            Ok(())
        }
        Shape::Family { partition, k0 } => {
            if let Some((k, r)) = partition.locate_u64(j) {
                if k >= *k0 {
                    let e = family_block_exponent(p, k)?;
                    let term = RealExpr::pow(
                        RealExpr::from_rational(Rational::from_int(r as i64))?,
                        -&e,
                    )?;
                    let value = family_block_scale(p, k)?.mul(term);
                    out.push(part.coeff.clone(), part.scale.clone().mul(value));
                }
            }
            Ok(())
        }
        Shape::Relocated { source, map } => {
            let source_index = match map {
                RelocationMap::Shift { by } => {
                    if j <= *by {
                        return Ok(());
                    }
                    Some(j - by)
                }
                RelocationMap::IntoBlock { partition, k } => match partition.locate_u64(j) {
                    Some((kk, r)) if kk == *k => Some(r),
                    _ => None,
                },
                RelocationMap::Lane { table, lane } => match table.selection_rank(j)? {
                    Some(l) => {
                        let (ll, t) = table.lane_of(l);
                        if ll == *lane {
                            Some(table.complement_index(t)?)
                        } else {
                            None
                        }
                    }
                    None => None,
                },
            };
            if let Some(sj) = source_index {
                let inner = source.coordinate(sj)?;
                for (c, e) in inner.terms {
                    out.push(&part.coeff * &c, part.scale.clone().mul(e));
                }
            }
            Ok(())
        }
    }
}

fn part_min_support(part: &ScaledPart) -> Option<u64> {
    match &part.shape {
        Shape::Finite { values } => values
            .iter()
            .find(|(_, v)| !v.is_zero())
            .map(|(j, _)| *j),
        Shape::Block { partition, k, .. } => partition.first_position(*k).to_u64(),
        Shape::Family { partition, k0 } => {
            // First positions increase with the block index in both schemes.
            partition.first_position(*k0).to_u64()
        }
        Shape::Relocated { source, map } => {
            let src = part_min_support_of(source)?;
            match map {
                RelocationMap::Shift { by } => src.checked_add(*by),
                RelocationMap::IntoBlock { partition, k } => {
                    partition.position(*k, &BigInt::from(src)).to_u64()
                }
                RelocationMap::Lane { table, .. } => {
                    // Everything in a lane sits above the protected head.
                    Some(table.n0() + 1)
                }
            }
        }
    }
}

fn part_min_support_of(s: &SymbolicSequence) -> Option<u64> {
    s.min_support_bound()
}

/// Signed exact coordinate value: a formal sum of rational multiples of
/// nonnegative symbolic values. Structural identity of normalized
/// coordinates implies equality of the real numbers they denote.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    terms: Vec<(Rational, RealExpr)>,
}

impl Coordinate {
    pub fn from_rational(r: Rational) -> Self {
        let mut c = Coordinate::default();
        c.push(r, RealExpr::one());
        c.normalized()
    }

    /// The coordinate denoting `r` times this one's value.
    pub fn scaled(&self, r: &Rational) -> Self {
        let mut out = Coordinate::default();
        for (c, e) in &self.terms {
            out.push(c * r, e.clone());
        }
        out.normalized()
    }

    pub(crate) fn push(&mut self, coeff: Rational, expr: RealExpr) {
        if coeff.is_zero() || expr.is_zero() {
            return;
        }
        self.terms.push((coeff, expr));
    }

    /// Groups structurally equal symbolic factors, folds exact rationals
    /// together, and drops cancelled terms.
    pub(crate) fn normalized(self) -> Self {
        let mut rational = Rational::zero();
        let mut grouped: BTreeMap<RealExpr, Rational> = BTreeMap::new();
        for (c, e) in self.terms {
            match e.exact_rational() {
                Some(r) => rational += &c * r,
                None => {
                    *grouped.entry(e).or_insert_with(Rational::zero) += c;
                }
            }
        }
        let mut terms = Vec::new();
        if !rational.is_zero() {
            terms.push((rational, RealExpr::one()));
        }
        for (e, c) in grouped {
            if !c.is_zero() {
                terms.push((c, e));
            }
        }
        Coordinate { terms }
    }

    pub fn terms(&self) -> &[(Rational, RealExpr)] {
        &self.terms
    }

    /// Exact rational value, when no irrational factor survives.
    pub fn exact(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(c, e)] if e.exact_rational().is_some() => {
                Some(c * e.exact_rational().expect("checked"))
            }
            _ => None,
        }
    }

    /// Three-valued zero test: structural for the decidable forms, enclosure
    /// refinement down to `floor` otherwise; `None` means undecided.
    pub fn decide_zero(&self, floor: &Rational) -> Option<bool> {
        match self.terms.as_slice() {
            [] => Some(true),
            [(c, _)] => {
                // A single term with positive symbolic factor and nonzero
                // coefficient is nonzero.
                debug_assert!(!c.is_zero());
                Some(false)
            }
            _ => {
                let e = self.enclose(floor);
                if e.excludes_zero() {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }

    /// Signed certified enclosure of the denoted real number.
    pub fn enclose(&self, eps: &Rational) -> IntervalEnclosure {
        if self.terms.is_empty() {
            return IntervalEnclosure::zero();
        }
        let n = Rational::from_int(self.terms.len() as i64);
        let mut acc = IntervalEnclosure::zero();
        for (c, e) in &self.terms {
            let share = &(eps / &n) / &(&c.abs() + &Rational::one());
            acc = acc.add(&e.enclose(&share).scale(c));
        }
        acc
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0/1");
        }
        for (i, (c, e)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if e.exact_rational().is_some() {
                write!(f, "{}", c * e.exact_rational().expect("checked"))?;
            } else {
                write!(f, "({c})*{e}")?;
            }
        }
        Ok(())
    }
}

/// Conservative support description used for disjointness analysis.
#[derive(Clone, Debug)]
pub(crate) enum SupportDesc {
    Finite(BTreeSet<u64>),
    /// Subset of one block of a partition.
    Block { partition: BlockPartition, k: u32 },
    /// Subset of the union of blocks `k >= k0`.
    BlocksFrom { partition: BlockPartition, k0: u32 },
    /// Subset of one lane of a selection.
    Lane { table: Arc<SelectionTable>, lane: u32 },
    /// No usable structure.
    Unknown,
}

pub(crate) fn part_support(part: &ScaledPart) -> SupportDesc {
    shape_support(&part.shape)
}

fn shape_support(shape: &Shape) -> SupportDesc {
    match shape {
        Shape::Finite { values } => SupportDesc::Finite(
            values
                .iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|(j, _)| *j)
                .collect(),
        ),
        Shape::Block { partition, k, .. } => SupportDesc::Block {
            partition: partition.clone(),
            k: *k,
        },
        Shape::Family { partition, k0 } => SupportDesc::BlocksFrom {
            partition: partition.clone(),
            k0: *k0,
        },
        Shape::Relocated { source, map } => match map {
            RelocationMap::IntoBlock { partition, k } => SupportDesc::Block {
                partition: partition.clone(),
                k: *k,
            },
            RelocationMap::Lane { table, lane } => SupportDesc::Lane {
                table: Arc::clone(table),
                lane: *lane,
            },
            RelocationMap::Shift { by } => {
                // A shifted finite support stays finite; anything else loses
                // its block structure.
                match sequence_support(source) {
                    SupportDesc::Finite(s) => SupportDesc::Finite(
                        s.into_iter().filter_map(|j| j.checked_add(*by)).collect(),
                    ),
                    _ => SupportDesc::Unknown,
                }
            }
        },
    }
}

/// Support of a whole sequence: exact for all-finite parts, the single
/// part's description otherwise, opaque when several structured parts mix.
pub(crate) fn sequence_support(s: &SymbolicSequence) -> SupportDesc {
    match s.parts.as_slice() {
        [] => SupportDesc::Finite(BTreeSet::new()),
        [only] => part_support(only),
        _ => SupportDesc::Unknown,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Overlap {
    Disjoint,
    Overlapping,
    Unknown,
}

pub(crate) fn support_overlap(a: &SupportDesc, b: &SupportDesc) -> Overlap {
    use SupportDesc::*;
    match (a, b) {
        (Finite(s), Finite(t)) => {
            if s.is_disjoint(t) {
                Overlap::Disjoint
            } else {
                Overlap::Overlapping
            }
        }
        (Finite(s), Block { partition, k }) | (Block { partition, k }, Finite(s)) => {
            if s.is_empty() {
                return Overlap::Disjoint;
            }
            let hit = s
                .iter()
                .any(|j| matches!(partition.locate_u64(*j), Some((kk, _)) if kk == *k));
            if hit {
                Overlap::Overlapping
            } else {
                Overlap::Disjoint
            }
        }
        (Finite(s), BlocksFrom { partition, k0 })
        | (BlocksFrom { partition, k0 }, Finite(s)) => {
            if s.is_empty() {
                return Overlap::Disjoint;
            }
            let hit = s
                .iter()
                .any(|j| matches!(partition.locate_u64(*j), Some((kk, _)) if kk >= *k0));
            if hit {
                Overlap::Overlapping
            } else {
                Overlap::Disjoint
            }
        }
        (Finite(s), Lane { table, lane }) | (Lane { table, lane }, Finite(s)) => {
            let mut verdict = Overlap::Disjoint;
            for j in s {
                match table.selection_rank(*j) {
                    Ok(Some(l)) => {
                        if table.lane_of(l).0 == *lane {
                            return Overlap::Overlapping;
                        }
                    }
                    Ok(None) => {}
                    Err(_) => verdict = Overlap::Unknown,
                }
            }
            verdict
        }
        (
            Block { partition: p1, k: k1 },
            Block { partition: p2, k: k2 },
        ) => {
            if p1 == p2 {
                if k1 == k2 {
                    Overlap::Overlapping
                } else {
                    Overlap::Disjoint
                }
            } else {
                Overlap::Unknown
            }
        }
        (Block { partition: p1, k }, BlocksFrom { partition: p2, k0 })
        | (BlocksFrom { partition: p2, k0 }, Block { partition: p1, k }) => {
            if p1 == p2 {
                if k < k0 {
                    Overlap::Disjoint
                } else {
                    Overlap::Overlapping
                }
            } else {
                Overlap::Unknown
            }
        }
        (BlocksFrom { partition: p1, .. }, BlocksFrom { partition: p2, .. }) => {
            if p1 == p2 {
                Overlap::Overlapping
            } else {
                Overlap::Unknown
            }
        }
        (
            Lane { table: t1, lane: l1 },
            Lane { table: t2, lane: l2 },
        ) => {
            if t1 == t2 {
                if l1 == l2 {
                    Overlap::Overlapping
                } else {
                    Overlap::Disjoint
                }
            } else {
                Overlap::Unknown
            }
        }
        _ => Overlap::Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::partition::PairingScheme;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn p1() -> Rational {
        r("1")
    }

    #[test]
    fn unit_vector_coordinates() {
        let e1 = SymbolicSequence::unit(p1(), 1).unwrap();
        assert_eq!(e1.coordinate(1).unwrap().exact(), Some(r("1")));
        assert_eq!(e1.coordinate(5).unwrap().exact(), Some(r("0")));
    }

    #[test]
    fn finite_parts_merge_and_cancel_exactly() {
        let a = SymbolicSequence::finite(
            p1(),
            BTreeMap::from([(1, r("2")), (3, r("1/2"))]),
        )
        .unwrap();
        let b = SymbolicSequence::finite(
            p1(),
            BTreeMap::from([(1, r("-2")), (4, r("5"))]),
        )
        .unwrap();
        let sum =
            SymbolicSequence::linear_combination(&[r("1"), r("1")], &[a, b]).unwrap();
        assert_eq!(sum.parts().len(), 1);
        assert_eq!(sum.coordinate(1).unwrap().exact(), Some(r("0")));
        assert_eq!(sum.coordinate(3).unwrap().exact(), Some(r("1/2")));
        assert_eq!(sum.coordinate(4).unwrap().exact(), Some(r("5")));
        assert!(sum.support_within(4));
        assert!(!sum.support_within(3));
    }

    #[test]
    fn zero_combination_is_structurally_zero() {
        let a = SymbolicSequence::unit(p1(), 2).unwrap();
        let z = SymbolicSequence::linear_combination(&[r("0")], &[a]).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn block_shape_evaluates_power_law() {
        let part = ScaledPart::new(
            r("3"),
            RealExpr::one(),
            Shape::Block {
                partition: BlockPartition::diagonal(),
                k: 2,
                exponent: r("2"),
            },
        );
        let s = SymbolicSequence::new(p1(), vec![part]).unwrap();
        // Block 2 positions: 2, 5, 9, 14 ... carrying r^(-2).
        assert_eq!(s.coordinate(2).unwrap().exact(), Some(r("3")));
        assert_eq!(s.coordinate(5).unwrap().exact(), Some(r("3/4")));
        assert_eq!(s.coordinate(9).unwrap().exact(), Some(r("1/3")));
        assert_eq!(s.coordinate(1).unwrap().exact(), Some(r("0")));
    }

    #[test]
    fn shift_relocation_moves_coordinates() {
        let e1 = SymbolicSequence::unit(p1(), 1).unwrap();
        let shifted =
            SymbolicSequence::relocated(e1, RelocationMap::Shift { by: 7 }).unwrap();
        assert_eq!(shifted.coordinate(8).unwrap().exact(), Some(r("1")));
        assert_eq!(shifted.coordinate(7).unwrap().exact(), Some(r("0")));
        assert_eq!(shifted.coordinate(1).unwrap().exact(), Some(r("0")));
        assert_eq!(shifted.min_support_bound(), Some(8));
    }

    #[test]
    fn into_block_relocation_follows_block_enumeration() {
        let src = SymbolicSequence::finite(
            p1(),
            BTreeMap::from([(1, r("10")), (2, r("20")), (3, r("30"))]),
        )
        .unwrap();
        let reloc = SymbolicSequence::relocated(
            src,
            RelocationMap::IntoBlock {
                partition: BlockPartition::diagonal(),
                k: 3,
            },
        )
        .unwrap();
        // Block 3 positions: 4, 8, 13, ...
        assert_eq!(reloc.coordinate(4).unwrap().exact(), Some(r("10")));
        assert_eq!(reloc.coordinate(8).unwrap().exact(), Some(r("20")));
        assert_eq!(reloc.coordinate(13).unwrap().exact(), Some(r("30")));
        assert_eq!(reloc.coordinate(5).unwrap().exact(), Some(r("0")));
    }

    #[test]
    fn selection_table_complement_enumeration() {
        let t = SelectionTable::new(2, vec![4, 6, 9], vec![]).unwrap();
        // Complement: 1, 2, 3, 5, 7, 8, then undecided past 9.
        assert_eq!(t.complement_index(1).unwrap(), 1);
        assert_eq!(t.complement_index(4).unwrap(), 5);
        assert_eq!(t.complement_index(5).unwrap(), 7);
        assert_eq!(t.complement_index(6).unwrap(), 8);
        assert!(t.complement_index(7).is_err());
        assert_eq!(t.decided_complement_ranks(), 6);
        assert_eq!(t.selection_rank(6).unwrap(), Some(2));
        assert_eq!(t.selection_rank(7).unwrap(), None);
        assert!(t.selection_rank(10).is_err());
    }

    #[test]
    fn selection_table_rejects_nonincreasing_indices() {
        assert!(SelectionTable::new(2, vec![4, 4], vec![]).is_err());
        assert!(SelectionTable::new(5, vec![3], vec![]).is_err());
    }

    #[test]
    fn lane_relocation_reads_source_through_complement() {
        // Selection alpha = 10, 20, 30, 40, 50, 60 with n0 = 3.
        let table = Arc::new(
            SelectionTable::new(3, vec![10, 20, 30, 40, 50, 60], vec![]).unwrap(),
        );
        let src = SymbolicSequence::finite(
            p1(),
            BTreeMap::from([(1, r("1")), (2, r("2")), (3, r("3")), (4, r("4"))]),
        )
        .unwrap();
        let lane1 = SymbolicSequence::relocated(
            src.clone(),
            RelocationMap::Lane {
                table: Arc::clone(&table),
                lane: 1,
            },
        )
        .unwrap();
        // Lane 1 takes selection ranks 1, 3, 6, ... => alpha 10, 30, 60.
        // Complement enumeration f: 1,2,3,4,... (none selected below 10
        // except none): f(1)=1, f(2)=2, f(3)=3.
        assert_eq!(lane1.coordinate(10).unwrap().exact(), Some(r("1")));
        assert_eq!(lane1.coordinate(30).unwrap().exact(), Some(r("2")));
        assert_eq!(lane1.coordinate(60).unwrap().exact(), Some(r("3")));
        // alpha_2 = 20 belongs to lane 2, so lane 1 is zero there.
        assert_eq!(lane1.coordinate(20).unwrap().exact(), Some(r("0")));
        assert_eq!(lane1.coordinate(15).unwrap().exact(), Some(r("0")));
        assert!(lane1.coordinate(99).is_err());
    }

    #[test]
    fn coordinate_normalization_cancels_symbolic_terms() {
        let mut c = Coordinate::default();
        let z = RealExpr::pseries(r("2")).unwrap();
        c.push(r("1/2"), z.clone());
        c.push(r("-1/2"), z);
        c.push(r("3"), RealExpr::one());
        let n = c.normalized();
        assert_eq!(n.exact(), Some(r("3")));
        assert_eq!(n.decide_zero(&r("1/1000")), Some(false));
    }

    #[test]
    fn coordinate_enclosure_is_signed_and_tight() {
        let mut c = Coordinate::default();
        c.push(r("-2"), RealExpr::pseries(r("2")).unwrap());
        c.push(r("1"), RealExpr::one());
        let e = c.normalized().enclose(&r("1/100000"));
        // 1 - 2*zeta(2) = -2.2898681...
        assert!(e.lo() > &r("-229/100"));
        assert!(e.hi() < &r("-228/100"));
        assert!(e.width() <= r("1/100000"));
    }

    #[test]
    fn support_overlap_rules() {
        let diag = BlockPartition::diagonal();
        let dyad = BlockPartition::new(PairingScheme::Dyadic, 0);
        let b2 = SupportDesc::Block {
            partition: diag.clone(),
            k: 2,
        };
        let b3 = SupportDesc::Block {
            partition: diag.clone(),
            k: 3,
        };
        let fam3 = SupportDesc::BlocksFrom {
            partition: diag.clone(),
            k0: 3,
        };
        assert_eq!(support_overlap(&b2, &b3), Overlap::Disjoint);
        assert_eq!(support_overlap(&b2, &fam3), Overlap::Disjoint);
        assert_eq!(support_overlap(&b3, &fam3), Overlap::Overlapping);
        assert_eq!(
            support_overlap(
                &b2,
                &SupportDesc::Block {
                    partition: dyad,
                    k: 5
                }
            ),
            Overlap::Unknown
        );
        // Finite vs block: position 5 is in diagonal block 2.
        let f = SupportDesc::Finite(BTreeSet::from([1, 5]));
        assert_eq!(support_overlap(&f, &b2), Overlap::Overlapping);
        let g = SupportDesc::Finite(BTreeSet::from([1, 3]));
        assert_eq!(support_overlap(&g, &b2), Overlap::Disjoint);
        // Lanes of one table are disjoint from each other.
        let table = Arc::new(SelectionTable::new(0, vec![5, 6, 7], vec![]).unwrap());
        let l1 = SupportDesc::Lane {
            table: Arc::clone(&table),
            lane: 1,
        };
        let l2 = SupportDesc::Lane {
            table: Arc::clone(&table),
            lane: 2,
        };
        assert_eq!(support_overlap(&l1, &l2), Overlap::Disjoint);
        assert_eq!(support_overlap(&l1, &l1.clone()), Overlap::Overlapping);
        // Finite {5} hits selection rank 1 = lane 1.
        let h = SupportDesc::Finite(BTreeSet::from([5]));
        assert_eq!(support_overlap(&h, &l1), Overlap::Overlapping);
        assert_eq!(support_overlap(&h, &l2), Overlap::Disjoint);
    }

    #[test]
    fn serde_round_trip_for_sequences() {
        let s = SymbolicSequence::new(
            p1(),
            vec![
                ScaledPart::new(
                    r("-1/3"),
                    RealExpr::one(),
                    Shape::Finite {
                        values: BTreeMap::from([(2, r("7/2"))]),
                    },
                ),
                ScaledPart::new(
                    r("1"),
                    RealExpr::pow(RealExpr::pseries(r("2")).unwrap(), r("-1")).unwrap(),
                    Shape::Block {
                        partition: BlockPartition::diagonal(),
                        k: 2,
                        exponent: r("2"),
                    },
                ),
            ],
        )
        .unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: SymbolicSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
