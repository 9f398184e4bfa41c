//! The sparse-tail subspace construction and its obstruction reports.
//!
//! Starting from finitely many certified generator sequences, this module
//! materializes the machinery behind an infinite-dimensional closed span
//! whose nonzero members all escape every strictly smaller summability
//! exponent:
//!
//! * [`select_indices`] drives a certified search for indices on which every
//!   generator is provably small (below `2^-l` at depth `l`), archiving one
//!   replayable [`SelectionCheck`] per decision;
//! * [`build_operator`] packages generators, a certified independent head
//!   prefix, and a selection into a [`SubspaceOperator`]; tail coefficient
//!   slots act through [`epsilon_vector`] relocations of the first generator
//!   onto disjoint lanes of the selected set;
//! * [`certify_outside`] certifies that a nonzero combination escapes a
//!   smaller exponent, either structurally (a divergence certificate) or by
//!   threshold-crossing partial-sum evidence restricted to the complement of
//!   the selected set;
//! * [`aleph0_obstruction`] and the head-or-tail membership pair
//!   ([`dichotomy_membership`], [`dichotomy_obstruction`]) produce reports
//!   showing why two natural candidate sets admit no such closed span.
//!
//! Everything here is exact: enclosures are used only to *certify* strict
//! inequalities, never to assert equalities.

use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::linalg::{certified_independent, find_n0_with, HeadMatrix, Independence};
use crate::numerics::{IntervalEnclosure, Rational, RealExpr};
use crate::sequences::{
    first_escape_block, lq_membership_with, partial_power_sum, witness_vector, BlockPartition,
    EvidenceBudget, MembershipVerdict, NumericCheckpoint, PairingScheme, RelocationMap,
    SelectionTable, SymbolicSequence,
};
use crate::{Error, Result};

/// Precision floor for zero-decisions on individual coordinates, `2^-64`.
const COORDINATE_DECISION_BITS: u32 = 64;

/// How far past the protected head the obstruction search scans for a
/// decidably nonzero tail coordinate.
const TAIL_SCAN_SPAN: u64 = 256;

// ---------------------------------------------------------------------------
// Index selection
// ---------------------------------------------------------------------------

/// Budgets for the certified index-selection search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionBudget {
    /// Candidates examined per depth level before the search reports a stall.
    pub scan_window: u64,
    /// Enclosures are refined down to `threshold * 2^-sweep_shift` before a
    /// candidate is set aside as undecided.
    pub sweep_shift: u32,
}

impl Default for SelectionBudget {
    fn default() -> Self {
        SelectionBudget {
            scan_window: 4096,
            sweep_shift: 24,
        }
    }
}

/// What the selection decided about one candidate index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOutcome {
    /// Every generator's coordinate was certified below the level threshold.
    Selected,
    /// Some coordinate straddled the threshold down to the precision floor;
    /// the index stays outside the selection and is recorded as skipped.
    Undecided,
}

/// Archived evidence for one selection decision: the enclosure obtained for
/// each generator's coordinate at the candidate index. Replayable: fresh
/// enclosures of the same coordinates must be consistent with these.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCheck {
    pub level: u32,
    pub index: u64,
    pub threshold: Rational,
    /// One coordinate enclosure per generator, in generator order. An
    /// undecided check may carry fewer: bounds stop at the straddling
    /// generator.
    pub bounds: Vec<IntervalEnclosure>,
    pub outcome: CheckOutcome,
}

/// A materialized index selection together with its audit trail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSelection {
    table: Arc<SelectionTable>,
    checks: Vec<SelectionCheck>,
}

impl IndexSelection {
    pub fn table(&self) -> &Arc<SelectionTable> {
        &self.table
    }

    pub fn checks(&self) -> &[SelectionCheck] {
        &self.checks
    }

    pub fn n0(&self) -> u64 {
        self.table.n0()
    }

    pub fn depth(&self) -> u64 {
        self.table.depth()
    }

    /// Re-derives every archived check against the given generators: outcomes
    /// must tile the table exactly, selected bounds must clear their
    /// thresholds, and a fresh enclosure of each checked coordinate must
    /// overlap the archived one. Any discrepancy is an
    /// [`Error::InvalidConstruction`].
    pub fn replay(&self, seqs: &[SymbolicSequence]) -> Result<()> {
        let selected: Vec<u64> = self
            .checks
            .iter()
            .filter(|c| c.outcome == CheckOutcome::Selected)
            .map(|c| c.index)
            .collect();
        if selected != self.table.selected() {
            return Err(Error::InvalidConstruction(
                "selected checks do not match the selection table".into(),
            ));
        }
        let undecided: Vec<u64> = self
            .checks
            .iter()
            .filter(|c| c.outcome == CheckOutcome::Undecided)
            .map(|c| c.index)
            .collect();
        if undecided != self.table.skipped() {
            return Err(Error::InvalidConstruction(
                "undecided checks do not match the table's skipped indices".into(),
            ));
        }
        for check in &self.checks {
            if check.threshold != Rational::pow2_neg(check.level) {
                return Err(Error::InvalidConstruction(format!(
                    "check at index {} carries a threshold inconsistent with its level",
                    check.index
                )));
            }
            if check.bounds.len() > seqs.len()
                || (check.outcome == CheckOutcome::Selected && check.bounds.len() != seqs.len())
            {
                return Err(Error::InvalidConstruction(format!(
                    "check at index {} archives a wrong number of bounds",
                    check.index
                )));
            }
            let eps = &check.threshold * &Rational::pow2_neg(4);
            for (seq, archived) in seqs.iter().zip(&check.bounds) {
                if check.outcome == CheckOutcome::Selected
                    && !(archived.abs().hi() < &check.threshold)
                {
                    return Err(Error::InvalidConstruction(format!(
                        "archived bound at index {} does not clear its threshold",
                        check.index
                    )));
                }
                let fresh = seq.coordinate(check.index)?.enclose(&eps);
                if fresh.lo() > archived.hi() || archived.lo() > fresh.hi() {
                    return Err(Error::InvalidConstruction(format!(
                        "archived bound at index {} is inconsistent with a fresh enclosure",
                        check.index
                    )));
                }
            }
        }
        Ok(())
    }
}

enum CandidateOutcome {
    Below(Vec<IntervalEnclosure>),
    NotBelow,
    Undecided(Vec<IntervalEnclosure>),
}

/// Decides whether every generator's coordinate at `j` has absolute value
/// certifiedly below `threshold`, sweeping enclosure precision down to
/// `threshold * 2^-sweep_shift` before giving up on a straddling coordinate.
fn certify_small(
    seqs: &[SymbolicSequence],
    j: u64,
    threshold: &Rational,
    budget: &SelectionBudget,
) -> Result<CandidateOutcome> {
    let mut bounds = Vec::with_capacity(seqs.len());
    let floor = threshold * &Rational::pow2_neg(budget.sweep_shift);
    let half = Rational::new(1, 2);
    for seq in seqs {
        let coord = seq.coordinate(j)?;
        if let Some(a) = coord.exact() {
            if a.abs() < *threshold {
                bounds.push(IntervalEnclosure::point(a));
                continue;
            }
            return Ok(CandidateOutcome::NotBelow);
        }
        let mut eps = threshold * &Rational::new(1, 4);
        loop {
            let enc = coord.enclose(&eps);
            let mag = enc.abs();
            if mag.hi() < threshold {
                bounds.push(enc);
                break;
            }
            if mag.lo() >= threshold {
                return Ok(CandidateOutcome::NotBelow);
            }
            if eps <= floor {
                bounds.push(enc);
                return Ok(CandidateOutcome::Undecided(bounds));
            }
            eps = Rational::max2(&(&eps * &half), &floor);
        }
    }
    Ok(CandidateOutcome::Below(bounds))
}

/// [`select_indices_with`] under the default [`SelectionBudget`].
pub fn select_indices(
    seqs: &[SymbolicSequence],
    n0: u64,
    depth: u32,
) -> Result<IndexSelection> {
    select_indices_with(seqs, n0, depth, &SelectionBudget::default())
}

/// Materializes the first `depth` indices of the canonical sparse selection
/// over the given generators: scanning upward from `n0 + 1`, level `l` picks
/// the first index at which every generator's coordinate is certified below
/// `2^-l` in absolute value. Candidates that cannot be decided at the
/// precision floor are recorded as skipped and remain outside the selection;
/// a level whose scan window passes without any selection fails with
/// [`Error::SelectionStalled`].
pub fn select_indices_with(
    seqs: &[SymbolicSequence],
    n0: u64,
    depth: u32,
    budget: &SelectionBudget,
) -> Result<IndexSelection> {
    if seqs.is_empty() {
        return Err(Error::Precondition(
            "index selection needs at least one generator".into(),
        ));
    }
    if budget.scan_window == 0 {
        return Err(Error::Precondition(
            "selection scan window must be positive".into(),
        ));
    }
    let mut selected = Vec::with_capacity(depth as usize);
    let mut skipped = Vec::new();
    let mut checks = Vec::new();
    let mut next = n0 + 1;
    for level in 1..=depth {
        let threshold = Rational::pow2_neg(level);
        let mut found = false;
        let mut examined = 0u64;
        while examined < budget.scan_window {
            let j = next;
            next += 1;
            examined += 1;
            match certify_small(seqs, j, &threshold, budget)? {
                CandidateOutcome::Below(bounds) => {
                    selected.push(j);
                    checks.push(SelectionCheck {
                        level,
                        index: j,
                        threshold: threshold.clone(),
                        bounds,
                        outcome: CheckOutcome::Selected,
                    });
                    found = true;
                    break;
                }
                CandidateOutcome::NotBelow => {}
                CandidateOutcome::Undecided(bounds) => {
                    skipped.push(j);
                    checks.push(SelectionCheck {
                        level,
                        index: j,
                        threshold: threshold.clone(),
                        bounds,
                        outcome: CheckOutcome::Undecided,
                    });
                }
            }
        }
        if !found {
            return Err(Error::SelectionStalled {
                level,
                context: format!(
                    "no index in ({}, {}) certified below 2^-{} for all {} generators",
                    next - examined - 1,
                    next,
                    level,
                    seqs.len()
                ),
            });
        }
    }
    let table = SelectionTable::new(n0, selected, skipped)?;
    Ok(IndexSelection {
        table: Arc::new(table),
        checks,
    })
}

// ---------------------------------------------------------------------------
// The subspace operator
// ---------------------------------------------------------------------------

/// Budgets for [`build_operator`].
#[derive(Clone, Debug)]
pub struct OperatorBudget {
    /// Longest head prefix tried when certifying generator independence.
    pub head_columns: u64,
    /// Precision floor for the independence certification sweep.
    pub independence_floor: Rational,
    /// Depth of the materialized index selection.
    pub selection_depth: u32,
    pub selection: SelectionBudget,
    /// Budget for the generator summability gates.
    pub membership_gate: EvidenceBudget,
    /// Number of strictly smaller exponents `q = p*g/(g+1)` at which each
    /// generator must certifiedly escape.
    pub divergence_grid: u32,
}

impl Default for OperatorBudget {
    fn default() -> Self {
        OperatorBudget {
            head_columns: 64,
            independence_floor: Rational::pow2_neg(64),
            selection_depth: 12,
            selection: SelectionBudget::default(),
            membership_gate: EvidenceBudget::default(),
            divergence_grid: 2,
        }
    }
}

/// A finite generator family with a certified independent head prefix and a
/// materialized sparse index selection. Coefficient slots `0..n` act through
/// the generators; slot `i >= n` acts through a copy of the first generator
/// relocated onto lane `i - n + 1` of the selected set, so distinct tail
/// slots have disjoint supports inside the selection and every tail support
/// avoids the protected head `1..=n0`.
#[derive(Clone, Debug)]
pub struct SubspaceOperator {
    basis: Vec<SymbolicSequence>,
    /// Certified upper bounds for each generator's `p`-power sum.
    norm_bounds: Vec<RealExpr>,
    selection: IndexSelection,
    p: Rational,
    p_tilde: Rational,
}

impl SubspaceOperator {
    pub fn basis(&self) -> &[SymbolicSequence] {
        &self.basis
    }

    /// Number of head coefficient slots.
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn selection(&self) -> &IndexSelection {
        &self.selection
    }

    /// Length of the certified independent head prefix.
    pub fn n0(&self) -> u64 {
        self.selection.n0()
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    /// `min(p, 1)`: the exponent making `t -> t^p_tilde` subadditive.
    pub fn p_tilde(&self) -> &Rational {
        &self.p_tilde
    }

    /// Certified upper bound for `sum_j |g_i(j)|^p` of generator `i`.
    pub fn generator_norm_power(&self, i: usize) -> &RealExpr {
        &self.norm_bounds[i]
    }

    /// The combination of the generators alone by the first `n` coefficients
    /// (missing entries are zero).
    pub fn head_combination(&self, coeffs: &[Rational]) -> Result<SymbolicSequence> {
        let n = self.basis.len().min(coeffs.len());
        let mut cs = Vec::new();
        let mut vs = Vec::new();
        for i in 0..n {
            if !coeffs[i].is_zero() {
                cs.push(coeffs[i].clone());
                vs.push(self.basis[i].clone());
            }
        }
        if cs.is_empty() {
            return SymbolicSequence::zero(self.p.clone());
        }
        SymbolicSequence::linear_combination(&cs, &vs)
    }
}

/// Builds a [`SubspaceOperator`] from the given generators, verifying the
/// contracts the construction rests on: a shared ambient exponent, certified
/// `p`-summability, certified escape at a grid of strictly smaller
/// exponents, a certified independent head prefix, and a materialized index
/// selection.
pub fn build_operator(
    seqs: &[SymbolicSequence],
    budget: &OperatorBudget,
) -> Result<SubspaceOperator> {
    if seqs.is_empty() {
        return Err(Error::Precondition(
            "the construction needs at least one generator".into(),
        ));
    }
    let p = seqs[0].p().clone();
    let mut norm_bounds = Vec::with_capacity(seqs.len());
    for (i, seq) in seqs.iter().enumerate() {
        if seq.p() != &p {
            return Err(Error::MismatchedExponent {
                expected: p.to_string(),
                got: seq.p().to_string(),
            });
        }
        if seq.is_zero() {
            return Err(Error::Precondition(format!(
                "generator {i} is the zero sequence"
            )));
        }
        match lq_membership_with(seq, &p, &budget.membership_gate)? {
            MembershipVerdict::Converges { bound } => norm_bounds.push(bound),
            _ => {
                return Err(Error::Precondition(format!(
                    "generator {i} is not certified summable at the ambient exponent {p}"
                )))
            }
        }
        for g in 1..=budget.divergence_grid {
            let q = &p * &Rational::new(g as i64, g as i64 + 1);
            match lq_membership_with(seq, &q, &budget.membership_gate)? {
                MembershipVerdict::Diverges { .. } => {}
                _ => {
                    return Err(Error::Precondition(format!(
                        "generator {i} is not certified to escape exponent {q}"
                    )))
                }
            }
        }
    }
    let n0 = find_n0_with(seqs, budget.head_columns, &budget.independence_floor)?;
    let selection = select_indices_with(seqs, n0, budget.selection_depth, &budget.selection)?;
    let p_tilde = Rational::min2(&p, &Rational::one());
    Ok(SubspaceOperator {
        basis: seqs.to_vec(),
        norm_bounds,
        selection,
        p,
        p_tilde,
    })
}

/// The tail-slot vector for coefficient slot `i >= n`: the first generator
/// relocated onto lane `i - n + 1` of the selected index set. Its values are
/// exactly the first generator's values (reindexed by the complement
/// enumeration), its support lies inside the selection, and distinct slots
/// occupy disjoint lanes.
pub fn epsilon_vector(op: &SubspaceOperator, i: usize) -> Result<SymbolicSequence> {
    let n = op.basis.len();
    if i < n {
        return Err(Error::Precondition(format!(
            "tail slots start at index {n}, got {i}"
        )));
    }
    let lane = u32::try_from(i - n + 1).map_err(|_| {
        Error::Precondition(format!("tail slot {i} exceeds the addressable lane range"))
    })?;
    SymbolicSequence::relocated(
        op.basis[0].clone(),
        RelocationMap::Lane {
            table: Arc::clone(op.selection.table()),
            lane,
        },
    )
}

/// The image of a finitely supported coefficient vector: head slots act
/// through the generators, tail slots through [`epsilon_vector`]s.
pub fn apply_operator(op: &SubspaceOperator, coeffs: &[Rational]) -> Result<SymbolicSequence> {
    let n = op.basis.len();
    let mut cs = Vec::new();
    let mut vs = Vec::new();
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        cs.push(c.clone());
        vs.push(if i < n {
            op.basis[i].clone()
        } else {
            epsilon_vector(op, i)?
        });
    }
    if cs.is_empty() {
        return SymbolicSequence::zero(op.p.clone());
    }
    SymbolicSequence::linear_combination(&cs, &vs)
}

/// Upper bound for the `q`-power mass the selected set can carry of a head
/// combination with the given coefficients: each selected index at depth `l`
/// has every generator coordinate below `2^-l`, so the combination's value
/// there is below `(sum_i |a_i|) * 2^-l`.
fn selection_mass_bound(head: &[Rational], q: &Rational) -> Result<RealExpr> {
    let l1 = head
        .iter()
        .fold(Rational::zero(), |acc, c| &acc + &c.abs());
    let promise = RealExpr::geometric(
        RealExpr::pow(RealExpr::from_rational(Rational::new(1, 2))?, q.clone())?,
        1,
    )?;
    Ok(RealExpr::pow(RealExpr::from_rational(l1)?, q.clone())?.mul(promise))
}

/// Mirror of the membership evidence loop, with every partial-sum lower
/// bound reduced by a certified upper bound on the `q`-mass that restriction
/// to the complement of the selected set removes. Checkpoint lower bounds
/// are therefore valid for the restricted image; upper bounds still bound
/// the unrestricted sums.
fn restricted_evidence(
    subject: &SymbolicSequence,
    q: &Rational,
    removed: &RealExpr,
    budget: &EvidenceBudget,
) -> Result<MembershipVerdict> {
    let removed_hi = removed.enclose(&budget.eps).hi().clone();
    let mut checkpoints = Vec::new();
    let mut n = budget.start.clone();
    if n < BigInt::from(2) {
        n = BigInt::from(2);
    }
    let mut reached = false;
    for _ in 0..budget.max_checkpoints {
        let enc = match partial_power_sum(subject, q, &n, &budget.eps) {
            Ok(e) => e,
            Err(Error::BudgetExceeded { .. }) => break,
            Err(e) => return Err(e),
        };
        let mut lower = enc.lo() - &removed_hi;
        if lower.is_negative() {
            lower = Rational::zero();
        }
        let passed = lower > budget.threshold;
        checkpoints.push(NumericCheckpoint {
            upto: n.clone(),
            lower,
            upper: enc.hi().clone(),
        });
        if passed {
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

/// Certifies that the image of a nonzero coefficient vector escapes the
/// strictly smaller exponent `q`.
///
/// When every head coefficient vanishes the image lives on disjoint lanes of
/// the selection and is certified directly. Otherwise the image agrees with
/// the head combination outside the selected set, and the selection promises
/// that restriction drops at most [`selection_mass_bound`] of `q`-mass; a
/// divergence certificate for the head combination absorbs that allowance
/// into its `removed_upper` slot, and partial-sum evidence subtracts it from
/// every lower bound via [`restricted_evidence`].
pub fn certify_outside(
    op: &SubspaceOperator,
    coeffs: &[Rational],
    q: &Rational,
    budget: &EvidenceBudget,
) -> Result<MembershipVerdict> {
    if !q.is_positive() || q >= &op.p {
        return Err(Error::Precondition(format!(
            "escape is certified only for exponents strictly between 0 and p = {}, got {q}",
            op.p
        )));
    }
    if coeffs.iter().all(Rational::is_zero) {
        return Err(Error::Precondition(
            "the zero combination escapes nothing; coefficients must not all vanish".into(),
        ));
    }
    let n = op.basis.len();
    let head = &coeffs[..coeffs.len().min(n)];
    if head.iter().all(Rational::is_zero) {
        let image = apply_operator(op, coeffs)?;
        return lq_membership_with(&image, q, budget);
    }
    let h = op.head_combination(coeffs)?;
    if h.is_zero() {
        return Err(Error::InvalidConstruction(
            "independent generators produced a vanishing head combination".into(),
        ));
    }
    let removed = selection_mass_bound(head, q)?;
    // Probe the structural routes without spending the evidence budget: a
    // zero-checkpoint probe returns immediately when only a walk would help.
    let probe = EvidenceBudget {
        max_checkpoints: 0,
        ..budget.clone()
    };
    match lq_membership_with(&h, q, &probe)? {
        MembershipVerdict::Diverges { mut certificate } => {
            let prev = certificate.removed_upper.take();
            certificate.removed_upper = Some(match prev {
                Some(r) => r.add(removed),
                None => removed,
            });
            if certificate.underlying.is_none() {
                certificate.underlying = Some(Box::new(h));
            }
            Ok(MembershipVerdict::Diverges { certificate })
        }
        MembershipVerdict::NumericEvidence { .. } => restricted_evidence(&h, q, &removed, budget),
        MembershipVerdict::Converges { .. } => {
            // The head combination alone is summable at q, so restriction
            // arguments say nothing; fall back to the whole image.
            let image = apply_operator(op, coeffs)?;
            lq_membership_with(&image, q, budget)
        }
    }
}

/// Certifies the norm chain `||image||_p^pt <= M^pt * sum_i |a_i|^pt` with
/// `pt = min(p, 1)` and `M^p` the largest generator norm bound: the first
/// step `||image||_p^pt <= sum_i |a_i|^pt ||g_i||_p^pt` is the triangle
/// inequality for the subadditive power `pt`, and the second is certified
/// either structurally (every used slot carries the same norm bound
/// expression, as relocation preserves power sums) or by comparing
/// enclosures of the two assembled sides at half-width `eps`.
///
/// Returns `Ok(false)` when neither route certifies — an honest "not
/// certified", not a violation.
pub fn norm_bound_check(
    op: &SubspaceOperator,
    coeffs: &[Rational],
    eps: &Rational,
) -> Result<bool> {
    if !eps.is_positive() {
        return Err(Error::Precondition(
            "enclosure half-width must be positive".into(),
        ));
    }
    if coeffs.iter().all(Rational::is_zero) {
        return Ok(true);
    }
    let n = op.basis.len();
    let ratio = &op.p_tilde / &op.p;
    let mut used_bounds: Vec<&RealExpr> = Vec::new();
    let mut coeff_terms = Vec::new();
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        used_bounds.push(if i < n {
            &op.norm_bounds[i]
        } else {
            // Tail slots relocate the first generator injectively, so its
            // power-sum bound still dominates.
            &op.norm_bounds[0]
        });
        coeff_terms.push(RealExpr::pow(
            RealExpr::from_rational(c.abs())?,
            op.p_tilde.clone(),
        )?);
    }
    let reference = used_bounds
        .iter()
        .max_by(|a, b| {
            let ea = a.enclose(eps);
            let eb = b.enclose(eps);
            ea.hi().cmp(eb.hi())
        })
        .copied()
        .expect("some coefficient is nonzero");
    let structurally_dominated = used_bounds.iter().all(|b| *b == reference);

    let mut lhs_terms = Vec::with_capacity(coeff_terms.len());
    for (b, c) in used_bounds.iter().zip(&coeff_terms) {
        lhs_terms.push(RealExpr::pow((*b).clone(), ratio.clone())?.mul(c.clone()));
    }
    let lhs = RealExpr::sum_of(lhs_terms).enclose(eps);
    let rhs = RealExpr::pow(reference.clone(), ratio.clone())?
        .mul(RealExpr::sum_of(coeff_terms))
        .enclose(eps);
    Ok(structurally_dominated || lhs.hi() <= rhs.hi())
}

/// Certifies linear independence of the generators together with the first
/// `lanes` tail-slot vectors, probed on the certified head prefix plus one
/// decidably nonzero position per lane. A `true` answer certifies that no
/// nonzero coefficient vector supported on these `n + lanes` slots maps to
/// zero; it is evidence for, not a proof of, injectivity on all slots.
pub fn injectivity_probe(
    op: &SubspaceOperator,
    lanes: u32,
    eps_floor: &Rational,
) -> Result<bool> {
    if lanes == 0 {
        return Err(Error::Precondition(
            "the probe needs at least one tail lane".into(),
        ));
    }
    let table = op.selection.table();
    let floor = Rational::pow2_neg(COORDINATE_DECISION_BITS);
    let mut t_star = None;
    for t in 1..=table.decided_complement_ranks() {
        let j = table.complement_index(t)?;
        if op.basis[0].coordinate(j)?.decide_zero(&floor) == Some(false) {
            t_star = Some(t);
            break;
        }
    }
    let t_star = t_star.ok_or_else(|| Error::BudgetExceeded {
        context: "no decidably nonzero relocated value within the materialized horizon".into(),
    })?;

    let n = op.basis.len();
    let mut columns: Vec<u64> = (1..=op.n0()).collect();
    for lane in 1..=lanes {
        columns.push(table.lane_position(lane, t_star)?);
    }
    let mut generators = op.basis.clone();
    for i in n..n + lanes as usize {
        generators.push(epsilon_vector(op, i)?);
    }
    let mut rows = Vec::with_capacity(generators.len());
    for g in &generators {
        let row = columns
            .iter()
            .map(|&c| g.coordinate(c))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let matrix = HeadMatrix::from_coordinate_rows(rows, columns)?;
    Ok(matches!(
        certified_independent(&matrix, eps_floor)?,
        Independence::Independent(_)
    ))
}

// ---------------------------------------------------------------------------
// Obstruction reports
// ---------------------------------------------------------------------------

/// Which candidate set the report is about.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ObstructionKind {
    /// The union over all smaller exponents of the summable sequences,
    /// together with the vectors escaping them: an accumulation point with
    /// countable approximants rules out a closed infinite-dimensional span.
    #[serde(rename = "aleph0")]
    Aleph0,
    /// The vectors supported either inside the head `1..=n` or entirely
    /// outside it: spans mix the two regimes immediately.
    #[serde(rename = "example12")]
    HeadTailDichotomy,
}

/// One rung of the approximation ladder: a vector at exact distance
/// `2^-k` from the accumulation point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub k: u32,
    /// `||x^(k) - limit||_p`, exact.
    pub distance: Rational,
}

/// Whether a combination of ladder vectors was certified to escape a smaller
/// exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinationCheck {
    /// Coefficients applied to the ladder vectors in order.
    pub coefficients: Vec<Rational>,
    pub q: Rational,
    pub certified_divergent: bool,
}

/// The accumulation point's certified summability at one exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub q: Rational,
    /// Exact value of its `q`-power sum.
    pub bound: Rational,
}

/// A vector violating the head-or-tail membership rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipViolation {
    pub n: u64,
    /// A head coordinate of the vector that is decidably nonzero.
    pub head_index: u64,
    /// A tail coordinate (beyond `n`) that is decidably nonzero.
    pub tail_index: u64,
    /// The membership oracle's verdict on the vector.
    pub member: bool,
}

/// Machine-checkable evidence that a candidate set admits no closed
/// infinite-dimensional span inside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub kind: ObstructionKind,
    pub p: Rational,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ladder: Vec<LadderStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub combination_checks: Vec<CombinationCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub limit_checks: Vec<LimitCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<MembershipViolation>,
    pub conclusion: String,
}

/// The `k`-th ladder vector: the first unit vector plus a copy of the
/// witness relocated into block `k` of an offset diagonal partition (so the
/// tail avoids index 1 and distinct rungs have disjoint tails), scaled so
/// the tail's `p`-norm is exactly `2^-k`.
pub fn aleph0_ladder_vector(p: &Rational, k: u32) -> Result<SymbolicSequence> {
    if k == 0 {
        return Err(Error::Precondition("ladder rungs are 1-based".into()));
    }
    let witness = witness_vector(p)?;
    let k0 = first_escape_block(p)?;
    // The witness's p-power sum is exactly sum_{m >= k0} 2^(-mp); dividing
    // the tail by its p-th root makes the relocated copy a unit vector in
    // p-norm before the 2^-k scaling.
    let unit_mass = RealExpr::geometric(
        RealExpr::pow(RealExpr::from_rational(Rational::new(1, 2))?, p.clone())?,
        k0,
    )?;
    let scale = RealExpr::from_rational(Rational::pow2_neg(k))?.mul(RealExpr::pow(
        unit_mass,
        -p.recip()?,
    )?);
    let tail = SymbolicSequence::relocated(
        witness,
        RelocationMap::IntoBlock {
            partition: BlockPartition::new(PairingScheme::Diagonal, 1),
            k,
        },
    )?
    .scaled(&Rational::one(), &scale);
    let e1 = SymbolicSequence::unit(p.clone(), 1)?;
    SymbolicSequence::linear_combination(&[Rational::one(), Rational::one()], &[e1, tail])
}

/// Expected exact `p`-power sum of the `k`-th ladder tail: `(2^-k)^p`.
fn ladder_tail_power(p: &Rational, k: u32) -> Result<RealExpr> {
    RealExpr::pow(
        RealExpr::from_rational(Rational::pow2_neg(k))?,
        p.clone(),
    )
}

/// Builds the countable-approximation obstruction report at exponent `p`:
/// ladder vectors converge to the first unit vector at exact rate `2^-k`,
/// every tested combination of them escapes every tested smaller exponent,
/// yet the limit itself is summable at every tested exponent — so the set of
/// escaping vectors is not closed under limits and contains no closed
/// infinite-dimensional span.
pub fn aleph0_obstruction(p: &Rational, depth: u32) -> Result<ObstructionReport> {
    if depth == 0 {
        return Err(Error::Precondition(
            "the ladder needs at least one rung".into(),
        ));
    }
    let e1 = SymbolicSequence::unit(p.clone(), 1)?;
    let one = Rational::one();
    let minus_one = -Rational::one();

    let mut rungs = Vec::with_capacity(depth as usize);
    let mut ladder = Vec::with_capacity(depth as usize);
    for k in 1..=depth {
        let xk = aleph0_ladder_vector(p, k)?;
        let diff = SymbolicSequence::linear_combination(
            &[one.clone(), minus_one.clone()],
            &[xk.clone(), e1.clone()],
        )?;
        let expected = ladder_tail_power(p, k)?;
        match lq_membership_with(&diff, p, &EvidenceBudget::default())? {
            MembershipVerdict::Converges { bound } if bound == expected => {}
            _ => {
                return Err(Error::InvalidConstruction(format!(
                    "ladder rung {k} does not have exact p-power distance (2^-{k})^p"
                )))
            }
        }
        ladder.push(LadderStep {
            k,
            distance: Rational::pow2_neg(k),
        });
        rungs.push(xk);
    }

    let q_grid = [p * &Rational::new(1, 2), p * &Rational::new(3, 4)];
    let mut combos: Vec<Vec<Rational>> = Vec::new();
    if depth >= 2 {
        combos.push(vec![one.clone(), minus_one.clone()]);
    }
    if depth >= 3 {
        combos.push(vec![one.clone(), one.clone(), Rational::from_int(-2)]);
        combos.push(vec![Rational::zero(), one.clone(), minus_one.clone()]);
    }
    if combos.is_empty() {
        combos.push(vec![one.clone()]);
    }
    let mut combination_checks = Vec::new();
    for coeffs in &combos {
        let seq =
            SymbolicSequence::linear_combination(coeffs, &rungs[..coeffs.len()])?;
        for q in &q_grid {
            let verdict = lq_membership_with(&seq, q, &EvidenceBudget::default())?;
            combination_checks.push(CombinationCheck {
                coefficients: coeffs.clone(),
                q: q.clone(),
                certified_divergent: matches!(verdict, MembershipVerdict::Diverges { .. }),
            });
        }
    }

    let mut limit_checks = Vec::new();
    for q in q_grid
        .iter()
        .chain([p.clone(), p * &Rational::from_int(2)].iter())
    {
        match lq_membership_with(&e1, q, &EvidenceBudget::default())? {
            MembershipVerdict::Converges { bound } => {
                let exact = bound.exact_rational().cloned().ok_or_else(|| {
                    Error::InvalidConstruction(
                        "the unit vector's power sum failed to evaluate exactly".into(),
                    )
                })?;
                limit_checks.push(LimitCheck {
                    q: q.clone(),
                    bound: exact,
                });
            }
            _ => {
                return Err(Error::InvalidConstruction(
                    "the unit vector failed a summability check".into(),
                ))
            }
        }
    }

    Ok(ObstructionReport {
        kind: ObstructionKind::Aleph0,
        p: p.clone(),
        ladder,
        combination_checks,
        limit_checks,
        violation: None,
        conclusion: "every combination of ladder vectors escapes the tested smaller exponents, \
                     yet the ladder converges at rate 2^-k to a vector summable at every tested \
                     exponent; a closed span containing the ladder would have to contain that \
                     limit, so the escaping set, which misses it, contains no closed \
                     infinite-dimensional subspace"
            .into(),
    })
}

/// Membership oracle for the head-or-tail set at head length `n`: a vector
/// belongs exactly when its support lies inside `1..=n` or its first `n`
/// coordinates all vanish. Head coordinates must be decidable against zero;
/// an undecidable head is an [`Error::Undecidable`].
pub fn dichotomy_membership(v: &SymbolicSequence, n: u64) -> Result<bool> {
    if n == 0 {
        return Err(Error::Precondition("the head length must be positive".into()));
    }
    let floor = Rational::pow2_neg(COORDINATE_DECISION_BITS);
    let mut all_zero = true;
    for j in 1..=n {
        match v.coordinate(j)?.decide_zero(&floor) {
            Some(true) => {}
            Some(false) => all_zero = false,
            None => {
                return Err(Error::Undecidable(format!(
                    "head coordinate {j} cannot be decided against zero"
                )))
            }
        }
    }
    if all_zero {
        return Ok(true);
    }
    Ok(v.support_within(n))
}

/// Builds the head-or-tail obstruction report: given a nonzero tail vector
/// vanishing on `1..=n`, the sum of the first unit vector and the tail is a
/// combination of two members that belongs to neither regime, so the set's
/// span leaves the set at dimension two already.
pub fn dichotomy_obstruction(n: u64, tail: &SymbolicSequence) -> Result<ObstructionReport> {
    if n == 0 {
        return Err(Error::Precondition("the head length must be positive".into()));
    }
    if tail.is_zero() {
        return Err(Error::Precondition(
            "the obstruction needs a nonzero tail vector".into(),
        ));
    }
    let floor = Rational::pow2_neg(COORDINATE_DECISION_BITS);
    for j in 1..=n {
        if tail.coordinate(j)?.decide_zero(&floor) != Some(true) {
            return Err(Error::Precondition(format!(
                "the tail vector must decidably vanish on the head; coordinate {j} does not"
            )));
        }
    }
    let mut tail_index = None;
    for j in n + 1..=n + TAIL_SCAN_SPAN {
        if tail.coordinate(j)?.decide_zero(&floor) == Some(false) {
            tail_index = Some(j);
            break;
        }
    }
    let tail_index = tail_index.ok_or_else(|| {
        Error::Undecidable(format!(
            "no decidably nonzero tail coordinate within {TAIL_SCAN_SPAN} places past the head"
        ))
    })?;
    let p = tail.p().clone();
    let e1 = SymbolicSequence::unit(p.clone(), 1)?;
    let w = SymbolicSequence::linear_combination(
        &[Rational::one(), Rational::one()],
        &[e1, tail.clone()],
    )?;
    let member = dichotomy_membership(&w, n)?;
    Ok(ObstructionReport {
        kind: ObstructionKind::HeadTailDichotomy,
        p,
        ladder: Vec::new(),
        combination_checks: Vec::new(),
        limit_checks: Vec::new(),
        violation: Some(MembershipViolation {
            n,
            head_index: 1,
            tail_index,
            member,
        }),
        conclusion: "the sum of the first unit vector and the tail vector is a two-term \
                     combination of members whose head and tail are simultaneously nonzero, so \
                     it belongs to neither regime; the set is not closed under addition and \
                     contains no linear subspace of dimension two or higher"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{lq_membership, ScaledPart, Shape};
    use std::collections::BTreeMap;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn witness(p: Rational) -> SymbolicSequence {
        witness_vector(&p).expect("witness construction")
    }

    /// The witness together with its shifts by one and two places.
    fn shifted_triple(p: Rational) -> Vec<SymbolicSequence> {
        let x = witness(p);
        let s1 = SymbolicSequence::relocated(x.clone(), RelocationMap::Shift { by: 1 })
            .expect("shift");
        let s2 = SymbolicSequence::relocated(x.clone(), RelocationMap::Shift { by: 2 })
            .expect("shift");
        vec![x, s1, s2]
    }

    fn test_budget() -> OperatorBudget {
        OperatorBudget {
            head_columns: 16,
            independence_floor: Rational::pow2_neg(32),
            ..OperatorBudget::default()
        }
    }

    #[test]
    fn selection_archives_replayable_checks() {
        let x = witness(rat(1, 1));
        let seqs = [x];
        let sel = select_indices(&seqs, 2, 8).expect("selection");
        assert_eq!(sel.depth(), 8);
        let mut prev = 2;
        for (l, &a) in sel.table().selected().iter().enumerate() {
            assert!(a > prev, "selected indices must increase");
            prev = a;
            let check = sel
                .checks()
                .iter()
                .find(|c| c.index == a)
                .expect("each selected index has a check");
            assert_eq!(check.outcome, CheckOutcome::Selected);
            assert_eq!(check.level as usize, l + 1);
            assert!(check.bounds[0].abs().hi() < &check.threshold);
        }
        sel.replay(&seqs).expect("replay of honest checks");
    }

    #[test]
    fn selection_replay_rejects_tampered_bounds() {
        let x = witness(rat(1, 1));
        let seqs = [x];
        let sel = select_indices(&seqs, 2, 4).expect("selection");
        let mut doc = serde_json::to_value(&sel).expect("serialize");
        // Pull the first archived bound away from the true coordinate.
        doc["checks"][0]["bounds"][0]["lo"] = serde_json::json!("7/1");
        doc["checks"][0]["bounds"][0]["hi"] = serde_json::json!("8/1");
        let tampered: IndexSelection = serde_json::from_value(doc).expect("deserialize");
        assert!(matches!(
            tampered.replay(&seqs),
            Err(Error::InvalidConstruction(_))
        ));
    }

    #[test]
    fn selection_on_the_shifted_triple_reaches_depth_sixteen() {
        let seqs = shifted_triple(rat(1, 1));
        let sel = select_indices(&seqs, 4, 16).expect("selection");
        assert_eq!(sel.depth(), 16);
        assert!(sel.table().selected().iter().all(|&a| a > 4));
        sel.replay(&seqs).expect("replay");
    }

    #[test]
    fn selection_skips_an_undecidable_candidate() {
        // A single-coordinate sequence whose value is sqrt(1/4 - 2^-46):
        // irrational (2^44 - 1 is not a perfect square, so the power does
        // not fold to a rational) and within 2^-46 below the level-1
        // threshold 1/2. Every dyadic root bracket then has its upper
        // endpoint exactly on 1/2 and its lower endpoint strictly under it,
        // so no enclosure down to the sweep floor decides the comparison.
        let r = &rat(1, 4) - &Rational::pow2_neg(46);
        let part = ScaledPart::new(
            Rational::one(),
            RealExpr::pow(RealExpr::from_rational(r).unwrap(), rat(1, 2)).unwrap(),
            Shape::Finite {
                values: BTreeMap::from([(1, Rational::one())]),
            },
        );
        let seq = SymbolicSequence::new(rat(1, 1), vec![part]).expect("sequence");
        let sel = select_indices(&[seq], 0, 1).expect("selection");
        assert_eq!(sel.table().selected(), &[2]);
        assert_eq!(sel.table().skipped(), &[1]);
        let outcomes: Vec<_> = sel.checks().iter().map(|c| c.outcome.clone()).collect();
        assert_eq!(outcomes, vec![CheckOutcome::Undecided, CheckOutcome::Selected]);
    }

    #[test]
    fn selection_stalls_when_nothing_is_small() {
        let values: BTreeMap<u64, Rational> = (1..=50).map(|j| (j, Rational::one())).collect();
        let seq = SymbolicSequence::finite(rat(1, 1), values).expect("sequence");
        let budget = SelectionBudget {
            scan_window: 8,
            ..SelectionBudget::default()
        };
        match select_indices_with(&[seq], 0, 1, &budget) {
            Err(Error::SelectionStalled { level: 1, .. }) => {}
            other => panic!("expected a level-1 stall, got {other:?}"),
        }
    }

    #[test]
    fn build_operator_certifies_the_single_witness() {
        let op = build_operator(&[witness(rat(1, 1))], &test_budget()).expect("operator");
        assert_eq!(op.dimension(), 1);
        assert_eq!(op.n0(), 2);
        assert_eq!(op.selection().depth(), 12);
        assert_eq!(op.p_tilde(), &rat(1, 1));
    }

    #[test]
    fn build_operator_certifies_the_shifted_triple() {
        let op = build_operator(&shifted_triple(rat(1, 1)), &test_budget()).expect("operator");
        assert_eq!(op.dimension(), 3);
        assert_eq!(op.n0(), 4);
    }

    #[test]
    fn build_operator_rejects_bad_generator_families() {
        // Mixed ambient exponents.
        let mixed = [witness(rat(1, 1)), witness(rat(1, 2))];
        assert!(matches!(
            build_operator(&mixed, &test_budget()),
            Err(Error::MismatchedExponent { .. })
        ));
        // A generator that fails the escape gate (summable at every q).
        let e1 = SymbolicSequence::unit(rat(1, 1), 1).unwrap();
        assert!(matches!(
            build_operator(&[e1], &test_budget()),
            Err(Error::Precondition(_))
        ));
        // A dependent pair exhausts the independence budget.
        let x = witness(rat(1, 1));
        let x2 = SymbolicSequence::linear_combination(&[rat(2, 1)], &[x.clone()]).unwrap();
        let budget = OperatorBudget {
            head_columns: 6,
            independence_floor: Rational::pow2_neg(12),
            ..OperatorBudget::default()
        };
        assert!(matches!(
            build_operator(&[x, x2], &budget),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn epsilon_vectors_copy_source_values_onto_disjoint_lanes() {
        let op = build_operator(&[witness(rat(1, 1))], &test_budget()).expect("operator");
        let table = op.selection().table().clone();
        let eps1 = epsilon_vector(&op, 1).expect("lane 1");
        let eps2 = epsilon_vector(&op, 2).expect("lane 2");

        // Lane 1's second element carries the source value at f(2) = 2.
        let pos = table.lane_position(1, 2).expect("materialized");
        let got = eps1.coordinate(pos).expect("coordinate");
        let want = op.basis()[0].coordinate(2).expect("coordinate");
        assert_eq!(got.terms(), want.terms());

        // Off-lane and head coordinates vanish exactly.
        let alpha1 = table.alpha(1).expect("depth >= 1");
        assert_eq!(
            eps2.coordinate(alpha1).unwrap().exact(),
            Some(Rational::zero())
        );
        assert_eq!(eps1.coordinate(1).unwrap().exact(), Some(Rational::zero()));
        assert_eq!(eps1.coordinate(2).unwrap().exact(), Some(Rational::zero()));

        // The relocation carries values injectively, so its power sum stays
        // summable at the ambient exponent with the source's bound.
        match lq_membership(&eps1, &rat(1, 1)).expect("verdict") {
            MembershipVerdict::Converges { .. } => {}
            other => panic!("a relocated generator must stay summable, got {other:?}"),
        }
    }

    #[test]
    fn tail_slots_below_the_dimension_are_rejected() {
        let op = build_operator(&shifted_triple(rat(1, 1)), &test_budget()).expect("operator");
        assert!(matches!(
            epsilon_vector(&op, 2),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn apply_operator_reproduces_basis_and_zero() {
        let op = build_operator(&[witness(rat(1, 1))], &test_budget()).expect("operator");
        let image = apply_operator(&op, &[Rational::one()]).expect("image");
        assert_eq!(image.parts(), op.basis()[0].parts());
        assert!(apply_operator(&op, &[]).unwrap().is_zero());
        assert!(apply_operator(&op, &[Rational::zero(), Rational::zero()])
            .unwrap()
            .is_zero());
    }

    #[test]
    fn images_agree_with_the_head_combination_off_the_selection() {
        let op = build_operator(&shifted_triple(rat(1, 1)), &test_budget()).expect("operator");
        let coeffs = [rat(2, 1), rat(-1, 1), rat(1, 3), rat(1, 2), rat(-1, 5)];
        let image = apply_operator(&op, &coeffs).expect("image");
        let head = op.head_combination(&coeffs).expect("head combination");
        let diff = SymbolicSequence::linear_combination(
            &[Rational::one(), -Rational::one()],
            &[image, head],
        )
        .expect("difference");
        let table = op.selection().table();
        for j in 1..=64u64 {
            match table.selection_rank(j) {
                Err(_) => break,
                Ok(Some(_)) => continue,
                Ok(None) => {
                    assert_eq!(
                        diff.coordinate(j).unwrap().exact(),
                        Some(Rational::zero()),
                        "image must equal the head combination at unselected index {j}"
                    );
                }
            }
        }
    }

    #[test]
    fn norm_bound_check_certifies_the_triangle_chain() {
        let op = build_operator(&shifted_triple(rat(1, 1)), &test_budget()).expect("operator");
        let eps = Rational::pow2_neg(20);
        for coeffs in [
            vec![rat(1, 1)],
            vec![rat(2, 1), rat(-1, 3), rat(1, 7)],
            vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(1, 1), rat(-2, 1)],
        ] {
            assert!(
                norm_bound_check(&op, &coeffs, &eps).expect("check runs"),
                "chain must certify for {coeffs:?}"
            );
        }
        // An ambient exponent above one exercises the p_tilde = 1 branch.
        let op2 = build_operator(&[witness(rat(2, 1))], &test_budget()).expect("operator");
        assert!(norm_bound_check(&op2, &[rat(1, 1), rat(1, 2)], &eps).unwrap());
    }

    #[test]
    fn certify_outside_pure_tail_slots_diverge_structurally() {
        let op = build_operator(&shifted_triple(rat(1, 1)), &test_budget()).expect("operator");
        let coeffs = [
            rat(0, 1),
            rat(0, 1),
            rat(0, 1),
            rat(1, 1),
            rat(0, 1),
            rat(-2, 1),
        ];
        let verdict =
            certify_outside(&op, &coeffs, &rat(1, 2), &EvidenceBudget::default()).expect("verdict");
        match verdict {
            MembershipVerdict::Diverges { certificate } => {
                assert_eq!(certificate.q, rat(1, 2));
                assert!(certificate.removed_upper.is_some());
            }
            other => panic!("expected structural divergence, got {other:?}"),
        }
    }

    #[test]
    fn certify_outside_witness_slots_diverge_with_restriction_allowance() {
        let op = build_operator(&shifted_triple(rat(1, 1)), &test_budget()).expect("operator");
        for slot in 0..3 {
            let mut coeffs = vec![Rational::zero(); 3];
            coeffs[slot] = Rational::one();
            let verdict = certify_outside(&op, &coeffs, &rat(1, 2), &EvidenceBudget::default())
                .expect("verdict");
            match verdict {
                MembershipVerdict::Diverges { certificate } => {
                    assert!(
                        certificate.removed_upper.is_some(),
                        "head routes must carry a restriction allowance"
                    );
                    assert!(certificate.underlying.is_some());
                }
                other => panic!("expected divergence for slot {slot}, got {other:?}"),
            }
        }
    }

    #[test]
    fn certify_outside_mixed_heads_reach_the_evidence_threshold() {
        let op = build_operator(&shifted_triple(rat(1, 1)), &test_budget()).expect("operator");
        let coeffs = [rat(1, 1), rat(1, 2), rat(1, 3)];
        let budget = EvidenceBudget {
            eps: Rational::pow2_neg(8),
            start: 64.into(),
            ..EvidenceBudget::default()
        };
        let verdict = certify_outside(&op, &coeffs, &rat(1, 64), &budget).expect("verdict");
        match verdict {
            MembershipVerdict::NumericEvidence {
                checkpoints,
                threshold,
                threshold_reached,
            } => {
                assert!(threshold_reached, "partial sums must cross the threshold");
                assert_eq!(threshold, rat(1000, 1));
                let last = checkpoints.last().expect("some checkpoint");
                assert!(last.lower > threshold);
                for cp in &checkpoints {
                    assert!(cp.lower <= cp.upper);
                }
                assert_eq!(
                    checkpoints.first().map(|cp| cp.lower.clone()),
                    Some(Rational::zero()),
                    "early restricted lower bounds are swallowed by the allowance"
                );
            }
            other => panic!("expected numeric evidence, got {other:?}"),
        }
    }

    #[test]
    fn certify_outside_validates_its_inputs() {
        let op = build_operator(&[witness(rat(1, 1))], &test_budget()).expect("operator");
        let b = EvidenceBudget::default();
        assert!(matches!(
            certify_outside(&op, &[rat(1, 1)], &rat(1, 1), &b),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            certify_outside(&op, &[rat(3, 2)], &rat(2, 1), &b),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            certify_outside(&op, &[Rational::zero()], &rat(1, 2), &b),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn injectivity_probe_certifies_heads_and_lanes() {
        let op = build_operator(&shifted_triple(rat(1, 1)), &test_budget()).expect("operator");
        assert!(injectivity_probe(&op, 3, &Rational::pow2_neg(32)).expect("probe"));
        let single = build_operator(&[witness(rat(1, 1))], &test_budget()).expect("operator");
        assert!(injectivity_probe(&single, 2, &Rational::pow2_neg(32)).expect("probe"));
    }

    #[test]
    fn ladder_distances_are_exact_powers_of_two() {
        let report = aleph0_obstruction(&rat(1, 1), 6).expect("report");
        let distances: Vec<Rational> =
            report.ladder.iter().map(|s| s.distance.clone()).collect();
        let expected: Vec<Rational> = (1..=6).map(Rational::pow2_neg).collect();
        assert_eq!(distances, expected);
        // A fractional exponent keeps the tail's power sum irrational but
        // still structurally exact.
        let report = aleph0_obstruction(&rat(1, 2), 4).expect("report");
        assert_eq!(report.ladder.len(), 4);
        assert_eq!(report.ladder[2].distance, Rational::pow2_neg(3));
    }

    #[test]
    fn ladder_combinations_escape_smaller_exponents() {
        let report = aleph0_obstruction(&rat(1, 1), 3).expect("report");
        assert!(!report.combination_checks.is_empty());
        for check in &report.combination_checks {
            assert!(
                check.certified_divergent,
                "combination {:?} must escape q = {}",
                check.coefficients, check.q
            );
        }
    }

    #[test]
    fn the_accumulation_point_is_summable_at_every_tested_exponent() {
        let report = aleph0_obstruction(&rat(3, 2), 2).expect("report");
        assert_eq!(report.limit_checks.len(), 4);
        for check in &report.limit_checks {
            assert_eq!(check.bound, Rational::one());
        }
    }

    #[test]
    fn ladder_vectors_keep_the_head_coordinate() {
        let xk = aleph0_ladder_vector(&rat(1, 1), 1).expect("rung");
        assert_eq!(xk.coordinate(1).unwrap().exact(), Some(Rational::one()));
        // The relocated tail occupies the offset diagonal partition's block 1.
        let partition = BlockPartition::new(PairingScheme::Diagonal, 1);
        let pos = partition.position_u64(1, 2).expect("in range");
        assert!(xk.coordinate(pos).unwrap().exact().is_none());
    }

    #[test]
    fn dichotomy_membership_follows_the_two_regimes() {
        let p = rat(1, 1);
        let head_only = SymbolicSequence::finite(
            p.clone(),
            BTreeMap::from([(1, rat(1, 1)), (2, rat(2, 1))]),
        )
        .unwrap();
        assert!(dichotomy_membership(&head_only, 3).unwrap());

        let tail_only =
            SymbolicSequence::relocated(witness(p.clone()), RelocationMap::Shift { by: 3 })
                .unwrap();
        assert!(dichotomy_membership(&tail_only, 3).unwrap());

        let straddling = SymbolicSequence::finite(
            p.clone(),
            BTreeMap::from([(1, rat(1, 1)), (5, rat(1, 1))]),
        )
        .unwrap();
        assert!(!dichotomy_membership(&straddling, 3).unwrap());

        assert!(dichotomy_membership(&SymbolicSequence::zero(p).unwrap(), 3).unwrap());
    }

    #[test]
    fn dichotomy_membership_requires_decidable_heads() {
        // Two irrational head terms that cancel exactly: sqrt(2) - sqrt(8)/2.
        let part_a = ScaledPart::new(
            Rational::one(),
            RealExpr::pow(RealExpr::from_rational(rat(2, 1)).unwrap(), rat(1, 2)).unwrap(),
            Shape::Finite {
                values: BTreeMap::from([(1, Rational::one())]),
            },
        );
        let part_b = ScaledPart::new(
            rat(-1, 2),
            RealExpr::pow(RealExpr::from_rational(rat(8, 1)).unwrap(), rat(1, 2)).unwrap(),
            Shape::Finite {
                values: BTreeMap::from([(1, Rational::one())]),
            },
        );
        let v = SymbolicSequence::new(rat(1, 1), vec![part_a, part_b]).unwrap();
        assert!(matches!(
            dichotomy_membership(&v, 1),
            Err(Error::Undecidable(_))
        ));
    }

    #[test]
    fn dichotomy_obstruction_exhibits_a_vector_outside_the_set() {
        let tail =
            SymbolicSequence::relocated(witness(rat(1, 1)), RelocationMap::Shift { by: 4 })
                .unwrap();
        let report = dichotomy_obstruction(2, &tail).expect("report");
        let violation = report.violation.expect("violation recorded");
        assert!(!violation.member);
        assert_eq!(violation.head_index, 1);
        assert!(violation.tail_index > 2);

        let zero = SymbolicSequence::zero(rat(1, 1)).unwrap();
        assert!(matches!(
            dichotomy_obstruction(2, &zero),
            Err(Error::Precondition(_))
        ));
        let bad = SymbolicSequence::unit(rat(1, 1), 2).unwrap();
        assert!(matches!(
            dichotomy_obstruction(2, &bad),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn obstruction_reports_round_trip_through_json() {
        let report = aleph0_obstruction(&rat(1, 1), 3).expect("report");
        let text = serde_json::to_string(&report).expect("serialize");
        let back: ObstructionReport = serde_json::from_str(&text).expect("deserialize");
        assert_eq!(report, back);
        assert!(text.contains("\"aleph0\""));
    }
}
