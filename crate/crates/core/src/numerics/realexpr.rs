//! Symbolic nonnegative real values with certified evaluation.
//!
//! A [`RealExpr`] is a normalized expression tree over nonnegative rational
//! leaves, rational powers of positive subexpressions, finite sums and
//! products, p-series values `sum_{r>=1} r^(-s)` with `s > 1`, and geometric
//! series `sum_{k>=start} ratio^k` with `ratio` certified below one.
//! Constructors normalize aggressively (powers of powers flatten, powers
//! distribute over products, structurally equal factors merge, perfect powers
//! and rational-ratio geometric series collapse to exact rationals), so
//! identities like `x^p * x^(-p) = 1` hold by construction and exact rational
//! claims survive symbolic manipulation.
//!
//! Evaluation produces certified interval enclosures on a fixed doubling
//! precision schedule; enclosures from later stages are intersected with
//! earlier ones, so refinement never widens, including across separate calls
//! with different tolerances.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::Error;

use super::interval::IntervalEnclosure;
use super::rational::Rational;
use super::series::{rat_pow_enclosure, rat_pow_exact, zeta_tail};
use super::series::partial_zeta;

/// Outcome of a certified strict comparison against a rational threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Less,
    Greater,
    /// Undecided at the requested precision floor. Callers must treat this as
    /// "unknown", never as equality.
    Inconclusive,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RealExpr {
    /// Nonnegative rational constant.
    Rat(Rational),
    /// `base^exp` with `base` strictly positive and `exp` a rational other
    /// than 0 and 1.
    Pow { base: Box<RealExpr>, exp: Rational },
    /// Sum of at least two normalized nonnegative terms.
    Sum(Vec<RealExpr>),
    /// Product of at least two normalized factors, none rational except an
    /// optional leading coefficient.
    Prod(Vec<RealExpr>),
    /// `sum_{r>=1} r^(-s)` with `s > 1`.
    PSeries { s: Rational },
    /// `sum_{k>=start} ratio^k` with `0 < ratio < 1` certified at
    /// construction and `start >= 1`.
    Geom { ratio: Box<RealExpr>, start: u32 },
}

const MAX_EVAL_BITS: u32 = 1 << 20;

fn ceil_log2(n: usize) -> u32 {
    (usize::BITS - n.next_power_of_two().leading_zeros()).saturating_sub(1)
}

impl RealExpr {
    pub fn zero() -> Self {
        RealExpr::Rat(Rational::zero())
    }

    pub fn one() -> Self {
        RealExpr::Rat(Rational::one())
    }

    pub fn from_rational(r: Rational) -> crate::Result<Self> {
        if r.is_negative() {
            return Err(Error::InvalidConstruction(format!(
                "negative expression leaf {r}"
            )));
        }
        Ok(RealExpr::Rat(r))
    }

    pub fn from_int(n: u64) -> Self {
        RealExpr::Rat(Rational::from_int(n as i64))
    }

    /// Exact rational value, when the normalized form is a rational leaf.
    pub fn exact_rational(&self) -> Option<&Rational> {
        match self {
            RealExpr::Rat(r) => Some(r),
            _ => None,
        }
    }

    /// Every normalized non-rational node is strictly positive; a rational
    /// leaf is positive when nonzero.
    pub fn is_provably_positive(&self) -> bool {
        match self {
            RealExpr::Rat(r) => r.is_positive(),
            _ => true,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RealExpr::Rat(r) if r.is_zero())
    }

    /// `base^exp`, normalized.
    pub fn pow(base: RealExpr, exp: Rational) -> crate::Result<Self> {
        if exp.is_zero() {
            if base.is_zero() {
                return Err(Error::InvalidConstruction("0^0 is undefined".into()));
            }
            return Ok(RealExpr::one());
        }
        if exp == Rational::one() {
            return Ok(base);
        }
        match base {
            RealExpr::Rat(r) => {
                if let Some(exact) = rat_pow_exact(&r, &exp) {
                    return Ok(RealExpr::Rat(exact));
                }
                if r.is_zero() {
                    return Err(Error::InvalidConstruction(
                        "negative power of zero".into(),
                    ));
                }
                Ok(RealExpr::Pow {
                    base: Box::new(RealExpr::Rat(r)),
                    exp,
                })
            }
            RealExpr::Pow { base: inner, exp: e2 } => RealExpr::pow(*inner, &exp * &e2),
            RealExpr::Prod(factors) => {
                let mut powered = Vec::with_capacity(factors.len());
                for f in factors {
                    powered.push(RealExpr::pow(f, exp.clone())?);
                }
                Ok(RealExpr::product(powered))
            }
            other => Ok(RealExpr::Pow {
                base: Box::new(other),
                exp,
            }),
        }
    }

    /// Product of normalized expressions, normalized.
    pub fn product<I: IntoIterator<Item = RealExpr>>(factors: I) -> Self {
        let mut coeff = Rational::one();
        let mut merged: BTreeMap<RealExpr, Rational> = BTreeMap::new();
        let mut stack: Vec<RealExpr> = factors.into_iter().collect();
        while let Some(f) = stack.pop() {
            match f {
                RealExpr::Rat(r) => {
                    if r.is_zero() {
                        return RealExpr::zero();
                    }
                    coeff = &coeff * &r;
                }
                RealExpr::Prod(inner) => stack.extend(inner),
                RealExpr::Pow { base, exp } => {
                    *merged.entry(*base).or_insert_with(Rational::zero) += exp;
                }
                other => {
                    *merged.entry(other).or_insert_with(Rational::zero) += Rational::one();
                }
            }
        }
        let mut parts = Vec::new();
        for (base, exp) in merged {
            let rebuilt = RealExpr::pow(base, exp)
                .expect("normalized product factors have positive bases");
            match rebuilt {
                RealExpr::Rat(r) => {
                    if r.is_zero() {
                        return RealExpr::zero();
                    }
                    coeff = &coeff * &r;
                }
                RealExpr::Prod(inner) => {
                    // A merged power re-expanded; fold its pieces back in.
                    for x in inner {
                        match x {
                            RealExpr::Rat(r) => coeff = &coeff * &r,
                            other => parts.push(other),
                        }
                    }
                }
                other => parts.push(other),
            }
        }
        parts.sort();
        if parts.is_empty() {
            return RealExpr::Rat(coeff);
        }
        if coeff == Rational::one() {
            if parts.len() == 1 {
                return parts.into_iter().next().unwrap();
            }
            return RealExpr::Prod(parts);
        }
        let mut all = Vec::with_capacity(parts.len() + 1);
        all.push(RealExpr::Rat(coeff));
        all.extend(parts);
        if all.len() == 1 {
            all.into_iter().next().unwrap()
        } else {
            RealExpr::Prod(all)
        }
    }

    pub fn mul(self, other: RealExpr) -> Self {
        RealExpr::product([self, other])
    }

    /// Sum of normalized expressions, normalized.
    pub fn sum_of<I: IntoIterator<Item = RealExpr>>(terms: I) -> Self {
        let mut rat = Rational::zero();
        let mut parts = Vec::new();
        let mut stack: Vec<RealExpr> = terms.into_iter().collect();
        while let Some(t) = stack.pop() {
            match t {
                RealExpr::Rat(r) => rat = &rat + &r,
                RealExpr::Sum(inner) => stack.extend(inner),
                other => parts.push(other),
            }
        }
        parts.sort();
        if parts.is_empty() {
            return RealExpr::Rat(rat);
        }
        if rat.is_zero() {
            if parts.len() == 1 {
                return parts.into_iter().next().unwrap();
            }
            return RealExpr::Sum(parts);
        }
        let mut all = Vec::with_capacity(parts.len() + 1);
        all.push(RealExpr::Rat(rat));
        all.extend(parts);
        RealExpr::Sum(all)
    }

    pub fn add(self, other: RealExpr) -> Self {
        RealExpr::sum_of([self, other])
    }

    /// The p-series value `sum_{r>=1} r^(-s)`; rejects `s <= 1` (divergent).
    pub fn pseries(s: Rational) -> crate::Result<Self> {
        if s <= Rational::one() {
            return Err(Error::InvalidConstruction(format!(
                "p-series exponent {s} does not exceed one"
            )));
        }
        Ok(RealExpr::PSeries { s })
    }

    /// Geometric series `sum_{k>=start} ratio^k`, `start >= 1`. The ratio must
    /// be certified strictly below one; rational ratios collapse to the exact
    /// closed form `ratio^start / (1 - ratio)`.
    pub fn geometric(ratio: RealExpr, start: u32) -> crate::Result<Self> {
        if start == 0 {
            return Err(Error::InvalidConstruction(
                "geometric series start must be at least 1".into(),
            ));
        }
        if let RealExpr::Rat(r) = &ratio {
            if r.is_zero() {
                return Ok(RealExpr::zero());
            }
            if *r >= Rational::one() {
                return Err(Error::InvalidConstruction(format!(
                    "geometric ratio {r} is not below one"
                )));
            }
            let value = &r.pow_i(i64::from(start)).expect("positive ratio")
                / &(&Rational::one() - r);
            return Ok(RealExpr::Rat(value));
        }
        match ratio.compare_strict(&Rational::one(), &Rational::pow2_neg(64)) {
            Comparison::Less => Ok(RealExpr::Geom {
                ratio: Box::new(ratio),
                start,
            }),
            _ => Err(Error::InvalidConstruction(
                "geometric ratio not certified below one".into(),
            )),
        }
    }

    /// Certified enclosure with width at most `eps`. Evaluation starts at the
    /// precision the tolerance demands and doubles from there, intersecting
    /// successive stages; the result is deterministic in `(self, eps)`, and
    /// any two enclosures of the same expression intersect because both
    /// contain its value.
    pub fn enclose(&self, eps: &Rational) -> IntervalEnclosure {
        assert!(eps.is_positive(), "enclosure tolerance must be positive");
        let mut bits = 4u32;
        while bits < MAX_EVAL_BITS && Rational::pow2_neg(bits) > *eps {
            bits *= 2;
        }
        let mut current: Option<IntervalEnclosure> = None;
        loop {
            let stage = self.eval_at_bits(bits);
            let merged = match &current {
                Some(prev) => prev.intersect(&stage),
                None => stage,
            };
            if &merged.width() <= eps {
                return merged;
            }
            current = Some(merged);
            assert!(
                bits < MAX_EVAL_BITS,
                "enclosure refinement exceeded the precision cap"
            );
            bits *= 2;
        }
    }

    /// Strict three-valued comparison against a rational threshold: refines
    /// until the enclosure separates from `c` or its width drops below
    /// `eps_floor`, in which case the comparison is `Inconclusive`.
    pub fn compare_strict(&self, c: &Rational, eps_floor: &Rational) -> Comparison {
        assert!(eps_floor.is_positive(), "precision floor must be positive");
        let mut bits = 4u32;
        let mut current: Option<IntervalEnclosure> = None;
        loop {
            let stage = self.eval_at_bits(bits);
            let merged = match &current {
                Some(prev) => prev.intersect(&stage),
                None => stage,
            };
            if merged.strictly_below(c) {
                return Comparison::Less;
            }
            if merged.strictly_above(c) {
                return Comparison::Greater;
            }
            if &merged.width() <= eps_floor || bits >= MAX_EVAL_BITS {
                return Comparison::Inconclusive;
            }
            current = Some(merged);
            bits *= 2;
        }
    }

    /// Deterministic single-stage evaluation with target width `2^(-bits)`.
    fn eval_at_bits(&self, bits: u32) -> IntervalEnclosure {
        let target = Rational::pow2_neg(bits);
        match self {
            RealExpr::Rat(r) => IntervalEnclosure::point(r.clone()),
            RealExpr::Pow { base, exp } => {
                for attempt in 0..64u32 {
                    let child_bits = bits + 4 + 8 * attempt;
                    let child = base.eval_at_bits(child_bits);
                    if exp.is_negative() && !child.lo().is_positive() {
                        continue;
                    }
                    let result = interval_pow(&child, exp, child_bits);
                    if result.width() <= target {
                        return result;
                    }
                }
                panic!("power enclosure failed to converge at {bits} bits");
            }
            RealExpr::Sum(terms) => {
                let child_bits = bits + ceil_log2(terms.len()) + 2;
                let mut acc = IntervalEnclosure::zero();
                for t in terms {
                    acc = acc.add(&t.eval_at_bits(child_bits));
                }
                acc.round_out(bits + 2)
            }
            RealExpr::Prod(factors) => {
                for attempt in 0..64u32 {
                    let child_bits = bits + 4 + 8 * attempt;
                    let mut acc = IntervalEnclosure::point(Rational::one());
                    for f in factors {
                        acc = acc.mul(&f.eval_at_bits(child_bits));
                    }
                    if acc.width() <= target {
                        return acc.round_out(child_bits + 2);
                    }
                }
                panic!("product enclosure failed to converge at {bits} bits");
            }
            RealExpr::PSeries { s } => pseries_enclosure(s, bits),
            RealExpr::Geom { ratio, start } => {
                for attempt in 0..64u32 {
                    let child_bits = bits + 4 + 8 * attempt;
                    let r = ratio.eval_at_bits(child_bits);
                    if r.hi() >= &Rational::one() {
                        continue;
                    }
                    // sum_{k>=a} x^k = x^a / (1-x), increasing in x on [0,1).
                    let a = i64::from(*start);
                    let lo = &r.lo().pow_i(a).expect("nonneg ratio")
                        / &(&Rational::one() - r.lo());
                    let hi = &r.hi().pow_i(a).expect("nonneg ratio")
                        / &(&Rational::one() - r.hi());
                    let result = IntervalEnclosure::new(lo, hi);
                    if result.width() <= target {
                        return result;
                    }
                }
                panic!("geometric enclosure failed to converge at {bits} bits");
            }
        }
    }
}

/// `[lo, hi]^e` for a nonnegative interval, using verified root brackets on
/// the endpoints.
fn interval_pow(iv: &IntervalEnclosure, e: &Rational, root_bits: u32) -> IntervalEnclosure {
    if iv.is_point() {
        return rat_pow_enclosure(iv.lo(), e, root_bits);
    }
    if e.is_positive() {
        let lo = rat_pow_enclosure(iv.lo(), e, root_bits);
        let hi = rat_pow_enclosure(iv.hi(), e, root_bits);
        IntervalEnclosure::new(lo.lo().clone(), hi.hi().clone())
    } else {
        let lo = rat_pow_enclosure(iv.hi(), e, root_bits);
        let hi = rat_pow_enclosure(iv.lo(), e, root_bits);
        IntervalEnclosure::new(lo.lo().clone(), hi.hi().clone())
    }
}

fn pseries_cache() -> &'static Mutex<BTreeMap<(Rational, u32), IntervalEnclosure>> {
    static CACHE: OnceLock<Mutex<BTreeMap<(Rational, u32), IntervalEnclosure>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

fn pseries_enclosure(s: &Rational, bits: u32) -> IntervalEnclosure {
    if let Some(hit) = pseries_cache()
        .lock()
        .unwrap()
        .get(&(s.clone(), bits))
        .cloned()
    {
        return hit;
    }
    let target = Rational::pow2_neg(bits + 2);
    let mut n: u64 = 1;
    let tail = loop {
        let t = zeta_tail(s, n, bits + 4);
        if t.width() <= target {
            break t;
        }
        assert!(n < 1 << 40, "p-series head grew past the desk-scale cap");
        n *= 2;
    };
    let head = partial_zeta(s, &BigInt::from(n), bits + 2, n);
    let result = head.add(&tail);
    pseries_cache()
        .lock()
        .unwrap()
        .insert((s.clone(), bits), result.clone());
    result
}

/// Upper bound for the tail `sum_{r>N} r^(-s)` in its published integral-test
/// form `N^(1-s)/(s-1)`, as a normalized expression. Rejects `s <= 1`
/// (divergent tail) and `N = 0`.
pub fn pseries_tail_bound(s: &Rational, n: u64) -> crate::Result<RealExpr> {
    if *s <= Rational::one() {
        return Err(Error::InvalidConstruction(format!(
            "tail bound requested for divergent exponent {s}"
        )));
    }
    if n == 0 {
        return Err(Error::Precondition(
            "tail bound requires a cut index of at least 1".into(),
        ));
    }
    let one_minus_s = &Rational::one() - s;
    let coeff = (s - &Rational::one()).recip().expect("s > 1");
    let n_pow = RealExpr::pow(RealExpr::from_int(n), one_minus_s)?;
    Ok(RealExpr::product([
        n_pow,
        RealExpr::from_rational(coeff)?,
    ]))
}

impl fmt::Display for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealExpr::Rat(r) => write!(f, "{r}"),
            RealExpr::Pow { base, exp } => write!(f, "({base})^({exp})"),
            RealExpr::Sum(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            RealExpr::Prod(fs) => {
                write!(f, "(")?;
                for (i, t) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            RealExpr::PSeries { s } => write!(f, "zeta({s})"),
            RealExpr::Geom { ratio, start } => write!(f, "geomsum({ratio}; k>={start})"),
        }
    }
}

impl fmt::Debug for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Unvalidated mirror used for deserialization; converted through the
/// normalizing constructors so parsed descriptors satisfy the same
/// invariants as locally built expressions.
#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawExpr {
    Rat(Rational),
    Pow { base: Box<RawExpr>, exp: Rational },
    Sum(Vec<RawExpr>),
    Prod(Vec<RawExpr>),
    PSeries { s: Rational },
    Geom { ratio: Box<RawExpr>, start: u32 },
}

impl TryFrom<RawExpr> for RealExpr {
    type Error = Error;

    fn try_from(raw: RawExpr) -> crate::Result<Self> {
        match raw {
            RawExpr::Rat(r) => RealExpr::from_rational(r),
            RawExpr::Pow { base, exp } => RealExpr::pow(RealExpr::try_from(*base)?, exp),
            RawExpr::Sum(ts) => {
                let terms: crate::Result<Vec<_>> =
                    ts.into_iter().map(RealExpr::try_from).collect();
                Ok(RealExpr::sum_of(terms?))
            }
            RawExpr::Prod(fs) => {
                let factors: crate::Result<Vec<_>> =
                    fs.into_iter().map(RealExpr::try_from).collect();
                Ok(RealExpr::product(factors?))
            }
            RawExpr::PSeries { s } => RealExpr::pseries(s),
            RawExpr::Geom { ratio, start } => {
                RealExpr::geometric(RealExpr::try_from(*ratio)?, start)
            }
        }
    }
}

impl<'de> Deserialize<'de> for RealExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawExpr::deserialize(deserializer)?;
        RealExpr::try_from(raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn zeta2() -> RealExpr {
        RealExpr::pseries(r("2")).unwrap()
    }

    #[test]
    fn zeta_two_enclosure_matches_reference() {
        // zeta(2) = 1.6449340668...
        let e = zeta2().enclose(&r("1/1000000"));
        assert!(e.width() <= r("1/1000000"));
        assert!(e.lo() > &r("1644933/1000000"));
        assert!(e.hi() < &r("1644935/1000000"));
    }

    #[test]
    fn sqrt_pow_enclosure_matches_reference() {
        // 2^(-3/2) = 0.3535533905932...
        let e = RealExpr::pow(RealExpr::from_int(2), r("-3/2")).unwrap();
        let iv = e.enclose(&r("1/1000000000"));
        assert!(iv.width() <= r("1/1000000000"));
        assert!(iv.lo() > &r("35355339/100000000"));
        assert!(iv.hi() < &r("35355340/100000000"));
    }

    #[test]
    fn compare_strict_separates_zeta_from_nearby_rational() {
        assert_eq!(
            zeta2().compare_strict(&r("164/100"), &r("1/1000000000")),
            Comparison::Greater
        );
        assert_eq!(
            zeta2().compare_strict(&r("165/100"), &r("1/1000000000")),
            Comparison::Less
        );
    }

    #[test]
    fn compare_strict_is_inconclusive_against_own_value() {
        let x = RealExpr::Rat(r("1/2"));
        assert_eq!(
            x.compare_strict(&r("1/2"), &r("1/1024")),
            Comparison::Inconclusive
        );
    }

    #[test]
    fn refinements_agree_across_tolerances() {
        let e = RealExpr::product([
            zeta2(),
            RealExpr::pow(RealExpr::from_int(3), r("-1/2")).unwrap(),
        ]);
        let coarse = e.enclose(&r("1/100"));
        let fine = e.enclose(&r("1/100000"));
        // Valid enclosures of the same value always overlap, tolerances are
        // honored, and repeated calls are bit-identical.
        assert!(coarse.width() <= r("1/100"));
        assert!(fine.width() <= r("1/100000"));
        assert!(fine.lo() <= coarse.hi() && coarse.lo() <= fine.hi());
        assert_eq!(e.enclose(&r("1/100000")), fine);
    }

    #[test]
    fn tail_bound_examples_collapse_to_exact_rationals() {
        assert_eq!(
            pseries_tail_bound(&r("2"), 10).unwrap().exact_rational(),
            Some(&r("1/10"))
        );
        assert_eq!(
            pseries_tail_bound(&r("3/2"), 100).unwrap().exact_rational(),
            Some(&r("1/5"))
        );
        assert!(pseries_tail_bound(&r("1"), 10).is_err());
        assert!(pseries_tail_bound(&r("2"), 0).is_err());
    }

    #[test]
    fn normalization_cancels_reciprocal_factors() {
        let z = zeta2();
        let inv = RealExpr::pow(z.clone(), r("-1")).unwrap();
        assert_eq!(z.mul(inv), RealExpr::one());
    }

    #[test]
    fn normalization_flattens_power_towers() {
        let g = RealExpr::geometric(
            RealExpr::pow(RealExpr::Rat(r("1/2")), r("3/2")).unwrap(),
            1,
        )
        .unwrap();
        let scaled = RealExpr::pow(RealExpr::pow(g.clone(), r("-2/3")).unwrap(), r("-3/2"))
            .unwrap();
        assert_eq!(scaled, g);
    }

    #[test]
    fn rational_geometric_series_collapse() {
        let g = RealExpr::geometric(RealExpr::Rat(r("1/2")), 2).unwrap();
        assert_eq!(g.exact_rational(), Some(&r("1/2")));
        let g4 = RealExpr::geometric(RealExpr::Rat(r("1/4")), 1).unwrap();
        assert_eq!(g4.exact_rational(), Some(&r("1/3")));
        assert!(RealExpr::geometric(RealExpr::Rat(r("3/2")), 1).is_err());
    }

    #[test]
    fn symbolic_geometric_series_encloses_closed_form() {
        // ratio 2^(-3/2): sum_{k>=1} = r/(1-r), r = 0.353553...  => 0.546918...
        let g = RealExpr::geometric(
            RealExpr::pow(RealExpr::Rat(r("1/2")), r("3/2")).unwrap(),
            1,
        )
        .unwrap();
        let e = g.enclose(&r("1/100000"));
        assert!(e.lo() > &r("54/100"));
        assert!(e.hi() < &r("55/100"));
    }

    #[test]
    fn serde_round_trip_preserves_structure() {
        let e = RealExpr::product([
            RealExpr::Rat(r("1/4")),
            RealExpr::pow(zeta2(), r("-1/2")).unwrap(),
        ]);
        let json = serde_json::to_string(&e).unwrap();
        let back: RealExpr = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn deserialization_rejects_invalid_leaves() {
        assert!(serde_json::from_str::<RealExpr>("{\"rat\":\"-1/2\"}").is_err());
        assert!(serde_json::from_str::<RealExpr>("{\"pseries\":{\"s\":\"1/1\"}}").is_err());
    }

    #[test]
    fn negative_power_of_zero_is_rejected() {
        assert!(RealExpr::pow(RealExpr::zero(), r("-1")).is_err());
        assert_eq!(
            RealExpr::pow(RealExpr::zero(), r("2")).unwrap(),
            RealExpr::zero()
        );
    }
}
