//! Certified rational intervals.
//!
//! An enclosure is a closed interval `[lo, hi]` with rational endpoints that
//! is known to contain the exact value under discussion. Endpoints are exact
//! rationals, so interval arithmetic here introduces no rounding of its own;
//! `round_out` exists only to keep endpoint sizes bounded and always moves
//! endpoints outward.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::rational::Rational;

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalEnclosure {
    lo: Rational,
    hi: Rational,
}

impl IntervalEnclosure {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "inverted interval: [{lo}, {hi}]");
        IntervalEnclosure { lo, hi }
    }

    pub fn point(v: Rational) -> Self {
        IntervalEnclosure { lo: v.clone(), hi: v }
    }

    pub fn zero() -> Self {
        IntervalEnclosure::point(Rational::zero())
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: &Rational) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    pub fn contains_interval(&self, other: &Self) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn strictly_above(&self, c: &Rational) -> bool {
        self.lo > *c
    }

    pub fn strictly_below(&self, c: &Rational) -> bool {
        self.hi < *c
    }

    pub fn excludes_zero(&self) -> bool {
        self.lo.is_positive() || self.hi.is_negative()
    }

    pub fn add(&self, other: &Self) -> Self {
        IntervalEnclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        IntervalEnclosure {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn neg(&self) -> Self {
        IntervalEnclosure {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let mut lo = candidates[0].clone();
        let mut hi = candidates[0].clone();
        for c in &candidates[1..] {
            if *c < lo {
                lo = c.clone();
            }
            if *c > hi {
                hi = c.clone();
            }
        }
        IntervalEnclosure { lo, hi }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_negative() {
            IntervalEnclosure {
                lo: c * &self.hi,
                hi: c * &self.lo,
            }
        } else {
            IntervalEnclosure {
                lo: c * &self.lo,
                hi: c * &self.hi,
            }
        }
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            IntervalEnclosure {
                lo: Rational::zero(),
                hi: Rational::max2(&self.lo.abs(), &self.hi),
            }
        }
    }

    /// Intersection of two enclosures of the same value. Sound enclosures of
    /// one value always overlap; the assertion guards against misuse.
    pub fn intersect(&self, other: &Self) -> Self {
        let lo = Rational::max2(&self.lo, &other.lo);
        let hi = Rational::min2(&self.hi, &other.hi);
        assert!(
            lo <= hi,
            "disjoint enclosures claimed to bound one value: [{}, {}] vs [{}, {}]",
            self.lo,
            self.hi,
            other.lo,
            other.hi
        );
        IntervalEnclosure { lo, hi }
    }

    /// Widens endpoints outward onto the dyadic grid `2^(-bits)` to cap
    /// endpoint size. Points are left exact.
    pub fn round_out(&self, bits: u32) -> Self {
        if self.is_point() {
            return self.clone();
        }
        IntervalEnclosure {
            lo: self.lo.round_to_bits(bits, true),
            hi: self.hi.round_to_bits(bits, false),
        }
    }

    /// Snaps both endpoints outward onto the dyadic grid `2^(-bits)`
    /// unconditionally, collapsing denominators to powers of two. Unlike
    /// [`IntervalEnclosure::round_out`] this widens exact points too (unless
    /// they already sit on the grid), which keeps long accumulation loops
    /// from building giant denominators.
    pub(crate) fn snap_to_grid(&self, bits: u32) -> Self {
        IntervalEnclosure {
            lo: self.lo.round_to_bits(bits, true),
            hi: self.hi.round_to_bits(bits, false),
        }
    }

    /// Clamps the lower endpoint up to zero; valid only when the enclosed
    /// value is known nonnegative by construction.
    pub fn clamp_nonnegative(&self) -> Self {
        if self.lo.is_negative() {
            IntervalEnclosure {
                lo: Rational::zero(),
                hi: Rational::max2(&self.hi, &Rational::zero()),
            }
        } else {
            self.clone()
        }
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a Self>>(items: I) -> Self {
        let mut acc = IntervalEnclosure::zero();
        for it in items {
            acc = acc.add(it);
        }
        acc
    }
}

impl fmt::Display for IntervalEnclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Debug for IntervalEnclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn iv(lo: &str, hi: &str) -> IntervalEnclosure {
        IntervalEnclosure::new(r(lo), r(hi))
    }

    #[test]
    fn multiplication_covers_sign_cases() {
        let a = iv("-2", "3");
        let b = iv("-1", "4");
        let p = a.mul(&b);
        assert_eq!(p, iv("-8", "12"));
        let c = iv("2", "3").mul(&iv("-5", "-1"));
        assert_eq!(c, iv("-15", "-2"));
    }

    #[test]
    fn abs_folds_mixed_intervals() {
        assert_eq!(iv("-3", "2").abs(), iv("0", "3"));
        assert_eq!(iv("1/2", "2").abs(), iv("1/2", "2"));
        assert_eq!(iv("-2", "-1/2").abs(), iv("1/2", "2"));
    }

    #[test]
    fn round_out_widens_onto_grid() {
        let x = iv("1/3", "2/3");
        let rounded = x.round_out(4);
        assert!(rounded.contains_interval(&x));
        assert!(rounded.width() <= &x.width() + &r("1/8"));
        let p = IntervalEnclosure::point(r("1/3"));
        assert_eq!(p.round_out(2), p);
    }

    #[test]
    fn intersect_tightens() {
        let a = iv("0", "1");
        let b = iv("1/2", "3/2");
        assert_eq!(a.intersect(&b), iv("1/2", "1"));
    }

    #[test]
    #[should_panic(expected = "disjoint")]
    fn intersect_rejects_disjoint() {
        let _ = iv("0", "1").intersect(&iv("2", "3"));
    }
}
