//! Certified enclosures for rational powers and p-series partial sums.
//!
//! Rational powers `x^(u/v)` are enclosed by extracting integer `v`-th roots
//! of scaled integers and then verifying the bracket by exact cross-powering,
//! so every bound that leaves this module has been checked in integer
//! arithmetic. Partial sums of `r^(-t)` are enclosed by an exact head plus an
//! integral-test bracket of the remainder; the infinite tail of a convergent
//! p-series instead uses an Euler-Maclaurin bracket with two Bernoulli
//! corrections, whose width decays like `N^(-s-5)` and so keeps head lengths
//! short even at tight tolerances.

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::interval::IntervalEnclosure;
use super::rational::Rational;

/// Exact value of `x^e` when it is rational: integer exponents always, and
/// fractional exponents of perfect powers.
pub(crate) fn rat_pow_exact(x: &Rational, e: &Rational) -> Option<Rational> {
    if x.is_zero() {
        return if e.is_positive() {
            Some(Rational::zero())
        } else {
            None
        };
    }
    let u = e.numer();
    let v = e.denom();
    let u_small = u.to_i64()?;
    if v.is_one() {
        return x.pow_i(u_small).ok();
    }
    let v_small = v.to_u32()?;
    let y = x.pow_i(u_small).ok()?;
    if y.is_negative() {
        return None;
    }
    let pn = y.numer().nth_root(v_small);
    let pd = y.denom().nth_root(v_small);
    if &pn.clone().pow(v_small) == y.numer() && &pd.clone().pow(v_small) == y.denom() {
        Some(Rational::from_big(pn, pd).expect("nonzero denominator root"))
    } else {
        None
    }
}

fn pow_cache() -> &'static Mutex<BTreeMap<(Rational, Rational, u32), IntervalEnclosure>> {
    static CACHE: OnceLock<Mutex<BTreeMap<(Rational, Rational, u32), IntervalEnclosure>>> =
        OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// Encloses `x^(1/v)` for `x >= 0` with absolute width `2^(-bits)`. The
/// returned bracket is verified exactly: `lo^v <= x <= hi^v`.
fn root_enclosure(x: &Rational, v: u32, bits: u32) -> IntervalEnclosure {
    assert!(!x.is_negative(), "root of negative value");
    if v == 1 {
        return IntervalEnclosure::point(x.clone());
    }
    if x.is_zero() {
        return IntervalEnclosure::zero();
    }
    let scale = BigInt::one() << (u64::from(v) * u64::from(bits));
    let scaled = (x.numer() * &scale) / x.denom();
    let mut root = scaled.nth_root(v);
    // nth_root floors; re-verify and nudge so the bracket is exact. These
    // integer cross-powers are the proof that `lo^v <= x < hi^v`: the lower
    // check passes through the floor division, and the upper one exceeds it
    // by at least one grid unit.
    while root.clone().pow(v) > scaled {
        root -= 1;
    }
    while (root.clone() + BigInt::one()).pow(v) <= scaled {
        root += 1;
    }
    let grid = BigInt::one() << bits;
    let lo = Rational::from_big(root.clone(), grid.clone()).expect("power-of-two denominator");
    let hi = Rational::from_big(root + 1, grid).expect("power-of-two denominator");
    IntervalEnclosure::new(lo, hi)
}

/// Encloses `x^e` for rational `x >= 0` and rational `e`, with absolute width
/// at most `2^(-bits)` on the root extraction step. `x = 0` requires `e > 0`.
/// Results are memoized: the enclosure is deterministic in `(x, e, bits)`,
/// the exactness probe and root extraction both cross-power big integers,
/// and the same power recurs across refinement stages, overlapping sequence
/// parts, and series heads.
pub(crate) fn rat_pow_enclosure(x: &Rational, e: &Rational, bits: u32) -> IntervalEnclosure {
    if e.denom().is_one() {
        // Integer exponents are exact single multiplications; the memo would
        // cost more than it saves.
        if let Some(exact) = rat_pow_exact(x, e) {
            return IntervalEnclosure::point(exact);
        }
    }
    let key = (x.clone(), e.clone(), bits);
    if let Some(hit) = pow_cache().lock().unwrap().get(&key).cloned() {
        return hit;
    }
    let result = if let Some(exact) = rat_pow_exact(x, e) {
        IntervalEnclosure::point(exact)
    } else {
        assert!(
            x.is_positive(),
            "fractional power of a nonpositive rational"
        );
        let u = e
            .numer()
            .to_i64()
            .expect("power numerator within machine range");
        let v = e
            .denom()
            .to_u32()
            .expect("power denominator within machine range");
        let y = x.pow_i(u).expect("nonzero base");
        root_enclosure(&y, v, bits)
    };
    pow_cache().lock().unwrap().insert(key, result.clone());
    result
}

fn bigint_rational(n: &BigInt) -> Rational {
    Rational::from_bigint(n.clone())
}

/// `integral of x^(-t) dx` over `[a, b]`, `0 < a <= b`, `t != 1`, enclosed.
fn power_integral(a: &BigInt, b: &BigInt, t: &Rational, bits: u32) -> IntervalEnclosure {
    let one_minus_t = &Rational::one() - t;
    let a_pow = rat_pow_enclosure(&bigint_rational(a), &one_minus_t, bits);
    let b_pow = rat_pow_enclosure(&bigint_rational(b), &one_minus_t, bits);
    let coeff = one_minus_t.recip().expect("t != 1");
    b_pow.sub(&a_pow).scale(&coeff).clamp_nonnegative()
}

/// Number of complete doublings `d` with `h * 2^d <= r` (and `h >= 1`).
fn doublings(h: &BigInt, r: &BigInt) -> u64 {
    let mut d = 0u64;
    let mut cur = h.clone();
    while &cur * 2 <= *r {
        cur *= 2;
        d += 1;
    }
    d
}

/// Certified enclosure of the partial sum `sum_{r=1..upto} r^(-t)` for
/// `t >= 0`. The first `min(upto, head_budget)` terms are enclosed directly;
/// any remainder is bracketed by the integral test (for `t = 1`, by dyadic
/// doubling blocks), so `upto` may be astronomically large.
pub fn partial_zeta(t: &Rational, upto: &BigInt, bits: u32, head_budget: u64) -> IntervalEnclosure {
    assert!(!t.is_negative(), "negative series exponent");
    assert!(!upto.is_negative(), "negative term count");
    if upto.is_zero() {
        return IntervalEnclosure::zero();
    }
    if t.is_zero() {
        return IntervalEnclosure::point(bigint_rational(upto));
    }
    let head_len: u64 = upto.to_u64().map_or(head_budget, |u| u.min(head_budget));
    let head_len_bits = 64 - head_len.leading_zeros();
    let term_bits = bits + head_len_bits + 3;
    let mut acc = IntervalEnclosure::zero();
    let neg_t = -t;
    for r in 1..=head_len {
        let term = rat_pow_enclosure(&Rational::from_int(r as i64), &neg_t, term_bits);
        // Snap every partial sum onto a dyadic grid; otherwise exact terms
        // like 1/r^2 accumulate lcm-sized denominators and long heads stall.
        acc = acc.add(&term).snap_to_grid(term_bits + 2);
    }
    let head_end = BigInt::from(head_len);
    if head_end == *upto {
        return acc;
    }
    let one = Rational::one();
    let remainder = if *t == one {
        // Each doubling block (a, 2a] contributes between 1/2 and 1.
        let d = doublings(&head_end, upto);
        IntervalEnclosure::new(
            Rational::new(d as i64, 2),
            Rational::from_int(d as i64 + 1),
        )
    } else {
        // sum_{h < r <= R} r^(-t) in [int_{h+1}^{R+1}, int_h^R].
        let lower = power_integral(&(&head_end + 1), &(upto + 1), t, bits + 3);
        let upper = power_integral(&head_end, upto, t, bits + 3);
        IntervalEnclosure::new(lower.lo().clone(), upper.hi().clone())
    };
    acc.add(&remainder)
}

/// Certified enclosure of the tail `sum_{r > n} r^(-s)` for `s > 1`, `n >= 1`.
///
/// Euler-Maclaurin with two Bernoulli corrections, writing `a = n + 1`:
///
/// `T = a^(1-s)/(s-1) + a^(-s)/2 + s*a^(-s-1)/12
///      - s(s+1)(s+2)*a^(-s-3)/720 + R`,
///
/// where `R` lies in `[0, c3]` with
/// `c3 = s(s+1)(s+2)(s+3)(s+4)*a^(-s-5)/30240`. The remainder bound is the
/// classical first-omitted-term envelope with alternating sign, valid here
/// because every derivative of `x^(-s)` has constant sign on `(0, inf)`. All
/// correction factors are exact rational multiples of `a^(1-s)`, so a single
/// verified root extraction covers the whole bracket; the width decays like
/// `a^(-s-5)`, which keeps the required head length small even for tight
/// tolerances.
pub fn zeta_tail(s: &Rational, n: u64, bits: u32) -> IntervalEnclosure {
    assert!(*s > Rational::one(), "tail of a divergent p-series");
    assert!(n >= 1, "tail cut must be at least 1");
    let one = Rational::one();
    let a = Rational::from_int(n as i64 + 1);
    let one_minus_s = &one - s;
    let inv_gap = (s - &one).recip().expect("s > 1");
    // The bracket scales by 1/(s-1), so the root precision must absorb its
    // magnitude or the output width stalls above any target for s near 1.
    let extra = inv_gap.ceil_int().bits() as u32 + 2;
    let p = rat_pow_enclosure(&a, &one_minus_s, bits + 4 + extra);
    let inv_a = a.recip().expect("a >= 2");
    let inv_a2 = &inv_a * &inv_a;
    let inv_a4 = &inv_a2 * &inv_a2;
    let inv_a6 = &inv_a4 * &inv_a2;
    let s1 = s + &one;
    let s2 = s + &Rational::from_int(2);
    let s3 = s + &Rational::from_int(3);
    let s4 = s + &Rational::from_int(4);
    let rising3 = &(s * &s1) * &s2;
    let rising5 = &(&rising3 * &s3) * &s4;
    // T = a^(1-s) * K with K in [k_core, k_core + k_plus].
    let k_core = &(inv_gap
        + &inv_a * &Rational::new(1, 2)
        + &(s * &inv_a2) * &Rational::new(1, 12))
        - &(&rising3 * &(&inv_a4 * &Rational::new(1, 720)));
    let k_plus = &rising5 * &(&inv_a6 * &Rational::new(1, 30240));
    let k_lo = Rational::max2(&k_core, &Rational::zero());
    let k_hi = &k_core + &k_plus;
    IntervalEnclosure::new(p.lo() * &k_lo, p.hi() * &k_hi)
}

/// Upper bound `N^(1-s)/(s-1)` on the same tail, as exact interval data; the
/// plain integral-test form used in published certificates.
pub(crate) fn integral_tail_upper(s: &Rational, n: u64, bits: u32) -> Rational {
    let one_minus_s = &Rational::one() - s;
    let coeff = (s - &Rational::one()).recip().expect("s > 1");
    let pow = rat_pow_enclosure(&Rational::from_int(n as i64), &one_minus_s, bits);
    pow.hi() * &coeff
}
