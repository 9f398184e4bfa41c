//! Partitions of the positive integers into countably many disjoint
//! infinite blocks.
//!
//! A [`BlockPartition`] is a computable bijection `(k, r) -> position`
//! between block/rank pairs (block `k >= 1`, rank `r >= 1`) and the
//! positions above an optional excluded head `1..=offset`. Two schemes are
//! provided: the diagonal (Cantor) pairing, which walks anti-diagonals, and
//! a dyadic scheme keyed on the 2-adic valuation. Every block is infinite,
//! blocks are pairwise disjoint, and their union is everything above the
//! offset; block enumerations are strictly increasing in rank.
//!
//! Positions are `BigInt` so that rank counting stays exact even at the
//! astronomically large truncation indices divergence certificates predict.

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingScheme {
    /// Cantor pairing: block `k`, rank `r` sit on anti-diagonal `k + r - 1`.
    Diagonal,
    /// Block `k` is the set of positions with 2-adic valuation `k - 1`.
    Dyadic,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockPartition {
    scheme: PairingScheme,
    /// Positions `1..=offset` belong to no block.
    offset: u64,
}

impl BlockPartition {
    pub fn new(scheme: PairingScheme, offset: u64) -> Self {
        BlockPartition { scheme, offset }
    }

    /// Diagonal pairing with no excluded head; the default everywhere.
    pub fn diagonal() -> Self {
        BlockPartition::new(PairingScheme::Diagonal, 0)
    }

    pub fn scheme(&self) -> PairingScheme {
        self.scheme
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// The same layout pushed `by` further along the index set.
    pub fn with_added_offset(&self, by: u64) -> crate::Result<Self> {
        let offset = self.offset.checked_add(by).ok_or_else(|| {
            crate::error::Error::InvalidConstruction(
                "partition offset overflows u64".into(),
            )
        })?;
        Ok(BlockPartition::new(self.scheme, offset))
    }

    /// Position of the rank-`r` element of block `k` (both 1-based).
    pub fn position(&self, k: u32, r: &BigInt) -> BigInt {
        assert!(k >= 1, "block indices are 1-based");
        assert!(r.is_positive(), "ranks are 1-based");
        let base = match self.scheme {
            PairingScheme::Diagonal => {
                let d = r + BigInt::from(k) - 1;
                (&d - 1) * &d / 2 + r
            }
            PairingScheme::Dyadic => (r * 2 - 1) << (k - 1),
        };
        base + BigInt::from(self.offset)
    }

    pub fn position_u64(&self, k: u32, r: u64) -> Option<u64> {
        self.position(k, &BigInt::from(r)).to_u64()
    }

    /// Inverse of [`BlockPartition::position`]: the `(block, rank)` pair at
    /// position `j`, or `None` for positions inside the excluded head.
    pub fn locate(&self, j: &BigInt) -> Option<(u32, BigInt)> {
        let j = j - BigInt::from(self.offset);
        if !j.is_positive() {
            return None;
        }
        match self.scheme {
            PairingScheme::Diagonal => {
                // Find the anti-diagonal d with d(d-1)/2 < j <= d(d+1)/2.
                let mut d = ((&j * 2u8).sqrt() + 1u8) / 2u8;
                while (&d - 1) * &d / 2 >= j {
                    d -= 1;
                }
                while &d * (&d + 1) / 2 < j {
                    d += 1;
                }
                let r = &j - (&d - 1) * &d / 2;
                let k: BigInt = &d - &r + 1u8;
                let k = k.to_u32().expect("desk-scale block index");
                Some((k, r))
            }
            PairingScheme::Dyadic => {
                let v = j.trailing_zeros().expect("positive position");
                let k = u32::try_from(v).expect("desk-scale block index") + 1;
                let odd: BigInt = j >> v;
                Some((k, (odd + 1) / 2))
            }
        }
    }

    pub fn locate_u64(&self, j: u64) -> Option<(u32, u64)> {
        let (k, r) = self.locate(&BigInt::from(j))?;
        Some((k, r.to_u64().expect("rank bounded by position")))
    }

    /// Number of ranks of block `k` with position at most `n`, i.e. the
    /// largest `r` with `position(k, r) <= n` (0 when even rank 1 is beyond).
    pub fn rank_upto(&self, k: u32, n: &BigInt) -> BigInt {
        if self.position(k, &BigInt::one()) > *n {
            return BigInt::zero();
        }
        match self.scheme {
            PairingScheme::Diagonal => {
                // position is strictly increasing in r; binary search.
                let mut lo = BigInt::one();
                let mut hi = n - BigInt::from(self.offset);
                while lo < hi {
                    let mid: BigInt = (&lo + &hi + 1) / 2;
                    if self.position(k, &mid) <= *n {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                lo
            }
            PairingScheme::Dyadic => {
                // offset + (2r-1)*2^(k-1) <= n  <=>  r <= ((n-offset)/2^(k-1) + 1)/2.
                let reduced = (n - BigInt::from(self.offset)) >> (k - 1);
                (reduced + 1) / 2
            }
        }
    }

    /// Position of the first element of block `k`.
    pub fn first_position(&self, k: u32) -> BigInt {
        self.position(k, &BigInt::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_layout_matches_hand_enumeration() {
        let p = BlockPartition::diagonal();
        // Anti-diagonals: (1,1)=1, (2,1)=2, (1,2)=3, (3,1)=4, (2,2)=5,
        // (1,3)=6, (4,1)=7 ...
        assert_eq!(p.position_u64(1, 1), Some(1));
        assert_eq!(p.position_u64(2, 1), Some(2));
        assert_eq!(p.position_u64(1, 2), Some(3));
        assert_eq!(p.position_u64(3, 1), Some(4));
        assert_eq!(p.position_u64(2, 2), Some(5));
        assert_eq!(p.position_u64(1, 3), Some(6));
        assert_eq!(p.position_u64(4, 1), Some(7));
        assert_eq!(p.locate_u64(5), Some((2, 2)));
        assert_eq!(p.locate_u64(1), Some((1, 1)));
    }

    #[test]
    fn dyadic_layout_matches_hand_enumeration() {
        let p = BlockPartition::new(PairingScheme::Dyadic, 0);
        // Block 1 = odds, block 2 = 2 mod 4, block 3 = 4 mod 8, ...
        assert_eq!(p.position_u64(1, 1), Some(1));
        assert_eq!(p.position_u64(1, 2), Some(3));
        assert_eq!(p.position_u64(2, 1), Some(2));
        assert_eq!(p.position_u64(2, 2), Some(6));
        assert_eq!(p.position_u64(3, 1), Some(4));
        assert_eq!(p.locate_u64(12), Some((3, 2)));
    }

    #[test]
    fn offset_shifts_all_positions_and_excludes_head() {
        let p = BlockPartition::new(PairingScheme::Diagonal, 5);
        assert_eq!(p.position_u64(1, 1), Some(6));
        assert_eq!(p.locate_u64(5), None);
        assert_eq!(p.locate_u64(6), Some((1, 1)));
    }

    #[test]
    fn rank_upto_counts_exactly_at_small_scale() {
        for p in [
            BlockPartition::diagonal(),
            BlockPartition::new(PairingScheme::Dyadic, 0),
            BlockPartition::new(PairingScheme::Diagonal, 3),
        ] {
            for k in 1..=5u32 {
                for n in 0..=200u64 {
                    let brute = (1..=n)
                        .filter(|j| matches!(p.locate_u64(*j), Some((kk, _)) if kk == k))
                        .count();
                    assert_eq!(
                        p.rank_upto(k, &BigInt::from(n)),
                        BigInt::from(brute),
                        "scheme {:?} k={k} n={n}",
                        p.scheme()
                    );
                }
            }
        }
    }

    #[test]
    fn rank_upto_handles_astronomical_cutoffs() {
        let p = BlockPartition::diagonal();
        let n = BigInt::one() << 5000u32;
        let r = p.rank_upto(2, &n);
        // position(2, r) ~ (r+1)^2/2, so r ~ 2^2500 * sqrt(2).
        assert!(p.position(2, &r) <= n);
        assert!(p.position(2, &(&r + 1)) > n);
        assert!(r > (BigInt::one() << 2500u32));
    }

    proptest! {
        #[test]
        fn locate_inverts_position(
            k in 1u32..40,
            r in 1u64..10_000,
            scheme in prop_oneof![Just(PairingScheme::Diagonal), Just(PairingScheme::Dyadic)],
            offset in 0u64..50,
        ) {
            let p = BlockPartition::new(scheme, offset);
            let pos = p.position(k, &BigInt::from(r));
            prop_assert_eq!(p.locate(&pos), Some((k, BigInt::from(r))));
        }

        #[test]
        fn every_position_above_offset_is_covered(
            j in 1u64..100_000,
            scheme in prop_oneof![Just(PairingScheme::Diagonal), Just(PairingScheme::Dyadic)],
        ) {
            let p = BlockPartition::new(scheme, 0);
            let (k, r) = p.locate_u64(j).unwrap();
            prop_assert_eq!(p.position_u64(k, r), Some(j));
        }

        #[test]
        fn positions_strictly_increase_in_rank(
            k in 1u32..30,
            r in 1u64..5_000,
            scheme in prop_oneof![Just(PairingScheme::Diagonal), Just(PairingScheme::Dyadic)],
        ) {
            let p = BlockPartition::new(scheme, 0);
            prop_assert!(p.position(k, &BigInt::from(r)) < p.position(k, &BigInt::from(r + 1)));
        }
    }
}
