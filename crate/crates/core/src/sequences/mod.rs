//! Exact sequence machinery: block partitions of the index set, symbolic
//! sequences with certified coordinate evaluation, the block-family witness
//! construction, and summability verdicts with machine-checkable
//! certificates.

mod membership;
mod partition;
mod seq;
mod witness;

pub use membership::{
    lq_membership, lq_membership_with, partial_power_sum, DivergenceCertificate,
    EvidenceBudget, IndexLayout, MembershipVerdict, NumericCheckpoint,
};
pub use partition::{BlockPartition, PairingScheme};
pub use seq::{
    Coordinate, RelocationMap, ScaledPart, SelectionTable, Shape, SymbolicSequence,
};
pub use witness::{first_escape_block, normalized_block_vector, witness_vector};
