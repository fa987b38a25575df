//! Exact enumeration of self-avoiding walks on the simple cubic lattice.
//!
//! Walk counts `Z_2N` and summed squared end-to-end distances `P_2N` are
//! obtained from length-`N` walks by inclusion–exclusion over the sets of
//! sites two walks share ([`doubling`]). The per-subset counters that feed the
//! formulas live in [`counters`]; [`lattice`] supplies the cubic symmetry
//! group used to fold symmetric subsets together, and [`walker`] generates the
//! walks and provides the brute-force counts used as an oracle. [`analysis`]
//! turns a series of exact counts into exponent estimates and asymptotic fits.

pub mod analysis;
pub mod checkpoint;
pub mod counters;
pub mod doubling;
pub mod lattice;
pub mod series;
pub mod walker;

pub use counters::{CounterStore, SplitSpec, SplitStrategy, SubsetRecord};
pub use doubling::{combine_unequal, p2n, run_doubling, z2n, DoublingConfig, DoublingResult};
pub use lattice::{Point, SiteKey, SymOp};
pub use series::{SeriesRow, SeriesTable};
pub use walker::{direct_count, enumerate_walks, DirectResult, Walk};
