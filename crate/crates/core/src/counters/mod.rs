//! Per-subset counters for the doubling formulas.
//!
//! For every nonempty subset `S` of the sites `w_1..w_N` visited by a walk,
//! the store keeps the number of walks through `S`, the sum of their squared
//! end-to-end distances and the sum of their end points. With symmetry on,
//! subsets are folded onto their canonical representative: each incidence
//! adds to the representative, and the end point is first mapped by the
//! operation that carried `S` onto it.

mod engine;
mod key;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lattice::{canonicalize, encode, LatticeError, Point, SiteKey, SymOp, GROUP_ORDER};
use crate::walker::{Walk, WalkError};

pub use engine::{accumulate_all, EngineConfig};
pub use key::{codec, SiteCodec, SubsetKey, MAX_SITES};

#[derive(Debug, Error)]
pub enum CounterError {
    #[error("walk has {got} steps but the store counts walks of length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("walk length {0} is outside the supported range 1..={MAX_SITES}")]
    UnsupportedLength(usize),
    #[error("encoding bound {bound} must lie in {n}..={MAX_SITES}")]
    BadBound { n: usize, bound: u32 },
    #[error("invalid split: {0}")]
    BadSplit(String),
    #[error("stores are not merge-compatible: {0}")]
    Incompatible(String),
    #[error("orbit sizes {0} and {1} disagree for the same subset")]
    OrbitMismatch(u8, u8),
    #[error("counter overflow while accumulating")]
    Overflow,
    #[error("extension sum is not divisible while folding a symmetry class")]
    Indivisible,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(len: usize) -> Parity {
        if len.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// `(-1)^|S|`.
    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }
}

/// How the subset universe is cut into independent parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitStrategy {
    None,
    /// By the largest site key of the canonical subset.
    MaxSite,
    /// By the number of sites.
    SubsetSize,
}

impl SplitStrategy {
    pub(crate) fn code(self) -> u8 {
        match self {
            SplitStrategy::None => 0,
            SplitStrategy::MaxSite => 1,
            SplitStrategy::SubsetSize => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<SplitStrategy> {
        Some(match c {
            0 => SplitStrategy::None,
            1 => SplitStrategy::MaxSite,
            2 => SplitStrategy::SubsetSize,
            _ => return None,
        })
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitStrategy::None => "none",
            SplitStrategy::MaxSite => "max-site",
            SplitStrategy::SubsetSize => "subset-size",
        })
    }
}

impl FromStr for SplitStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SplitStrategy::None),
            "max-site" => Ok(SplitStrategy::MaxSite),
            "subset-size" => Ok(SplitStrategy::SubsetSize),
            other => Err(format!("unknown split strategy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitSpec {
    pub strategy: SplitStrategy,
    pub part_index: usize,
    pub part_total: usize,
}

impl SplitSpec {
    pub const NONE: SplitSpec = SplitSpec {
        strategy: SplitStrategy::None,
        part_index: 0,
        part_total: 1,
    };

    pub fn new(strategy: SplitStrategy, part_index: usize, part_total: usize) -> Result<SplitSpec, CounterError> {
        if part_total == 0 || part_index >= part_total {
            return Err(CounterError::BadSplit(format!(
                "part {part_index} of {part_total}"
            )));
        }
        if strategy == SplitStrategy::None && part_total != 1 {
            return Err(CounterError::BadSplit(
                "strategy 'none' has exactly one part".into(),
            ));
        }
        Ok(SplitSpec {
            strategy,
            part_index,
            part_total,
        })
    }

    /// All parts of a split into `part_total` pieces.
    pub fn parts(strategy: SplitStrategy, part_total: usize) -> Result<Vec<SplitSpec>, CounterError> {
        (0..part_total).map(|i| SplitSpec::new(strategy, i, part_total)).collect()
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}/{}", self.strategy, self.part_index, self.part_total)
    }
}

/// Whether the canonical subset `sites` (sorted, nonempty) belongs to `split`.
pub fn split_filter(sites: &[SiteKey], split: &SplitSpec) -> bool {
    match split.strategy {
        SplitStrategy::None => true,
        SplitStrategy::MaxSite => {
            let last = sites.last().expect("nonempty subset");
            last.0 as usize % split.part_total == split.part_index
        }
        SplitStrategy::SubsetSize => sites.len() % split.part_total == split.part_index,
    }
}

/// The `2^N - 1` nonempty subsets of `w_1..w_N` as sorted keys, in binary
/// counter order over walk positions (bit `i` selects `w_{i+1}`).
pub fn subset_iteration(w: &Walk, bound: u32) -> Result<SubsetIter, CounterError> {
    let n = w.len();
    if n > 63 {
        return Err(CounterError::UnsupportedLength(n));
    }
    let keys = w.vertices()[1..]
        .iter()
        .map(|&p| encode(p, bound))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SubsetIter {
        keys,
        mask: 0,
        end: (1u64 << n) - 1,
    })
}

pub struct SubsetIter {
    keys: Vec<SiteKey>,
    mask: u64,
    end: u64,
}

impl Iterator for SubsetIter {
    type Item = (Vec<SiteKey>, Parity);

    fn next(&mut self) -> Option<Self::Item> {
        if self.mask == self.end {
            return None;
        }
        self.mask += 1;
        let mut sites: Vec<SiteKey> = self
            .keys
            .iter()
            .enumerate()
            .filter(|(i, _)| self.mask >> i & 1 == 1)
            .map(|(_, &k)| k)
            .collect();
        sites.sort_unstable();
        let parity = Parity::of(sites.len());
        Some((sites, parity))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.mask) as usize;
        (left, Some(left))
    }
}

/// Counters for one stored subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SubsetRecord {
    /// Walk/subset incidences folded onto this subset.
    pub zcount: u64,
    /// Sum of `|w_N|^2` over those incidences.
    pub pcount: u64,
    /// Sum of the (mapped) end points.
    pub evec: [i64; 3],
    pub orbit_size: u8,
}

impl SubsetRecord {
    #[inline]
    pub(crate) fn add(&mut self, other: &SubsetRecord) -> bool {
        let (z, o1) = self.zcount.overflowing_add(other.zcount);
        let (p, o2) = self.pcount.overflowing_add(other.pcount);
        let mut of = o1 | o2;
        for i in 0..3 {
            let (e, o) = self.evec[i].overflowing_add(other.evec[i]);
            self.evec[i] = e;
            of |= o;
        }
        self.zcount = z;
        self.pcount = p;
        of
    }

    /// `zcount * pcount - |evec|^2`.
    pub fn cross_term(&self) -> i128 {
        let e2: i128 = self.evec.iter().map(|&e| e as i128 * e as i128).sum();
        self.zcount as i128 * self.pcount as i128 - e2
    }
}

pub(crate) type RecordMap = HashMap<SubsetKey, SubsetRecord, ahash::RandomState>;

pub(crate) fn new_map() -> RecordMap {
    // Fixed seeds: iteration order only matters for memory behaviour, but it
    // is nicer when it is reproducible.
    HashMap::with_hasher(ahash::RandomState::with_seeds(
        0x5a17_cafe,
        0x0bad_f00d,
        0x1234_5678,
        0x9abc_def0,
    ))
}

/// Counters for all stored subsets of one accumulation run.
#[derive(Debug, Clone)]
pub struct CounterStore {
    n: usize,
    bound: u32,
    symmetry: bool,
    strategy: SplitStrategy,
    part_total: usize,
    /// Sorted part indices covered by this store.
    parts: Vec<usize>,
    records: RecordMap,
    overflow: bool,
}

impl CounterStore {
    /// Empty store for walks of length `n`, encoding sites within `bound`.
    pub fn new(n: usize, bound: u32, symmetry: bool, split: SplitSpec) -> Result<CounterStore, CounterError> {
        if n == 0 || n > MAX_SITES {
            return Err(CounterError::UnsupportedLength(n));
        }
        if (bound as usize) < n || bound as usize > MAX_SITES {
            return Err(CounterError::BadBound { n, bound });
        }
        SplitSpec::new(split.strategy, split.part_index, split.part_total)?;
        Ok(CounterStore {
            n,
            bound,
            symmetry,
            strategy: split.strategy,
            part_total: split.part_total,
            parts: vec![split.part_index],
            records: new_map(),
            overflow: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn symmetry(&self) -> bool {
        self.symmetry
    }

    pub fn strategy(&self) -> SplitStrategy {
        self.strategy
    }

    pub fn part_total(&self) -> usize {
        self.part_total
    }

    /// Part indices whose subsets this store holds.
    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn is_complete(&self) -> bool {
        self.parts.len() == self.part_total
    }

    pub fn codec(&self) -> &'static SiteCodec {
        codec(self.bound)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = (&SubsetKey, &SubsetRecord)> {
        self.records.iter()
    }

    /// Records in increasing key order.
    pub fn sorted_records(&self) -> Vec<(SubsetKey, SubsetRecord)> {
        let mut v: Vec<_> = self.records.iter().map(|(k, r)| (*k, *r)).collect();
        v.sort_unstable_by_key(|(k, _)| *k);
        v
    }

    pub fn get(&self, sites: &[SiteKey]) -> Option<&SubsetRecord> {
        let key = self.codec().pack(sites)?;
        self.records.get(&key)
    }

    pub fn get_key(&self, key: &SubsetKey) -> Option<&SubsetRecord> {
        self.records.get(key)
    }

    pub fn sites(&self, key: SubsetKey) -> Vec<SiteKey> {
        self.codec().unpack(key)
    }

    /// Total number of incidences, `sum zcount`.
    pub fn incidences(&self) -> u128 {
        self.records.values().map(|r| r.zcount as u128).sum()
    }

    pub fn overflowed(&self) -> bool {
        self.overflow
    }

    pub(crate) fn split_for(&self, part: usize) -> SplitSpec {
        SplitSpec {
            strategy: self.strategy,
            part_index: part,
            part_total: self.part_total,
        }
    }

    #[inline]
    pub(crate) fn add_record(&mut self, key: SubsetKey, rec: SubsetRecord) -> Result<(), CounterError> {
        let slot = self.records.entry(key).or_insert(SubsetRecord {
            orbit_size: rec.orbit_size,
            ..Default::default()
        });
        if slot.orbit_size != rec.orbit_size {
            return Err(CounterError::OrbitMismatch(slot.orbit_size, rec.orbit_size));
        }
        self.overflow |= slot.add(&rec);
        Ok(())
    }

    pub(crate) fn records_mut(&mut self) -> &mut RecordMap {
        &mut self.records
    }

    pub(crate) fn set_parts(&mut self, mut parts: Vec<usize>) {
        parts.sort_unstable();
        parts.dedup();
        self.parts = parts;
    }

    /// Adds every subset of `w` that passes this store's split filter.
    ///
    /// This walks the subsets one by one through [`canonicalize`]; see
    /// [`accumulate_all`] for the bulk path.
    pub fn accumulate_walk(&mut self, w: &Walk) -> Result<(), CounterError> {
        if w.len() != self.n {
            return Err(CounterError::LengthMismatch {
                expected: self.n,
                got: w.len(),
            });
        }
        let end = w.end();
        let p2 = end.norm_sq() as u64;
        let bound = self.bound;
        let parts = self.parts.clone();
        for (sites, _) in subset_iteration(w, bound)? {
            let (rep, op, orbit) = if self.symmetry {
                let points = sites
                    .iter()
                    .map(|&k| crate::lattice::decode(k, bound))
                    .collect::<Result<Vec<Point>, _>>()?;
                let (c, op) = canonicalize(&points, bound)?;
                (c.sites, op, c.orbit_size)
            } else {
                (sites, SymOp::IDENTITY, 1)
            };
            if !parts.iter().any(|&p| split_filter(&rep, &self.split_for(p))) {
                continue;
            }
            let key = self.codec().pack(&rep).expect("walk sites lie in the octahedron");
            let e = op.apply(end);
            self.add_record(
                key,
                SubsetRecord {
                    zcount: 1,
                    pcount: p2,
                    evec: [e.x as i64, e.y as i64, e.z as i64],
                    orbit_size: orbit,
                },
            )?;
        }
        Ok(())
    }

    /// Field-wise sum of two stores for the same walk length.
    ///
    /// Stores built for the same part (e.g. by different workers) keep that
    /// part; stores for disjoint parts of the same split cover their union.
    pub fn merge(mut self, other: CounterStore) -> Result<CounterStore, CounterError> {
        if self.n != other.n || self.bound != other.bound || self.symmetry != other.symmetry {
            return Err(CounterError::Incompatible(format!(
                "(n={}, bound={}, symmetry={}) vs (n={}, bound={}, symmetry={})",
                self.n, self.bound, self.symmetry, other.n, other.bound, other.symmetry
            )));
        }
        if self.strategy != other.strategy || self.part_total != other.part_total {
            return Err(CounterError::Incompatible(format!(
                "split {} of {} vs {} of {}",
                self.strategy, self.part_total, other.strategy, other.part_total
            )));
        }
        if self.parts != other.parts {
            if self.parts.iter().any(|p| other.parts.contains(p)) {
                return Err(CounterError::Incompatible(format!(
                    "overlapping parts {:?} and {:?}",
                    self.parts, other.parts
                )));
            }
            self.parts.extend_from_slice(&other.parts);
            self.parts.sort_unstable();
        }
        let (mut big, small) = if self.records.len() >= other.records.len() {
            (self.records, other.records)
        } else {
            (other.records, self.records)
        };
        let mut overflow = self.overflow | other.overflow;
        for (k, r) in small {
            let slot = big.entry(k).or_insert(SubsetRecord {
                orbit_size: r.orbit_size,
                ..Default::default()
            });
            if slot.orbit_size != r.orbit_size {
                return Err(CounterError::OrbitMismatch(slot.orbit_size, r.orbit_size));
            }
            overflow |= slot.add(&r);
        }
        self.records = big;
        self.overflow = overflow;
        Ok(self)
    }

    /// Checks the divisibility identities every complete symmetric store
    /// satisfies: `orbit | zcount` and `orbit | zcount*pcount - |evec|^2`.
    pub fn check_symmetry_invariants(&self) -> Result<(), SubsetKey> {
        for (k, r) in &self.records {
            let o = r.orbit_size as u64;
            if !(GROUP_ORDER as u64).is_multiple_of(o)
                || r.zcount % o != 0
                || r.cross_term() % o as i128 != 0
                || r.pcount < r.zcount
            {
                return Err(*k);
            }
        }
        Ok(())
    }
}
