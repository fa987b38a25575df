//! Bulk accumulation of subset counters.
//!
//! Produces exactly the store that [`CounterStore::accumulate_walk`] would
//! build over every walk of length `n`, but much faster:
//!
//! * with symmetry on, only one walk per symmetry class is generated and its
//!   contributions are weighted by the class size;
//! * for each walk the images of its sites under all 48 operations are
//!   tabulated once, and the smallest first element of every image of a
//!   subset is maintained incrementally over the `2^n` subsets, so only the
//!   few operations that tie on that element are compared in full.
//!
//! The end-point sum of a record is defined through the first operation (in
//! group order) that maps a subset onto its representative. When a class
//! representative `w` stands in for all images `g·w`, the operation chosen
//! for `g·S` is the first element of `M·g⁻¹`, where `M` is the set of
//! operations taking `S` to the representative, and it sends `g·w_N` to
//! `m·w_N` for the corresponding `m ∈ M`. Summing over all 48 `g` counts
//! every distinct image `48 / weight` times, hence the final division.

use std::collections::HashMap;

use crate::lattice::{compose_index, inverse_index, octahedral_group, Point, GROUP_ORDER};
use crate::walker::{Enumeration, Shard, Walk, WalkGenerator};

use super::key::{codec, SiteCodec, SubsetKey, MAX_SITES};
use super::{CounterError, CounterStore, SplitSpec, SplitStrategy, SubsetRecord};

/// Parameters for [`accumulate_all`].
#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    pub n: usize,
    /// Encoding bound, at least `n`.
    pub bound: u32,
    pub symmetry: bool,
    pub split: SplitSpec,
    /// Slice of the walk search handled by this call.
    pub shard: Shard,
    /// Generate every walk instead of one per symmetry class. Only affects
    /// speed; the resulting store is the same.
    pub full_walks: bool,
}

impl EngineConfig {
    pub fn new(n: usize, symmetry: bool) -> EngineConfig {
        EngineConfig {
            n,
            bound: n as u32,
            symmetry,
            split: SplitSpec::NONE,
            shard: Shard::ALL,
            full_walks: false,
        }
    }
}

/// Accumulates the counters of all walks of length `cfg.n` (restricted to
/// `cfg.shard`) into a fresh store.
pub fn accumulate_all(cfg: &EngineConfig) -> Result<CounterStore, CounterError> {
    let mut store = CounterStore::new(cfg.n, cfg.bound, cfg.symmetry, cfg.split)?;
    let mode = if cfg.symmetry && !cfg.full_walks {
        Enumeration::SymmetryClasses
    } else {
        Enumeration::Full
    };
    let mut scanner = Scanner::new(cfg, mode);
    let mut generator = WalkGenerator::new(cfg.n)?;
    let mut failure = None;
    generator.run(mode, cfg.shard, |w, weight| {
        if failure.is_none() {
            if let Err(e) = scanner.scan(w, weight, &mut store) {
                failure = Some(e);
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if store.overflowed() {
        return Err(CounterError::Overflow);
    }
    Ok(store)
}

struct Scanner {
    n: usize,
    symmetry: bool,
    mode: Enumeration,
    split: SplitSpec,
    codec: &'static SiteCodec,
    /// `images[i][g]`: site number + 1 of `g·w_{i+1}`.
    images: [[u16; GROUP_ORDER]; MAX_SITES],
    /// `order[g]`: walk positions sorted by `images[·][g]`.
    order: [[u8; MAX_SITES]; GROUP_ORDER],
    /// Per subset mask, the smallest image element under each operation.
    first: Vec<[u16; GROUP_ORDER]>,
    ends: [Point; GROUP_ORDER],
    /// Operation multiplicities for a tied set `M`, keyed by its bit mask.
    picks: HashMap<u64, [u8; GROUP_ORDER]>,
}

impl Scanner {
    fn new(cfg: &EngineConfig, mode: Enumeration) -> Scanner {
        let subsets = 1usize << cfg.n;
        Scanner {
            n: cfg.n,
            symmetry: cfg.symmetry,
            mode,
            split: cfg.split,
            codec: codec(cfg.bound),
            images: [[0; GROUP_ORDER]; MAX_SITES],
            order: [[0; MAX_SITES]; GROUP_ORDER],
            first: vec![[u16::MAX; GROUP_ORDER]; subsets],
            ends: [Point::ORIGIN; GROUP_ORDER],
            picks: HashMap::new(),
        }
    }

    fn scan(&mut self, w: &Walk, weight: u32, store: &mut CounterStore) -> Result<(), CounterError> {
        let n = self.n;
        let ops = if self.symmetry { GROUP_ORDER } else { 1 };
        let sites = &w.vertices()[1..];
        for (i, &p) in sites.iter().enumerate() {
            for (g, op) in octahedral_group()[..ops].iter().enumerate() {
                let r = self.codec.rank(op.apply(p)).expect("walk stays in the octahedron");
                self.images[i][g] = r + 1;
            }
        }
        for g in 0..ops {
            let row = &mut self.order[g];
            for (i, slot) in row[..n].iter_mut().enumerate() {
                *slot = i as u8;
            }
            let images = &self.images;
            row[..n].sort_unstable_by_key(|&i| images[i as usize][g]);
            self.ends[g] = octahedral_group()[g].apply(w.end());
        }

        let weight = weight as u64;
        let p2 = w.end().norm_sq() as u64 * weight;
        let size_filter = self.split.strategy == SplitStrategy::SubsetSize;
        let site_filter = self.split.strategy == SplitStrategy::MaxSite;

        for mask in 1usize..(1 << n) {
            let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
            if self.symmetry {
                let prev = mask ^ (1 << top);
                let (head, tail) = self.first.split_at_mut(mask);
                let cur = &mut tail[0];
                let before = &head[prev];
                let add = &self.images[top];
                for g in 0..GROUP_ORDER {
                    cur[g] = before[g].min(add[g]);
                }
            }
            let size = mask.count_ones() as usize;
            if size_filter && size % self.split.part_total != self.split.part_index {
                continue;
            }

            let (key, tied) = if self.symmetry {
                self.canonical(mask)
            } else {
                (self.pack(mask, 0), 1u64)
            };
            if site_filter {
                let last = self.codec.site_key(key.last_rank());
                if last.0 as usize % self.split.part_total != self.split.part_index {
                    continue;
                }
            }

            let orbit = if self.symmetry {
                (GROUP_ORDER as u32 / tied.count_ones()) as u8
            } else {
                1
            };
            let evec = if tied.count_ones() == 1 {
                let e = self.ends[tied.trailing_zeros() as usize];
                let wt = weight as i64;
                [e.x as i64 * wt, e.y as i64 * wt, e.z as i64 * wt]
            } else if self.mode == Enumeration::Full {
                let e = self.ends[tied.trailing_zeros() as usize];
                [e.x as i64, e.y as i64, e.z as i64]
            } else {
                self.folded_extension(tied, weight)?
            };
            store.add_record(
                key,
                SubsetRecord {
                    zcount: weight,
                    pcount: p2,
                    evec,
                    orbit_size: orbit,
                },
            )?;
        }
        Ok(())
    }

    /// Packs the image of subset `mask` under operation `g`.
    #[inline]
    fn pack(&self, mask: usize, g: usize) -> SubsetKey {
        let mut key = SubsetKey::EMPTY;
        let mut slot = 0;
        for &i in &self.order[g][..self.n] {
            if mask >> i & 1 == 1 {
                key = key.with_slot(slot, self.images[i as usize][g]);
                slot += 1;
            }
        }
        key
    }

    /// Smallest packed image of `mask` and the bit set of operations
    /// producing it.
    #[inline]
    fn canonical(&self, mask: usize) -> (SubsetKey, u64) {
        let first = &self.first[mask];
        let lowest = *first.iter().min().expect("nonempty");
        let mut candidates = 0u64;
        for (g, &v) in first.iter().enumerate() {
            candidates |= ((v == lowest) as u64) << g;
        }
        if candidates.count_ones() == 1 {
            return (self.pack(mask, candidates.trailing_zeros() as usize), candidates);
        }
        let mut best = SubsetKey(u128::MAX);
        let mut tied = 0u64;
        let mut rest = candidates;
        while rest != 0 {
            let g = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let k = self.pack(mask, g);
            if k < best {
                best = k;
                tied = 1 << g;
            } else if k == best {
                tied |= 1 << g;
            }
        }
        (best, tied)
    }

    /// End-point sum contributed by all images of the current walk for a
    /// subset whose representative is reached by every operation in `tied`.
    fn folded_extension(&mut self, tied: u64, weight: u64) -> Result<[i64; 3], CounterError> {
        let picks = self.picks.entry(tied).or_insert_with(|| {
            let mut counts = [0u8; GROUP_ORDER];
            for g in 0..GROUP_ORDER {
                let g_inv = inverse_index(g);
                let mut best = (usize::MAX, 0);
                let mut rest = tied;
                while rest != 0 {
                    let m = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    let chosen = compose_index(m, g_inv);
                    if chosen < best.0 {
                        best = (chosen, m);
                    }
                }
                counts[best.1] += 1;
            }
            counts
        });
        let mut sum = [0i64; 3];
        for (m, &c) in picks.iter().enumerate() {
            if c != 0 {
                let e = self.ends[m];
                sum[0] += c as i64 * e.x as i64;
                sum[1] += c as i64 * e.y as i64;
                sum[2] += c as i64 * e.z as i64;
            }
        }
        let mut out = [0i64; 3];
        for i in 0..3 {
            let scaled = sum[i] * weight as i64;
            if scaled % GROUP_ORDER as i64 != 0 {
                return Err(CounterError::Indivisible);
            }
            out[i] = scaled / GROUP_ORDER as i64;
        }
        Ok(out)
    }
}
