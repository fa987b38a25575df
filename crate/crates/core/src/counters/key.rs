//! Compact site numbering and packed subset keys.
//!
//! Every site a walk of length `n` can reach lies in the octahedron
//! `|x| + |y| + |z| <= n`. Those sites are numbered in the same order as
//! their [`SiteKey`]s, so a sorted subset of site numbers sorts exactly like
//! the corresponding keys. Up to [`MAX_SITES`] numbers are packed into a
//! `u128`, first element in the most significant slot, so that comparing
//! packed keys compares subsets lexicographically.

use std::sync::OnceLock;

use crate::lattice::{encode, Point, SiteKey};

const SLOT_BITS: u32 = 11;
const SLOT_MASK: u128 = (1 << SLOT_BITS) - 1;

/// Longest subset (and largest bound) a packed key can hold.
pub const MAX_SITES: usize = 11;

/// A sorted subset of sites packed into one integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SubsetKey(pub(crate) u128);

impl SubsetKey {
    pub const EMPTY: SubsetKey = SubsetKey(0);

    #[inline]
    pub(crate) fn shift(slot: usize) -> u32 {
        128 - SLOT_BITS * (slot as u32 + 1)
    }

    /// Appends a site number (already offset by one) at position `slot`.
    #[inline]
    pub(crate) fn with_slot(self, slot: usize, value: u16) -> SubsetKey {
        SubsetKey(self.0 | (value as u128) << Self::shift(slot))
    }

    pub fn len(self) -> usize {
        (0..MAX_SITES)
            .take_while(|&s| (self.0 >> Self::shift(s)) & SLOT_MASK != 0)
            .count()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Site numbers in increasing order.
    pub fn ranks(self) -> impl Iterator<Item = u16> {
        (0..MAX_SITES)
            .map(move |s| ((self.0 >> Self::shift(s)) & SLOT_MASK) as u16)
            .take_while(|&v| v != 0)
            .map(|v| v - 1)
    }

    /// Last (largest) site number.
    #[inline]
    pub(crate) fn last_rank(self) -> u16 {
        let mut last = 0;
        for s in 0..MAX_SITES {
            let v = ((self.0 >> Self::shift(s)) & SLOT_MASK) as u16;
            if v == 0 {
                break;
            }
            last = v;
        }
        last - 1
    }

    pub fn to_bits(self) -> u128 {
        self.0
    }
}

/// Site numbering for one bound.
#[derive(Debug)]
pub struct SiteCodec {
    bound: u32,
    side: usize,
    /// Cube index -> site number, `u16::MAX` outside the octahedron.
    rank_of: Vec<u16>,
    points: Vec<Point>,
    keys: Vec<SiteKey>,
}

impl SiteCodec {
    fn build(bound: u32) -> SiteCodec {
        let b = bound as i32;
        let side = 2 * bound as usize + 1;
        let mut rank_of = vec![u16::MAX; side * side * side];
        let mut points = Vec::new();
        let mut keys = Vec::new();
        for x in -b..=b {
            for y in -b..=b {
                for z in -b..=b {
                    let p = Point::new(x, y, z);
                    if p.l1() <= bound {
                        let k = encode(p, bound).expect("inside cube");
                        rank_of[k.0 as usize] = points.len() as u16;
                        points.push(p);
                        keys.push(k);
                    }
                }
            }
        }
        debug_assert!(points.len() < (1 << SLOT_BITS));
        SiteCodec {
            bound,
            side,
            rank_of,
            points,
            keys,
        }
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn site_count(&self) -> usize {
        self.points.len()
    }

    /// Site number of `p`, if it is within the octahedron.
    #[inline]
    pub fn rank(&self, p: Point) -> Option<u16> {
        if p.max_abs() > self.bound {
            return None;
        }
        let b = self.bound as i64;
        let side = self.side as i64;
        let idx = ((p.x as i64 + b) * side + (p.y as i64 + b)) * side + (p.z as i64 + b);
        match self.rank_of[idx as usize] {
            u16::MAX => None,
            r => Some(r),
        }
    }

    pub fn point(&self, rank: u16) -> Point {
        self.points[rank as usize]
    }

    pub fn site_key(&self, rank: u16) -> SiteKey {
        self.keys[rank as usize]
    }

    pub fn rank_of_key(&self, key: SiteKey) -> Option<u16> {
        match self.rank_of.get(key.0 as usize) {
            Some(&r) if r != u16::MAX => Some(r),
            _ => None,
        }
    }

    /// Packs strictly increasing site keys.
    pub fn pack(&self, sites: &[SiteKey]) -> Option<SubsetKey> {
        if sites.is_empty() || sites.len() > MAX_SITES || sites.windows(2).any(|w| w[0] >= w[1]) {
            return None;
        }
        let mut key = SubsetKey::EMPTY;
        for (slot, &k) in sites.iter().enumerate() {
            key = key.with_slot(slot, self.rank_of_key(k)? + 1);
        }
        Some(key)
    }

    pub fn unpack(&self, key: SubsetKey) -> Vec<SiteKey> {
        key.ranks().map(|r| self.site_key(r)).collect()
    }

    pub fn unpack_points(&self, key: SubsetKey) -> Vec<Point> {
        key.ranks().map(|r| self.point(r)).collect()
    }
}

/// Shared codec for `bound` (at most [`MAX_SITES`]).
pub fn codec(bound: u32) -> &'static SiteCodec {
    static CODECS: [OnceLock<SiteCodec>; MAX_SITES + 1] = [const { OnceLock::new() }; MAX_SITES + 1];
    assert!(
        (1..=MAX_SITES as u32).contains(&bound),
        "codec bound {bound} outside 1..={MAX_SITES}"
    );
    CODECS[bound as usize].get_or_init(|| SiteCodec::build(bound))
}
