//! Points of the simple cubic lattice, their integer encoding and the
//! 48-element octahedral group acting on them.
//!
//! The group is stored in a fixed order: element `8 * p + s` is the `p`-th
//! axis permutation (permutations of `[0, 1, 2]` in lexicographic order)
//! combined with sign pattern `s`, where bit `i` of `s` negates output axis
//! `i`. Element 0 is the identity. Canonicalization breaks ties by this order,
//! so it is part of the on-disk contract.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Order of the full symmetry group of the cubic lattice.
pub const GROUP_ORDER: usize = 48;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("point {point} lies outside the cube of half-width {bound}")]
    OutOfBound { point: Point, bound: u32 },
    #[error("site key {key} is not below {limit} for bound {bound}")]
    KeyOutOfRange { key: u32, limit: u32, bound: u32 },
    #[error("cannot canonicalize an empty point set")]
    EmptySet,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Point {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0, y: 0, z: 0 };

    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Point { x, y, z }
    }

    pub fn coords(self) -> [i32; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_coords(c: [i32; 3]) -> Self {
        Point::new(c[0], c[1], c[2])
    }

    pub fn norm_sq(self) -> i64 {
        let [x, y, z] = self.coords().map(i64::from);
        x * x + y * y + z * z
    }

    /// Largest absolute coordinate.
    pub fn max_abs(self) -> u32 {
        self.x
            .unsigned_abs()
            .max(self.y.unsigned_abs())
            .max(self.z.unsigned_abs())
    }

    pub fn l1(self) -> u32 {
        self.x.unsigned_abs() + self.y.unsigned_abs() + self.z.unsigned_abs()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// Integer code of a point inside the cube `[-bound, bound]^3`.
///
/// Codes are ordered like points (x first, then y, then z), so sorting keys
/// sorts points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SiteKey(pub u32);

impl fmt::Display for SiteKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Number of keys for a given bound, `(2 * bound + 1)^3`.
pub fn key_space(bound: u32) -> u32 {
    let side = 2 * bound + 1;
    side * side * side
}

pub fn encode(p: Point, bound: u32) -> Result<SiteKey, LatticeError> {
    if p.max_abs() > bound {
        return Err(LatticeError::OutOfBound { point: p, bound });
    }
    let side = 2 * bound as i64 + 1;
    let b = bound as i64;
    let key = ((p.x as i64 + b) * side + (p.y as i64 + b)) * side + (p.z as i64 + b);
    Ok(SiteKey(key as u32))
}

pub fn decode(k: SiteKey, bound: u32) -> Result<Point, LatticeError> {
    let limit = key_space(bound);
    if k.0 >= limit {
        return Err(LatticeError::KeyOutOfRange {
            key: k.0,
            limit,
            bound,
        });
    }
    let side = 2 * bound + 1;
    let b = bound as i32;
    let z = (k.0 % side) as i32 - b;
    let y = ((k.0 / side) % side) as i32 - b;
    let x = (k.0 / (side * side)) as i32 - b;
    Ok(Point::new(x, y, z))
}

/// A signed permutation of the three axes: output axis `i` takes input axis
/// `perm[i]`, negated when bit `i` of `signs` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymOp {
    index: u8,
    perm: [u8; 3],
    signs: u8,
}

const PERMUTATIONS: [[u8; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

impl SymOp {
    pub const IDENTITY: SymOp = SymOp {
        index: 0,
        perm: [0, 1, 2],
        signs: 0,
    };

    /// Group element by position in the fixed order.
    pub fn from_index(index: usize) -> SymOp {
        assert!(index < GROUP_ORDER, "group index {index} out of range");
        SymOp {
            index: index as u8,
            perm: PERMUTATIONS[index / 8],
            signs: (index % 8) as u8,
        }
    }

    /// Looks up the element with the given permutation and sign pattern.
    pub fn from_parts(perm: [u8; 3], signs: [i8; 3]) -> Option<SymOp> {
        let p = PERMUTATIONS.iter().position(|q| *q == perm)?;
        let mut s = 0;
        for (i, &v) in signs.iter().enumerate() {
            match v {
                1 => {}
                -1 => s |= 1 << i,
                _ => return None,
            }
        }
        Some(SymOp::from_index(p * 8 + s))
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn perm(self) -> [u8; 3] {
        self.perm
    }

    pub fn signs(self) -> [i8; 3] {
        [0, 1, 2].map(|i| if self.signs >> i & 1 == 1 { -1 } else { 1 })
    }

    pub fn is_identity(self) -> bool {
        self.index == 0
    }

    #[inline]
    pub fn apply(self, p: Point) -> Point {
        let c = p.coords();
        let mut out = [0i32; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let v = c[self.perm[i] as usize];
            *o = if self.signs >> i & 1 == 1 { -v } else { v };
        }
        Point::from_coords(out)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(self, other: SymOp) -> SymOp {
        SymOp::from_index(tables().compose[self.index()][other.index()] as usize)
    }

    pub fn inverse(self) -> SymOp {
        SymOp::from_index(tables().inverse[self.index()] as usize)
    }
}

struct GroupTables {
    ops: [SymOp; GROUP_ORDER],
    compose: [[u8; GROUP_ORDER]; GROUP_ORDER],
    inverse: [u8; GROUP_ORDER],
}

fn tables() -> &'static GroupTables {
    static TABLES: OnceLock<GroupTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let ops: [SymOp; GROUP_ORDER] = std::array::from_fn(SymOp::from_index);
        // An element is determined by where it sends the three unit vectors.
        let probe = Point::new(1, 2, 3);
        let find = |img: Point| {
            ops.iter()
                .position(|g| g.apply(probe) == img)
                .expect("group is closed") as u8
        };
        let mut compose = [[0u8; GROUP_ORDER]; GROUP_ORDER];
        let mut inverse = [0u8; GROUP_ORDER];
        for (a, ga) in ops.iter().enumerate() {
            for (b, gb) in ops.iter().enumerate() {
                compose[a][b] = find(ga.apply(gb.apply(probe)));
                if compose[a][b] == 0 {
                    inverse[a] = b as u8;
                }
            }
        }
        GroupTables {
            ops,
            compose,
            inverse,
        }
    })
}

/// All 48 symmetries in the fixed order; index 0 is the identity.
pub fn octahedral_group() -> &'static [SymOp; GROUP_ORDER] {
    &tables().ops
}

/// Index of `a ∘ b` in the fixed order.
#[inline]
pub fn compose_index(a: usize, b: usize) -> usize {
    tables().compose[a][b] as usize
}

#[inline]
pub fn inverse_index(a: usize) -> usize {
    tables().inverse[a] as usize
}

/// Representative of a symmetry class of site subsets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalSubset {
    /// Strictly increasing keys of the representative.
    pub sites: Vec<SiteKey>,
    /// Number of distinct images of the subset under the group.
    pub orbit_size: u8,
}

impl CanonicalSubset {
    pub fn points(&self, bound: u32) -> Result<Vec<Point>, LatticeError> {
        self.sites.iter().map(|&k| decode(k, bound)).collect()
    }

    pub fn stabilizer_size(&self) -> usize {
        GROUP_ORDER / self.orbit_size as usize
    }
}

/// Picks the lexicographically smallest sorted image of `points` under the
/// group. Returns it with the first operation (in group order) producing it.
///
/// Duplicate input points are treated as one.
pub fn canonicalize(
    points: &[Point],
    bound: u32,
) -> Result<(CanonicalSubset, SymOp), LatticeError> {
    if points.is_empty() {
        return Err(LatticeError::EmptySet);
    }
    let mut original: Vec<Point> = points.to_vec();
    original.sort_unstable();
    original.dedup();
    for &p in &original {
        if p.max_abs() > bound {
            return Err(LatticeError::OutOfBound { point: p, bound });
        }
    }

    let mut best: Option<(Vec<Point>, SymOp)> = None;
    let mut stabilizer = 0usize;
    let mut image = Vec::with_capacity(original.len());
    for &g in octahedral_group() {
        image.clear();
        image.extend(original.iter().map(|&p| g.apply(p)));
        image.sort_unstable();
        if image == original {
            stabilizer += 1;
        }
        match &best {
            Some((b, _)) if *b <= image => {}
            _ => best = Some((image.clone(), g)),
        }
    }
    let (rep, op) = best.expect("group is nonempty");
    let sites = rep
        .iter()
        .map(|&p| encode(p, bound))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((
        CanonicalSubset {
            sites,
            orbit_size: (GROUP_ORDER / stabilizer) as u8,
        },
        op,
    ))
}
