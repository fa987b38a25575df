//! Depth-first generation of self-avoiding walks rooted at the origin, and
//! the brute-force counts `Z_N` / `P_N` built on it.

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::Point;

/// Unit steps in generation order: +x, -x, +y, -y, +z, -z.
pub const STEPS: [Point; 6] = [
    Point::new(1, 0, 0),
    Point::new(-1, 0, 0),
    Point::new(0, 1, 0),
    Point::new(0, -1, 0),
    Point::new(0, 0, 1),
    Point::new(0, 0, -1),
];

/// Subtrees of the search are dealt to shards at this depth (or at the
/// full length for shorter walks).
const SHARD_DEPTH: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WalkError {
    #[error("walk length must be at least 1, got {0}")]
    InvalidLength(i64),
    #[error("walk must start at the origin")]
    NotRooted,
    #[error("vertices {0} and {1} are not lattice neighbours")]
    NotAdjacent(usize, usize),
    #[error("site {0} is visited twice")]
    SelfIntersecting(Point),
    #[error("step index {0} is not in 0..6")]
    BadStep(usize),
    #[error("shard {index} of {total} is invalid")]
    BadShard { index: usize, total: usize },
}

/// A self-avoiding walk `0 = w_0, w_1, ..., w_N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Walk {
    vertices: Vec<Point>,
}

impl Walk {
    /// Validates and wraps a vertex sequence.
    pub fn from_vertices(vertices: Vec<Point>) -> Result<Walk, WalkError> {
        if vertices.len() < 2 {
            return Err(WalkError::InvalidLength(vertices.len() as i64 - 1));
        }
        if vertices[0] != Point::ORIGIN {
            return Err(WalkError::NotRooted);
        }
        for i in 1..vertices.len() {
            if (vertices[i] - vertices[i - 1]).l1() != 1 {
                return Err(WalkError::NotAdjacent(i - 1, i));
            }
        }
        let mut seen = std::collections::HashSet::with_capacity(vertices.len());
        for &v in &vertices {
            if !seen.insert(v) {
                return Err(WalkError::SelfIntersecting(v));
            }
        }
        Ok(Walk { vertices })
    }

    /// Builds a walk from indices into [`STEPS`].
    pub fn from_steps(steps: &[usize]) -> Result<Walk, WalkError> {
        let mut v = Vec::with_capacity(steps.len() + 1);
        v.push(Point::ORIGIN);
        for &s in steps {
            let d = *STEPS.get(s).ok_or(WalkError::BadStep(s))?;
            v.push(*v.last().unwrap() + d);
        }
        Walk::from_vertices(v)
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().unwrap()
    }
}

pub fn end_to_end_sq(w: &Walk) -> i64 {
    w.end().norm_sq()
}

/// Which walks a generator emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enumeration {
    /// Every walk once, with weight 1.
    Full,
    /// One walk per orbit of the 48 lattice symmetries, weighted by the orbit
    /// size. The representative starts with +x, its first step off the x axis
    /// is +y and its first step off the xy plane is +z.
    SymmetryClasses,
}

/// Deals DFS subtrees round-robin over `total` shards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shard {
    pub index: usize,
    pub total: usize,
}

impl Shard {
    pub const ALL: Shard = Shard { index: 0, total: 1 };

    pub fn new(index: usize, total: usize) -> Result<Shard, WalkError> {
        if total == 0 || index >= total {
            return Err(WalkError::BadShard { index, total });
        }
        Ok(Shard { index, total })
    }
}

/// Backtracking generator with an occupancy grid over `[-n, n]^3`.
pub struct WalkGenerator {
    n: usize,
    side: usize,
    occupied: Vec<bool>,
    offsets: [isize; 6],
    walk: Walk,
}

impl WalkGenerator {
    pub fn new(n: usize) -> Result<WalkGenerator, WalkError> {
        if n == 0 {
            return Err(WalkError::InvalidLength(0));
        }
        let side = 2 * n + 1;
        let offsets = STEPS.map(|d| (d.x as isize * side as isize + d.y as isize) * side as isize + d.z as isize);
        let mut walk = Walk {
            vertices: Vec::with_capacity(n + 1),
        };
        walk.vertices.push(Point::ORIGIN);
        Ok(WalkGenerator {
            n,
            side,
            occupied: vec![false; side * side * side],
            offsets,
            walk,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Calls `visit(walk, weight)` for each emitted walk and returns the
    /// number of calls.
    pub fn run<F: FnMut(&Walk, u32)>(&mut self, mode: Enumeration, shard: Shard, mut visit: F) -> u64 {
        let centre = (self.n * self.side + self.n) * self.side + self.n;
        self.occupied[centre] = true;
        let mut search = Search {
            mode,
            shard,
            shard_depth: SHARD_DEPTH.min(self.n),
            subtree: 0,
            emitted: 0,
        };
        search.extend(self, centre, 0, Span::Line, &mut visit);
        self.occupied[centre] = false;
        search.emitted
    }
}

/// How much of space the symmetry-class representative has used so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Span {
    Line,
    Plane,
    Space,
}

impl Span {
    fn weight(self) -> u32 {
        match self {
            Span::Line => 6,
            Span::Plane => 24,
            Span::Space => 48,
        }
    }
}

struct Search {
    mode: Enumeration,
    shard: Shard,
    shard_depth: usize,
    subtree: usize,
    emitted: u64,
}

impl Search {
    fn extend<F: FnMut(&Walk, u32)>(
        &mut self,
        g: &mut WalkGenerator,
        site: usize,
        depth: usize,
        plane: Span,
        visit: &mut F,
    ) {
        if depth == self.shard_depth {
            let mine = self.subtree % self.shard.total == self.shard.index;
            self.subtree += 1;
            if !mine {
                return;
            }
        }
        if depth == g.n {
            self.emitted += 1;
            let weight = match self.mode {
                Enumeration::Full => 1,
                Enumeration::SymmetryClasses => plane.weight(),
            };
            visit(&g.walk, weight);
            return;
        }
        let here = *g.walk.vertices.last().unwrap();
        let offsets = g.offsets;
        for (s, &off) in offsets.iter().enumerate() {
            let next_plane = match self.mode {
                Enumeration::Full => plane,
                Enumeration::SymmetryClasses => match (plane, s) {
                    (_, _) if depth == 0 && s != 0 => continue,
                    (Span::Line, 0 | 1) => Span::Line,
                    (Span::Line, 2) => Span::Plane,
                    (Span::Line, _) => continue,
                    (Span::Plane, 0..=3) => Span::Plane,
                    (Span::Plane, 4) => Span::Space,
                    (Span::Plane, _) => continue,
                    (Span::Space, _) => Span::Space,
                },
            };
            let next = (site as isize + off) as usize;
            if g.occupied[next] {
                continue;
            }
            g.occupied[next] = true;
            g.walk.vertices.push(here + STEPS[s]);
            self.extend(g, next, depth + 1, next_plane, visit);
            g.walk.vertices.pop();
            g.occupied[next] = false;
        }
    }
}

/// Calls `visit` once per SAW of length `n`; returns `Z_n`.
pub fn enumerate_walks<F: FnMut(&Walk)>(n: usize, mut visit: F) -> Result<u64, WalkError> {
    let mut g = WalkGenerator::new(n)?;
    Ok(g.run(Enumeration::Full, Shard::ALL, |w, _| visit(w)))
}

/// Exact `Z_n`, `P_n` and the summed end point of all walks of length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectResult {
    pub n: usize,
    #[serde(serialize_with = "crate::series::ser_decimal")]
    pub z: BigInt,
    #[serde(serialize_with = "crate::series::ser_decimal")]
    pub p: BigInt,
    /// Sum of `w_N` over all walks; zero by the `w -> -w` symmetry.
    pub extension: [i64; 3],
}

pub fn direct_count(n: usize) -> Result<DirectResult, WalkError> {
    direct_count_with_workers(n, 1)
}

/// [`direct_count`] split over `workers` threads by walk prefix.
pub fn direct_count_with_workers(n: usize, workers: usize) -> Result<DirectResult, WalkError> {
    if n == 0 {
        return Err(WalkError::InvalidLength(0));
    }
    let workers = workers.max(1);
    let partials: Vec<(u128, u128, [i64; 3])> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|i| {
                scope.spawn(move || {
                    let mut g = WalkGenerator::new(n).expect("n >= 1");
                    let (mut z, mut p, mut e) = (0u128, 0u128, [0i64; 3]);
                    g.run(Enumeration::Full, Shard { index: i, total: workers }, |w, _| {
                        let end = w.end();
                        z += 1;
                        p += end.norm_sq() as u128;
                        e[0] += end.x as i64;
                        e[1] += end.y as i64;
                        e[2] += end.z as i64;
                    });
                    (z, p, e)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut z = 0u128;
    let mut p = 0u128;
    let mut extension = [0i64; 3];
    for (pz, pp, pe) in partials {
        z += pz;
        p += pp;
        for i in 0..3 {
            extension[i] += pe[i];
        }
    }
    Ok(DirectResult {
        n,
        z: z.into(),
        p: p.into(),
        extension,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn small_counts_match_known_values() {
        assert_eq!(enumerate_walks(1, |_| {}).unwrap(), 6);
        assert_eq!(enumerate_walks(2, |_| {}).unwrap(), 30);
        assert_eq!(enumerate_walks(4, |_| {}).unwrap(), 726);
        let r = direct_count(3).unwrap();
        assert_eq!((r.z, r.p), (150.into(), 582.into()));
        let r = direct_count(1).unwrap();
        assert_eq!((r.z, r.p), (6.into(), 6.into()));
    }

    #[test]
    fn zero_length_is_rejected() {
        assert_eq!(direct_count(0), Err(WalkError::InvalidLength(0)));
        assert!(enumerate_walks(0, |_| {}).is_err());
    }

    #[test]
    fn every_visited_walk_is_valid_and_distinct() {
        let mut seen = HashSet::new();
        enumerate_walks(5, |w| {
            let checked = Walk::from_vertices(w.vertices().to_vec()).unwrap();
            assert_eq!(checked.len(), 5);
            assert!(seen.insert(checked));
        })
        .unwrap();
        assert_eq!(seen.len(), 3534);
    }

    #[test]
    fn end_to_end_examples() {
        assert_eq!(end_to_end_sq(&Walk::from_steps(&[0, 0, 0]).unwrap()), 9);
        assert_eq!(end_to_end_sq(&Walk::from_steps(&[0, 2]).unwrap()), 2);
        for s in 0..6 {
            assert_eq!(end_to_end_sq(&Walk::from_steps(&[s]).unwrap()), 1);
        }
    }

    #[test]
    fn invalid_walks_are_rejected() {
        assert_eq!(Walk::from_steps(&[0, 1]), Err(WalkError::SelfIntersecting(Point::ORIGIN)));
        assert_eq!(Walk::from_steps(&[7]), Err(WalkError::BadStep(7)));
        assert_eq!(
            Walk::from_vertices(vec![Point::ORIGIN, Point::new(1, 1, 0)]),
            Err(WalkError::NotAdjacent(0, 1))
        );
        assert_eq!(
            Walk::from_vertices(vec![Point::new(1, 0, 0), Point::new(2, 0, 0)]),
            Err(WalkError::NotRooted)
        );
    }

    #[test]
    fn counts_are_multiples_of_six_and_increase() {
        let mut prev = BigInt::from(1);
        for n in 1..=7 {
            let r = direct_count(n).unwrap();
            assert_eq!(&r.z % 6, 0.into());
            assert_eq!(&r.p % 6, 0.into());
            assert_eq!(r.extension, [0, 0, 0]);
            assert!(r.z > prev);
            prev = r.z;
        }
    }

    #[test]
    fn shards_partition_the_walks() {
        for n in [1, 3, 6] {
            let total = direct_count(n).unwrap();
            for workers in [2, 3, 8] {
                assert_eq!(direct_count_with_workers(n, workers).unwrap(), total);
            }
        }
    }

    #[test]
    fn symmetry_classes_reweight_to_full_counts() {
        for n in 1..=7 {
            let full = direct_count(n).unwrap();
            let mut g = WalkGenerator::new(n).unwrap();
            let (mut z, mut p) = (0u64, 0u64);
            let mut classes = 0;
            g.run(Enumeration::SymmetryClasses, Shard::ALL, |w, weight| {
                classes += 1;
                z += weight as u64;
                p += weight as u64 * end_to_end_sq(w) as u64;
            });
            assert_eq!(BigInt::from(z), full.z);
            assert_eq!(BigInt::from(p), full.p);
            assert!(classes * 48 >= z);
        }
    }

    #[test]
    fn symmetry_classes_hit_every_orbit_once() {
        use crate::lattice::octahedral_group;
        let n = 5;
        let mut reps = HashSet::new();
        let mut g = WalkGenerator::new(n).unwrap();
        g.run(Enumeration::SymmetryClasses, Shard::ALL, |w, weight| {
            let orbit: HashSet<Vec<Point>> = octahedral_group()
                .iter()
                .map(|op| w.vertices().iter().map(|&p| op.apply(p)).collect())
                .collect();
            assert_eq!(orbit.len(), weight as usize);
            reps.insert(w.vertices().to_vec());
        });
        let mut covered = HashSet::new();
        enumerate_walks(n, |w| {
            let hits = octahedral_group()
                .iter()
                .filter(|op| {
                    let img: Vec<_> = w.vertices().iter().map(|&p| op.apply(p)).collect();
                    reps.contains(&img)
                })
                .count();
            assert!(hits >= 1);
            covered.insert(w.vertices().to_vec());
        })
        .unwrap();
        assert_eq!(covered.len(), 3534);
    }
}
