//! Hypercube combinatorics on bitmask vertices.
//!
//! A vertex of `Q_d` is a `d`-bit mask. An edge is identified canonically by
//! the endpoint whose `dir` bit is clear together with `dir`, which makes the
//! square and path enumerations plain bit arithmetic.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: u32 = 30;

/// Hypercube dimension, `1 <= d <= 30`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dim(u32);

impl Dim {
    pub fn new(d: u32) -> Result<Self> {
        if (1..=MAX_DIM).contains(&d) {
            Ok(Dim(d))
        } else {
            Err(Error::InvalidDimension(d))
        }
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn vertex_count(self) -> u64 {
        1u64 << self.0
    }

    #[inline]
    pub fn edge_count(self) -> u64 {
        u64::from(self.0) << (self.0 - 1)
    }

    /// Number of `Q_2` copies, `C(d,2) * 2^(d-2)`.
    pub fn square_count(self) -> u64 {
        let d = u64::from(self.0);
        if d < 2 {
            0
        } else {
            d * (d - 1) / 2 * (1u64 << (d - 2))
        }
    }

    /// `d^(2/3) * 2^d`, the natural time scale of the process.
    pub fn time_scale(self) -> f64 {
        f64::from(self.0).powf(2.0 / 3.0) * (self.vertex_count() as f64)
    }
}

impl TryFrom<u32> for Dim {
    type Error = Error;

    fn try_from(d: u32) -> Result<Self> {
        Dim::new(d)
    }
}

impl From<Dim> for u32 {
    fn from(d: Dim) -> u32 {
        d.0
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn flip(self, dir: u32) -> VertexId {
        VertexId(self.0 ^ (1 << dir))
    }

    pub fn is_valid(self, d: Dim) -> bool {
        u64::from(self.0) < d.vertex_count()
    }

    /// Direction of the edge `self`-`other`, if the two are adjacent.
    pub fn direction_to(self, other: VertexId) -> Option<u32> {
        let diff = self.0 ^ other.0;
        diff.is_power_of_two().then(|| diff.trailing_zeros())
    }
}

/// Canonical edge: `base` has bit `dir` clear; endpoints are `base` and
/// `base ^ (1 << dir)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRef {
    pub base: u32,
    pub dir: u32,
}

impl EdgeRef {
    /// Builds the canonical edge through `v` in direction `dir`.
    #[inline]
    pub fn at(v: VertexId, dir: u32) -> EdgeRef {
        EdgeRef {
            base: v.0 & !(1 << dir),
            dir,
        }
    }

    /// Edge joining two adjacent vertices.
    pub fn between(u: VertexId, v: VertexId) -> Result<EdgeRef> {
        u.direction_to(v)
            .map(|dir| EdgeRef::at(u, dir))
            .ok_or(Error::NotAdjacent(u.0, v.0))
    }

    #[inline]
    pub fn endpoints(self) -> (VertexId, VertexId) {
        (VertexId(self.base), VertexId(self.base | (1 << self.dir)))
    }

    pub fn validate(self, d: Dim) -> Result<()> {
        if self.dir >= d.get() || u64::from(self.base) >= d.vertex_count() {
            return Err(Error::DimensionMismatch {
                base: self.base,
                dir: self.dir,
                d: d.get(),
            });
        }
        if self.base & (1 << self.dir) != 0 {
            return Err(Error::NonCanonicalEdge {
                base: self.base,
                dir: self.dir,
            });
        }
        Ok(())
    }
}

/// Dense index of an edge in `0..d * 2^(d-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeIndex(pub u64);

impl EdgeIndex {
    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

// Drop bit `dir` from `base`, shifting the higher bits down.
#[inline]
fn squeeze(base: u32, dir: u32) -> u64 {
    let low = base & ((1 << dir) - 1);
    let high = base >> (dir + 1);
    u64::from(low | (high << dir))
}

#[inline]
fn unsqueeze(packed: u64, dir: u32) -> u32 {
    let packed = packed as u32;
    let low = packed & ((1 << dir) - 1);
    let high = packed >> dir;
    low | (high << (dir + 1))
}

/// Index of a canonical edge: `dir * 2^(d-1)` plus `base` with bit `dir` removed.
pub fn edge_index(e: EdgeRef, d: Dim) -> Result<EdgeIndex> {
    e.validate(d)?;
    Ok(edge_index_unchecked(e, d))
}

#[inline]
pub(crate) fn edge_index_unchecked(e: EdgeRef, d: Dim) -> EdgeIndex {
    EdgeIndex((u64::from(e.dir) << (d.get() - 1)) | squeeze(e.base, e.dir))
}

pub fn edge_from_index(idx: EdgeIndex, d: Dim) -> Result<EdgeRef> {
    if idx.0 >= d.edge_count() {
        return Err(Error::IndexOutOfRange {
            idx: idx.0,
            d: d.get(),
        });
    }
    Ok(edge_from_index_unchecked(idx, d))
}

#[inline]
pub(crate) fn edge_from_index_unchecked(idx: EdgeIndex, d: Dim) -> EdgeRef {
    let half = d.get() - 1;
    let dir = (idx.0 >> half) as u32;
    let packed = idx.0 & ((1u64 << half) - 1);
    EdgeRef {
        base: unsqueeze(packed, dir),
        dir,
    }
}

/// All edges in index order.
pub fn all_edges(d: Dim) -> impl Iterator<Item = EdgeRef> {
    (0..d.edge_count()).map(move |i| edge_from_index_unchecked(EdgeIndex(i), d))
}

/// One copy of `Q_2`: the 4-cycle spanned by directions `a < b` at `base`
/// (bits `a` and `b` of `base` clear).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Square {
    pub base: u32,
    pub a: u32,
    pub b: u32,
}

impl Square {
    /// Square spanned at vertex `v` by two distinct directions.
    pub fn spanned(v: VertexId, i: u32, j: u32) -> Square {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        Square {
            base: v.0 & !(1 << a) & !(1 << b),
            a,
            b,
        }
    }

    pub fn edges(self) -> [EdgeRef; 4] {
        let (ba, bb) = (1 << self.a, 1 << self.b);
        [
            EdgeRef { base: self.base, dir: self.a },
            EdgeRef { base: self.base | bb, dir: self.a },
            EdgeRef { base: self.base, dir: self.b },
            EdgeRef { base: self.base | ba, dir: self.b },
        ]
    }

    pub fn vertices(self) -> [VertexId; 4] {
        let (ba, bb) = (1 << self.a, 1 << self.b);
        [
            VertexId(self.base),
            VertexId(self.base | ba),
            VertexId(self.base | bb),
            VertexId(self.base | ba | bb),
        ]
    }

    pub fn contains(self, e: EdgeRef) -> bool {
        self.edges().contains(&e)
    }
}

/// The three edges other than `e` of the square through `e` in direction `j`,
/// in path order: side at `base`, the opposite edge, side at the far endpoint.
#[inline]
pub(crate) fn square_partners(e: EdgeRef, j: u32) -> [EdgeRef; 3] {
    let bj = 1 << j;
    let far = e.base | (1 << e.dir);
    [
        EdgeRef { base: e.base & !bj, dir: j },
        EdgeRef { base: e.base ^ bj, dir: e.dir },
        EdgeRef { base: far & !bj, dir: j },
    ]
}

/// The `d - 1` squares containing `e`, one per direction other than `e.dir`.
pub fn squares_through(e: EdgeRef, d: Dim) -> Vec<Square> {
    let v = VertexId(e.base);
    (0..d.get())
        .filter(|&j| j != e.dir)
        .map(|j| Square::spanned(v, e.dir, j))
        .collect()
}

/// A path `u -> u^j -> u^j^i -> v` of three hypercube edges.
pub type Path3 = [EdgeRef; 3];

/// All length-3 paths joining adjacent `u` and `v` that avoid the edge `uv`,
/// one per direction `j` different from the direction of `uv`, in increasing `j`.
pub fn paths3(u: VertexId, v: VertexId, d: Dim) -> Result<Vec<Path3>> {
    let i = u.direction_to(v).ok_or(Error::NotAdjacent(u.0, v.0))?;
    if !u.is_valid(d) || !v.is_valid(d) {
        return Err(Error::NotAdjacent(u.0, v.0));
    }
    Ok((0..d.get())
        .filter(|&j| j != i)
        .map(|j| {
            let a = u.flip(j);
            let b = a.flip(i);
            [EdgeRef::at(u, j), EdgeRef::at(a, i), EdgeRef::at(b, j)]
        })
        .collect())
}

/// An axis-aligned copy of `Q_k`: a set of free directions (bitmask) and a
/// base vertex whose free-direction bits are clear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subcube {
    pub dirs: u32,
    pub base: u32,
}

impl Subcube {
    pub fn dim(self) -> u32 {
        self.dirs.count_ones()
    }

    /// The `k * 2^(k-1)` edges of the subcube.
    pub fn edges(self) -> impl Iterator<Item = EdgeRef> {
        let dirs = self.dirs;
        let base = self.base;
        let k = dirs.count_ones();
        let free: Vec<u32> = (0..32).filter(|b| dirs & (1 << b) != 0).collect();
        free.clone().into_iter().flat_map(move |dir| {
            let others: Vec<u32> = free.iter().copied().filter(|&b| b != dir).collect();
            (0..1u32 << (k - 1)).map(move |assign| EdgeRef {
                base: base | deposit(assign, &others),
                dir,
            })
        })
    }
}

// Scatter the low bits of `value` onto the bit positions in `positions`.
fn deposit(value: u32, positions: &[u32]) -> u32 {
    positions
        .iter()
        .enumerate()
        .filter(|(i, _)| value & (1 << i) != 0)
        .fold(0, |acc, (_, &p)| acc | (1 << p))
}

/// Every axis-aligned `Q_k` in `Q_d`: direction subsets in lexicographic
/// order, then base assignments in increasing order. Yields nothing if `k > d`.
pub fn subcubes(k: u32, d: Dim) -> impl Iterator<Item = Subcube> {
    let n = d.get();
    let per_subset = if k <= n { 1u64 << (n - k) } else { 0 };
    (0..n)
        .combinations(k.min(n) as usize)
        .filter(move |_| k <= n)
        .flat_map(move |chosen| {
            let dirs = chosen.iter().fold(0u32, |m, &b| m | (1 << b));
            let fixed: Vec<u32> = (0..n).filter(|b| dirs & (1 << b) == 0).collect();
            (0..per_subset).map(move |assign| Subcube {
                dirs,
                base: deposit(assign as u32, &fixed),
            })
        })
}

/// Every `Q_2` copy of `Q_d`, in subcube order.
pub fn all_squares(d: Dim) -> impl Iterator<Item = Square> {
    subcubes(2, d).map(|c| {
        let a = c.dirs.trailing_zeros();
        let b = 31 - c.dirs.leading_zeros();
        Square { base: c.base, a, b }
    })
}

/// `C(d,k) * 2^(d-k)`.
pub fn subcube_count(k: u32, d: Dim) -> u64 {
    let n = u64::from(d.get());
    let k = u64::from(k);
    if k > n {
        return 0;
    }
    let binom = (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1));
    binom << (n - k)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    fn dim(d: u32) -> Dim {
        Dim::new(d).unwrap()
    }

    #[test]
    fn dim_bounds() {
        assert!(Dim::new(0).is_err());
        assert!(Dim::new(31).is_err());
        assert_eq!(dim(3).edge_count(), 12);
        assert_eq!(dim(1).edge_count(), 1);
        assert_eq!(dim(30).edge_count(), 30 << 29);
    }

    #[test]
    fn index_bijection_small_dims() {
        for d in 1..=6 {
            let d = dim(d);
            let mut seen = vec![false; d.edge_count() as usize];
            for base in 0..d.vertex_count() as u32 {
                for dir in 0..d.get() {
                    if base & (1 << dir) != 0 {
                        continue;
                    }
                    let e = EdgeRef { base, dir };
                    let idx = edge_index(e, d).unwrap();
                    assert!(!seen[idx.get()]);
                    seen[idx.get()] = true;
                    assert_eq!(edge_from_index(idx, d).unwrap(), e);
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn single_edge_of_q1() {
        let e = EdgeRef { base: 0, dir: 0 };
        assert_eq!(edge_index(e, dim(1)).unwrap(), EdgeIndex(0));
    }

    #[test]
    fn index_errors() {
        let d = dim(3);
        assert!(matches!(
            edge_index(EdgeRef { base: 1, dir: 0 }, d),
            Err(Error::NonCanonicalEdge { .. })
        ));
        assert!(matches!(
            edge_index(EdgeRef { base: 0, dir: 3 }, d),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            edge_index(EdgeRef { base: 8, dir: 0 }, d),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(edge_from_index(EdgeIndex(12), d).is_err());
    }

    #[test]
    fn squares_through_counts() {
        let d3 = dim(3);
        for e in all_edges(d3) {
            assert_eq!(squares_through(e, d3).len(), 2);
        }
        let d2 = dim(2);
        let sq = squares_through(EdgeRef { base: 0, dir: 1 }, d2);
        assert_eq!(sq.len(), 1);
        let whole: HashSet<_> = sq[0].edges().into_iter().collect();
        assert_eq!(whole, all_edges(d2).collect());
        assert!(squares_through(EdgeRef { base: 0, dir: 0 }, dim(1)).is_empty());
    }

    #[test]
    fn squares_through_partners_distinct_d4() {
        let d = dim(4);
        for e in all_edges(d) {
            let others: HashSet<EdgeRef> = squares_through(e, d)
                .into_iter()
                .flat_map(|s| s.edges())
                .filter(|&f| f != e)
                .collect();
            assert_eq!(others.len(), 9);
        }
    }

    #[test]
    fn square_incidence_total() {
        for d in 2..=7 {
            let d = dim(d);
            let total: u64 = all_edges(d).map(|e| squares_through(e, d).len() as u64).sum();
            assert_eq!(total, 4 * d.square_count());
        }
    }

    /// Walk oracle: every 3-step walk from u to v that never reuses a vertex.
    fn walk_oracle(u: u32, v: u32, d: u32) -> Vec<[u32; 4]> {
        let mut out = Vec::new();
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let p1 = u ^ (1 << a);
                    let p2 = p1 ^ (1 << b);
                    let p3 = p2 ^ (1 << c);
                    let walk = [u, p1, p2, p3];
                    let distinct = walk.iter().collect::<HashSet<_>>().len() == 4;
                    if p3 == v && distinct {
                        out.push(walk);
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn paths3_matches_walk_enumeration() {
        let d = dim(3);
        let paths = paths3(VertexId(0b000), VertexId(0b001), d).unwrap();
        let as_vertices: Vec<[u32; 4]> = paths
            .iter()
            .map(|p| {
                let (u, a) = p[0].endpoints();
                let start = 0b000;
                let s1 = if u.0 == start { a.0 } else { u.0 };
                let (x, y) = p[1].endpoints();
                let s2 = if x.0 == s1 { y.0 } else { x.0 };
                [start, s1, s2, 0b001]
            })
            .collect();
        assert_eq!(as_vertices, vec![[0, 0b010, 0b011, 0b001], [0, 0b100, 0b101, 0b001]]);
        for d in 2..=5 {
            let dd = dim(d);
            for u in 0..dd.vertex_count() as u32 {
                for i in 0..d {
                    let v = u ^ (1 << i);
                    assert_eq!(paths3(VertexId(u), VertexId(v), dd).unwrap().len(), walk_oracle(u, v, d).len());
                }
            }
        }
    }

    #[test]
    fn paths3_close_squares_through_edge() {
        let d = dim(5);
        for e in all_edges(d) {
            let (u, v) = e.endpoints();
            let paths = paths3(u, v, d).unwrap();
            let mut from_paths: Vec<Vec<EdgeRef>> = paths
                .iter()
                .map(|p| {
                    let mut s: Vec<EdgeRef> = p.iter().copied().chain([e]).collect();
                    s.sort();
                    s
                })
                .collect();
            let mut from_squares: Vec<Vec<EdgeRef>> = squares_through(e, d)
                .iter()
                .map(|s| {
                    let mut v = s.edges().to_vec();
                    v.sort();
                    v
                })
                .collect();
            from_paths.sort();
            from_squares.sort();
            assert_eq!(from_paths, from_squares);
            let flat: HashSet<EdgeRef> = paths.iter().flatten().copied().collect();
            assert_eq!(flat.len(), 3 * (d.get() as usize - 1));
        }
    }

    #[test]
    fn paths3_rejects_non_adjacent() {
        assert!(paths3(VertexId(0), VertexId(3), dim(3)).is_err());
        assert!(paths3(VertexId(0), VertexId(0), dim(3)).is_err());
    }

    #[test]
    fn square_shape() {
        let s = Square::spanned(VertexId(0b1011), 1, 3);
        let edges: HashSet<_> = s.edges().into_iter().collect();
        let verts: HashSet<_> = s.vertices().into_iter().collect();
        assert_eq!(edges.len(), 4);
        assert_eq!(verts.len(), 4);
        let dirs: HashSet<_> = s.edges().iter().map(|e| e.dir).collect();
        assert_eq!(dirs, HashSet::from([1, 3]));
    }

    #[test]
    fn subcube_counts() {
        assert_eq!(subcubes(2, dim(3)).count(), 6);
        assert_eq!(subcubes(3, dim(3)).count(), 1);
        assert_eq!(subcubes(2, dim(4)).count(), 24);
        assert_eq!(subcubes(0, dim(3)).count(), 8);
        assert_eq!(subcubes(4, dim(3)).count(), 0);
        for d in 1..=6 {
            for k in 0..=d {
                assert_eq!(subcubes(k, dim(d)).count() as u64, subcube_count(k, dim(d)));
            }
        }
    }

    #[test]
    fn subcube_edges_and_order() {
        let d = dim(4);
        let cubes: Vec<Subcube> = subcubes(2, d).collect();
        assert_eq!(cubes[0], Subcube { dirs: 0b0011, base: 0 });
        assert_eq!(cubes[1], Subcube { dirs: 0b0011, base: 0b0100 });
        assert_eq!(cubes[4], Subcube { dirs: 0b0101, base: 0 });
        for c in &cubes {
            let edges: HashSet<EdgeRef> = c.edges().collect();
            assert_eq!(edges.len(), 4);
            for e in &edges {
                e.validate(d).unwrap();
                assert_eq!(e.base & !c.dirs & !(1 << e.dir), c.base);
            }
        }
        let whole: HashSet<EdgeRef> = subcubes(4, d).next().unwrap().edges().collect();
        assert_eq!(whole.len() as u64, d.edge_count());
    }
}
