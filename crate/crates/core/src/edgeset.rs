use crate::cube::{edge_index_unchecked, Dim, EdgeIndex, EdgeRef};

/// Set of hypercube edges stored as a bitset over [`EdgeIndex`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    d: Dim,
    words: Vec<u64>,
}

impl EdgeSet {
    pub fn empty(d: Dim) -> Self {
        let n = d.edge_count() as usize;
        EdgeSet {
            d,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(d: Dim) -> Self {
        let mut s = Self::empty(d);
        for i in 0..d.edge_count() {
            s.insert_index(EdgeIndex(i));
        }
        s
    }

    /// Edge set from the low bits of a mask (bit `i` = edge index `i`).
    pub fn from_mask(d: Dim, mask: u64) -> Self {
        let mut s = Self::empty(d);
        for i in 0..d.edge_count().min(64) {
            if mask & (1 << i) != 0 {
                s.insert_index(EdgeIndex(i));
            }
        }
        s
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    #[inline]
    pub fn contains_index(&self, idx: EdgeIndex) -> bool {
        let i = idx.get();
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    #[inline]
    pub fn contains(&self, e: EdgeRef) -> bool {
        self.contains_index(edge_index_unchecked(e, self.d))
    }

    #[inline]
    pub fn insert_index(&mut self, idx: EdgeIndex) -> bool {
        let i = idx.get();
        let had = self.contains_index(idx);
        self.words[i / 64] |= 1 << (i % 64);
        !had
    }

    pub fn insert(&mut self, e: EdgeRef) -> bool {
        self.insert_index(edge_index_unchecked(e, self.d))
    }

    pub fn remove(&mut self, e: EdgeRef) -> bool {
        let i = edge_index_unchecked(e, self.d).get();
        let had = self.words[i / 64] & (1 << (i % 64)) != 0;
        self.words[i / 64] &= !(1 << (i % 64));
        had
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn indices(&self) -> impl Iterator<Item = EdgeIndex> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as u64;
                bits &= bits - 1;
                Some(EdgeIndex(wi as u64 * 64 + b))
            })
        })
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.d == other.d && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Degree of every vertex, indexed by vertex mask.
    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.d.vertex_count() as usize];
        for idx in self.indices() {
            let (u, v) = crate::cube::edge_from_index_unchecked(idx, self.d).endpoints();
            deg[u.0 as usize] += 1;
            deg[v.0 as usize] += 1;
        }
        deg
    }
}

impl Extend<EdgeRef> for EdgeSet {
    fn extend<I: IntoIterator<Item = EdgeRef>>(&mut self, iter: I) {
        for e in iter {
            self.insert(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::all_edges;

    #[test]
    fn insert_remove_len() {
        let d = Dim::new(4).unwrap();
        let mut s = EdgeSet::empty(d);
        assert!(s.is_empty());
        let edges: Vec<_> = all_edges(d).step_by(3).collect();
        s.extend(edges.iter().copied());
        assert_eq!(s.len(), edges.len());
        assert!(edges.iter().all(|&e| s.contains(e)));
        assert!(s.remove(edges[0]));
        assert!(!s.remove(edges[0]));
        assert_eq!(s.len(), edges.len() - 1);
        assert!(s.is_subset(&EdgeSet::full(d)));
        assert_eq!(EdgeSet::full(d).len(), 32);
        assert_eq!(EdgeSet::full(d).degrees(), vec![4; 16]);
    }
}
