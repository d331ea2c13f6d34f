use rand::Rng;

const ABSENT: u32 = u32::MAX;

/// Subset of `0..n` with O(1) insert, delete and uniform sampling: a dense
/// array of members plus a position map, deletion by swap-with-last.
#[derive(Debug, Clone)]
pub struct IndexSampler {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl IndexSampler {
    /// Sampler over all of `0..n`. `n` must be below `u32::MAX`.
    pub fn full(n: usize) -> Self {
        assert!(n < ABSENT as usize, "sampler universe too large");
        IndexSampler {
            items: (0..n as u32).collect(),
            pos: (0..n as u32).collect(),
        }
    }

    pub fn empty(n: usize) -> Self {
        assert!(n < ABSENT as usize, "sampler universe too large");
        IndexSampler {
            items: Vec::new(),
            pos: vec![ABSENT; n],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        self.pos[x] != ABSENT
    }

    pub fn insert(&mut self, x: usize) -> bool {
        if self.contains(x) {
            return false;
        }
        self.pos[x] = self.items.len() as u32;
        self.items.push(x as u32);
        true
    }

    pub fn remove(&mut self, x: usize) -> bool {
        let p = self.pos[x];
        if p == ABSENT {
            return false;
        }
        let last = *self.items.last().expect("nonempty");
        self.items.swap_remove(p as usize);
        if last as usize != x {
            self.pos[last as usize] = p;
        }
        self.pos[x] = ABSENT;
        true
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.items.is_empty() {
            None
        } else {
            Some(self.items[rng.gen_range(0..self.items.len())] as usize)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&x| x as usize)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    proptest! {
        #[test]
        fn mirrors_a_set(ops in proptest::collection::vec((any::<bool>(), 0usize..40), 0..200)) {
            let mut s = IndexSampler::empty(40);
            let mut model = BTreeSet::new();
            for (ins, x) in ops {
                if ins {
                    prop_assert_eq!(s.insert(x), model.insert(x));
                } else {
                    prop_assert_eq!(s.remove(x), model.remove(&x));
                }
                prop_assert_eq!(s.len(), model.len());
                let got: BTreeSet<usize> = s.iter().collect();
                prop_assert_eq!(&got, &model);
            }
        }
    }

    #[test]
    fn sampling_is_uniform() {
        let mut s = IndexSampler::full(10);
        for x in [0, 3, 7] {
            s.remove(x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0u32; 10];
        let n = 70_000;
        for _ in 0..n {
            counts[s.sample(&mut rng).unwrap()] += 1;
        }
        for (x, &c) in counts.iter().enumerate() {
            if [0, 3, 7].contains(&x) {
                assert_eq!(c, 0);
            } else {
                // expected 10000, sd ~ 93
                assert!((c as i64 - 10_000).abs() < 500, "{x}: {c}");
            }
        }
        assert!(IndexSampler::empty(3).sample(&mut rng).is_none());
    }
}
