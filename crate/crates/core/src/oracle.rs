//! Exhaustive ground truth for `d <= 3`.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::analytic::RationalProb;
use crate::cube::{all_squares, edge_index_unchecked, Dim, EdgeIndex};
use crate::edgeset::EdgeSet;
use crate::engine::{is_saturated, run_permutation, ClockAssignment, RunOptions};
use crate::error::{Error, Result};

pub const EXHAUSTIVE_LIMIT: u32 = 3;

fn check_dim(d: Dim, limit: u32) -> Result<()> {
    if d.get() > limit {
        Err(Error::OracleRefused { d: d.get(), limit })
    } else {
        Ok(())
    }
}

/// Every `(Q_d, Q_2)`-saturated edge set, as bitmasks over edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturatedCatalog {
    pub d: u32,
    pub members: Vec<u64>,
    /// Edge count -> number of saturated sets of that size.
    pub size_histogram: BTreeMap<u64, u64>,
}

pub fn enumerate_saturated(d: Dim) -> Result<SaturatedCatalog> {
    check_dim(d, EXHAUSTIVE_LIMIT)?;
    let n = d.edge_count();
    let members: Vec<u64> = (0..1u64 << n)
        .filter(|&mask| is_saturated(&EdgeSet::from_mask(d, mask), d))
        .collect();
    let mut size_histogram = BTreeMap::new();
    for &m in &members {
        *size_histogram.entry(u64::from(m.count_ones())).or_insert(0) += 1;
    }
    Ok(SaturatedCatalog {
        d: d.get(),
        members,
        size_histogram,
    })
}

/// Exact law of the final edge count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactDistribution {
    pub d: u32,
    pub masses: BTreeMap<u64, RationalProb>,
}

impl ExactDistribution {
    pub fn total(&self) -> BigRational {
        self.masses
            .values()
            .fold(BigRational::zero(), |acc, p| acc + p.value())
    }

    pub fn support(&self) -> Vec<u64> {
        self.masses.keys().copied().collect()
    }

    pub fn probability(&self, m: u64) -> f64 {
        self.masses.get(&m).map_or(0.0, RationalProb::to_f64)
    }

    /// Total-variation distance to an empirical sample of `M` values.
    pub fn tv_distance(&self, sample: &[u64]) -> f64 {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for &m in sample {
            *counts.entry(m).or_insert(0) += 1;
        }
        let n = sample.len() as f64;
        let keys: std::collections::BTreeSet<u64> =
            counts.keys().chain(self.masses.keys()).copied().collect();
        0.5 * keys
            .into_iter()
            .map(|m| {
                let emp = counts.get(&m).copied().unwrap_or(0) as f64 / n;
                (emp - self.probability(m)).abs()
            })
            .sum::<f64>()
    }
}

// Squares as 4-edge masks.
fn square_masks(d: Dim) -> Vec<u64> {
    all_squares(d)
        .map(|s| {
            s.edges()
                .iter()
                .fold(0u64, |m, &e| m | 1 << edge_index_unchecked(e, d).0)
        })
        .collect()
}

/// Dynamic programming over process states. A state is the present-edge mask;
/// an absent edge is addable iff adding it completes no square. Mass flows
/// uniformly to every addable successor; states with none are terminal.
pub fn exact_m_distribution(d: Dim) -> Result<ExactDistribution> {
    check_dim(d, EXHAUSTIVE_LIMIT)?;
    let n = d.edge_count();
    let squares = square_masks(d);
    let addable = |mask: u64| -> Vec<u64> {
        (0..n)
            .map(|i| 1u64 << i)
            .filter(|&bit| mask & bit == 0)
            .filter(|&bit| {
                let next = mask | bit;
                !squares.iter().any(|&s| s & bit != 0 && next & s == s)
            })
            .collect()
    };
    let mut layer: BTreeMap<u64, BigRational> = BTreeMap::from([(0, BigRational::one())]);
    let mut masses: BTreeMap<u64, BigRational> = BTreeMap::new();
    while !layer.is_empty() {
        let mut next: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (mask, mass) in layer {
            let succ = addable(mask);
            if succ.is_empty() {
                *masses
                    .entry(u64::from(mask.count_ones()))
                    .or_insert_with(BigRational::zero) += mass;
                continue;
            }
            let share = mass / BigRational::from_integer(succ.len().into());
            for bit in succ {
                *next.entry(mask | bit).or_insert_with(BigRational::zero) += &share;
            }
        }
        layer = next;
    }
    let masses = masses
        .into_iter()
        .map(|(m, p)| Ok((m, RationalProb::new(p)?)))
        .collect::<Result<_>>()?;
    Ok(ExactDistribution { d: d.get(), masses })
}

/// Law of `M` under the scan formulation, by running every edge order.
pub fn permutation_m_distribution(d: Dim) -> Result<ExactDistribution> {
    check_dim(d, 2)?;
    let n = d.edge_count();
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut total = 0u64;
    for order in (0..n).map(EdgeIndex).permutations(n as usize) {
        let clocks = ClockAssignment::from_order(d, &order)?;
        let result = run_permutation(&clocks, &RunOptions::default(), &mut ())?;
        *counts.entry(result.m).or_insert(0) += 1;
        total += 1;
    }
    let masses = counts
        .into_iter()
        .map(|(m, c)| Ok((m, RationalProb::from_ratio(c as i64, total as i64)?)))
        .collect::<Result<_>>()?;
    Ok(ExactDistribution { d: d.get(), masses })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(d: u32) -> Dim {
        Dim::new(d).unwrap()
    }

    #[test]
    fn catalog_tiny() {
        let c1 = enumerate_saturated(dim(1)).unwrap();
        assert_eq!(c1.members, vec![1]);
        let c2 = enumerate_saturated(dim(2)).unwrap();
        assert_eq!(c2.members.len(), 4);
        assert!(c2.members.iter().all(|m| m.count_ones() == 3));
        assert!(enumerate_saturated(dim(4)).is_err());
    }

    #[test]
    fn distribution_tiny() {
        let one = RationalProb::from_ratio(1, 1).unwrap();
        let d1 = exact_m_distribution(dim(1)).unwrap();
        assert_eq!(d1.masses, BTreeMap::from([(1, one.clone())]));
        let d2 = exact_m_distribution(dim(2)).unwrap();
        assert_eq!(d2.masses, BTreeMap::from([(3, one.clone())]));
        assert_eq!(permutation_m_distribution(dim(2)).unwrap(), d2);
        assert!(permutation_m_distribution(dim(3)).is_err());
        assert!(exact_m_distribution(dim(4)).is_err());
    }

    #[test]
    fn d3_consistent_with_catalog() {
        let dist = exact_m_distribution(dim(3)).unwrap();
        assert!(dist.total().is_one());
        let cat = enumerate_saturated(dim(3)).unwrap();
        let sizes: Vec<u64> = cat.size_histogram.keys().copied().collect();
        assert_eq!(dist.support(), sizes);
    }

    #[test]
    fn tv_distance_basics() {
        let dist = exact_m_distribution(dim(2)).unwrap();
        assert_eq!(dist.tv_distance(&[3, 3, 3]), 0.0);
        assert_eq!(dist.tv_distance(&[3, 4]), 0.5);
    }
}
