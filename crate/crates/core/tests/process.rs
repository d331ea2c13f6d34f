use std::collections::BTreeMap;

use proptest::prelude::*;
use q2free::analytic::good_edges;
use q2free::cube::edge_index;
use q2free::engine::{contains_q2, run_permutation_seeded, Observer};
use q2free::oracle::{enumerate_saturated, exact_m_distribution};
use q2free::trajectory::{rebuild_statuses, wxy_with};
use q2free::{is_saturated, run_uniform, Dim, EdgeRef, PairStatus, ProcessState, RationalProb, RunOptions};

fn dim(d: u32) -> Dim {
    Dim::new(d).unwrap()
}

// Frozen from the exhaustive DP, cross-checked by an independent Python
// enumeration with `fractions.Fraction`.
#[test]
fn d3_oracle_pins() {
    let dist = exact_m_distribution(dim(3)).unwrap();
    let expected = BTreeMap::from([
        (8, RationalProb::from_ratio(1906, 3465).unwrap()),
        (9, RationalProb::from_ratio(1559, 3465).unwrap()),
    ]);
    assert_eq!(dist.masses, expected);
    let cat = enumerate_saturated(dim(3)).unwrap();
    assert_eq!(cat.members.len(), 74);
    assert_eq!(cat.size_histogram, BTreeMap::from([(8, 66), (9, 8)]));
}

#[test]
fn both_runners_match_oracle_at_d3() {
    let d = dim(3);
    let dist = exact_m_distribution(d).unwrap();
    let n = 20_000;
    let uniform: Vec<u64> = (0..n)
        .map(|s| run_uniform(d, s, &RunOptions::default(), &mut ()).unwrap().m)
        .collect();
    let scan: Vec<u64> = (0..n)
        .map(|s| run_permutation_seeded(d, s, &RunOptions::default(), &mut ()).unwrap().0.m)
        .collect();
    // sd of a frequency at n = 20000 is ~0.0035
    assert!(dist.tv_distance(&uniform) < 0.015);
    assert!(dist.tv_distance(&scan) < 0.015);
}

/// Checks every step against a from-scratch recount of the pre-step state.
#[derive(Default)]
struct StepAudit {
    pending: Option<(u64, u32)>,
    steps: u64,
    violations: u64,
}

impl Observer for StepAudit {
    fn before_add(&mut self, state: &ProcessState, e: EdgeRef) {
        let d = state.dim();
        let statuses = rebuild_statuses(&state.present_edges(), d);
        let open = statuses.iter().filter(|s| **s == PairStatus::Open).count() as u64;
        if open != state.open_count() {
            self.violations += 1;
        }
        let (u, v) = e.endpoints();
        let y = wxy_with(u, v, d, |f| statuses[edge_index(f, d).unwrap().get()])
            .unwrap()
            .y;
        self.pending = Some((state.open_count(), y));
    }

    fn after_add(&mut self, state: &ProcessState, _e: EdgeRef, closed: u64) {
        let (before, y) = self.pending.take().unwrap();
        self.steps += 1;
        if closed != u64::from(y) || state.open_count() != before - 1 - u64::from(y) {
            self.violations += 1;
        }
        if contains_q2(&state.present_edges(), state.dim()) {
            self.violations += 1;
        }
    }
}

#[test]
fn step_identity_small_dims() {
    for d in 2..=6 {
        for seed in 0..3 {
            let mut audit = StepAudit::default();
            let r = run_uniform(dim(d), seed, &RunOptions::default(), &mut audit).unwrap();
            assert_eq!(audit.violations, 0);
            assert_eq!(audit.steps, r.m);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn runs_end_saturated(d in 1u32..=8, seed in any::<u64>()) {
        let d = dim(d);
        let r = run_uniform(d, seed, &RunOptions::default(), &mut ()).unwrap();
        prop_assert!(is_saturated(&r.final_edges, d));
        prop_assert_eq!(r.m as usize, r.final_edges.len());
        let (p, clocks) = run_permutation_seeded(d, seed, &RunOptions::default(), &mut ()).unwrap();
        prop_assert!(is_saturated(&p.final_edges, d));
        prop_assert!(good_edges(&clocks).is_subset(&p.final_edges));
    }
}
