//! Independent runs executed in parallel; results are keyed by run index so
//! aggregates never depend on scheduling.

use std::collections::BTreeMap;

use anyhow::Result;
use q2free::analytic::good_edges;
use q2free::engine::{run_permutation_seeded, Mode};
use q2free::trajectory::{degree_summary, empty_subcube_count, DegreeSummary, TrajectoryObserver};
use q2free::{is_saturated, rng, run_uniform, Dim, RunOptions, TrajectoryRecord};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub d: Dim,
    pub mode: Mode,
    pub cadence: Option<u64>,
    pub sample_pairs: usize,
    pub exact_y_zero: bool,
    pub isolation_at: Vec<u64>,
    pub degree_c: f64,
    pub subcube_k: Vec<u32>,
    /// Keep snapshots for run indices below this.
    pub trajectory_runs: u64,
}

impl RunSpec {
    pub fn plain(d: Dim, mode: Mode) -> Self {
        RunSpec {
            d,
            mode,
            cadence: None,
            sample_pairs: 0,
            exact_y_zero: false,
            isolation_at: Vec::new(),
            degree_c: 0.3,
            subcube_k: Vec::new(),
            trajectory_runs: 0,
        }
    }
}

/// Per-run entry of `results[]` in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub run_id: u64,
    pub seed: u64,
    pub d: u32,
    pub m: u64,
    /// `M / (d^(2/3) 2^d)`.
    pub scaled_m: f64,
    pub saturated: bool,
    pub min_deg: u32,
    pub max_deg: u32,
    pub mean_deg: f64,
    pub frac_deg_above: f64,
    pub empty_subcubes: BTreeMap<u32, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clock_ties: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good_subset: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub isolated_at: Vec<(u64, f64)>,
    #[serde(skip)]
    pub degrees: Option<DegreeSummary>,
    #[serde(skip)]
    pub records: Vec<TrajectoryRecord>,
}

pub fn execute(spec: &RunSpec, run_id: u64, seed: u64) -> Result<RunOutcome> {
    let d = spec.d;
    let keep = run_id < spec.trajectory_runs;
    let opts = RunOptions {
        cadence: spec.cadence,
        ..Default::default()
    };
    let mut observer = TrajectoryObserver::new(d, if keep { spec.sample_pairs } else { 0 }, seed)
        .with_exact_y_zero(spec.exact_y_zero && keep);
    if spec.mode == Mode::Permutation && !spec.isolation_at.is_empty() {
        observer = observer.with_isolation(d, spec.isolation_at.clone());
    }
    let (result, good) = match spec.mode {
        Mode::Uniform => {
            let r = if keep {
                run_uniform(d, seed, &opts, &mut observer)?
            } else {
                run_uniform(d, seed, &opts, &mut ())?
            };
            (r, None)
        }
        Mode::Permutation => {
            let (r, clocks) = if keep || !spec.isolation_at.is_empty() {
                run_permutation_seeded(d, seed, &opts, &mut observer)?
            } else {
                run_permutation_seeded(d, seed, &opts, &mut ())?
            };
            let good = good_edges(&clocks);
            let subset = good.is_subset(&r.final_edges);
            (r, Some((good.len() as u64, subset)))
        }
    };
    let degrees = degree_summary(&result, spec.degree_c);
    let empty_subcubes = spec
        .subcube_k
        .iter()
        .map(|&k| Ok((k, empty_subcube_count(&result, k)?)))
        .collect::<Result<_>>()?;
    Ok(RunOutcome {
        run_id,
        seed,
        d: d.get(),
        m: result.m,
        scaled_m: result.m as f64 / d.time_scale(),
        saturated: is_saturated(&result.final_edges, d),
        min_deg: degrees.min,
        max_deg: degrees.max,
        mean_deg: degrees.mean,
        frac_deg_above: degrees.fraction_above,
        empty_subcubes,
        clock_ties: (spec.mode == Mode::Permutation).then_some(result.clock_ties),
        good: good.map(|g| g.0),
        good_subset: good.map(|g| g.1),
        isolated_at: observer.isolated_at,
        degrees: Some(degrees),
        records: if keep { observer.records } else { Vec::new() },
    })
}

/// Runs `f(index, seed)` for every index on a pool of `workers` threads.
/// Seeds derive from `(master, index)`; output order is index order.
pub fn par_runs<T, F>(workers: Option<usize>, master: u64, runs: u64, f: F) -> Result<Vec<(u64, Result<T>)>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build()?;
    Ok(pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|i| {
                let seed = rng::run_seed(master, i);
                (seed, f(i, seed))
            })
            .collect()
    }))
}
