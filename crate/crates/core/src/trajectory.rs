//! Observation of a running process: per-pair path classification, periodic
//! snapshots, isolated pairs of the scanned graph, final degrees and empty
//! subcubes.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::cube::{all_edges, paths3, subcubes, Dim, EdgeRef, VertexId};
use crate::edgeset::EdgeSet;
use crate::engine::{Observer, PairStatus, ProcessResult, ProcessState};
use crate::error::{Error, Result};
use crate::rng;

/// Length-3 paths joining one adjacent pair, by slot composition:
/// `w` three Open, `x` two Open and one Present, `y` one Open and two Present.
/// Paths through a Closed slot, or fully Present, count toward none.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WxyCounts {
    pub w: u32,
    pub x: u32,
    pub y: u32,
}

/// Classifies the `d - 1` paths joining `u` and `v` by a status lookup.
pub fn wxy_with<F>(u: VertexId, v: VertexId, d: Dim, status: F) -> Result<WxyCounts>
where
    F: Fn(EdgeRef) -> PairStatus,
{
    let mut counts = WxyCounts::default();
    for path in paths3(u, v, d)? {
        let (mut open, mut present) = (0, 0);
        for e in path {
            match status(e) {
                PairStatus::Open => open += 1,
                PairStatus::Present => present += 1,
                PairStatus::Closed => {}
            }
        }
        match (open, present) {
            (3, 0) => counts.w += 1,
            (2, 1) => counts.x += 1,
            (1, 2) => counts.y += 1,
            _ => {}
        }
    }
    Ok(counts)
}

pub fn wxy_counts(state: &ProcessState, u: VertexId, v: VertexId) -> Result<WxyCounts> {
    wxy_with(u, v, state.dim(), |e| state.status(e))
}

/// Slot statuses recomputed from scratch out of a present-edge set: absent
/// slots are Closed iff some length-3 path between the endpoints is present.
pub fn rebuild_statuses(edges: &EdgeSet, d: Dim) -> Vec<PairStatus> {
    all_edges(d)
        .map(|e| slot_status(edges, e, d))
        .collect()
}

pub fn slot_status(edges: &EdgeSet, e: EdgeRef, d: Dim) -> PairStatus {
    if edges.contains(e) {
        return PairStatus::Present;
    }
    let (u, v) = e.endpoints();
    let blocked = paths3(u, v, d)
        .expect("edge endpoints are adjacent")
        .iter()
        .any(|p| p.iter().all(|&f| edges.contains(f)));
    if blocked {
        PairStatus::Closed
    } else {
        PairStatus::Open
    }
}

/// Fraction of Open slots with `Y = 0`, over every Open slot. `NaN` when
/// nothing is Open.
pub fn y_zero_fraction_exact(state: &ProcessState) -> f64 {
    let open = state.open_indices();
    if open.is_empty() {
        return f64::NAN;
    }
    let d = state.dim();
    let zero = open
        .iter()
        .filter(|&&idx| {
            let (u, v) = crate::cube::edge_from_index_unchecked(idx, d).endpoints();
            wxy_counts(state, u, v).expect("adjacent").y == 0
        })
        .count();
    zero as f64 / open.len() as f64
}

/// Fraction of adjacent pairs both of whose endpoints have degree 0 in `h`.
pub fn isolated_pair_fraction(h: &EdgeSet, d: Dim) -> f64 {
    let deg = h.degrees();
    let isolated = all_edges(d)
        .filter(|e| {
            let (u, v) = e.endpoints();
            deg[u.0 as usize] == 0 && deg[v.0 as usize] == 0
        })
        .count();
    isolated as f64 / d.edge_count() as f64
}

/// Incremental count of isolated pairs while edges are revealed one by one.
#[derive(Debug, Clone)]
pub struct IsolationTracker {
    d: Dim,
    degree: Vec<u32>,
    isolated: u64,
}

impl IsolationTracker {
    pub fn new(d: Dim) -> Self {
        IsolationTracker {
            d,
            degree: vec![0; d.vertex_count() as usize],
            isolated: d.edge_count(),
        }
    }

    fn touch(&mut self, v: VertexId) {
        if self.degree[v.0 as usize] == 0 {
            let n = (0..self.d.get())
                .filter(|&k| self.degree[v.flip(k).0 as usize] == 0)
                .count();
            self.isolated -= n as u64;
        }
        self.degree[v.0 as usize] += 1;
    }

    pub fn reveal(&mut self, e: EdgeRef) {
        let (u, v) = e.endpoints();
        self.touch(u);
        self.touch(v);
    }

    pub fn fraction(&self) -> f64 {
        self.isolated as f64 / self.d.edge_count() as f64
    }
}

/// One observation of a running process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub i: u64,
    pub t: f64,
    /// Scan position (permutation mode).
    pub j: Option<u64>,
    pub open: u64,
    /// Sampled pairs still Open at this snapshot.
    pub sampled_open: usize,
    /// Means of (W, X, Y) over the sampled Open pairs.
    pub wxy_mean: [f64; 3],
    pub wxy_median: [u32; 3],
    pub wxy_p90: [u32; 3],
    pub y_zero_fraction: f64,
    pub isolated_pair_fraction: Option<f64>,
    pub min_deg: u32,
    pub max_deg: u32,
    pub degree_histogram: Vec<u64>,
}

/// Pairs sampled uniformly without replacement, sorted by edge index.
pub fn sample_pairs(d: Dim, amount: usize, seed: u64) -> Vec<EdgeRef> {
    let n = d.edge_count() as usize;
    let mut rng = rng::stream(seed, rng::OBSERVER_STREAM);
    let mut picked = sample(&mut rng, n, amount.min(n)).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|i| crate::cube::edge_from_index_unchecked(crate::cube::EdgeIndex(i as u64), d))
        .collect()
}

fn quantile(sorted: &[u32], q: f64) -> u32 {
    if sorted.is_empty() {
        return 0;
    }
    let k = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[k]
}

/// Builds a record from the state and the fixed pair sample.
pub fn snapshot(
    state: &ProcessState,
    pairs: &[EdgeRef],
    scan: Option<u64>,
    isolated: Option<f64>,
    exact_y_zero: bool,
) -> TrajectoryRecord {
    let d = state.dim();
    let counts: Vec<WxyCounts> = pairs
        .iter()
        .filter(|&&e| state.status(e) == PairStatus::Open)
        .map(|e| {
            let (u, v) = e.endpoints();
            wxy_counts(state, u, v).expect("sampled pairs are edges")
        })
        .collect();
    let n = counts.len();
    let mut cols: [Vec<u32>; 3] = [
        counts.iter().map(|c| c.w).collect(),
        counts.iter().map(|c| c.x).collect(),
        counts.iter().map(|c| c.y).collect(),
    ];
    let mut mean = [f64::NAN; 3];
    let mut median = [0; 3];
    let mut p90 = [0; 3];
    for (k, col) in cols.iter_mut().enumerate() {
        if n > 0 {
            mean[k] = col.iter().map(|&c| f64::from(c)).sum::<f64>() / n as f64;
        }
        col.sort_unstable();
        median[k] = quantile(col, 0.5);
        p90[k] = quantile(col, 0.9);
    }
    let y_zero_fraction = if exact_y_zero {
        y_zero_fraction_exact(state)
    } else if n == 0 {
        f64::NAN
    } else {
        counts.iter().filter(|c| c.y == 0).count() as f64 / n as f64
    };
    let degrees = state.degrees();
    let mut histogram = vec![0u64; d.get() as usize + 1];
    for &g in degrees {
        histogram[g as usize] += 1;
    }
    TrajectoryRecord {
        i: state.edges_added(),
        t: state.scaled_time(),
        j: scan,
        open: state.open_count(),
        sampled_open: n,
        wxy_mean: mean,
        wxy_median: median,
        wxy_p90: p90,
        y_zero_fraction,
        isolated_pair_fraction: isolated,
        min_deg: degrees.iter().copied().min().unwrap_or(0),
        max_deg: degrees.iter().copied().max().unwrap_or(0),
        degree_histogram: histogram,
    }
}

/// Observer collecting [`TrajectoryRecord`]s at each snapshot, plus the
/// isolated-pair fraction of the scanned graph at requested scan positions.
#[derive(Debug, Clone)]
pub struct TrajectoryObserver {
    pairs: Vec<EdgeRef>,
    exact_y_zero: bool,
    isolation: Option<IsolationTracker>,
    probes: Vec<u64>,
    pub records: Vec<TrajectoryRecord>,
    /// `(j, isolated fraction)` at each requested scan position reached.
    pub isolated_at: Vec<(u64, f64)>,
}

impl TrajectoryObserver {
    pub fn new(d: Dim, sample_size: usize, seed: u64) -> Self {
        TrajectoryObserver {
            pairs: sample_pairs(d, sample_size, seed),
            exact_y_zero: false,
            isolation: None,
            probes: Vec::new(),
            records: Vec::new(),
            isolated_at: Vec::new(),
        }
    }

    /// Compute `y_zero_fraction` over every Open pair instead of the sample.
    pub fn with_exact_y_zero(mut self, exact: bool) -> Self {
        self.exact_y_zero = exact;
        self
    }

    /// Track isolated pairs of the scanned graph (permutation mode) and record
    /// the fraction at each scan position in `probes`.
    pub fn with_isolation(mut self, d: Dim, mut probes: Vec<u64>) -> Self {
        probes.sort_unstable();
        probes.dedup();
        self.isolation = Some(IsolationTracker::new(d));
        self.probes = probes;
        self
    }

    pub fn pairs(&self) -> &[EdgeRef] {
        &self.pairs
    }
}

impl Observer for TrajectoryObserver {
    fn on_start(&mut self, _state: &ProcessState) {
        if self.probes.first() == Some(&0) {
            if let Some(t) = &self.isolation {
                self.isolated_at.push((0, t.fraction()));
            }
        }
    }

    fn on_scan(&mut self, _state: &ProcessState, e: EdgeRef, j: u64, _added: bool) {
        if let Some(t) = &mut self.isolation {
            t.reveal(e);
            if self.probes.binary_search(&j).is_ok() {
                self.isolated_at.push((j, t.fraction()));
            }
        }
    }

    fn on_snapshot(&mut self, state: &ProcessState, scan: Option<u64>) {
        let isolated = self.isolation.as_ref().map(IsolationTracker::fraction);
        self.records
            .push(snapshot(state, &self.pairs, scan, isolated, self.exact_y_zero));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    /// `histogram[k]` = number of vertices of degree `k`.
    pub histogram: Vec<u64>,
    pub min: u32,
    pub max: u32,
    pub mean: f64,
    pub threshold_c: f64,
    /// Fraction of vertices with degree at least `c * d^(2/3)`.
    pub fraction_above: f64,
}

pub fn degree_summary(result: &ProcessResult, c: f64) -> DegreeSummary {
    let d = result.d;
    let mut histogram = vec![0u64; d.get() as usize + 1];
    for &g in &result.degrees {
        histogram[g as usize] += 1;
    }
    let n = result.degrees.len() as f64;
    let threshold = c * f64::from(d.get()).powf(2.0 / 3.0);
    let above = result
        .degrees
        .iter()
        .filter(|&&g| f64::from(g) >= threshold)
        .count();
    DegreeSummary {
        histogram,
        min: result.degrees.iter().copied().min().unwrap_or(0),
        max: result.degrees.iter().copied().max().unwrap_or(0),
        mean: result.degrees.iter().map(|&g| f64::from(g)).sum::<f64>() / n,
        threshold_c: c,
        fraction_above: above as f64 / n,
    }
}

/// Number of axis-aligned `Q_k` with no edge in the final graph.
pub fn empty_subcube_count(result: &ProcessResult, k: u32) -> Result<u64> {
    let d = result.d;
    if k == 0 || k > d.get() {
        return Err(Error::InvalidArgument(format!(
            "subcube dimension {k} outside 1..={d}"
        )));
    }
    Ok(subcubes(k, d)
        .filter(|c| c.edges().all(|e| !result.final_edges.contains(e)))
        .count() as u64)
}
