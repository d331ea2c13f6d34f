//! The `Q_2`-free process in `Q_d`.
//!
//! Every edge slot is Open, Present or Closed. A slot closes the moment some
//! length-3 path between its endpoints becomes fully Present; such a path
//! together with the slot is a square through the edge just added, so closure
//! is detected locally from [`squares_through`](crate::cube::squares_through)
//! of the new edge.
//!
//! Two runners are provided. [`run_uniform`] adds a uniformly random Open
//! edge until none remain. [`run_permutation`] scans edges in increasing clock
//! order and adds each one that is still Open when reached. Both produce the
//! same distribution of final graphs: a skipped edge is Closed forever, so the
//! next added edge is uniform among the Open ones.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cube::{
    all_squares, edge_from_index_unchecked, edge_index_unchecked, paths3, square_partners, Dim,
    EdgeIndex, EdgeRef,
};
use crate::edgeset::EdgeSet;
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::sampler::IndexSampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum PairStatus {
    Open,
    Present,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Uniform,
    Permutation,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Uniform => "uniform",
            Mode::Permutation => "permutation",
        })
    }
}

/// Evolving state of one process run.
#[derive(Debug, Clone)]
pub struct ProcessState {
    d: Dim,
    status: Vec<PairStatus>,
    open: Option<IndexSampler>,
    open_count: u64,
    present: u64,
    degree: Vec<u32>,
}

impl ProcessState {
    /// Empty graph with an Open-slot sampler (uniform mode).
    pub fn new(d: Dim) -> Result<Self> {
        Self::build(d, true)
    }

    /// Empty graph without a sampler, for scanning a fixed order.
    pub fn for_scan(d: Dim) -> Result<Self> {
        Self::build(d, false)
    }

    fn build(d: Dim, sampler: bool) -> Result<Self> {
        let n = d.edge_count();
        if n >= u64::from(u32::MAX) {
            return Err(Error::TooLarge(d.get()));
        }
        Ok(ProcessState {
            d,
            status: vec![PairStatus::Open; n as usize],
            open: sampler.then(|| IndexSampler::full(n as usize)),
            open_count: n,
            present: 0,
            degree: vec![0; d.vertex_count() as usize],
        })
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    /// Number of Present edges, `i`.
    pub fn edges_added(&self) -> u64 {
        self.present
    }

    /// Number of Open slots, `O_i`.
    pub fn open_count(&self) -> u64 {
        self.open_count
    }

    pub fn is_finished(&self) -> bool {
        self.open_count == 0
    }

    /// Scaled time `i / (d^(2/3) 2^d)`.
    pub fn scaled_time(&self) -> f64 {
        self.present as f64 / self.d.time_scale()
    }

    #[inline]
    pub fn status(&self, e: EdgeRef) -> PairStatus {
        self.status[edge_index_unchecked(e, self.d).get()]
    }

    #[inline]
    pub fn status_at(&self, idx: EdgeIndex) -> PairStatus {
        self.status[idx.get()]
    }

    pub fn statuses(&self) -> &[PairStatus] {
        &self.status
    }

    /// Current degree of every vertex.
    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    pub fn present_edges(&self) -> EdgeSet {
        let mut set = EdgeSet::empty(self.d);
        for (i, s) in self.status.iter().enumerate() {
            if *s == PairStatus::Present {
                set.insert_index(EdgeIndex(i as u64));
            }
        }
        set
    }

    /// The Open slots, in sampler order when a sampler exists.
    pub fn open_indices(&self) -> Vec<EdgeIndex> {
        match &self.open {
            Some(s) => s.iter().map(|i| EdgeIndex(i as u64)).collect(),
            None => self
                .status
                .iter()
                .enumerate()
                .filter(|(_, s)| **s == PairStatus::Open)
                .map(|(i, _)| EdgeIndex(i as u64))
                .collect(),
        }
    }

    fn transition(&mut self, idx: usize, to: PairStatus) {
        debug_assert_eq!(self.status[idx], PairStatus::Open, "slot {idx} left Open twice");
        self.status[idx] = to;
        self.open_count -= 1;
        if let Some(s) = &mut self.open {
            s.remove(idx);
        }
    }

    /// Picks a uniformly random Open slot, or `None` when the process is over.
    pub fn choose_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<EdgeRef> {
        let sampler = self
            .open
            .as_ref()
            .expect("uniform sampling needs a state built with ProcessState::new");
        sampler
            .sample(rng)
            .map(|i| edge_from_index_unchecked(EdgeIndex(i as u64), self.d))
    }

    /// Adds the Open edge `e` and closes the slots it completes. Returns the
    /// number of newly Closed slots.
    ///
    /// Panics if `e` is not Open.
    pub fn add(&mut self, e: EdgeRef) -> u64 {
        let idx = edge_index_unchecked(e, self.d).get();
        assert_eq!(self.status[idx], PairStatus::Open, "adding a non-Open edge {e:?}");
        self.transition(idx, PairStatus::Present);
        self.present += 1;
        let (u, v) = e.endpoints();
        self.degree[u.0 as usize] += 1;
        self.degree[v.0 as usize] += 1;
        self.close_after_add(e)
    }

    /// For every square through the just-added `e` whose other three slots are
    /// two Present and one Open, closes the Open one. Each slot lies in at most
    /// one square through `e`, so the count equals `Y(e)` before the addition.
    pub fn close_after_add(&mut self, e: EdgeRef) -> u64 {
        let mut closed = 0;
        for j in (0..self.d.get()).filter(|&j| j != e.dir) {
            let mut open_slot = None;
            let mut present = 0;
            for f in square_partners(e, j) {
                let idx = edge_index_unchecked(f, self.d).get();
                match self.status[idx] {
                    PairStatus::Present => present += 1,
                    PairStatus::Open => open_slot = Some(idx),
                    PairStatus::Closed => {}
                }
            }
            if present == 2 {
                if let Some(idx) = open_slot {
                    self.transition(idx, PairStatus::Closed);
                    closed += 1;
                }
            }
        }
        closed
    }

    /// One uniform step: chooses and adds an Open edge.
    pub fn step_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<(EdgeRef, u64)> {
        let e = self.choose_uniform(rng)?;
        let closed = self.add(e);
        Some((e, closed))
    }
}

/// Observation hooks. All methods run between steps on a quiescent state.
pub trait Observer {
    fn on_start(&mut self, _state: &ProcessState) {}
    /// Called with the edge about to be added, before any mutation.
    fn before_add(&mut self, _state: &ProcessState, _e: EdgeRef) {}
    fn after_add(&mut self, _state: &ProcessState, _e: EdgeRef, _closed: u64) {}
    /// Permutation mode: edge at scan position `j` (1-based) was looked at.
    fn on_scan(&mut self, _state: &ProcessState, _e: EdgeRef, _j: u64, _added: bool) {}
    /// Periodic snapshot; `scan` is the current scan position in permutation mode.
    fn on_snapshot(&mut self, _state: &ProcessState, _scan: Option<u64>) {}
    fn on_finish(&mut self, _state: &ProcessState, _scan: Option<u64>) {}
}

impl Observer for () {}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn on_start(&mut self, s: &ProcessState) {
        self.0.on_start(s);
        self.1.on_start(s);
    }
    fn before_add(&mut self, s: &ProcessState, e: EdgeRef) {
        self.0.before_add(s, e);
        self.1.before_add(s, e);
    }
    fn after_add(&mut self, s: &ProcessState, e: EdgeRef, c: u64) {
        self.0.after_add(s, e, c);
        self.1.after_add(s, e, c);
    }
    fn on_scan(&mut self, s: &ProcessState, e: EdgeRef, j: u64, added: bool) {
        self.0.on_scan(s, e, j, added);
        self.1.on_scan(s, e, j, added);
    }
    fn on_snapshot(&mut self, s: &ProcessState, j: Option<u64>) {
        self.0.on_snapshot(s, j);
        self.1.on_snapshot(s, j);
    }
    fn on_finish(&mut self, s: &ProcessState, j: Option<u64>) {
        self.0.on_finish(s, j);
        self.1.on_finish(s, j);
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Snapshot every this many additions; `None` picks [`default_cadence`].
    pub cadence: Option<u64>,
    pub record_steps: bool,
    pub record_scan: bool,
}

/// `ceil(d^(2/3) 2^d / 200)`, about 200 snapshots per run.
pub fn default_cadence(d: Dim) -> u64 {
    ((d.time_scale() / 200.0).ceil() as u64).max(1)
}

#[derive(Debug, Clone)]
pub struct ProcessResult {
    pub d: Dim,
    pub mode: Mode,
    /// Final edge count `M`.
    pub m: u64,
    pub final_edges: EdgeSet,
    pub degrees: Vec<u32>,
    /// Added edges in order.
    pub step_log: Option<Vec<EdgeRef>>,
    /// `t(i)`: scan position (1-based) of the i-th addition.
    pub scan_log: Option<Vec<u64>>,
    /// Number of equal adjacent clock values broken by edge index.
    pub clock_ties: u64,
}

fn finish(
    state: ProcessState,
    mode: Mode,
    step_log: Option<Vec<EdgeRef>>,
    scan_log: Option<Vec<u64>>,
    clock_ties: u64,
) -> ProcessResult {
    ProcessResult {
        d: state.d,
        mode,
        m: state.present,
        final_edges: state.present_edges(),
        degrees: state.degree,
        step_log,
        scan_log,
        clock_ties,
    }
}

/// Runs the uniform-choice process from the empty graph until no Open slot
/// remains. The process stream is derived from `seed`.
pub fn run_uniform<O: Observer + ?Sized>(
    d: Dim,
    seed: u64,
    opts: &RunOptions,
    observer: &mut O,
) -> Result<ProcessResult> {
    let mut rng = rng::stream(seed, rng::PROCESS_STREAM);
    run_uniform_with(d, &mut rng, opts, observer)
}

pub fn run_uniform_with<O: Observer + ?Sized>(
    d: Dim,
    rng: &mut SimRng,
    opts: &RunOptions,
    observer: &mut O,
) -> Result<ProcessResult> {
    let mut state = ProcessState::new(d)?;
    let cadence = opts.cadence.unwrap_or_else(|| default_cadence(d));
    let mut steps = opts.record_steps.then(Vec::new);
    observer.on_start(&state);
    observer.on_snapshot(&state, None);
    let mut last_snap = 0;
    while let Some(e) = state.choose_uniform(rng) {
        observer.before_add(&state, e);
        let closed = state.add(e);
        observer.after_add(&state, e, closed);
        if let Some(log) = &mut steps {
            log.push(e);
        }
        if state.present % cadence == 0 {
            observer.on_snapshot(&state, None);
            last_snap = state.present;
        }
    }
    if last_snap != state.present {
        observer.on_snapshot(&state, None);
    }
    observer.on_finish(&state, None);
    Ok(finish(state, Mode::Uniform, steps, None, 0))
}

/// Independent clock values `T_e`, one per edge, inducing the scan order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockAssignment {
    d: Dim,
    values: Vec<f64>,
}

impl ClockAssignment {
    pub fn new(d: Dim, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != d.edge_count() {
            return Err(Error::ClockLength {
                got: values.len(),
                expected: d.edge_count(),
            });
        }
        if let Some(&bad) = values.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::ClockRange(bad));
        }
        Ok(ClockAssignment { d, values })
    }

    /// Uniform `[0, 1)` clocks.
    pub fn random<R: Rng + ?Sized>(d: Dim, rng: &mut R) -> Self {
        let values = (0..d.edge_count()).map(|_| rng.gen::<f64>()).collect();
        ClockAssignment { d, values }
    }

    /// Clocks realising a given scan order: the k-th listed edge gets
    /// `(k + 1) / (n + 1)`.
    pub fn from_order(d: Dim, order: &[EdgeIndex]) -> Result<Self> {
        let n = order.len();
        let mut values = vec![f64::NAN; n];
        for (k, idx) in order.iter().enumerate() {
            if idx.get() >= n {
                return Err(Error::IndexOutOfRange {
                    idx: idx.0,
                    d: d.get(),
                });
            }
            values[idx.get()] = (k + 1) as f64 / (n + 1) as f64;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("order is not a permutation".into()));
        }
        Self::new(d, values)
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    #[inline]
    pub fn get(&self, e: EdgeRef) -> f64 {
        self.values[edge_index_unchecked(e, self.d).get()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Edge indices in increasing `T`, ties broken by index, plus the tie count.
    pub fn scan_order(&self) -> (Vec<u32>, u64) {
        let mut order: Vec<u32> = (0..self.values.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            self.values[a as usize]
                .total_cmp(&self.values[b as usize])
                .then(a.cmp(&b))
        });
        let ties = order
            .windows(2)
            .filter(|w| self.values[w[0] as usize] == self.values[w[1] as usize])
            .count() as u64;
        (order, ties)
    }
}

/// Scans edges in increasing clock order, adding each one that is Open when
/// reached. Snapshots follow the number of additions, like the uniform runner.
pub fn run_permutation<O: Observer + ?Sized>(
    clocks: &ClockAssignment,
    opts: &RunOptions,
    observer: &mut O,
) -> Result<ProcessResult> {
    let d = clocks.dim();
    let mut state = ProcessState::for_scan(d)?;
    let (order, ties) = clocks.scan_order();
    let cadence = opts.cadence.unwrap_or_else(|| default_cadence(d));
    let mut steps = opts.record_steps.then(Vec::new);
    let mut scans = opts.record_scan.then(Vec::new);
    observer.on_start(&state);
    observer.on_snapshot(&state, Some(0));
    let mut last_snap = 0;
    let mut j = 0u64;
    for idx in order {
        if state.is_finished() {
            break;
        }
        j += 1;
        let e = edge_from_index_unchecked(EdgeIndex(u64::from(idx)), d);
        let added = state.status[idx as usize] == PairStatus::Open;
        if added {
            observer.before_add(&state, e);
            let closed = state.add(e);
            observer.after_add(&state, e, closed);
            if let Some(log) = &mut steps {
                log.push(e);
            }
            if let Some(log) = &mut scans {
                log.push(j);
            }
        }
        observer.on_scan(&state, e, j, added);
        if added && state.present % cadence == 0 {
            observer.on_snapshot(&state, Some(j));
            last_snap = state.present;
        }
    }
    if last_snap != state.present {
        observer.on_snapshot(&state, Some(j));
    }
    observer.on_finish(&state, Some(j));
    Ok(finish(state, Mode::Permutation, steps, scans, ties))
}

/// Draws clocks from the process stream of `seed` and scans them.
pub fn run_permutation_seeded<O: Observer + ?Sized>(
    d: Dim,
    seed: u64,
    opts: &RunOptions,
    observer: &mut O,
) -> Result<(ProcessResult, ClockAssignment)> {
    let mut rng = rng::stream(seed, rng::PROCESS_STREAM);
    let clocks = ClockAssignment::random(d, &mut rng);
    let result = run_permutation(&clocks, opts, observer)?;
    Ok((result, clocks))
}

/// True iff some square has all four edges in `edges`.
pub fn contains_q2(edges: &EdgeSet, d: Dim) -> bool {
    all_squares(d).any(|s| s.edges().iter().all(|&e| edges.contains(e)))
}

/// True iff `edges` is `Q_2`-free and every absent edge would complete a square.
pub fn is_saturated(edges: &EdgeSet, d: Dim) -> bool {
    if contains_q2(edges, d) {
        return false;
    }
    crate::cube::all_edges(d)
        .filter(|&e| !edges.contains(e))
        .all(|e| {
            let (u, v) = e.endpoints();
            paths3(u, v, d)
                .expect("endpoints of an edge are adjacent")
                .iter()
                .any(|p| p.iter().all(|&f| edges.contains(f)))
        })
}
