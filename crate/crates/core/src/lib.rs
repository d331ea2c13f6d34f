//! Simulation and analysis of the `Q_2`-free random process in the hypercube.
//!
//! Starting from the empty subgraph of `Q_d`, edges are added one at a time,
//! each chosen uniformly among those whose addition creates no 4-cycle
//! (`Q_2` copy), until the graph is saturated. The crate provides:
//!
//! - [`cube`]: bitmask hypercube combinatorics (edges, squares, length-3 paths, subcubes);
//! - [`engine`]: the process in its uniform and clock-scan formulations;
//! - [`trajectory`]: observation of open pairs, path counts, degrees and empty subcubes;
//! - [`analytic`]: good edges and their exact and numerical probabilities;
//! - [`ode`]: the heuristic trajectory system and its closed-form solution;
//! - [`oracle`]: exhaustive ground truth for `d <= 3`.

pub mod analytic;
pub mod cube;
pub mod edgeset;
pub mod engine;
mod error;
pub mod ode;
pub mod oracle;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod trajectory;

pub use analytic::{good_edges, p_exact_series, RationalProb};
pub use cube::{Dim, EdgeIndex, EdgeRef, Square, Subcube, VertexId};
pub use edgeset::EdgeSet;
pub use engine::{
    is_saturated, run_permutation, run_uniform, ClockAssignment, Mode, Observer, PairStatus,
    ProcessResult, ProcessState, RunOptions,
};
pub use error::{Error, Result};
pub use ode::OdeState;
pub use oracle::ExactDistribution;
pub use trajectory::{TrajectoryRecord, WxyCounts};
