//! Command-line surface. Every subcommand's arguments double as the config
//! echoed into its outputs; fields that cannot change results (worker count,
//! output directory, timestamps) are left out of the echo.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use q2free::engine::Mode;
use serde::Serialize;

use crate::LabError;

/// Largest dimension simulated without `--allow-large`.
pub const DEFAULT_MAX_SIM_DIM: u32 = 22;

#[derive(Debug, Parser)]
#[command(name = "q2lab", version, about = "Experiments on the Q2-free process in the hypercube")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate independent runs at one dimension.
    Run(RunArgs),
    /// Mean final edge count across a range of dimensions.
    Sweep(SweepArgs),
    /// Good edges under random clocks against the exact expectation.
    Goodedges(GoodArgs),
    /// Integrate the heuristic system and compare with its closed form.
    Ode(OdeArgs),
    /// Exhaustive saturated catalog and exact law of M for d <= 3.
    Oracle(OracleArgs),
    /// Summarise a manifest; with --check, evaluate its pass/fail criteria.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Uniform,
    Permutation,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Uniform => Mode::Uniform,
            ModeArg::Permutation => Mode::Permutation,
        }
    }
}

impl Serialize for ModeArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Mode::from(*self).serialize(s)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Master seed; run k uses a stream derived from (seed, k).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Allow simulations above d = 22.
    #[arg(long)]
    pub allow_large: bool,
    /// Record wall-clock start/finish in the manifest (breaks byte-identical reruns).
    #[arg(long)]
    #[serde(skip)]
    pub timestamps: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Uniform)]
    pub mode: ModeArg,
    /// Snapshot every N additions (default: about 200 per run).
    #[arg(long)]
    pub cadence: Option<u64>,
    /// Adjacent pairs tracked for W/X/Y statistics.
    #[arg(long, default_value_t = 4096)]
    pub sample_pairs: usize,
    /// Degree threshold constant c in c * d^(2/3).
    #[arg(long, default_value_t = 0.3)]
    pub degree_c: f64,
    /// Subcube dimensions k for empty-subcube counts (default: 1,2,3 capped at d).
    #[arg(long, value_delimiter = ',')]
    pub subcube_k: Vec<u32>,
    /// Write trajectories for the first N runs only.
    #[arg(long, default_value_t = 10)]
    pub trajectory_runs: u64,
    /// Compute y_zero_frac over every Open pair instead of the sample.
    #[arg(long)]
    pub exact_y_zero: bool,
    /// Permutation mode: scan positions j at which to record the isolated-pair fraction.
    #[arg(long, value_delimiter = ',')]
    pub isolation_at: Vec<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 8)]
    pub d_min: u32,
    #[arg(long, default_value_t = 16)]
    pub d_max: u32,
    #[arg(long, default_value_t = 5)]
    pub runs: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Uniform)]
    pub mode: ModeArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GoodArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 100)]
    pub runs: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OdeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 2.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Trajectory CSV written by `run` to overlay on the heuristic.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    /// Run id within the overlay file.
    #[arg(long, default_value_t = 0)]
    pub overlay_run: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub d: u32,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Manifest JSON written by another subcommand.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Evaluate the manifest's acceptance checks; exit 3 on failure.
    #[arg(long)]
    pub check: bool,
}

fn positive(name: &str, ok: bool) -> Result<(), LabError> {
    if ok {
        Ok(())
    } else {
        Err(LabError::Usage(format!("--{name} must be positive")))
    }
}

pub(crate) fn sim_dim(d: u32, common: &Common) -> Result<q2free::Dim, LabError> {
    let dim = q2free::Dim::new(d).map_err(|e| LabError::Usage(e.to_string()))?;
    if d > DEFAULT_MAX_SIM_DIM && !common.allow_large {
        return Err(LabError::Usage(format!(
            "d = {d} exceeds {DEFAULT_MAX_SIM_DIM}; pass --allow-large to override"
        )));
    }
    Ok(dim)
}

impl Common {
    pub(crate) fn validate(&self) -> Result<(), LabError> {
        positive("workers", self.workers.is_none_or(|w| w > 0))
    }
}

impl RunArgs {
    pub fn subcube_dims(&self) -> Vec<u32> {
        if self.subcube_k.is_empty() {
            (1..=self.d.min(3)).collect()
        } else {
            self.subcube_k.clone()
        }
    }

    pub fn validate(&self) -> Result<q2free::Dim, LabError> {
        self.common.validate()?;
        positive("runs", self.runs > 0)?;
        positive("cadence", self.cadence.is_none_or(|c| c > 0))?;
        positive("sample-pairs", self.sample_pairs > 0)?;
        positive("degree-c", self.degree_c > 0.0)?;
        let d = sim_dim(self.d, &self.common)?;
        if let Some(&k) = self.subcube_k.iter().find(|&&k| k == 0 || k > self.d) {
            return Err(LabError::Usage(format!("--subcube-k {k} outside 1..={}", self.d)));
        }
        if !self.isolation_at.is_empty() && self.mode != ModeArg::Permutation {
            return Err(LabError::Usage("--isolation-at needs --mode permutation".into()));
        }
        Ok(d)
    }
}

impl SweepArgs {
    pub fn validate(&self) -> Result<Vec<q2free::Dim>, LabError> {
        self.common.validate()?;
        positive("runs", self.runs > 0)?;
        if self.d_min > self.d_max {
            return Err(LabError::Usage("--d-min exceeds --d-max".into()));
        }
        (self.d_min..=self.d_max).map(|d| sim_dim(d, &self.common)).collect()
    }
}

impl GoodArgs {
    pub fn validate(&self) -> Result<q2free::Dim, LabError> {
        self.common.validate()?;
        positive("runs", self.runs > 0)?;
        sim_dim(self.d, &self.common)
    }
}

impl OdeArgs {
    pub fn validate(&self) -> Result<(), LabError> {
        self.common.validate()?;
        positive("t-max", self.t_max > 0.0)?;
        positive("step", self.step > 0.0)
    }
}

impl OracleArgs {
    pub fn validate(&self) -> Result<q2free::Dim, LabError> {
        self.common.validate()?;
        let d = q2free::Dim::new(self.d).map_err(|e| LabError::Usage(e.to_string()))?;
        if self.d > q2free::oracle::EXHAUSTIVE_LIMIT {
            return Err(LabError::Usage(format!(
                "oracle is exhaustive and limited to d <= {}",
                q2free::oracle::EXHAUSTIVE_LIMIT
            )));
        }
        Ok(d)
    }
}
