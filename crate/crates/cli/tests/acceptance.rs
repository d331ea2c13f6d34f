//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are printed whether or not they pass.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use q2free::analytic::{
    covariance_decay_table, expected_good, good_edges, joint_good_fraction, joint_r, p_exact_series,
    p_quadrature,
};
use q2free::cube::edge_index;
use q2free::engine::{contains_q2, run_permutation_seeded, Mode, Observer};
use q2free::ode::{closed_form, integrate, rhs};
use q2free::oracle::{exact_m_distribution, permutation_m_distribution};
use q2free::trajectory::{rebuild_statuses, wxy_with};
use q2free::{is_saturated, rng, run_uniform, Dim, EdgeRef, PairStatus, ProcessState, RationalProb, RunOptions};
use q2lab::output::{ls_slope, mean_se};
use q2lab::runner::{execute, par_runs, RunSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn dim(d: u32) -> Dim {
    Dim::new(d).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Runs `f(seed)` for `runs` seeds derived from `master`, in parallel.
fn many<T: Send>(master: u64, runs: u64, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    par_runs(None, master, runs, |_, seed| Ok(f(seed)))
        .unwrap()
        .into_iter()
        .map(|(_, r)| r.unwrap())
        .collect()
}

fn c1_oracle_equivalence() -> Outcome {
    let d = dim(3);
    let dist = exact_m_distribution(d).unwrap();
    let runs = 100_000;
    let uniform = many(7, runs, |s| run_uniform(d, s, &RunOptions::default(), &mut ()).unwrap().m);
    let scan = many(7, runs, |s| {
        run_permutation_seeded(d, s, &RunOptions::default(), &mut ()).unwrap().0.m
    });
    let (tu, tp) = (dist.tv_distance(&uniform), dist.tv_distance(&scan));
    ensure(
        tu < 0.02 && tp < 0.02,
        format!("d=3, 10^5 runs: TV uniform {tu:.5}, permutation {tp:.5} (< 0.02)"),
    )
}

fn c2_degenerate() -> Outcome {
    let mut bad = 0;
    for (d, expect) in [(1, 1), (2, 3)] {
        for s in 0..1000 {
            let u = run_uniform(dim(d), s, &RunOptions::default(), &mut ()).unwrap().m;
            let p = run_permutation_seeded(dim(d), s, &RunOptions::default(), &mut ()).unwrap().0.m;
            bad += usize::from(u != expect) + usize::from(p != expect);
        }
    }
    let all_perms = permutation_m_distribution(dim(2)).unwrap();
    let exhaustive = all_perms.masses == BTreeMap::from([(3, RationalProb::from_ratio(1, 1).unwrap())]);
    ensure(
        bad == 0 && exhaustive,
        format!("10^3 runs per mode at d=1,2: {bad} deviations; all 24 orders at d=2 give M=3: {exhaustive}"),
    )
}

fn c3_saturation() -> Outcome {
    let mut checked = 0;
    let mut bad = 0;
    for d in 3..=12 {
        let ok = many(u64::from(d), 10, |s| {
            let r = run_uniform(dim(d), s, &RunOptions::default(), &mut ()).unwrap();
            is_saturated(&r.final_edges, dim(d))
        });
        checked += ok.len();
        bad += ok.iter().filter(|&&b| !b).count();
    }
    ensure(bad == 0, format!("{checked} final graphs, d=3..12: {bad} not saturated"))
}

/// Recounts the pre-step state from the present edges alone.
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
        let y = wxy_with(u, v, d, |f| statuses[edge_index(f, d).unwrap().get()]).unwrap().y;
        self.pending = Some((open, y));
    }

    fn after_add(&mut self, state: &ProcessState, _e: EdgeRef, _closed: u64) {
        let (before, y) = self.pending.take().unwrap();
        self.steps += 1;
        let after = rebuild_statuses(&state.present_edges(), state.dim())
            .iter()
            .filter(|s| **s == PairStatus::Open)
            .count() as u64;
        if after != before - 1 - u64::from(y) || contains_q2(&state.present_edges(), state.dim()) {
            self.violations += 1;
        }
    }
}

fn c4_step_identity() -> Outcome {
    let mut audit = StepAudit::default();
    let r = run_uniform(dim(8), 8, &RunOptions::default(), &mut audit).unwrap();
    ensure(
        audit.violations == 0 && audit.steps == r.m,
        format!("full d=8 run, {} steps: {} violations", audit.steps, audit.violations),
    )
}

fn c5_good_containment() -> Outcome {
    let ok = many(5, 100, |s| {
        let (r, clocks) = run_permutation_seeded(dim(10), s, &RunOptions::default(), &mut ()).unwrap();
        good_edges(&clocks).is_subset(&r.final_edges)
    });
    let pass = ok.iter().filter(|&&b| b).count();
    ensure(pass == 100, format!("d=10: {pass}/100 runs with good edges inside the final graph"))
}

fn c6_expected_good() -> Outcome {
    let d = dim(10);
    let goods: Vec<f64> = many(6, 2000, |s| {
        let (_, clocks) = run_permutation_seeded(d, s, &RunOptions::default(), &mut ()).unwrap();
        good_edges(&clocks).len() as f64
    });
    let (mean, se) = mean_se(&goods);
    let expected = expected_good(d);
    let mut worst = 0.0f64;
    for n in 2..=30 {
        let d = dim(n);
        let diff = (p_quadrature(n, 1e-13).unwrap() - p_exact_series(d).to_f64()).abs();
        worst = worst.max(diff);
    }
    ensure(
        (mean - expected).abs() <= 2.0 * se && worst <= 1e-10,
        format!(
            "d=10, 2000 runs: mean {mean:.3} vs {expected:.3} ({:.2} SE); max |quadrature - series| over d=2..30 {worst:.1e}",
            (mean - expected) / se
        ),
    )
}

fn c7_scaled_floor() -> Outcome {
    let mut min = f64::INFINITY;
    for d in 10..=16 {
        let scaled = many(u64::from(d), 5, |s| {
            run_uniform(dim(d), s, &RunOptions::default(), &mut ()).unwrap().m as f64 / dim(d).time_scale()
        });
        min = scaled.into_iter().fold(min, f64::min);
    }
    ensure(min >= 0.4, format!("d=10..16, 5 runs each: min M/(d^(2/3)2^d) {min:.4} (>= 0.4)"))
}

fn c8_slope() -> Outcome {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ratios = Vec::new();
    for d in 8..=18 {
        let spec = RunSpec::plain(dim(d), Mode::Uniform);
        let ms: Vec<f64> = many(rng::run_seed(8, u64::from(d)), 5, |s| execute(&spec, 0, s).unwrap().m as f64);
        let (mean, _) = mean_se(&ms);
        xs.push(f64::from(d).ln());
        ys.push((mean / f64::from(d).exp2()).ln());
        ratios.push(format!("{d}:{:.3}", mean / q2free::ode::conjecture_scale(f64::from(d))));
    }
    let slope = ls_slope(&xs, &ys);
    ensure(
        (0.62..=0.85).contains(&slope),
        format!(
            "d=8..18, 5 runs each: slope {slope:.4} in [0.62, 0.85]; M/((log d)^(1/3) d^(2/3) 2^d) {} \
             (reported only: the log factor is not separable at these d)",
            ratios.join(" ")
        ),
    )
}

fn c9_ode() -> Outcome {
    let traj = integrate(1.5, 1e-3).unwrap();
    let sup = traj.max_error();
    let h = 1e-5;
    let (mut residual, mut ident) = (0.0f64, 0.0f64);
    for k in 1..=1500 {
        let t = k as f64 * 1e-3;
        let c = closed_form(t);
        let (lo, hi) = (closed_form(t - h), closed_form(t + h));
        let fd = [hi.q - lo.q, hi.w - lo.w, hi.x - lo.x, hi.y - lo.y].map(|v| v / (2.0 * h));
        let f = rhs(&c).unwrap();
        for i in 0..4 {
            residual = residual.max((fd[i] - f[i]).abs());
        }
        ident = ident
            .max((c.w - 8.0 * c.q.powi(3)).abs())
            .max((c.y / c.q - 24.0 * t * t).abs());
    }
    ensure(
        sup < 1e-8 && residual < 1e-6 && ident < 1e-10,
        format!("sup error {sup:.2e} (< 1e-8), residual {residual:.2e} (< 1e-6), identities {ident:.2e} (< 1e-10)"),
    )
}

fn c10a_covariance_decreasing() -> Outcome {
    let table = covariance_decay_table(&[10, 20, 40, 80], 1e-12).unwrap();
    let values: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{}:{:.5}", r.d, r.scaled_cov))
        .collect();
    ensure(
        table.strictly_decreasing,
        format!(
            "d^(2/3)(r - p^2) at d=10,20,40,80: {} strictly decreasing: {}; |.| decreasing: {}",
            values.join(" "),
            table.strictly_decreasing,
            table.magnitude_decreasing
        ),
    )
}

fn c10b_joint_monte_carlo() -> Outcome {
    let d = dim(6);
    let fractions: Vec<f64> = many(10, 4000, |s| {
        let (_, clocks) = run_permutation_seeded(d, s, &RunOptions::default(), &mut ()).unwrap();
        joint_good_fraction(&clocks)
    });
    let (mean, se) = mean_se(&fractions);
    let r = joint_r(6, 1e-12).unwrap();
    ensure(
        (mean - r).abs() <= 3.0 * se,
        format!("d=6, 4000 runs: joint goodness {mean:.5} vs r_6 {r:.5} ({:.2} SE)", (mean - r) / se),
    )
}

fn c11_isolation() -> Outcome {
    let d = dim(12);
    let j = 1u64 << 10;
    let mut spec = RunSpec::plain(d, Mode::Permutation);
    spec.isolation_at = vec![j];
    let fr: Vec<f64> = many(11, 50, |s| execute(&spec, 0, s).unwrap().isolated_at[0].1);
    let (mean, se) = mean_se(&fr);
    let bound = (-1.0f64).exp() - 0.05;
    ensure(
        mean >= bound,
        format!("d=12, j=2^10, 50 runs: isolated fraction {mean:.4} (se {se:.1e}) >= {bound:.4}"),
    )
}

fn lab(args: &[&str], out: &Path, workers: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_q2lab"))
        .args(args)
        .args(["--out", out.to_str().unwrap(), "--workers", workers])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn c12_determinism() -> Outcome {
    let commands: [&[&str]; 6] = [
        &["run", "--d", "9", "--runs", "12", "--seed", "3"],
        &["run", "--d", "8", "--runs", "6", "--mode", "permutation", "--isolation-at", "64", "--format", "json"],
        &["sweep", "--d-min", "5", "--d-max", "9", "--runs", "4"],
        &["goodedges", "--d", "7", "--runs", "30"],
        &["ode", "--t-max", "1.5"],
        &["oracle", "--d", "3"],
    ];
    let mut differing = Vec::new();
    for args in commands {
        let tmp = tempfile::tempdir().unwrap();
        let outs: Vec<_> = ["1", "4", "1"]
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let dir = tmp.path().join(k.to_string());
                let ok = lab(args, &dir, w);
                (ok, dir_bytes(&dir))
            })
            .collect();
        if !outs.iter().all(|o| o.0) || outs.windows(2).any(|w| w[0].1 != w[1].1) || outs[0].1.is_empty() {
            differing.push(args[0]);
        }
    }
    ensure(
        differing.is_empty(),
        format!(
            "{} commands, workers 1/4/1: outputs byte-identical{}",
            commands.len(),
            if differing.is_empty() { String::new() } else { format!(" except {differing:?}") }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("1  oracle equivalence", c1_oracle_equivalence),
        ("2  degenerate exactness", c2_degenerate),
        ("3  saturation", c3_saturation),
        ("4  step identity", c4_step_identity),
        ("5  good-edge containment", c5_good_containment),
        ("6  expected good count", c6_expected_good),
        ("7  scaled final size", c7_scaled_floor),
        ("8  growth exponent", c8_slope),
        ("9  ODE", c9_ode),
        ("10 covariance decay", c10a_covariance_decreasing),
        ("10 joint goodness (MC)", c10b_joint_monte_carlo),
        ("11 isolated pairs", c11_isolation),
        ("12 determinism", c12_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance line(s) failed");
        ExitCode::FAILURE
    }
}
