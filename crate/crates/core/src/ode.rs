//! Heuristic trajectories of the process.
//!
//! At scaled time `t = i / (d^(2/3) 2^d)` the open-pair count is modelled as
//! `q(t) d 2^d` and the per-pair path counts as `w(t) d`, `x(t) d^(2/3)` and
//! `y(t) d^(1/3)`, with
//!
//! ```text
//! q' = -y,   w' = -3yw/q,   x' = 3w/q - 2xy/q,   y' = 2x/q - y^2/q,
//! q(0) = 1/2, w(0) = 1, x(0) = y(0) = 0.
//! ```

use serde::{Deserialize, Serialize};

use crate::cube::Dim;
use crate::error::{Error, Result};
use crate::trajectory::TrajectoryRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub t: f64,
    pub q: f64,
    pub w: f64,
    pub x: f64,
    pub y: f64,
}

impl OdeState {
    pub const INITIAL: OdeState = OdeState {
        t: 0.0,
        q: 0.5,
        w: 1.0,
        x: 0.0,
        y: 0.0,
    };

    fn components(&self) -> [f64; 4] {
        [self.q, self.w, self.x, self.y]
    }

    fn from_components(t: f64, c: [f64; 4]) -> Self {
        OdeState {
            t,
            q: c[0],
            w: c[1],
            x: c[2],
            y: c[3],
        }
    }
}

/// Derivatives `(dq, dw, dx, dy)`.
pub fn rhs(s: &OdeState) -> Result<[f64; 4]> {
    if s.q.is_nan() || s.q <= 0.0 {
        return Err(Error::Singularity { t: s.t, q: s.q });
    }
    Ok([
        -s.y,
        -3.0 * s.y * s.w / s.q,
        3.0 * s.w / s.q - 2.0 * s.x * s.y / s.q,
        2.0 * s.x / s.q - s.y * s.y / s.q,
    ])
}

/// The explicit solution from the initial conditions.
pub fn closed_form(t: f64) -> OdeState {
    let t3 = t * t * t;
    let e8 = (-8.0 * t3).exp();
    OdeState {
        t,
        q: 0.5 * e8,
        w: (-24.0 * t3).exp(),
        x: 6.0 * t * (-16.0 * t3).exp(),
        y: 12.0 * t * t * e8,
    }
}

/// Where `x` peaks: `t = (1/48)^(1/3)`.
pub fn x_peak_time() -> f64 {
    (1.0f64 / 48.0).cbrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub states: Vec<OdeState>,
    pub step: f64,
    pub order: u32,
}

impl OdeTrajectory {
    /// Largest absolute deviation of any component from [`closed_form`].
    pub fn max_error(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| {
                let exact = closed_form(s.t).components();
                s.components()
                    .into_iter()
                    .zip(exact)
                    .map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn axpy(y: [f64; 4], h: f64, k: [f64; 4]) -> [f64; 4] {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]]
}

fn rk4_step(s: &OdeState, h: f64) -> Result<OdeState> {
    let y = s.components();
    let k1 = rhs(s)?;
    let k2 = rhs(&OdeState::from_components(s.t + h / 2.0, axpy(y, h / 2.0, k1)))?;
    let k3 = rhs(&OdeState::from_components(s.t + h / 2.0, axpy(y, h / 2.0, k2)))?;
    let k4 = rhs(&OdeState::from_components(s.t + h, axpy(y, h, k3)))?;
    let mut next = y;
    for i in 0..4 {
        next[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(OdeState::from_components(s.t + h, next))
}

/// Classical fixed-step RK4 from the initial conditions to `t_max`. The last
/// step is shortened to land on `t_max` exactly.
pub fn integrate(t_max: f64, step: f64) -> Result<OdeTrajectory> {
    if t_max.is_nan() || t_max <= 0.0 || step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "t_max ({t_max}) and step ({step}) must be positive"
        )));
    }
    let n = (t_max / step - 1e-9).ceil() as usize;
    let mut states = Vec::with_capacity(n + 1);
    let mut s = OdeState::INITIAL;
    states.push(s);
    for k in 1..=n {
        let target = (k as f64 * step).min(t_max);
        let mut next = rk4_step(&s, target - s.t)?;
        next.t = target;
        states.push(next);
        s = next;
    }
    Ok(OdeTrajectory {
        states,
        step,
        order: 4,
    })
}

/// `(log d)^(1/3) d^(2/3) 2^d`, the conjectured order of the final edge count.
/// Takes a real `d` so the formula can be evaluated off the integers.
pub fn conjecture_scale(d: f64) -> f64 {
    d.ln().cbrt() * d.powf(2.0 / 3.0) * d.exp2()
}

/// Empirical trajectory against the heuristic at one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub i: u64,
    pub t: f64,
    pub q_emp: f64,
    pub q: f64,
    pub w_emp: f64,
    pub w: f64,
    pub x_emp: f64,
    pub x: f64,
    pub y_emp: f64,
    pub y: f64,
    pub y_zero_fraction: f64,
}

/// Scales each record (`O/(d 2^d)`, mean `W/d`, `X/d^(2/3)`, `Y/d^(1/3)` over
/// sampled Open pairs) and pairs it with the closed-form values at its `t`.
pub fn overlay(records: &[TrajectoryRecord], d: Dim) -> Vec<OverlayRow> {
    let df = f64::from(d.get());
    let n = d.vertex_count() as f64;
    records
        .iter()
        .map(|r| {
            let c = closed_form(r.t);
            OverlayRow {
                i: r.i,
                t: r.t,
                q_emp: r.open as f64 / (df * n),
                q: c.q,
                w_emp: r.wxy_mean[0] / df,
                w: c.w,
                x_emp: r.wxy_mean[1] / df.powf(2.0 / 3.0),
                x: c.x,
                y_emp: r.wxy_mean[2] / df.cbrt(),
                y: c.y,
                y_zero_fraction: r.y_zero_fraction,
            }
        })
        .collect()
}
