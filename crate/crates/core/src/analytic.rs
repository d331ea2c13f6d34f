//! Good edges and the probability formulas attached to them.
//!
//! With independent uniform clocks, an edge is *good* when it is not the
//! latest of the four edges in any square containing it. A good edge always
//! survives into the final graph. Its probability is
//! `p_d = ∫_0^1 (1 - x^3)^(d-1) dx`, and for two edges at a common vertex the
//! probability that both are good is `r_d = ∫∫ g(x, y, d)`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cube::{all_edges, square_partners, Dim, EdgeRef, VertexId};
use crate::edgeset::EdgeSet;
use crate::engine::ClockAssignment;
use crate::error::{Error, Result};
use crate::quad;

/// Whether `e` is not the latest edge of any square through it.
pub fn is_good(clocks: &ClockAssignment, e: EdgeRef) -> bool {
    let d = clocks.dim();
    let te = clocks.get(e);
    (0..d.get())
        .filter(|&j| j != e.dir)
        .all(|j| square_partners(e, j).iter().any(|&f| clocks.get(f) > te))
}

/// The set of good edges under `clocks`.
pub fn good_edges(clocks: &ClockAssignment) -> EdgeSet {
    let d = clocks.dim();
    let mut set = EdgeSet::empty(d);
    for e in all_edges(d).filter(|&e| is_good(clocks, e)) {
        set.insert(e);
    }
    set
}

/// Fraction of pairs of edges sharing a vertex that are both good; the mean
/// over vertices and direction pairs of the joint indicator.
pub fn joint_good_fraction(clocks: &ClockAssignment) -> f64 {
    let d = clocks.dim();
    let good = good_edges(clocks);
    let n = d.get();
    let mut hits = 0u64;
    let mut total = 0u64;
    for v in 0..d.vertex_count() as u32 {
        for a in 0..n {
            let ea = EdgeRef::at(VertexId(v), a);
            for b in a + 1..n {
                total += 1;
                if good.contains(ea) && good.contains(EdgeRef::at(VertexId(v), b)) {
                    hits += 1;
                }
            }
        }
    }
    hits as f64 / total as f64
}

/// Exact probability in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationalProb(BigRational);

impl RationalProb {
    pub fn new(value: BigRational) -> Result<Self> {
        if value < BigRational::zero() || value > BigRational::one() {
            return Err(Error::InvalidArgument(format!("{value} is not a probability")));
        }
        Ok(RationalProb(value))
    }

    pub fn from_ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Self::new(BigRational::new(num.into(), den.into()))
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().expect("probabilities are finite")
    }
}

impl fmt::Display for RationalProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for RationalProb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RationalProb {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        let (n, d) = text.split_once('/').unwrap_or((&text, "1"));
        let parse = |s: &str| s.trim().parse::<BigInt>().map_err(serde::de::Error::custom);
        let (n, d) = (parse(n)?, parse(d)?);
        if d.is_zero() {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        RationalProb::new(BigRational::new(n, d)).map_err(serde::de::Error::custom)
    }
}

fn binomial_row(n: u32) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let next = &row[k as usize] * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

/// `∫_0^1 (1 - x^3)^(d-1) dx = Σ_k (-1)^k C(d-1, k) / (3k + 1)`, exactly.
pub fn p_exact_series(d: Dim) -> RationalProb {
    series(d.get())
}

fn series(d: u32) -> RationalProb {
    let n = d - 1;
    let sum = binomial_row(n)
        .into_iter()
        .enumerate()
        .fold(BigRational::zero(), |acc, (k, c)| {
            let term = BigRational::new(c, BigInt::from(3 * k + 1));
            if k % 2 == 0 {
                acc + term
            } else {
                acc - term
            }
        });
    RationalProb(sum)
}

fn degree(d: u32) -> Result<u32> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok(d)
}

/// Same integral by adaptive quadrature. Takes a plain degree since the
/// integrals make sense beyond the simulable dimensions.
pub fn p_quadrature(d: u32, tol: f64) -> Result<f64> {
    let e = (degree(d)? - 1) as i32;
    quad::integrate(|x| (1.0 - x * x * x).powi(e), 0.0, 1.0, tol)
}

/// `E|good edges| = d 2^(d-1) p_d`.
pub fn expected_good(d: Dim) -> f64 {
    d.edge_count() as f64 * p_exact_series(d).to_f64()
}

/// `(1 - x^3)^(d-1) (1 - y^3)^(d-1)`, whose integral is `p_d^2`.
pub fn f_integrand(x: f64, y: f64, d: u32) -> f64 {
    let e = d as i32 - 1;
    (1.0 - x.powi(3)).powi(e) * (1.0 - y.powi(3)).powi(e)
}

/// `(1 - x^3 - y^3 + x^2 y^2 min(x,y))^(d-2) (1 - max(x,y)^2)`, whose integral
/// is the probability that two edges at a common vertex are both good.
pub fn g_integrand(x: f64, y: f64, d: u32) -> f64 {
    let base = 1.0 - x.powi(3) - y.powi(3) + x * x * y * y * x.min(y);
    base.powi(d as i32 - 2) * (1.0 - x.max(y).powi(2))
}

/// `r_d = ∫∫ g`, split along the diagonal where `min`/`max` switch. By
/// symmetry only the half `x < y` is integrated.
pub fn joint_r(d: u32, tol: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument("joint probability needs d >= 2".into()));
    }
    let n = d;
    let half = quad::integrate_2d(|x, y| g_integrand(x, y, n), 0.0, 1.0, |_| 0.0, |y| y, tol / 2.0)?;
    Ok(2.0 * half)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRow {
    pub d: u32,
    pub p: f64,
    /// `p_exact_series(d)` as a float, for cross-checking `p`.
    pub p_exact: f64,
    pub r: f64,
    /// `d^(2/3) (r - p^2)`.
    pub scaled_cov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTable {
    pub rows: Vec<CovarianceRow>,
    /// `scaled_cov` strictly decreasing down the table.
    pub strictly_decreasing: bool,
    /// `|scaled_cov|` strictly decreasing down the table.
    pub magnitude_decreasing: bool,
}

pub fn covariance_decay_table(ds: &[u32], tol: f64) -> Result<CovarianceTable> {
    let rows = ds
        .iter()
        .map(|&d| {
            let p = p_quadrature(d, tol)?;
            let r = joint_r(d, tol)?;
            Ok(CovarianceRow {
                d,
                p,
                p_exact: series(degree(d)?).to_f64(),
                r,
                scaled_cov: f64::from(d).powf(2.0 / 3.0) * (r - p * p),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let strictly_decreasing = rows.windows(2).all(|w| w[1].scaled_cov < w[0].scaled_cov);
    let magnitude_decreasing = rows
        .windows(2)
        .all(|w| w[1].scaled_cov.abs() < w[0].scaled_cov.abs());
    Ok(CovarianceTable {
        rows,
        strictly_decreasing,
        magnitude_decreasing,
    })
}
