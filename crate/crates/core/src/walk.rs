//! The lattice walk and its exact moments.
//!
//! Symbol `0` is rest, symbols `1..=3` move `+ε` along axes x, y, z and
//! symbols `4..=6` move `-ε` along the same axes. Every moment is computed in
//! closed form from the probability table; nothing here enumerates paths.

use std::io::Write;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rational, rational_from_int, to_decimal, Rational};
use crate::symbol::Symbol;
use crate::table::{Row, StepProbabilityTable};

/// Exact 3-vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vec3(pub [Rational; 3]);

impl Vec3 {
    pub fn zero() -> Self {
        Vec3(std::array::from_fn(|_| Rational::zero()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn dot(&self, other: &Vec3) -> Rational {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, k: &Rational) -> Vec3 {
        Vec3(std::array::from_fn(|i| &self.0[i] * k))
    }

    pub fn components(&self) -> &[Rational; 3] {
        &self.0
    }
}

impl Add for &Vec3 {
    type Output = Vec3;
    fn add(self, rhs: &Vec3) -> Vec3 {
        Vec3(std::array::from_fn(|i| &self.0[i] + &rhs.0[i]))
    }
}

impl Sub for &Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: &Vec3) -> Vec3 {
        Vec3(std::array::from_fn(|i| &self.0[i] - &rhs.0[i]))
    }
}

impl Neg for &Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3(std::array::from_fn(|i| -&self.0[i]))
    }
}

impl Mul<&Rational> for &Vec3 {
    type Output = Vec3;
    fn mul(self, k: &Rational) -> Vec3 {
        self.scale(k)
    }
}

impl AddAssign<&Vec3> for Vec3 {
    fn add_assign(&mut self, rhs: &Vec3) {
        for i in 0..3 {
            self.0[i] += &rhs.0[i];
        }
    }
}

/// Time unit `τ`, speed scale `c`, derived pitch `ε = cτ` and step horizon `N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LatticeConfigRepr", into = "LatticeConfigRepr")]
pub struct LatticeConfig {
    tau: Rational,
    c: Rational,
    eps: Rational,
    horizon: usize,
}

impl LatticeConfig {
    pub fn new(tau: Rational, c: Rational, horizon: usize) -> Result<Self> {
        if !tau.is_positive() {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {tau}")));
        }
        if !c.is_positive() {
            return Err(Error::InvalidConfig(format!("c must be positive, got {c}")));
        }
        let eps = &c * &tau;
        Ok(LatticeConfig { tau, c, eps, horizon })
    }

    pub fn tau(&self) -> &Rational {
        &self.tau
    }

    pub fn c(&self) -> &Rational {
        &self.c
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        LatticeConfig { horizon, ..self.clone() }
    }
}

#[derive(Serialize, Deserialize)]
struct LatticeConfigRepr {
    #[serde(with = "crate::rational::serde_rational")]
    tau: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    c: Rational,
    horizon: usize,
}

impl TryFrom<LatticeConfigRepr> for LatticeConfig {
    type Error = Error;
    fn try_from(r: LatticeConfigRepr) -> Result<Self> {
        LatticeConfig::new(r.tau, r.c, r.horizon)
    }
}

impl From<LatticeConfig> for LatticeConfigRepr {
    fn from(c: LatticeConfig) -> Self {
        LatticeConfigRepr { tau: c.tau, c: c.c, horizon: c.horizon }
    }
}

/// One of the seven displacements `s(0), ..., s(6)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepVector(Vec3);

impl StepVector {
    pub fn vector(&self) -> &Vec3 {
        &self.0
    }
}

/// Axis (0-based) and sign of a symbol's move, `None` for rest.
pub fn direction(symbol: Symbol) -> Option<(usize, i64)> {
    match symbol.index() {
        0 => None,
        j @ 1..=3 => Some((j - 1, 1)),
        j => Some((j - 4, -1)),
    }
}

pub fn step_vector(symbol: Symbol, cfg: &LatticeConfig) -> StepVector {
    let mut v = Vec3::zero();
    if let Some((axis, sign)) = direction(symbol) {
        v.0[axis] = cfg.eps() * rational_from_int(sign);
    }
    StepVector(v)
}

/// Directional drift `p(i) - p(i+3)` per axis.
pub fn drift(row: &Row) -> Vec3 {
    Vec3(std::array::from_fn(|i| &row[i + 1] - &row[i + 4]))
}

/// `E(S_n) = ε Σ_i [p_n(i) - p_n(i+3)] e_i`.
pub fn step_mean(n: usize, table: &StepProbabilityTable, cfg: &LatticeConfig) -> Result<Vec3> {
    Ok(drift(table.row(n)?).scale(cfg.eps()))
}

/// `v(n) = E(S_n) / τ`.
pub fn velocity(n: usize, table: &StepProbabilityTable, cfg: &LatticeConfig) -> Result<Vec3> {
    let inv_tau = cfg.tau().recip();
    Ok(step_mean(n, table, cfg)?.scale(&inv_tau))
}

/// `a(n) = (v(n+1) - v(n)) / τ`; needs rows `n` and `n + 1`.
pub fn acceleration(n: usize, table: &StepProbabilityTable, cfg: &LatticeConfig) -> Result<Vec3> {
    let next = velocity(n + 1, table, cfg)?;
    let here = velocity(n, table, cfg)?;
    Ok((&next - &here).scale(&cfg.tau().recip()))
}

/// `E(R_n) = Σ_{k<n} E(S_k)`; defined for `n <= table.len()`.
pub fn mean_position(n: usize, table: &StepProbabilityTable, cfg: &LatticeConfig) -> Result<Vec3> {
    check_prefix(n, table)?;
    let mut acc = Vec3::zero();
    for k in 0..n {
        acc += &step_mean(k, table, cfg)?;
    }
    Ok(acc)
}

/// `E(R_0), ..., E(R_n)` by cumulative summation.
pub fn mean_path(n: usize, table: &StepProbabilityTable, cfg: &LatticeConfig) -> Result<Vec<Vec3>> {
    check_prefix(n, table)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(Vec3::zero());
    for k in 0..n {
        let next = &out[k] + &step_mean(k, table, cfg)?;
        out.push(next);
    }
    Ok(out)
}

fn check_prefix(n: usize, table: &StepProbabilityTable) -> Result<()> {
    if n > table.len() {
        Err(Error::DepthExceedsTable { depth: n - 1, rows: table.len() })
    } else {
        Ok(())
    }
}

/// Trace of the covariance of `S_n`, computed as `E(X,X) - (M,M)` with
/// `E(X,X) = ε² Σ_{j=1}^{6} p_n(j)`.
pub fn step_trace(n: usize, table: &StepProbabilityTable, cfg: &LatticeConfig) -> Result<Rational> {
    let row = table.row(n)?;
    let moving: Rational = row[1..].iter().sum();
    let eps2 = cfg.eps() * cfg.eps();
    let second = moving * &eps2;
    let mean = step_mean(n, table, cfg)?;
    Ok(second - mean.dot(&mean))
}

/// `Tr(R_n) = Σ_{k<n} Tr(S_k)` (steps are independent).
pub fn walk_trace(n: usize, table: &StepProbabilityTable, cfg: &LatticeConfig) -> Result<Rational> {
    check_prefix(n, table)?;
    let mut acc = Rational::zero();
    for k in 0..n {
        acc += step_trace(k, table, cfg)?;
    }
    Ok(acc)
}

/// `E(R_{n+2}) - 2E(R_{n+1}) + E(R_n) - τ² a(n)`, identically zero.
pub fn recurrence_residual(
    n: usize,
    table: &StepProbabilityTable,
    cfg: &LatticeConfig,
) -> Result<Vec3> {
    let r0 = mean_position(n, table, cfg)?;
    let r1 = mean_position(n + 1, table, cfg)?;
    let r2 = mean_position(n + 2, table, cfg)?;
    let tau2 = cfg.tau() * cfg.tau();
    let second_difference = &(&r2 - &r1.scale(&rational_from_int(2))) + &r0;
    Ok(&second_difference - &acceleration(n, table, cfg)?.scale(&tau2))
}

/// Exact moments of the walk at one step index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentReport {
    pub n: usize,
    pub mean_position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub trace: Rational,
}

/// Reports for every `n` with `n + 1 < table.len()`, so that acceleration is
/// defined.
pub fn moment_reports(table: &StepProbabilityTable, cfg: &LatticeConfig) -> Result<Vec<MomentReport>> {
    let count = table.len().saturating_sub(1);
    let mut out = Vec::with_capacity(count);
    let mut position = Vec3::zero();
    let mut trace = Rational::zero();
    for n in 0..count {
        out.push(MomentReport {
            n,
            mean_position: position.clone(),
            velocity: velocity(n, table, cfg)?,
            acceleration: acceleration(n, table, cfg)?,
            trace: trace.clone(),
        });
        position += &step_mean(n, table, cfg)?;
        trace += step_trace(n, table, cfg)?;
    }
    Ok(out)
}

const MOMENT_COLUMNS: [&str; 11] = [
    "n", "E_x", "E_y", "E_z", "v_x", "v_y", "v_z", "a_x", "a_y", "a_z", "trace",
];

/// Writes reports as CSV: decimal columns at `precision` places followed by
/// the same quantities as exact `p/q` in `*_exact` columns.
pub fn write_moment_csv<W: Write>(
    reports: &[MomentReport],
    precision: usize,
    out: W,
) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidConfig(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = MOMENT_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(MOMENT_COLUMNS[1..].iter().map(|s| format!("{s}_exact")));
    w.write_record(&header).map_err(io)?;
    for r in reports {
        let values: Vec<&Rational> = r
            .mean_position
            .0
            .iter()
            .chain(r.velocity.0.iter())
            .chain(r.acceleration.0.iter())
            .chain(std::iter::once(&r.trace))
            .collect();
        let mut record = vec![r.n.to_string()];
        record.extend(values.iter().map(|v| to_decimal(v, precision)));
        record.extend(values.iter().map(|v| format_rational(v)));
        w.write_record(&record).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidConfig(format!("csv write failed: {e}")))?;
    Ok(())
}
