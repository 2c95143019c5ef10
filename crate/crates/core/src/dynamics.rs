//! Evolution of step probabilities under zero and non-zero forces.
//!
//! Forces act on the six moving symbols: `p_{n+1}(j) = p_n(j) + γ f_n(j)` for
//! `j = 1..=6`. The rest probability `p_{n+1}(0)` takes up the slack so each
//! row still sums to one. Entries that leave `[0, 1]` are reported as
//! [`Error::ProbabilityOverflow`]; nothing is clamped.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, rational_from_int, rational_from_ints, Rational};
use crate::table::{validate_row, Row, StepProbabilityTable};
use crate::walk::{acceleration, drift, LatticeConfig, Vec3};

/// Directional forces `f(1), ..., f(6)` for one step.
pub type ForceVector = [Rational; 6];

/// Per-step directional forces plus the conversion factor `γ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForceSchedule {
    gamma: Rational,
    steps: Vec<ForceVector>,
}

impl ForceSchedule {
    pub fn new(gamma: Rational, steps: Vec<ForceVector>) -> Result<Self> {
        if !gamma.is_positive() {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        Ok(ForceSchedule { gamma, steps })
    }

    pub fn constant(gamma: Rational, force: ForceVector, steps: usize) -> Result<Self> {
        Self::new(gamma, vec![force; steps])
    }

    pub fn zero(gamma: Rational, steps: usize) -> Result<Self> {
        Self::constant(gamma, std::array::from_fn(|_| Rational::zero()), steps)
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn steps(&self) -> &[ForceVector] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The shared force vector when every step applies the same forces.
    pub fn constant_force(&self) -> Option<&ForceVector> {
        let first = self.steps.first()?;
        self.steps.iter().all(|f| f == first).then_some(first)
    }

    pub fn force(&self, n: usize) -> Result<&ForceVector> {
        self.steps.get(n).ok_or(Error::IndexOutOfRange { index: n, limit: self.steps.len() })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: ScheduleRepr =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        repr.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ScheduleRepr::from(self)).expect("schedule serialises")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleRepr {
    Steps {
        gamma: String,
        steps: Vec<StepRepr>,
    },
    Constant {
        gamma: String,
        constant_f: Vec<String>,
        steps_count: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRepr {
    pub f: Vec<String>,
}

fn parse_force(cells: &[String]) -> Result<ForceVector> {
    if cells.len() != 6 {
        return Err(Error::InvalidConfig(format!(
            "force vector has {} entries, expected 6",
            cells.len()
        )));
    }
    let parsed = cells.iter().map(|c| parse_rational(c)).collect::<Result<Vec<_>>>()?;
    Ok(parsed.try_into().expect("length checked"))
}

impl TryFrom<ScheduleRepr> for ForceSchedule {
    type Error = Error;
    fn try_from(repr: ScheduleRepr) -> Result<Self> {
        match repr {
            ScheduleRepr::Steps { gamma, steps } => ForceSchedule::new(
                parse_rational(&gamma)?,
                steps.iter().map(|s| parse_force(&s.f)).collect::<Result<_>>()?,
            ),
            ScheduleRepr::Constant { gamma, constant_f, steps_count } => {
                ForceSchedule::constant(parse_rational(&gamma)?, parse_force(&constant_f)?, steps_count)
            }
        }
    }
}

impl From<&ForceSchedule> for ScheduleRepr {
    fn from(s: &ForceSchedule) -> Self {
        ScheduleRepr::Steps {
            gamma: format_rational(&s.gamma),
            steps: s
                .steps
                .iter()
                .map(|f| StepRepr { f: f.iter().map(format_rational).collect() })
                .collect(),
        }
    }
}

/// Resultant force `F_i(n) = f_n(i) - f_n(i+3)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultantForce(pub Vec3);

pub fn resultant_force(schedule: &ForceSchedule, n: usize) -> Result<ResultantForce> {
    let f = schedule.force(n)?;
    Ok(ResultantForce(Vec3(std::array::from_fn(|i| &f[i] - &f[i + 3]))))
}

/// Copies row `from_step` onto rows `from_step..=to_step`.
pub fn evolve_free(
    table: &StepProbabilityTable,
    from_step: usize,
    to_step: usize,
) -> Result<StepProbabilityTable> {
    if to_step >= table.len() {
        return Err(Error::IndexOutOfRange { index: to_step, limit: table.len() });
    }
    if from_step > to_step {
        return Err(Error::IndexOutOfRange { index: from_step, limit: to_step + 1 });
    }
    let mut rows = table.rows().to_vec();
    let source = rows[from_step].clone();
    for row in &mut rows[from_step + 1..=to_step] {
        *row = source.clone();
    }
    StepProbabilityTable::new(rows)
}

fn check_entries(row: &Row, step: usize) -> Result<()> {
    for (j, p) in row.iter().enumerate() {
        if p.is_negative() || *p > Rational::one() {
            return Err(Error::ProbabilityOverflow {
                step,
                symbol: j,
                value: format_rational(p),
            });
        }
    }
    Ok(())
}

fn forced_step(row: &Row, force: &ForceVector, gamma: &Rational, step: usize) -> Result<Row> {
    let mut next: Row = row.clone();
    for j in 1..=6 {
        next[j] = &row[j] + gamma * &force[j - 1];
    }
    let moving: Rational = next[1..].iter().sum();
    next[0] = Rational::one() - moving;
    check_entries(&next, step)?;
    Ok(next)
}

/// Applies the schedule to row 0 of `table`, producing `schedule.len() + 1`
/// rows. Only row 0 of the input is used.
pub fn evolve_forced(
    table: &StepProbabilityTable,
    schedule: &ForceSchedule,
) -> Result<StepProbabilityTable> {
    let first = table.row(0)?.clone();
    let mut rows = Vec::with_capacity(schedule.len() + 1);
    rows.push(first);
    for (n, force) in schedule.steps().iter().enumerate() {
        let next = forced_step(&rows[n], force, schedule.gamma(), n)?;
        rows.push(next);
    }
    StepProbabilityTable::new(rows)
}

/// Proportionality constant `β = τ² / (ε γ)` between force and acceleration.
pub fn beta(cfg: &LatticeConfig, gamma: &Rational) -> Rational {
    (cfg.tau() * cfg.tau()) / (cfg.eps() * gamma)
}

/// `F(n) - β a(n)` for a table evolved from `schedule`.
pub fn newton2_residual(
    evolved: &StepProbabilityTable,
    schedule: &ForceSchedule,
    cfg: &LatticeConfig,
    n: usize,
) -> Result<Vec3> {
    let force = resultant_force(schedule, n)?;
    if n + 1 >= evolved.len() {
        return Err(Error::IndexOutOfRange { index: n + 1, limit: evolved.len() });
    }
    let a = acceleration(n, evolved, cfg)?;
    Ok(&force.0 - &a.scale(&beta(cfg, schedule.gamma())))
}

/// Coefficients of the linear drift `p_n(i) - p_n(i+3) = a_i n + b_i` under a
/// constant force: `a_i = γ [f(i) - f(i+3)]`, `b_i = p_0(i) - p_0(i+3)`.
pub fn constant_force_coefficients(row0: &Row, force: &ForceVector, gamma: &Rational) -> (Vec3, Vec3) {
    let a = Vec3(std::array::from_fn(|i| gamma * (&force[i] - &force[i + 3])));
    (a, drift(row0))
}

/// Closed-form mean position `E(R_n) = ε n ((n-1)/2 a + b)` under a constant
/// force. Rows `0..=n` of the forced evolution are checked for validity.
pub fn constant_force_closed_form(
    row0: &Row,
    force: &ForceVector,
    gamma: &Rational,
    cfg: &LatticeConfig,
    n: usize,
) -> Result<Vec3> {
    validate_row(row0)?;
    if !gamma.is_positive() {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    // Row k is p_0 + kγf on the moving symbols; checked directly, not by iteration.
    for k in 1..=n {
        let kg = gamma * rational_from_int(k as i64);
        let mut row: Row = row0.clone();
        for j in 1..=6 {
            row[j] = &row0[j] + &kg * &force[j - 1];
        }
        let moving: Rational = row[1..].iter().sum();
        row[0] = Rational::one() - moving;
        check_entries(&row, k - 1)?;
    }
    let (a, b) = constant_force_coefficients(row0, force, gamma);
    let nn = rational_from_int(n as i64);
    let half = if n == 0 { Rational::zero() } else { rational_from_ints(n as i64 - 1, 2) };
    let inner = &a.scale(&half) + &b;
    Ok(inner.scale(&(cfg.eps() * nn)))
}
