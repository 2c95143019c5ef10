//! Per-step move probabilities `p_n(0..6)`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, rational_from_ints, Rational};
use crate::symbol::{Symbol, SYMBOL_COUNT};

/// Seven exact probabilities for one time index.
pub type Row = [Rational; SYMBOL_COUNT];

/// Rows of exact step probabilities; row `n` gives the law of the `n`-th move.
///
/// Every entry is non-negative and every row sums to exactly one. The number
/// of rows bounds which coordinates an event may constrain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepProbabilityTable {
    rows: Vec<Row>,
}

pub fn validate_row(row: &Row) -> Result<()> {
    if let Some((j, p)) = row.iter().enumerate().find(|(_, p)| p.is_negative()) {
        return Err(Error::InvalidTable(format!(
            "p({j}) = {} is negative",
            format_rational(p)
        )));
    }
    let total: Rational = row.iter().sum();
    if !total.is_one() {
        return Err(Error::InvalidTable(format!(
            "row sums to {}, expected 1",
            format_rational(&total)
        )));
    }
    Ok(())
}

pub fn uniform_row() -> Row {
    std::array::from_fn(|_| rational_from_ints(1, SYMBOL_COUNT as i64))
}

/// Builds a row from integer weights, normalised by their sum.
pub fn row_from_weights(weights: [u64; SYMBOL_COUNT]) -> Result<Row> {
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return Err(Error::InvalidTable("all weights are zero".into()));
    }
    Ok(std::array::from_fn(|j| {
        rational_from_ints(weights[j] as i64, total as i64)
    }))
}

impl StepProbabilityTable {
    pub fn new(rows: Vec<Row>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidTable("table has no rows".into()));
        }
        for (n, row) in rows.iter().enumerate() {
            validate_row(row).map_err(|e| match e {
                Error::InvalidTable(msg) => Error::InvalidTable(format!("row {n}: {msg}")),
                other => other,
            })?;
        }
        Ok(StepProbabilityTable { rows })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        Self::constant(uniform_row(), len)
    }

    pub fn constant(row: Row, len: usize) -> Result<Self> {
        Self::new(vec![row; len])
    }

    /// Number of rows; coordinates `0..len()` may be constrained.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, n: usize) -> Result<&Row> {
        self.rows.get(n).ok_or(Error::DepthExceedsTable {
            depth: n,
            rows: self.rows.len(),
        })
    }

    pub fn prob(&self, n: usize, symbol: Symbol) -> Result<&Rational> {
        Ok(&self.row(n)?[symbol.index()])
    }

    /// Product `p_0(i0) * ... * p_k(ik)` for the plane spelled by `letters`.
    pub fn plane_probability(&self, letters: &[Symbol]) -> Result<Rational> {
        let mut acc = Rational::one();
        for (n, s) in letters.iter().enumerate() {
            let p = self.prob(n, *s)?;
            if p.is_zero() {
                return Ok(Rational::zero());
            }
            acc *= p;
        }
        Ok(acc)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidTable(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("table serialises")
    }
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    rows: Vec<Vec<String>>,
}

impl Serialize for StepProbabilityTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(format_rational).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepProbabilityTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = TableRepr::deserialize(d)?;
        let rows = repr
            .rows
            .iter()
            .map(|r| parse_row(r).map_err(D::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        StepProbabilityTable::new(rows).map_err(D::Error::custom)
    }
}

/// Parses seven `p/q` strings into a row without checking normalisation.
pub fn parse_row<S: AsRef<str>>(cells: &[S]) -> Result<Row> {
    if cells.len() != SYMBOL_COUNT {
        return Err(Error::InvalidTable(format!(
            "row has {} entries, expected {SYMBOL_COUNT}",
            cells.len()
        )));
    }
    let parsed = cells
        .iter()
        .map(|c| parse_rational(c.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(parsed.try_into().expect("length checked"))
}
