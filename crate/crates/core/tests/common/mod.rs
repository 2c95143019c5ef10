//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use cylwalk::rational::rational_from_ints;
use cylwalk::table::Row;
use cylwalk::{EventExpression, PlaneWord, Rational, StepProbabilityTable, Symbol};
use num_traits::{One, Zero};
use proptest::prelude::*;

pub fn sym(i: u64) -> Symbol {
    Symbol::new(i).unwrap()
}

/// Rows with small integer weights; roughly one weight in four is zero.
pub fn row_strategy() -> impl Strategy<Value = Row> {
    prop::array::uniform7(prop_oneof![1 => Just(0u64), 3 => 1u64..20])
        .prop_filter("non-zero total", |w| w.iter().sum::<u64>() > 0)
        .prop_map(|w| {
            let total: u64 = w.iter().sum();
            std::array::from_fn(|j| rational_from_ints(w[j] as i64, total as i64))
        })
}

pub fn table_strategy(rows: usize) -> impl Strategy<Value = StepProbabilityTable> {
    prop::collection::vec(row_strategy(), rows)
        .prop_map(|rows| StepProbabilityTable::new(rows).unwrap())
}

/// Random set-algebra expressions constraining coordinates `< depth`.
pub fn expr_strategy(depth: usize) -> impl Strategy<Value = EventExpression> {
    let leaf = prop_oneof![
        prop::collection::vec(0u64..7, 1..=depth).prop_map(|w| {
            EventExpression::Plane(PlaneWord::from_indices(&w).unwrap())
        }),
        (0..depth, 0u64..7).prop_map(|(n, i)| EventExpression::Hyperplane { n, symbol: sym(i) }),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| EventExpression::Not(Box::new(e))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| EventExpression::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| EventExpression::Or(Box::new(a), Box::new(b))),
        ]
    })
}

/// Direct semantics of an expression on a trajectory prefix long enough to
/// cover every literal.
pub fn oracle_contains(e: &EventExpression, word: &[Symbol]) -> bool {
    match e {
        EventExpression::Plane(w) => w.is_prefix_of(word),
        EventExpression::Hyperplane { n, symbol } => word[*n] == *symbol,
        EventExpression::Not(a) => !oracle_contains(a, word),
        EventExpression::And(a, b) => oracle_contains(a, word) && oracle_contains(b, word),
        EventExpression::Or(a, b) => oracle_contains(a, word) || oracle_contains(b, word),
    }
}

/// All `7^depth` words in lexicographic order.
pub fn all_words(depth: usize) -> Vec<Vec<Symbol>> {
    let mut out = vec![Vec::new()];
    for _ in 0..depth {
        out = out
            .into_iter()
            .flat_map(|w| {
                Symbol::all().map(move |s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

/// Truth vector of an expression over all words of length `depth`.
pub fn truth_vector(e: &EventExpression, words: &[Vec<Symbol>]) -> Vec<bool> {
    words.iter().map(|w| oracle_contains(e, w)).collect()
}

/// Σ over member words of the product of their table entries.
pub fn oracle_measure(
    e: &EventExpression,
    words: &[Vec<Symbol>],
    table: &StepProbabilityTable,
) -> Rational {
    let mut total = Rational::zero();
    for w in words {
        if oracle_contains(e, w) {
            let mut p = Rational::one();
            for (n, s) in w.iter().enumerate() {
                p *= &table.rows()[n][s.index()];
            }
            total += p;
        }
    }
    total
}
