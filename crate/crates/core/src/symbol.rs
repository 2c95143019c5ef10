use std::fmt;

use crate::error::{Error, Result};

/// Number of move symbols: rest plus six axis directions.
pub const SYMBOL_COUNT: usize = 7;

/// One letter of the move alphabet `{0, ..., 6}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(u8);

impl Symbol {
    pub fn new(value: u64) -> Result<Self> {
        if value < SYMBOL_COUNT as u64 {
            Ok(Symbol(value as u8))
        } else {
            Err(Error::InvalidSymbol(value))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Symbol> {
        (0..SYMBOL_COUNT as u8).map(Symbol)
    }
}

impl TryFrom<u64> for Symbol {
    type Error = Error;
    fn try_from(value: u64) -> Result<Self> {
        Symbol::new(value)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A non-empty finite word `i0, ..., in` naming the prefix cylinder `D[i0,...,in]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaneWord(Vec<Symbol>);

impl PlaneWord {
    pub fn new(letters: Vec<Symbol>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::EmptyPlaneWord);
        }
        Ok(PlaneWord(letters))
    }

    pub fn from_indices(indices: &[u64]) -> Result<Self> {
        let letters = indices.iter().map(|&i| Symbol::new(i)).collect::<Result<Vec<_>>>()?;
        PlaneWord::new(letters)
    }

    pub fn letters(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when `word` starts with this plane's letters.
    pub fn is_prefix_of(&self, word: &[Symbol]) -> bool {
        word.len() >= self.0.len() && word[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for PlaneWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D[")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}
