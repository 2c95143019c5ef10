//! Text syntax for events.
//!
//! ```text
//! expr    := and ( '|' and )*
//! and     := unary ( '&' unary )*
//! unary   := '!' unary | primary
//! primary := 'D' '[' sym ( ',' sym )* ']'    plane
//!          | 'C' '(' int ',' sym ')'          hyperplane
//!          | '(' expr ')'
//! ```
//!
//! Whitespace is ignored. `!` binds tighter than `&`, which binds tighter
//! than `|`; binary operators associate to the left.

use std::fmt;

use thiserror::Error;

use crate::error::Result;
use crate::event::{EventArena, EventSet};
use crate::symbol::{PlaneWord, Symbol};

/// Largest coordinate index accepted in `C(n,i)`.
pub const MAX_COORDINATE: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventExpression {
    Plane(PlaneWord),
    Hyperplane { n: usize, symbol: Symbol },
    Not(Box<EventExpression>),
    And(Box<EventExpression>, Box<EventExpression>),
    Or(Box<EventExpression>, Box<EventExpression>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column}: {message}{}", expected_suffix(.expected))]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(", "))
    }
}

impl EventExpression {
    pub fn parse(text: &str) -> std::result::Result<Self, SyntaxError> {
        let mut p = Parser::new(text);
        let expr = p.or_expr()?;
        p.skip_ws();
        if p.peek().is_some() {
            return Err(p.error("unexpected trailing input", &["'|'", "'&'", "end of input"]));
        }
        Ok(expr)
    }

    /// Builds the event in `arena`.
    pub fn eval(&self, arena: &mut EventArena) -> Result<EventSet> {
        Ok(match self {
            EventExpression::Plane(w) => arena.plane(w),
            EventExpression::Hyperplane { n, symbol } => arena.hyperplane(*n, *symbol),
            EventExpression::Not(e) => {
                let inner = e.eval(arena)?;
                arena.complement(inner)?
            }
            EventExpression::And(a, b) => {
                let (x, y) = (a.eval(arena)?, b.eval(arena)?);
                arena.intersect(x, y)?
            }
            EventExpression::Or(a, b) => {
                let (x, y) = (a.eval(arena)?, b.eval(arena)?);
                arena.union(x, y)?
            }
        })
    }

    /// Largest coordinate index named by any literal.
    pub fn max_coordinate(&self) -> usize {
        match self {
            EventExpression::Plane(w) => w.len() - 1,
            EventExpression::Hyperplane { n, .. } => *n,
            EventExpression::Not(e) => e.max_coordinate(),
            EventExpression::And(a, b) | EventExpression::Or(a, b) => {
                a.max_coordinate().max(b.max_coordinate())
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            EventExpression::Or(..) => 0,
            EventExpression::And(..) => 1,
            EventExpression::Not(_) => 2,
            _ => 3,
        }
    }
}

fn write_operand(
    f: &mut fmt::Formatter<'_>,
    e: &EventExpression,
    min_prec: u8,
) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for EventExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventExpression::Plane(w) => write!(f, "{w}"),
            EventExpression::Hyperplane { n, symbol } => write!(f, "C({n},{symbol})"),
            EventExpression::Not(e) => {
                write!(f, "!")?;
                write_operand(f, e, 2)
            }
            EventExpression::And(a, b) => {
                write_operand(f, a, 1)?;
                write!(f, " & ")?;
                write_operand(f, b, 2)
            }
            EventExpression::Or(a, b) => {
                write_operand(f, a, 0)?;
                write!(f, " | ")?;
                write_operand(f, b, 1)
            }
        }
    }
}

/// Deepest parenthesis nesting the parser accepts.
pub const MAX_NESTING: usize = 256;

struct Parser {
    chars: Vec<char>,
    pos: usize,
    nesting: usize,
}

impl Parser {
    fn new(src: &str) -> Self {
        Parser { chars: src.chars().collect(), pos: 0, nesting: 0 }
    }

    fn location(&self, pos: usize) -> (usize, usize) {
        let mut line = 1;
        let mut column = 1;
        for &c in &self.chars[..pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        (line, column)
    }

    fn error_at(&self, pos: usize, message: &str, expected: &[&str]) -> SyntaxError {
        let (line, column) = self.location(pos);
        SyntaxError {
            line,
            column,
            message: message.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn error(&self, message: &str, expected: &[&str]) -> SyntaxError {
        self.error_at(self.pos, message, expected)
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> std::result::Result<(), SyntaxError> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self.describe_next();
            let want = format!("'{c}'");
            Err(self.error(&format!("unexpected {found}"), &[want.as_str()]))
        }
    }

    fn describe_next(&self) -> String {
        match self.peek() {
            Some(c) => format!("'{c}'"),
            None => "end of input".to_string(),
        }
    }

    fn or_expr(&mut self) -> std::result::Result<EventExpression, SyntaxError> {
        let mut lhs = self.and_expr()?;
        while self.eat('|') {
            let rhs = self.and_expr()?;
            lhs = EventExpression::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> std::result::Result<EventExpression, SyntaxError> {
        let mut lhs = self.unary()?;
        while self.eat('&') {
            let rhs = self.unary()?;
            lhs = EventExpression::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> std::result::Result<EventExpression, SyntaxError> {
        // Nested negations are unrolled to keep the parser's stack flat.
        let mut negations = 0usize;
        while self.eat('!') {
            negations += 1;
        }
        let mut e = self.primary()?;
        for _ in 0..negations {
            e = EventExpression::Not(Box::new(e));
        }
        Ok(e)
    }

    fn primary(&mut self) -> std::result::Result<EventExpression, SyntaxError> {
        const START: [&str; 4] = ["'D['", "'C('", "'('", "'!'"];
        self.skip_ws();
        match self.peek() {
            Some('D') => {
                self.pos += 1;
                self.expect('[')?;
                let mut letters = vec![self.symbol()?];
                while self.eat(',') {
                    letters.push(self.symbol()?);
                }
                self.expect(']')?;
                Ok(EventExpression::Plane(PlaneWord::new(letters).expect("at least one letter")))
            }
            Some('C') => {
                self.pos += 1;
                self.expect('(')?;
                let (start, n) = self.integer()?;
                if n > MAX_COORDINATE as u64 {
                    return Err(self.error_at(
                        start,
                        &format!("coordinate index {n} exceeds {MAX_COORDINATE}"),
                        &[],
                    ));
                }
                self.expect(',')?;
                let symbol = self.symbol()?;
                self.expect(')')?;
                Ok(EventExpression::Hyperplane { n: n as usize, symbol })
            }
            Some('(') => {
                if self.nesting == MAX_NESTING {
                    return Err(self.error(&format!("parentheses nested deeper than {MAX_NESTING}"), &[]));
                }
                self.pos += 1;
                self.nesting += 1;
                let e = self.or_expr()?;
                self.expect(')')?;
                self.nesting -= 1;
                Ok(e)
            }
            _ => {
                let found = self.describe_next();
                Err(self.error(&format!("unexpected {found}"), &START))
            }
        }
    }

    fn integer(&mut self) -> std::result::Result<(usize, u64), SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            let found = self.describe_next();
            return Err(self.error(&format!("unexpected {found}"), &["integer"]));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let value = text
            .parse::<u64>()
            .map_err(|_| self.error_at(start, &format!("integer {text} is too large"), &[]))?;
        Ok((start, value))
    }

    fn symbol(&mut self) -> std::result::Result<Symbol, SyntaxError> {
        let (start, value) = self.integer()?;
        Symbol::new(value).map_err(|_| {
            self.error_at(start, &format!("symbol {value} out of range 0..6"), &["symbol 0..6"])
        })
    }
}
