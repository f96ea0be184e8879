//! The condition predicate language attached to grants and task bindings.
//!
//! ```text
//! cond  := chain ("and" chain)*
//! chain := operand (relop operand)+
//! relop := < | <= | > | >= | == | !=
//! ```
//!
//! Operands are variables, numbers, `HH:MM` times of day, double-quoted
//! strings or `true`/`false`. Variable names and keywords are
//! case-insensitive and normalized to lower case. `now` is an ordinary
//! variable of time type that the caller binds; nothing here reads a clock.

mod eval;
mod parse;

pub use eval::{evaluate, EvalContext, EvalError, TriBool};
pub use parse::{parse_condition, ConditionError};

use std::fmt;

/// Reserved variable holding the current time of day.
pub const NOW: &str = "now";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl RelOp {
    pub const ALL: [RelOp; 6] = [RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge, RelOp::Eq, RelOp::Ne];

    pub fn as_str(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, RelOp::Eq | RelOp::Ne)
    }

    fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            RelOp::Lt => ord == Less,
            RelOp::Le => ord != Greater,
            RelOp::Gt => ord == Greater,
            RelOp::Ge => ord != Less,
            RelOp::Eq => ord == Equal,
            RelOp::Ne => ord != Equal,
        }
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A time of day with minute precision, 00:00 to 23:59.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay {
    minutes: u16,
}

impl TimeOfDay {
    pub fn new(hour: u16, minute: u16) -> Option<Self> {
        (hour < 24 && minute < 60).then_some(Self { minutes: hour * 60 + minute })
    }

    pub fn hour(self) -> u16 {
        self.minutes / 60
    }

    pub fn minute(self) -> u16 {
        self.minutes % 60
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.hour(), self.minute())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Time(TimeOfDay),
    Str(String),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Number,
    Time,
    Str,
    Bool,
}

impl ValueType {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueType::Number => "number",
            ValueType::Time => "time",
            ValueType::Str => "string",
            ValueType::Bool => "boolean",
        }
    }

    fn is_ordered(self) -> bool {
        matches!(self, ValueType::Number | ValueType::Time)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Value {
    pub fn ty(&self) -> ValueType {
        match self {
            Value::Number(_) => ValueType::Number,
            Value::Time(_) => ValueType::Time,
            Value::Str(_) => ValueType::Str,
            Value::Bool(_) => ValueType::Bool,
        }
    }

    /// Parses a single literal: integer, decimal, `HH:MM`, `true`/`false`
    /// or a double-quoted string.
    pub fn parse_literal(text: &str) -> Result<Value, ConditionError> {
        parse::parse_literal(text)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => write!(f, "{n}"),
            Value::Time(t) => write!(f, "{t}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    if c == '"' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Var(String),
    Lit(Value),
}

impl Operand {
    /// Type known without a context: literals, and the reserved `now`.
    pub fn static_type(&self) -> Option<ValueType> {
        match self {
            Operand::Lit(v) => Some(v.ty()),
            Operand::Var(name) if name == NOW => Some(ValueType::Time),
            Operand::Var(_) => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => f.write_str(v),
            Operand::Lit(v) => write!(f, "{v}"),
        }
    }
}

/// `a < b <= c` means `a < b and b <= c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub head: Operand,
    pub links: Vec<(RelOp, Operand)>,
}

impl Chain {
    /// The adjacent comparisons this chain abbreviates.
    pub fn pairs(&self) -> impl Iterator<Item = (&Operand, RelOp, &Operand)> {
        let lefts = std::iter::once(&self.head).chain(self.links.iter().map(|(_, o)| o));
        lefts.zip(self.links.iter()).map(|(l, (op, r))| (l, *op, r))
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for (op, operand) in &self.links {
            write!(f, " {op} {operand}")?;
        }
        Ok(())
    }
}

/// A conjunction of comparison chains. `Display` renders the canonical text.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub chains: Vec<Chain>,
}

impl Condition {
    /// Variable names referenced anywhere in the condition, sorted.
    pub fn variables(&self) -> Vec<&str> {
        let mut vars: Vec<&str> = self
            .chains
            .iter()
            .flat_map(|c| std::iter::once(&c.head).chain(c.links.iter().map(|(_, o)| o)))
            .filter_map(|o| match o {
                Operand::Var(v) => Some(v.as_str()),
                Operand::Lit(_) => None,
            })
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, chain) in self.chains.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{chain}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Condition {
    type Err = ConditionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_condition(s)
    }
}
