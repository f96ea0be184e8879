use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{Condition, Operand, RelOp, Value, ValueType, NOW};

/// Kleene three-valued truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriBool {
    True,
    False,
    Unknown,
}

impl TriBool {
    pub fn and(self, other: TriBool) -> TriBool {
        match (self, other) {
            (TriBool::False, _) | (_, TriBool::False) => TriBool::False,
            (TriBool::True, TriBool::True) => TriBool::True,
            _ => TriBool::Unknown,
        }
    }
}

impl From<bool> for TriBool {
    fn from(b: bool) -> Self {
        if b {
            TriBool::True
        } else {
            TriBool::False
        }
    }
}

impl fmt::Display for TriBool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriBool::True => "true",
            TriBool::False => "false",
            TriBool::Unknown => "unknown",
        })
    }
}

/// Variable bindings a condition is evaluated against. Names are
/// case-insensitive, like variables in condition text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalContext {
    bindings: BTreeMap<String, Value>,
}

impl EvalContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `name`, replacing any earlier binding.
    pub fn bind(&mut self, name: &str, value: Value) -> &mut Self {
        self.bindings.insert(name.to_ascii_lowercase(), value);
        self
    }

    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.bind(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(&name.to_ascii_lowercase())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("cannot compare {left} `{left_text}` {op} {right} `{right_text}`")]
    TypeMismatch {
        left: ValueType,
        left_text: String,
        op: RelOp,
        right: ValueType,
        right_text: String,
    },
    #[error("`{op}` is not defined on {ty} values")]
    Unordered { op: RelOp, ty: ValueType },
    #[error("`now` must be bound to a time of day, got {0}")]
    NowNotTime(ValueType),
}

/// Evaluates `cond` under `ctx`.
///
/// Each chain is the conjunction of its adjacent comparisons; chains combine
/// by Kleene conjunction. A comparison touching an unbound variable is
/// `Unknown`. Comparing values of different types, or ordering strings or
/// booleans, is an error no matter how the other comparisons turn out.
pub fn evaluate(cond: &Condition, ctx: &EvalContext) -> Result<TriBool, EvalError> {
    if let Some(v) = ctx.get(NOW) {
        if v.ty() != ValueType::Time {
            return Err(EvalError::NowNotTime(v.ty()));
        }
    }
    let mut result = TriBool::True;
    for chain in &cond.chains {
        for (lhs, op, rhs) in chain.pairs() {
            result = result.and(compare(lhs, op, rhs, ctx)?);
        }
    }
    Ok(result)
}

fn resolve<'a>(operand: &'a Operand, ctx: &'a EvalContext) -> Option<&'a Value> {
    match operand {
        Operand::Lit(v) => Some(v),
        Operand::Var(name) => ctx.get(name),
    }
}

pub(crate) fn compare(lhs: &Operand, op: RelOp, rhs: &Operand, ctx: &EvalContext) -> Result<TriBool, EvalError> {
    let (Some(a), Some(b)) = (resolve(lhs, ctx), resolve(rhs, ctx)) else {
        return Ok(TriBool::Unknown);
    };
    let ord = match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y),
        (Value::Time(x), Value::Time(y)) => Some(x.cmp(y)),
        (Value::Str(x), Value::Str(y)) if !op.is_ordering() => Some(x.cmp(y)),
        (Value::Bool(x), Value::Bool(y)) if !op.is_ordering() => Some(x.cmp(y)),
        (x, y) if x.ty() == y.ty() => return Err(EvalError::Unordered { op, ty: x.ty() }),
        (x, y) => {
            return Err(EvalError::TypeMismatch {
                left: x.ty(),
                left_text: lhs.to_string(),
                op,
                right: y.ty(),
                right_text: rhs.to_string(),
            })
        }
    };
    Ok(ord.map_or(TriBool::False, |o| TriBool::from(op.holds(o))))
}
