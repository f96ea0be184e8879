use thiserror::Error;

use super::{Chain, Condition, Operand, RelOp, TimeOfDay, Value};

/// A condition that does not parse, or whose literal operands cannot be compared.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct ConditionError {
    /// Byte offset into the condition text.
    pub offset: usize,
    pub message: String,
}

impl ConditionError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        Self { offset, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Lit(Value),
    Op(RelOp),
    And,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_char() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    /// Next token and its starting offset; `None` at end of input.
    fn next(&mut self) -> Result<Option<(usize, Tok)>, ConditionError> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok(None);
        };
        let rest = &self.src[start..];
        let tok = if let Some(op) = ["<=", ">=", "==", "!=", "<", ">"].iter().find(|op| rest.starts_with(**op)) {
            self.pos += op.len();
            Tok::Op(match *op {
                "<=" => RelOp::Le,
                ">=" => RelOp::Ge,
                "==" => RelOp::Eq,
                "!=" => RelOp::Ne,
                "<" => RelOp::Lt,
                _ => RelOp::Gt,
            })
        } else if c == '"' {
            Tok::Lit(Value::Str(self.string()?))
        } else if c.is_ascii_digit() || (c == '-' && rest[1..].starts_with(|d: char| d.is_ascii_digit())) {
            Tok::Lit(self.number_or_time()?)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            self.pos += len;
            let word = rest[..len].to_ascii_lowercase();
            match word.as_str() {
                "and" => Tok::And,
                "true" => Tok::Lit(Value::Bool(true)),
                "false" => Tok::Lit(Value::Bool(false)),
                _ => Tok::Ident(word),
            }
        } else if c == '=' {
            return Err(ConditionError::new(start, "unexpected `=`; equality is written `==`"));
        } else {
            return Err(ConditionError::new(start, format!("unexpected character `{c}`")));
        };
        Ok(Some((start, tok)))
    }

    fn string(&mut self) -> Result<String, ConditionError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(c) = self.peek_char() else {
                return Err(ConditionError::new(start, "unterminated string literal"));
            };
            self.pos += c.len_utf8();
            match c {
                '"' => return Ok(out),
                '\\' => match self.peek_char() {
                    Some(e @ ('"' | '\\')) => {
                        self.pos += 1;
                        out.push(e);
                    }
                    _ => return Err(ConditionError::new(self.pos - 1, "invalid escape in string literal")),
                },
                _ => out.push(c),
            }
        }
    }

    fn digits(&mut self) -> &'a str {
        let rest = &self.src[self.pos..];
        let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn number_or_time(&mut self) -> Result<Value, ConditionError> {
        let start = self.pos;
        let negative = self.peek_char() == Some('-');
        if negative {
            self.pos += 1;
        }
        let int_part = self.digits();
        match self.peek_char() {
            Some(':') if !negative => {
                self.pos += 1;
                let minutes = self.digits();
                if int_part.len() > 2 || minutes.len() != 2 {
                    return Err(ConditionError::new(start, "time of day must be written HH:MM"));
                }
                let (h, m) = (int_part.parse().unwrap_or(99), minutes.parse().unwrap_or(99));
                TimeOfDay::new(h, m)
                    .map(Value::Time)
                    .ok_or_else(|| ConditionError::new(start, format!("{int_part}:{minutes} is not a valid time of day")))
            }
            Some('.') => {
                self.pos += 1;
                if self.digits().is_empty() {
                    return Err(ConditionError::new(self.pos, "expected digits after decimal point"));
                }
                self.finish_number(start)
            }
            _ => self.finish_number(start),
        }
    }

    fn finish_number(&mut self, start: usize) -> Result<Value, ConditionError> {
        if self.peek_char().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            return Err(ConditionError::new(self.pos, "identifier may not start with a digit"));
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Value::Number)
            .map_err(|_| ConditionError::new(start, format!("invalid number `{text}`")))
    }
}

/// Parses condition text into its AST.
///
/// Adjacent operands whose types are known without a context (literals and
/// `now`) must agree, and strings and booleans only support `==` and `!=`.
pub fn parse_condition(text: &str) -> Result<Condition, ConditionError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    let end = text.len();
    let mut iter = toks.into_iter().peekable();
    let mut chains = Vec::new();
    loop {
        let (head_at, head) = operand(iter.next(), end)?;
        let mut links = Vec::new();
        let mut prev = (head_at, head.clone());
        while let Some((op_at, Tok::Op(op))) = iter.peek().cloned() {
            iter.next();
            let (at, rhs) = operand(iter.next(), end)?;
            check_pair(&prev.1, op, &rhs, op_at)?;
            links.push((op, rhs.clone()));
            prev = (at, rhs);
        }
        if links.is_empty() {
            let at = iter.peek().map_or(end, |(at, _)| *at);
            return Err(ConditionError::new(at, "expected a comparison operator"));
        }
        chains.push(Chain { head, links });
        match iter.next() {
            None => break,
            Some((_, Tok::And)) => continue,
            Some((at, _)) => return Err(ConditionError::new(at, "expected `and` or end of condition")),
        }
    }
    Ok(Condition { chains })
}

fn operand(tok: Option<(usize, Tok)>, end: usize) -> Result<(usize, Operand), ConditionError> {
    match tok {
        Some((at, Tok::Ident(name))) => Ok((at, Operand::Var(name))),
        Some((at, Tok::Lit(v))) => Ok((at, Operand::Lit(v))),
        Some((at, Tok::Op(op))) => Err(ConditionError::new(at, format!("expected an operand, found `{op}`"))),
        Some((at, Tok::And)) => Err(ConditionError::new(at, "expected an operand, found `and`")),
        None => Err(ConditionError::new(end, "expected an operand, found end of condition")),
    }
}

fn check_pair(lhs: &Operand, op: RelOp, rhs: &Operand, at: usize) -> Result<(), ConditionError> {
    let (lt, rt) = (lhs.static_type(), rhs.static_type());
    if let (Some(a), Some(b)) = (lt, rt) {
        if a != b {
            return Err(ConditionError::new(at, format!("cannot compare {a} `{lhs}` with {b} `{rhs}`")));
        }
    }
    if op.is_ordering() {
        if let Some(t) = lt.into_iter().chain(rt).find(|t| !t.is_ordered()) {
            return Err(ConditionError::new(at, format!("`{op}` is not defined on {t} values")));
        }
    }
    Ok(())
}

pub(super) fn parse_literal(text: &str) -> Result<Value, ConditionError> {
    let mut lexer = Lexer::new(text);
    let value = match lexer.next()? {
        Some((_, Tok::Lit(v))) => v,
        Some((at, _)) => return Err(ConditionError::new(at, "expected a literal value")),
        None => return Err(ConditionError::new(0, "expected a literal value")),
    };
    lexer.skip_ws();
    if lexer.pos != text.len() {
        return Err(ConditionError::new(lexer.pos, "trailing input after literal"));
    }
    Ok(value)
}
