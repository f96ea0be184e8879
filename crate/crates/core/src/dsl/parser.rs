use std::fmt;

use super::{Declarations, Decl, Entry, Ident, Section, Span, StrLit};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub source: String,
    pub message: String,
    pub span: Span,
    /// What the parser would have accepted at `span`.
    pub expected: Option<String>,
}

impl std::error::Error for ParseError {}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.source, self.span, self.message)?;
        if let Some(expected) = &self.expected {
            write!(f, " (expected {expected})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Eq,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(_) => f.write_str("string"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span { start: self.pos, end: self.pos, line: self.line, column: self.column }
    }

    fn tokenize(mut self, source: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c == '#' {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                } else if c.is_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let mut span = self.here();
            let Some(c) = self.bump() else {
                out.push((Tok::Eof, span));
                return Ok(out);
            };
            let tok = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '=' => Tok::Eq,
                '-' if self.peek() == Some('>') => {
                    self.bump();
                    Tok::Arrow
                }
                '"' => Tok::Str(self.string(span, source)?),
                c if c.is_ascii_alphabetic() || c == '_' => {
                    while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                        self.bump();
                    }
                    Tok::Ident(self.src[span.start..self.pos].to_owned())
                }
                other => {
                    span.end = self.pos;
                    return Err(ParseError {
                        source: source.to_owned(),
                        message: format!("unexpected character `{other}`"),
                        span,
                        expected: None,
                    });
                }
            };
            span.end = self.pos;
            out.push((tok, span));
        }
    }

    fn string(&mut self, start: Span, source: &str) -> Result<String, ParseError> {
        let mut value = String::new();
        loop {
            let at = self.here();
            match self.bump() {
                None => {
                    let mut span = start;
                    span.end = self.pos;
                    return Err(ParseError {
                        source: source.to_owned(),
                        message: "unterminated string".into(),
                        span,
                        expected: Some("`\"`".into()),
                    });
                }
                Some('"') => return Ok(value),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => value.push(c),
                    _ => {
                        let mut span = at;
                        span.end = self.pos;
                        return Err(ParseError {
                            source: source.to_owned(),
                            message: "invalid escape sequence".into(),
                            span,
                            expected: Some("`\\\"` or `\\\\`".into()),
                        });
                    }
                },
                Some(c) => value.push(c),
            }
        }
    }
}

struct Parser<'a> {
    source: &'a str,
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_end(&self) -> usize {
        self.pos.checked_sub(1).map_or(0, |i| self.toks[i].1.end)
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            source: self.source.to_owned(),
            message: format!("unexpected {}", self.peek()),
            span: self.span(),
            expected: Some(expected.to_owned()),
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.advance().1)
        } else {
            Err(self.error(&tok.to_string()))
        }
    }

    fn keyword(&mut self, word: &str) -> PResult<Span> {
        match self.peek() {
            Tok::Ident(w) if w == word => Ok(self.advance().1),
            _ => Err(self.error(&format!("`{word}`"))),
        }
    }

    /// True when the next token is `word` used as a keyword, not as the id
    /// that starts a new `ID ":"` entry.
    fn at_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == word) && *self.peek_at(1) != Tok::Colon
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => Ok(Ident { name, span: self.advance().1 }),
            _ => Err(self.error("identifier")),
        }
    }

    fn string(&mut self) -> PResult<StrLit> {
        match self.peek().clone() {
            Tok::Str(value) => Ok(StrLit { value, span: self.advance().1 }),
            _ => Err(self.error("string")),
        }
    }

    fn id_list(&mut self, close: Tok) -> PResult<Vec<Ident>> {
        let mut ids = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            ids.push(self.ident()?);
        }
        self.expect(close)?;
        Ok(ids)
    }

    fn policy(&mut self) -> PResult<Declarations> {
        self.keyword("policy")?;
        let name = self.string()?;
        let mut entries = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(word) => {
                    let Some(section) = Section::from_keyword(&word) else {
                        return Err(ParseError {
                            source: self.source.to_owned(),
                            message: format!("unknown section `{word}`"),
                            span: self.span(),
                            expected: Some("a section name".into()),
                        });
                    };
                    self.advance();
                    self.expect(Tok::LBrace)?;
                    while *self.peek() != Tok::RBrace {
                        let start = self.span();
                        let decl = self.entry(section)?;
                        let span = Span { end: self.prev_end(), ..start };
                        entries.push(Entry { decl, span });
                    }
                    self.advance();
                }
                _ => return Err(self.error("a section name")),
            }
        }
        Ok(Declarations { source: self.source.to_owned(), name, entries })
    }

    fn entry(&mut self, section: Section) -> PResult<Decl> {
        Ok(match section {
            Section::Roles => {
                let id = self.ident()?;
                self.expect(Tok::Colon)?;
                Decl::Role { id, label: self.string()? }
            }
            Section::Groups => {
                let id = self.ident()?;
                self.expect(Tok::Colon)?;
                Decl::Group { id, label: self.string()? }
            }
            Section::Granularities => {
                let id = self.ident()?;
                self.expect(Tok::Colon)?;
                Decl::Granularity { id, description: self.string()? }
            }
            Section::RoleHierarchy => {
                let superior = self.ident()?;
                self.expect(Tok::Arrow)?;
                Decl::RoleEdge { superior, inferior: self.ident()? }
            }
            Section::Attributes => {
                let id = self.ident()?;
                self.expect(Tok::Colon)?;
                let label = self.string()?;
                let mut groups = None;
                if self.at_keyword("groups") {
                    self.advance();
                    self.expect(Tok::LParen)?;
                    groups = Some(self.id_list(Tok::RParen)?);
                }
                let mut collected = None;
                if self.at_keyword("collected") {
                    self.advance();
                    self.expect(Tok::Eq)?;
                    collected = Some(match self.peek() {
                        Tok::Ident(w) if w == "yes" => true,
                        Tok::Ident(w) if w == "no" => false,
                        _ => return Err(self.error("`yes` or `no`")),
                    });
                    self.advance();
                }
                Decl::Attribute { id, label, groups, collected }
            }
            Section::Aggregations => {
                self.expect(Tok::LParen)?;
                let left = self.ident()?;
                self.expect(Tok::Comma)?;
                let right = self.ident()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Arrow)?;
                Decl::Aggregation { left, right, product: self.ident()? }
            }
            Section::Tasks => {
                let id = self.ident()?;
                self.expect(Tok::Colon)?;
                let label = self.string()?;
                self.keyword("reads")?;
                let reads = self.ident()?;
                let via = if self.at_keyword("via") {
                    self.advance();
                    Some(self.ident()?)
                } else {
                    None
                };
                Decl::Task { id, label, reads, via }
            }
            Section::Purposes => {
                let id = self.ident()?;
                self.expect(Tok::Colon)?;
                let label = self.string()?;
                let mut tasks = Vec::new();
                if *self.peek() == Tok::Eq {
                    self.advance();
                    self.expect(Tok::LBracket)?;
                    tasks = self.id_list(Tok::RBracket)?;
                }
                let universal = self.at_keyword("universal");
                if universal {
                    self.advance();
                }
                Decl::Purpose { id, label, tasks, universal }
            }
            Section::RolePurpose => {
                let role = self.ident()?;
                self.keyword("allowed")?;
                let purpose = self.ident()?;
                Decl::RolePurpose { role, purpose, when: self.when_clause()? }
            }
            Section::PurposeTaskConditions => {
                let purpose = self.ident()?;
                self.keyword("task")?;
                let task = self.ident()?;
                self.keyword("when")?;
                Decl::PurposeTask { purpose, task, when: self.string()? }
            }
            Section::PurposeGroup => {
                let purpose = self.ident()?;
                self.keyword("allowed")?;
                self.keyword("group")?;
                let group = self.ident()?;
                Decl::PurposeGroup { purpose, group, when: self.when_clause()? }
            }
        })
    }

    fn when_clause(&mut self) -> PResult<Option<StrLit>> {
        if matches!(self.peek(), Tok::Ident(w) if w == "when") && matches!(self.peek_at(1), Tok::Str(_)) {
            self.advance();
            Ok(Some(self.string()?))
        } else {
            Ok(None)
        }
    }
}

/// Parses policy text. Diagnostics name the input `<input>`.
pub fn parse_policy(text: &str) -> Result<Declarations, ParseError> {
    parse_policy_named("<input>", text)
}

/// Parses policy text, naming the input `source` in diagnostics.
pub fn parse_policy_named(source: &str, text: &str) -> Result<Declarations, ParseError> {
    let lexer = Lexer { src: text, pos: 0, line: 1, column: 1 };
    let toks = lexer.tokenize(source)?;
    Parser { source, toks, pos: 0 }.policy()
}
