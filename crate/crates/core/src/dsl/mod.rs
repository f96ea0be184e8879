//! The sectioned policy file format.
//!
//! ```text
//! policy        := "policy" STRING section*
//! section       := roles | role_hierarchy | groups | attributes | aggregations
//!                | granularities | tasks | purposes | role_purpose
//!                | purpose_task_conditions | purpose_group
//! roles         := "roles" "{" (ID ":" STRING)* "}"
//! role_hierarchy:= "role_hierarchy" "{" (ID "->" ID)* "}"
//! groups        := "groups" "{" (ID ":" STRING)* "}"
//! attributes    := "attributes" "{" attr* "}"
//! attr          := ID ":" STRING ["groups" "(" ID ("," ID)* ")"] ["collected" "=" ("yes"|"no")]
//! aggregations  := "aggregations" "{" ("(" ID "," ID ")" "->" ID)* "}"
//! granularities := "granularities" "{" (ID ":" STRING)* "}"
//! tasks         := "tasks" "{" (ID ":" STRING "reads" ID ["via" ID])* "}"
//! purposes      := "purposes" "{" (ID ":" STRING ["=" "[" ID ("," ID)* "]"] ["universal"])* "}"
//! role_purpose  := "role_purpose" "{" (ID "allowed" ID ["when" STRING])* "}"
//! purpose_task_conditions := "purpose_task_conditions" "{" (ID "task" ID "when" STRING)* "}"
//! purpose_group := "purpose_group" "{" (ID "allowed" "group" ID ["when" STRING])* "}"
//! ```
//!
//! Strings are double-quoted with `\"` and `\\` escapes; `#` starts a comment
//! that runs to the end of the line.
//!
//! An attribute id may be declared a second time to record another
//! collection statement, e.g. `d7: "Credit card" collected = no` after an
//! earlier `collected = yes`. The restatement must repeat the label and may
//! not list groups.

mod lower;
mod parser;
mod serialize;

pub use lower::{lower, LowerError, LowerErrorKind, LowerErrors};
pub use parser::{parse_policy, parse_policy_named, ParseError};
pub use serialize::serialize;

use std::fmt;

use crate::model::PolicyModel;

/// Byte range of a source construct plus the 1-based line and column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrLit {
    pub value: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Section {
    Roles,
    RoleHierarchy,
    Groups,
    Attributes,
    Aggregations,
    Granularities,
    Tasks,
    Purposes,
    RolePurpose,
    PurposeTaskConditions,
    PurposeGroup,
}

impl Section {
    /// Canonical order, used by the serializer.
    pub const ALL: [Section; 11] = [
        Section::Roles,
        Section::RoleHierarchy,
        Section::Groups,
        Section::Attributes,
        Section::Aggregations,
        Section::Granularities,
        Section::Tasks,
        Section::Purposes,
        Section::RolePurpose,
        Section::PurposeTaskConditions,
        Section::PurposeGroup,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Section::Roles => "roles",
            Section::RoleHierarchy => "role_hierarchy",
            Section::Groups => "groups",
            Section::Attributes => "attributes",
            Section::Aggregations => "aggregations",
            Section::Granularities => "granularities",
            Section::Tasks => "tasks",
            Section::Purposes => "purposes",
            Section::RolePurpose => "role_purpose",
            Section::PurposeTaskConditions => "purpose_task_conditions",
            Section::PurposeGroup => "purpose_group",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Section> {
        Section::ALL.into_iter().find(|s| s.keyword() == word)
    }
}

/// One parsed entry of a section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Role { id: Ident, label: StrLit },
    RoleEdge { superior: Ident, inferior: Ident },
    Group { id: Ident, label: StrLit },
    Attribute { id: Ident, label: StrLit, groups: Option<Vec<Ident>>, collected: Option<bool> },
    Aggregation { left: Ident, right: Ident, product: Ident },
    Granularity { id: Ident, description: StrLit },
    Task { id: Ident, label: StrLit, reads: Ident, via: Option<Ident> },
    Purpose { id: Ident, label: StrLit, tasks: Vec<Ident>, universal: bool },
    RolePurpose { role: Ident, purpose: Ident, when: Option<StrLit> },
    PurposeTask { purpose: Ident, task: Ident, when: StrLit },
    PurposeGroup { purpose: Ident, group: Ident, when: Option<StrLit> },
}

impl Decl {
    pub fn section(&self) -> Section {
        match self {
            Decl::Role { .. } => Section::Roles,
            Decl::RoleEdge { .. } => Section::RoleHierarchy,
            Decl::Group { .. } => Section::Groups,
            Decl::Attribute { .. } => Section::Attributes,
            Decl::Aggregation { .. } => Section::Aggregations,
            Decl::Granularity { .. } => Section::Granularities,
            Decl::Task { .. } => Section::Tasks,
            Decl::Purpose { .. } => Section::Purposes,
            Decl::RolePurpose { .. } => Section::RolePurpose,
            Decl::PurposeTask { .. } => Section::PurposeTaskConditions,
            Decl::PurposeGroup { .. } => Section::PurposeGroup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub decl: Decl,
    /// Covers the whole entry.
    pub span: Span,
}

/// Parsed, not yet resolved, contents of a policy file in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declarations {
    /// Name of the input, used in diagnostics.
    pub source: String,
    pub name: StrLit,
    pub entries: Vec<Entry>,
}

impl Declarations {
    pub fn count(&self, section: Section) -> usize {
        self.entries.iter().filter(|e| e.decl.section() == section).count()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Lower(#[from] LowerErrors),
}

/// Parses and lowers policy text in one step.
pub fn load_policy(source: &str, text: &str) -> Result<PolicyModel, LoadError> {
    let decls = parse_policy_named(source, text)?;
    Ok(lower(&decls)?)
}
