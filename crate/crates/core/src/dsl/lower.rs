use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{Declarations, Decl, Ident, Span, StrLit};
use crate::condition::{parse_condition, Condition};
use crate::model::{
    validate, Aggregation, Attribute, AttributeGroup, CollectionStatus, GranularityFn, PolicyModel, Purpose,
    PurposeGroupGrant, PurposeTaskCondition, Role, RoleEdge, RolePurposeGrant, Task, ValidationIssue,
    ValidationRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerErrorKind {
    UnknownId,
    DuplicateId,
    /// A `purpose_task_conditions` entry names a task outside the purpose.
    TaskNotInPurpose,
    /// The same edge, aggregation, grant or task binding appears twice.
    DuplicateEntry,
    InvalidCondition,
    /// Any other structural invariant, such as a role cycle.
    Structural,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerError {
    pub kind: LowerErrorKind,
    pub span: Span,
    pub message: String,
}

/// Every problem found while resolving a set of declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerErrors {
    pub source: String,
    pub errors: Vec<LowerError>,
}

impl std::error::Error for LowerErrors {}

impl fmt::Display for LowerErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}:{}: {}", self.source, e.span, e.message)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Scope<'a> {
    ids: HashMap<&'a str, usize>,
}

impl<'a> Scope<'a> {
    fn get(&self, id: &str) -> Option<usize> {
        self.ids.get(id).copied()
    }
}

struct Lowering<'a> {
    errors: Vec<LowerError>,
    roles: Scope<'a>,
    groups: Scope<'a>,
    attrs: Scope<'a>,
    grans: Scope<'a>,
    tasks: Scope<'a>,
    purposes: Scope<'a>,
}

impl<'a> Lowering<'a> {
    fn error(&mut self, kind: LowerErrorKind, span: Span, message: String) {
        self.errors.push(LowerError { kind, span, message });
    }

    fn define(&mut self, kind: &str, id: &'a Ident, index: usize, which: fn(&mut Self) -> &mut Scope<'a>) -> bool {
        if which(self).ids.contains_key(id.name.as_str()) {
            self.error(LowerErrorKind::DuplicateId, id.span, format!("duplicate {kind} id `{}`", id.name));
            false
        } else {
            which(self).ids.insert(&id.name, index);
            true
        }
    }

    fn resolve(&mut self, kind: &str, id: &Ident, which: fn(&Self) -> &Scope<'a>) -> bool {
        let found = which(self).get(&id.name).is_some();
        if !found {
            self.error(LowerErrorKind::UnknownId, id.span, format!("unknown {kind} `{}`", id.name));
        }
        found
    }

    fn condition(&mut self, lit: &StrLit) -> Option<Condition> {
        match parse_condition(&lit.value) {
            Ok(c) => Some(c),
            Err(e) => {
                self.error(
                    LowerErrorKind::InvalidCondition,
                    lit.span,
                    format!("invalid condition \"{}\": {e}", lit.value),
                );
                None
            }
        }
    }
}

/// Resolves declarations into a validated [`PolicyModel`], preserving
/// declaration order. All problems are reported together, each with the
/// span of the offending declaration.
pub fn lower(decls: &Declarations) -> Result<PolicyModel, LowerErrors> {
    use LowerErrorKind::*;
    let mut cx = Lowering {
        errors: Vec::new(),
        roles: Scope::default(),
        groups: Scope::default(),
        attrs: Scope::default(),
        grans: Scope::default(),
        tasks: Scope::default(),
        purposes: Scope::default(),
    };
    let mut model = PolicyModel::new(decls.name.value.clone());

    // definitions
    for entry in &decls.entries {
        match &entry.decl {
            Decl::Role { id, label } => {
                if label.value.trim().is_empty() {
                    cx.error(Structural, label.span, format!("role `{}` has an empty label", id.name));
                }
                if cx.define("role", id, model.roles.len(), |c| &mut c.roles) {
                    model.roles.push(Role { id: id.name.as_str().into(), label: label.value.clone() });
                }
            }
            Decl::Group { id, label } => {
                if cx.define("group", id, model.groups.len(), |c| &mut c.groups) {
                    model.groups.push(AttributeGroup { id: id.name.as_str().into(), label: label.value.clone() });
                }
            }
            Decl::Attribute { id, label, groups, collected } => {
                if let Some(i) = cx.attrs.get(&id.name) {
                    let existing = &mut model.attributes[i];
                    match collected {
                        Some(c) if groups.is_none() && existing.label == label.value => {
                            existing.collected = existing.collected.with_statement(*c);
                        }
                        _ => cx.error(
                            DuplicateId,
                            id.span,
                            format!(
                                "duplicate attribute id `{}` (a restatement must repeat the label, list no groups and state `collected`)",
                                id.name
                            ),
                        ),
                    }
                    continue;
                }
                cx.define("attribute", id, model.attributes.len(), |c| &mut c.attrs);
                model.attributes.push(Attribute {
                    id: id.name.as_str().into(),
                    label: label.value.clone(),
                    groups: Vec::new(),
                    collected: collected.map_or(CollectionStatus::Unstated, |c| {
                        CollectionStatus::Unstated.with_statement(c)
                    }),
                    derived: false,
                });
            }
            Decl::Granularity { id, description } => {
                if cx.define("granularity function", id, model.granularities.len(), |c| &mut c.grans) {
                    model.granularities.push(GranularityFn {
                        id: id.name.as_str().into(),
                        description: description.value.clone(),
                    });
                }
            }
            Decl::Task { id, label, reads, via } => {
                if cx.define("task", id, model.tasks.len(), |c| &mut c.tasks) {
                    model.tasks.push(Task {
                        id: id.name.as_str().into(),
                        label: label.value.clone(),
                        reads: reads.name.as_str().into(),
                        via: via.as_ref().map(|v| v.name.as_str().into()),
                    });
                }
            }
            Decl::Purpose { id, label, tasks, universal }
                if cx.define("purpose", id, model.purposes.len(), |c| &mut c.purposes) =>
            {
                model.purposes.push(Purpose {
                    id: id.name.as_str().into(),
                    label: label.value.clone(),
                    tasks: tasks.iter().map(|t| t.name.as_str().into()).collect(),
                    universal: *universal,
                });
            }
            _ => {}
        }
    }

    // references
    let mut edges = HashSet::new();
    let mut aggs = HashSet::new();
    let mut rp = HashSet::new();
    let mut pt = HashSet::new();
    let mut pg = HashSet::new();
    let mut grouped = HashSet::new();
    for entry in &decls.entries {
        match &entry.decl {
            Decl::Attribute { id, groups: Some(groups), .. } => {
                let Some(i) = cx.attrs.get(&id.name) else { continue };
                // a rejected duplicate must not contribute memberships
                if !grouped.insert(i) || !model.attributes[i].groups.is_empty() {
                    continue;
                }
                for g in groups {
                    if !cx.resolve("group", g, |c| &c.groups) {
                        continue;
                    }
                    if model.attributes[i].groups.iter().any(|x| x.as_str() == g.name) {
                        cx.error(DuplicateEntry, g.span, format!("attribute `{}` lists group `{}` twice", id.name, g.name));
                    } else {
                        model.attributes[i].groups.push(g.name.as_str().into());
                    }
                }
            }
            Decl::Task { reads, via, .. } => {
                cx.resolve("attribute", reads, |c| &c.attrs);
                if let Some(v) = via {
                    cx.resolve("granularity function", v, |c| &c.grans);
                }
            }
            Decl::Purpose { id, tasks, .. } => {
                let mut seen = HashSet::new();
                for t in tasks {
                    if cx.resolve("task", t, |c| &c.tasks) && !seen.insert(t.name.as_str()) {
                        cx.error(DuplicateEntry, t.span, format!("task `{}` appears twice in purpose `{}`", t.name, id.name));
                    }
                }
            }
            Decl::RoleEdge { superior, inferior } => {
                let ok = cx.resolve("role", superior, |c| &c.roles) & cx.resolve("role", inferior, |c| &c.roles);
                if !ok {
                    continue;
                }
                if superior.name == inferior.name {
                    cx.error(Structural, entry.span, format!("role `{}` cannot be its own superior", superior.name));
                } else if !edges.insert((superior.name.as_str(), inferior.name.as_str())) {
                    cx.error(DuplicateEntry, entry.span, format!("duplicate role edge {} -> {}", superior.name, inferior.name));
                } else {
                    model.role_edges.push(RoleEdge {
                        superior: superior.name.as_str().into(),
                        inferior: inferior.name.as_str().into(),
                    });
                }
            }
            Decl::Aggregation { left, right, product } => {
                let ok = [left, right, product]
                    .into_iter()
                    .fold(true, |ok, id| cx.resolve("attribute", id, |c| &c.attrs) & ok);
                if !ok {
                    continue;
                }
                let (l, r, p) = (left.name.as_str(), right.name.as_str(), product.name.as_str());
                if p == l || p == r {
                    cx.error(Structural, entry.span, format!("aggregation ({l}, {r}) -> {p} produces one of its inputs"));
                } else if !aggs.insert((l.min(r), l.max(r), p)) {
                    cx.error(DuplicateEntry, entry.span, format!("duplicate aggregation ({l}, {r}) -> {p}"));
                } else {
                    model.aggregations.push(Aggregation { left: l.into(), right: r.into(), product: p.into() });
                }
            }
            Decl::RolePurpose { role, purpose, when } => {
                let ok = cx.resolve("role", role, |c| &c.roles) & cx.resolve("purpose", purpose, |c| &c.purposes);
                let condition = when.as_ref().map(|w| cx.condition(w));
                if !ok || matches!(condition, Some(None)) {
                    continue;
                }
                if !rp.insert((role.name.as_str(), purpose.name.as_str())) {
                    cx.error(
                        DuplicateEntry,
                        entry.span,
                        format!("role `{}` is already granted purpose `{}`", role.name, purpose.name),
                    );
                    continue;
                }
                model.rp_grants.push(RolePurposeGrant {
                    role: role.name.as_str().into(),
                    purpose: purpose.name.as_str().into(),
                    condition: condition.flatten(),
                });
            }
            Decl::PurposeTask { purpose, task, when } => {
                let ok = cx.resolve("purpose", purpose, |c| &c.purposes) & cx.resolve("task", task, |c| &c.tasks);
                let condition = cx.condition(when);
                if !ok {
                    continue;
                }
                let p = &model.purposes[cx.purposes.get(&purpose.name).unwrap_or_default()];
                if !p.tasks.iter().any(|t| t.as_str() == task.name) {
                    cx.error(
                        TaskNotInPurpose,
                        task.span,
                        format!("task `{}` is not part of purpose `{}`", task.name, purpose.name),
                    );
                    continue;
                }
                if !pt.insert((purpose.name.as_str(), task.name.as_str())) {
                    cx.error(
                        DuplicateEntry,
                        entry.span,
                        format!("purpose `{}` already conditions task `{}`", purpose.name, task.name),
                    );
                    continue;
                }
                if let Some(condition) = condition {
                    model.pt_conditions.push(PurposeTaskCondition {
                        purpose: purpose.name.as_str().into(),
                        task: task.name.as_str().into(),
                        condition,
                    });
                }
            }
            Decl::PurposeGroup { purpose, group, when } => {
                let ok = cx.resolve("purpose", purpose, |c| &c.purposes) & cx.resolve("group", group, |c| &c.groups);
                let condition = when.as_ref().map(|w| cx.condition(w));
                if !ok || matches!(condition, Some(None)) {
                    continue;
                }
                if !pg.insert((purpose.name.as_str(), group.name.as_str())) {
                    cx.error(
                        DuplicateEntry,
                        entry.span,
                        format!("purpose `{}` is already granted group `{}`", purpose.name, group.name),
                    );
                    continue;
                }
                model.pg_grants.push(PurposeGroupGrant {
                    purpose: purpose.name.as_str().into(),
                    group: group.name.as_str().into(),
                    condition: condition.flatten(),
                });
            }
            _ => {}
        }
    }

    if cx.errors.is_empty() {
        model.refresh_derived();
        for issue in validate(&model).issues {
            let span = issue_span(decls, &issue);
            cx.error(Structural, span, format!("{}: {}", issue.rule, issue.message));
        }
    }

    if cx.errors.is_empty() {
        Ok(model)
    } else {
        let mut errors = cx.errors;
        errors.sort_by(|a, b| (a.span.start, &a.message).cmp(&(b.span.start, &b.message)));
        Err(LowerErrors { source: decls.source.clone(), errors })
    }
}

/// Locates the declaration responsible for a validation issue that survived
/// resolution. Falls back to the policy name.
fn issue_span(decls: &Declarations, issue: &ValidationIssue) -> Span {
    let involved = |id: &Ident| issue.subject.contains(&id.name);
    let specific = decls.entries.iter().find(|e| match (&e.decl, issue.rule) {
        (Decl::RoleEdge { superior, inferior }, ValidationRule::RoleCycle) => involved(superior) && involved(inferior),
        (Decl::Aggregation { product, .. }, ValidationRule::AggregationCycle) => involved(product),
        _ => false,
    });
    let defining = || {
        decls.entries.iter().find(|e| match &e.decl {
            Decl::Role { id, .. } | Decl::Attribute { id, .. } => issue.subject.first().is_some_and(|s| *s == id.name),
            _ => false,
        })
    };
    specific.or_else(defining).map_or(decls.name.span, |e| e.span)
}
