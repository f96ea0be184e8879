use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use super::PolicyModel;

/// Names of the structural invariants checked by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValidationRule {
    AggregationCycle,
    AggregationProductIsInput,
    DerivedMismatch,
    DuplicateAggregation,
    DuplicateEdge,
    DuplicateGroupGrant,
    DuplicateId,
    DuplicateRoleGrant,
    DuplicateTaskCondition,
    DuplicateTaskInPurpose,
    EmptyLabel,
    RoleCycle,
    SelfEdge,
    TaskNotInPurpose,
    UnknownReference,
}

impl ValidationRule {
    pub fn as_str(self) -> &'static str {
        use ValidationRule::*;
        match self {
            AggregationCycle => "aggregation-cycle",
            AggregationProductIsInput => "aggregation-product-is-input",
            DerivedMismatch => "derived-mismatch",
            DuplicateAggregation => "duplicate-aggregation",
            DuplicateEdge => "duplicate-edge",
            DuplicateGroupGrant => "duplicate-group-grant",
            DuplicateId => "duplicate-id",
            DuplicateRoleGrant => "duplicate-role-grant",
            DuplicateTaskCondition => "duplicate-task-condition",
            DuplicateTaskInPurpose => "duplicate-task-in-purpose",
            EmptyLabel => "empty-label",
            RoleCycle => "role-cycle",
            SelfEdge => "self-edge",
            TaskNotInPurpose => "task-not-in-purpose",
            UnknownReference => "unknown-reference",
        }
    }
}

impl fmt::Display for ValidationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub rule: ValidationRule,
    /// Ids of the entities involved, most specific first.
    pub subject: Vec<String>,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {}", self.rule, self.subject.join(", "), self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn len(&self) -> usize {
        self.issues.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Returned by operations that require a model with an empty validation report.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("model is not valid ({} issue(s)); run validation first", .0.len())]
pub struct InvalidModel(pub ValidationReport);

/// Validates `model`, turning a non-empty report into an error.
pub fn ensure_valid(model: &PolicyModel) -> Result<(), InvalidModel> {
    let report = validate(model);
    if report.is_empty() {
        Ok(())
    } else {
        Err(InvalidModel(report))
    }
}

struct Collector {
    issues: Vec<ValidationIssue>,
}

impl Collector {
    fn push(&mut self, rule: ValidationRule, subject: &[&str], message: String) {
        self.issues.push(ValidationIssue {
            rule,
            subject: subject.iter().map(|s| s.to_string()).collect(),
            message,
        });
    }
}

/// Checks every structural invariant of `model` and lists the violations,
/// ordered by rule name, then subject. An empty report means the model is valid.
pub fn validate(model: &PolicyModel) -> ValidationReport {
    use ValidationRule::*;
    let mut c = Collector { issues: Vec::new() };

    let roles = unique_ids(&mut c, "role", model.roles.iter().map(|r| r.id.as_str()));
    let groups = unique_ids(&mut c, "group", model.groups.iter().map(|g| g.id.as_str()));
    let attrs = unique_ids(&mut c, "attribute", model.attributes.iter().map(|a| a.id.as_str()));
    let grans = unique_ids(&mut c, "granularity", model.granularities.iter().map(|g| g.id.as_str()));
    let tasks = unique_ids(&mut c, "task", model.tasks.iter().map(|t| t.id.as_str()));
    let purposes = unique_ids(&mut c, "purpose", model.purposes.iter().map(|p| p.id.as_str()));

    for role in &model.roles {
        if role.label.trim().is_empty() {
            c.push(EmptyLabel, &[role.id.as_str()], format!("role `{}` has an empty label", role.id));
        }
    }

    // role structure
    let mut seen_edges = HashSet::new();
    for edge in &model.role_edges {
        let (sup, inf) = (edge.superior.as_str(), edge.inferior.as_str());
        for end in [sup, inf] {
            if !roles.contains(end) {
                c.push(UnknownReference, &[sup, inf], format!("role edge refers to unknown role `{end}`"));
            }
        }
        if sup == inf {
            c.push(SelfEdge, &[sup], format!("role `{sup}` is declared superior to itself"));
        } else if !seen_edges.insert((sup, inf)) {
            c.push(DuplicateEdge, &[sup, inf], format!("role edge {sup} -> {inf} is declared more than once"));
        }
    }
    let role_edges: Vec<(&str, &str)> = model
        .role_edges
        .iter()
        .map(|e| (e.superior.as_str(), e.inferior.as_str()))
        .filter(|(s, i)| s != i && roles.contains(s) && roles.contains(i))
        .collect();
    for cycle in cycles(&role_edges) {
        let subject: Vec<&str> = cycle.iter().copied().collect();
        c.push(RoleCycle, &subject, format!("roles {} form a superior cycle", subject.join(", ")));
    }

    // attributes and their structure
    for attr in &model.attributes {
        for g in &attr.groups {
            if !groups.contains(g.as_str()) {
                c.push(
                    UnknownReference,
                    &[attr.id.as_str()],
                    format!("attribute `{}` lists unknown group `{g}`", attr.id),
                );
            }
        }
        let derived = model.aggregations.iter().any(|a| a.product == attr.id);
        if derived != attr.derived {
            c.push(
                DerivedMismatch,
                &[attr.id.as_str()],
                format!(
                    "attribute `{}` is marked derived={} but is {}the product of an aggregation",
                    attr.id,
                    attr.derived,
                    if derived { "" } else { "not " }
                ),
            );
        }
    }
    let mut seen_aggs = HashSet::new();
    for agg in &model.aggregations {
        let (l, r, p) = (agg.left.as_str(), agg.right.as_str(), agg.product.as_str());
        for id in [l, r, p] {
            if !attrs.contains(id) {
                c.push(UnknownReference, &[p], format!("aggregation ({l}, {r}) -> {p} refers to unknown attribute `{id}`"));
            }
        }
        if p == l || p == r {
            c.push(AggregationProductIsInput, &[p], format!("aggregation ({l}, {r}) -> {p} produces one of its inputs"));
        }
        let key = if l <= r { (l, r, p) } else { (r, l, p) };
        if !seen_aggs.insert(key) {
            c.push(DuplicateAggregation, &[p], format!("aggregation ({l}, {r}) -> {p} is declared more than once"));
        }
    }
    let derivation_edges: Vec<(&str, &str)> = model
        .aggregations
        .iter()
        .flat_map(|a| [(a.left.as_str(), a.product.as_str()), (a.right.as_str(), a.product.as_str())])
        .filter(|(i, p)| i != p)
        .collect();
    for cycle in cycles(&derivation_edges) {
        let subject: Vec<&str> = cycle.iter().copied().collect();
        c.push(
            AggregationCycle,
            &subject,
            format!("attributes {} are derived from each other", subject.join(", ")),
        );
    }

    // tasks and purposes
    for task in &model.tasks {
        if !attrs.contains(task.reads.as_str()) {
            c.push(UnknownReference, &[task.id.as_str()], format!("task `{}` reads unknown attribute `{}`", task.id, task.reads));
        }
        if let Some(via) = &task.via {
            if !grans.contains(via.as_str()) {
                c.push(
                    UnknownReference,
                    &[task.id.as_str()],
                    format!("task `{}` uses unknown granularity function `{via}`", task.id),
                );
            }
        }
    }
    for purpose in &model.purposes {
        let mut in_purpose = HashSet::new();
        for t in &purpose.tasks {
            if !tasks.contains(t.as_str()) {
                c.push(UnknownReference, &[purpose.id.as_str()], format!("purpose `{}` lists unknown task `{t}`", purpose.id));
            }
            if !in_purpose.insert(t.as_str()) {
                c.push(
                    DuplicateTaskInPurpose,
                    &[purpose.id.as_str(), t.as_str()],
                    format!("task `{t}` appears more than once in purpose `{}`", purpose.id),
                );
            }
        }
    }

    // permissions
    let mut seen = HashSet::new();
    for grant in &model.rp_grants {
        let (r, p) = (grant.role.as_str(), grant.purpose.as_str());
        if !roles.contains(r) {
            c.push(UnknownReference, &[r, p], format!("role-purpose grant refers to unknown role `{r}`"));
        }
        if !purposes.contains(p) {
            c.push(UnknownReference, &[r, p], format!("role-purpose grant refers to unknown purpose `{p}`"));
        }
        if !seen.insert((r, p)) {
            c.push(DuplicateRoleGrant, &[r, p], format!("role `{r}` is granted purpose `{p}` more than once"));
        }
    }
    let mut seen = HashSet::new();
    for cond in &model.pt_conditions {
        let (p, t) = (cond.purpose.as_str(), cond.task.as_str());
        match model.purpose(p) {
            None => c.push(UnknownReference, &[p, t], format!("task condition refers to unknown purpose `{p}`")),
            Some(purpose) => {
                if !tasks.contains(t) {
                    c.push(UnknownReference, &[p, t], format!("task condition refers to unknown task `{t}`"));
                } else if !purpose.tasks.iter().any(|x| x.as_str() == t) {
                    c.push(TaskNotInPurpose, &[p, t], format!("task `{t}` is not part of purpose `{p}`"));
                }
            }
        }
        if !seen.insert((p, t)) {
            c.push(DuplicateTaskCondition, &[p, t], format!("purpose `{p}` conditions task `{t}` more than once"));
        }
    }
    let mut seen = HashSet::new();
    for grant in &model.pg_grants {
        let (p, g) = (grant.purpose.as_str(), grant.group.as_str());
        if !purposes.contains(p) {
            c.push(UnknownReference, &[p, g], format!("group grant refers to unknown purpose `{p}`"));
        }
        if !groups.contains(g) {
            c.push(UnknownReference, &[p, g], format!("group grant refers to unknown group `{g}`"));
        }
        if !seen.insert((p, g)) {
            c.push(DuplicateGroupGrant, &[p, g], format!("purpose `{p}` is granted group `{g}` more than once"));
        }
    }

    let mut issues = c.issues;
    issues.sort_by(|a, b| {
        (a.rule.as_str(), &a.subject, &a.message).cmp(&(b.rule.as_str(), &b.subject, &b.message))
    });
    ValidationReport { issues }
}

fn unique_ids<'a>(c: &mut Collector, kind: &str, ids: impl Iterator<Item = &'a str>) -> HashSet<&'a str> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut order = Vec::new();
    for id in ids {
        let n = counts.entry(id).or_insert(0);
        *n += 1;
        if *n == 2 {
            order.push(id);
        }
    }
    for id in order {
        c.push(ValidationRule::DuplicateId, &[id], format!("{kind} id `{id}` is declared more than once"));
    }
    counts.into_keys().collect()
}

/// Groups of at least two nodes that are mutually reachable.
fn cycles<'a>(edges: &[(&'a str, &'a str)]) -> Vec<BTreeSet<&'a str>> {
    let nodes: BTreeSet<&str> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let reach: HashMap<&str, HashSet<&str>> = nodes
        .iter()
        .map(|&n| {
            let mut seen = HashSet::new();
            let mut stack = vec![n];
            while let Some(cur) = stack.pop() {
                for &(a, b) in edges {
                    if a == cur && seen.insert(b) {
                        stack.push(b);
                    }
                }
            }
            (n, seen)
        })
        .collect();
    let mut assigned = HashSet::new();
    let mut out = Vec::new();
    for &n in &nodes {
        if assigned.contains(n) || !reach[n].contains(n) {
            continue;
        }
        let component: BTreeSet<&str> = nodes
            .iter()
            .copied()
            .filter(|m| reach[n].contains(m) && reach[m].contains(n))
            .collect();
        assigned.extend(component.iter().copied());
        if component.len() >= 2 {
            out.push(component);
        }
    }
    out
}
