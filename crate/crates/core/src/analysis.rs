//! Gap-analysis lints over a valid policy model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{ensure_valid, inferiors, CollectionStatus, InvalidModel, PolicyModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    L1,
    L2,
    L3,
    L4,
    L5,
    L6,
    L7,
    L8,
    L9,
}

impl RuleId {
    pub const ALL: [RuleId; 9] = [
        RuleId::L1,
        RuleId::L2,
        RuleId::L3,
        RuleId::L4,
        RuleId::L5,
        RuleId::L6,
        RuleId::L7,
        RuleId::L8,
        RuleId::L9,
    ];

    pub fn code(self) -> &'static str {
        match self {
            RuleId::L1 => "L1",
            RuleId::L2 => "L2",
            RuleId::L3 => "L3",
            RuleId::L4 => "L4",
            RuleId::L5 => "L5",
            RuleId::L6 => "L6",
            RuleId::L7 => "L7",
            RuleId::L8 => "L8",
            RuleId::L9 => "L9",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleId::L1 => "orphan-purpose",
            RuleId::L2 => "orphan-role",
            RuleId::L3 => "universal-purpose",
            RuleId::L4 => "universal-data-grant",
            RuleId::L5 => "unjustified-group-grant",
            RuleId::L6 => "unused-attribute",
            RuleId::L7 => "taskless-granted-purpose",
            RuleId::L8 => "dangling-empty-group",
            RuleId::L9 => "collection-conflict",
        }
    }

    pub fn default_severity(self) -> Severity {
        match self {
            RuleId::L3 | RuleId::L4 | RuleId::L9 => Severity::Error,
            RuleId::L7 => Severity::Info,
            _ => Severity::Warning,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown lint rule `{0}` (expected L1..L9 or a rule name such as orphan-purpose)")]
pub struct UnknownRule(pub String);

impl FromStr for RuleId {
    type Err = UnknownRule;

    /// Accepts the code (`L1`, `l1`) or the rule name (`orphan-purpose`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        RuleId::ALL
            .into_iter()
            .find(|r| r.code().eq_ignore_ascii_case(t) || r.name() == t)
            .ok_or_else(|| UnknownRule(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "info" => Ok(Severity::Info),
            "warning" => Ok(Severity::Warning),
            "error" => Ok(Severity::Error),
            other => Err(format!("unknown severity `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub rule: RuleId,
    pub severity: Severity,
    /// Entity ids, primary subject first.
    pub subject: Vec<String>,
    pub message: String,
}

impl Finding {
    /// `RULE<TAB>SEVERITY<TAB>SUBJECT<TAB>MESSAGE`, without the newline.
    /// Multiple subject ids are comma-separated.
    pub fn tsv(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.rule, self.severity, self.subject.join(","), self.message)
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{} {}] {}: {}",
            self.severity,
            self.rule,
            self.rule.name(),
            self.subject.join(", "),
            self.message
        )
    }
}

/// Which rules run and at what severity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintConfig {
    enabled: BTreeSet<RuleId>,
    overrides: BTreeMap<RuleId, Severity>,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig { enabled: RuleId::ALL.into_iter().collect(), overrides: BTreeMap::new() }
    }
}

impl LintConfig {
    pub fn only(rules: impl IntoIterator<Item = RuleId>) -> Self {
        LintConfig { enabled: rules.into_iter().collect(), overrides: BTreeMap::new() }
    }

    /// Parses a comma-separated rule list such as `L1,L5` or `orphan-purpose`.
    pub fn from_rule_list(list: &str) -> Result<Self, UnknownRule> {
        let rules = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<RuleId>, _>>()?;
        Ok(Self::only(rules))
    }

    pub fn disable(&mut self, rule: RuleId) -> &mut Self {
        self.enabled.remove(&rule);
        self
    }

    pub fn set_severity(&mut self, rule: RuleId, severity: Severity) -> &mut Self {
        self.overrides.insert(rule, severity);
        self
    }

    pub fn is_enabled(&self, rule: RuleId) -> bool {
        self.enabled.contains(&rule)
    }

    pub fn enabled(&self) -> impl Iterator<Item = RuleId> + '_ {
        self.enabled.iter().copied()
    }

    pub fn severity(&self, rule: RuleId) -> Severity {
        self.overrides.get(&rule).copied().unwrap_or(rule.default_severity())
    }
}

struct Sink<'c> {
    config: &'c LintConfig,
    findings: Vec<Finding>,
}

impl Sink<'_> {
    fn push(&mut self, rule: RuleId, subject: &[&str], message: String) {
        self.findings.push(Finding {
            rule,
            severity: self.config.severity(rule),
            subject: subject.iter().map(|s| s.to_string()).collect(),
            message,
        });
    }
}

/// Runs the enabled rules. Findings are ordered by rule, then subject.
pub fn run_lints(model: &PolicyModel, config: &LintConfig) -> Result<Vec<Finding>, InvalidModel> {
    ensure_valid(model)?;
    let mut sink = Sink { config, findings: Vec::new() };
    for rule in config.enabled() {
        match rule {
            RuleId::L1 => orphan_purposes(model, &mut sink),
            RuleId::L2 => orphan_roles(model, &mut sink),
            RuleId::L3 => universal_purposes(model, &mut sink),
            RuleId::L4 => universal_data(model, &mut sink),
            RuleId::L5 => unjustified_groups(model, &mut sink),
            RuleId::L6 => unused_attributes(model, &mut sink),
            RuleId::L7 => taskless_purposes(model, &mut sink),
            RuleId::L8 => empty_groups(model, &mut sink),
            RuleId::L9 => collection_conflicts(model, &mut sink),
        }
    }
    let mut findings = sink.findings;
    findings.sort_by(|a, b| (a.rule, &a.subject, &a.message).cmp(&(b.rule, &b.subject, &b.message)));
    Ok(findings)
}

fn label_of<'m>(m: &'m PolicyModel, purpose: &str) -> &'m str {
    m.purpose(purpose).map_or("", |p| p.label.as_str())
}

fn orphan_purposes(m: &PolicyModel, out: &mut Sink) {
    for p in &m.purposes {
        if !m.rp_grants.iter().any(|g| g.purpose == p.id) {
            out.push(RuleId::L1, &[p.id.as_str()], format!("purpose \"{}\" is granted to no role", p.label));
        }
    }
}

fn orphan_roles(m: &PolicyModel, out: &mut Sink) {
    let granted: BTreeSet<&str> = m.rp_grants.iter().map(|g| g.role.as_str()).collect();
    for r in &m.roles {
        let below = inferiors(m, r.id.as_str()).unwrap_or_default();
        if !granted.contains(r.id.as_str()) && !below.iter().any(|i| granted.contains(i.as_str())) {
            out.push(
                RuleId::L2,
                &[r.id.as_str()],
                format!("role \"{}\" holds no purpose, directly or through inferior roles", r.label),
            );
        }
    }
}

fn universal_purposes(m: &PolicyModel, out: &mut Sink) {
    for g in &m.rp_grants {
        if m.purpose(g.purpose.as_str()).is_some_and(|p| p.universal) {
            out.push(
                RuleId::L3,
                &[g.purpose.as_str(), g.role.as_str()],
                format!(
                    "role `{}` is granted the catch-all purpose \"{}\"",
                    g.role,
                    label_of(m, g.purpose.as_str())
                ),
            );
        }
    }
}

fn covers_everything(m: &PolicyModel, group: &str) -> bool {
    !m.attributes.is_empty() && m.group_members(group).count() == m.attributes.len()
}

fn universal_data(m: &PolicyModel, out: &mut Sink) {
    for g in &m.pg_grants {
        let universal = m.purpose(g.purpose.as_str()).is_some_and(|p| p.universal);
        let everything = covers_everything(m, g.group.as_str());
        let why = match (universal, everything) {
            (false, false) => continue,
            (true, false) => "catch-all purpose",
            (false, true) => "group holding every attribute",
            (true, true) => "catch-all purpose holding a group with every attribute",
        };
        out.push(
            RuleId::L4,
            &[g.purpose.as_str(), g.group.as_str()],
            format!(
                "purpose \"{}\" has unrestrained data access: {why} (group `{}`)",
                label_of(m, g.purpose.as_str()),
                g.group
            ),
        );
    }
}

/// Attributes read by the purpose's own tasks.
fn task_reads<'m>(m: &'m PolicyModel, purpose: &str) -> BTreeSet<&'m str> {
    m.purpose(purpose)
        .into_iter()
        .flat_map(|p| &p.tasks)
        .filter_map(|t| m.task(t.as_str()))
        .map(|t| t.reads.as_str())
        .collect()
}

fn unjustified_groups(m: &PolicyModel, out: &mut Sink) {
    for g in &m.pg_grants {
        let reads = task_reads(m, g.purpose.as_str());
        let members: BTreeSet<&str> = m.group_members(g.group.as_str()).map(|a| a.id.as_str()).collect();
        let used: Vec<&str> = members.intersection(&reads).copied().collect();
        if used.is_empty() || members.is_subset(&reads) {
            continue;
        }
        out.push(
            RuleId::L5,
            &[g.purpose.as_str(), g.group.as_str()],
            format!(
                "purpose \"{}\" is granted all {} attributes of group `{}` but its tasks read only {}",
                label_of(m, g.purpose.as_str()),
                members.len(),
                g.group,
                used.join(", ")
            ),
        );
    }
}

fn unused_attributes(m: &PolicyModel, out: &mut Sink) {
    let read: BTreeSet<&str> = m.tasks.iter().map(|t| t.reads.as_str()).collect();
    // catch-all grants would otherwise mark every attribute as used
    let covered: BTreeSet<&str> = m
        .pg_grants
        .iter()
        .filter(|g| !m.purpose(g.purpose.as_str()).is_some_and(|p| p.universal))
        .filter(|g| !covers_everything(m, g.group.as_str()))
        .flat_map(|g| m.group_members(g.group.as_str()))
        .map(|a| a.id.as_str())
        .collect();
    for a in &m.attributes {
        if !read.contains(a.id.as_str()) && !covered.contains(a.id.as_str()) {
            out.push(
                RuleId::L6,
                &[a.id.as_str()],
                format!("attribute \"{}\" is not connected to any purpose", a.label),
            );
        }
    }
}

fn taskless_purposes(m: &PolicyModel, out: &mut Sink) {
    for p in &m.purposes {
        let grants = m.rp_grants.iter().filter(|g| g.purpose == p.id).count();
        if grants > 0 && p.tasks.is_empty() {
            out.push(
                RuleId::L7,
                &[p.id.as_str()],
                format!("purpose \"{}\" is granted to {grants} role(s) but lists no tasks", p.label),
            );
        }
    }
}

fn empty_groups(m: &PolicyModel, out: &mut Sink) {
    for group in &m.groups {
        if m.group_members(group.id.as_str()).next().is_some() {
            continue;
        }
        let purposes: Vec<&str> = m
            .pg_grants
            .iter()
            .filter(|g| g.group == group.id)
            .map(|g| g.purpose.as_str())
            .collect();
        if !purposes.is_empty() {
            out.push(
                RuleId::L8,
                &[group.id.as_str()],
                format!("group \"{}\" has no attributes but is granted to {}", group.label, purposes.join(", ")),
            );
        }
    }
}

fn collection_conflicts(m: &PolicyModel, out: &mut Sink) {
    for a in &m.attributes {
        let readers: Vec<&str> = m.tasks.iter().filter(|t| t.reads == a.id).map(|t| t.id.as_str()).collect();
        let message = match a.collected {
            CollectionStatus::Conflicting => {
                format!("attribute \"{}\" is declared both collected and not collected", a.label)
            }
            CollectionStatus::NotCollected if !readers.is_empty() => format!(
                "attribute \"{}\" is declared not collected but is read by {}",
                a.label,
                readers.join(", ")
            ),
            _ => continue,
        };
        out.push(RuleId::L9, &[a.id.as_str()], message);
    }
}
