//! Permission queries over a valid model.
//!
//! A structural path for `(role, attribute)` is an effective purpose grant of
//! the role together with an attribute source of that purpose: a task reading
//! the attribute or a group grant containing it. The conditions on a path are
//! the role-purpose condition followed by the task or group condition, and
//! they combine by conjunction.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::condition::{evaluate, Condition, EvalContext, EvalError, TriBool};
use crate::ids::{AttributeId, GranularityId, GroupId, PurposeId, RoleId, TaskId};
use crate::model::{ensure_valid, inferiors, inheritance_path, InvalidModel, LookupError, PolicyModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error(transparent)]
    InvalidModel(#[from] InvalidModel),
    #[error(transparent)]
    Lookup(#[from] LookupError),
    #[error("while evaluating {grant}: {source}")]
    Eval { grant: String, source: EvalError },
}

/// A purpose usable by a role, and the role whose grant supplies it.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePurpose {
    pub purpose: PurposeId,
    pub condition: Option<Condition>,
    pub via: RoleId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccessSource {
    Task(TaskId),
    Group(GroupId),
}

impl AccessSource {
    pub fn id(&self) -> &str {
        match self {
            AccessSource::Task(t) => t.as_str(),
            AccessSource::Group(g) => g.as_str(),
        }
    }
}

impl fmt::Display for AccessSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccessSource::Task(t) => write!(f, "task {t}"),
            AccessSource::Group(g) => write!(f, "group {g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeAccess {
    pub attribute: AttributeId,
    pub source: AccessSource,
    pub granularity: Option<GranularityId>,
    pub condition: Option<Condition>,
}

/// Ordered from least to most permissive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Deny,
    Conditional,
    Allow,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Deny => "Deny",
            Outcome::Conditional => "Conditional",
            Outcome::Allow => "Allow",
        })
    }
}

/// The structural path behind a decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub purpose: PurposeId,
    /// Role holding the grant.
    pub grant_role: RoleId,
    /// Roles from the queried role down to `grant_role`, both included.
    pub hops: Vec<RoleId>,
    pub source: AccessSource,
    pub granularity: Option<GranularityId>,
    pub grant_condition: Option<Condition>,
    pub source_condition: Option<Condition>,
}

impl Trace {
    /// Human-readable explanation, one step per line.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        let cond = |c: &Option<Condition>| c.as_ref().map_or(String::new(), |c| format!(" when \"{c}\""));
        out.push(format!("grant: {} allowed {}{}", self.grant_role, self.purpose, cond(&self.grant_condition)));
        if self.hops.len() > 1 {
            let hops: Vec<&str> = self.hops.iter().map(|r| r.as_str()).collect();
            out.push(format!("inherited: {} (conditions kept unchanged)", hops.join(" -> ")));
        }
        out.push(format!("source: {}{}", self.source, cond(&self.source_condition)));
        if let Some(g) = &self.granularity {
            out.push(format!("granularity: {g}"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub outcome: Outcome,
    /// Conditions left undecided by the context; non-empty iff `Conditional`.
    pub residual: Vec<Condition>,
    /// The winning path, absent when no structural path exists.
    pub path: Option<Trace>,
}

/// Query front end over a model that has been validated once.
#[derive(Debug, Clone, Copy)]
pub struct QueryEngine<'m> {
    model: &'m PolicyModel,
}

impl<'m> QueryEngine<'m> {
    pub fn new(model: &'m PolicyModel) -> Result<Self, InvalidModel> {
        ensure_valid(model)?;
        Ok(QueryEngine { model })
    }

    pub fn model(&self) -> &'m PolicyModel {
        self.model
    }

    /// Grants of `role` followed by those of its inferiors in breadth-first
    /// order, each role's grants in declaration order.
    pub fn effective_purposes(&self, role: &str) -> Result<Vec<EffectivePurpose>, QueryError> {
        let mut roles = vec![RoleId::new(role)];
        roles.extend(inferiors(self.model, role)?);
        let mut out = Vec::new();
        for r in &roles {
            for g in self.model.rp_grants.iter().filter(|g| g.role == *r) {
                out.push(EffectivePurpose {
                    purpose: g.purpose.clone(),
                    condition: g.condition.clone(),
                    via: r.clone(),
                });
            }
        }
        Ok(out)
    }

    /// Attributes reachable through the purpose's tasks, in task order,
    /// followed by members of groups granted to it, in grant order.
    pub fn accessible_attributes(&self, purpose: &str) -> Result<Vec<AttributeAccess>, QueryError> {
        let m = self.model;
        let p = m.purpose(purpose).ok_or_else(|| LookupError::Purpose(purpose.to_owned()))?;
        let mut out = Vec::new();
        for t in p.tasks.iter().filter_map(|t| m.task(t.as_str())) {
            out.push(AttributeAccess {
                attribute: t.reads.clone(),
                source: AccessSource::Task(t.id.clone()),
                granularity: t.via.clone(),
                condition: m.pt_condition(purpose, t.id.as_str()).cloned(),
            });
        }
        for g in m.pg_grants.iter().filter(|g| g.purpose == p.id) {
            for a in m.group_members(g.group.as_str()) {
                out.push(AttributeAccess {
                    attribute: a.id.clone(),
                    source: AccessSource::Group(g.group.clone()),
                    granularity: None,
                    condition: g.condition.clone(),
                });
            }
        }
        Ok(out)
    }

    /// Decides whether `role` may read `attribute`, for one purpose or, when
    /// `purpose` is `None`, for any purpose. The most permissive path wins;
    /// ties go to the smallest (purpose, source, granting role).
    pub fn can_access(
        &self,
        role: &str,
        attribute: &str,
        purpose: Option<&str>,
        ctx: &EvalContext,
    ) -> Result<Decision, QueryError> {
        let m = self.model;
        if m.attribute(attribute).is_none() {
            return Err(LookupError::Attribute(attribute.to_owned()).into());
        }
        if let Some(p) = purpose {
            if m.purpose(p).is_none() {
                return Err(LookupError::Purpose(p.to_owned()).into());
            }
        }
        let mut best: Option<(Outcome, Vec<Condition>, Trace)> = None;
        for grant in self.effective_purposes(role)? {
            if purpose.is_some_and(|p| p != grant.purpose.as_str()) {
                continue;
            }
            for access in self.accessible_attributes(grant.purpose.as_str())? {
                if access.attribute.as_str() != attribute {
                    continue;
                }
                let (outcome, residual) = self.judge(&grant, &access, ctx)?;
                let trace = Trace {
                    purpose: grant.purpose.clone(),
                    grant_role: grant.via.clone(),
                    hops: inheritance_path(m, role, grant.via.as_str()).unwrap_or_default(),
                    source: access.source,
                    granularity: access.granularity,
                    grant_condition: grant.condition.clone(),
                    source_condition: access.condition,
                };
                let better = match &best {
                    None => true,
                    Some((o, _, t)) => match outcome.cmp(o) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => tie_key(&trace) < tie_key(t),
                    },
                };
                if better {
                    best = Some((outcome, residual, trace));
                }
            }
        }
        Ok(match best {
            Some((outcome, residual, trace)) => Decision { outcome, residual, path: Some(trace) },
            None => Decision { outcome: Outcome::Deny, residual: Vec::new(), path: None },
        })
    }

    fn judge(
        &self,
        grant: &EffectivePurpose,
        access: &AttributeAccess,
        ctx: &EvalContext,
    ) -> Result<(Outcome, Vec<Condition>), QueryError> {
        let mut truth = TriBool::True;
        let mut unknown = Vec::new();
        for (i, cond) in [&grant.condition, &access.condition].into_iter().enumerate() {
            let Some(cond) = cond else { continue };
            let value = evaluate(cond, ctx).map_err(|source| QueryError::Eval {
                grant: if i == 0 {
                    format!("grant {} allowed {}", grant.via, grant.purpose)
                } else {
                    format!("{} of purpose {}", access.source, grant.purpose)
                },
                source,
            })?;
            if value == TriBool::Unknown {
                unknown.push(cond.clone());
            }
            truth = truth.and(value);
        }
        Ok(match truth {
            TriBool::True => (Outcome::Allow, Vec::new()),
            TriBool::False => (Outcome::Deny, Vec::new()),
            TriBool::Unknown => (Outcome::Conditional, unknown),
        })
    }
}

fn tie_key(t: &Trace) -> (&str, &str, &AccessSource, &str) {
    (t.purpose.as_str(), t.source.id(), &t.source, t.grant_role.as_str())
}

pub fn effective_purposes(model: &PolicyModel, role: &str) -> Result<Vec<EffectivePurpose>, QueryError> {
    QueryEngine::new(model)?.effective_purposes(role)
}

pub fn accessible_attributes(model: &PolicyModel, purpose: &str) -> Result<Vec<AttributeAccess>, QueryError> {
    QueryEngine::new(model)?.accessible_attributes(purpose)
}

pub fn can_access(
    model: &PolicyModel,
    role: &str,
    attribute: &str,
    purpose: Option<&str>,
    ctx: &EvalContext,
) -> Result<Decision, QueryError> {
    QueryEngine::new(model)?.can_access(role, attribute, purpose, ctx)
}
