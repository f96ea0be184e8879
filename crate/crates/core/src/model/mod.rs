//! Policy model types.
//!
//! A [`PolicyModel`] is a plain aggregate: references between entities are
//! ids, and nothing here guarantees they resolve. [`validate`] checks every
//! structural invariant; the analysis, query and render layers refuse models
//! that do not pass it.

mod closure;
mod validate;

pub use closure::{aggregation_sources, inferiors, LookupError};
pub(crate) use closure::inheritance_path;
pub use validate::{ensure_valid, validate, InvalidModel, ValidationIssue, ValidationReport, ValidationRule};

use crate::condition::Condition;
use crate::ids::{AttributeId, GranularityId, GroupId, PurposeId, RoleId, TaskId};

/// A category of subject that accesses data.
#[derive(Debug, Clone, PartialEq)]
pub struct Role {
    pub id: RoleId,
    pub label: String,
}

/// `superior` holds at least all the access permitted to `inferior`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleEdge {
    pub superior: RoleId,
    pub inferior: RoleId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeGroup {
    pub id: GroupId,
    pub label: String,
}

/// What the policy states about whether an attribute is collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollectionStatus {
    #[default]
    Unstated,
    Collected,
    NotCollected,
    /// The policy states both that it is and is not collected.
    Conflicting,
}

impl CollectionStatus {
    /// Folds one more collection statement into the status.
    pub fn with_statement(self, collected: bool) -> Self {
        use CollectionStatus::*;
        match (self, collected) {
            (Unstated, true) | (Collected, true) => Collected,
            (Unstated, false) | (NotCollected, false) => NotCollected,
            _ => Conflicting,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CollectionStatus::Unstated => "",
            CollectionStatus::Collected => "yes",
            CollectionStatus::NotCollected => "no",
            CollectionStatus::Conflicting => "conflicting",
        }
    }
}

/// A named piece of sensitive information.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub id: AttributeId,
    pub label: String,
    /// Groups this attribute belongs to, in declaration order.
    pub groups: Vec<GroupId>,
    pub collected: CollectionStatus,
    /// True iff the attribute is the product of some aggregation.
    pub derived: bool,
}

/// `(left, right) -> product`: combining two attributes yields a new one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregation {
    pub left: AttributeId,
    pub right: AttributeId,
    pub product: AttributeId,
}

/// A named precision-altering conversion. Carries no executable semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct GranularityFn {
    pub id: GranularityId,
    pub description: String,
}

/// One data usage step. A task reads exactly one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub label: String,
    pub reads: AttributeId,
    pub via: Option<GranularityId>,
}

/// A reason for data access, structured as an ordered task sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Purpose {
    pub id: PurposeId,
    pub label: String,
    pub tasks: Vec<TaskId>,
    /// Marks catch-all purposes such as "Any".
    pub universal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolePurposeGrant {
    pub role: RoleId,
    pub purpose: PurposeId,
    pub condition: Option<Condition>,
}

/// Condition on one task's attribute access, scoped to one purpose.
#[derive(Debug, Clone, PartialEq)]
pub struct PurposeTaskCondition {
    pub purpose: PurposeId,
    pub task: TaskId,
    pub condition: Condition,
}

/// Grants a purpose access to every member of an attribute group.
#[derive(Debug, Clone, PartialEq)]
pub struct PurposeGroupGrant {
    pub purpose: PurposeId,
    pub group: GroupId,
    pub condition: Option<Condition>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolicyModel {
    pub name: String,
    pub roles: Vec<Role>,
    pub role_edges: Vec<RoleEdge>,
    pub groups: Vec<AttributeGroup>,
    pub attributes: Vec<Attribute>,
    pub aggregations: Vec<Aggregation>,
    pub granularities: Vec<GranularityFn>,
    pub tasks: Vec<Task>,
    pub purposes: Vec<Purpose>,
    pub rp_grants: Vec<RolePurposeGrant>,
    pub pt_conditions: Vec<PurposeTaskCondition>,
    pub pg_grants: Vec<PurposeGroupGrant>,
}

impl PolicyModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn role(&self, id: &str) -> Option<&Role> {
        self.roles.iter().find(|r| r.id.as_str() == id)
    }

    pub fn purpose(&self, id: &str) -> Option<&Purpose> {
        self.purposes.iter().find(|p| p.id.as_str() == id)
    }

    pub fn attribute(&self, id: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.id.as_str() == id)
    }

    pub fn group(&self, id: &str) -> Option<&AttributeGroup> {
        self.groups.iter().find(|g| g.id.as_str() == id)
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id.as_str() == id)
    }

    pub fn granularity(&self, id: &str) -> Option<&GranularityFn> {
        self.granularities.iter().find(|g| g.id.as_str() == id)
    }

    /// Attributes whose membership lists contain `group`, in declaration order.
    pub fn group_members<'a>(&'a self, group: &'a str) -> impl Iterator<Item = &'a Attribute> + 'a {
        self.attributes
            .iter()
            .filter(move |a| a.groups.iter().any(|g| g.as_str() == group))
    }

    pub fn pt_condition(&self, purpose: &str, task: &str) -> Option<&Condition> {
        self.pt_conditions
            .iter()
            .find(|c| c.purpose.as_str() == purpose && c.task.as_str() == task)
            .map(|c| &c.condition)
    }

    /// Recomputes every attribute's `derived` flag from the aggregation list.
    pub fn refresh_derived(&mut self) {
        for attr in &mut self.attributes {
            attr.derived = self.aggregations.iter().any(|a| a.product == attr.id);
        }
    }
}
