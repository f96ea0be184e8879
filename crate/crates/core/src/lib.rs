//! Privacy policy permission models.
//!
//! A policy is described by roles, purposes built from ordered tasks, data
//! attributes and the permissions connecting them. This crate parses the
//! sectioned policy format ([`dsl`]), checks structural invariants
//! ([`model::validate`]), runs gap-analysis lints ([`analysis`]), answers
//! permission queries ([`query`]) and renders diagrams and tables ([`render`]).

pub mod condition;
pub mod analysis;
pub mod dsl;
pub mod ids;
pub mod model;
pub mod query;
pub mod render;

pub use dsl::{load_policy, parse_policy, serialize, LoadError};
pub use condition::{evaluate, parse_condition, Condition, EvalContext, TriBool, Value};
pub use ids::{AttributeId, GranularityId, GroupId, PurposeId, RoleId, TaskId};
pub use model::{validate, PolicyModel, ValidationReport};
