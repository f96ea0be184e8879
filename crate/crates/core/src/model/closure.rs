use std::collections::{BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use super::PolicyModel;
use crate::ids::{AttributeId, RoleId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("unknown role `{0}`")]
    Role(String),
    #[error("unknown purpose `{0}`")]
    Purpose(String),
    #[error("unknown attribute `{0}`")]
    Attribute(String),
}

/// Every role reachable from `role` along superior-to-inferior edges,
/// excluding `role` itself.
///
/// Order is breadth-first; the inferiors of one role are visited in id order.
pub fn inferiors(model: &PolicyModel, role: &str) -> Result<Vec<RoleId>, LookupError> {
    if model.role(role).is_none() {
        return Err(LookupError::Role(role.to_owned()));
    }
    let mut seen: HashSet<&str> = HashSet::from([role]);
    let mut order = Vec::new();
    let mut queue = VecDeque::from([role]);
    while let Some(current) = queue.pop_front() {
        let mut next: Vec<&RoleId> = model
            .role_edges
            .iter()
            .filter(|e| e.superior.as_str() == current)
            .map(|e| &e.inferior)
            .collect();
        next.sort();
        for inferior in next {
            if seen.insert(inferior.as_str()) {
                order.push(inferior.clone());
                queue.push_back(inferior.as_str());
            }
        }
    }
    Ok(order)
}

/// Shortest chain of roles leading from `from` down to `to`, both included.
/// Neighbours are explored in id order, so ties resolve to the smallest ids.
pub(crate) fn inheritance_path(model: &PolicyModel, from: &str, to: &str) -> Option<Vec<RoleId>> {
    let mut parent: Vec<(&str, &str)> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(current) = queue.pop_front() {
        if current == to {
            let mut path = vec![RoleId::new(to)];
            let mut cursor = to;
            while let Some(&(_, p)) = parent.iter().find(|(c, _)| *c == cursor) {
                path.push(RoleId::new(p));
                cursor = p;
            }
            path.reverse();
            return Some(path);
        }
        let mut next: Vec<&str> = model
            .role_edges
            .iter()
            .filter(|e| e.superior.as_str() == current)
            .map(|e| e.inferior.as_str())
            .collect();
        next.sort_unstable();
        for n in next {
            if seen.insert(n) {
                parent.push((n, current));
                queue.push_back(n);
            }
        }
    }
    None
}

/// All attributes from which `attribute` is transitively derived.
pub fn aggregation_sources(
    model: &PolicyModel,
    attribute: &str,
) -> Result<BTreeSet<AttributeId>, LookupError> {
    if model.attribute(attribute).is_none() {
        return Err(LookupError::Attribute(attribute.to_owned()));
    }
    let mut sources = BTreeSet::new();
    let mut stack = vec![attribute];
    let mut expanded: HashSet<&str> = HashSet::new();
    while let Some(current) = stack.pop() {
        if !expanded.insert(current) {
            continue;
        }
        for agg in model.aggregations.iter().filter(|a| a.product.as_str() == current) {
            for input in [&agg.left, &agg.right] {
                if input.as_str() != attribute {
                    sources.insert(input.clone());
                }
                stack.push(input.as_str());
            }
        }
    }
    Ok(sources)
}
