//! Brute-force reference for permission decisions.

use std::collections::BTreeSet;

use super::random_context;
use pppm_core::query::{AccessSource, Outcome, QueryEngine};
use pppm_core::{evaluate, Condition, EvalContext, PolicyModel, TriBool};
use rand::seq::SliceRandom;
use rand::Rng;

/// Roles whose grants `role` can use: itself plus everything below it,
/// computed as a plain fixpoint over the edge list.
pub fn reach(m: &PolicyModel, role: &str) -> BTreeSet<String> {
    let mut set = BTreeSet::from([role.to_string()]);
    loop {
        let before = set.len();
        for e in &m.role_edges {
            if set.contains(e.superior.as_str()) {
                set.insert(e.inferior.to_string());
            }
        }
        if set.len() == before {
            return set;
        }
    }
}

#[derive(Debug, Clone)]
pub struct OraclePath {
    pub key: (String, String, u8, String),
    pub outcome: Outcome,
    pub unknown: Vec<Condition>,
}

fn judge(conds: &[Option<&Condition>], ctx: &EvalContext) -> Result<(Outcome, Vec<Condition>), ()> {
    let mut any_false = false;
    let mut unknown = Vec::new();
    for c in conds.iter().flatten() {
        match evaluate(c, ctx).map_err(|_| ())? {
            TriBool::False => any_false = true,
            TriBool::Unknown => unknown.push((*c).clone()),
            TriBool::True => {}
        }
    }
    Ok(if any_false {
        (Outcome::Deny, vec![])
    } else if unknown.is_empty() {
        (Outcome::Allow, vec![])
    } else {
        (Outcome::Conditional, unknown)
    })
}

/// Every (grant, source) pair giving `role` access to `attr`.
pub fn enumerate(
    m: &PolicyModel,
    role: &str,
    attr: &str,
    purpose: Option<&str>,
    ctx: &EvalContext,
) -> Result<Vec<OraclePath>, ()> {
    let roles = reach(m, role);
    let mut paths = Vec::new();
    for g in &m.rp_grants {
        if !roles.contains(g.role.as_str()) || purpose.is_some_and(|p| p != g.purpose.as_str()) {
            continue;
        }
        let p = m.purposes.iter().find(|p| p.id == g.purpose).unwrap();
        for t in &p.tasks {
            let task = m.tasks.iter().find(|x| x.id == *t).unwrap();
            if task.reads.as_str() != attr {
                continue;
            }
            let pt = m.pt_conditions.iter().find(|c| c.purpose == p.id && c.task == *t).map(|c| &c.condition);
            let (outcome, unknown) = judge(&[g.condition.as_ref(), pt], ctx)?;
            paths.push(OraclePath {
                key: (p.id.to_string(), t.to_string(), 0, g.role.to_string()),
                outcome,
                unknown,
            });
        }
        let a = m.attributes.iter().find(|a| a.id.as_str() == attr).unwrap();
        for pg in m.pg_grants.iter().filter(|x| x.purpose == p.id) {
            if !a.groups.contains(&pg.group) {
                continue;
            }
            let (outcome, unknown) = judge(&[g.condition.as_ref(), pg.condition.as_ref()], ctx)?;
            paths.push(OraclePath {
                key: (p.id.to_string(), pg.group.to_string(), 1, g.role.to_string()),
                outcome,
                unknown,
            });
        }
    }
    Ok(paths)
}

pub fn best(paths: &[OraclePath]) -> Option<&OraclePath> {
    let top = paths.iter().map(|p| p.outcome).max()?;
    paths.iter().filter(|p| p.outcome == top).min_by(|a, b| a.key.cmp(&b.key))
}

pub struct Query {
    pub role: String,
    pub attr: String,
    pub purpose: Option<String>,
    pub ctx: EvalContext,
}

pub fn random_query(m: &PolicyModel, rng: &mut impl Rng) -> Query {
    Query {
        role: m.roles.choose(rng).unwrap().id.to_string(),
        attr: m.attributes.choose(rng).unwrap().id.to_string(),
        purpose: if rng.gen_bool(0.4) { Some(m.purposes.choose(rng).unwrap().id.to_string()) } else { None },
        ctx: random_context(rng),
    }
}

/// Compares the engine with the enumerator; returns a description of the
/// first disagreement.
pub fn check(m: &PolicyModel, q: &Query) -> Result<(), String> {
    let engine = QueryEngine::new(m).map_err(|e| e.to_string())?;
    let got = engine.can_access(&q.role, &q.attr, q.purpose.as_deref(), &q.ctx);
    let want = enumerate(m, &q.role, &q.attr, q.purpose.as_deref(), &q.ctx);
    let (got, paths) = match (got, want) {
        (Err(_), Err(())) => return Ok(()),
        (Ok(g), Ok(p)) => (g, p),
        (g, w) => return Err(format!("error mismatch: engine {g:?}, oracle ok={}", w.is_ok())),
    };
    match (best(&paths), &got.path) {
        (None, None) if got.outcome == Outcome::Deny && got.residual.is_empty() => Ok(()),
        (Some(b), Some(trace)) => {
            let kind = match trace.source {
                AccessSource::Task(_) => 0,
                AccessSource::Group(_) => 1,
            };
            let key = (trace.purpose.to_string(), trace.source.id().to_string(), kind, trace.grant_role.to_string());
            if got.outcome != b.outcome {
                return Err(format!("outcome {:?} != oracle {:?}", got.outcome, b.outcome));
            }
            if key != b.key {
                return Err(format!("trace {key:?} != oracle {:?}", b.key));
            }
            if got.residual != b.unknown {
                return Err(format!("residual {:?} != oracle {:?}", got.residual, b.unknown));
            }
            Ok(())
        }
        (b, t) => Err(format!("path presence differs: oracle {b:?}, engine {t:?}")),
    }
}
