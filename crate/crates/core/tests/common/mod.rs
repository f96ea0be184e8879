#![allow(dead_code)]

pub mod criteria;
pub mod dot;
pub mod oracle;

use pppm_core::ids::{PurposeId, TaskId};
use pppm_core::model::*;
use pppm_core::{parse_condition, load_policy, Condition, EvalContext, PolicyModel, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const SHOP_TEXT: &str = include_str!("../../../../fixtures/imaginary_shop.pppm");
pub const CHATTERBABY_TEXT: &str = include_str!("../../../../fixtures/chatterbaby.pppm");

pub fn shop() -> PolicyModel {
    load_policy("imaginary_shop.pppm", SHOP_TEXT).expect("shop fixture loads")
}

pub fn chatterbaby() -> PolicyModel {
    load_policy("chatterbaby.pppm", CHATTERBABY_TEXT).expect("chatterbaby fixture loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Variables used by generated conditions and contexts.
pub const VARS: [&str; 3] = ["a", "b", "c"];

/// A random numeric condition over [`VARS`] with one or two chains.
pub fn random_condition(rng: &mut impl Rng) -> Condition {
    let ops = ["<", "<=", ">", ">=", "==", "!="];
    let mut chains = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let len = rng.gen_range(2..=3);
        let mut parts = Vec::new();
        for i in 0..len {
            if i > 0 {
                parts.push(ops.choose(rng).unwrap().to_string());
            }
            if rng.gen_bool(0.5) {
                parts.push(VARS.choose(rng).unwrap().to_string());
            } else {
                parts.push(rng.gen_range(0..5).to_string());
            }
        }
        chains.push(parts.join(" "));
    }
    parse_condition(&chains.join(" and ")).expect("generated condition parses")
}

/// Binds a random subset of [`VARS`] to small integers.
pub fn random_context(rng: &mut impl Rng) -> EvalContext {
    let mut ctx = EvalContext::new();
    for v in VARS {
        if rng.gen_bool(0.6) {
            ctx.bind(v, Value::Number(rng.gen_range(0..5) as f64));
        }
    }
    ctx
}

pub struct Limits {
    pub roles: usize,
    pub purposes: usize,
    pub attributes: usize,
}

pub const SMALL: Limits = Limits { roles: 5, purposes: 5, attributes: 6 };

fn maybe_condition(rng: &mut impl Rng, p: f64) -> Option<Condition> {
    if rng.gen_bool(p) {
        Some(random_condition(rng))
    } else {
        None
    }
}

/// A random structurally valid model. Role edges and aggregations only run
/// from lower to higher index, so both graphs are acyclic.
pub fn random_model(rng: &mut impl Rng, limits: &Limits) -> PolicyModel {
    let mut m = PolicyModel::new(format!("random {}", rng.gen_range(0..1000)));
    let nr = rng.gen_range(1..=limits.roles);
    let np = rng.gen_range(1..=limits.purposes);
    let na = rng.gen_range(1..=limits.attributes);
    let ng = rng.gen_range(0..=3);
    let nt = rng.gen_range(0..=8);

    for i in 0..nr {
        m.roles.push(Role { id: format!("r{i}").into(), label: format!("Role {i}") });
    }
    for i in 0..nr {
        for j in i + 1..nr {
            if rng.gen_bool(0.3) {
                m.role_edges.push(RoleEdge { superior: format!("r{i}").into(), inferior: format!("r{j}").into() });
            }
        }
    }
    for i in 0..ng {
        m.groups.push(AttributeGroup { id: format!("g{i}").into(), label: format!("Group {i}") });
    }
    for i in 0..na {
        let groups = (0..ng).filter(|_| rng.gen_bool(0.4)).map(|g| format!("g{g}").into()).collect();
        let collected = match rng.gen_range(0..4) {
            0 => CollectionStatus::Unstated,
            1 => CollectionStatus::Collected,
            2 => CollectionStatus::NotCollected,
            _ => CollectionStatus::Conflicting,
        };
        m.attributes.push(Attribute {
            id: format!("d{i}").into(),
            label: format!("Attribute {i}"),
            groups,
            collected,
            derived: false,
        });
    }
    for k in 2..na {
        if rng.gen_bool(0.3) {
            let l = rng.gen_range(0..k);
            let r = rng.gen_range(0..k);
            if l != r {
                m.aggregations.push(Aggregation {
                    left: format!("d{l}").into(),
                    right: format!("d{r}").into(),
                    product: format!("d{k}").into(),
                });
            }
        }
    }
    if rng.gen_bool(0.5) {
        m.granularities.push(GranularityFn { id: "G".into(), description: "coarsen".into() });
    }
    for i in 0..nt {
        let via = if !m.granularities.is_empty() && rng.gen_bool(0.3) { Some("G".into()) } else { None };
        m.tasks.push(Task {
            id: format!("t{i}").into(),
            label: format!("Task {i}"),
            reads: format!("d{}", rng.gen_range(0..na)).into(),
            via,
        });
    }
    for i in 0..np {
        let mut tasks: Vec<usize> = (0..nt).filter(|_| rng.gen_bool(0.3)).collect();
        tasks.shuffle(rng);
        m.purposes.push(Purpose {
            id: format!("p{i}").into(),
            label: format!("Purpose {i}"),
            tasks: tasks.into_iter().map(|t| format!("t{t}").into()).collect(),
            universal: rng.gen_bool(0.1),
        });
    }
    for r in 0..nr {
        for p in 0..np {
            if rng.gen_bool(0.3) {
                m.rp_grants.push(RolePurposeGrant {
                    role: format!("r{r}").into(),
                    purpose: format!("p{p}").into(),
                    condition: maybe_condition(rng, 0.4),
                });
            }
        }
    }
    m.rp_grants.shuffle(rng);
    let pairs: Vec<(PurposeId, TaskId)> =
        m.purposes.iter().flat_map(|p| p.tasks.iter().map(move |t| (p.id.clone(), t.clone()))).collect();
    for (purpose, task) in pairs {
        if rng.gen_bool(0.3) {
            m.pt_conditions.push(PurposeTaskCondition { purpose, task, condition: random_condition(rng) });
        }
    }
    for p in 0..np {
        for g in 0..ng {
            if rng.gen_bool(0.25) {
                m.pg_grants.push(PurposeGroupGrant {
                    purpose: format!("p{p}").into(),
                    group: format!("g{g}").into(),
                    condition: maybe_condition(rng, 0.4),
                });
            }
        }
    }
    m.refresh_derived();
    debug_assert!(validate(&m).is_empty(), "{}", validate(&m));
    m
}
