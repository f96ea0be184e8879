//! One check per acceptance criterion. Each returns a short summary on
//! success and the first mismatch on failure. The fixture tests and the
//! acceptance harness both call these.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use pppm_core::analysis::{run_lints, Finding, LintConfig, RuleId};
use pppm_core::query::QueryEngine;
use pppm_core::render::{emit_graph, emit_tables, Layer, RenderOptions};
use pppm_core::{evaluate, load_policy, parse_condition, serialize, PolicyModel, TriBool, Value};
use rand::Rng;

use super::chains::{pairwise, random_chain, random_env, text, to_context, Chain, Domain};
use super::oracle::{check, random_query, reach};
use super::{dot, random_context, random_model, rng, Limits, CHATTERBABY_TEXT, SHOP_TEXT, SMALL, VARS};

/// Upper bound on loading and validating one fixture.
pub const MAX_LOAD: Duration = Duration::from_secs(1);
/// Minimum number of random models in the query oracle suite.
pub const ORACLE_MODELS: usize = 1000;
/// Minimum number of random chains and of monotonicity triples.
pub const CONDITION_CASES: usize = 1000;

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

macro_rules! ensure_eq {
    ($got:expr, $want:expr, $what:expr) => {{
        let (got, want) = (&$got, &$want);
        ensure!(got == want, "{}: got {:?}, want {:?}", $what, got, want);
    }};
}

fn timed_load(name: &str, text: &str) -> Result<(PolicyModel, Duration), String> {
    let start = Instant::now();
    let m = load_policy(name, text).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(elapsed < MAX_LOAD, "{name} took {elapsed:?}, limit {MAX_LOAD:?}");
    Ok((m, elapsed))
}

fn set<I, S>(items: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: ToString,
{
    items.into_iter().map(|s| s.to_string()).collect()
}

fn cond_text(c: &Option<pppm_core::Condition>) -> Option<String> {
    c.as_ref().map(|c| c.to_string())
}

pub fn shop_fixture() -> Outcome {
    let (m, elapsed) = timed_load("imaginary_shop.pppm", SHOP_TEXT)?;
    ensure_eq!(m.roles.len(), 4, "roles");
    ensure_eq!(m.purposes.len(), 4, "purposes");
    ensure_eq!(m.attributes.len(), 7, "attributes");
    ensure_eq!(m.tasks.len(), 10, "tasks");
    ensure_eq!(m.groups.len(), 1, "groups");
    ensure_eq!(set(m.group_members("personal").map(|a| &a.id)), set(["d1", "d3", "d4", "d5", "d6"]), "personal");

    let labels: Vec<(&str, &str)> = m.roles.iter().map(|r| (r.id.as_str(), r.label.as_str())).collect();
    ensure_eq!(labels, vec![("r1", "Manager"), ("r2", "Deliverer"), ("r3", "Analyzer"), ("r4", "Marketer")], "role labels");
    let edges = set(m.role_edges.iter().map(|e| format!("{}>{}", e.superior, e.inferior)));
    ensure_eq!(edges, set(["r1>r2", "r1>r3", "r3>r4"]), "role edges");

    let aggs: Vec<String> =
        m.aggregations.iter().map(|a| format!("{}+{}={}", a.left, a.right, a.product)).collect();
    ensure_eq!(aggs, vec!["d6+d2=d7".to_string()], "aggregations");
    let names = |ids: [&str; 3]| ids.map(|d| m.attribute(d).map(|a| a.label.clone()).unwrap_or_default());
    ensure_eq!(names(["d6", "d2", "d7"]), ["DOB", "Order list", "Interest"].map(String::from), "aggregation labels");

    let purposes: Vec<(&str, &str, Vec<&str>)> = m
        .purposes
        .iter()
        .map(|p| (p.id.as_str(), p.label.as_str(), p.tasks.iter().map(|t| t.as_str()).collect()))
        .collect();
    ensure_eq!(
        purposes,
        vec![
            ("p1", "Shipment", vec!["t1", "t2", "t3", "t4", "t5"]),
            ("p2", "Sending gift", vec!["t7", "t1", "t4"]),
            ("p3", "Marketing", vec!["t1", "t6"]),
            ("p4", "Analyzing", vec!["t8", "t9", "t10"]),
        ],
        "purposes"
    );

    let rp: Vec<(String, String, Option<String>)> =
        m.rp_grants.iter().map(|g| (g.role.to_string(), g.purpose.to_string(), cond_text(&g.condition))).collect();
    ensure_eq!(rp.len(), 4, "role-purpose grants");
    let conditional: Vec<_> = rp.into_iter().filter(|g| g.2.is_some()).collect();
    ensure_eq!(
        conditional,
        vec![("r4".to_string(), "p3".to_string(), Some("08:00 < now < 17:00".to_string()))],
        "conditional grants"
    );

    let pt: Vec<(String, String, String)> = m
        .pt_conditions
        .iter()
        .map(|c| (c.purpose.to_string(), c.task.to_string(), c.condition.to_string()))
        .collect();
    ensure_eq!(pt, vec![("p3".into(), "t1".into(), "age > 18".into())], "purpose-task conditions");

    let via: Vec<(String, String)> = m
        .tasks
        .iter()
        .filter_map(|t| Some((t.id.to_string(), t.via.as_ref()?.to_string())))
        .collect();
    ensure_eq!(via, vec![("t8".into(), "Date2Age".into())], "granularity bindings");
    ensure_eq!(m.task("t8").map(|t| t.reads.to_string()), Some("d6".to_string()), "t8 reads");
    Ok(format!("4 roles, 4 purposes, 7 attributes, 10 tasks, 1 group of 5 in {elapsed:?}"))
}

pub fn chatterbaby_fixture() -> Outcome {
    let (m, elapsed) = timed_load("chatterbaby.pppm", CHATTERBABY_TEXT)?;
    ensure_eq!(m.roles.len(), 7, "roles");
    ensure_eq!(m.purposes.len(), 27, "purposes");
    ensure_eq!(m.attributes.len(), 35, "attributes");
    ensure_eq!(m.role_edges.len(), 4, "role edges");
    ensure_eq!(m.rp_grants.len(), 28, "role-purpose grants");
    ensure_eq!(m.pg_grants.len(), 27, "purpose-group grants");
    ensure_eq!(m.tasks.len(), 8, "tasks");
    let bound: BTreeSet<String> =
        m.purposes.iter().flat_map(|p| p.tasks.iter().map(|t| t.to_string())).collect();
    ensure_eq!(bound.len(), 8, "tasks bound to purposes");
    let universal: Vec<_> = m.purposes.iter().filter(|p| p.universal).map(|p| p.id.to_string()).collect();
    ensure_eq!(universal, vec!["p24".to_string()], "universal purposes");
    Ok(format!("7 roles, 27 purposes, 35 attributes, 28 RP, 27 PG, 8 tasks in {elapsed:?}"))
}

fn subjects(findings: &[Finding], rule: RuleId) -> BTreeSet<Vec<String>> {
    findings.iter().filter(|f| f.rule == rule).map(|f| f.subject.clone()).collect()
}

fn firsts(findings: &[Finding], rule: RuleId) -> BTreeSet<String> {
    findings.iter().filter(|f| f.rule == rule).map(|f| f.subject[0].clone()).collect()
}

pub fn gap_analysis() -> Outcome {
    let m = load_policy("chatterbaby.pppm", CHATTERBABY_TEXT).map_err(|e| e.to_string())?;
    let findings = run_lints(&m, &LintConfig::default()).map_err(|e| e.to_string())?;
    ensure_eq!(firsts(&findings, RuleId::L1), set(["p4", "p17", "p18"]), "L1");
    ensure!(firsts(&findings, RuleId::L3).contains("p24"), "no L3 finding names p24");
    ensure!(firsts(&findings, RuleId::L4).contains("p24"), "no L4 finding names p24");
    ensure!(
        subjects(&findings, RuleId::L5).contains(&vec!["p12".to_string(), "personal".to_string()]),
        "no L5 finding for (p12, personal): {:?}",
        subjects(&findings, RuleId::L5)
    );
    ensure_eq!(firsts(&findings, RuleId::L6), set(["d32", "d33", "d34", "d35"]), "L6");
    ensure!(firsts(&findings, RuleId::L9).contains("d7"), "no L9 finding for d7");

    let shop = load_policy("imaginary_shop.pppm", SHOP_TEXT).map_err(|e| e.to_string())?;
    let shop_findings = run_lints(&shop, &LintConfig::default()).map_err(|e| e.to_string())?;
    let false_alarms: Vec<_> = shop_findings
        .iter()
        .filter(|f| matches!(f.rule, RuleId::L1 | RuleId::L3 | RuleId::L4 | RuleId::L5))
        .map(|f| f.to_string())
        .collect();
    ensure!(false_alarms.is_empty(), "shop findings {false_alarms:?}");
    Ok(format!("{} ChatterBaby findings, {} on the shop", findings.len(), shop_findings.len()))
}

pub fn query_closure() -> Outcome {
    let m = load_policy("imaginary_shop.pppm", SHOP_TEXT).map_err(|e| e.to_string())?;
    let engine = QueryEngine::new(&m).map_err(|e| e.to_string())?;
    let got: BTreeSet<(String, Option<String>, String)> = engine
        .effective_purposes("r1")
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|e| (e.purpose.to_string(), cond_text(&e.condition), e.via.to_string()))
        .collect();
    let roles = reach(&m, "r1");
    let brute: BTreeSet<(String, Option<String>, String)> = m
        .rp_grants
        .iter()
        .filter(|g| roles.contains(g.role.as_str()))
        .map(|g| (g.purpose.to_string(), cond_text(&g.condition), g.role.to_string()))
        .collect();
    ensure_eq!(got, brute, "effective purposes of r1 against path enumeration");
    ensure_eq!(set(got.iter().map(|e| &e.0)), set(["p1", "p2", "p3", "p4"]), "purposes of r1");
    let marketing: Vec<_> = got.iter().filter(|e| e.0 == "p3").collect();
    ensure_eq!(marketing.len(), 1, "Marketing entries");
    ensure_eq!(marketing[0].1.as_deref(), Some("08:00 < now < 17:00"), "Marketing condition");

    let (models, queries) = oracle_suite(0xacce_0004, ORACLE_MODELS, &SMALL)?;
    Ok(format!("r1 reaches p1..p4; {queries} queries over {models} random models agree with the oracle"))
}

/// Runs the brute-force oracle over `models` random models with four
/// queries each and returns the counts.
pub fn oracle_suite(seed: u64, models: usize, limits: &Limits) -> Result<(usize, usize), String> {
    let mut rng = rng(seed);
    let mut queries = 0;
    for i in 0..models {
        let m = random_model(&mut rng, limits);
        ensure!(m.roles.len() <= 5 && m.purposes.len() <= 5 && m.attributes.len() <= 6, "model {i} too large");
        for _ in 0..4 {
            let q = random_query(&m, &mut rng);
            check(&m, &q).map_err(|e| format!("model {i}: {e}"))?;
            queries += 1;
        }
    }
    Ok((models, queries))
}

struct Outputs {
    serialized: String,
    lint: String,
    render: String,
    render_variants: String,
    report: String,
}

fn outputs(name: &str, text: &str) -> Result<Outputs, String> {
    let m = load_policy(name, text).map_err(|e| e.to_string())?;
    let lint: String = run_lints(&m, &LintConfig::default())
        .map_err(|e| e.to_string())?
        .iter()
        .map(|f| f.tsv() + "\n")
        .collect();
    let render = emit_graph(&m, &RenderOptions::all()).map_err(|e| e.to_string())?;
    let mut variants = String::new();
    for (legend, cluster) in [(true, false), (false, true), (true, true)] {
        let mut opts = RenderOptions::all();
        opts.show_legend = legend;
        opts.cluster_groups = cluster;
        variants.push_str(&emit_graph(&m, &opts).map_err(|e| e.to_string())?);
    }
    let report = emit_tables(&m).map_err(|e| e.to_string())?;
    Ok(Outputs { serialized: serialize(&m), lint, render, render_variants: variants, report })
}

/// Committed expected outputs. Matching them byte for byte on every
/// platform the suite runs on is what makes the outputs portable.
pub const GOLDEN: [(&str, &str); 6] = [
    ("shop.pppm", include_str!("../golden/shop.pppm")),
    ("shop.dot", include_str!("../golden/shop.dot")),
    ("shop.tsv", include_str!("../golden/shop.tsv")),
    ("chatterbaby.pppm", include_str!("../golden/chatterbaby.pppm")),
    ("chatterbaby.lint.tsv", include_str!("../golden/chatterbaby.lint.tsv")),
    ("chatterbaby.dot", include_str!("../golden/chatterbaby.dot")),
];

/// The current outputs under the names used by [`GOLDEN`].
pub fn golden_outputs() -> Result<Vec<(&'static str, String)>, String> {
    let shop = outputs("imaginary_shop.pppm", SHOP_TEXT)?;
    let cb = outputs("chatterbaby.pppm", CHATTERBABY_TEXT)?;
    Ok(vec![
        ("shop.pppm", shop.serialized),
        ("shop.dot", shop.render),
        ("shop.tsv", shop.report),
        ("chatterbaby.pppm", cb.serialized),
        ("chatterbaby.lint.tsv", cb.lint),
        ("chatterbaby.dot", cb.render),
    ])
}

pub fn determinism() -> Outcome {
    for (name, text) in [("imaginary_shop.pppm", SHOP_TEXT), ("chatterbaby.pppm", CHATTERBABY_TEXT)] {
        let (a, b) = (outputs(name, text)?, outputs(name, text)?);
        ensure!(a.serialized == b.serialized, "{name}: serialize differs between runs");
        ensure!(a.lint == b.lint, "{name}: lint differs between runs");
        ensure!(a.render == b.render, "{name}: render differs between runs");
        ensure!(a.render_variants == b.render_variants, "{name}: render variants differ between runs");
        ensure!(a.report == b.report, "{name}: report differs between runs");

        let m = load_policy(name, text).map_err(|e| e.to_string())?;
        let again = load_policy(name, &a.serialized).map_err(|e| format!("{name}: reparse failed: {e}"))?;
        ensure!(again == m, "{name}: parse after serialize changed the model");
        ensure!(serialize(&again) == a.serialized, "{name}: serialize is not stable");
    }
    for ((name, want), (_, got)) in GOLDEN.iter().zip(golden_outputs()?) {
        ensure!(!got.contains('\r'), "{name}: carriage return in output");
        ensure!(got == *want, "{name}: differs from the committed golden file");
    }
    Ok(format!("2 runs identical, round trip exact, {} golden files match on this platform", GOLDEN.len()))
}

pub fn chain_semantics(cases: usize) -> Result<[usize; 3], String> {
    let mut rng = rng(0xc0de_0001);
    let mut outcomes = [0usize; 3];
    for i in 0..cases {
        let domain = if i % 4 == 3 { Domain::Time } else { Domain::Number };
        let chains: Vec<Chain> = (0..rng.gen_range(1..=2)).map(|_| random_chain(&mut rng, domain)).collect();
        let env = random_env(&mut rng, domain);
        let source = text(&chains);
        let cond = parse_condition(&source).map_err(|e| format!("{source}: {e}"))?;
        let got = evaluate(&cond, &to_context(&env, domain)).map_err(|e| format!("{source}: {e}"))?;
        let want = pairwise(&chains, &env);
        ensure!(got == want, "{source} under {env:?}: got {got:?}, pairwise gives {want:?}");
        outcomes[match got {
            TriBool::False => 0,
            TriBool::Unknown => 1,
            TriBool::True => 2,
        }] += 1;
    }
    Ok(outcomes)
}

/// Returns how many triples had a decided result before extension.
pub fn kleene_monotonicity(cases: usize) -> Result<usize, String> {
    let mut rng = rng(0xc0de_0002);
    let mut decided = 0;
    for _ in 0..cases {
        let cond = super::random_condition(&mut rng);
        let ctx = random_context(&mut rng);
        let before = evaluate(&cond, &ctx).map_err(|e| e.to_string())?;
        let mut wider = ctx.clone();
        for v in VARS {
            if wider.get(v).is_none() && rng.gen_bool(0.5) {
                wider.bind(v, Value::Number(rng.gen_range(0..5) as f64));
            }
        }
        let after = evaluate(&cond, &wider).map_err(|e| e.to_string())?;
        if before != TriBool::Unknown {
            decided += 1;
            ensure!(after == before, "{cond}: {before:?} became {after:?} after extension");
        }
    }
    Ok(decided)
}

pub fn condition_semantics() -> Outcome {
    let outcomes = chain_semantics(4 * CONDITION_CASES)?;
    ensure!(outcomes.iter().all(|&n| n > 0), "not every truth value was produced: {outcomes:?}");
    let decided = kleene_monotonicity(4 * CONDITION_CASES)?;
    ensure!(decided >= CONDITION_CASES, "only {decided} decided triples");
    Ok(format!(
        "{} chains match (false/unknown/true = {:?}); {decided} decided triples stay fixed",
        4 * CONDITION_CASES,
        outcomes
    ))
}

pub fn render_fidelity() -> Outcome {
    let m = load_policy("imaginary_shop.pppm", SHOP_TEXT).map_err(|e| e.to_string())?;
    let roles = emit_graph(&m, &RenderOptions::with_layers([Layer::Roles])).map_err(|e| e.to_string())?;
    ensure_eq!(set(dot::nodes(&roles)), set(["role_r1", "role_r2", "role_r3", "role_r4"]), "role layer nodes");
    ensure_eq!(dot::nodes(&roles).len(), 4, "role layer node statements");
    let edges: Vec<String> = dot::edges(&roles).iter().map(|e| format!("{}>{}", e.from, e.to)).collect();
    ensure_eq!(set(&edges), set(["role_r1>role_r2", "role_r1>role_r3", "role_r3>role_r4"]), "role layer edges");
    ensure_eq!(edges.len(), 3, "role layer edge statements");

    let full = emit_graph(&m, &RenderOptions::all()).map_err(|e| e.to_string())?;
    let nodes = dot::nodes(&full);
    ensure_eq!(nodes.len(), 25, "full render nodes");
    let rp: Vec<dot::Edge> = dot::edges(&full)
        .into_iter()
        .filter(|e| e.from.starts_with("role_") && e.to.starts_with("purpose_"))
        .collect();
    ensure_eq!(rp.len(), 4, "role-purpose edges");
    ensure!(rp.iter().all(|e| e.is_dashed()), "role-purpose edges are not all dashed");
    let dashed_rp = dot::edges(&full)
        .iter()
        .filter(|e| e.is_dashed() && e.from.starts_with("role_"))
        .count();
    ensure_eq!(dashed_rp, 4, "dashed edges leaving roles");
    let labels: Vec<String> = rp.iter().filter_map(|e| e.attr("label")).collect();
    ensure_eq!(labels, vec!["08:00 < now < 17:00".to_string()], "role-purpose labels");
    let labelled = rp.iter().find(|e| e.attr("label").is_some()).unwrap();
    ensure_eq!((labelled.from.as_str(), labelled.to.as_str()), ("role_r4", "purpose_p3"), "labelled edge");
    Ok(format!("role layer 4 nodes / 3 edges; full render {} nodes, 4 dashed RP edges", nodes.len()))
}
