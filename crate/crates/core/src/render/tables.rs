use crate::model::{ensure_valid, InvalidModel, PolicyModel};

fn cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

struct Block {
    title: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

/// Tab-separated tables, one block per component or connection kind.
///
/// Each block is a `[title]` line, a header row and data rows in model
/// order. Blocks are separated by a blank line.
pub fn emit_tables(model: &PolicyModel) -> Result<String, InvalidModel> {
    ensure_valid(model)?;
    let m = model;
    let opt = |c: Option<&crate::condition::Condition>| c.map_or(String::new(), |c| c.to_string());
    let mut pd = Vec::new();
    for p in &m.purposes {
        for t in p.tasks.iter().filter_map(|t| m.task(t.as_str())) {
            pd.push(vec![
                p.id.to_string(),
                t.id.to_string(),
                t.reads.to_string(),
                opt(m.pt_condition(p.id.as_str(), t.id.as_str())),
                t.via.as_ref().map_or(String::new(), |v| v.to_string()),
            ]);
        }
    }
    for g in &m.pg_grants {
        let members: Vec<&str> = m.group_members(g.group.as_str()).map(|a| a.id.as_str()).collect();
        pd.push(vec![
            g.purpose.to_string(),
            format!("group:{}", g.group),
            members.join(","),
            opt(g.condition.as_ref()),
            String::new(),
        ]);
    }

    let blocks = [
        Block {
            title: "roles",
            header: &["id", "label"],
            rows: m.roles.iter().map(|r| vec![r.id.to_string(), cell(&r.label)]).collect(),
        },
        Block {
            title: "purposes",
            header: &["id", "label", "tasks", "universal"],
            rows: m
                .purposes
                .iter()
                .map(|p| {
                    let tasks: Vec<&str> = p.tasks.iter().map(|t| t.as_str()).collect();
                    let universal = if p.universal { "yes" } else { "" };
                    vec![p.id.to_string(), cell(&p.label), tasks.join(","), universal.to_string()]
                })
                .collect(),
        },
        Block {
            title: "attributes",
            header: &["id", "label", "groups", "collected", "derived"],
            rows: m
                .attributes
                .iter()
                .map(|a| {
                    let groups: Vec<&str> = a.groups.iter().map(|g| g.as_str()).collect();
                    let derived = if a.derived { "yes" } else { "" };
                    vec![
                        a.id.to_string(),
                        cell(&a.label),
                        groups.join(","),
                        a.collected.as_str().to_string(),
                        derived.to_string(),
                    ]
                })
                .collect(),
        },
        Block {
            title: "role_edges",
            header: &["superior", "inferior"],
            rows: m.role_edges.iter().map(|e| vec![e.superior.to_string(), e.inferior.to_string()]).collect(),
        },
        Block {
            title: "purpose_tasks",
            header: &["purpose", "position", "task", "label"],
            rows: m
                .purposes
                .iter()
                .flat_map(|p| {
                    p.tasks.iter().enumerate().map(move |(i, t)| {
                        let label = m.task(t.as_str()).map_or("", |t| t.label.as_str());
                        vec![p.id.to_string(), (i + 1).to_string(), t.to_string(), cell(label)]
                    })
                })
                .collect(),
        },
        Block {
            title: "aggregations",
            header: &["left", "right", "product"],
            rows: m
                .aggregations
                .iter()
                .map(|a| vec![a.left.to_string(), a.right.to_string(), a.product.to_string()])
                .collect(),
        },
        Block {
            title: "role_purpose",
            header: &["role", "purpose", "condition"],
            rows: m
                .rp_grants
                .iter()
                .map(|g| vec![g.role.to_string(), g.purpose.to_string(), opt(g.condition.as_ref())])
                .collect(),
        },
        Block {
            title: "purpose_data",
            header: &["purpose", "source", "attribute", "condition", "granularity"],
            rows: pd,
        },
    ];

    let mut out = String::new();
    for (i, b) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("[{}]\n{}\n", b.title, b.header.join("\t")));
        for row in &b.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
    }
    Ok(out)
}
