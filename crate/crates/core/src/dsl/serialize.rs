use std::fmt::Write;

use super::Section;
use crate::model::{CollectionStatus, PolicyModel};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn when(cond: Option<&impl ToString>) -> String {
    cond.map_or(String::new(), |c| format!(" when {}", quote(&c.to_string())))
}

/// Writes `model` in canonical policy syntax.
///
/// Sections appear in a fixed order and empty ones are omitted; entries keep
/// model order, one per line with a two-space indent. Conditions are written
/// in canonical form, so parsing the output and serializing again yields the
/// same text.
pub fn serialize(model: &PolicyModel) -> String {
    let mut out = format!("policy {}\n", quote(&model.name));
    for section in Section::ALL {
        let lines = section_lines(model, section);
        if lines.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n{} {{", section.keyword());
        for line in lines {
            let _ = writeln!(out, "  {line}");
        }
        out.push_str("}\n");
    }
    out
}

fn section_lines(m: &PolicyModel, section: Section) -> Vec<String> {
    match section {
        Section::Roles => m.roles.iter().map(|r| format!("{}: {}", r.id, quote(&r.label))).collect(),
        Section::RoleHierarchy => m.role_edges.iter().map(|e| format!("{} -> {}", e.superior, e.inferior)).collect(),
        Section::Groups => m.groups.iter().map(|g| format!("{}: {}", g.id, quote(&g.label))).collect(),
        Section::Attributes => {
            let mut lines = Vec::new();
            for a in &m.attributes {
                let mut line = format!("{}: {}", a.id, quote(&a.label));
                if !a.groups.is_empty() {
                    let groups: Vec<&str> = a.groups.iter().map(|g| g.as_str()).collect();
                    let _ = write!(line, " groups({})", groups.join(", "));
                }
                match a.collected {
                    CollectionStatus::Unstated => lines.push(line),
                    CollectionStatus::Collected => lines.push(line + " collected = yes"),
                    CollectionStatus::NotCollected => lines.push(line + " collected = no"),
                    CollectionStatus::Conflicting => {
                        lines.push(line + " collected = yes");
                        lines.push(format!("{}: {} collected = no", a.id, quote(&a.label)));
                    }
                }
            }
            lines
        }
        Section::Aggregations => m
            .aggregations
            .iter()
            .map(|a| format!("({}, {}) -> {}", a.left, a.right, a.product))
            .collect(),
        Section::Granularities => m
            .granularities
            .iter()
            .map(|g| format!("{}: {}", g.id, quote(&g.description)))
            .collect(),
        Section::Tasks => m
            .tasks
            .iter()
            .map(|t| {
                let via = t.via.as_ref().map_or(String::new(), |v| format!(" via {v}"));
                format!("{}: {} reads {}{via}", t.id, quote(&t.label), t.reads)
            })
            .collect(),
        Section::Purposes => m
            .purposes
            .iter()
            .map(|p| {
                let mut line = format!("{}: {}", p.id, quote(&p.label));
                if !p.tasks.is_empty() {
                    let tasks: Vec<&str> = p.tasks.iter().map(|t| t.as_str()).collect();
                    let _ = write!(line, " = [{}]", tasks.join(", "));
                }
                if p.universal {
                    line.push_str(" universal");
                }
                line
            })
            .collect(),
        Section::RolePurpose => m
            .rp_grants
            .iter()
            .map(|g| format!("{} allowed {}{}", g.role, g.purpose, when(g.condition.as_ref())))
            .collect(),
        Section::PurposeTaskConditions => m
            .pt_conditions
            .iter()
            .map(|c| format!("{} task {}{}", c.purpose, c.task, when(Some(&c.condition))))
            .collect(),
        Section::PurposeGroup => m
            .pg_grants
            .iter()
            .map(|g| format!("{} allowed group {}{}", g.purpose, g.group, when(g.condition.as_ref())))
            .collect(),
    }
}
