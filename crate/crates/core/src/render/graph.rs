use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::str::FromStr;

use crate::model::{ensure_valid, InvalidModel, PolicyModel};

/// Edge colors for task sequences, assigned by purpose declaration index.
pub const PALETTE: [&str; 8] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Roles,
    Purposes,
    Attributes,
    RolePurpose,
    PurposeAttribute,
}

impl Layer {
    pub const ALL: [Layer; 5] =
        [Layer::Roles, Layer::Purposes, Layer::Attributes, Layer::RolePurpose, Layer::PurposeAttribute];

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Roles => "roles",
            Layer::Purposes => "purposes",
            Layer::Attributes => "attributes",
            Layer::RolePurpose => "role-purpose",
            Layer::PurposeAttribute => "purpose-attribute",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown layer `{0}` (expected roles, purposes, attributes, role-purpose, purpose-attribute or all)")]
pub struct UnknownLayer(pub String);

impl FromStr for Layer {
    type Err = UnknownLayer;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Layer::ALL.into_iter().find(|l| l.as_str() == s).ok_or_else(|| UnknownLayer(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderOptions {
    layers: BTreeSet<Layer>,
    pub show_legend: bool,
    pub cluster_groups: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions::all()
    }
}

impl RenderOptions {
    pub fn all() -> Self {
        Self::with_layers(Layer::ALL)
    }

    /// Connection layers pull in the component layers they connect.
    /// An empty selection means every layer.
    pub fn with_layers(layers: impl IntoIterator<Item = Layer>) -> Self {
        let mut set: BTreeSet<Layer> = layers.into_iter().collect();
        if set.is_empty() {
            set.extend(Layer::ALL);
        }
        if set.contains(&Layer::RolePurpose) {
            set.extend([Layer::Roles, Layer::Purposes]);
        }
        if set.contains(&Layer::PurposeAttribute) {
            set.extend([Layer::Purposes, Layer::Attributes]);
        }
        RenderOptions { layers: set, show_legend: false, cluster_groups: false }
    }

    /// Parses a comma-separated list such as `roles,role-purpose` or `all`.
    pub fn parse_layers(list: &str) -> Result<Self, UnknownLayer> {
        let mut layers = Vec::new();
        for word in list.split(',').map(str::trim).filter(|w| !w.is_empty()) {
            if word == "all" {
                layers.extend(Layer::ALL);
            } else {
                layers.push(word.parse()?);
            }
        }
        if layers.is_empty() {
            return Err(UnknownLayer(list.to_string()));
        }
        Ok(Self::with_layers(layers))
    }

    pub fn has(&self, layer: Layer) -> bool {
        self.layers.contains(&layer)
    }

    pub fn layers(&self) -> impl Iterator<Item = Layer> + '_ {
        self.layers.iter().copied()
    }
}

fn q(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn html(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Out {
    text: String,
    depth: usize,
}

impl Out {
    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.text.push_str("  ");
        }
        self.text.push_str(s);
        self.text.push('\n');
    }

    fn open(&mut self, s: &str) {
        self.line(s);
        self.depth += 1;
    }

    fn close(&mut self) {
        self.depth -= 1;
        self.line("}");
    }

    fn cluster_label(&mut self, title: &str, legend: bool, rows: Vec<(&str, &str)>) {
        match legend {
            true if !rows.is_empty() => {
                let mut label = format!(
                    "<<table border=\"0\" cellborder=\"1\" cellspacing=\"0\"><tr><td colspan=\"2\"><b>{}</b></td></tr>",
                    html(title)
                );
                for (id, text) in rows {
                    let _ = write!(label, "<tr><td>{}</td><td>{}</td></tr>", html(id), html(text));
                }
                label.push_str("</table>>");
                self.line(&format!("label={label};"));
            }
            _ => self.line(&format!("label={};", q(title))),
        }
    }
}

fn sorted<T>(items: &[T], id: impl Fn(&T) -> &str) -> Vec<&T> {
    let mut v: Vec<&T> = items.iter().collect();
    v.sort_by(|a, b| id(a).cmp(id(b)));
    v
}

/// Renders the selected layers as a directed graph in DOT syntax.
///
/// Nodes are named `role_<id>`, `purpose_<id>`, `task_<id>`, `attr_<id>` and
/// `group_<id>`. Role-purpose, task-attribute and purpose-group permission
/// edges are dashed; aggregation edges run from each input to the product.
pub fn emit_graph(model: &PolicyModel, opts: &RenderOptions) -> Result<String, InvalidModel> {
    ensure_valid(model)?;
    let m = model;
    let mut out = Out { text: String::new(), depth: 0 };
    out.open(&format!("digraph {} {{", q(&m.name)));
    out.line("graph [rankdir=LR, compound=true];");
    out.line("node [fontsize=10];");
    out.line("edge [fontsize=9];");

    let color: BTreeMap<&str, &str> =
        m.purposes.iter().enumerate().map(|(i, p)| (p.id.as_str(), PALETTE[i % PALETTE.len()])).collect();
    let granted_groups: BTreeSet<&str> = if opts.has(Layer::PurposeAttribute) {
        m.pg_grants.iter().map(|g| g.group.as_str()).collect()
    } else {
        BTreeSet::new()
    };

    if opts.has(Layer::Roles) {
        out.open("subgraph cluster_roles {");
        let roles = sorted(&m.roles, |r| r.id.as_str());
        out.cluster_label("Roles", opts.show_legend, roles.iter().map(|r| (r.id.as_str(), r.label.as_str())).collect());
        for r in roles {
            out.line(&format!("{} [shape=ellipse, label={}, tooltip={}];", q(&format!("role_{}", r.id)), q(r.id.as_str()), q(&r.label)));
        }
        out.close();
    }

    if opts.has(Layer::Purposes) {
        out.open("subgraph cluster_purposes {");
        let purposes = sorted(&m.purposes, |p| p.id.as_str());
        out.cluster_label(
            "Purposes",
            opts.show_legend, purposes.iter().map(|p| (p.id.as_str(), p.label.as_str())).collect(),
        );
        for p in purposes {
            let extra = if p.universal { ", peripheries=2" } else { "" };
            out.line(&format!(
                "{} [shape=ellipse, label={}, tooltip={}, color={}{extra}];",
                q(&format!("purpose_{}", p.id)),
                q(p.id.as_str()),
                q(&p.label),
                q(color[p.id.as_str()])
            ));
        }
        for t in sorted(&m.tasks, |t| t.id.as_str()) {
            out.line(&format!(
                "{} [shape=point, width=0.12, xlabel={}, tooltip={}];",
                q(&format!("task_{}", t.id)),
                q(t.id.as_str()),
                q(&t.label)
            ));
        }
        out.close();
    }

    if opts.has(Layer::Attributes) {
        out.open("subgraph cluster_attributes {");
        let attrs = sorted(&m.attributes, |a| a.id.as_str());
        out.cluster_label(
            "Attributes",
            opts.show_legend, attrs.iter().map(|a| (a.id.as_str(), a.label.as_str())).collect(),
        );
        let attr_node = |a: &crate::model::Attribute| {
            let mut tooltip = a.label.clone();
            if a.groups.len() > 1 || (!opts.cluster_groups && !a.groups.is_empty()) {
                let mut groups: Vec<&str> = a.groups.iter().map(|g| g.as_str()).collect();
                groups.sort_unstable();
                let _ = write!(tooltip, " (groups: {})", groups.join(", "));
            }
            let shape = if a.derived { "doubleoctagon" } else { "box" };
            format!("{} [shape={shape}, label={}, tooltip={}];", q(&format!("attr_{}", a.id)), q(a.id.as_str()), q(&tooltip))
        };
        let group_node = |id: &str| format!("{} [shape=tab, label={}];", q(&format!("group_{id}")), q(id));
        if opts.cluster_groups {
            fn home(a: &crate::model::Attribute) -> Option<&str> {
                a.groups.iter().map(|g| g.as_str()).min()
            }
            for g in sorted(&m.groups, |g| g.id.as_str()) {
                let members: Vec<_> = attrs.iter().filter(|a| home(a) == Some(g.id.as_str())).collect();
                out.open(&format!("subgraph {} {{", q(&format!("cluster_group_{}", g.id))));
                out.line(&format!("label={};", q(&g.label)));
                out.line("style=rounded;");
                if granted_groups.contains(g.id.as_str()) {
                    out.line(&group_node(g.id.as_str()));
                }
                for a in members {
                    out.line(&attr_node(a));
                }
                out.close();
            }
            for a in attrs.iter().filter(|a| home(a).is_none()) {
                out.line(&attr_node(a));
            }
        } else {
            for a in &attrs {
                out.line(&attr_node(a));
            }
            for g in &granted_groups {
                out.line(&group_node(g));
            }
        }
        out.close();
    }

    if opts.has(Layer::Roles) {
        let mut edges: Vec<(&str, &str)> =
            m.role_edges.iter().map(|e| (e.superior.as_str(), e.inferior.as_str())).collect();
        edges.sort_unstable();
        for (s, i) in edges {
            out.line(&format!("{} -> {};", q(&format!("role_{s}")), q(&format!("role_{i}"))));
        }
    }

    if opts.has(Layer::Purposes) {
        for p in sorted(&m.purposes, |p| p.id.as_str()) {
            let mut prev = format!("purpose_{}", p.id);
            for t in &p.tasks {
                let next = format!("task_{t}");
                out.line(&format!("{} -> {} [color={}];", q(&prev), q(&next), q(color[p.id.as_str()])));
                prev = next;
            }
        }
    }

    if opts.has(Layer::Attributes) {
        let mut edges: Vec<(&str, &str)> = m
            .aggregations
            .iter()
            .flat_map(|a| [(a.left.as_str(), a.product.as_str()), (a.right.as_str(), a.product.as_str())])
            .collect();
        edges.sort_unstable();
        edges.dedup();
        for (from, to) in edges {
            out.line(&format!("{} -> {} [style=solid];", q(&format!("attr_{from}")), q(&format!("attr_{to}"))));
        }
        if !opts.cluster_groups {
            for g in &granted_groups {
                let mut members: Vec<&str> = m.group_members(g).map(|a| a.id.as_str()).collect();
                members.sort_unstable();
                for a in members {
                    out.line(&format!(
                        "{} -> {} [style=dotted, arrowhead=none];",
                        q(&format!("group_{g}")),
                        q(&format!("attr_{a}"))
                    ));
                }
            }
        }
    }

    if opts.has(Layer::RolePurpose) {
        let mut grants: Vec<_> = m.rp_grants.iter().collect();
        grants.sort_by(|a, b| (&a.role, &a.purpose).cmp(&(&b.role, &b.purpose)));
        for g in grants {
            let label = g.condition.as_ref().map_or(String::new(), |c| format!(", label={}", q(&c.to_string())));
            out.line(&format!(
                "{} -> {} [style=dashed{label}];",
                q(&format!("role_{}", g.role)),
                q(&format!("purpose_{}", g.purpose))
            ));
        }
    }

    if opts.has(Layer::PurposeAttribute) {
        let mut tasks = sorted(&m.tasks, |t| t.id.as_str());
        tasks.retain(|t| m.purposes.iter().any(|p| p.tasks.contains(&t.id)));
        for t in tasks {
            let mut parts: Vec<String> = t.via.iter().map(|v| v.to_string()).collect();
            let mut conds: Vec<_> = m.pt_conditions.iter().filter(|c| c.task == t.id).collect();
            conds.sort_by(|a, b| a.purpose.cmp(&b.purpose));
            parts.extend(conds.iter().map(|c| format!("{}: {}", c.purpose, c.condition)));
            let label = if parts.is_empty() { String::new() } else { format!(", label={}", q(&parts.join("\n"))) };
            out.line(&format!(
                "{} -> {} [style=dashed{label}];",
                q(&format!("task_{}", t.id)),
                q(&format!("attr_{}", t.reads))
            ));
        }
        let mut grants: Vec<_> = m.pg_grants.iter().collect();
        grants.sort_by(|a, b| (&a.purpose, &a.group).cmp(&(&b.purpose, &b.group)));
        for g in grants {
            let label = g.condition.as_ref().map_or(String::new(), |c| format!(", label={}", q(&c.to_string())));
            out.line(&format!(
                "{} -> {} [style=dashed, color={}{label}];",
                q(&format!("purpose_{}", g.purpose)),
                q(&format!("group_{}", g.group)),
                q(color[g.purpose.as_str()])
            ));
        }
    }

    out.close();
    Ok(out.text)
}
