//! Line-level reader for the DOT text the renderer emits.

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub attrs: String,
}

impl Edge {
    pub fn attr(&self, key: &str) -> Option<String> {
        attr(&self.attrs, key)
    }

    pub fn is_dashed(&self) -> bool {
        self.attr("style").as_deref() == Some("dashed")
    }
}

/// Ids of every node statement.
pub fn nodes(dot: &str) -> Vec<String> {
    dot.lines()
        .map(str::trim)
        .filter(|l| l.starts_with('"') && !l.contains(" -> "))
        .map(|l| l[1..].split('"').next().unwrap().to_string())
        .collect()
}

pub fn edges(dot: &str) -> Vec<Edge> {
    dot.lines()
        .map(str::trim)
        .filter_map(|l| {
            let (lhs, rhs) = l.split_once(" -> ")?;
            let from = lhs.trim_matches('"').to_string();
            let to = rhs[1..].split('"').next()?.to_string();
            let attrs = rhs.split_once('[').map_or(String::new(), |(_, a)| a.trim_end_matches("];").to_string());
            Some(Edge { from, to, attrs })
        })
        .collect()
}

/// Value of `key` in an attribute list, with quotes removed.
pub fn attr(attrs: &str, key: &str) -> Option<String> {
    let start = attrs.find(&format!("{key}="))? + key.len() + 1;
    let rest = &attrs[start..];
    if let Some(quoted) = rest.strip_prefix('"') {
        let mut out = String::new();
        let mut chars = quoted.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => out.push(chars.next()?),
                '"' => return Some(out),
                c => out.push(c),
            }
        }
        None
    } else {
        Some(rest.split([',', ']']).next()?.trim().to_string())
    }
}
