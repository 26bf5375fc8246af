//! Conditional preference networks over binary issues.
//!
//! Text format, one statement per line (`#` starts a comment):
//!
//! ```text
//! issue x
//! issue y: yes,no
//! parents y: x
//! row x []: yes > no
//! row y [x=yes]: no > yes
//! row y [x=no]: yes > no
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A binary issue. `values[0]` and `values[1]` are its two domain values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub id: String,
    pub values: [String; 2],
}

impl Issue {
    /// Issue with the default `yes`/`no` domain.
    pub fn yes_no(id: impl Into<String>) -> Self {
        Issue {
            id: id.into(),
            values: ["yes".to_string(), "no".to_string()],
        }
    }

    pub fn has_value(&self, v: &str) -> bool {
        self.values.iter().any(|x| x == v)
    }
}

/// Parent assignment; keys are parent issue ids.
pub type Assignment = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CptRow {
    #[serde(default)]
    pub condition: Assignment,
    /// `order[0]` is preferred to `order[1]`.
    pub order: [String; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpNet {
    pub issues: Vec<Issue>,
    #[serde(default)]
    pub parents: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub cpt: BTreeMap<String, Vec<CptRow>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateIssue { issue: String },
    DuplicateValue { issue: String },
    UnknownIssue { issue: String },
    SelfParent { issue: String },
    Cycle { issues: Vec<String> },
    MissingRow { issue: String, condition: Assignment },
    DuplicateRow { issue: String, condition: Assignment },
    /// Row condition does not assign exactly the parents, or uses a value outside a parent's domain.
    MalformedCondition { issue: String, row: usize },
    /// Row order is not the issue's two values.
    MalformedOrder { issue: String, row: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateIssue { issue } => write!(f, "issue `{issue}` declared twice"),
            Violation::DuplicateValue { issue } => write!(f, "issue `{issue}` repeats a domain value"),
            Violation::UnknownIssue { issue } => write!(f, "unknown issue `{issue}`"),
            Violation::SelfParent { issue } => write!(f, "issue `{issue}` is its own parent"),
            Violation::Cycle { issues } => write!(f, "dependency cycle among {}", issues.join(", ")),
            Violation::MissingRow { issue, condition } => {
                write!(f, "issue `{issue}` has no row for {}", render_condition(condition))
            }
            Violation::DuplicateRow { issue, condition } => {
                write!(f, "issue `{issue}` has two rows for {}", render_condition(condition))
            }
            Violation::MalformedCondition { issue, row } => {
                write!(f, "row {row} of `{issue}` does not assign exactly its parents")
            }
            Violation::MalformedOrder { issue, row } => {
                write!(f, "row {row} of `{issue}` does not order the issue's two values")
            }
        }
    }
}

fn render_condition(c: &Assignment) -> String {
    let parts: Vec<String> = c.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("[{}]", parts.join(","))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CpNetError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown issue `{0}`")]
    UnknownIssue(String),
    #[error("issue `{issue}` needs parent `{parent}` decided first")]
    UndecidedParent { issue: String, parent: String },
    #[error("issue `{issue}` has no preference row for {condition:?}")]
    MissingRow { issue: String, condition: Assignment },
    #[error("issue order is not a permutation of the net's issues")]
    NotAPermutation,
}

impl CpNet {
    pub fn issue(&self, id: &str) -> Option<&Issue> {
        self.issues.iter().find(|i| i.id == id)
    }

    pub fn parents_of(&self, id: &str) -> &[String] {
        self.parents.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Checks acyclicity and table completeness; collects every violation.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut ids = BTreeSet::new();
        for issue in &self.issues {
            if !ids.insert(issue.id.as_str()) {
                violations.push(Violation::DuplicateIssue { issue: issue.id.clone() });
            }
            if issue.values[0] == issue.values[1] {
                violations.push(Violation::DuplicateValue { issue: issue.id.clone() });
            }
        }
        for key in self.parents.keys().chain(self.cpt.keys()) {
            if !ids.contains(key.as_str()) {
                violations.push(Violation::UnknownIssue { issue: key.clone() });
            }
        }
        for (child, parents) in &self.parents {
            for p in parents {
                if p == child {
                    violations.push(Violation::SelfParent { issue: child.clone() });
                } else if !ids.contains(p.as_str()) {
                    violations.push(Violation::UnknownIssue { issue: p.clone() });
                }
            }
        }
        violations.extend(self.cycles().into_iter().map(|issues| Violation::Cycle { issues }));

        for issue in &self.issues {
            let parents: Vec<&Issue> = self
                .parents_of(&issue.id)
                .iter()
                .filter(|p| **p != issue.id)
                .filter_map(|p| self.issue(p))
                .collect();
            let rows = self.cpt.get(&issue.id).map(Vec::as_slice).unwrap_or(&[]);
            let mut covered = BTreeSet::new();
            for (r, row) in rows.iter().enumerate() {
                let well_formed = row.condition.len() == parents.len()
                    && parents
                        .iter()
                        .all(|p| row.condition.get(&p.id).is_some_and(|v| p.has_value(v)));
                if !well_formed {
                    violations.push(Violation::MalformedCondition { issue: issue.id.clone(), row: r });
                } else if !covered.insert(row.condition.clone()) {
                    violations.push(Violation::DuplicateRow {
                        issue: issue.id.clone(),
                        condition: row.condition.clone(),
                    });
                }
                let [a, b] = &row.order;
                if a == b || !issue.has_value(a) || !issue.has_value(b) {
                    violations.push(Violation::MalformedOrder { issue: issue.id.clone(), row: r });
                }
            }
            for condition in all_assignments(&parents) {
                if !covered.contains(&condition) {
                    violations.push(Violation::MissingRow { issue: issue.id.clone(), condition });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Strongly connected groups of size > 1 in the parent graph.
    fn cycles(&self) -> Vec<Vec<String>> {
        let ids: Vec<&str> = self.issues.iter().map(|i| i.id.as_str()).collect();
        let n = ids.len();
        let index = |s: &str| ids.iter().position(|x| *x == s);
        let mut reach = vec![vec![false; n]; n];
        for (child, parents) in &self.parents {
            let Some(c) = index(child) else { continue };
            for p in parents.iter().filter_map(|p| index(p)) {
                if p != c {
                    reach[p][c] = true;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        let mut assigned = vec![false; n];
        let mut out = Vec::new();
        for i in 0..n {
            if assigned[i] || !reach[i][i] {
                continue;
            }
            let group: Vec<usize> = (0..n).filter(|&j| j == i || (reach[i][j] && reach[j][i])).collect();
            for &j in &group {
                assigned[j] = true;
            }
            out.push(group.into_iter().map(|j| ids[j].to_string()).collect());
        }
        out
    }

    /// True iff every issue's parents appear before it in `order`.
    pub fn is_order_legal(&self, order: &[String]) -> Result<bool, CpNetError> {
        let declared: BTreeSet<&str> = self.issues.iter().map(|i| i.id.as_str()).collect();
        let given: BTreeSet<&str> = order.iter().map(String::as_str).collect();
        if given != declared || order.len() != self.issues.len() {
            return Err(CpNetError::NotAPermutation);
        }
        let position = |id: &str| order.iter().position(|x| x == id);
        Ok(self.issues.iter().all(|issue| {
            let at = position(&issue.id);
            self.parents_of(&issue.id)
                .iter()
                .all(|p| matches!((position(p), at), (Some(pp), Some(ip)) if pp < ip))
        }))
    }

    /// Preferred value of `issue` given decided values for all of its parents.
    pub fn local_vote(&self, issue: &str, decided: &Assignment) -> Result<&str, CpNetError> {
        if self.issue(issue).is_none() {
            return Err(CpNetError::UnknownIssue(issue.to_string()));
        }
        let mut condition = Assignment::new();
        for p in self.parents_of(issue) {
            let Some(v) = decided.get(p) else {
                return Err(CpNetError::UndecidedParent {
                    issue: issue.to_string(),
                    parent: p.clone(),
                });
            };
            condition.insert(p.clone(), v.clone());
        }
        self.cpt
            .get(issue)
            .and_then(|rows| rows.iter().find(|r| r.condition == condition))
            .map(|r| r.order[0].as_str())
            .ok_or(CpNetError::MissingRow {
                issue: issue.to_string(),
                condition,
            })
    }
}

fn all_assignments(parents: &[&Issue]) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for p in parents {
        out = out
            .into_iter()
            .flat_map(|a| {
                p.values.iter().map(move |v| {
                    let mut next = a.clone();
                    next.insert(p.id.clone(), v.clone());
                    next
                })
            })
            .collect();
    }
    out
}

fn bad(line: usize, message: impl Into<String>) -> CpNetError {
    CpNetError::Syntax {
        line,
        message: message.into(),
    }
}

fn token(s: &str, line: usize) -> Result<String, CpNetError> {
    let t = s.trim();
    if t.is_empty() || t.chars().any(|c| c.is_whitespace() || ",:=>[]".contains(c)) {
        return Err(bad(line, format!("invalid token `{t}`")));
    }
    Ok(t.to_string())
}

/// Reads the line-based CP-net format. Structural problems (cycles, missing
/// rows) are left to [`CpNet::validate`].
pub fn parse_cpnet(text: &str) -> Result<CpNet, CpNetError> {
    let mut net = CpNet::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (keyword, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        match keyword {
            "issue" => {
                let (id, values) = match rest.split_once(':') {
                    Some((id, domain)) => {
                        let parts: Vec<&str> = domain.split(',').collect();
                        if parts.len() != 2 {
                            return Err(bad(line, "an issue domain has exactly two values"));
                        }
                        (id, [token(parts[0], line)?, token(parts[1], line)?])
                    }
                    None => (rest, ["yes".to_string(), "no".to_string()]),
                };
                net.issues.push(Issue {
                    id: token(id, line)?,
                    values,
                });
            }
            "parents" => {
                let (id, list) = rest
                    .split_once(':')
                    .ok_or_else(|| bad(line, "expected `parents <issue>: p1,p2`"))?;
                let parents = list
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| token(p, line))
                    .collect::<Result<Vec<_>, _>>()?;
                net.parents.entry(token(id, line)?).or_default().extend(parents);
            }
            "row" => {
                let open = rest.find('[').ok_or_else(|| bad(line, "expected `[` in row"))?;
                let close = rest.find(']').ok_or_else(|| bad(line, "expected `]` in row"))?;
                if close < open {
                    return Err(bad(line, "malformed row condition"));
                }
                let id = token(&rest[..open], line)?;
                let mut condition = Assignment::new();
                for part in rest[open + 1..close].split(',').filter(|p| !p.trim().is_empty()) {
                    let (k, v) = part
                        .split_once('=')
                        .ok_or_else(|| bad(line, format!("expected `parent=value`, found `{}`", part.trim())))?;
                    condition.insert(token(k, line)?, token(v, line)?);
                }
                let order = rest[close + 1..]
                    .trim_start()
                    .strip_prefix(':')
                    .ok_or_else(|| bad(line, "expected `:` after row condition"))?;
                let values: Vec<&str> = order.split('>').collect();
                if values.len() != 2 {
                    return Err(bad(line, "a row orders exactly two values"));
                }
                net.cpt.entry(id).or_default().push(CptRow {
                    condition,
                    order: [token(values[0], line)?, token(values[1], line)?],
                });
            }
            other => return Err(bad(line, format!("unknown statement `{other}`"))),
        }
    }
    Ok(net)
}

/// Writes a net in the text format accepted by [`parse_cpnet`].
pub fn serialize_cpnet(net: &CpNet) -> String {
    let mut out = String::new();
    for issue in &net.issues {
        if issue.values == ["yes", "no"] {
            out.push_str(&format!("issue {}\n", issue.id));
        } else {
            out.push_str(&format!("issue {}: {},{}\n", issue.id, issue.values[0], issue.values[1]));
        }
    }
    for (id, parents) in &net.parents {
        if !parents.is_empty() {
            out.push_str(&format!("parents {id}: {}\n", parents.join(",")));
        }
    }
    for (id, rows) in &net.cpt {
        for row in rows {
            let cond: Vec<String> = row.condition.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!(
                "row {id} [{}]: {} > {}\n",
                cond.join(","),
                row.order[0],
                row.order[1]
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(text: &str) -> CpNet {
        parse_cpnet(text).unwrap()
    }

    #[test]
    fn parentless_full_tables_valid() {
        let n = net("issue x\nissue y\nrow x []: yes > no\nrow y []: no > yes\n");
        assert!(n.validate().is_valid());
    }

    #[test]
    fn cycle_reported() {
        let n = net(
            "issue x\nissue y\nparents x: y\nparents y: x\n\
             row x [y=yes]: yes > no\nrow x [y=no]: yes > no\n\
             row y [x=yes]: yes > no\nrow y [x=no]: yes > no\n",
        );
        let report = n.validate();
        assert_eq!(
            report.violations,
            [Violation::Cycle {
                issues: vec!["x".into(), "y".into()]
            }]
        );
    }

    #[test]
    fn missing_row_reported() {
        let n = net("issue x\nissue y\nparents y: x\nrow x []: yes > no\nrow y [x=yes]: no > yes\n");
        let report = n.validate();
        assert_eq!(
            report.violations,
            [Violation::MissingRow {
                issue: "y".into(),
                condition: [("x".to_string(), "no".to_string())].into()
            }]
        );
    }

    #[test]
    fn other_violations() {
        let n = net("issue x\nissue x\nparents x: x\nrow x []: yes > maybe\nrow z []: yes > no\n");
        let kinds: Vec<_> = n.validate().violations;
        assert!(kinds.contains(&Violation::DuplicateIssue { issue: "x".into() }));
        assert!(kinds.contains(&Violation::SelfParent { issue: "x".into() }));
        assert!(kinds.contains(&Violation::UnknownIssue { issue: "z".into() }));
        assert!(kinds.contains(&Violation::MalformedOrder { issue: "x".into(), row: 0 }));
    }

    #[test]
    fn order_legality() {
        let parentless = net("issue x\nissue y\nrow x []: yes > no\nrow y []: yes > no\n");
        assert!(parentless.is_order_legal(&["y".into(), "x".into()]).unwrap());

        let xy = net("issue x\nissue y\nparents y: x\n");
        assert!(xy.is_order_legal(&["x".into(), "y".into()]).unwrap());
        assert!(!xy.is_order_legal(&["y".into(), "x".into()]).unwrap());

        let chain = net("issue x\nissue y\nissue z\nparents y: x\nparents z: y\n");
        assert!(!chain.is_order_legal(&["x".into(), "z".into(), "y".into()]).unwrap());
        assert_eq!(chain.is_order_legal(&["x".into(), "y".into()]), Err(CpNetError::NotAPermutation));
    }

    #[test]
    fn local_votes() {
        let n = net(
            "issue x\nissue y\nparents y: x\nrow x []: yes > no\n\
             row y [x=yes]: no > yes\nrow y [x=no]: yes > no\n",
        );
        assert_eq!(n.local_vote("x", &Assignment::new()).unwrap(), "yes");
        let decided: Assignment = [("x".to_string(), "yes".to_string())].into();
        assert_eq!(n.local_vote("y", &decided).unwrap(), "no");
        assert_eq!(
            n.local_vote("y", &Assignment::new()),
            Err(CpNetError::UndecidedParent {
                issue: "y".into(),
                parent: "x".into()
            })
        );
    }

    #[test]
    fn custom_domain_and_round_trip() {
        let text = "issue color: red,blue\nissue size\nparents size: color\nrow color []: blue > red\nrow size [color=blue]: yes > no\nrow size [color=red]: no > yes\n";
        let n = net(text);
        assert!(n.validate().is_valid(), "{:?}", n.validate());
        assert_eq!(parse_cpnet(&serialize_cpnet(&n)).unwrap(), n);
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_cpnet("issue x\nfoo y\n"), Err(CpNetError::Syntax { line: 2, .. })));
        assert!(matches!(parse_cpnet("row x [: yes > no\n"), Err(CpNetError::Syntax { line: 1, .. })));
        assert!(matches!(parse_cpnet("row x []: yes > no > maybe\n"), Err(CpNetError::Syntax { .. })));
        assert!(matches!(parse_cpnet("issue x: a,b,c\n"), Err(CpNetError::Syntax { .. })));
    }
}
