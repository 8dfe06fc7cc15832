//! Deterministic, sorted engine snapshots.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Bound, ClauseOrigin, Engine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSnapshot {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub lower_support: String,
    pub upper_support: String,
    pub assumed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseSnapshot {
    pub id: u32,
    /// Literal names, negative literals prefixed with `~`.
    pub literals: Vec<String>,
    pub lo: f64,
    pub hi: f64,
    pub origin: String,
    pub dependency: Option<u32>,
    pub generators: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Snapshot {
    pub atoms: Vec<AtomSnapshot>,
    pub clauses: Vec<ClauseSnapshot>,
}

impl Snapshot {
    /// Text rendering with 6-decimal bounds. Clause ids are omitted and
    /// clauses sorted by content, so two sessions that reach the same state
    /// by different routes render identically.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for a in &self.atoms {
            let _ = writeln!(
                out,
                "{} [{:.6} {:.6}] {}/{}{}",
                a.name,
                a.lo,
                a.hi,
                a.lower_support,
                a.upper_support,
                if a.assumed { " assumed" } else { "" }
            );
        }
        let mut lines: Vec<String> = self
            .clauses
            .iter()
            .map(|c| {
                let mut lits = c.literals.clone();
                lits.sort();
                format!(
                    "({}) [{:.6} {:.6}] {} {}",
                    lits.join(" | "),
                    c.lo,
                    c.hi,
                    c.origin,
                    c.generators.join(",")
                )
            })
            .collect();
        lines.sort();
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
        out
    }

    pub fn atom(&self, name: &str) -> Option<&AtomSnapshot> {
        self.atoms.iter().find(|a| a.name == name)
    }
}

impl Engine {
    pub fn snapshot(&self) -> Snapshot {
        let mut atoms: Vec<AtomSnapshot> = self
            .atoms()
            .map(|a| {
                let (lo, hi) = self.raw_bounds(a.id);
                AtomSnapshot {
                    name: a.name.clone(),
                    lo,
                    hi,
                    lower_support: self.support(a.id, Bound::Lower).kind().to_string(),
                    upper_support: self.support(a.id, Bound::Upper).kind().to_string(),
                    assumed: self.assumption(a.id).is_some(),
                }
            })
            .collect();
        atoms.sort_by(|a, b| a.name.cmp(&b.name));
        let clauses = self
            .clauses()
            .map(|r| ClauseSnapshot {
                id: r.id.0,
                literals: r.clause.literals().iter().map(|&l| self.literal_name(l)).collect(),
                lo: r.clause.prob().lo(),
                hi: r.clause.prob().hi(),
                origin: r.origin.kind().to_string(),
                dependency: match r.origin {
                    ClauseOrigin::Generated { dependency, .. } => Some(dependency),
                    _ => None,
                },
                generators: r.generators().iter().map(|&a| self.atom_name(a).to_string()).collect(),
            })
            .collect();
        Snapshot { atoms, clauses }
    }
}
