//! Explanation trees for interval bounds.
//!
//! A bound is explained by the support recorded when it was set. Antecedents
//! are looked up in the bound histories as of that moment, so every path in
//! a tree goes strictly backwards in time and the tree is finite. A node that
//! was already expanded elsewhere in the same tree is emitted once more as a
//! `shared` reference without children.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::interval::{AtomId, IntervalProb, Literal};

use super::{Bound, BoundEntry, ClauseId, ClauseOrigin, Engine, Support};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CitedClause {
    pub id: ClauseId,
    pub literals: Vec<Literal>,
    pub prob: IntervalProb,
    pub origin: ClauseOrigin,
    /// Assumptions behind a generated or sigma clause.
    pub generators: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationTree {
    pub atom: AtomId,
    pub bound: Bound,
    pub value: f64,
    pub supporter: Support,
    pub clauses: Vec<CitedClause>,
    pub antecedents: Vec<ExplanationTree>,
    pub shared: bool,
}

impl ExplanationTree {
    pub fn is_leaf(&self) -> bool {
        self.antecedents.is_empty()
    }

    pub fn depth(&self) -> usize {
        1 + self.antecedents.iter().map(|a| a.depth()).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.antecedents.iter().map(|a| a.size()).sum::<usize>()
    }

    /// Atoms whose assumption appears in the tree, either as an assumption
    /// leaf or as the generator of a cited clause.
    pub fn assumptions(&self) -> BTreeSet<AtomId> {
        let mut out = BTreeSet::new();
        self.collect_assumptions(&mut out);
        out
    }

    fn collect_assumptions(&self, out: &mut BTreeSet<AtomId>) {
        if self.supporter == Support::Assumption {
            out.insert(self.atom);
        }
        for c in &self.clauses {
            out.extend(c.generators.iter().map(|l| l.atom));
        }
        for a in &self.antecedents {
            a.collect_assumptions(out);
        }
    }

    /// Whether every leaf is an assumption, an untouched bound, a shared
    /// reference, or rests only on user or structural clauses.
    pub fn is_well_founded(&self) -> bool {
        if self.antecedents.is_empty() {
            return match &self.supporter {
                Support::None | Support::Assumption => true,
                _ if self.shared => true,
                _ => self.clauses.iter().all(|c| !c.origin.is_derived()),
            };
        }
        self.antecedents.iter().all(|a| a.is_well_founded())
    }

    /// Depth-first search for a node matching `pred`.
    pub fn find(&self, pred: &dyn Fn(&ExplanationTree) -> bool) -> Option<&ExplanationTree> {
        if pred(self) {
            return Some(self);
        }
        self.antecedents.iter().find_map(|a| a.find(pred))
    }

    /// Indented text rendering. Leaves are tagged `ASSUMPTION` or `CLAUSE`.
    pub fn render(&self, engine: &Engine) -> String {
        let mut out = String::new();
        self.render_into(engine, 0, &mut out);
        out
    }

    fn render_into(&self, engine: &Engine, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let name = engine.atom_name(self.atom);
        let _ = write!(out, "{pad}{name} {} = {:.6}", self.bound, self.value);
        match &self.supporter {
            Support::None => out.push_str("  (initial bound)"),
            Support::Assumption => out.push_str("  ASSUMPTION"),
            Support::Constraint1 { .. } => out.push_str("  by constraint 1"),
            Support::Constraint2 { .. } => out.push_str("  by constraint 2"),
        }
        if self.shared {
            out.push_str("  (see above)");
        }
        out.push('\n');
        for c in &self.clauses {
            let lits: Vec<String> = c.literals.iter().map(|&l| engine.literal_name(l)).collect();
            let _ = write!(
                out,
                "{pad}  CLAUSE {} ({}) = {} [{}",
                c.id,
                lits.join(" | "),
                c.prob,
                c.origin.kind()
            );
            if !c.generators.is_empty() {
                let g: Vec<String> = c.generators.iter().map(|&l| engine.literal_name(l)).collect();
                let _ = write!(out, "; assumptions {}", g.join(", "));
            }
            out.push_str("]\n");
        }
        for a in &self.antecedents {
            a.render_into(engine, depth + 1, out);
        }
    }
}

impl Engine {
    /// One-paragraph description of a contradiction in atom names.
    pub fn describe_contradiction(&self, report: &super::ContradictionReport) -> String {
        use super::ContradictionKind as K;
        let clause_text = |id: ClauseId| match self.clause(id) {
            Some(r) => {
                let lits: Vec<String> = r.clause.literals().iter().map(|&l| self.literal_name(l)).collect();
                format!("({}) = {}", lits.join(" | "), r.clause.prob())
            }
            None => id.to_string(),
        };
        let mut out = match report.kind {
            K::Condition5(a) => format!("CONTRADICTION crossed bounds on {}", self.atom_name(a)),
            K::Condition6(c) => format!("CONTRADICTION clause {} cannot be satisfied", clause_text(c)),
            K::ClauseConflict(c) => format!("CONTRADICTION conflicting re-assertion of {}", clause_text(c)),
        };
        let culprits: Vec<String> = report
            .culprit_assumptions
            .iter()
            .map(|&l| {
                let iv = self.assumption(l.atom).map(|a| a.interval.to_string()).unwrap_or_default();
                format!("{} {iv}", self.literal_name(l))
            })
            .collect();
        if culprits.is_empty() {
            out.push_str("\n  no assumption involved: the asserted clauses alone are inconsistent");
        } else {
            let _ = write!(out, "\n  culprit assumptions: {}", culprits.join(", "));
        }
        out
    }

    /// Explains the current value of one bound of an atom.
    pub fn explain(&self, atom: AtomId, bound: Bound) -> ExplanationTree {
        let entry = self.node(atom).current(bound).clone();
        let mut visited = HashSet::new();
        self.explain_entry(atom, bound, &entry, &mut visited)
    }

    /// Explains a literal bound; the lower bound of a negative literal is
    /// the upper bound of its atom.
    pub fn explain_literal(&self, literal: Literal, bound: Bound) -> ExplanationTree {
        let atom_bound = match (literal.positive, bound) {
            (true, b) => b,
            (false, Bound::Lower) => Bound::Upper,
            (false, Bound::Upper) => Bound::Lower,
        };
        self.explain(literal.atom, atom_bound)
    }

    fn cite(&self, id: ClauseId, seq: u64) -> Option<CitedClause> {
        let rec = self.clause(id)?;
        let version = rec.as_of(seq);
        Some(CitedClause {
            id,
            literals: rec.clause.literals().to_vec(),
            prob: version.prob,
            origin: rec.origin.clone(),
            generators: version.deps.iter().map(|&a| self.assumed_literal(a)).collect(),
        })
    }

    fn explain_entry(
        &self,
        atom: AtomId,
        bound: Bound,
        entry: &BoundEntry,
        visited: &mut HashSet<(AtomId, Bound, u64)>,
    ) -> ExplanationTree {
        let mut tree = ExplanationTree {
            atom,
            bound,
            value: entry.value,
            supporter: entry.support.clone(),
            clauses: Vec::new(),
            antecedents: Vec::new(),
            shared: false,
        };
        if matches!(entry.support, Support::None | Support::Assumption) {
            return tree;
        }
        if !visited.insert((atom, bound, entry.seq)) {
            tree.shared = true;
            return tree;
        }
        let seq = entry.seq;
        let (cited, other_literals): (Vec<ClauseId>, Vec<Literal>) = match &entry.support {
            Support::Constraint1 { clause, overlap } => {
                let others = self
                    .clause(*clause)
                    .map(|r| {
                        r.clause
                            .literals()
                            .iter()
                            .copied()
                            .filter(|l| l.atom != atom)
                            .collect()
                    })
                    .unwrap_or_default();
                let mut ids = vec![*clause];
                ids.extend(overlap.iter().copied());
                (ids, others)
            }
            Support::Constraint2 { clauses, .. } => (clauses.clone(), Vec::new()),
            Support::None | Support::Assumption => unreachable!(),
        };
        // the other literals' maxima made the clause rule fire
        for l in other_literals {
            let b = if l.positive { Bound::Upper } else { Bound::Lower };
            let e = self.node(l.atom).as_of(b, seq).clone();
            tree.antecedents.push(self.explain_entry(l.atom, b, &e, visited));
        }
        // generated clauses lead back to the bounds their consumer read
        for id in cited {
            let Some(c) = self.cite(id, seq) else { continue };
            if let Some(rec) = self.clause(id) {
                let version_seq = rec.as_of(seq).seq;
                for &r in rec.origin.reads() {
                    for b in [Bound::Lower, Bound::Upper] {
                        let e = self.node(r).as_of(b, version_seq).clone();
                        if e.support == Support::None {
                            continue;
                        }
                        tree.antecedents.push(self.explain_entry(r, b, &e, visited));
                    }
                }
            }
            tree.clauses.push(c);
        }
        tree
    }
}
