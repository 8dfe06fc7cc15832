//! Clause tables: all clauses over one atom set.
//!
//! A table is the locality unit for the overlapping factor and for the
//! additivity constraint. Each stored clause is indexed by its sign vector
//! (one sign per atom, key order). The clause with signs `s` is the De Morgan
//! image of the full conjunction with signs `!s`, so
//! `P_*(conj(!s)) = 1 - P^*(clause(s))`.

use std::collections::BTreeMap;

use crate::interval::{IntervalProb, Literal, TableKey};

use super::ClauseId;

#[derive(Debug, Clone)]
pub struct ClauseTable {
    pub key: TableKey,
    pub(crate) clauses: BTreeMap<Vec<bool>, (ClauseId, IntervalProb)>,
}

impl ClauseTable {
    pub fn new(key: TableKey) -> Self {
        ClauseTable {
            key,
            clauses: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn clause_ids(&self) -> impl Iterator<Item = ClauseId> + '_ {
        self.clauses.values().map(|(id, _)| *id)
    }

    /// Known conjunction probabilities, keyed by conjunction sign vector.
    /// Sign vectors without a stored clause are unknown, i.e. `[0, 1]`.
    pub fn conjunctions(&self) -> impl Iterator<Item = (Vec<bool>, IntervalProb)> + '_ {
        self.clauses
            .iter()
            .map(|(signs, (_, p))| (signs.iter().map(|s| !s).collect(), p.complement()))
    }

    /// Lower bound of the overlapping factor of the clause with `signs`.
    ///
    /// A known conjunction contributes its lower probability weighted by
    /// `max(0, k - 1)`, where `k` counts the conjunction components that agree
    /// with the clause literal's sign. For the stored clause with signs `t`
    /// that count is the Hamming distance between `t` and `signs`.
    pub fn overlap_lower(&self, signs: &[bool]) -> (f64, Vec<ClauseId>) {
        let mut total = 0.0;
        let mut contributors = Vec::new();
        for (other, (id, p)) in &self.clauses {
            let agree = other.iter().zip(signs).filter(|(a, b)| a != b).count();
            let weight = overlap_weight(agree);
            let conj_lo = 1.0 - p.hi();
            if weight > 0.0 && conj_lo > 0.0 {
                total += weight * conj_lo;
                contributors.push(*id);
            }
        }
        (total, contributors)
    }

    /// Additivity lower bound for `literal`: the sum of lower probabilities of
    /// the known conjunctions containing it, i.e. of `1 - P^*` over the stored
    /// clauses containing its negation.
    pub fn additivity_lower(&self, literal: Literal) -> (f64, Vec<ClauseId>) {
        let Some(pos) = self.key.position(literal.atom) else {
            return (0.0, Vec::new());
        };
        let mut total = 0.0;
        let mut contributors = Vec::new();
        for (signs, (id, p)) in &self.clauses {
            if signs[pos] != literal.positive {
                let conj_lo = 1.0 - p.hi();
                if conj_lo > 0.0 {
                    total += conj_lo;
                    contributors.push(*id);
                }
            }
        }
        (total, contributors)
    }
}

/// `max(0, k - 1)` for `k` agreeing components.
pub fn overlap_weight(agreeing: usize) -> f64 {
    agreeing.saturating_sub(1) as f64
}
