//! Interval probabilities, atoms, literals and clauses.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::EPS_CMP;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("interval [{lo}, {hi}] has lower bound above upper bound")]
    Crossed { lo: f64, hi: f64 },
    #[error("interval [{lo}, {hi}] is not inside [0, 1]")]
    OutOfRange { lo: f64, hi: f64 },
    #[error("interval bound is not a number")]
    NotANumber,
    #[error("clause has no literals")]
    EmptyClause,
    #[error("conjunction has no literals")]
    EmptyConjunction,
    #[error("atom {0} appears twice in a conjunction")]
    DuplicateAtom(AtomId),
}

/// A closed probability interval `[lo, hi]` with `0 <= lo <= hi <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalProb {
    lo: f64,
    hi: f64,
}

impl IntervalProb {
    pub const VACUOUS: IntervalProb = IntervalProb { lo: 0.0, hi: 1.0 };
    pub const CERTAIN: IntervalProb = IntervalProb { lo: 1.0, hi: 1.0 };
    pub const IMPOSSIBLE: IntervalProb = IntervalProb { lo: 0.0, hi: 0.0 };

    /// Builds an interval, rejecting crossed or out-of-range bounds.
    ///
    /// Bounds that stray outside `[0, 1]` by less than [`EPS_CMP`] are
    /// clamped, which absorbs rounding in products of bounds.
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() {
            return Err(IntervalError::NotANumber);
        }
        if lo < -EPS_CMP || hi > 1.0 + EPS_CMP || lo > 1.0 + EPS_CMP || hi < -EPS_CMP {
            return Err(IntervalError::OutOfRange { lo, hi });
        }
        if lo > hi {
            return Err(IntervalError::Crossed { lo, hi });
        }
        Ok(IntervalProb {
            lo: lo.clamp(0.0, 1.0),
            hi: hi.clamp(0.0, 1.0),
        })
    }

    pub fn point(p: f64) -> Result<Self, IntervalError> {
        Self::new(p, p)
    }

    /// Like [`IntervalProb::new`] but tolerates `lo > hi` by up to
    /// [`EPS_CMP`], collapsing such a pair to its midpoint.
    pub fn new_tolerant(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo > hi && lo - hi <= EPS_CMP {
            let mid = 0.5 * (lo + hi);
            return Self::new(mid, mid);
        }
        Self::new(lo, hi)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_vacuous(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 1.0
    }

    pub fn is_point(&self) -> bool {
        self.hi - self.lo <= EPS_CMP
    }

    /// `[1 - hi, 1 - lo]`: the interval of the negated event.
    pub fn complement(&self) -> Self {
        IntervalProb {
            lo: 1.0 - self.hi,
            hi: 1.0 - self.lo,
        }
    }

    /// Whether `other` lies inside `self`, up to `tol` on each side.
    pub fn contains(&self, other: &IntervalProb, tol: f64) -> bool {
        self.lo <= other.lo + tol && other.hi <= self.hi + tol
    }

    pub fn contains_value(&self, p: f64, tol: f64) -> bool {
        self.lo - tol <= p && p <= self.hi + tol
    }
}

impl Default for IntervalProb {
    fn default() -> Self {
        Self::VACUOUS
    }
}

impl fmt::Display for IntervalProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.6} {:.6}]", self.lo, self.hi)
    }
}

/// Intersection of two intervals, or `None` when they are disjoint.
///
/// A `None` is the caller's signal of a crossed-bounds inconsistency. A
/// crossing of at most `EPS_CMP` is rounding noise and collapses to the
/// midpoint.
pub fn interval_intersect(a: IntervalProb, b: IntervalProb) -> Option<IntervalProb> {
    let lo = a.lo.max(b.lo);
    let hi = a.hi.min(b.hi);
    if lo > hi + EPS_CMP {
        None
    } else if lo > hi {
        let mid = 0.5 * (lo + hi);
        Some(IntervalProb { lo: mid, hi: mid })
    } else {
        Some(IntervalProb { lo, hi })
    }
}

/// Opaque identifier of an atomic proposition within one engine session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomId(pub u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub id: AtomId,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub atom: AtomId,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: AtomId) -> Self {
        Literal {
            atom,
            positive: true,
        }
    }

    pub fn neg(atom: AtomId) -> Self {
        Literal {
            atom,
            positive: false,
        }
    }

    pub fn negate(self) -> Self {
        Literal {
            atom: self.atom,
            positive: !self.positive,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "~{}", self.atom)
        }
    }
}

/// Bounds of a literal given the interval stored on its atom.
///
/// The mapping is its own inverse, so it also pushes a literal bound back
/// onto the atom.
pub fn literal_bounds(literal: Literal, atom_interval: IntervalProb) -> IntervalProb {
    if literal.positive {
        atom_interval
    } else {
        atom_interval.complement()
    }
}

/// Sorted set of atoms shared by all clauses of one table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TableKey(pub Vec<AtomId>);

impl TableKey {
    pub fn atoms(&self) -> &[AtomId] {
        &self.0
    }

    pub fn position(&self, atom: AtomId) -> Option<usize> {
        self.0.binary_search(&atom).ok()
    }
}

/// A disjunction of literals over distinct atoms, with an interval
/// probability. Literals are kept sorted by atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
    prob: IntervalProb,
}

/// Result of normalizing a literal list.
#[derive(Debug, Clone, PartialEq)]
pub enum Normalized {
    Clause(Clause),
    /// Both signs of one atom were present: the clause is valid and carries
    /// no constraint.
    Tautology,
}

impl Normalized {
    pub fn into_clause(self) -> Option<Clause> {
        match self {
            Normalized::Clause(c) => Some(c),
            Normalized::Tautology => None,
        }
    }
}

/// Deduplicates literals and sorts them by atom; detects tautologies.
pub fn normalize_clause(literals: &[Literal], prob: IntervalProb) -> Result<Normalized, IntervalError> {
    if literals.is_empty() {
        return Err(IntervalError::EmptyClause);
    }
    let mut lits = literals.to_vec();
    lits.sort();
    lits.dedup();
    if lits.windows(2).any(|w| w[0].atom == w[1].atom) {
        return Ok(Normalized::Tautology);
    }
    Ok(Normalized::Clause(Clause {
        literals: lits,
        prob,
    }))
}

/// De Morgan: the probability of a conjunction of literals becomes the
/// complementary probability of the clause of their negations.
pub fn conjunction_to_clause(conj: &[Literal], prob: IntervalProb) -> Result<Clause, IntervalError> {
    if conj.is_empty() {
        return Err(IntervalError::EmptyConjunction);
    }
    let mut lits: Vec<Literal> = conj.iter().map(|l| l.negate()).collect();
    lits.sort();
    if let Some(w) = lits.windows(2).find(|w| w[0].atom == w[1].atom) {
        return Err(IntervalError::DuplicateAtom(w[0].atom));
    }
    lits.dedup();
    Ok(Clause {
        literals: lits,
        prob: prob.complement(),
    })
}

impl Clause {
    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn prob(&self) -> IntervalProb {
        self.prob
    }

    pub(crate) fn set_prob(&mut self, prob: IntervalProb) {
        self.prob = prob;
    }

    pub fn key(&self) -> TableKey {
        TableKey(self.literals.iter().map(|l| l.atom).collect())
    }

    /// One sign per atom, in key order.
    pub fn signs(&self) -> Vec<bool> {
        self.literals.iter().map(|l| l.positive).collect()
    }

    pub fn contains(&self, literal: Literal) -> bool {
        self.literals.contains(&literal)
    }

    /// The conjunction this clause is the De Morgan image of, with its
    /// probability.
    pub fn to_conjunction(&self) -> (Vec<Literal>, IntervalProb) {
        (
            self.literals.iter().map(|l| l.negate()).collect(),
            self.prob.complement(),
        )
    }

    /// Whether a truth assignment (indexed by atom) satisfies the clause.
    pub fn satisfied_by(&self, world: impl Fn(AtomId) -> bool) -> bool {
        self.literals.iter().any(|l| world(l.atom) == l.positive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> IntervalProb {
        IntervalProb::new(lo, hi).unwrap()
    }

    fn close(a: IntervalProb, lo: f64, hi: f64) -> bool {
        (a.lo() - lo).abs() < 1e-12 && (a.hi() - hi).abs() < 1e-12
    }

    const A: AtomId = AtomId(0);
    const B: AtomId = AtomId(1);

    #[test]
    fn rejects_crossed_and_out_of_range() {
        assert!(matches!(IntervalProb::new(0.6, 0.5), Err(IntervalError::Crossed { .. })));
        assert!(matches!(IntervalProb::new(-0.1, 0.5), Err(IntervalError::OutOfRange { .. })));
        assert!(matches!(IntervalProb::new(0.1, 1.5), Err(IntervalError::OutOfRange { .. })));
        assert!(IntervalProb::new(f64::NAN, 0.5).is_err());
        // rounding noise is clamped
        let v = IntervalProb::new(-1e-15, 1.0 + 1e-15).unwrap();
        assert!(v.is_vacuous());
    }

    #[test]
    fn intersect_examples() {
        assert!(close(interval_intersect(iv(0.2, 0.8), iv(0.5, 1.0)).unwrap(), 0.5, 0.8));
        assert!(close(interval_intersect(IntervalProb::VACUOUS, iv(0.3, 0.4)).unwrap(), 0.3, 0.4));
        assert!(interval_intersect(iv(0.1, 0.3), iv(0.4, 0.5)).is_none());
    }

    #[test]
    fn literal_bounds_examples() {
        assert!(close(literal_bounds(Literal::pos(A), iv(0.7, 0.9)), 0.7, 0.9));
        let neg = literal_bounds(Literal::neg(A), iv(0.7, 0.9));
        assert!((neg.lo() - 0.1).abs() < 1e-12 && (neg.hi() - 0.3).abs() < 1e-12);
        assert!(literal_bounds(Literal::neg(A), IntervalProb::VACUOUS).is_vacuous());
    }

    #[test]
    fn conjunction_to_clause_examples() {
        let c = conjunction_to_clause(&[Literal::pos(A), Literal::pos(B)], iv(0.1, 0.1)).unwrap();
        assert_eq!(c.literals(), &[Literal::neg(A), Literal::neg(B)]);
        assert!(close(c.prob(), 0.9, 0.9));

        let c = conjunction_to_clause(&[Literal::neg(A), Literal::pos(B)], iv(0.3, 0.3)).unwrap();
        assert_eq!(c.literals(), &[Literal::pos(A), Literal::neg(B)]);
        assert!(close(c.prob(), 0.7, 0.7));

        let c = conjunction_to_clause(&[Literal::pos(A)], IntervalProb::VACUOUS).unwrap();
        assert_eq!(c.literals(), &[Literal::neg(A)]);
        assert!(c.prob().is_vacuous());

        assert_eq!(
            conjunction_to_clause(&[Literal::pos(A), Literal::neg(A)], iv(0.1, 0.1)),
            Err(IntervalError::DuplicateAtom(A))
        );
        assert_eq!(
            conjunction_to_clause(&[], iv(0.1, 0.1)),
            Err(IntervalError::EmptyConjunction)
        );
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_clause(&[Literal::pos(A), Literal::pos(A), Literal::pos(B)], iv(0.8, 0.8)).unwrap();
        let c = n.into_clause().unwrap();
        assert_eq!(c.literals(), &[Literal::pos(A), Literal::pos(B)]);
        assert!(close(c.prob(), 0.8, 0.8));

        let n = normalize_clause(&[Literal::pos(A), Literal::neg(A), Literal::pos(B)], iv(0.8, 0.8)).unwrap();
        assert_eq!(n, Normalized::Tautology);

        let c = normalize_clause(&[Literal::pos(A)], iv(0.5, 0.6)).unwrap().into_clause().unwrap();
        assert_eq!(c.literals(), &[Literal::pos(A)]);
        assert!(close(c.prob(), 0.5, 0.6));

        assert_eq!(normalize_clause(&[], iv(0.5, 0.6)), Err(IntervalError::EmptyClause));
    }

    fn interval_strategy() -> impl Strategy<Value = IntervalProb> {
        (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(a, b)| iv(a.min(b), a.max(b)))
    }

    fn literals_strategy() -> impl Strategy<Value = Vec<Literal>> {
        proptest::collection::vec((0u32..6, any::<bool>()), 1..6).prop_map(|v| {
            v.into_iter()
                .map(|(a, s)| Literal {
                    atom: AtomId(a),
                    positive: s,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn literal_bounds_is_an_involution(v in interval_strategy(), positive in any::<bool>()) {
            let l = Literal { atom: A, positive };
            let back = literal_bounds(l, literal_bounds(l, v));
            prop_assert!((back.lo() - v.lo()).abs() < 1e-15 && (back.hi() - v.hi()).abs() < 1e-15);
        }

        #[test]
        fn intersection_stays_valid(a in interval_strategy(), b in interval_strategy()) {
            if let Some(c) = interval_intersect(a, b) {
                prop_assert!(0.0 <= c.lo() && c.lo() <= c.hi() && c.hi() <= 1.0);
                prop_assert!(a.contains(&c, 0.0) && b.contains(&c, 0.0));
            } else {
                prop_assert!(a.lo().max(b.lo()) > a.hi().min(b.hi()));
            }
        }

        #[test]
        fn normalize_is_idempotent(lits in literals_strategy(), p in interval_strategy()) {
            match normalize_clause(&lits, p).unwrap() {
                Normalized::Tautology => {}
                Normalized::Clause(c) => {
                    let again = normalize_clause(c.literals(), c.prob()).unwrap();
                    prop_assert_eq!(again, Normalized::Clause(c));
                }
            }
        }

        #[test]
        fn conjunction_round_trips(lits in literals_strategy(), p in interval_strategy()) {
            let mut conj = lits.clone();
            conj.sort();
            conj.dedup_by_key(|l| l.atom);
            let clause = conjunction_to_clause(&conj, p).unwrap();
            let (back, q) = clause.to_conjunction();
            prop_assert_eq!(back, conj);
            prop_assert!((q.lo() - p.lo()).abs() < 1e-15 && (q.hi() - p.hi()).abs() < 1e-15);
        }
    }
}
