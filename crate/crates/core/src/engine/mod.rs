//! The belief-maintenance engine.
//!
//! Clauses over the same atom set share a [`ClauseTable`]. Two local rules
//! narrow the interval of every atom:
//!
//! * the clause rule raises the lower bound of a literal to
//!   `P_*(C) + F_lo(C) - sum of the other literals' upper bounds`, where
//!   `F_lo` is the lower overlapping factor computed from the clause's table;
//! * the additivity rule raises the lower bound of a literal to the sum of
//!   the lower probabilities of the known full conjunctions containing it.
//!
//! Propagation is a worklist fixpoint. Every bound update records the
//! constraint that produced it and the set of assumptions it rests on, which
//! drives explanation, contradiction reports and retraction.

mod explain;
mod snapshot;
mod table;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{
    literal_bounds, normalize_clause, Atom, AtomId, Clause, IntervalError, IntervalProb, Literal,
    Normalized, TableKey,
};
use crate::{EPS_CMP, EPS_PROP};

pub use explain::{CitedClause, ExplanationTree};
pub use snapshot::{AtomSnapshot, ClauseSnapshot, Snapshot};
pub use table::{overlap_weight, ClauseTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClauseId(pub u32);

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConsumerId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bound {
    Lower,
    Upper,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Lower => f.write_str("lower"),
            Bound::Upper => f.write_str("upper"),
        }
    }
}

/// Where a clause came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClauseOrigin {
    UserAssertion,
    /// Exclusivity or exhaustivity of a network variable.
    Structural { variable: u32 },
    /// Produced by a conditional-dependency consumer from the current
    /// intervals of `reads`.
    Generated { dependency: u32, reads: Vec<AtomId> },
    /// Exhaustivity refresh over the still-unknown states of a variable,
    /// computed from the intervals of the known states in `reads`.
    Sigma {
        variable: u32,
        generation: u32,
        reads: Vec<AtomId>,
    },
}

impl ClauseOrigin {
    pub fn is_derived(&self) -> bool {
        matches!(self, ClauseOrigin::Generated { .. } | ClauseOrigin::Sigma { .. })
    }

    pub fn reads(&self) -> &[AtomId] {
        match self {
            ClauseOrigin::Generated { reads, .. } | ClauseOrigin::Sigma { reads, .. } => reads,
            _ => &[],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ClauseOrigin::UserAssertion => "user",
            ClauseOrigin::Structural { .. } => "structural",
            ClauseOrigin::Generated { .. } => "generated",
            ClauseOrigin::Sigma { .. } => "sigma",
        }
    }
}

/// The constraint application that set a bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Support {
    /// Untouched 0 (lower) or 1 (upper).
    None,
    Assumption,
    /// Clause rule on `clause`; `overlap` lists the clauses whose
    /// conjunctions entered the overlapping factor.
    Constraint1 {
        clause: ClauseId,
        overlap: Vec<ClauseId>,
    },
    /// Additivity rule on a table.
    Constraint2 {
        table: TableKey,
        clauses: Vec<ClauseId>,
    },
}

impl Support {
    pub fn kind(&self) -> &'static str {
        match self {
            Support::None => "none",
            Support::Assumption => "assumption",
            Support::Constraint1 { .. } => "constraint1",
            Support::Constraint2 { .. } => "constraint2",
        }
    }
}

/// Set of assumption atoms a bound or clause rests on.
pub type Deps = BTreeSet<AtomId>;

#[derive(Debug, Clone)]
pub(crate) struct BoundEntry {
    pub value: f64,
    pub support: Support,
    pub seq: u64,
    pub deps: Deps,
}

impl BoundEntry {
    fn initial(value: f64) -> Self {
        BoundEntry {
            value,
            support: Support::None,
            seq: 0,
            deps: Deps::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assumed {
    pub literal: Literal,
    /// The assumed interval expressed on the atom.
    pub interval: IntervalProb,
    order: u64,
}

pub(crate) struct NodeRecord {
    pub atom: Atom,
    /// Update history per bound; the last entry is current.
    pub lower: Vec<BoundEntry>,
    pub upper: Vec<BoundEntry>,
    pub assumption: Option<Assumed>,
    pub consumers: Vec<ConsumerId>,
    pub clauses: BTreeSet<ClauseId>,
}

impl NodeRecord {
    fn new(atom: Atom) -> Self {
        NodeRecord {
            atom,
            lower: vec![BoundEntry::initial(0.0)],
            upper: vec![BoundEntry::initial(1.0)],
            assumption: None,
            consumers: Vec::new(),
            clauses: BTreeSet::new(),
        }
    }

    fn reset(&mut self) {
        self.lower = vec![BoundEntry::initial(0.0)];
        self.upper = vec![BoundEntry::initial(1.0)];
    }

    pub fn lo(&self) -> f64 {
        self.lower.last().map_or(0.0, |e| e.value)
    }

    pub fn hi(&self) -> f64 {
        self.upper.last().map_or(1.0, |e| e.value)
    }

    pub fn history(&self, bound: Bound) -> &[BoundEntry] {
        match bound {
            Bound::Lower => &self.lower,
            Bound::Upper => &self.upper,
        }
    }

    pub fn current(&self, bound: Bound) -> &BoundEntry {
        self.history(bound).last().expect("bound history is never empty")
    }

    /// The entry that was current just before event `seq`.
    pub fn as_of(&self, bound: Bound, seq: u64) -> &BoundEntry {
        let hist = self.history(bound);
        let idx = hist.partition_point(|e| e.seq < seq);
        &hist[idx.saturating_sub(1)]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ClauseVersion {
    pub seq: u64,
    pub prob: IntervalProb,
    pub deps: Deps,
}

#[derive(Debug, Clone)]
pub struct ClauseRecord {
    pub id: ClauseId,
    pub clause: Clause,
    pub origin: ClauseOrigin,
    pub table: TableKey,
    pub(crate) versions: Vec<ClauseVersion>,
}

impl ClauseRecord {
    /// Assumptions the clause's current interval rests on.
    pub fn generators(&self) -> &Deps {
        &self.versions.last().expect("clause has a version").deps
    }

    pub(crate) fn as_of(&self, seq: u64) -> &ClauseVersion {
        let idx = self.versions.partition_point(|v| v.seq < seq);
        &self.versions[idx.saturating_sub(1)]
    }

    fn depends_on(&self, atom: AtomId) -> bool {
        self.versions.iter().any(|v| v.deps.contains(&atom))
    }
}

/// A clause a consumer wants installed.
#[derive(Debug, Clone)]
pub struct ClauseRequest {
    pub literals: Vec<Literal>,
    pub prob: IntervalProb,
    pub origin: ClauseOrigin,
}

/// Forward-chained procedure attached to one or more atoms, fired when a
/// watched atom's interval narrows.
pub trait Consumer {
    fn fire(&mut self, atom: AtomId, engine: &Engine) -> Vec<ClauseRequest>;
}

impl<F> Consumer for F
where
    F: FnMut(AtomId, &Engine) -> Vec<ClauseRequest>,
{
    fn fire(&mut self, atom: AtomId, engine: &Engine) -> Vec<ClauseRequest> {
        self(atom, engine)
    }
}

struct ConsumerSlot {
    watched: Vec<AtomId>,
    consumer: Option<Box<dyn Consumer>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ContradictionKind {
    /// Crossed bounds on an atom.
    Condition5(AtomId),
    /// The literals' upper bounds (less the overlapping factor) cannot cover
    /// the clause's lower probability.
    Condition6(ClauseId),
    /// Re-asserting a clause over the same signs with a disjoint interval.
    ClauseConflict(ClauseId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContradictionReport {
    pub kind: ContradictionKind,
    pub culprit_assumptions: BTreeSet<Literal>,
    pub trace: Vec<ExplanationTree>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown atom {0}")]
    UnknownAtom(AtomId),
    #[error("atom name {0:?} is already registered")]
    DuplicateAtom(String),
    #[error("atom {0} is already an assumption; retract it first")]
    AlreadyAssumed(String),
    #[error("atom {0} is not an assumption")]
    NotAnAssumption(String),
    #[error("unknown consumer {0:?}")]
    UnknownConsumer(ConsumerId),
    #[error(transparent)]
    Malformed(#[from] IntervalError),
    #[error("contradiction: {}", .0.kind_label())]
    Contradiction(Box<ContradictionReport>),
}

impl ContradictionReport {
    pub fn kind_label(&self) -> String {
        match &self.kind {
            ContradictionKind::Condition5(a) => format!("crossed bounds on {a}"),
            ContradictionKind::Condition6(c) => format!("clause {c} cannot be satisfied"),
            ContradictionKind::ClauseConflict(c) => format!("conflicting re-assertion of clause {c}"),
        }
    }
}

impl From<ContradictionReport> for EngineError {
    fn from(r: ContradictionReport) -> Self {
        EngineError::Contradiction(Box::new(r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Work {
    Constraint1(ClauseId),
    Constraint2(usize),
}

/// Counters of work performed, for cost measurements.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub constraint1: u64,
    pub constraint2: u64,
    pub bound_updates: u64,
    pub consumer_firings: u64,
}

impl Stats {
    pub fn constraint_applications(&self) -> u64 {
        self.constraint1 + self.constraint2
    }
}

/// The belief-maintenance engine. Single writer; see the crate docs.
pub struct Engine {
    nodes: Vec<NodeRecord>,
    names: HashMap<String, AtomId>,
    clauses: BTreeMap<ClauseId, ClauseRecord>,
    next_clause: u32,
    tables: Vec<ClauseTable>,
    table_index: HashMap<TableKey, usize>,
    consumers: Vec<ConsumerSlot>,
    work: VecDeque<Work>,
    queued: HashSet<Work>,
    fire_queue: VecDeque<(ConsumerId, AtomId)>,
    fire_pending: HashSet<(ConsumerId, AtomId)>,
    seq: u64,
    assumption_order: u64,
    stats: Stats,
    contradiction: Option<ContradictionReport>,
    shuffle: Option<ChaCha8Rng>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine {
    pub fn new() -> Self {
        Engine {
            nodes: Vec::new(),
            names: HashMap::new(),
            clauses: BTreeMap::new(),
            next_clause: 0,
            tables: Vec::new(),
            table_index: HashMap::new(),
            consumers: Vec::new(),
            work: VecDeque::new(),
            queued: HashSet::new(),
            fire_queue: VecDeque::new(),
            fire_pending: HashSet::new(),
            seq: 0,
            assumption_order: 0,
            stats: Stats::default(),
            contradiction: None,
            shuffle: None,
        }
    }

    /// Processes the worklist in a seeded random order instead of FIFO.
    /// The fixpoint does not depend on the order.
    pub fn with_shuffled_order(mut self, seed: u64) -> Self {
        self.shuffle = Some(ChaCha8Rng::seed_from_u64(seed));
        self
    }

    // ---- atoms -----------------------------------------------------------

    pub fn add_atom(&mut self, name: &str) -> Result<AtomId, EngineError> {
        if self.names.contains_key(name) {
            return Err(EngineError::DuplicateAtom(name.to_string()));
        }
        let id = AtomId(self.nodes.len() as u32);
        self.nodes.push(NodeRecord::new(Atom {
            id,
            name: name.to_string(),
        }));
        self.names.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn atom(&self, name: &str) -> Option<AtomId> {
        self.names.get(name).copied()
    }

    pub fn atom_name(&self, atom: AtomId) -> &str {
        &self.nodes[atom.index()].atom.name
    }

    pub fn atom_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.nodes.iter().map(|n| &n.atom)
    }

    pub fn literal_name(&self, literal: Literal) -> String {
        if literal.positive {
            self.atom_name(literal.atom).to_string()
        } else {
            format!("~{}", self.atom_name(literal.atom))
        }
    }

    fn check_atom(&self, atom: AtomId) -> Result<(), EngineError> {
        if atom.index() < self.nodes.len() {
            Ok(())
        } else {
            Err(EngineError::UnknownAtom(atom))
        }
    }

    pub(crate) fn node(&self, atom: AtomId) -> &NodeRecord {
        &self.nodes[atom.index()]
    }

    // ---- reading state ----------------------------------------------------

    /// Raw `(lo, hi)`; may be crossed after a contradiction.
    pub fn raw_bounds(&self, atom: AtomId) -> (f64, f64) {
        let n = self.node(atom);
        (n.lo(), n.hi())
    }

    /// Current interval of an atom. Rounding-level crossings are collapsed to
    /// a point; a genuinely crossed pair (after a contradiction) is returned
    /// with its bounds swapped.
    pub fn interval(&self, atom: AtomId) -> IntervalProb {
        let (lo, hi) = self.raw_bounds(atom);
        IntervalProb::new_tolerant(lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0))
            .unwrap_or_else(|_| IntervalProb::new(hi.clamp(0.0, 1.0), lo.clamp(0.0, 1.0)).expect("clamped"))
    }

    pub fn literal_interval(&self, literal: Literal) -> IntervalProb {
        literal_bounds(literal, self.interval(literal.atom))
    }

    pub fn support(&self, atom: AtomId, bound: Bound) -> &Support {
        &self.node(atom).current(bound).support
    }

    /// Assumptions the current bound rests on.
    pub fn bound_deps(&self, atom: AtomId, bound: Bound) -> &Deps {
        &self.node(atom).current(bound).deps
    }

    pub fn assumption(&self, atom: AtomId) -> Option<&Assumed> {
        self.node(atom).assumption.as_ref()
    }

    pub fn assumptions(&self) -> Vec<Literal> {
        let mut v: Vec<_> = self
            .nodes
            .iter()
            .filter_map(|n| n.assumption)
            .collect();
        v.sort_by_key(|a| a.order);
        v.into_iter().map(|a| a.literal).collect()
    }

    pub fn clause(&self, id: ClauseId) -> Option<&ClauseRecord> {
        self.clauses.get(&id)
    }

    pub fn clauses(&self) -> impl Iterator<Item = &ClauseRecord> {
        self.clauses.values()
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    pub fn table(&self, key: &TableKey) -> Option<&ClauseTable> {
        self.table_index.get(key).map(|&i| &self.tables[i])
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = Stats::default();
    }

    /// The contradiction that halted the last propagation, if it has not
    /// been cleared by a retraction.
    pub fn contradiction(&self) -> Option<&ContradictionReport> {
        self.contradiction.as_ref()
    }

    fn assumed_literal(&self, atom: AtomId) -> Literal {
        self.node(atom)
            .assumption
            .map(|a| a.literal)
            .unwrap_or(Literal::pos(atom))
    }

    fn deps_to_literals(&self, deps: &Deps) -> BTreeSet<Literal> {
        deps.iter().map(|&a| self.assumed_literal(a)).collect()
    }

    // ---- mutation ----------------------------------------------------------

    /// Installs a clause and propagates to a fixpoint.
    ///
    /// Returns `Ok(None)` for a tautology, which carries no constraint.
    pub fn add_clause(
        &mut self,
        literals: &[Literal],
        prob: IntervalProb,
        origin: ClauseOrigin,
    ) -> Result<Option<ClauseId>, EngineError> {
        for l in literals {
            self.check_atom(l.atom)?;
        }
        let clause = match normalize_clause(literals, prob)? {
            Normalized::Tautology => return Ok(None),
            Normalized::Clause(c) => c,
        };
        let id = match self.install(clause, origin) {
            Ok(id) => id,
            Err(report) => return Err(self.halt(report)),
        };
        self.propagate()?;
        Ok(Some(id))
    }

    /// Makes `literal` an assumption with interval `prob` and propagates.
    pub fn assume(&mut self, literal: Literal, prob: IntervalProb) -> Result<(), EngineError> {
        self.check_atom(literal.atom)?;
        if self.node(literal.atom).assumption.is_some() {
            return Err(EngineError::AlreadyAssumed(self.atom_name(literal.atom).to_string()));
        }
        let interval = literal_bounds(literal, prob);
        self.assumption_order += 1;
        self.nodes[literal.atom.index()].assumption = Some(Assumed {
            literal,
            interval,
            order: self.assumption_order,
        });
        if let Err(report) = self.apply_assumption(literal.atom) {
            return Err(self.halt(report));
        }
        self.propagate()
    }

    fn apply_assumption(&mut self, atom: AtomId) -> Result<(), ContradictionReport> {
        let Some(a) = self.node(atom).assumption else {
            return Ok(());
        };
        let deps: Deps = [atom].into_iter().collect();
        self.narrow(atom, Bound::Lower, a.interval.lo(), Support::Assumption, deps.clone())?;
        self.narrow(atom, Bound::Upper, a.interval.hi(), Support::Assumption, deps)?;
        Ok(())
    }

    /// Removes an assumption and recomputes all bounds from the surviving
    /// assumptions and clauses.
    ///
    /// Every consumer-generated clause is deleted, which includes all clauses
    /// resting on the retracted assumption; consumers regenerate the ones
    /// still justified while the fixpoint is replayed.
    pub fn retract(&mut self, atom: AtomId) -> Result<(), EngineError> {
        self.check_atom(atom)?;
        if self.node(atom).assumption.is_none() {
            return Err(EngineError::NotAnAssumption(self.atom_name(atom).to_string()));
        }
        self.nodes[atom.index()].assumption = None;
        let doomed: Vec<ClauseId> = self
            .clauses
            .values()
            .filter(|r| r.origin.is_derived())
            .map(|r| r.id)
            .collect();
        for id in doomed {
            self.remove_clause(id);
        }
        self.replay()
    }

    /// Derived clauses whose interval rests on `atom`.
    pub fn clauses_resting_on(&self, atom: AtomId) -> Vec<ClauseId> {
        self.clauses
            .values()
            .filter(|r| r.origin.is_derived() && r.depends_on(atom))
            .map(|r| r.id)
            .collect()
    }

    fn remove_clause(&mut self, id: ClauseId) {
        let Some(rec) = self.clauses.remove(&id) else {
            return;
        };
        if let Some(&ti) = self.table_index.get(&rec.table) {
            self.tables[ti].clauses.remove(&rec.clause.signs());
        }
        for l in rec.clause.literals() {
            self.nodes[l.atom.index()].clauses.remove(&id);
        }
    }

    /// Resets every bound and re-derives the fixpoint from scratch.
    fn replay(&mut self) -> Result<(), EngineError> {
        self.contradiction = None;
        self.work.clear();
        self.queued.clear();
        self.fire_queue.clear();
        self.fire_pending.clear();
        for n in &mut self.nodes {
            n.reset();
        }
        let mut assumed: Vec<(u64, AtomId)> = self
            .nodes
            .iter()
            .filter_map(|n| n.assumption.map(|a| (a.order, n.atom.id)))
            .collect();
        assumed.sort();
        for (_, atom) in assumed {
            if let Err(report) = self.apply_assumption(atom) {
                return Err(self.halt(report));
            }
        }
        for ti in 0..self.tables.len() {
            if !self.tables[ti].is_empty() {
                self.enqueue(Work::Constraint2(ti));
            }
        }
        let ids: Vec<ClauseId> = self.clauses.keys().copied().collect();
        for id in ids {
            self.enqueue(Work::Constraint1(id));
        }
        self.propagate()
    }

    /// Attaches a consumer to one atom.
    pub fn register_consumer(
        &mut self,
        atom: AtomId,
        consumer: impl Consumer + 'static,
    ) -> Result<ConsumerId, EngineError> {
        self.register_consumer_on(&[atom], consumer)
    }

    /// Attaches one consumer to several atoms. It is fired immediately for
    /// every watched atom that is already narrower than `[0, 1]`.
    pub fn register_consumer_on(
        &mut self,
        atoms: &[AtomId],
        consumer: impl Consumer + 'static,
    ) -> Result<ConsumerId, EngineError> {
        for &a in atoms {
            self.check_atom(a)?;
        }
        let id = ConsumerId(self.consumers.len() as u32);
        self.consumers.push(ConsumerSlot {
            watched: atoms.to_vec(),
            consumer: Some(Box::new(consumer)),
        });
        for &a in atoms {
            self.nodes[a.index()].consumers.push(id);
            if !self.interval(a).is_vacuous() {
                self.schedule_fire(id, a);
            }
        }
        self.propagate()?;
        Ok(id)
    }

    pub fn consumer_count(&self) -> usize {
        self.consumers.len()
    }

    /// Fires a consumer again, e.g. after the data it closes over changed.
    pub fn refire_consumer(&mut self, id: ConsumerId) -> Result<(), EngineError> {
        let slot = self
            .consumers
            .get(id.0 as usize)
            .ok_or(EngineError::UnknownConsumer(id))?;
        let watched = slot.watched.clone();
        for a in watched {
            if !self.interval(a).is_vacuous() {
                self.schedule_fire(id, a);
                break;
            }
        }
        self.propagate()
    }

    // ---- propagation -------------------------------------------------------

    fn enqueue(&mut self, w: Work) {
        if self.queued.insert(w) {
            self.work.push_back(w);
        }
    }

    fn pop_work(&mut self) -> Option<Work> {
        let w = match self.shuffle.as_mut() {
            Some(rng) if !self.work.is_empty() => {
                let i = rng.gen_range(0..self.work.len());
                self.work.swap_remove_back(i)
            }
            _ => self.work.pop_front(),
        }?;
        self.queued.remove(&w);
        Some(w)
    }

    fn schedule_fire(&mut self, id: ConsumerId, atom: AtomId) {
        if self.fire_pending.insert((id, atom)) {
            self.fire_queue.push_back((id, atom));
        }
    }

    fn halt(&mut self, report: ContradictionReport) -> EngineError {
        self.work.clear();
        self.queued.clear();
        self.fire_queue.clear();
        self.fire_pending.clear();
        self.contradiction = Some(report.clone());
        report.into()
    }

    /// Runs the worklist to a fixpoint, firing consumers whenever the
    /// constraint worklist drains, then checks both inconsistency conditions.
    pub fn propagate(&mut self) -> Result<(), EngineError> {
        loop {
            if let Some(w) = self.pop_work() {
                let res = match w {
                    Work::Constraint1(id) => self.apply_constraint1(id),
                    Work::Constraint2(ti) => self.apply_constraint2_table(ti),
                };
                if let Err(report) = res {
                    return Err(self.halt(report));
                }
            } else if let Some((cid, atom)) = self.fire_queue.pop_front() {
                self.fire_pending.remove(&(cid, atom));
                if let Err(report) = self.fire(cid, atom) {
                    return Err(self.halt(report));
                }
            } else {
                break;
            }
        }
        match self.check_consistency() {
            Ok(()) => Ok(()),
            Err(report) => Err(self.halt(report)),
        }
    }

    fn fire(&mut self, id: ConsumerId, atom: AtomId) -> Result<(), ContradictionReport> {
        let slot = &mut self.consumers[id.0 as usize];
        let Some(mut consumer) = slot.consumer.take() else {
            return Ok(());
        };
        self.stats.consumer_firings += 1;
        let requests = consumer.fire(atom, self);
        self.consumers[id.0 as usize].consumer = Some(consumer);
        for req in requests {
            let normalized = normalize_clause(&req.literals, req.prob)
                .expect("consumer produced an empty clause");
            if let Normalized::Clause(c) = normalized {
                self.install(c, req.origin)?;
            }
        }
        Ok(())
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn origin_deps(&self, origin: &ClauseOrigin) -> Deps {
        let mut deps = Deps::new();
        for &a in origin.reads() {
            let n = self.node(a);
            deps.extend(n.current(Bound::Lower).deps.iter().copied());
            deps.extend(n.current(Bound::Upper).deps.iter().copied());
        }
        deps
    }

    /// Puts a normalized clause into its table, intersecting with an existing
    /// clause over the same signs. Enqueues the rules the change may enable.
    fn install(&mut self, clause: Clause, origin: ClauseOrigin) -> Result<ClauseId, ContradictionReport> {
        let key = clause.key();
        let signs = clause.signs();
        let deps = self.origin_deps(&origin);
        let ti = match self.table_index.get(&key) {
            Some(&ti) => ti,
            None => {
                self.tables.push(ClauseTable::new(key.clone()));
                self.table_index.insert(key.clone(), self.tables.len() - 1);
                self.tables.len() - 1
            }
        };
        if let Some(&(id, old)) = self.tables[ti].clauses.get(&signs) {
            let Some(new) = crate::interval::interval_intersect(old, clause.prob()) else {
                let rec = &self.clauses[&id];
                let mut culprits = rec.generators().clone();
                culprits.extend(deps);
                return Err(ContradictionReport {
                    kind: ContradictionKind::ClauseConflict(id),
                    culprit_assumptions: self.deps_to_literals(&culprits),
                    trace: Vec::new(),
                });
            };
            let tighter = new.lo() > old.lo() + EPS_PROP || new.hi() < old.hi() - EPS_PROP;
            if tighter {
                let seq = self.next_seq();
                let rec = self.clauses.get_mut(&id).expect("table and clause map agree");
                let mut merged = rec.generators().clone();
                merged.extend(deps);
                rec.clause.set_prob(new);
                rec.versions.push(ClauseVersion {
                    seq,
                    prob: new,
                    deps: merged,
                });
                if let ClauseOrigin::Sigma { generation, .. } = &mut rec.origin {
                    *generation += 1;
                }
                self.tables[ti].clauses.insert(signs, (id, new));
                self.enqueue_table(ti);
            }
            return Ok(id);
        }
        let id = ClauseId(self.next_clause);
        self.next_clause += 1;
        let seq = self.next_seq();
        for l in clause.literals() {
            self.nodes[l.atom.index()].clauses.insert(id);
        }
        self.tables[ti].clauses.insert(signs, (id, clause.prob()));
        self.clauses.insert(
            id,
            ClauseRecord {
                id,
                versions: vec![ClauseVersion {
                    seq,
                    prob: clause.prob(),
                    deps,
                }],
                clause,
                origin,
                table: key,
            },
        );
        self.enqueue_table(ti);
        Ok(id)
    }

    fn enqueue_table(&mut self, ti: usize) {
        self.enqueue(Work::Constraint2(ti));
        let ids: Vec<ClauseId> = self.tables[ti].clause_ids().collect();
        for id in ids {
            self.enqueue(Work::Constraint1(id));
        }
    }

    /// Raises a literal's lower bound (for a negative literal this lowers
    /// the atom's upper bound).
    fn raise_literal(
        &mut self,
        literal: Literal,
        value: f64,
        support: Support,
        deps: Deps,
    ) -> Result<bool, ContradictionReport> {
        if literal.positive {
            self.narrow(literal.atom, Bound::Lower, value, support, deps)
        } else {
            self.narrow(literal.atom, Bound::Upper, 1.0 - value, support, deps)
        }
    }

    /// Narrows one bound of an atom if the candidate improves it by more than
    /// [`EPS_PROP`]. Returns whether it changed.
    fn narrow(
        &mut self,
        atom: AtomId,
        bound: Bound,
        value: f64,
        support: Support,
        deps: Deps,
    ) -> Result<bool, ContradictionReport> {
        let node = &self.nodes[atom.index()];
        let improves = match bound {
            Bound::Lower => value > node.lo() + EPS_PROP,
            Bound::Upper => value < node.hi() - EPS_PROP,
        };
        if !improves {
            return Ok(false);
        }
        // rounding past 0 or 1 is clamped; larger excursions are kept so the
        // crossing check below sees them
        let value = match bound {
            Bound::Lower if value > 1.0 && value <= 1.0 + EPS_CMP => 1.0,
            Bound::Upper if (-EPS_CMP..0.0).contains(&value) => 0.0,
            _ => value,
        };
        let seq = self.next_seq();
        self.stats.bound_updates += 1;
        let entry = BoundEntry {
            value,
            support,
            seq,
            deps,
        };
        let node = &mut self.nodes[atom.index()];
        match bound {
            Bound::Lower => node.lower.push(entry),
            Bound::Upper => node.upper.push(entry),
        }
        let clause_ids: Vec<ClauseId> = node.clauses.iter().copied().collect();
        let consumers = node.consumers.clone();
        if node.lo() > node.hi() + EPS_CMP {
            return Err(self.condition5_report(atom));
        }
        for id in clause_ids {
            self.enqueue(Work::Constraint1(id));
        }
        for c in consumers {
            self.schedule_fire(c, atom);
        }
        Ok(true)
    }

    /// Upper bound of a literal with the bound entry it comes from.
    fn literal_upper(&self, literal: Literal) -> (f64, &BoundEntry) {
        let n = self.node(literal.atom);
        if literal.positive {
            (n.hi(), n.current(Bound::Upper))
        } else {
            (1.0 - n.lo(), n.current(Bound::Lower))
        }
    }

    fn literal_lower(&self, literal: Literal) -> f64 {
        let n = self.node(literal.atom);
        if literal.positive {
            n.lo()
        } else {
            1.0 - n.hi()
        }
    }

    /// Lower overlapping factor of a stored clause.
    pub fn overlap_lower(&self, id: ClauseId) -> f64 {
        let rec = &self.clauses[&id];
        let ti = self.table_index[&rec.table];
        self.tables[ti].overlap_lower(&rec.clause.signs()).0
    }

    /// Clause rule on one clause: returns the number of bounds it narrowed.
    fn apply_constraint1(&mut self, id: ClauseId) -> Result<usize, ContradictionReport> {
        let Some(rec) = self.clauses.get(&id) else {
            return Ok(0);
        };
        self.stats.constraint1 += 1;
        let ti = self.table_index[&rec.table];
        let (f_lo, overlap) = self.tables[ti].overlap_lower(&rec.clause.signs());
        let p_lo = rec.clause.prob().lo();
        let literals = rec.clause.literals().to_vec();
        let uppers: Vec<f64> = literals.iter().map(|&l| self.literal_upper(l).0).collect();
        let total_upper: f64 = uppers.iter().sum();

        let mut updates = Vec::new();
        for (i, &lit) in literals.iter().enumerate() {
            let candidate = p_lo + f_lo - (total_upper - uppers[i]);
            if candidate <= 0.0 || candidate <= self.literal_lower(lit) + EPS_PROP {
                continue;
            }
            let mut deps = rec.generators().clone();
            for o in &overlap {
                deps.extend(self.clauses[o].generators().iter().copied());
            }
            for (j, &other) in literals.iter().enumerate() {
                if j != i {
                    deps.extend(self.literal_upper(other).1.deps.iter().copied());
                }
            }
            updates.push((lit, candidate, deps));
        }
        let mut changed = 0;
        for (lit, value, deps) in updates {
            let support = Support::Constraint1 {
                clause: id,
                overlap: overlap.clone(),
            };
            if self.raise_literal(lit, value, support, deps)? {
                changed += 1;
            }
        }
        Ok(changed)
    }

    /// Additivity rule for one literal of a table.
    fn apply_constraint2(&mut self, ti: usize, literal: Literal) -> Result<bool, ContradictionReport> {
        let (value, contributors) = self.tables[ti].additivity_lower(literal);
        if contributors.is_empty() || value <= self.literal_lower(literal) + EPS_PROP {
            return Ok(false);
        }
        let mut deps = Deps::new();
        for c in &contributors {
            deps.extend(self.clauses[c].generators().iter().copied());
        }
        let support = Support::Constraint2 {
            table: self.tables[ti].key.clone(),
            clauses: contributors,
        };
        self.raise_literal(literal, value, support, deps)
    }

    fn apply_constraint2_table(&mut self, ti: usize) -> Result<usize, ContradictionReport> {
        self.stats.constraint2 += 1;
        let atoms = self.tables[ti].key.atoms().to_vec();
        let mut changed = 0;
        for a in atoms {
            for lit in [Literal::pos(a), Literal::neg(a)] {
                if self.apply_constraint2(ti, lit)? {
                    changed += 1;
                }
            }
        }
        Ok(changed)
    }

    // ---- consistency -------------------------------------------------------

    fn condition5_report(&self, atom: AtomId) -> ContradictionReport {
        let n = self.node(atom);
        let mut deps = n.current(Bound::Lower).deps.clone();
        deps.extend(n.current(Bound::Upper).deps.iter().copied());
        ContradictionReport {
            kind: ContradictionKind::Condition5(atom),
            culprit_assumptions: self.deps_to_literals(&deps),
            trace: vec![self.explain(atom, Bound::Lower), self.explain(atom, Bound::Upper)],
        }
    }

    /// Whether the clause's literals' upper bounds, less the lower
    /// overlapping factor, fall short of the clause's lower probability.
    pub fn clause_violated(&self, id: ClauseId) -> bool {
        let rec = &self.clauses[&id];
        let sum: f64 = rec.clause.literals().iter().map(|&l| self.literal_upper(l).0).sum();
        sum - self.overlap_lower(id) < rec.clause.prob().lo() - EPS_CMP
    }

    /// Scans for crossed bounds and for unsatisfiable clauses.
    pub fn check_consistency(&self) -> Result<(), ContradictionReport> {
        for n in &self.nodes {
            if n.lo() > n.hi() + EPS_CMP {
                return Err(self.condition5_report(n.atom.id));
            }
        }
        for rec in self.clauses.values() {
            if self.clause_violated(rec.id) {
                let ti = self.table_index[&rec.table];
                let (_, overlap) = self.tables[ti].overlap_lower(&rec.clause.signs());
                let mut deps = rec.generators().clone();
                for o in &overlap {
                    deps.extend(self.clauses[o].generators().iter().copied());
                }
                let mut trace = Vec::new();
                for &l in rec.clause.literals() {
                    deps.extend(self.literal_upper(l).1.deps.iter().copied());
                    let bound = if l.positive { Bound::Upper } else { Bound::Lower };
                    trace.push(self.explain(l.atom, bound));
                }
                return Err(ContradictionReport {
                    kind: ContradictionKind::Condition6(rec.id),
                    culprit_assumptions: self.deps_to_literals(&deps),
                    trace,
                });
            }
        }
        Ok(())
    }
}
