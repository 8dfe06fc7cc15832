//! Belief networks with partially specified conditionals, layered on the
//! engine.
//!
//! Every state of a variable becomes an atom named `variable:state`. The
//! network itself computes nothing: it installs structural clauses, priors
//! as assumptions, and consumers that turn conditionals into clauses through
//! the interval chain rule once all parent states are known.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    Bound, ClauseId, ClauseOrigin, ClauseRequest, ConsumerId, Support, ContradictionReport, Engine, EngineError,
    ExplanationTree,
};
use crate::interval::{conjunction_to_clause, interval_intersect, AtomId, IntervalProb, Literal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId {
    pub variable: VarId,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DependencyId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub states: Vec<String>,
    pub atoms: Vec<AtomId>,
}

/// `P(child | parents) = prob`, parents from distinct variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSpec {
    pub id: DependencyId,
    pub child: StateId,
    pub parents: Vec<StateId>,
    pub prob: IntervalProb,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("variable {0:?} already exists")]
    DuplicateVariable(String),
    #[error("variable {0:?} lists state {1:?} twice")]
    DuplicateState(String, String),
    #[error("variable {0:?} needs at least two states")]
    TooFewStates(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("{0} is not a root variable; priors are accepted on roots only")]
    NotRoot(String),
    #[error("{0} already carries a prior; retract it first")]
    PriorExists(String),
    #[error("{0} carries no prior")]
    NoPrior(String),
    #[error("conditional needs at least one parent")]
    NoParents,
    #[error("variable {0:?} appears twice among the parents")]
    DuplicateParentVariable(String),
    #[error("variable {0:?} cannot depend on itself")]
    SelfDependency(String),
    #[error("dependency {child} <- {parent} would close a cycle")]
    Cyclic { child: String, parent: String },
    #[error("conditional for {0} conflicts with its earlier specification")]
    ConflictingConditional(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl NetworkError {
    pub fn contradiction(&self) -> Option<&ContradictionReport> {
        match self {
            NetworkError::Engine(EngineError::Contradiction(r)) => Some(r),
            _ => None,
        }
    }
}

/// Interval chain rule for one conditional. Fires once every parent state
/// is narrower than `[0, 1]`, and again on each further narrowing.
struct ChainRule {
    dependency: u32,
    child: AtomId,
    parents: Vec<AtomId>,
    /// Other states of the parent variables, negated in the conjunctions.
    parent_siblings: Vec<AtomId>,
    prob: Rc<Cell<IntervalProb>>,
}

impl ChainRule {
    fn expand(&self, engine: &Engine) -> Vec<ClauseRequest> {
        let parent_iv: Vec<IntervalProb> = self.parents.iter().map(|&a| engine.interval(a)).collect();
        if parent_iv.iter().any(|v| v.is_vacuous()) {
            return Vec::new();
        }
        let (pos, neg) = chain_rule_terms(&parent_iv, self.prob.get());
        let mut conj: Vec<Literal> = Vec::with_capacity(1 + self.parents.len() + self.parent_siblings.len());
        conj.push(Literal::pos(self.child));
        conj.extend(self.parents.iter().map(|&a| Literal::pos(a)));
        conj.extend(self.parent_siblings.iter().map(|&a| Literal::neg(a)));
        let origin = ClauseOrigin::Generated {
            dependency: self.dependency,
            reads: self.parents.clone(),
        };
        let mut out = Vec::with_capacity(2);
        for (child_positive, prob) in [(true, pos), (false, neg)] {
            conj[0] = Literal {
                atom: self.child,
                positive: child_positive,
            };
            let clause = conjunction_to_clause(&conj, prob).expect("conjunction atoms are distinct");
            out.push(ClauseRequest {
                literals: clause.literals().to_vec(),
                prob: clause.prob(),
                origin: origin.clone(),
            });
        }
        out
    }
}

/// Conjunction intervals `(P(child & parents), P(~child & parents))` from
/// parent intervals and `P(child | parents)`:
///
/// ```text
/// lo(child & pa)  = prod lo(pa) * lo(p)      hi(child & pa)  = prod hi(pa) * hi(p)
/// lo(~child & pa) = prod lo(pa) * (1-hi(p))  hi(~child & pa) = prod hi(pa) * (1-lo(p))
/// ```
pub fn chain_rule_terms(
    parents: &[IntervalProb],
    conditional: IntervalProb,
) -> (IntervalProb, IntervalProb) {
    let lo: f64 = parents.iter().map(|v| v.lo()).product();
    let hi: f64 = parents.iter().map(|v| v.hi()).product();
    let pos = IntervalProb::new(lo * conditional.lo(), hi * conditional.hi()).expect("product of bounds");
    let neg = IntervalProb::new(lo * (1.0 - conditional.hi()), hi * (1.0 - conditional.lo()))
        .expect("product of bounds");
    (pos, neg)
}

/// Exhaustivity over the uninformed states, from the informed states'
/// bounds: `[max(0, 1 - sum hi), 1 - sum lo]`.
struct SigmaRule {
    variable: u32,
    atoms: Vec<AtomId>,
    generation: u32,
}

impl SigmaRule {
    /// Whether a state carries information from outside the variable: an
    /// assumption, or a bound resting on some clause other than this
    /// variable's own structural and sigma clauses. Any split of the states
    /// is sound; this one excludes the bounds the split itself produces.
    fn informed(&self, engine: &Engine, atom: AtomId) -> bool {
        if engine.assumption(atom).is_some() {
            return true;
        }
        let own = |id: &ClauseId| match engine.clause(*id).map(|r| &r.origin) {
            Some(ClauseOrigin::Structural { variable }) | Some(ClauseOrigin::Sigma { variable, .. }) => {
                *variable == self.variable
            }
            _ => false,
        };
        [Bound::Lower, Bound::Upper].iter().any(|&b| match engine.support(atom, b) {
            Support::None | Support::Assumption => false,
            Support::Constraint1 { clause, .. } => !own(clause),
            Support::Constraint2 { clauses, .. } => !clauses.iter().all(own),
        })
    }

    fn refresh(&mut self, engine: &Engine) -> Vec<ClauseRequest> {
        let (known, unknown): (Vec<AtomId>, Vec<AtomId>) =
            self.atoms.iter().partition(|&&a| self.informed(engine, a));
        if known.is_empty() || unknown.is_empty() {
            return Vec::new();
        }
        let sum_lo: f64 = known.iter().map(|&a| engine.interval(a).lo()).sum();
        let sum_hi: f64 = known.iter().map(|&a| engine.interval(a).hi()).sum();
        let hi = 1.0 - sum_lo;
        if hi < 0.0 {
            // known minima already exceed 1; the exclusivity clauses report it
            return Vec::new();
        }
        let lo = (1.0 - sum_hi).max(0.0);
        let Ok(prob) = IntervalProb::new(lo.min(hi), hi) else {
            return Vec::new();
        };
        self.generation += 1;
        vec![ClauseRequest {
            literals: unknown.iter().map(|&a| Literal::pos(a)).collect(),
            prob,
            origin: ClauseOrigin::Sigma {
                variable: self.variable,
                generation: self.generation,
                reads: known,
            },
        }]
    }
}

struct DependencyRecord {
    spec: ConditionalSpec,
    prob: Rc<Cell<IntervalProb>>,
    consumer: ConsumerId,
}

/// An ignorant belief network session.
pub struct Network {
    engine: Engine,
    variables: Vec<Variable>,
    by_name: HashMap<String, VarId>,
    dependencies: Vec<DependencyRecord>,
    dep_index: HashMap<(StateId, Vec<StateId>), DependencyId>,
    /// Parent variables of each variable.
    parents_of: Vec<BTreeSet<VarId>>,
    priors: BTreeMap<StateId, IntervalProb>,
}

impl Default for Network {
    fn default() -> Self {
        Self::new()
    }
}

impl Network {
    pub fn new() -> Self {
        Self::with_engine(Engine::new())
    }

    /// Uses a preconfigured (e.g. order-shuffled) engine.
    pub fn with_engine(engine: Engine) -> Self {
        Network {
            engine,
            variables: Vec::new(),
            by_name: HashMap::new(),
            dependencies: Vec::new(),
            dep_index: HashMap::new(),
            parents_of: Vec::new(),
            priors: BTreeMap::new(),
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn into_engine(self) -> Engine {
        self.engine
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0 as usize]
    }

    pub fn variable_id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn conditionals(&self) -> impl Iterator<Item = &ConditionalSpec> {
        self.dependencies.iter().map(|d| &d.spec)
    }

    pub fn priors(&self) -> &BTreeMap<StateId, IntervalProb> {
        &self.priors
    }

    pub fn parents_of(&self, var: VarId) -> &BTreeSet<VarId> {
        &self.parents_of[var.0 as usize]
    }

    pub fn is_root(&self, var: VarId) -> bool {
        self.parents_of[var.0 as usize].is_empty()
    }

    pub fn state(&self, variable: &str, state: &str) -> Result<StateId, NetworkError> {
        let var = self
            .variable_id(variable)
            .ok_or_else(|| NetworkError::UnknownVariable(variable.to_string()))?;
        let index = self.variables[var.0 as usize]
            .states
            .iter()
            .position(|s| s == state)
            .ok_or_else(|| NetworkError::UnknownState(format!("{variable}={state}")))?;
        Ok(StateId { variable: var, index })
    }

    pub fn atom_of(&self, state: StateId) -> AtomId {
        self.variable(state.variable).atoms[state.index]
    }

    pub fn state_name(&self, state: StateId) -> String {
        let v = self.variable(state.variable);
        format!("{}:{}", v.name, v.states[state.index])
    }

    /// Declares a variable: one atom per state, the exhaustivity clause,
    /// pairwise exclusivity clauses, and the sigma consumer.
    pub fn define_variable(&mut self, name: &str, states: &[&str]) -> Result<VarId, NetworkError> {
        if self.by_name.contains_key(name) {
            return Err(NetworkError::DuplicateVariable(name.to_string()));
        }
        if states.len() < 2 {
            return Err(NetworkError::TooFewStates(name.to_string()));
        }
        let mut seen = BTreeSet::new();
        for s in states {
            if !seen.insert(*s) {
                return Err(NetworkError::DuplicateState(name.to_string(), s.to_string()));
            }
        }
        let id = VarId(self.variables.len() as u32);
        let mut atoms = Vec::with_capacity(states.len());
        for s in states {
            atoms.push(self.engine.add_atom(&format!("{name}:{s}"))?);
        }
        self.variables.push(Variable {
            id,
            name: name.to_string(),
            states: states.iter().map(|s| s.to_string()).collect(),
            atoms: atoms.clone(),
        });
        self.by_name.insert(name.to_string(), id);
        self.parents_of.push(BTreeSet::new());

        let origin = ClauseOrigin::Structural { variable: id.0 };
        let all: Vec<Literal> = atoms.iter().map(|&a| Literal::pos(a)).collect();
        self.engine.add_clause(&all, IntervalProb::CERTAIN, origin.clone())?;
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                self.engine.add_clause(
                    &[Literal::neg(atoms[i]), Literal::neg(atoms[j])],
                    IntervalProb::CERTAIN,
                    origin.clone(),
                )?;
            }
        }
        let mut sigma = SigmaRule {
            variable: id.0,
            atoms: atoms.clone(),
            generation: 0,
        };
        self.engine
            .register_consumer_on(&atoms, move |_: AtomId, e: &Engine| sigma.refresh(e))?;
        Ok(id)
    }

    /// Assumes a root state with the given interval.
    pub fn set_prior(&mut self, state: StateId, prob: IntervalProb) -> Result<(), NetworkError> {
        if !self.is_root(state.variable) {
            return Err(NetworkError::NotRoot(self.variable(state.variable).name.clone()));
        }
        if self.priors.contains_key(&state) {
            return Err(NetworkError::PriorExists(self.state_name(state)));
        }
        self.priors.insert(state, prob);
        self.engine.assume(Literal::pos(self.atom_of(state)), prob)?;
        Ok(())
    }

    pub fn retract_prior(&mut self, state: StateId) -> Result<(), NetworkError> {
        if self.priors.remove(&state).is_none() {
            return Err(NetworkError::NoPrior(self.state_name(state)));
        }
        self.engine.retract(self.atom_of(state))?;
        Ok(())
    }

    /// Replaces a prior: retract (if present) then assume.
    pub fn reset_prior(&mut self, state: StateId, prob: IntervalProb) -> Result<(), NetworkError> {
        if self.priors.contains_key(&state) {
            self.retract_prior(state)?;
        }
        self.set_prior(state, prob)
    }

    fn reaches(&self, from: VarId, to: VarId) -> bool {
        // walk parent edges upwards from `from`
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if seen.insert(v) {
                stack.extend(self.parents_of[v.0 as usize].iter().copied());
            }
        }
        false
    }

    /// Adds `P(child | parents) = prob`. Re-specifying an existing
    /// conditional intersects the intervals and re-expands it.
    pub fn add_conditional(
        &mut self,
        child: StateId,
        parents: &[StateId],
        prob: IntervalProb,
    ) -> Result<DependencyId, NetworkError> {
        if parents.is_empty() {
            return Err(NetworkError::NoParents);
        }
        let mut parent_vars = BTreeSet::new();
        for p in parents {
            if p.variable == child.variable {
                return Err(NetworkError::SelfDependency(self.variable(child.variable).name.clone()));
            }
            if !parent_vars.insert(p.variable) {
                return Err(NetworkError::DuplicateParentVariable(self.variable(p.variable).name.clone()));
            }
        }
        let mut sorted = parents.to_vec();
        sorted.sort();
        if let Some(&id) = self.dep_index.get(&(child, sorted.clone())) {
            let rec = &mut self.dependencies[id.0 as usize];
            let merged = interval_intersect(rec.spec.prob, prob)
                .ok_or_else(|| NetworkError::ConflictingConditional(self.state_name(child)))?;
            let rec = &mut self.dependencies[id.0 as usize];
            rec.spec.prob = merged;
            rec.prob.set(merged);
            let consumer = rec.consumer;
            self.engine.refire_consumer(consumer)?;
            return Ok(id);
        }
        for &pv in &parent_vars {
            if self.reaches(pv, child.variable) {
                return Err(NetworkError::Cyclic {
                    child: self.variable(child.variable).name.clone(),
                    parent: self.variable(pv).name.clone(),
                });
            }
        }
        if self.priors.keys().any(|s| s.variable == child.variable) {
            return Err(NetworkError::NotRoot(self.variable(child.variable).name.clone()));
        }
        self.parents_of[child.variable.0 as usize].extend(parent_vars.iter().copied());

        let id = DependencyId(self.dependencies.len() as u32);
        let parent_atoms: Vec<AtomId> = sorted.iter().map(|&s| self.atom_of(s)).collect();
        let mut siblings = Vec::new();
        for p in &sorted {
            let v = self.variable(p.variable);
            siblings.extend(
                v.atoms
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != p.index)
                    .map(|(_, &a)| a),
            );
        }
        let shared = Rc::new(Cell::new(prob));
        let rule = ChainRule {
            dependency: id.0,
            child: self.atom_of(child),
            parents: parent_atoms.clone(),
            parent_siblings: siblings,
            prob: shared.clone(),
        };
        let spec = ConditionalSpec {
            id,
            child,
            parents: sorted.clone(),
            prob,
        };
        // record first: the consumer may fire during registration
        self.dep_index.insert((child, sorted), id);
        let consumer = self
            .engine
            .register_consumer_on(&parent_atoms, move |_: AtomId, e: &Engine| rule.expand(e));
        let consumer = match consumer {
            Ok(c) => c,
            Err(EngineError::Contradiction(r)) => {
                // the consumer is installed even though propagation failed
                let c = ConsumerId(self.engine_consumer_count() - 1);
                self.dependencies.push(DependencyRecord {
                    spec,
                    prob: shared,
                    consumer: c,
                });
                return Err(EngineError::Contradiction(r).into());
            }
            Err(e) => return Err(e.into()),
        };
        self.dependencies.push(DependencyRecord {
            spec,
            prob: shared,
            consumer,
        });
        Ok(id)
    }

    fn engine_consumer_count(&self) -> u32 {
        self.engine.consumer_count() as u32
    }

    /// Asserts a user clause over states; `false` negates the state.
    pub fn assert_clause(
        &mut self,
        literals: &[(bool, StateId)],
        prob: IntervalProb,
    ) -> Result<Option<ClauseId>, NetworkError> {
        let lits: Vec<Literal> = literals
            .iter()
            .map(|&(positive, s)| Literal {
                atom: self.atom_of(s),
                positive,
            })
            .collect();
        Ok(self.engine.add_clause(&lits, prob, ClauseOrigin::UserAssertion)?)
    }

    pub fn query_state(&self, state: StateId) -> IntervalProb {
        self.engine.interval(self.atom_of(state))
    }

    pub fn explain_state(&self, state: StateId, bound: Bound) -> ExplanationTree {
        self.engine.explain(self.atom_of(state), bound)
    }

    pub fn check_consistency(&self) -> Result<(), ContradictionReport> {
        self.engine.check_consistency()
    }

    /// Intervals of every state, in declaration order.
    pub fn marginals(&self) -> Vec<(StateId, IntervalProb)> {
        let mut out = Vec::new();
        for v in &self.variables {
            for index in 0..v.states.len() {
                let s = StateId { variable: v.id, index };
                out.push((s, self.query_state(s)));
            }
        }
        out
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}s{}", self.variable.0, self.index)
    }
}

/// A network as plain data: what a model file declares.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub variables: Vec<VariableDecl>,
    pub priors: Vec<PriorDecl>,
    pub conditionals: Vec<ConditionalDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub states: Vec<String>,
}

/// `(variable, state)` by name.
pub type StateRef = (String, String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorDecl {
    pub state: StateRef,
    pub prob: IntervalProb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDecl {
    pub child: StateRef,
    pub parents: Vec<StateRef>,
    pub prob: IntervalProb,
}

impl NetworkModel {
    pub fn variable(&self, name: &str) -> Option<&VariableDecl> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// Conditionals first, then priors, so every consumer is in place when
    /// the assumptions arrive.
    pub fn build(&self) -> Result<Network, NetworkError> {
        self.build_on(Engine::new())
    }

    pub fn build_on(&self, engine: Engine) -> Result<Network, NetworkError> {
        let mut n = Network::with_engine(engine);
        for v in &self.variables {
            let states: Vec<&str> = v.states.iter().map(String::as_str).collect();
            n.define_variable(&v.name, &states)?;
        }
        for c in &self.conditionals {
            let child = n.state(&c.child.0, &c.child.1)?;
            let parents = c
                .parents
                .iter()
                .map(|(v, s)| n.state(v, s))
                .collect::<Result<Vec<_>, _>>()?;
            n.add_conditional(child, &parents, c.prob)?;
        }
        for p in &self.priors {
            let s = n.state(&p.state.0, &p.state.1)?;
            n.set_prior(s, p.prob)?;
        }
        Ok(n)
    }
}

impl Network {
    pub fn state_ref(&self, state: StateId) -> StateRef {
        let v = self.variable(state.variable);
        (v.name.clone(), v.states[state.index].clone())
    }

    /// The current declarations as plain data.
    pub fn to_model(&self) -> NetworkModel {
        NetworkModel {
            variables: self
                .variables
                .iter()
                .map(|v| VariableDecl {
                    name: v.name.clone(),
                    states: v.states.clone(),
                })
                .collect(),
            priors: self
                .priors
                .iter()
                .map(|(&s, &prob)| PriorDecl {
                    state: self.state_ref(s),
                    prob,
                })
                .collect(),
            conditionals: self
                .conditionals()
                .map(|c| ConditionalDecl {
                    child: self.state_ref(c.child),
                    parents: c.parents.iter().map(|&p| self.state_ref(p)).collect(),
                    prob: c.prob,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> IntervalProb {
        IntervalProb::new(lo, hi).unwrap()
    }

    fn close(v: IntervalProb, lo: f64, hi: f64, tol: f64) -> bool {
        (v.lo() - lo).abs() <= tol && (v.hi() - hi).abs() <= tol
    }

    #[test]
    fn structural_clause_counts() {
        let mut n = Network::new();
        n.define_variable("fire", &["yes", "no"]).unwrap();
        assert_eq!(n.engine().clause_count(), 2);
        n.define_variable("colour", &["r", "g", "b"]).unwrap();
        assert_eq!(n.engine().clause_count(), 2 + 4);
        for (_, v) in n.marginals() {
            assert!(v.is_vacuous());
        }
    }

    #[test]
    fn variable_errors() {
        let mut n = Network::new();
        n.define_variable("x", &["a", "b"]).unwrap();
        assert_eq!(
            n.define_variable("x", &["a", "b"]),
            Err(NetworkError::DuplicateVariable("x".into()))
        );
        assert_eq!(
            n.define_variable("y", &["a", "a"]),
            Err(NetworkError::DuplicateState("y".into(), "a".into()))
        );
        assert_eq!(n.define_variable("z", &["a"]), Err(NetworkError::TooFewStates("z".into())));
        assert!(matches!(n.state("x", "c"), Err(NetworkError::UnknownState(_))));
        assert!(matches!(n.state("w", "a"), Err(NetworkError::UnknownVariable(_))));
    }

    #[test]
    fn priors_complement_through_structure() {
        let mut n = Network::new();
        n.define_variable("fire", &["yes", "no"]).unwrap();
        n.define_variable("tampering", &["yes", "no"]).unwrap();
        let fy = n.state("fire", "yes").unwrap();
        let fno = n.state("fire", "no").unwrap();
        n.set_prior(fy, iv(0.7, 0.9)).unwrap();
        assert!(close(n.query_state(fno), 0.1, 0.3, 1e-12));
        let ty = n.state("tampering", "yes").unwrap();
        n.set_prior(ty, iv(0.9, 0.9)).unwrap();
        assert!(close(n.query_state(n.state("tampering", "no").unwrap()), 0.1, 0.1, 1e-12));
    }

    #[test]
    fn sigma_over_two_unknown_states() {
        let mut n = Network::new();
        n.define_variable("c", &["r", "g", "b"]).unwrap();
        n.set_prior(n.state("c", "r").unwrap(), iv(0.5, 0.5)).unwrap();
        let sigma: Vec<_> = n
            .engine()
            .clauses()
            .filter(|r| matches!(r.origin, ClauseOrigin::Sigma { .. }))
            .collect();
        assert_eq!(sigma.len(), 1);
        assert_eq!(sigma[0].clause.literals().len(), 2);
        assert!(close(sigma[0].clause.prob(), 0.5, 0.5, 1e-12));
    }

    #[test]
    fn sibling_prior_overflow_is_a_contradiction() {
        let mut n = Network::new();
        n.define_variable("x", &["yes", "no"]).unwrap();
        n.set_prior(n.state("x", "yes").unwrap(), iv(0.6, 0.6)).unwrap();
        let err = n.set_prior(n.state("x", "no").unwrap(), iv(0.5, 0.5)).unwrap_err();
        let report = err.contradiction().expect("contradiction");
        assert_eq!(report.culprit_assumptions.len(), 2);
    }

    #[test]
    fn chain_rule_with_two_parents() {
        let fire = iv(0.7, 0.9);
        let tamper = iv(0.85, 0.95);
        let (pos, neg) = chain_rule_terms(&[fire, tamper], iv(0.5, 0.5));
        // direct evaluation of the four products
        assert!(close(pos, 0.7 * 0.85 * 0.5, 0.9 * 0.95 * 0.5, 1e-15));
        assert!(close(pos, 0.2975, 0.4275, 1e-12));
        assert!(close(neg, 0.2975, 0.4275, 1e-12));
        let (pos, neg) = chain_rule_terms(&[fire], IntervalProb::VACUOUS);
        assert!(close(pos, 0.0, 0.9, 1e-15));
        assert!(close(neg, 0.0, 0.9, 1e-15));
    }

    #[test]
    fn smoke_conditional_generates_the_two_cond_clauses() {
        let mut n = Network::new();
        n.define_variable("fire", &["yes", "no"]).unwrap();
        n.define_variable("smoke", &["yes", "no"]).unwrap();
        let fy = n.state("fire", "yes").unwrap();
        let sy = n.state("smoke", "yes").unwrap();
        n.add_conditional(sy, &[fy], iv(0.9, 0.9)).unwrap();
        // parents unknown: nothing generated yet
        assert!(n.engine().clauses().all(|r| !r.origin.is_derived()));
        n.set_prior(fy, iv(0.7, 0.9)).unwrap();
        let generated: Vec<_> = n
            .engine()
            .clauses()
            .filter(|r| matches!(r.origin, ClauseOrigin::Generated { .. }))
            .collect();
        assert_eq!(generated.len(), 2);
        let names = |r: &crate::engine::ClauseRecord| {
            let mut v: Vec<String> = r
                .clause
                .literals()
                .iter()
                .map(|&l| n.engine().literal_name(l))
                .collect();
            v.sort();
            v
        };
        for r in generated {
            let lits = names(r);
            let p = r.clause.prob();
            if lits.contains(&"smoke:yes".to_string()) {
                assert_eq!(lits, vec!["fire:no", "smoke:yes", "~fire:yes"]);
                assert!(close(p, 0.91, 0.93, 1e-12));
            } else {
                assert_eq!(lits, vec!["fire:no", "~fire:yes", "~smoke:yes"]);
                assert!(close(p, 0.19, 0.37, 1e-12));
            }
        }
        assert!(close(n.query_state(sy), 0.63, 0.93, 1e-12));
    }

    #[test]
    fn dependency_errors() {
        let mut n = Network::new();
        n.define_variable("a", &["y", "n"]).unwrap();
        n.define_variable("b", &["y", "n"]).unwrap();
        let ay = n.state("a", "y").unwrap();
        let an = n.state("a", "n").unwrap();
        let by = n.state("b", "y").unwrap();
        assert_eq!(n.add_conditional(by, &[], iv(0.5, 0.5)), Err(NetworkError::NoParents));
        assert!(matches!(n.add_conditional(ay, &[an], iv(0.5, 0.5)), Err(NetworkError::SelfDependency(_))));
        assert!(matches!(
            n.add_conditional(by, &[ay, an], iv(0.5, 0.5)),
            Err(NetworkError::DuplicateParentVariable(_))
        ));
        n.add_conditional(by, &[ay], iv(0.5, 0.5)).unwrap();
        assert!(matches!(n.add_conditional(ay, &[by], iv(0.5, 0.5)), Err(NetworkError::Cyclic { .. })));
        assert!(matches!(n.set_prior(by, iv(0.5, 0.5)), Err(NetworkError::NotRoot(_))));
        assert!(matches!(n.retract_prior(ay), Err(NetworkError::NoPrior(_))));
        assert!(matches!(
            n.add_conditional(by, &[ay], iv(0.7, 0.8)),
            Err(NetworkError::ConflictingConditional(_))
        ));
    }

    #[test]
    fn conditional_without_known_parents_never_fires() {
        let mut n = Network::new();
        n.define_variable("a", &["y", "n"]).unwrap();
        n.define_variable("b", &["y", "n"]).unwrap();
        n.add_conditional(n.state("b", "y").unwrap(), &[n.state("a", "y").unwrap()], iv(0.3, 0.3))
            .unwrap();
        assert_eq!(n.engine().stats().consumer_firings, 0);
        assert!(n.engine().clauses().all(|r| !r.origin.is_derived()));
    }

    fn fire_network() -> Network {
        let mut n = Network::new();
        for v in ["fire", "tampering", "smoke", "alarm", "leaving", "report"] {
            n.define_variable(v, &["yes", "no"]).unwrap();
        }
        n
    }

    fn cond(n: &mut Network, child: &str, parents: &[(&str, &str)], lo: f64, hi: f64) {
        let c = n.state(child, "yes").unwrap();
        let ps: Vec<StateId> = parents.iter().map(|(v, s)| n.state(v, s).unwrap()).collect();
        n.add_conditional(c, &ps, iv(lo, hi)).unwrap();
    }

    fn assert_column(n: &Network, column: &[(&str, f64, f64)]) {
        for &(name, lo, hi) in column {
            let (v, s) = name.split_once(':').unwrap();
            let got = n.query_state(n.state(v, s).unwrap());
            assert!(close(got, lo, hi, 5e-4), "{name}: got {got}, want [{lo} {hi}]");
        }
    }

    #[test]
    fn three_step_alarm_example() {
        let mut n = fire_network();
        cond(&mut n, "smoke", &[("fire", "yes")], 0.9, 0.9);
        cond(&mut n, "alarm", &[("fire", "yes"), ("tampering", "yes")], 0.5, 0.5);
        cond(&mut n, "alarm", &[("fire", "yes"), ("tampering", "no")], 0.99, 0.99);
        cond(&mut n, "alarm", &[("fire", "no"), ("tampering", "no")], 0.0001, 0.0001);
        cond(&mut n, "leaving", &[("alarm", "yes")], 0.8, 0.9);
        cond(&mut n, "leaving", &[("alarm", "no")], 0.001, 0.001);
        cond(&mut n, "report", &[("leaving", "yes")], 0.7, 0.8);
        cond(&mut n, "report", &[("leaving", "no")], 0.01, 0.01);
        let fy = n.state("fire", "yes").unwrap();
        let ty = n.state("tampering", "yes").unwrap();
        n.set_prior(fy, iv(0.7, 0.9)).unwrap();
        n.set_prior(ty, iv(0.85, 0.95)).unwrap();
        assert_column(
            &n,
            &[
                ("fire:yes", 0.7, 0.9),
                ("fire:no", 0.1, 0.3),
                ("tampering:yes", 0.85, 0.95),
                ("tampering:no", 0.05, 0.15),
                ("smoke:yes", 0.63, 0.93),
                ("smoke:no", 0.07, 0.37),
                ("alarm:yes", 0.332, 0.697),
                ("alarm:no", 0.303, 0.668),
                ("leaving:yes", 0.266, 0.664),
                ("leaving:no", 0.336, 0.734),
                ("report:yes", 0.19, 0.614),
                ("report:no", 0.386, 0.81),
            ],
        );
        n.reset_prior(fy, iv(0.8, 0.8)).unwrap();
        n.reset_prior(ty, iv(0.9, 0.9)).unwrap();
        assert_column(
            &n,
            &[
                ("smoke:yes", 0.72, 0.92),
                ("smoke:no", 0.08, 0.28),
                ("alarm:yes", 0.439, 0.619),
                ("alarm:no", 0.381, 0.561),
                ("leaving:yes", 0.352, 0.576),
                ("leaving:no", 0.424, 0.648),
                ("report:yes", 0.25, 0.51),
                ("report:no", 0.49, 0.75),
            ],
        );
        cond(&mut n, "smoke", &[("fire", "no")], 0.01, 0.01);
        cond(&mut n, "alarm", &[("fire", "no"), ("tampering", "yes")], 0.85, 0.85);
        cond(&mut n, "leaving", &[("alarm", "yes")], 0.88, 0.88);
        cond(&mut n, "report", &[("leaving", "yes")], 0.75, 0.75);
        assert_column(
            &n,
            &[
                ("smoke:yes", 0.722, 0.722),
                ("smoke:no", 0.278, 0.278),
                ("alarm:yes", 0.592, 0.592),
                ("alarm:no", 0.408, 0.408),
                ("leaving:yes", 0.522, 0.522),
                ("leaving:no", 0.478, 0.478),
                ("report:yes", 0.396, 0.396),
                ("report:no", 0.604, 0.604),
            ],
        );
    }
}
