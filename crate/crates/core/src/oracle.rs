//! Exact entailment for small clause sets, and exact marginals for complete
//! point-valued networks.
//!
//! Both are exponential and meant as ground truth for tests: a linear
//! program over the joint atomic events (one variable per truth assignment),
//! and plain enumeration of the joint distribution of a network.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{ContradictionReport, Engine};
use crate::interval::{AtomId, Clause, IntervalProb, Literal};
use crate::network::{ConditionalDecl, NetworkModel, PriorDecl, StateRef, VariableDecl};

pub const MAX_ATOMS: usize = 14;
/// Relaxation of every LP bound when the exact problem is infeasible, so
/// constraint sets consistent up to rounding stay feasible.
pub const LP_SLACK: f64 = 1e-9;
/// Containment tolerance between engine and oracle intervals.
pub const CONTAINMENT_TOL: f64 = 1e-7;
/// A width difference above this is reported as a strict gap.
pub const GAP_TOL: f64 = 1e-6;
const MAX_JOINT: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{0} atoms exceed the oracle limit of {MAX_ATOMS}")]
    TooManyAtoms(usize),
    #[error("atom {0:?} is not part of the problem")]
    UnknownAtom(AtomId),
    #[error("the constraints are unsatisfiable")]
    Unsatisfiable,
    #[error("LP solver failure: {0}")]
    Solver(String),
    #[error("model is not a complete point-valued network: {0}")]
    Incomplete(String),
    #[error("joint distribution has too many entries ({0})")]
    JointTooLarge(usize),
}

/// All truth assignments over an ordered atom list. World `w` makes atom `i`
/// true iff bit `i` of `w` is set.
#[derive(Debug, Clone)]
pub struct WorldTable {
    atoms: Vec<AtomId>,
    position: HashMap<AtomId, usize>,
}

impl WorldTable {
    pub fn new(atoms: Vec<AtomId>) -> Result<Self, OracleError> {
        if atoms.len() > MAX_ATOMS {
            return Err(OracleError::TooManyAtoms(atoms.len()));
        }
        let position = atoms.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        Ok(WorldTable { atoms, position })
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.atoms
    }

    pub fn world_count(&self) -> usize {
        1 << self.atoms.len()
    }

    pub fn holds(&self, world: usize, literal: Literal) -> Result<bool, OracleError> {
        let i = *self.position.get(&literal.atom).ok_or(OracleError::UnknownAtom(literal.atom))?;
        Ok((world >> i & 1 == 1) == literal.positive)
    }

    pub fn satisfies(&self, world: usize, literals: &[Literal]) -> Result<bool, OracleError> {
        for &l in literals {
            if self.holds(world, l)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Satisfaction matrix, one row per world.
    pub fn matrix(&self, clauses: &[Clause]) -> Result<Vec<Vec<bool>>, OracleError> {
        (0..self.world_count())
            .map(|w| clauses.iter().map(|c| self.satisfies(w, c.literals())).collect())
            .collect()
    }
}

/// A probability constraint over a disjunction of literals.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub literals: Vec<Literal>,
    pub prob: IntervalProb,
}

#[derive(Debug, Clone, Default)]
pub struct EntailmentProblem {
    pub atoms: Vec<AtomId>,
    pub clauses: Vec<Constraint>,
    pub assumptions: Vec<(Literal, IntervalProb)>,
}

impl EntailmentProblem {
    pub fn new(atoms: Vec<AtomId>) -> Self {
        EntailmentProblem {
            atoms,
            ..Default::default()
        }
    }

    pub fn clause(mut self, literals: &[Literal], prob: IntervalProb) -> Self {
        self.clauses.push(Constraint {
            literals: literals.to_vec(),
            prob,
        });
        self
    }

    pub fn assume(mut self, literal: Literal, prob: IntervalProb) -> Self {
        self.assumptions.push((literal, prob));
        self
    }

    /// Everything the engine currently holds: all atoms, all stored clauses
    /// (structural, user, sigma, generated) and all assumptions.
    pub fn from_engine(engine: &Engine) -> Self {
        let mut p = EntailmentProblem::new(engine.atoms().map(|a| a.id).collect());
        for rec in engine.clauses() {
            p.clauses.push(Constraint {
                literals: rec.clause.literals().to_vec(),
                prob: rec.clause.prob(),
            });
        }
        for l in engine.assumptions() {
            let a = engine.assumption(l.atom).expect("listed assumption");
            p.assumptions.push((a.literal, a.interval));
        }
        p
    }

    fn constraints(&self) -> impl Iterator<Item = Constraint> + '_ {
        self.clauses.iter().cloned().chain(self.assumptions.iter().map(|&(l, prob)| Constraint {
            literals: vec![l],
            prob,
        }))
    }

    /// Worlds surviving the certain constraints, and the remaining
    /// constraints as world-index lists.
    fn presolve(&self) -> Result<Presolved, OracleError> {
        let table = WorldTable::new(self.atoms.clone())?;
        let constraints: Vec<Constraint> = self.constraints().collect();
        let mut sat: Vec<Vec<bool>> = Vec::with_capacity(constraints.len());
        for c in &constraints {
            sat.push(
                (0..table.world_count())
                    .map(|w| table.satisfies(w, &c.literals))
                    .collect::<Result<_, _>>()?,
            );
        }
        // a certain clause excludes its falsifying worlds; an impossible one
        // excludes its satisfying worlds
        let alive: Vec<usize> = (0..table.world_count())
            .filter(|&w| {
                constraints.iter().zip(&sat).all(|(c, s)| {
                    !(c.prob.lo() >= 1.0 && !s[w]) && !(c.prob.hi() <= 0.0 && s[w])
                })
            })
            .collect();
        let mut rows = Vec::new();
        for (c, s) in constraints.iter().zip(&sat) {
            if c.prob.lo() >= 1.0 || c.prob.hi() <= 0.0 {
                continue;
            }
            let members: Vec<usize> = (0..alive.len()).filter(|&i| s[alive[i]]).collect();
            rows.push((members, c.prob));
        }
        Ok(Presolved { table, alive, rows })
    }

    pub fn is_satisfiable(&self) -> Result<bool, OracleError> {
        let pre = self.presolve()?;
        match pre.optimise(&[], OptimizationDirection::Minimize) {
            Ok(_) => Ok(true),
            Err(OracleError::Unsatisfiable) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Tightest interval for `objective` consistent with every constraint.
    pub fn tight_bounds(&self, objective: Literal) -> Result<IntervalProb, OracleError> {
        let pre = self.presolve()?;
        pre.bounds(objective)
    }

    /// Tight bounds for several objectives, sharing one presolve.
    pub fn tight_bounds_all(&self, objectives: &[Literal]) -> Result<Vec<IntervalProb>, OracleError> {
        let pre = self.presolve()?;
        objectives.iter().map(|&o| pre.bounds(o)).collect()
    }
}

struct Presolved {
    table: WorldTable,
    alive: Vec<usize>,
    rows: Vec<(Vec<usize>, IntervalProb)>,
}

impl Presolved {
    fn bounds(&self, objective: Literal) -> Result<IntervalProb, OracleError> {
        let members: Vec<usize> = (0..self.alive.len())
            .map(|i| self.table.holds(self.alive[i], objective).map(|h| (i, h)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter_map(|(i, h)| h.then_some(i))
            .collect();
        let lo = self.optimise(&members, OptimizationDirection::Minimize)?;
        let hi = self.optimise(&members, OptimizationDirection::Maximize)?;
        let clamp = |x: f64| x.clamp(0.0, 1.0);
        IntervalProb::new_tolerant(clamp(lo), clamp(hi).max(clamp(lo)))
            .map_err(|e| OracleError::Solver(e.to_string()))
    }

    /// Solves exactly first; only an infeasible exact problem is retried
    /// with every bound relaxed by [`LP_SLACK`].
    fn optimise(&self, objective: &[usize], direction: OptimizationDirection) -> Result<f64, OracleError> {
        match self.optimise_with(objective, direction, 0.0) {
            Err(OracleError::Unsatisfiable) if !self.alive.is_empty() => {
                self.optimise_with(objective, direction, LP_SLACK)
            }
            r => r,
        }
    }

    fn optimise_with(
        &self,
        objective: &[usize],
        direction: OptimizationDirection,
        slack: f64,
    ) -> Result<f64, OracleError> {
        if self.alive.is_empty() {
            return Err(OracleError::Unsatisfiable);
        }
        let mut coeff = vec![0.0; self.alive.len()];
        for &i in objective {
            coeff[i] = 1.0;
        }
        let mut lp = Problem::new(direction);
        let vars: Vec<_> = coeff.iter().map(|&c| lp.add_var(c, (0.0, 1.0))).collect();
        lp.add_constraint(vars.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
        for (members, prob) in &self.rows {
            let expr: Vec<_> = members.iter().map(|&i| (vars[i], 1.0)).collect();
            if prob.lo() > 0.0 {
                lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, prob.lo() - slack);
            }
            if prob.hi() < 1.0 {
                lp.add_constraint(expr.as_slice(), ComparisonOp::Le, prob.hi() + slack);
            }
        }
        match lp.solve() {
            Ok(sol) => Ok(sol.objective()),
            Err(minilp::Error::Infeasible) => Err(OracleError::Unsatisfiable),
            Err(e) => Err(OracleError::Solver(e.to_string())),
        }
    }
}

/// Marginal of every state of a complete point-valued network, by summing
/// the full joint. Root variables need point priors on all states, or on all
/// but one (which takes the remainder); likewise each conditional row.
pub fn exact_bbn_marginals(model: &NetworkModel) -> Result<BTreeMap<StateRef, f64>, OracleError> {
    let vars = &model.variables;
    let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let state_of = |r: &StateRef| -> Result<(usize, usize), OracleError> {
        let v = *index
            .get(r.0.as_str())
            .ok_or_else(|| OracleError::Incomplete(format!("unknown variable {}", r.0)))?;
        let s = vars[v]
            .states
            .iter()
            .position(|x| *x == r.1)
            .ok_or_else(|| OracleError::Incomplete(format!("unknown state {}={}", r.0, r.1)))?;
        Ok((v, s))
    };
    let point = |p: IntervalProb, what: &str| -> Result<f64, OracleError> {
        if p.is_point() {
            Ok(p.lo())
        } else {
            Err(OracleError::Incomplete(format!("{what} is not point-valued")))
        }
    };

    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); vars.len()];
    for c in &model.conditionals {
        let (cv, _) = state_of(&c.child)?;
        for p in &c.parents {
            let (pv, _) = state_of(p)?;
            if !parents[cv].contains(&pv) {
                parents[cv].push(pv);
            }
        }
    }
    for p in &mut parents {
        p.sort_unstable();
    }

    // rows[v] maps the parent states (in `parents[v]` order) to the child
    // distribution
    let mut rows: Vec<HashMap<Vec<usize>, Vec<Option<f64>>>> = vec![HashMap::new(); vars.len()];
    for p in &model.priors {
        let (v, s) = state_of(&p.state)?;
        if !parents[v].is_empty() {
            return Err(OracleError::Incomplete(format!("prior on non-root {}", vars[v].name)));
        }
        let row = rows[v].entry(Vec::new()).or_insert_with(|| vec![None; vars[v].states.len()]);
        row[s] = Some(point(p.prob, &format!("prior of {}={}", p.state.0, p.state.1))?);
    }
    for c in &model.conditionals {
        let (cv, cs) = state_of(&c.child)?;
        let mut key = vec![usize::MAX; parents[cv].len()];
        for p in &c.parents {
            let (pv, ps) = state_of(p)?;
            let slot = parents[cv].iter().position(|&x| x == pv).expect("collected above");
            key[slot] = ps;
        }
        if key.contains(&usize::MAX) {
            return Err(OracleError::Incomplete(format!(
                "conditional for {}={} omits a parent of {}",
                c.child.0, c.child.1, vars[cv].name
            )));
        }
        let row = rows[cv].entry(key).or_insert_with(|| vec![None; vars[cv].states.len()]);
        row[cs] = Some(point(c.prob, &format!("conditional for {}={}", c.child.0, c.child.1))?);
    }

    let mut joint_size = 1usize;
    for v in vars {
        joint_size = joint_size.saturating_mul(v.states.len());
    }
    if joint_size > MAX_JOINT {
        return Err(OracleError::JointTooLarge(joint_size));
    }

    let mut tables: Vec<HashMap<Vec<usize>, Vec<f64>>> = Vec::with_capacity(vars.len());
    for (v, var_rows) in rows.iter().enumerate() {
        let combos: usize = parents[v].iter().map(|&p| vars[p].states.len()).product();
        if var_rows.len() != combos {
            return Err(OracleError::Incomplete(format!(
                "{} has {} of {} rows",
                vars[v].name,
                var_rows.len(),
                combos
            )));
        }
        let mut t = HashMap::new();
        for (key, row) in var_rows {
            t.insert(key.clone(), complete_row(row, &vars[v].name)?);
        }
        tables.push(t);
    }

    let mut marginals: Vec<Vec<f64>> = vars.iter().map(|v| vec![0.0; v.states.len()]).collect();
    let mut assignment = vec![0usize; vars.len()];
    let mut key = Vec::new();
    'joint: loop {
        let mut p = 1.0;
        for v in 0..vars.len() {
            key.clear();
            key.extend(parents[v].iter().map(|&q| assignment[q]));
            p *= tables[v][&key][assignment[v]];
        }
        for v in 0..vars.len() {
            marginals[v][assignment[v]] += p;
        }
        for v in 0..vars.len() {
            assignment[v] += 1;
            if assignment[v] < vars[v].states.len() {
                continue 'joint;
            }
            assignment[v] = 0;
        }
        break;
    }

    let mut out = BTreeMap::new();
    for (v, var) in vars.iter().enumerate() {
        for (s, name) in var.states.iter().enumerate() {
            out.insert((var.name.clone(), name.clone()), marginals[v][s]);
        }
    }
    Ok(out)
}

fn complete_row(row: &[Option<f64>], variable: &str) -> Result<Vec<f64>, OracleError> {
    let missing = row.iter().filter(|x| x.is_none()).count();
    let sum: f64 = row.iter().flatten().sum();
    match missing {
        0 if (sum - 1.0).abs() <= 1e-9 => Ok(row.iter().map(|x| x.unwrap()).collect()),
        1 if sum <= 1.0 + 1e-9 => Ok(row.iter().map(|x| x.unwrap_or((1.0 - sum).max(0.0))).collect()),
        0 | 1 => Err(OracleError::Incomplete(format!("a row of {variable} sums to {sum}"))),
        _ => Err(OracleError::Incomplete(format!("a row of {variable} leaves {missing} states open"))),
    }
}

// ---- soundness batches --------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateReport {
    pub state: String,
    pub engine: [f64; 2],
    pub tight: [f64; 2],
    pub contained: bool,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelStatus {
    /// Engine and oracle both ran; states compared.
    Checked,
    /// The emitted constraints are unsatisfiable and the engine agrees.
    Unsatisfiable,
    /// The engine reported a contradiction on satisfiable constraints.
    SpuriousContradiction,
    /// The oracle found the constraints unsatisfiable but the engine did not
    /// notice. Permitted: the engine is incomplete.
    UndetectedInconsistency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub label: String,
    pub atoms: usize,
    pub clauses: usize,
    pub complete: bool,
    pub status: ModelStatus,
    pub states: Vec<StateReport>,
    pub violations: usize,
    pub max_gap: f64,
    pub mean_gap: f64,
}

impl ModelReport {
    pub fn is_witness(&self) -> bool {
        self.status == ModelStatus::Checked && self.max_gap > GAP_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub seed: u64,
    pub models: Vec<ModelReport>,
    pub checked: usize,
    pub violations: usize,
    /// Labels of models with a strict gap somewhere.
    pub witnesses: Vec<String>,
    pub mean_gap: f64,
    pub max_gap: f64,
}

impl SoundnessReport {
    pub fn from_models(seed: u64, models: Vec<ModelReport>) -> Self {
        let checked: Vec<&ModelReport> = models.iter().filter(|m| m.status == ModelStatus::Checked).collect();
        let states: Vec<f64> = checked.iter().flat_map(|m| m.states.iter().map(|s| s.gap)).collect();
        SoundnessReport {
            seed,
            checked: checked.len(),
            violations: models.iter().map(|m| m.violations).sum(),
            witnesses: models.iter().filter(|m| m.is_witness()).map(|m| m.label.clone()).collect(),
            mean_gap: if states.is_empty() {
                0.0
            } else {
                states.iter().sum::<f64>() / states.len() as f64
            },
            max_gap: states.iter().copied().fold(0.0, f64::max),
            models,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "seed {}: {} models, {} checked, {} violations, {} with a strict gap, mean gap {:.6}, max gap {:.6}",
            self.seed,
            self.models.len(),
            self.checked,
            self.violations,
            self.witnesses.len(),
            self.mean_gap,
            self.max_gap
        );
        for m in &self.models {
            let status = serde_json::to_value(m.status).expect("plain enum");
            let _ = writeln!(
                out,
                "{}: {} atoms, {} clauses, {}{}, violations {}, max gap {:.6}",
                m.label,
                m.atoms,
                m.clauses,
                status.as_str().unwrap_or("?"),
                if m.complete { ", complete" } else { "" },
                m.violations,
                m.max_gap
            );
            for s in m.states.iter().filter(|s| !s.contained) {
                let _ = writeln!(
                    out,
                    "  NOT CONTAINED {} engine [{:.6} {:.6}] tight [{:.6} {:.6}]",
                    s.state, s.engine[0], s.engine[1], s.tight[0], s.tight[1]
                );
            }
        }
        out
    }
}

/// Builds `model` in the engine and compares every state against the tight
/// bounds of the engine's emitted clause set.
pub fn check_model(label: &str, model: &NetworkModel) -> Result<ModelReport, OracleError> {
    let complete = exact_bbn_marginals(model).is_ok();
    let built = model.build();
    let (engine, contradiction): (Engine, Option<ContradictionReport>) = match built {
        Ok(n) => {
            let c = n.check_consistency().err();
            (n.into_engine(), c)
        }
        Err(e) => match e.contradiction().cloned() {
            // rebuild up to the failure so the emitted clause set is available
            Some(r) => (partial_engine(model), Some(r)),
            None => return Err(OracleError::Incomplete(e.to_string())),
        },
    };
    let problem = EntailmentProblem::from_engine(&engine);
    let mut report = ModelReport {
        label: label.to_string(),
        atoms: engine.atom_count(),
        clauses: engine.clause_count(),
        complete,
        status: ModelStatus::Checked,
        states: Vec::new(),
        violations: 0,
        max_gap: 0.0,
        mean_gap: 0.0,
    };
    let satisfiable = problem.is_satisfiable()?;
    match (satisfiable, contradiction.is_some()) {
        (false, true) => {
            report.status = ModelStatus::Unsatisfiable;
            return Ok(report);
        }
        (false, false) => {
            report.status = ModelStatus::UndetectedInconsistency;
            return Ok(report);
        }
        (true, true) => {
            report.status = ModelStatus::SpuriousContradiction;
            report.violations = 1;
            return Ok(report);
        }
        (true, false) => {}
    }
    let atoms: Vec<AtomId> = engine.atoms().map(|a| a.id).collect();
    let objectives: Vec<Literal> = atoms.iter().map(|&a| Literal::pos(a)).collect();
    let tight = problem.tight_bounds_all(&objectives)?;
    let mut total = 0.0;
    for (&a, t) in atoms.iter().zip(tight) {
        let e = engine.interval(a);
        let contained = e.contains(&t, CONTAINMENT_TOL);
        let gap = (e.width() - t.width()).max(0.0);
        if !contained {
            report.violations += 1;
        }
        total += gap;
        report.max_gap = report.max_gap.max(gap);
        report.states.push(StateReport {
            state: engine.atom_name(a).to_string(),
            engine: [e.lo(), e.hi()],
            tight: [t.lo(), t.hi()],
            contained,
            gap,
        });
    }
    report.mean_gap = if atoms.is_empty() { 0.0 } else { total / atoms.len() as f64 };
    Ok(report)
}

/// The engine state reached by building `model` until the first error.
fn partial_engine(model: &NetworkModel) -> Engine {
    let mut n = crate::network::Network::new();
    for v in &model.variables {
        let states: Vec<&str> = v.states.iter().map(String::as_str).collect();
        if n.define_variable(&v.name, &states).is_err() {
            return n.into_engine();
        }
    }
    for c in &model.conditionals {
        let Ok(child) = n.state(&c.child.0, &c.child.1) else { break };
        let parents: Result<Vec<_>, _> = c.parents.iter().map(|(v, s)| n.state(v, s)).collect();
        let Ok(parents) = parents else { break };
        if n.add_conditional(child, &parents, c.prob).is_err() {
            return n.into_engine();
        }
    }
    for p in &model.priors {
        let Ok(s) = n.state(&p.state.0, &p.state.1) else { break };
        if n.set_prior(s, p.prob).is_err() {
            break;
        }
    }
    n.into_engine()
}

/// Generates `count` random networks from `seed` and checks each one.
pub fn soundness_check(seed: u64, count: usize) -> SoundnessReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut models = Vec::with_capacity(count);
    for i in 0..count {
        let model = random_model(&mut rng);
        let label = format!("model {i}");
        match check_model(&label, &model) {
            Ok(r) => models.push(r),
            Err(e) => panic!("generated model {i} could not be checked: {e}"),
        }
    }
    SoundnessReport::from_models(seed, models)
}

/// A random network of at most five variables with two or three states
/// each (at most [`MAX_ATOMS`] states in total), whose priors and
/// conditionals are intervals around a hidden true distribution.
///
/// Parents of one child never share an ancestor, so their joint states are
/// independent under the true distribution and the product bounds of the
/// chain rule hold for it: the emitted clause set is always satisfiable.
pub fn random_model(rng: &mut impl Rng) -> NetworkModel {
    let n_vars = rng.gen_range(1..=5);
    let mut variables = Vec::new();
    let mut atoms = 0;
    for v in 0..n_vars {
        let k = if atoms + 3 <= MAX_ATOMS - 2 * (n_vars - v - 1) && rng.gen_bool(0.35) { 3 } else { 2 };
        atoms += k;
        variables.push(VariableDecl {
            name: format!("v{v}"),
            states: (0..k).map(|s| format!("s{s}")).collect(),
        });
    }

    // ancestors[v] includes v itself
    let mut ancestors: Vec<Vec<usize>> = Vec::new();
    let mut parents: Vec<Vec<usize>> = Vec::new();
    for v in 0..n_vars {
        let mut candidates: Vec<usize> = (0..v).collect();
        candidates.shuffle(rng);
        let mut chosen: Vec<usize> = Vec::new();
        let mut covered: Vec<usize> = Vec::new();
        let want = if v == 0 { 0 } else { rng.gen_range(0..=2) };
        for c in candidates {
            if chosen.len() == want {
                break;
            }
            if ancestors[c].iter().all(|a| !covered.contains(a)) {
                covered.extend(&ancestors[c]);
                chosen.push(c);
            }
        }
        chosen.sort_unstable();
        let mut anc = covered;
        anc.push(v);
        ancestors.push(anc);
        parents.push(chosen);
    }

    let full = rng.gen_bool(0.15);
    let point = full || rng.gen_bool(0.2);
    let widen = |rng: &mut dyn rand::RngCore, t: f64| -> IntervalProb {
        if point {
            return IntervalProb::point(t).expect("probability");
        }
        let w: f64 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.25) };
        let lo = (t - w * rng.gen_range(0.0..1.0)).max(0.0);
        let hi = (t + w * rng.gen_range(0.0..1.0)).min(1.0);
        IntervalProb::new(lo, hi).expect("ordered")
    };

    let mut priors = Vec::new();
    let mut conditionals = Vec::new();
    for v in 0..n_vars {
        let k = variables[v].states.len();
        let combos: Vec<Vec<usize>> = parent_combinations(&parents[v], &variables);
        for combo in combos {
            let dist = random_distribution(rng, k);
            // leave the last state implicit; in partial models drop more
            for (s, &t) in dist.iter().enumerate().take(k - 1) {
                if !full && rng.gen_bool(0.25) {
                    continue;
                }
                let prob = widen(rng, t);
                let state = (variables[v].name.clone(), variables[v].states[s].clone());
                if parents[v].is_empty() {
                    priors.push(PriorDecl { state, prob });
                } else {
                    conditionals.push(ConditionalDecl {
                        child: state,
                        parents: parents[v]
                            .iter()
                            .zip(&combo)
                            .map(|(&p, &ps)| (variables[p].name.clone(), variables[p].states[ps].clone()))
                            .collect(),
                        prob,
                    });
                }
            }
        }
    }
    NetworkModel {
        variables,
        priors,
        conditionals,
    }
}

fn parent_combinations(parents: &[usize], variables: &[VariableDecl]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &p in parents {
        let k = variables[p].states.len();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..k).map(move |s| {
                    let mut v = prefix.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

/// Random distribution over `k` outcomes, rounded to three decimals so point
/// models stay readable.
fn random_distribution(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| (x / total * 1000.0).round() / 1000.0).collect();
    let head: f64 = p[..k - 1].iter().sum();
    p[k - 1] = 1.0 - head;
    p
}
