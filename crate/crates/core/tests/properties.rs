use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ibn_core::engine::{Bound, ClauseOrigin};
use ibn_core::model::{parse_script, print_document, Document, ExportFormat, Located, Statement};
use ibn_core::network::{ConditionalDecl, PriorDecl};
use ibn_core::oracle::{exact_bbn_marginals, random_model, EntailmentProblem};
use ibn_core::{Engine, IntervalProb, Literal};

/// Probability of the clause `literals` under a distribution over worlds.
fn clause_truth(dist: &[f64], literals: &[Literal]) -> f64 {
    dist.iter()
        .enumerate()
        .filter(|(w, _)| {
            literals
                .iter()
                .any(|l| ((w >> l.atom.0) & 1 == 1) == l.positive)
        })
        .map(|(_, p)| p)
        .sum()
}

fn around(rng: &mut ChaCha8Rng, t: f64) -> IntervalProb {
    let t = t.clamp(0.0, 1.0);
    if rng.gen_bool(0.3) {
        return IntervalProb::point(t).unwrap();
    }
    let lo = (t - rng.gen_range(0.0..0.2)).max(0.0);
    let hi = (t + rng.gen_range(0.0..0.2)).min(1.0);
    IntervalProb::new(lo, hi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Clause sets drawn around a true distribution: the engine never
    /// contradicts and its intervals contain the exact LP bounds.
    #[test]
    fn engine_contains_tight_bounds(seed in any::<u64>(), n in 2usize..=8, m in 1usize..=20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..1usize << n).map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect();
        let total: f64 = weights.iter().sum::<f64>().max(1e-12);
        let dist: Vec<f64> = weights.iter().map(|w| w / total).collect();

        let mut engine = Engine::new();
        let atoms: Vec<_> = (0..n).map(|i| engine.add_atom(&format!("a{i}")).unwrap()).collect();
        let mut problem = EntailmentProblem::new(atoms.clone());
        for _ in 0..m {
            let k = rng.gen_range(1..=3.min(n));
            let mut lits: Vec<Literal> = Vec::new();
            while lits.len() < k {
                let a = atoms[rng.gen_range(0..n)];
                if lits.iter().all(|l| l.atom != a) {
                    lits.push(if rng.gen_bool(0.5) { Literal::pos(a) } else { Literal::neg(a) });
                }
            }
            let p = around(&mut rng, clause_truth(&dist, &lits));
            engine.add_clause(&lits, p, ClauseOrigin::UserAssertion).unwrap();
            problem = problem.clause(&lits, p);
        }
        for &a in &atoms {
            if rng.gen_bool(0.3) {
                let p = around(&mut rng, clause_truth(&dist, &[Literal::pos(a)]));
                engine.assume(Literal::pos(a), p).unwrap();
                problem = problem.assume(Literal::pos(a), p);
            }
        }
        for &a in &atoms {
            let tight = problem.tight_bounds(Literal::pos(a)).unwrap();
            let got = engine.interval(a);
            prop_assert!(got.contains(&tight, 1e-7), "{}: engine {} tight {}", engine.atom_name(a), got, tight);
        }
    }

    /// In every built network the states of a variable can still sum to one.
    #[test]
    fn variable_sums_bracket_one(seed in any::<u64>()) {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let net = model.build().unwrap();
        for v in net.variables() {
            let (mut lo, mut hi) = (0.0, 0.0);
            for i in 0..v.states.len() {
                let p = net.query_state(ibn_core::StateId { variable: v.id, index: i });
                lo += p.lo();
                hi += p.hi();
            }
            prop_assert!(lo <= 1.0 + 1e-9 && hi >= 1.0 - 1e-9, "{}: sums [{} {}]", v.name, lo, hi);
        }
    }

    /// Complete models: exact marginals lie inside the engine intervals, and
    /// all-point models converge to them.
    #[test]
    fn exact_marginals_contained(seed in any::<u64>()) {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let Ok(exact) = exact_bbn_marginals(&model) else { return Ok(()) };
        let net = model.build().unwrap();
        let point = model.priors.iter().all(|p| p.prob.is_point())
            && model.conditionals.iter().all(|c| c.prob.is_point());
        for ((v, s), p) in exact {
            let got = net.query_state(net.state(&v, &s).unwrap());
            prop_assert!(got.contains_value(p, 1e-7), "{}:{} {} excludes {}", v, s, got, p);
            if point {
                prop_assert!(got.width() < 1e-6, "{}:{} {} did not converge", v, s, got);
            }
        }
    }

    /// Dropping conditionals never narrows an interval.
    #[test]
    fn fewer_conditionals_are_weaker(seed in any::<u64>(), keep in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let full = random_model(&mut rng);
        let mut part = full.clone();
        part.conditionals.retain(|_| rng.gen_bool(keep));
        let (f, p) = (full.build().unwrap(), part.build().unwrap());
        for ((s, wide), (_, narrow)) in p.marginals().into_iter().zip(f.marginals()) {
            prop_assert!(wide.contains(&narrow, 1e-9), "{}: {} vs {}", p.state_name(s), wide, narrow);
        }
    }

    /// The fixpoint does not depend on the order constraints are applied in.
    #[test]
    fn shuffled_order_is_confluent(seed in any::<u64>(), order in any::<u64>()) {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = model.build().unwrap();
        let b = model.build_on(Engine::new().with_shuffled_order(order)).unwrap();
        for ((s, x), (_, y)) in a.marginals().into_iter().zip(b.marginals()) {
            prop_assert!((x.lo() - y.lo()).abs() < 1e-9 && (x.hi() - y.hi()).abs() < 1e-9,
                "{}: {} vs {}", a.state_name(s), x, y);
        }
    }

    /// Every conditional expansion contributes exactly two generated clauses.
    #[test]
    fn two_clauses_per_expansion(seed in any::<u64>()) {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let net = model.build().unwrap();
        for c in net.conditionals() {
            let n = net
                .engine()
                .clauses()
                .filter(|r| matches!(r.origin, ClauseOrigin::Generated { dependency, .. } if dependency == c.id.0))
                .count();
            prop_assert!(n == 0 || n == 2, "conditional {} has {} clauses", c.id.0, n);
        }
    }

    /// Explanations of every bound are finite and well founded.
    #[test]
    fn explanations_are_well_founded(seed in any::<u64>()) {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let net = model.build().unwrap();
        let e = net.engine();
        for a in e.atoms() {
            for b in [Bound::Lower, Bound::Upper] {
                prop_assert!(e.explain(a.id, b).is_well_founded());
            }
        }
    }

    #[test]
    fn print_parse_round_trip(doc in document()) {
        let text = print_document(&doc);
        let back = parse_script(&text).unwrap();
        let a: Vec<&Statement> = doc.statements().collect();
        let b: Vec<&Statement> = back.statements().collect();
        prop_assert_eq!(a, b);
    }
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}"
}

fn state_ref() -> impl Strategy<Value = (String, String)> {
    (ident(), ident())
}

fn interval() -> impl Strategy<Value = IntervalProb> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(a, b)| IntervalProb::new(a.min(b), a.max(b)).unwrap())
}

fn statement() -> impl Strategy<Value = Statement> {
    prop_oneof![
        (ident(), prop::collection::vec(ident(), 2..4))
            .prop_map(|(name, states)| Statement::Variable { name, states }),
        (state_ref(), prop::collection::vec(state_ref(), 1..3), interval())
            .prop_map(|(child, parents, prob)| Statement::Conditional(ConditionalDecl { child, parents, prob })),
        (state_ref(), interval()).prop_map(|(state, prob)| Statement::Prior(PriorDecl { state, prob })),
        (prop::collection::vec((any::<bool>(), state_ref()), 1..4), interval())
            .prop_map(|(literals, prob)| Statement::Assert { literals, prob }),
        "[a-z0-9]{1,5}".prop_map(Statement::Step),
        "[a-z][a-z0-9_/.]{0,10}".prop_map(Statement::Load),
        state_ref().prop_map(Statement::Retract),
        (state_ref(), any::<bool>()).prop_map(|(state, lower)| Statement::Explain {
            state,
            bound: if lower { Bound::Lower } else { Bound::Upper },
        }),
        prop::option::of(ident()).prop_map(Statement::Show),
        Just(Statement::Check),
        (any::<bool>(), "[a-z][a-z0-9_/.]{0,10}").prop_map(|(dot, path)| Statement::Export {
            format: if dot { ExportFormat::Dot } else { ExportFormat::Json },
            path,
        }),
        (state_ref(), interval(), 1e-9f64..0.1).prop_map(|(state, prob, tol)| Statement::Expect { state, prob, tol }),
    ]
}

fn document() -> impl Strategy<Value = Document> {
    prop::collection::vec(statement(), 0..12).prop_map(|ss| Document {
        lines: ss
            .into_iter()
            .enumerate()
            .map(|(i, statement)| Located { line: i + 1, statement })
            .collect(),
    })
}
