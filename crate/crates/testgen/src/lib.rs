//! Random programs, goals and terms for property and acceptance tests.
//!
//! Generated programs are small enough that every selection of ⊕
//! alternatives can be enumerated and solved bottom-up.

use std::collections::{BTreeMap, BTreeSet};

use mup_core::engine::SearchConfig;
use mup_core::term::{Atom, DFormula, Goal, HornClause, Program, Term, Var, VarGen};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const PREDICATES: [&str; 5] = ["p", "q", "r", "s", "t"];
const CONSTANTS: [&str; 4] = ["a", "b", "c", "d"];
/// Extra constants exercising quoting in the printer.
const ODD_CONSTANTS: [&str; 4] = ["40k", "'40K'", "'hello world'", "'it''s'"];
const VAR_NAMES: [&str; 3] = ["X", "Y", "Z"];

/// Size bounds for generated programs.
#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Plain (`!`) clauses.
    pub max_clauses: usize,
    pub max_groups: usize,
    /// Each ⊕ group has between 2 and this many alternatives.
    pub max_group_arity: usize,
    pub max_pred_arity: usize,
    pub max_constants: usize,
    pub max_body: usize,
    pub max_goal_atoms: usize,
    /// Chance that a body atom may call a predicate at the same or a
    /// higher level, allowing recursion.
    pub recursion: f64,
    /// Allow compound terms and quoted constants (not function-free).
    pub rich_terms: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_clauses: 6,
            max_groups: 3,
            max_group_arity: 3,
            max_pred_arity: 2,
            max_constants: 4,
            max_body: 2,
            max_goal_atoms: 2,
            recursion: 0.01,
            rich_terms: false,
        }
    }
}

impl GenConfig {
    /// Compound terms and quoted names, for syntax tests.
    pub fn rich() -> Self {
        GenConfig {
            rich_terms: true,
            ..GenConfig::default()
        }
    }
}

/// A generated program with a closed goal over it.
#[derive(Clone, Debug)]
pub struct Case {
    pub program: Program,
    pub goal: Goal,
    pub goal_vars: Vec<Var>,
}

#[derive(Clone, Debug)]
enum RawArg {
    Var(usize),
    Const(usize),
    Compound(usize, Vec<RawArg>),
}

#[derive(Clone, Debug)]
struct RawAtom {
    pred: usize,
    any_level: bool,
    args: Vec<RawArg>,
}

#[derive(Clone, Debug)]
struct RawClause {
    head: RawAtom,
    body: Vec<RawAtom>,
}

#[derive(Clone, Debug)]
struct Shape {
    arities: Vec<usize>,
    constants: usize,
}

fn raw_arg(cfg: &GenConfig) -> BoxedStrategy<RawArg> {
    let leaf = prop_oneof![
        (0..VAR_NAMES.len()).prop_map(RawArg::Var),
        (0..16usize).prop_map(RawArg::Const),
    ];
    if !cfg.rich_terms {
        return leaf.boxed();
    }
    leaf.prop_recursive(2, 6, 2, |inner| {
        (0..3usize, prop::collection::vec(inner, 1..=2))
            .prop_map(|(f, args)| RawArg::Compound(f, args))
    })
    .boxed()
}

fn raw_atom(cfg: &GenConfig) -> impl Strategy<Value = RawAtom> {
    (
        0..PREDICATES.len(),
        prop::bool::weighted(cfg.recursion),
        prop::collection::vec(raw_arg(cfg), cfg.max_pred_arity),
    )
        .prop_map(|(pred, any_level, args)| RawAtom {
            pred,
            any_level,
            args,
        })
}

fn raw_clause(cfg: &GenConfig) -> impl Strategy<Value = RawClause> {
    (
        raw_atom(cfg),
        prop::collection::vec(raw_atom(cfg), 0..=cfg.max_body),
    )
        .prop_map(|(head, body)| RawClause { head, body })
}

fn shape(cfg: &GenConfig) -> impl Strategy<Value = Shape> {
    (
        prop::collection::vec(0..=cfg.max_pred_arity, 1..=PREDICATES.len()),
        1..=cfg.max_constants,
    )
        .prop_map(|(arities, constants)| Shape { arities, constants })
}

struct Builder<'a> {
    shape: &'a Shape,
    rich: bool,
    vars: VarGen,
    scope: Vec<Option<Var>>,
}

impl Builder<'_> {
    fn term(&mut self, arg: &RawArg) -> Term {
        match arg {
            RawArg::Var(i) => {
                let var = self.scope[*i]
                    .get_or_insert_with(|| self.vars.fresh(VAR_NAMES[*i]))
                    .clone();
                Term::Var(var)
            }
            RawArg::Const(i) if self.rich && i % 3 == 2 => {
                let name = ODD_CONSTANTS[i % ODD_CONSTANTS.len()];
                Term::constant(unquote(name))
            }
            RawArg::Const(i) => Term::constant(CONSTANTS[i % self.shape.constants]),
            RawArg::Compound(f, args) => Term::compound(
                ["f", "g", "h"][*f],
                args.iter().map(|a| self.term(a)).collect(),
            ),
        }
    }

    fn atom(&mut self, pred: usize, raw: &RawAtom) -> Atom {
        let pred = pred % self.shape.arities.len();
        let arity = self.shape.arities[pred];
        let args = raw.args[..arity].iter().map(|a| self.term(a)).collect();
        Atom::new(PREDICATES[pred], args)
    }

    fn clause(&mut self, raw: &RawClause) -> HornClause {
        self.scope = vec![None; VAR_NAMES.len()];
        let levels = self.shape.arities.len();
        let head_pred = raw.head.pred % levels;
        let head = self.atom(head_pred, &raw.head);
        let body: Vec<Atom> = raw
            .body
            .iter()
            .filter_map(|b| {
                // calls go to lower levels unless recursion was drawn
                let pred = if b.any_level {
                    b.pred % levels
                } else if head_pred == 0 {
                    return None;
                } else {
                    b.pred % head_pred
                };
                Some(self.atom(pred, b))
            })
            .collect();
        HornClause::new(head, Goal::conjunction(body))
    }
}

/// Strip the quotes from a quoted name as the lexer would.
fn unquote(name: &str) -> String {
    match name.strip_prefix('\'').and_then(|n| n.strip_suffix('\'')) {
        Some(inner) => inner.replace("''", "'"),
        None => name.to_string(),
    }
}

/// Programs with a goal, within the bounds of `cfg`.
pub fn cases(cfg: GenConfig) -> impl Strategy<Value = Case> {
    let clause = raw_clause(&cfg);
    let group = prop::collection::vec(raw_clause(&cfg), 2..=cfg.max_group_arity.max(2));
    (
        shape(&cfg),
        prop::collection::vec(clause, 0..=cfg.max_clauses),
        prop::collection::vec((group, any::<prop::sample::Index>()), 0..=cfg.max_groups),
        prop::collection::vec(raw_atom(&cfg), 1..=cfg.max_goal_atoms),
    )
        .prop_map(move |(shape, plain, groups, goal)| {
            build(&shape, cfg.rich_terms, plain, groups, goal)
        })
}

fn build(
    shape: &Shape,
    rich: bool,
    plain: Vec<RawClause>,
    groups: Vec<(Vec<RawClause>, prop::sample::Index)>,
    goal: Vec<RawAtom>,
) -> Case {
    let mut b = Builder {
        shape,
        rich,
        vars: VarGen::new(),
        scope: Vec::new(),
    };
    let mut items: Vec<Vec<RawClause>> = plain.into_iter().map(|c| vec![c]).collect();
    for (leaves, at) in groups {
        let pos = at.index(items.len() + 1);
        items.insert(pos, leaves);
    }
    let mut program = Program::default();
    for item in &items {
        let leaves: Vec<HornClause> = item.iter().map(|c| b.clause(c)).collect();
        let formula = match DFormula::choice(leaves) {
            Some(f) => f,
            None => continue,
        };
        program.push(formula, None, None);
    }
    b.scope = vec![None; VAR_NAMES.len()];
    let atoms: Vec<Atom> = goal.iter().map(|a| b.atom(a.pred, a)).collect();
    let body = Goal::conjunction(atoms).expect("at least one goal atom");
    let goal_vars = body.free_vars();
    let goal = Goal::close_over(&goal_vars, body);
    Case {
        program,
        goal,
        goal_vars,
    }
}

/// Search bounds for checking generated programs. Recursive programs can
/// make depth-first search exponential, so the step budget is kept small.
pub fn corpus_search() -> SearchConfig {
    SearchConfig {
        step_limit: Some(10_000),
        ..SearchConfig::default()
    }
}

/// True when some predicate can reach itself through clause bodies.
pub fn is_recursive(program: &Program) -> bool {
    let mut calls: BTreeMap<(&str, usize), BTreeSet<(&str, usize)>> = BTreeMap::new();
    for d in program.clauses() {
        for leaf in d.leaves() {
            let edges = calls.entry(leaf.head().indicator()).or_default();
            for atom in leaf.body().into_iter().flat_map(|b| b.atoms()) {
                edges.insert(atom.indicator());
            }
        }
    }
    calls.keys().any(|&start| {
        let mut seen = BTreeSet::new();
        let mut todo: Vec<_> = calls[&start].iter().copied().collect();
        while let Some(p) = todo.pop() {
            if p == start {
                return true;
            }
            if seen.insert(p) {
                todo.extend(calls.get(&p).into_iter().flatten().copied());
            }
        }
        false
    })
}

/// Clauses with every variable renumbered by first occurrence within its
/// leaf, so two programs compare equal exactly when they differ only in
/// variable ids.
pub fn canonical(program: &Program) -> Vec<DFormula> {
    program
        .clauses()
        .iter()
        .map(|d| {
            let leaves = d.leaves().into_iter().map(canonical_clause).collect();
            DFormula::choice(leaves).expect("at least one leaf")
        })
        .collect()
}

fn canonical_clause(clause: &HornClause) -> HornClause {
    let ids: BTreeMap<usize, usize> = clause
        .vars()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id(), i))
        .collect();
    HornClause::new(
        renumber_atom(clause.head(), &ids),
        clause.body().map(|b| renumber_goal(b, &ids)),
    )
}

fn renumber_goal(g: &Goal, ids: &BTreeMap<usize, usize>) -> Goal {
    match g {
        Goal::Atom(a) => Goal::Atom(renumber_atom(a, ids)),
        Goal::Tensor(l, r) => Goal::tensor(renumber_goal(l, ids), renumber_goal(r, ids)),
        Goal::Exists(v, body) => Goal::exists(v.clone(), renumber_goal(body, ids)),
    }
}

fn renumber_atom(a: &Atom, ids: &BTreeMap<usize, usize>) -> Atom {
    Atom::new(
        a.predicate.clone(),
        a.args.iter().map(|t| renumber(t, ids)).collect(),
    )
}

fn renumber(t: &Term, ids: &BTreeMap<usize, usize>) -> Term {
    match t {
        Term::Var(v) => Term::Var(Var::new(v.name(), ids[&v.id()])),
        Term::Compound { functor, args } => Term::Compound {
            functor: functor.clone(),
            args: args.iter().map(|a| renumber(a, ids)).collect(),
        },
    }
}

/// Terms over a shared pool of four variables with ids 0 to 3.
pub fn terms(max_depth: u32) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        2 => (0..4usize).prop_map(|i| Term::Var(Var::new(["W", "X", "Y", "Z"][i], i))),
        1 => prop::sample::select(vec!["a", "b"]).prop_map(Term::constant),
    ];
    leaf.prop_recursive(max_depth, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2).prop_map(|a| Term::compound("f", a)),
            inner.clone().prop_map(|t| Term::compound("g", vec![t])),
            prop::collection::vec(inner, 3).prop_map(|a| Term::compound("h", a)),
        ]
    })
}

/// Deterministically draw `n` cases, for fixed-size corpora.
pub fn corpus(cfg: GenConfig, n: usize, seed: u64) -> Vec<Case> {
    sample(cases(cfg), n, seed)
}

/// Deterministically draw `n` values from a strategy.
pub fn sample<S: Strategy>(strategy: S, n: usize, seed: u64) -> Vec<S::Value> {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &bytes);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    (0..n)
        .map(|_| {
            strategy
                .new_tree(&mut runner)
                .expect("strategy never rejects")
                .current()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_respects_bounds() {
        for case in corpus(GenConfig::default(), 300, 7) {
            let groups: Vec<usize> = case.program.choice_arities();
            assert!(groups.len() <= 3);
            assert!(groups.iter().all(|&a| (2..=3).contains(&a)));
            let plain = case.program.len() - groups.len();
            assert!(plain <= 6);
            for d in case.program.clauses() {
                for leaf in d.leaves() {
                    assert!(leaf.head().arity() <= 2);
                    let body = leaf.body().map_or(0, |b| b.atoms().len());
                    assert!(body <= 2);
                    for atom in core::iter::once(leaf.head())
                        .chain(leaf.body().into_iter().flat_map(|b| b.atoms()))
                    {
                        assert!(atom
                            .args
                            .iter()
                            .all(|t| t.as_var().is_some() || t.is_constant()));
                    }
                }
            }
            assert!(case.goal.is_closed());
        }
    }

    #[test]
    fn recursion_detection() {
        let parse = |s: &str| {
            mup_core::parse_program(&mup_core::syntax::SourceProgram::new(s, "t")).unwrap()
        };
        assert!(is_recursive(&parse("p :- q. q :- p.")));
        assert!(is_recursive(&parse("a (+) p(X) :- p(a).")));
        assert!(!is_recursive(&parse("p :- q, r. q :- r. r.")));
    }

    #[test]
    fn corpus_is_deterministic() {
        let a = corpus(GenConfig::default(), 20, 1);
        let b = corpus(GenConfig::default(), 20, 1);
        let show = |c: &[Case]| format!("{:?}", c.iter().map(|x| &x.program).collect::<Vec<_>>());
        assert_eq!(show(&a), show(&b));
    }
}
