//! Brute-force reference semantics for function-free programs.
//!
//! A program with choice clauses stands for a set of plain Horn programs,
//! one per *selection* of an alternative in each choice clause. The oracle
//! enumerates these worlds and decides each one by naive bottom-up
//! evaluation. It shares no code with the top-down engine: no unification,
//! no clause renaming, no goal stack.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::engine::{
    make_script_provider, ChoiceScript, Engine, EngineError, OutcomeKind, SearchConfig,
};
use crate::term::{Atom, DFormula, Goal, HornClause, Program, Term, Var};

pub const DEFAULT_WORLD_CAP: usize = 4096;

/// One alternative index per choice clause, in program order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Selection {
    pub picks: Vec<usize>,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, p) in self.picks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("]")
    }
}

/// A choice-free program: every choice clause replaced by its picked
/// alternative.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HornWorld {
    pub clauses: Vec<HornClause>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleError {
    WorldLimitExceeded { worlds: usize, cap: usize },
    NotFunctionFree,
    Engine(EngineError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::WorldLimitExceeded { worlds, cap } => {
                write!(f, "{worlds} selection worlds exceed the cap of {cap}")
            }
            OracleError::NotFunctionFree => f.write_str("program or goal uses function symbols"),
            OracleError::Engine(e) => write!(f, "engine error: {e}"),
        }
    }
}

impl core::error::Error for OracleError {}

pub fn enumerate_selections(program: &Program) -> Result<Vec<(Selection, HornWorld)>, OracleError> {
    enumerate_selections_capped(program, DEFAULT_WORLD_CAP)
}

/// Cartesian product over choice clauses, in lexicographic order of picks.
pub fn enumerate_selections_capped(
    program: &Program,
    cap: usize,
) -> Result<Vec<(Selection, HornWorld)>, OracleError> {
    let arities = program.choice_arities();
    let count = arities
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    if count > cap {
        return Err(OracleError::WorldLimitExceeded { worlds: count, cap });
    }
    let mut out = Vec::with_capacity(count);
    for picks in all_scripts(&arities) {
        let mut clauses = Vec::new();
        let mut group = 0;
        for d in program.clauses() {
            match d {
                DFormula::Bang(c) => clauses.push(c.clone()),
                DFormula::Plus(..) => {
                    clauses.push(d.leaves()[picks[group]].clone());
                    group += 1;
                }
            }
        }
        out.push((Selection { picks }, HornWorld { clauses }));
    }
    Ok(out)
}

/// Every index vector `v` with `v[i] < arities[i]`, lexicographically.
pub fn all_scripts(arities: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in arities {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

/// Result of bottom-up evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    /// Variables the witnesses are reported for: the goal's leading
    /// existentials followed by any free variables.
    pub vars: Vec<Var>,
    /// Satisfying ground values for `vars`.
    pub witnesses: BTreeSet<Vec<Term>>,
    /// Rounds of rule application that derived something new.
    pub iterations: usize,
    /// Size of the least model.
    pub facts: usize,
}

type Binding = BTreeMap<Var, Term>;

fn check_term(t: &Term) -> Result<(), OracleError> {
    match t {
        Term::Var(_) => Ok(()),
        Term::Compound { args, .. } if args.is_empty() => Ok(()),
        Term::Compound { .. } => Err(OracleError::NotFunctionFree),
    }
}

fn check_atom(a: &Atom) -> Result<(), OracleError> {
    a.args.iter().try_for_each(check_term)
}

fn constants_of(a: &Atom, out: &mut BTreeSet<Term>) {
    for t in &a.args {
        if t.is_constant() {
            out.insert(t.clone());
        }
    }
}

/// Extend `b` so that `pattern` instantiates to `fact`.
fn match_atom(pattern: &Atom, fact: &Atom, b: &Binding) -> Option<Binding> {
    if pattern.predicate != fact.predicate || pattern.args.len() != fact.args.len() {
        return None;
    }
    let mut b = b.clone();
    for (p, f) in pattern.args.iter().zip(&fact.args) {
        match p {
            Term::Var(v) => match b.get(v) {
                Some(bound) if bound != f => return None,
                Some(_) => {}
                None => {
                    b.insert(v.clone(), f.clone());
                }
            },
            constant => {
                if constant != f {
                    return None;
                }
            }
        }
    }
    Some(b)
}

/// All bindings under which every atom of `body` is a known fact, with the
/// variables in `extra` left unbound by the body ranging over `universe`.
fn join(body: &[&Atom], extra: &[Var], facts: &BTreeSet<Atom>, universe: &[Term]) -> Vec<Binding> {
    let mut partial = vec![Binding::new()];
    for atom in body {
        let mut next = Vec::new();
        for b in &partial {
            for fact in facts.range(lower_bound(atom)..) {
                if fact.predicate != atom.predicate {
                    break;
                }
                if let Some(nb) = match_atom(atom, fact, b) {
                    next.push(nb);
                }
            }
        }
        partial = next;
        if partial.is_empty() {
            return partial;
        }
    }
    for v in extra {
        partial = partial
            .into_iter()
            .flat_map(|b| {
                if b.contains_key(v) {
                    vec![b]
                } else {
                    universe
                        .iter()
                        .map(|c| {
                            let mut nb = b.clone();
                            nb.insert(v.clone(), c.clone());
                            nb
                        })
                        .collect()
                }
            })
            .collect();
    }
    partial
}

/// Smallest atom with the same predicate, for range scans.
fn lower_bound(atom: &Atom) -> Atom {
    Atom {
        predicate: Arc::clone(&atom.predicate),
        args: Vec::new(),
    }
}

fn ground(atom: &Atom, b: &Binding) -> Atom {
    Atom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => b[v].clone(),
                c => c.clone(),
            })
            .collect(),
    }
}

fn body_atoms(clause: &HornClause) -> Vec<&Atom> {
    clause.body().map(Goal::atoms).unwrap_or_default()
}

/// Least model of a function-free Horn world by naive iteration, then the
/// goal checked against it. All variables of `goal` are read
/// existentially.
pub fn bottom_up_solve(world: &HornWorld, goal: &Goal) -> Result<Verdict, OracleError> {
    for c in &world.clauses {
        check_atom(c.head())?;
        body_atoms(c).into_iter().try_for_each(check_atom)?;
    }
    let goal_atoms = goal.atoms();
    goal_atoms.iter().try_for_each(|a| check_atom(a))?;

    let mut universe = BTreeSet::new();
    for c in &world.clauses {
        constants_of(c.head(), &mut universe);
        for a in body_atoms(c) {
            constants_of(a, &mut universe);
        }
    }
    for a in &goal_atoms {
        constants_of(a, &mut universe);
    }
    if universe.is_empty() {
        // the domain is never empty
        universe.insert(Term::constant("$u"));
    }
    let universe: Vec<Term> = universe.into_iter().collect();

    let mut facts = BTreeSet::new();
    for c in world.clauses.iter().filter(|c| c.is_fact()) {
        for b in join(&[], c.vars(), &facts, &universe) {
            facts.insert(ground(c.head(), &b));
        }
    }

    let rules: Vec<&HornClause> = world.clauses.iter().filter(|c| !c.is_fact()).collect();
    let mut iterations = 0;
    loop {
        let mut derived = Vec::new();
        for rule in &rules {
            for b in join(&body_atoms(rule), rule.vars(), &facts, &universe) {
                let head = ground(rule.head(), &b);
                if !facts.contains(&head) {
                    derived.push(head);
                }
            }
        }
        let before = facts.len();
        facts.extend(derived);
        if facts.len() == before {
            break;
        }
        iterations += 1;
    }

    let (mut vars, _) = goal.strip_exists();
    for v in goal.free_vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let mut all_vars = vars.clone();
    goal.collect_vars(&mut all_vars);
    let witnesses: BTreeSet<Vec<Term>> = join(&goal_atoms, &all_vars, &facts, &universe)
        .into_iter()
        .map(|b| vars.iter().map(|v| b[v].clone()).collect())
        .collect();
    Ok(Verdict {
        holds: !witnesses.is_empty(),
        vars,
        witnesses,
        iterations,
        facts: facts.len(),
    })
}

/// Top-down provability compared against "true in every world".
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PvOracleReport {
    pub pv_outcome: OutcomeKind,
    pub worlds: Vec<(Selection, bool)>,
    /// `None` when `pv` was inconclusive.
    pub agree: Option<bool>,
}

impl PvOracleReport {
    pub fn all_worlds_hold(&self) -> bool {
        self.worlds.iter().all(|(_, holds)| *holds)
    }

    /// World label to verdict, for harness consumption.
    pub fn summary(&self) -> BTreeMap<String, bool> {
        self.worlds
            .iter()
            .map(|(s, h)| (alloc::format!("{s}"), *h))
            .collect()
    }
}

impl fmt::Display for PvOracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} oracle", "world")?;
        for (s, holds) in &self.worlds {
            writeln!(f, "{:<16} {}", alloc::format!("{s}"), holds)?;
        }
        let agree = match self.agree {
            Some(true) => "agree",
            Some(false) => "DISAGREE",
            None => "inconclusive",
        };
        write!(f, "pv: {}  ({agree})", self.pv_outcome)
    }
}

pub fn check_pv_oracle(
    program: &Program,
    goal: &Goal,
    cfg: &SearchConfig,
) -> Result<PvOracleReport, OracleError> {
    let worlds = enumerate_selections(program)?;
    let mut verdicts = Vec::with_capacity(worlds.len());
    for (selection, world) in worlds {
        verdicts.push((selection, bottom_up_solve(&world, goal)?.holds));
    }
    let pv_outcome = Engine::new(program, *cfg)
        .pv(goal)
        .map_err(OracleError::Engine)?
        .kind();
    let all = verdicts.iter().all(|(_, h)| *h);
    let agree = match pv_outcome {
        OutcomeKind::DepthExceeded => None,
        OutcomeKind::Success => Some(all),
        OutcomeKind::Failure => Some(!all),
    };
    Ok(PvOracleReport {
        pv_outcome,
        worlds: verdicts,
        agree,
    })
}

/// `ex` under every complete script compared against `pv`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoiceIndependenceReport {
    pub pv_outcome: OutcomeKind,
    pub runs: Vec<(ChoiceScript, Result<OutcomeKind, EngineError>)>,
    /// `None` when no run could be compared conclusively.
    pub agree: Option<bool>,
}

impl ChoiceIndependenceReport {
    pub fn scripts_tried(&self) -> usize {
        self.runs.len()
    }
}

impl fmt::Display for ChoiceIndependenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} ex", "script")?;
        for (script, outcome) in &self.runs {
            let sel = Selection {
                picks: script.decisions.clone(),
            };
            match outcome {
                Ok(k) => writeln!(f, "{:<16} {k}", alloc::format!("{sel}"))?,
                Err(e) => writeln!(f, "{:<16} error: {e}", alloc::format!("{sel}"))?,
            }
        }
        write!(f, "pv: {}  agree: {:?}", self.pv_outcome, self.agree)
    }
}

pub fn check_choice_independence(
    program: &Program,
    goal: &Goal,
    cfg: &SearchConfig,
) -> Result<ChoiceIndependenceReport, OracleError> {
    let arities = program.choice_arities();
    let count = arities.iter().product::<usize>();
    if count > DEFAULT_WORLD_CAP {
        return Err(OracleError::WorldLimitExceeded {
            worlds: count,
            cap: DEFAULT_WORLD_CAP,
        });
    }
    let pv_outcome = Engine::new(program, *cfg)
        .pv(goal)
        .map_err(OracleError::Engine)?
        .kind();
    let mut runs = Vec::with_capacity(count);
    let mut compared = 0;
    let mut agree = true;
    for picks in all_scripts(&arities) {
        let script = ChoiceScript::new(picks);
        let mut provider = make_script_provider(script.clone());
        let outcome = Engine::new(program, *cfg)
            .ex(goal, &mut provider)
            .map(|o| o.kind());
        match outcome {
            Ok(kind) if kind.is_conclusive() && pv_outcome.is_conclusive() => {
                compared += 1;
                agree &= kind == pv_outcome;
            }
            Ok(_) => {}
            Err(_) => {
                compared += 1;
                agree = false;
            }
        }
        runs.push((script, outcome));
    }
    Ok(ChoiceIndependenceReport {
        pv_outcome,
        runs,
        agree: (compared > 0).then_some(agree),
    })
}
