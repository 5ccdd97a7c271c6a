//! Goal reduction and backchaining over a fixed clause store.
//!
//! The search is depth-first, left to right, trying store clauses in order.
//! It runs on an explicit stack of frames so answers can be pulled one at a
//! time and deep derivations never grow the native stack.
//!
//! Bindings live in a single triangular store with a trail. Choice points
//! remember the trail length and undo back to it when resumed, so memory
//! grows with the current branch rather than with every open alternative.

use alloc::borrow::Cow;
use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicBool, Ordering};

use super::trace::{TraceEvent, Tracer};
use super::{ClauseStore, SearchConfig, Termination};
use crate::subst::{rename_atom, rename_goal, Substitution};
use crate::syntax::{render_bindings, Printer};
use crate::term::{Atom, Goal, HornClause, Symbol, Term, Var, VarGen};
use crate::unify::mgu_atoms;

type GoalList = Option<Rc<GoalNode>>;

struct GoalNode {
    goal: Goal,
    depth: usize,
    next: GoalList,
}

fn cons(goal: Goal, depth: usize, next: GoalList) -> GoalList {
    Some(Rc::new(GoalNode { goal, depth, next }))
}

enum Frame {
    Reduce(GoalList),
    /// A selected atom with the store clauses still to try for it.
    Alternatives {
        goals: GoalList,
        atom: Atom,
        depth: usize,
        candidates: Rc<[usize]>,
        next: usize,
        mark: usize,
    },
}

/// Store positions of the clauses defining each predicate, in order.
type Index = BTreeMap<(Symbol, usize), Rc<[usize]>>;

fn index(store: &ClauseStore) -> Index {
    let mut map: BTreeMap<(Symbol, usize), Vec<usize>> = BTreeMap::new();
    for (i, c) in store.clauses().iter().enumerate() {
        let head = c.head();
        map.entry((head.predicate.clone(), head.arity()))
            .or_default()
            .push(i);
    }
    map.into_iter().map(|(k, v)| (k, v.into())).collect()
}

/// Triangular bindings: an image may mention variables bound later.
#[derive(Default)]
struct Bindings {
    map: BTreeMap<usize, Term>,
    trail: Vec<usize>,
}

impl Bindings {
    fn bind(&mut self, var: usize, term: Term) {
        self.map.insert(var, term);
        self.trail.push(var);
    }

    fn undo(&mut self, mark: usize) {
        for var in self.trail.drain(mark..) {
            self.map.remove(&var);
        }
    }

    fn resolve(&self, t: &Term) -> Term {
        self.resolve_guarded(t, &mut Vec::new())
    }

    /// `open` holds the variables being expanded on the current path, so
    /// cyclic bindings made without the occurs check unfold only once.
    fn resolve_guarded(&self, t: &Term, open: &mut Vec<usize>) -> Term {
        match t {
            Term::Var(v) => {
                let mut cur = v;
                loop {
                    match self.map.get(&cur.id()) {
                        None => return Term::Var(cur.clone()),
                        Some(Term::Var(w)) => cur = w,
                        Some(image) => {
                            if open.contains(&cur.id()) {
                                return Term::Var(cur.clone());
                            }
                            open.push(cur.id());
                            let r = self.resolve_guarded(image, open);
                            open.pop();
                            return r;
                        }
                    }
                }
            }
            Term::Compound { args, .. } if args.is_empty() => t.clone(),
            Term::Compound { functor, args } => Term::Compound {
                functor: functor.clone(),
                args: args.iter().map(|a| self.resolve_guarded(a, open)).collect(),
            },
        }
    }

    fn resolve_atom(&self, a: &Atom) -> Atom {
        Atom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(|t| self.resolve(t)).collect(),
        }
    }
}

pub(crate) struct Solver {
    store: Rc<ClauseStore>,
    index: Index,
    cfg: SearchConfig,
    vars: VarGen,
    query: Vec<Var>,
    bindings: Bindings,
    stack: Vec<Frame>,
    depth_hit: bool,
    steps: u64,
    found: usize,
    halted: Option<Termination>,
    trace: Option<Tracer>,
    cancel: Option<Arc<AtomicBool>>,
}

impl Solver {
    pub(crate) fn new(
        store: Rc<ClauseStore>,
        cfg: SearchConfig,
        vars: VarGen,
        trace: Option<Tracer>,
        cancel: Option<Arc<AtomicBool>>,
    ) -> Self {
        Solver {
            index: index(&store),
            store,
            cfg,
            vars,
            query: Vec::new(),
            bindings: Bindings::default(),
            stack: Vec::new(),
            depth_hit: false,
            steps: 0,
            found: 0,
            halted: None,
            trace,
            cancel,
        }
    }

    /// Start from `goal` at the given depth with no bindings.
    /// Answers report bindings for `query`.
    pub(crate) fn start_goal(&mut self, query: Vec<Var>, goal: Goal, depth: usize) {
        self.query = query;
        self.stack.push(Frame::Reduce(cons(goal, depth, None)));
    }

    /// Start from an already unified clause body.
    pub(crate) fn start_conf(
        &mut self,
        query: Vec<Var>,
        subst: Substitution,
        body: Option<Goal>,
        depth: usize,
    ) {
        self.query = query;
        for (v, t) in subst.iter() {
            self.bindings.bind(v.id(), t.clone());
        }
        let goals = body.and_then(|b| cons(b, depth, None));
        self.stack.push(Frame::Reduce(goals));
    }

    pub(crate) fn query_vars(&self) -> &[Var] {
        &self.query
    }

    pub(crate) fn termination(&self) -> Option<Termination> {
        self.halted
    }

    pub(crate) fn found(&self) -> usize {
        self.found
    }

    fn emit(&self, make: impl FnOnce() -> TraceEvent) {
        if let Some(t) = &self.trace {
            t.borrow_mut().record(make());
        }
    }

    fn answer(&self) -> Substitution {
        self.query
            .iter()
            .map(|v| (v.clone(), self.bindings.resolve(&Term::Var(v.clone()))))
            .collect()
    }

    pub(crate) fn next_answer(&mut self) -> Option<Substitution> {
        if self.halted.is_some() {
            return None;
        }
        while let Some(frame) = self.stack.pop() {
            match frame {
                Frame::Reduce(goals) => {
                    if self.reduce(goals) {
                        let answer = self.answer();
                        self.found += 1;
                        self.emit(|| TraceEvent::Answer {
                            bindings: render_bindings(&self.query, &answer),
                        });
                        return Some(answer);
                    }
                }
                Frame::Alternatives {
                    goals,
                    atom,
                    depth,
                    candidates,
                    next,
                    mark,
                } => {
                    self.bindings.undo(mark);
                    self.try_clauses(goals, atom, depth, candidates, next, mark);
                }
            }
            if self.halted.is_some() {
                self.stack.clear();
                if self.found == 0 {
                    self.emit(|| TraceEvent::Failed);
                }
                return None;
            }
        }
        self.halted = Some(if self.depth_hit {
            Termination::DepthLimited
        } else {
            Termination::Exhausted
        });
        if self.found == 0 {
            self.emit(|| TraceEvent::Failed);
        }
        None
    }

    /// Rules 9 and 10 until an atomic goal is selected or no goals remain.
    /// Returns true when the goal list is empty, i.e. an answer was reached.
    fn reduce(&mut self, mut goals: GoalList) -> bool {
        loop {
            let Some(node) = goals.take() else {
                return true;
            };
            goals = node.next.clone();
            match &node.goal {
                Goal::Atom(a) => {
                    let atom = self.bindings.resolve_atom(a);
                    self.emit(|| TraceEvent::EnterGoal {
                        goal: Printer::for_item(&atom).render(&atom),
                        depth: node.depth,
                    });
                    let key = (atom.predicate.clone(), atom.arity());
                    let Some(candidates) = self.index.get(&key).cloned() else {
                        return false;
                    };
                    self.stack.push(Frame::Alternatives {
                        goals,
                        atom,
                        depth: node.depth,
                        candidates,
                        next: 0,
                        mark: self.bindings.trail.len(),
                    });
                    return false;
                }
                Goal::Tensor(l, r) => {
                    let rest = cons((**r).clone(), node.depth, goals);
                    goals = cons((**l).clone(), node.depth, rest);
                }
                Goal::Exists(v, body) => {
                    // instantiate with a fresh variable; unification picks the witness
                    let fresh = self.vars.fresh(v.name_symbol().clone());
                    let map: BTreeMap<Var, Var> = core::iter::once((v.clone(), fresh)).collect();
                    goals = cons(rename_goal(body, &map), node.depth, goals);
                }
            }
        }
    }

    /// Rules 5 to 8: pick the next candidate clause whose head unifies with
    /// `atom`, leaving the remaining candidates on the stack.
    fn try_clauses(
        &mut self,
        goals: GoalList,
        atom: Atom,
        depth: usize,
        candidates: Rc<[usize]>,
        start: usize,
        mark: usize,
    ) {
        let store = Rc::clone(&self.store);
        for (k, &i) in candidates.iter().enumerate().skip(start) {
            if self
                .cancel
                .as_ref()
                .is_some_and(|c| c.load(Ordering::Relaxed))
            {
                self.halted = Some(Termination::Cancelled);
                return;
            }
            self.steps += 1;
            if self.cfg.step_limit.is_some_and(|limit| self.steps > limit) {
                self.halted = Some(Termination::StepLimit);
                return;
            }
            let clause = &store.clauses()[i];
            // rename the head first; the body only once the head unifies
            let map: BTreeMap<Var, Var> = clause
                .vars()
                .iter()
                .map(|v| (v.clone(), self.vars.fresh(v.name_symbol().clone())))
                .collect();
            let head = if map.is_empty() {
                Cow::Borrowed(clause.head())
            } else {
                Cow::Owned(rename_atom(clause.head(), &map))
            };
            let Some(unifier) = mgu_atoms(&atom, &head, self.cfg.unify) else {
                continue;
            };
            if clause.body().is_some() && depth + 1 > self.cfg.depth_limit {
                self.depth_hit = true;
                self.emit(|| TraceEvent::DepthHit { depth: depth + 1 });
                continue;
            }
            if k + 1 < candidates.len() {
                self.stack.push(Frame::Alternatives {
                    goals: goals.clone(),
                    atom: atom.clone(),
                    depth,
                    candidates: Rc::clone(&candidates),
                    next: k + 1,
                    mark,
                });
            }
            let body = clause.body().map(|b| rename_goal(b, &map));
            self.emit(|| {
                let vars = clause.vars().iter().map(|v| map[v].clone()).collect();
                let renamed = HornClause::from_parts(head.into_owned(), body.clone(), vars);
                TraceEvent::Backchain {
                    clause: Printer::for_item(&renamed).render(&renamed),
                    depth,
                }
            });
            for (v, t) in unifier.iter() {
                self.bindings.bind(v.id(), t.clone());
            }
            let goals = match body {
                Some(body) => cons(body, depth + 1, goals),
                None => goals,
            };
            self.stack.push(Frame::Reduce(goals));
            return;
        }
    }
}
