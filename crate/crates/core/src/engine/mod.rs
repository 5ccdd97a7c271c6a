//! The two procedures that run a query.
//!
//! Both start by loading the program clauses into a store, left to right. A
//! plain clause goes straight into the store. At a choice clause
//! `C1 (+) ... (+) Cn`:
//!
//! * `pv` requires the rest of the derivation to succeed once per
//!   alternative, with that alternative added to the store;
//! * `ex` asks a [`ChoiceProvider`] for one alternative `k`, continues
//!   interactively with `Ck`, and afterwards checks every other alternative
//!   with `pv`. All of them have to succeed.
//!
//! Once the program is loaded both hand over to the same goal machinery
//! (see [`solve`](self)): goal reduction for `,` and existentials, and
//! backchaining on store clauses in order.

mod choice;
mod solve;
mod trace;

use alloc::rc::Rc;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;
use core::sync::atomic::{AtomicBool, Ordering};

pub use choice::{
    make_script_provider, ChoiceProvider, ChoiceRequest, ChoiceScript, EngineError, RequestIds,
    ScriptProvider,
};
pub use trace::{TraceEvent, TraceLog, TraceSink};

use crate::subst::Substitution;
use crate::syntax::pretty;
use crate::term::{Atom, DFormula, Goal, HornClause, Program, Var, VarGen};
use crate::unify::{mgu_atoms, UnifyConfig};
use solve::Solver;
use trace::Tracer;

pub const DEFAULT_DEPTH_LIMIT: usize = 256;
pub const DEFAULT_STEP_LIMIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximum nesting of backchaining into clause bodies on one path.
    pub depth_limit: usize,
    pub unify: UnifyConfig,
    /// Maximum number of head unification attempts in one goal search;
    /// `None` for no limit. Running out is reported like the depth limit.
    pub step_limit: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            depth_limit: DEFAULT_DEPTH_LIMIT,
            unify: UnifyConfig::default(),
            step_limit: Some(DEFAULT_STEP_LIMIT),
        }
    }
}

impl SearchConfig {
    pub fn with_depth(depth_limit: usize) -> Self {
        assert!(depth_limit >= 1, "depth limit must be positive");
        SearchConfig {
            depth_limit,
            ..Self::default()
        }
    }
}

/// Outcome without the answers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OutcomeKind {
    Success,
    Failure,
    DepthExceeded,
}

impl OutcomeKind {
    pub fn is_conclusive(self) -> bool {
        self != OutcomeKind::DepthExceeded
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeKind::Success => "success",
            OutcomeKind::Failure => "failure",
            OutcomeKind::DepthExceeded => "depth exceeded",
        })
    }
}

/// Why an answer sequence ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The search space was fully explored.
    Exhausted,
    /// Fully explored below the depth limit, but some path was cut off.
    DepthLimited,
    /// The step budget ran out.
    StepLimit,
    Cancelled,
}

/// The clause store: Horn clauses in load order, duplicates allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClauseStore(Vec<HornClause>);

impl ClauseStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, clause: HornClause) {
        self.0.push(clause);
    }

    pub fn clauses(&self) -> &[HornClause] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<HornClause> for ClauseStore {
    fn from_iter<I: IntoIterator<Item = HornClause>>(iter: I) -> Self {
        ClauseStore(iter.into_iter().collect())
    }
}

/// Answer substitutions restricted to the query variables, produced on
/// demand. The first answer has already been found.
pub struct Answers {
    first: Option<Substitution>,
    solver: Solver,
}

impl Answers {
    pub fn query_vars(&self) -> &[Var] {
        self.solver.query_vars()
    }

    /// Why the sequence stopped, once it has.
    pub fn termination(&self) -> Option<Termination> {
        if self.first.is_some() {
            None
        } else {
            self.solver.termination()
        }
    }

    /// Answers produced so far, including the first.
    pub fn produced(&self) -> usize {
        self.solver.found()
    }
}

impl Iterator for Answers {
    type Item = Substitution;

    fn next(&mut self) -> Option<Substitution> {
        self.first.take().or_else(|| self.solver.next_answer())
    }
}

impl fmt::Debug for Answers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Answers")
            .field("first", &self.first)
            .field("produced", &self.produced())
            .finish_non_exhaustive()
    }
}

// returned once per query, so the size difference does not matter
#[allow(clippy::large_enum_variant)]
#[derive(Debug)]
pub enum ProveOutcome {
    Success(Answers),
    Failure,
    DepthExceeded,
}

impl ProveOutcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            ProveOutcome::Success(_) => OutcomeKind::Success,
            ProveOutcome::Failure => OutcomeKind::Failure,
            ProveOutcome::DepthExceeded => OutcomeKind::DepthExceeded,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, ProveOutcome::Success(_))
    }

    pub fn answers(self) -> Option<Answers> {
        match self {
            ProveOutcome::Success(a) => Some(a),
            _ => None,
        }
    }
}

/// Runs queries against one program.
///
/// The engine holds the per-run state that may be shared with a session:
/// the variable generator, the choice request counter, an optional trace
/// sink and an optional cancellation flag.
pub struct Engine<'p> {
    program: &'p Program,
    cfg: SearchConfig,
    vars: VarGen,
    requests: RequestIds,
    trace: Option<Tracer>,
    cancel: Option<Arc<AtomicBool>>,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program, cfg: SearchConfig) -> Self {
        Engine {
            program,
            cfg,
            vars: VarGen::new(),
            requests: RequestIds::new(),
            trace: None,
            cancel: None,
        }
    }

    pub fn with_var_gen(mut self, vars: VarGen) -> Self {
        self.vars = vars;
        self
    }

    pub fn with_request_ids(mut self, ids: RequestIds) -> Self {
        self.requests = ids;
        self
    }

    pub fn with_trace(mut self, sink: impl TraceSink + 'static) -> Self {
        self.trace = Some(Rc::new(RefCell::new(sink)));
        self
    }

    /// Runs stop at the next step once `flag` is set.
    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn config(&self) -> &SearchConfig {
        &self.cfg
    }

    fn emit(&self, traced: bool, make: impl FnOnce() -> TraceEvent) {
        if traced {
            if let Some(t) = &self.trace {
                t.borrow_mut().record(make());
            }
        }
    }

    fn check_cancel(&self) -> Result<(), EngineError> {
        match &self.cancel {
            Some(flag) if flag.load(Ordering::Relaxed) => Err(EngineError::Cancelled),
            _ => Ok(()),
        }
    }

    fn reserve_ids(&self, goal: &Goal) {
        if let Some(id) = goal.max_var_id() {
            self.vars.ensure_above(id);
        }
        if let Some(id) = self.program.max_var_id() {
            self.vars.ensure_above(id);
        }
    }

    /// Provability: succeeds iff the goal is provable under every
    /// alternative of every choice clause. Never asks for a choice.
    ///
    /// Answers are those of the derivation that takes the first alternative
    /// of every choice clause.
    pub fn pv(&self, goal: &Goal) -> Result<ProveOutcome, EngineError> {
        self.reserve_ids(goal);
        self.additive(
            ClauseStore::new(),
            self.program.clauses(),
            Some(0),
            goal,
            None,
            true,
        )
    }

    /// Interactive execution: `provider` picks the alternative at every
    /// choice clause, in program order. Answers come from the chosen world.
    pub fn ex(
        &self,
        goal: &Goal,
        provider: &mut dyn ChoiceProvider,
    ) -> Result<ProveOutcome, EngineError> {
        self.reserve_ids(goal);
        self.additive(
            ClauseStore::new(),
            self.program.clauses(),
            Some(0),
            goal,
            Some(provider),
            true,
        )
    }

    /// Loading phase of `pv` from an explicit store and remaining clauses.
    pub fn pv_additive(
        &self,
        store: ClauseStore,
        rest: &[DFormula],
        goal: &Goal,
    ) -> Result<ProveOutcome, EngineError> {
        self.reserve_ids(goal);
        self.additive(store, rest, None, goal, None, true)
    }

    /// Loading phase of `ex` from an explicit store and remaining clauses.
    pub fn ex_additive(
        &self,
        store: ClauseStore,
        rest: &[DFormula],
        goal: &Goal,
        provider: &mut dyn ChoiceProvider,
    ) -> Result<ProveOutcome, EngineError> {
        self.reserve_ids(goal);
        self.additive(store, rest, None, goal, Some(provider), true)
    }

    /// Goal search over a loaded store. The leading existentials of `goal`
    /// are the query variables reported in answers.
    pub fn pv_goal(&self, store: ClauseStore, goal: &Goal) -> Result<ProveOutcome, EngineError> {
        self.reserve_ids(goal);
        self.solve(store, goal, 0, true)
    }

    /// Backchain on one clause: unify its head with `atom`, then solve its
    /// body one level deeper. `clause` must already be renamed apart from
    /// `atom`. Answers bind the variables of `atom`.
    pub fn pv_backchain(
        &self,
        clause: &HornClause,
        store: ClauseStore,
        atom: &Atom,
        depth: usize,
    ) -> Result<ProveOutcome, EngineError> {
        if let Some(id) = atom.max_var_id().max(clause.max_var_id()) {
            self.vars.ensure_above(id);
        }
        let Some(unifier) = mgu_atoms(atom, clause.head(), self.cfg.unify) else {
            return Ok(ProveOutcome::Failure);
        };
        if clause.body().is_some() && depth + 1 > self.cfg.depth_limit {
            return Ok(ProveOutcome::DepthExceeded);
        }
        let mut query = Vec::new();
        atom.collect_vars(&mut query);
        let mut solver = self.solver(store, true);
        solver.start_conf(query, unifier, clause.body().cloned(), depth + 1);
        Self::first(solver)
    }

    fn solver(&self, store: ClauseStore, traced: bool) -> Solver {
        Solver::new(
            Rc::new(store),
            self.cfg,
            self.vars.clone(),
            if traced { self.trace.clone() } else { None },
            self.cancel.clone(),
        )
    }

    fn solve(
        &self,
        store: ClauseStore,
        goal: &Goal,
        depth: usize,
        traced: bool,
    ) -> Result<ProveOutcome, EngineError> {
        let (query, body) = goal.strip_exists();
        let mut solver = self.solver(store, traced);
        solver.start_goal(query, body.clone(), depth);
        Self::first(solver)
    }

    fn first(mut solver: Solver) -> Result<ProveOutcome, EngineError> {
        match solver.next_answer() {
            Some(a) => Ok(ProveOutcome::Success(Answers {
                first: Some(a),
                solver,
            })),
            None => match solver.termination() {
                Some(Termination::Exhausted) => Ok(ProveOutcome::Failure),
                Some(Termination::Cancelled) => Err(EngineError::Cancelled),
                _ => Ok(ProveOutcome::DepthExceeded),
            },
        }
    }

    /// Loading phase shared by both procedures. `provider` is `Some` on the
    /// interactive path only. `index` is the program position of `rest[0]`
    /// when `rest` is a suffix of the program.
    fn additive(
        &self,
        mut store: ClauseStore,
        mut rest: &[DFormula],
        mut index: Option<usize>,
        goal: &Goal,
        provider: Option<&mut dyn ChoiceProvider>,
        traced: bool,
    ) -> Result<ProveOutcome, EngineError> {
        loop {
            self.check_cancel()?;
            let Some((d, tail)) = rest.split_first() else {
                return self.solve(store, goal, 0, traced);
            };
            self.emit(traced, || TraceEvent::EnterPhase1 { clause: pretty(d) });
            let here = index;
            rest = tail;
            index = index.map(|i| i + 1);
            match d {
                DFormula::Bang(c) => store.push(c.clone()),
                DFormula::Plus(..) => {
                    let leaves = d.leaves();
                    return match provider {
                        None => self.pv_group(store, &leaves, rest, index, goal, traced),
                        Some(p) => {
                            self.ex_group(store, &leaves, here, rest, index, goal, p, traced)
                        }
                    };
                }
            }
        }
    }

    /// Every alternative has to succeed; answers come from the first.
    fn pv_group(
        &self,
        store: ClauseStore,
        leaves: &[&HornClause],
        rest: &[DFormula],
        index: Option<usize>,
        goal: &Goal,
        traced: bool,
    ) -> Result<ProveOutcome, EngineError> {
        let mut first = None;
        let mut inconclusive = false;
        for (i, leaf) in leaves.iter().enumerate() {
            let mut branch = store.clone();
            branch.push((*leaf).clone());
            let outcome = self.additive(branch, rest, index, goal, None, traced && i == 0)?;
            match outcome.kind() {
                OutcomeKind::Failure => return Ok(ProveOutcome::Failure),
                OutcomeKind::DepthExceeded => inconclusive = true,
                OutcomeKind::Success => {}
            }
            if i == 0 {
                first = Some(outcome);
            }
        }
        if inconclusive {
            return Ok(ProveOutcome::DepthExceeded);
        }
        Ok(first.expect("choice clause has at least two alternatives"))
    }

    /// Ask for one alternative, continue with it, then verify the others
    /// non-interactively.
    #[allow(clippy::too_many_arguments)]
    fn ex_group(
        &self,
        store: ClauseStore,
        leaves: &[&HornClause],
        origin_index: Option<usize>,
        rest: &[DFormula],
        index: Option<usize>,
        goal: &Goal,
        provider: &mut dyn ChoiceProvider,
        traced: bool,
    ) -> Result<ProveOutcome, EngineError> {
        let request = ChoiceRequest {
            request_id: self.requests.next(),
            alternatives: leaves.iter().map(|c| pretty(*c)).enumerate().collect(),
            group_origin: origin_index.and_then(|i| self.program.origin(i)),
        };
        self.emit(traced, || TraceEvent::ChoiceRequested {
            request: request.clone(),
        });
        let chosen = provider.choose(&request)?;
        if chosen >= leaves.len() {
            return Err(EngineError::OutOfRange {
                index: chosen,
                arity: leaves.len(),
            });
        }
        self.emit(traced, || TraceEvent::ChoiceTaken {
            request_id: request.request_id,
            index: chosen,
        });

        let mut branch = store.clone();
        branch.push(leaves[chosen].clone());
        let outcome = self.additive(branch, rest, index, goal, Some(provider), traced)?;
        if outcome.kind() == OutcomeKind::Failure {
            return Ok(ProveOutcome::Failure);
        }
        let mut inconclusive = outcome.kind() == OutcomeKind::DepthExceeded;
        for (j, leaf) in leaves.iter().enumerate() {
            if j == chosen {
                continue;
            }
            let mut branch = store.clone();
            branch.push((*leaf).clone());
            let check = self.additive(branch, rest, index, goal, None, false)?;
            let kind = check.kind();
            self.emit(traced, || TraceEvent::VerifyUnchosen {
                index: j,
                outcome: kind,
            });
            match kind {
                OutcomeKind::Failure => return Ok(ProveOutcome::Failure),
                OutcomeKind::DepthExceeded => inconclusive = true,
                OutcomeKind::Success => {}
            }
        }
        if inconclusive {
            return Ok(ProveOutcome::DepthExceeded);
        }
        Ok(outcome)
    }
}

/// [`Engine::pv`] with a fresh engine.
pub fn pv(program: &Program, goal: &Goal, cfg: &SearchConfig) -> ProveOutcome {
    Engine::new(program, *cfg)
        .pv(goal)
        .expect("pv without a cancellation flag cannot fail")
}

/// [`Engine::ex`] with a fresh engine.
pub fn ex(
    program: &Program,
    goal: &Goal,
    provider: &mut dyn ChoiceProvider,
    cfg: &SearchConfig,
) -> Result<ProveOutcome, EngineError> {
    Engine::new(program, *cfg).ex(goal, provider)
}

/// [`ex`] that also returns the trace recorded up to the first answer.
pub fn ex_traced(
    program: &Program,
    goal: &Goal,
    provider: &mut dyn ChoiceProvider,
    cfg: &SearchConfig,
) -> (Result<ProveOutcome, EngineError>, Vec<TraceEvent>) {
    let log = TraceLog::new();
    let result = Engine::new(program, *cfg)
        .with_trace(log.clone())
        .ex(goal, provider);
    (result, log.take())
}
