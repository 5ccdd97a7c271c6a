//! Terms, formulas and programs.
//!
//! The formula classes follow the language grammar:
//!
//! ```text
//! G ::= A | G (x) G | exists x. G        goals
//! C ::= A | G => A | forall x. C          Horn clauses
//! D ::= !C | D (+) D                      program clauses
//! ```

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};
use core::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

/// Interned-ish symbol text. Cloning is a reference-count bump.
pub type Symbol = Arc<str>;

/// A logic variable.
///
/// Identity is the numeric id alone; the name is only used for display.
#[derive(Clone, Debug)]
pub struct Var {
    name: Symbol,
    id: usize,
}

impl Var {
    pub fn new(name: impl Into<Symbol>, id: usize) -> Self {
        Var {
            name: name.into(),
            id,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn name_symbol(&self) -> &Symbol {
        &self.name
    }

    pub fn id(&self) -> usize {
        self.id
    }

    /// Anonymous variables (`_`) print specially.
    pub fn is_anonymous(&self) -> bool {
        &*self.name == "_"
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Var {}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id)
    }
}

impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

/// Source of fresh variable ids.
///
/// Clones share the same counter, so one generator can be handed to the
/// parser and to the engine of a session without id collisions.
#[derive(Clone, Debug, Default)]
pub struct VarGen {
    next: Arc<AtomicUsize>,
}

impl VarGen {
    pub fn new() -> Self {
        Self::default()
    }

    /// A generator whose first id is `start`.
    pub fn starting_at(start: usize) -> Self {
        VarGen {
            next: Arc::new(AtomicUsize::new(start)),
        }
    }

    pub fn fresh(&self, name: impl Into<Symbol>) -> Var {
        let id = self.next.fetch_add(1, AtomicOrdering::Relaxed);
        Var::new(name, id)
    }

    /// Make sure every id handed out from now on is greater than `id`.
    pub fn ensure_above(&self, id: usize) {
        self.next.fetch_max(id + 1, AtomicOrdering::Relaxed);
    }

    pub fn peek(&self) -> usize {
        self.next.load(AtomicOrdering::Relaxed)
    }
}

/// A first-order term. A compound with no arguments is a constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Compound { functor: Symbol, args: Vec<Term> },
}

impl Term {
    pub fn constant(name: impl Into<Symbol>) -> Term {
        Term::Compound {
            functor: name.into(),
            args: Vec::new(),
        }
    }

    pub fn compound(functor: impl Into<Symbol>, args: Vec<Term>) -> Term {
        Term::Compound {
            functor: functor.into(),
            args,
        }
    }

    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Compound { .. } => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Compound { args, .. } if args.is_empty())
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound { args, .. } => args.iter().all(Term::is_ground),
        }
    }

    pub fn occurs(&self, id: usize) -> bool {
        match self {
            Term::Var(v) => v.id == id,
            Term::Compound { args, .. } => args.iter().any(|a| a.occurs(id)),
        }
    }

    /// Push the variables of this term in first-occurrence order, skipping
    /// any already present in `out`.
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Compound { args, .. } => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn max_var_id(&self) -> Option<usize> {
        match self {
            Term::Var(v) => Some(v.id),
            Term::Compound { args, .. } => args.iter().filter_map(Term::max_var_id).max(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Compound { args, .. } => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }
}

/// An atomic formula `p(t1, ..., tn)`. Predicates are identified by name and
/// arity together.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<Symbol>, args: Vec<Term>) -> Atom {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn prop(predicate: impl Into<Symbol>) -> Atom {
        Atom::new(predicate, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn indicator(&self) -> (&str, usize) {
        (&self.predicate, self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }

    pub fn max_var_id(&self) -> Option<usize> {
        self.args.iter().filter_map(Term::max_var_id).max()
    }
}

/// Goal formulas: atoms, multiplicative conjunction, existential.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Goal {
    Atom(Atom),
    Tensor(Box<Goal>, Box<Goal>),
    Exists(Var, Box<Goal>),
}

impl Goal {
    pub fn atom(a: Atom) -> Goal {
        Goal::Atom(a)
    }

    pub fn tensor(left: Goal, right: Goal) -> Goal {
        Goal::Tensor(Box::new(left), Box::new(right))
    }

    pub fn exists(var: Var, body: Goal) -> Goal {
        Goal::Exists(var, Box::new(body))
    }

    /// Right-nested conjunction of the given atoms, or `None` when empty.
    pub fn conjunction(atoms: Vec<Atom>) -> Option<Goal> {
        let mut iter = atoms.into_iter().rev();
        let last = Goal::Atom(iter.next()?);
        Some(iter.fold(last, |acc, a| Goal::tensor(Goal::Atom(a), acc)))
    }

    /// Wrap `body` in one existential per variable, outermost first.
    pub fn close_over(vars: &[Var], body: Goal) -> Goal {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Goal::exists(v.clone(), acc))
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut Vec<Var>) {
        match self {
            Goal::Atom(a) => {
                let mut vs = Vec::new();
                a.collect_vars(&mut vs);
                for v in vs {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Goal::Tensor(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Goal::Exists(v, body) => {
                bound.push(v.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// All variables, bound or free, in first-occurrence order.
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Goal::Atom(a) => a.collect_vars(out),
            Goal::Tensor(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Goal::Exists(v, body) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
                body.collect_vars(out);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Atoms left to right.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.push_atoms(&mut out);
        out
    }

    fn push_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Goal::Atom(a) => out.push(a),
            Goal::Tensor(l, r) => {
                l.push_atoms(out);
                r.push_atoms(out);
            }
            Goal::Exists(_, body) => body.push_atoms(out),
        }
    }

    /// Split off the leading chain of existentials: `exists X. exists Y. G`
    /// gives `([X, Y], G)`.
    pub fn strip_exists(&self) -> (Vec<Var>, &Goal) {
        let mut vars = Vec::new();
        let mut g = self;
        while let Goal::Exists(v, body) = g {
            vars.push(v.clone());
            g = body;
        }
        (vars, g)
    }

    pub fn max_var_id(&self) -> Option<usize> {
        match self {
            Goal::Atom(a) => a.max_var_id(),
            Goal::Tensor(l, r) => l.max_var_id().max(r.max_var_id()),
            Goal::Exists(v, body) => Some(v.id).max(body.max_var_id()),
        }
    }
}

/// A universally closed Horn clause `forall vars. body => head`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HornClause {
    head: Atom,
    body: Option<Goal>,
    vars: Vec<Var>,
}

impl HornClause {
    /// Builds the clause and quantifies over every variable occurring in it.
    pub fn new(head: Atom, body: Option<Goal>) -> HornClause {
        let mut vars = Vec::new();
        head.collect_vars(&mut vars);
        if let Some(b) = &body {
            b.collect_vars(&mut vars);
        }
        HornClause { head, body, vars }
    }

    pub fn fact(head: Atom) -> HornClause {
        HornClause::new(head, None)
    }

    pub fn rule(head: Atom, body: Goal) -> HornClause {
        HornClause::new(head, Some(body))
    }

    pub fn head(&self) -> &Atom {
        &self.head
    }

    pub fn body(&self) -> Option<&Goal> {
        self.body.as_ref()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_none()
    }

    pub(crate) fn from_parts(head: Atom, body: Option<Goal>, vars: Vec<Var>) -> HornClause {
        HornClause { head, body, vars }
    }

    pub fn max_var_id(&self) -> Option<usize> {
        self.vars.iter().map(Var::id).max()
    }
}

/// A program clause: a banged Horn clause or a choice between program
/// clauses.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DFormula {
    Bang(HornClause),
    Plus(Box<DFormula>, Box<DFormula>),
}

impl DFormula {
    pub fn bang(clause: HornClause) -> DFormula {
        DFormula::Bang(clause)
    }

    pub fn plus(left: DFormula, right: DFormula) -> DFormula {
        DFormula::Plus(Box::new(left), Box::new(right))
    }

    /// Right-nested choice over the given clauses; a single clause gives a
    /// plain `Bang`. Returns `None` for an empty list.
    pub fn choice(clauses: Vec<HornClause>) -> Option<DFormula> {
        let mut iter = clauses.into_iter().rev();
        let last = DFormula::Bang(iter.next()?);
        Some(iter.fold(last, |acc, c| DFormula::plus(DFormula::Bang(c), acc)))
    }

    /// Leaves of the choice tree, left to right.
    pub fn leaves(&self) -> Vec<&HornClause> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![self];
        while let Some(d) = stack.pop() {
            match d {
                DFormula::Bang(c) => out.push(c),
                DFormula::Plus(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        out
    }

    /// Owned copy of [`DFormula::leaves`].
    pub fn flatten_choice(&self) -> Vec<HornClause> {
        self.leaves().into_iter().cloned().collect()
    }

    /// Number of alternatives; 1 for a plain banged clause.
    pub fn arity(&self) -> usize {
        match self {
            DFormula::Bang(_) => 1,
            DFormula::Plus(l, r) => l.arity() + r.arity(),
        }
    }

    pub fn is_choice(&self) -> bool {
        matches!(self, DFormula::Plus(..))
    }
}

/// 1-based position in a source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourcePos {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// An ordered list of program clauses.
///
/// Order matters twice: clauses are loaded in this order, and backchaining
/// tries candidates in this order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    clauses: Vec<DFormula>,
    source_names: Vec<Option<String>>,
    origins: Vec<Option<SourcePos>>,
}

impl Program {
    pub fn new(clauses: Vec<DFormula>) -> Program {
        let n = clauses.len();
        Program {
            clauses,
            source_names: alloc::vec![None; n],
            origins: alloc::vec![None; n],
        }
    }

    pub fn push(&mut self, clause: DFormula, name: Option<String>, origin: Option<SourcePos>) {
        self.clauses.push(clause);
        self.source_names.push(name);
        self.origins.push(origin);
    }

    pub fn clauses(&self) -> &[DFormula] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn source_name(&self, index: usize) -> Option<&str> {
        self.source_names.get(index).and_then(|n| n.as_deref())
    }

    pub fn origin(&self, index: usize) -> Option<SourcePos> {
        self.origins.get(index).copied().flatten()
    }

    /// Arities of the choice groups, in program order.
    pub fn choice_arities(&self) -> Vec<usize> {
        self.clauses
            .iter()
            .filter(|d| d.is_choice())
            .map(DFormula::arity)
            .collect()
    }

    pub fn max_var_id(&self) -> Option<usize> {
        self.clauses
            .iter()
            .flat_map(|d| d.leaves())
            .filter_map(HornClause::max_var_id)
            .max()
    }
}
