//! Core of the `mup` interpreter: Horn-clause logic programming extended with
//! choice-disjunctive program clauses `C1 (+) C2 (+) ...`.
//!
//! Two procedures run a query against a program:
//!
//! * [`engine::pv`] decides provability. A choice-disjunctive clause only
//!   succeeds when the goal is provable under *every* alternative.
//! * [`engine::ex`] executes interactively. At each choice-disjunctive clause a
//!   [`engine::ChoiceProvider`] (usually a human) picks one alternative; the
//!   derivation continues with that alternative and every other alternative is
//!   checked non-interactively with `pv`.
//!
//! The crate is `no_std` and only needs `alloc`. Process IO, the REPL and the
//! session protocol live in the `mup` crate.
#![no_std]

extern crate alloc;

pub mod engine;
pub mod oracle;
pub mod subst;
pub mod syntax;
pub mod term;
pub mod unify;

pub use engine::{ex, pv, OutcomeKind, ProveOutcome, SearchConfig};
pub use subst::Substitution;
pub use syntax::{parse_goal, parse_program, pretty, ParseError};
pub use term::{Atom, DFormula, Goal, HornClause, Program, Term, Var, VarGen};
pub use unify::{mgu, UnifyConfig};
