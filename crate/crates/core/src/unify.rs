//! Syntactic first-order unification.

use alloc::vec;
use alloc::vec::Vec;

use crate::subst::Substitution;
use crate::term::{Atom, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnifyConfig {
    pub occurs_check: bool,
}

impl Default for UnifyConfig {
    fn default() -> Self {
        UnifyConfig { occurs_check: true }
    }
}

/// Most general unifier of two terms, or `None` if they do not unify.
///
/// With the occurs check disabled a binding `X -> f(X)` may be produced; the
/// result is then no longer idempotent and only meant for experiments.
pub fn mgu(a: &Term, b: &Term, cfg: UnifyConfig) -> Option<Substitution> {
    let mut s = Substitution::new();
    unify_into(&mut s, vec![(a.clone(), b.clone())], cfg)?;
    Some(s)
}

/// Most general unifier of two atoms. Different predicate symbols or arities
/// never unify.
pub fn mgu_atoms(a: &Atom, b: &Atom, cfg: UnifyConfig) -> Option<Substitution> {
    if a.predicate != b.predicate || a.args.len() != b.args.len() {
        return None;
    }
    let mut s = Substitution::new();
    let pairs = a.args.iter().cloned().zip(b.args.iter().cloned()).collect();
    unify_into(&mut s, pairs, cfg)?;
    Some(s)
}

// Without the occurs check, cyclic bindings can make decomposition run
// forever (X = f(X) against X = f(f(X))); give up after this many steps.
const UNCHECKED_STEP_LIMIT: usize = 1 << 16;

fn unify_into(s: &mut Substitution, mut work: Vec<(Term, Term)>, cfg: UnifyConfig) -> Option<()> {
    let mut steps = 0usize;
    while let Some((l, r)) = work.pop() {
        steps += 1;
        if !cfg.occurs_check && steps > UNCHECKED_STEP_LIMIT {
            return None;
        }
        let l = s.apply_term(&l);
        let r = s.apply_term(&r);
        match (l, r) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if t.occurs(x.id()) {
                    if cfg.occurs_check {
                        return None;
                    }
                    s.bind_unchecked(x, t);
                } else {
                    s.bind(x, t);
                }
            }
            (
                Term::Compound {
                    functor: f,
                    args: fa,
                },
                Term::Compound {
                    functor: g,
                    args: ga,
                },
            ) => {
                if f != g || fa.len() != ga.len() {
                    return None;
                }
                work.extend(fa.into_iter().zip(ga).rev());
            }
        }
    }
    Some(())
}

impl Substitution {
    /// Occurs-check-free binding; used only when the check is disabled.
    fn bind_unchecked(&mut self, var: crate::term::Var, term: Term) {
        let single: Substitution = core::iter::once((var, term)).collect();
        *self = self.compose(&single);
    }
}
