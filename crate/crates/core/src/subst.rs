//! Substitutions, kept idempotent: no variable in the domain ever occurs in
//! the range.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::term::{Atom, Goal, HornClause, Term, Var, VarGen};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Var, Term>,
}

/// Error returned when a set of bindings cannot be brought into idempotent
/// form because a variable would have to contain itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicBinding(pub Var);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Normalizes possibly triangular bindings (`X -> g(Y), Y -> b`) into
    /// idempotent form (`X -> g(b), Y -> b`). Identity bindings are dropped.
    pub fn from_bindings(
        bindings: impl IntoIterator<Item = (Var, Term)>,
    ) -> Result<Self, CyclicBinding> {
        let mut s = Substitution::new();
        for (v, t) in bindings {
            let t = s.apply_term(&t);
            match s.bindings.get(&v).cloned() {
                // already bound: the new image has to agree after resolution
                Some(existing) if existing == t => {}
                Some(_) => return Err(CyclicBinding(v)),
                None => {
                    if let Term::Var(w) = &t {
                        if *w == v {
                            continue;
                        }
                    }
                    if t.occurs(v.id()) {
                        return Err(CyclicBinding(v));
                    }
                    s.bind(v, t);
                }
            }
        }
        Ok(s)
    }

    /// Add `var -> term`. `term` must already be normalized under `self`
    /// and must not contain `var`; existing images are rewritten so the
    /// result stays idempotent.
    pub(crate) fn bind(&mut self, var: Var, term: Term) {
        debug_assert!(!term.occurs(var.id()));
        debug_assert!(!self.bindings.contains_key(&var));
        let single = Substitution {
            bindings: core::iter::once((var.clone(), term.clone())).collect(),
        };
        for image in self.bindings.values_mut() {
            if image.occurs(var.id()) {
                *image = single.apply_term(image);
            }
        }
        self.bindings.insert(var, term);
    }

    pub fn get(&self, var: &Var) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.bindings.keys()
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(v) => match self.bindings.get(v) {
                Some(image) => image.clone(),
                None => t.clone(),
            },
            Term::Compound { functor, args } => Term::Compound {
                functor: functor.clone(),
                args: args.iter().map(|a| self.apply_term(a)).collect(),
            },
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(|t| self.apply_term(t)).collect(),
        }
    }

    /// Applies to the free variables of `g`; existential binders shadow.
    pub fn apply_goal(&self, g: &Goal) -> Goal {
        match g {
            Goal::Atom(a) => Goal::Atom(self.apply_atom(a)),
            Goal::Tensor(l, r) => Goal::tensor(self.apply_goal(l), self.apply_goal(r)),
            Goal::Exists(v, body) => {
                if self.bindings.contains_key(v) {
                    let mut inner = self.clone();
                    inner.bindings.remove(v);
                    Goal::exists(v.clone(), inner.apply_goal(body))
                } else {
                    Goal::exists(v.clone(), self.apply_goal(body))
                }
            }
        }
    }

    /// `self` followed by `other`: applying the result equals applying
    /// `self` and then `other`.
    ///
    /// The result is idempotent whenever no variable of `dom(self)` occurs in
    /// the range of `other`, which always holds for a most general unifier
    /// computed on terms already normalized under `self`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut bindings = BTreeMap::new();
        for (v, t) in &self.bindings {
            let image = other.apply_term(t);
            if image.as_var() != Some(v) {
                bindings.insert(v.clone(), image);
            }
        }
        for (v, t) in &other.bindings {
            if !self.bindings.contains_key(v) {
                bindings.insert(v.clone(), t.clone());
            }
        }
        Substitution { bindings }
    }

    /// Keep only the bindings for `vars`.
    pub fn restrict(&self, vars: &[Var]) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }

    pub fn is_idempotent(&self) -> bool {
        self.bindings
            .values()
            .all(|t| self.bindings.keys().all(|v| !t.occurs(v.id())))
    }
}

impl FromIterator<(Var, Term)> for Substitution {
    /// Collects bindings verbatim. Callers are responsible for idempotence;
    /// use [`Substitution::from_bindings`] to normalize.
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        Substitution {
            bindings: iter
                .into_iter()
                .filter(|(v, t)| t.as_var() != Some(v))
                .collect(),
        }
    }
}

/// Variable-to-variable renaming used for standardizing apart.
pub(crate) fn rename_term(t: &Term, map: &BTreeMap<Var, Var>) -> Term {
    match t {
        Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
        Term::Compound { functor, args } => Term::Compound {
            functor: functor.clone(),
            args: args.iter().map(|a| rename_term(a, map)).collect(),
        },
    }
}

pub(crate) fn rename_atom(a: &Atom, map: &BTreeMap<Var, Var>) -> Atom {
    Atom {
        predicate: a.predicate.clone(),
        args: a.args.iter().map(|t| rename_term(t, map)).collect(),
    }
}

pub(crate) fn rename_goal(g: &Goal, map: &BTreeMap<Var, Var>) -> Goal {
    match g {
        Goal::Atom(a) => Goal::Atom(rename_atom(a, map)),
        Goal::Tensor(l, r) => Goal::tensor(rename_goal(l, map), rename_goal(r, map)),
        Goal::Exists(v, body) => Goal::exists(
            map.get(v).cloned().unwrap_or_else(|| v.clone()),
            rename_goal(body, map),
        ),
    }
}

/// A variant of `clause` whose quantified variables are all brand new.
pub fn rename_apart(clause: &HornClause, fresh: &VarGen) -> HornClause {
    if clause.vars().is_empty() {
        return clause.clone();
    }
    let map: BTreeMap<Var, Var> = clause
        .vars()
        .iter()
        .map(|v| (v.clone(), fresh.fresh(v.name_symbol().clone())))
        .collect();
    let vars: Vec<Var> = clause.vars().iter().map(|v| map[v].clone()).collect();
    HornClause::from_parts(
        rename_atom(clause.head(), &map),
        clause.body().map(|b| rename_goal(b, &map)),
        vars,
    )
}
