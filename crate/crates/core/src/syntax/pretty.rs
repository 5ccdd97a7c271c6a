use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::lexer::{is_name_char, is_name_start};
use crate::term::{Atom, DFormula, Goal, HornClause, Program, Term, Var};

/// Things that have a concrete-syntax rendering.
pub trait Pretty {
    /// Every variable occurrence, in order (duplicates included).
    fn visit_vars(&self, out: &mut Vec<Var>);
    fn render(&self, p: &Printer, out: &mut String);
}

/// Assigns display names to variables.
///
/// A variable prints under its own name unless a different variable already
/// claimed that name, in which case it gets a numeric suffix (`X`, `X_2`).
/// Anonymous variables print as `_` when they occur once.
#[derive(Clone, Debug, Default)]
pub struct Printer {
    names: BTreeMap<Var, String>,
    taken: BTreeSet<String>,
    anon_counter: usize,
}

impl Printer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Names for everything `x` mentions.
    pub fn for_item<T: Pretty + ?Sized>(x: &T) -> Self {
        let mut p = Printer::new();
        p.prepare(x);
        p
    }

    /// Claim names for `vars` before anything else is printed.
    pub fn reserve(&mut self, vars: &[Var]) {
        let mut occ = Vec::new();
        occ.extend(vars.iter().cloned());
        self.assign(&occ);
    }

    pub fn prepare<T: Pretty + ?Sized>(&mut self, x: &T) {
        let mut occ = Vec::new();
        x.visit_vars(&mut occ);
        self.assign(&occ);
    }

    fn assign(&mut self, occurrences: &[Var]) {
        let mut counts: BTreeMap<&Var, usize> = BTreeMap::new();
        for v in occurrences {
            *counts.entry(v).or_default() += 1;
        }
        // first pass: the first variable carrying a name gets it verbatim
        let mut pending = Vec::new();
        let mut seen = BTreeSet::new();
        for v in occurrences {
            if self.names.contains_key(v) || !seen.insert(v.id()) {
                continue;
            }
            if v.is_anonymous() {
                if counts[v] > 1 {
                    pending.push(v.clone());
                } else {
                    self.names.insert(v.clone(), String::from("_"));
                }
            } else if self.taken.insert(String::from(v.name())) {
                self.names.insert(v.clone(), String::from(v.name()));
            } else {
                pending.push(v.clone());
            }
        }
        for v in pending {
            let name = if v.is_anonymous() {
                loop {
                    self.anon_counter += 1;
                    let candidate = format!("_G{}", self.anon_counter);
                    if !self.taken.contains(&candidate) {
                        break candidate;
                    }
                }
            } else {
                let mut k = 2;
                loop {
                    let candidate = format!("{}_{}", v.name(), k);
                    if !self.taken.contains(&candidate) {
                        break candidate;
                    }
                    k += 1;
                }
            };
            self.taken.insert(name.clone());
            self.names.insert(v, name);
        }
    }

    pub fn var_name(&self, v: &Var) -> String {
        match self.names.get(v) {
            Some(n) => n.clone(),
            None => format!("_G{}", v.id()),
        }
    }

    pub fn render<T: Pretty + ?Sized>(&self, x: &T) -> String {
        let mut out = String::new();
        x.render(self, &mut out);
        out
    }
}

/// Render a symbol, quoting it when it would not lex back as the same name.
pub fn symbol_text(s: &str, out: &mut String) {
    let mut chars = s.chars();
    let plain = match chars.next() {
        Some(c) if is_name_start(c) => chars.all(is_name_char),
        Some(c) if c.is_ascii_digit() => chars.all(|c| is_name_char(c) && !c.is_ascii_uppercase()),
        _ => false,
    };
    if plain {
        out.push_str(s);
        return;
    }
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('\'');
}

impl Pretty for Term {
    fn visit_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => out.push(v.clone()),
            Term::Compound { args, .. } => args.iter().for_each(|a| a.visit_vars(out)),
        }
    }

    fn render(&self, p: &Printer, out: &mut String) {
        match self {
            Term::Var(v) => out.push_str(&p.var_name(v)),
            Term::Compound { functor, args } => {
                symbol_text(functor, out);
                render_args(args, p, out);
            }
        }
    }
}

fn render_args(args: &[Term], p: &Printer, out: &mut String) {
    if args.is_empty() {
        return;
    }
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        a.render(p, out);
    }
    out.push(')');
}

impl Pretty for Atom {
    fn visit_vars(&self, out: &mut Vec<Var>) {
        self.args.iter().for_each(|a| a.visit_vars(out));
    }

    fn render(&self, p: &Printer, out: &mut String) {
        symbol_text(&self.predicate, out);
        render_args(&self.args, p, out);
    }
}

impl Pretty for Goal {
    fn visit_vars(&self, out: &mut Vec<Var>) {
        match self {
            Goal::Atom(a) => a.visit_vars(out),
            Goal::Tensor(l, r) => {
                l.visit_vars(out);
                r.visit_vars(out);
            }
            Goal::Exists(v, body) => {
                out.push(v.clone());
                body.visit_vars(out);
            }
        }
    }

    /// Existentials are implicit in concrete syntax and print as their body.
    fn render(&self, p: &Printer, out: &mut String) {
        match self {
            Goal::Atom(a) => a.render(p, out),
            Goal::Tensor(l, r) => {
                let grouped = matches!(strip(l), Goal::Tensor(..));
                if grouped {
                    out.push('(');
                }
                l.render(p, out);
                if grouped {
                    out.push(')');
                }
                out.push_str(", ");
                r.render(p, out);
            }
            Goal::Exists(_, body) => body.render(p, out),
        }
    }
}

fn strip(g: &Goal) -> &Goal {
    g.strip_exists().1
}

impl Pretty for HornClause {
    fn visit_vars(&self, out: &mut Vec<Var>) {
        self.head().visit_vars(out);
        if let Some(b) = self.body() {
            b.visit_vars(out);
        }
    }

    fn render(&self, p: &Printer, out: &mut String) {
        self.head().render(p, out);
        if let Some(b) = self.body() {
            out.push_str(" :- ");
            b.render(p, out);
        }
    }
}

impl Pretty for DFormula {
    fn visit_vars(&self, out: &mut Vec<Var>) {
        for leaf in self.leaves() {
            leaf.visit_vars(out);
        }
    }

    /// Each leaf is its own variable scope.
    fn render(&self, _p: &Printer, out: &mut String) {
        for (i, leaf) in self.leaves().into_iter().enumerate() {
            if i > 0 {
                out.push_str(" (+) ");
            }
            leaf.render(&Printer::for_item(leaf), out);
        }
    }
}

impl Pretty for Program {
    fn visit_vars(&self, out: &mut Vec<Var>) {
        for d in self.clauses() {
            d.visit_vars(out);
        }
    }

    fn render(&self, p: &Printer, out: &mut String) {
        for d in self.clauses() {
            d.render(p, out);
            out.push_str(".\n");
        }
    }
}

/// Concrete syntax for any term, formula or program.
pub fn pretty<T: Pretty + ?Sized>(x: &T) -> String {
    Printer::for_item(x).render(x)
}

/// `X = term` lines for an answer, in the order of `vars`. Variables whose
/// name starts with `_` are not reported.
pub fn render_bindings(vars: &[Var], answer: &crate::subst::Substitution) -> Vec<(String, String)> {
    let mut p = Printer::new();
    p.reserve(vars);
    for v in vars {
        if let Some(t) = answer.get(v) {
            p.prepare(t);
        }
    }
    let mut out = Vec::new();
    for v in vars {
        if v.name().starts_with('_') {
            continue;
        }
        if let Some(t) = answer.get(v) {
            let mut s = String::new();
            let _ = write!(s, "{}", p.render(t));
            out.push((p.var_name(v), s));
        }
    }
    out
}
