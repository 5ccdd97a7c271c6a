use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, SourceProgram};
use crate::term::{Atom, DFormula, Goal, HornClause, Program, SourcePos, Term, Var, VarGen};

struct Parser<'g> {
    tokens: Vec<Token>,
    at: usize,
    fresh: &'g VarGen,
    /// Named variables of the clause leaf (or query) being parsed.
    scope: BTreeMap<String, Var>,
    /// Variables in first-occurrence order.
    order: Vec<Var>,
}

impl<'g> Parser<'g> {
    fn new(text: &str, fresh: &'g VarGen) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: tokenize(text)?,
            at: 0,
            fresh,
            scope: BTreeMap::new(),
            order: Vec::new(),
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError::new(
            t.pos,
            format!("unexpected {}", t.tok.describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(&[expected]))
        }
    }

    fn reset_scope(&mut self) {
        self.scope.clear();
        self.order.clear();
    }

    fn variable(&mut self, name: String) -> Var {
        if name == "_" {
            let v = self.fresh.fresh("_");
            self.order.push(v.clone());
            return v;
        }
        if let Some(v) = self.scope.get(&name) {
            return v.clone();
        }
        let v = self.fresh.fresh(name.as_str());
        self.scope.insert(name, v.clone());
        self.order.push(v.clone());
        v
    }

    fn name(&mut self) -> Option<String> {
        match &self.peek().tok {
            Tok::Name(n) | Tok::Quoted(n) => {
                let n = n.clone();
                self.advance();
                Some(n)
            }
            _ => None,
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if let Tok::Var(name) = &self.peek().tok {
            let name = name.clone();
            self.advance();
            return Ok(Term::Var(self.variable(name)));
        }
        let Some(functor) = self.name() else {
            return Err(self.error(&["variable", "name"]));
        };
        let args = self.arguments()?;
        Ok(Term::compound(functor.as_str(), args))
    }

    fn arguments(&mut self) -> Result<Vec<Term>, ParseError> {
        if !self.eat(&Tok::LParen) {
            return Ok(Vec::new());
        }
        let mut args = vec![self.term()?];
        loop {
            if self.eat(&Tok::Comma) {
                args.push(self.term()?);
            } else if self.eat(&Tok::RParen) {
                return Ok(args);
            } else {
                return Err(self.error(&["`,`", "`)`"]));
            }
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let Some(pred) = self.name() else {
            return Err(self.error(&["predicate name"]));
        };
        let args = self.arguments()?;
        Ok(Atom::new(pred.as_str(), args))
    }

    /// conj := primary ("," primary)*, right-nested.
    fn conjunction(&mut self) -> Result<Goal, ParseError> {
        let first = self.primary()?;
        if self.eat(&Tok::Comma) {
            let rest = self.conjunction()?;
            Ok(Goal::tensor(first, rest))
        } else {
            Ok(first)
        }
    }

    fn primary(&mut self) -> Result<Goal, ParseError> {
        if self.eat(&Tok::LParen) {
            let g = self.conjunction()?;
            self.expect(Tok::RParen, "`)`")?;
            Ok(g)
        } else {
            Ok(Goal::Atom(self.atom()?))
        }
    }

    fn leaf(&mut self) -> Result<HornClause, ParseError> {
        self.reset_scope();
        self.eat(&Tok::Bang);
        let head = self.atom()?;
        let body = if self.eat(&Tok::Neck) {
            Some(self.conjunction()?)
        } else {
            None
        };
        Ok(HornClause::new(head, body))
    }

    fn item(&mut self) -> Result<DFormula, ParseError> {
        let mut leaves = vec![self.leaf()?];
        loop {
            if self.eat(&Tok::Plus) {
                leaves.push(self.leaf()?);
            } else if self.eat(&Tok::Dot) {
                break;
            } else {
                let mut expected = vec!["`(+)`", "`.`"];
                if leaves.last().is_some_and(HornClause::is_fact) {
                    expected.insert(0, "`:-`");
                }
                return Err(self.error(&expected));
            }
        }
        Ok(DFormula::choice(leaves).expect("at least one leaf"))
    }
}

/// Parse a program text. Clause variables are drawn from `fresh`.
pub fn parse_program_with(src: &SourceProgram, fresh: &VarGen) -> Result<Program, ParseError> {
    let mut p = Parser::new(&src.text, fresh)?;
    let mut program = Program::default();
    while p.peek().tok != Tok::Eof {
        let pos: SourcePos = p.peek().pos;
        let d = p.item()?;
        program.push(d, Some(format!("{}:{}", src.origin, pos.line)), Some(pos));
    }
    Ok(program)
}

pub fn parse_program(src: &SourceProgram) -> Result<Program, ParseError> {
    parse_program_with(src, &VarGen::new())
}

/// Parse a query. Free variables are closed existentially, outermost first
/// in order of first occurrence, and returned alongside the goal.
///
/// A leading `?-` and a trailing `.` are accepted.
pub fn parse_goal(text: &str, fresh: &VarGen) -> Result<(Goal, Vec<Var>), ParseError> {
    let mut p = Parser::new(text, fresh)?;
    p.eat(&Tok::Query);
    let body = p.conjunction()?;
    p.eat(&Tok::Dot);
    if p.peek().tok != Tok::Eof {
        return Err(p.error(&["`,`", "end of query"]));
    }
    let vars = core::mem::take(&mut p.order);
    Ok((Goal::close_over(&vars, body), vars))
}
