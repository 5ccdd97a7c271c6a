//! Concrete syntax for programs and queries.
//!
//! ```text
//! item  := leaf ("(+)" leaf)* "."
//! leaf  := ["!"] atom [":-" conj]
//! conj  := primary ("," primary)*
//! primary := atom | "(" conj ")"
//! ```
//!
//! `⊕` is accepted for `(+)` and `⊗` for `,`. `%` starts a line comment.
//! Lowercase-initial identifiers are predicates and functors, uppercase- or
//! `_`-initial identifiers are variables. Digit-initial tokens such as `40K`
//! are constants and are lowercased (`40k`); quote them (`'40K'`) to keep
//! case.

mod lexer;
mod parser;
mod pretty;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::term::SourcePos;

pub use parser::{parse_goal, parse_program, parse_program_with};
pub use pretty::{pretty, render_bindings, symbol_text, Pretty, Printer};

/// Program text together with where it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub text: String,
    /// File path, or `<repl>`.
    pub origin: String,
}

impl SourceProgram {
    pub fn new(text: impl Into<String>, origin: impl Into<String>) -> Self {
        SourceProgram {
            text: text.into(),
            origin: origin.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub(crate) fn new(pos: SourcePos, message: String, expected: Vec<String>) -> Self {
        ParseError {
            line: pos.line,
            column: pos.column,
            message,
            expected,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl core::error::Error for ParseError {}
