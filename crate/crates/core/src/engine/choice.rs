use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::term::SourcePos;

/// A pending decision at a choice-disjunctive clause.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChoiceRequest {
    pub request_id: usize,
    /// `(index, rendered clause)` in source order, indices `0..n`.
    pub alternatives: Vec<(usize, String)>,
    /// Where the choice clause starts in the source, when known.
    pub group_origin: Option<SourcePos>,
}

impl ChoiceRequest {
    pub fn arity(&self) -> usize {
        self.alternatives.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.alternatives.iter().map(|(_, s)| s.as_str())
    }
}

/// Whoever picks the alternative at a choice-disjunctive clause.
///
/// `choose` is called synchronously and may block for as long as it takes a
/// decision to arrive.
pub trait ChoiceProvider {
    fn choose(&mut self, request: &ChoiceRequest) -> Result<usize, EngineError>;
}

impl<F> ChoiceProvider for F
where
    F: FnMut(&ChoiceRequest) -> Result<usize, EngineError>,
{
    fn choose(&mut self, request: &ChoiceRequest) -> Result<usize, EngineError> {
        self(request)
    }
}

/// Pre-recorded decisions, consumed left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChoiceScript {
    pub decisions: Vec<usize>,
}

impl ChoiceScript {
    pub fn new(decisions: impl Into<Vec<usize>>) -> Self {
        ChoiceScript {
            decisions: decisions.into(),
        }
    }
}

/// Replays a [`ChoiceScript`]; never blocks.
#[derive(Clone, Debug)]
pub struct ScriptProvider {
    script: ChoiceScript,
    used: usize,
}

impl ScriptProvider {
    /// Decisions consumed so far.
    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> &[usize] {
        &self.script.decisions[self.used..]
    }
}

impl ChoiceProvider for ScriptProvider {
    fn choose(&mut self, request: &ChoiceRequest) -> Result<usize, EngineError> {
        let Some(&index) = self.script.decisions.get(self.used) else {
            return Err(EngineError::ScriptExhausted);
        };
        self.used += 1;
        if index >= request.arity() {
            return Err(EngineError::OutOfRange {
                index,
                arity: request.arity(),
            });
        }
        Ok(index)
    }
}

pub fn make_script_provider(script: ChoiceScript) -> ScriptProvider {
    ScriptProvider { script, used: 0 }
}

/// Shared counter for choice request ids.
#[derive(Clone, Debug, Default)]
pub struct RequestIds(Arc<AtomicUsize>);

impl RequestIds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next(&self) -> usize {
        self.0.fetch_add(1, Ordering::Relaxed)
    }
}

/// Ways a run can end without an outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EngineError {
    /// A script provider ran out of decisions before the last choice.
    ScriptExhausted,
    /// A provider answered with an index outside the alternatives.
    OutOfRange { index: usize, arity: usize },
    /// The run was stopped from outside.
    Cancelled,
    /// Provider-specific failure, e.g. its input closed.
    Provider(String),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::ScriptExhausted => f.write_str("choice script exhausted"),
            EngineError::OutOfRange { index, arity } => {
                write!(f, "choice {index} out of range for {arity} alternatives")
            }
            EngineError::Cancelled => f.write_str("derivation cancelled"),
            EngineError::Provider(msg) => write!(f, "choice provider failed: {msg}"),
        }
    }
}

impl core::error::Error for EngineError {}
