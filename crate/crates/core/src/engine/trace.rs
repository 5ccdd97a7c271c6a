use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use super::choice::ChoiceRequest;
use super::OutcomeKind;

/// One step of a derivation, as shown to a user.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum TraceEvent {
    EnterPhase1 { clause: String },
    ChoiceRequested { request: ChoiceRequest },
    ChoiceTaken { request_id: usize, index: usize },
    VerifyUnchosen { index: usize, outcome: OutcomeKind },
    EnterGoal { goal: String, depth: usize },
    Backchain { clause: String, depth: usize },
    Answer { bindings: Vec<(String, String)> },
    Failed,
    DepthHit { depth: usize },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::EnterPhase1 { clause } => write!(f, "load {clause}"),
            TraceEvent::ChoiceRequested { request } => {
                write!(f, "choice #{} among", request.request_id)?;
                for (i, alt) in &request.alternatives {
                    write!(f, " [{i}] {alt}")?;
                }
                Ok(())
            }
            TraceEvent::ChoiceTaken { request_id, index } => {
                write!(f, "choice #{request_id} took [{index}]")
            }
            TraceEvent::VerifyUnchosen { index, outcome } => {
                write!(f, "verify unchosen [{index}]: {outcome}")
            }
            TraceEvent::EnterGoal { goal, depth } => write!(f, "{depth:>3} call {goal}"),
            TraceEvent::Backchain { clause, depth } => write!(f, "{depth:>3} use  {clause}"),
            TraceEvent::Answer { bindings } => {
                f.write_str("answer")?;
                for (v, t) in bindings {
                    write!(f, " {v} = {t}")?;
                }
                Ok(())
            }
            TraceEvent::Failed => f.write_str("failed"),
            TraceEvent::DepthHit { depth } => write!(f, "{depth:>3} depth limit"),
        }
    }
}

pub trait TraceSink {
    fn record(&mut self, event: TraceEvent);
}

impl<F: FnMut(TraceEvent)> TraceSink for F {
    fn record(&mut self, event: TraceEvent) {
        self(event)
    }
}

/// A sink that keeps events in memory; clones share the same log.
#[derive(Clone, Debug, Default)]
pub struct TraceLog(Rc<RefCell<Vec<TraceEvent>>>);

impl TraceLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Remove and return everything recorded so far.
    pub fn take(&self) -> Vec<TraceEvent> {
        core::mem::take(&mut *self.0.borrow_mut())
    }

    pub fn snapshot(&self) -> Vec<TraceEvent> {
        self.0.borrow().clone()
    }

    pub fn len(&self) -> usize {
        self.0.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.borrow().is_empty()
    }
}

impl TraceSink for TraceLog {
    fn record(&mut self, event: TraceEvent) {
        self.0.borrow_mut().push(event);
    }
}

pub(crate) type Tracer = Rc<RefCell<dyn TraceSink>>;
