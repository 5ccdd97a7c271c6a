//! One protocol session: a loaded program and at most one derivation.
//!
//! The derivation runs on its own thread because `ex` blocks inside the
//! choice provider until the client answers. The session side validates
//! every client message against the shared run status and forwards
//! choices, `next` and `stop` over a channel. All outgoing frames, from
//! either side, go through one channel so their order is preserved.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};

use mup_core::engine::{
    ChoiceRequest, Engine, EngineError, ProveOutcome, RequestIds, SearchConfig, Termination,
    TraceEvent,
};
use mup_core::syntax::{render_bindings, SourceProgram};
use mup_core::{parse_goal, parse_program, Goal, Program, Var, VarGen};

use crate::protocol::{decode, ClientMessage, ErrorCode, Mode, ServerMessage};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Idle,
    Running,
    AwaitingChoice,
    /// An answer was sent; waiting for `next` or `stop`.
    Done,
}

#[derive(Clone, Copy, Debug)]
struct Pending {
    request_id: usize,
    arity: usize,
}

#[derive(Debug)]
struct Shared {
    status: RunStatus,
    /// Present exactly when the status is `AwaitingChoice`.
    pending: Option<Pending>,
}

enum Control {
    Choice(usize),
    Next,
    Stop,
}

struct Worker {
    control: Sender<Control>,
    cancel: Arc<AtomicBool>,
    handle: JoinHandle<()>,
}

pub struct Session {
    out: Sender<ServerMessage>,
    program: Option<Arc<Program>>,
    cfg: SearchConfig,
    ids: RequestIds,
    shared: Arc<Mutex<Shared>>,
    worker: Option<Worker>,
}

impl Session {
    pub fn new(out: Sender<ServerMessage>, cfg: SearchConfig) -> Self {
        Session {
            out,
            program: None,
            cfg,
            ids: RequestIds::new(),
            shared: Arc::new(Mutex::new(Shared {
                status: RunStatus::Idle,
                pending: None,
            })),
            worker: None,
        }
    }

    pub fn status(&self) -> RunStatus {
        self.lock().status
    }

    fn lock(&self) -> MutexGuard<'_, Shared> {
        self.shared.lock().expect("session state poisoned")
    }

    fn send(&self, msg: ServerMessage) {
        // the receiver only goes away when the connection is closing
        let _ = self.out.send(msg);
    }

    fn reply_error(&self, code: ErrorCode, message: impl Into<String>) {
        self.send(ServerMessage::error(code, message));
    }

    /// Handle one raw frame.
    pub fn handle_text(&mut self, text: &str) {
        match decode(text) {
            Ok(msg) => self.handle(msg),
            Err(reply) => self.send(reply),
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) {
        match msg {
            ClientMessage::Load { source } => self.load(&source),
            ClientMessage::Query { goal, mode, trace } => {
                self.query(&goal, mode.unwrap_or_default(), trace)
            }
            ClientMessage::Choice { request_id, index } => self.choice(request_id, index),
            ClientMessage::Next => self.next(),
            ClientMessage::Stop => {
                self.stop_worker();
                self.send(ServerMessage::Stopped);
            }
        }
    }

    fn is_busy(&self) -> bool {
        matches!(
            self.status(),
            RunStatus::Running | RunStatus::AwaitingChoice
        )
    }

    fn load(&mut self, source: &str) {
        if self.is_busy() {
            return self.reply_error(ErrorCode::Busy, "a query is still running");
        }
        match parse_program(&SourceProgram::new(source, "<session>")) {
            Ok(program) => {
                self.stop_worker();
                let clause_count = program.len();
                self.program = Some(Arc::new(program));
                self.send(ServerMessage::Loaded { clause_count });
            }
            Err(e) => self.reply_error(ErrorCode::ParseError, e.to_string()),
        }
    }

    fn query(&mut self, text: &str, mode: Mode, trace: bool) {
        if self.is_busy() {
            return self.reply_error(ErrorCode::Busy, "a query is still running");
        }
        let Some(program) = self.program.clone() else {
            return self.reply_error(ErrorCode::NoProgram, "load a program first");
        };
        let (goal, vars) = match parse_goal(text, &VarGen::new()) {
            Ok(parsed) => parsed,
            Err(e) => return self.reply_error(ErrorCode::ParseError, e.to_string()),
        };
        // a finished query is replaced silently
        self.stop_worker();
        self.lock().status = RunStatus::Running;
        let (control, inbox) = mpsc::channel();
        let cancel = Arc::new(AtomicBool::new(false));
        let run = Run {
            program,
            goal,
            vars,
            mode,
            trace,
            cfg: self.cfg,
            ids: self.ids.clone(),
            out: self.out.clone(),
            shared: Arc::clone(&self.shared),
            inbox,
            cancel: Arc::clone(&cancel),
        };
        let handle = thread::spawn(move || run.execute());
        self.worker = Some(Worker {
            control,
            cancel,
            handle,
        });
    }

    fn choice(&mut self, request_id: usize, index: usize) {
        // a pipelining client may answer before the request is out
        self.wait_settled();
        let mut shared = self.lock();
        let pending = match shared.pending {
            Some(p) if p.request_id == request_id => p,
            Some(p) => {
                drop(shared);
                return self.reply_error(
                    ErrorCode::StaleChoice,
                    format!(
                        "request {request_id} is not outstanding; {} is",
                        p.request_id
                    ),
                );
            }
            None => {
                drop(shared);
                return self.reply_error(
                    ErrorCode::StaleChoice,
                    format!("request {request_id} is not outstanding"),
                );
            }
        };
        if index >= pending.arity {
            drop(shared);
            return self.reply_error(
                ErrorCode::OutOfRange,
                format!(
                    "index {index} is out of range for {} alternatives",
                    pending.arity
                ),
            );
        }
        shared.pending = None;
        shared.status = RunStatus::Running;
        drop(shared);
        self.forward(Control::Choice(index));
    }

    fn next(&mut self) {
        self.wait_settled();
        match self.status() {
            RunStatus::Done => {
                self.lock().status = RunStatus::Running;
                self.forward(Control::Next);
            }
            RunStatus::Idle => {
                self.reply_error(ErrorCode::NoActiveQuery, "no answer to continue from")
            }
            RunStatus::Running | RunStatus::AwaitingChoice => {
                self.reply_error(ErrorCode::Busy, "the query is waiting for a choice")
            }
        }
    }

    fn forward(&self, control: Control) {
        if let Some(w) = &self.worker {
            let _ = w.control.send(control);
        }
    }

    /// Cancel and join the current derivation, if any, and go idle.
    fn stop_worker(&mut self) {
        if let Some(w) = self.worker.take() {
            w.cancel.store(true, Ordering::Relaxed);
            let _ = w.control.send(Control::Stop);
            let _ = w.handle.join();
        }
        let mut shared = self.lock();
        shared.status = RunStatus::Idle;
        shared.pending = None;
    }

    /// Block while a derivation is computing, i.e. until it answers, asks
    /// for a choice or ends.
    pub fn wait_settled(&self) {
        while self.status() == RunStatus::Running {
            thread::sleep(std::time::Duration::from_millis(2));
        }
    }

    /// Abort any derivation; call when the connection goes away.
    pub fn close(&mut self) {
        self.stop_worker();
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.stop_worker();
    }
}

/// Everything a derivation thread needs.
struct Run {
    program: Arc<Program>,
    goal: Goal,
    vars: Vec<Var>,
    mode: Mode,
    trace: bool,
    cfg: SearchConfig,
    ids: RequestIds,
    out: Sender<ServerMessage>,
    shared: Arc<Mutex<Shared>>,
    inbox: Receiver<Control>,
    cancel: Arc<AtomicBool>,
}

impl Run {
    fn set(&self, status: RunStatus, pending: Option<Pending>) {
        let mut shared = self.shared.lock().expect("session state poisoned");
        shared.status = status;
        shared.pending = pending;
    }

    fn send(&self, msg: ServerMessage) {
        let _ = self.out.send(msg);
    }

    fn execute(self) {
        let mut engine = Engine::new(&self.program, self.cfg)
            .with_request_ids(self.ids.clone())
            .with_cancel(Arc::clone(&self.cancel));
        if self.trace {
            let out = self.out.clone();
            engine = engine.with_trace(move |event: TraceEvent| {
                let _ = out.send(ServerMessage::Trace { event });
            });
        }
        let result = match self.mode {
            Mode::Pv => engine.pv(&self.goal),
            Mode::Ex => {
                let mut provider = |req: &ChoiceRequest| self.ask(req);
                engine.ex(&self.goal, &mut provider)
            }
        };
        match result {
            Ok(ProveOutcome::Success(mut answers)) => {
                let mut answer = answers.next();
                while let Some(a) = answer {
                    self.set(RunStatus::Done, None);
                    self.send(ServerMessage::Answer {
                        bindings: render_bindings(&self.vars, &a).into_iter().collect(),
                    });
                    match self.inbox.recv() {
                        Ok(Control::Next) => answer = answers.next(),
                        _ => return,
                    }
                }
                if self.cancel.load(Ordering::Relaxed) {
                    return;
                }
                self.finish(match answers.termination() {
                    Some(Termination::Exhausted) | None => ServerMessage::Failure,
                    Some(Termination::Cancelled) => return,
                    Some(_) => ServerMessage::DepthExceeded,
                });
            }
            Ok(ProveOutcome::Failure) => self.finish(ServerMessage::Failure),
            Ok(ProveOutcome::DepthExceeded) => self.finish(ServerMessage::DepthExceeded),
            // stop was requested; the session replies
            Err(EngineError::Cancelled) => {}
            Err(e) => self.finish(ServerMessage::error(ErrorCode::EngineError, e.to_string())),
        }
    }

    /// Mark the session idle before the final frame so a client reacting
    /// to it can start a new query straight away.
    fn finish(&self, msg: ServerMessage) {
        self.set(RunStatus::Idle, None);
        self.send(msg);
    }

    fn ask(&self, req: &ChoiceRequest) -> Result<usize, EngineError> {
        self.set(
            RunStatus::AwaitingChoice,
            Some(Pending {
                request_id: req.request_id,
                arity: req.arity(),
            }),
        );
        self.send(ServerMessage::ChoiceRequest {
            request_id: req.request_id,
            alternatives: req.labels().map(str::to_string).collect(),
            origin: req.group_origin.map(|p| p.to_string()),
        });
        match self.inbox.recv() {
            Ok(Control::Choice(index)) => Ok(index),
            _ => Err(EngineError::Cancelled),
        }
    }
}
