//! Line-oriented interactive loop. Commands and choice answers are read
//! from the same input, so the loop runs unchanged over a terminal or an
//! in-memory buffer.

use std::io::{self, BufRead, Write};
use std::path::Path;

use mup_core::engine::{
    Answers, ChoiceRequest, Engine, EngineError, ProveOutcome, RequestIds, SearchConfig,
    Termination, TraceEvent, TraceLog,
};
use mup_core::syntax::{render_bindings, SourceProgram};
use mup_core::{parse_goal, parse_program, Program, Var, VarGen};

use crate::protocol::Mode;

pub const PROMPT: &str = "mup> ";

const HELP: &str = "\
commands:
  :load PATH        load a program
  :mode pv|ex       pv proves, ex asks at each choice clause
  :depth N          backchaining depth limit
  :trace on|off     print derivation events
  ?- GOAL.          run a query
  ;                 next answer
  :quit";

/// `X = a, Y = b`, or `yes.` when the query has no variables.
pub fn format_answer(bindings: &[(String, String)]) -> String {
    if bindings.is_empty() {
        return "yes.".to_string();
    }
    bindings
        .iter()
        .map(|(v, t)| format!("{v} = {t}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// What to print when an answer sequence ends.
pub fn end_message(termination: Option<Termination>) -> &'static str {
    match termination {
        Some(Termination::DepthLimited | Termination::StepLimit) => "depth limit exceeded.",
        _ => "no.",
    }
}

/// Show a choice request and read a 1-based selection, re-prompting until
/// it is in range. Returns the 0-based index.
pub fn prompt_choice<R: BufRead, W: Write>(
    input: &mut R,
    out: &mut W,
    req: &ChoiceRequest,
) -> Result<usize, EngineError> {
    let io_err = |e: io::Error| EngineError::Provider(e.to_string());
    let n = req.arity();
    match req.group_origin {
        Some(pos) => writeln!(out, "choice at {pos}:"),
        None => writeln!(out, "choice:"),
    }
    .map_err(io_err)?;
    for (i, alt) in req.alternatives.iter() {
        writeln!(out, "  [{}] {alt}", i + 1).map_err(io_err)?;
    }
    loop {
        write!(out, "choose [1] … [{n}]: ").map_err(io_err)?;
        out.flush().map_err(io_err)?;
        let mut line = String::new();
        if input.read_line(&mut line).map_err(io_err)? == 0 {
            return Err(EngineError::Provider("input closed".into()));
        }
        match line.trim().parse::<usize>() {
            Ok(k) if (1..=n).contains(&k) => return Ok(k - 1),
            _ => writeln!(out, "enter a number from 1 to {n}").map_err(io_err)?,
        }
    }
}

pub struct Repl<R, W> {
    input: R,
    out: W,
    program: Option<Program>,
    mode: Mode,
    cfg: SearchConfig,
    trace: Option<TraceLog>,
    ids: RequestIds,
    /// Answers left over from the last query, for `;`.
    pending: Option<(Vec<Var>, Answers)>,
}

impl<R: BufRead, W: Write> Repl<R, W> {
    pub fn new(input: R, out: W, cfg: SearchConfig) -> Self {
        Repl {
            input,
            out,
            program: None,
            mode: Mode::Pv,
            cfg,
            trace: None,
            ids: RequestIds::new(),
            pending: None,
        }
    }

    pub fn into_output(self) -> W {
        self.out
    }

    /// Read and run commands until `:quit` or the end of the input.
    pub fn run(&mut self) -> io::Result<()> {
        loop {
            self.flush_trace()?;
            write!(self.out, "{PROMPT}")?;
            self.out.flush()?;
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                return Ok(());
            }
            if !self.command(line.trim())? {
                return Ok(());
            }
        }
    }

    /// Run one command; `false` means quit.
    fn command(&mut self, line: &str) -> io::Result<bool> {
        let (word, arg) = match line.split_once(char::is_whitespace) {
            Some((w, a)) => (w, a.trim()),
            None => (line, ""),
        };
        match word {
            "" => {}
            ":quit" | ":q" => return Ok(false),
            ":help" => writeln!(self.out, "{HELP}")?,
            ":load" if !arg.is_empty() => self.load(Path::new(arg))?,
            ":mode" => match arg.parse::<Mode>() {
                Ok(mode) => {
                    self.mode = mode;
                    writeln!(self.out, "mode {mode}.")?;
                }
                Err(e) => writeln!(self.out, "{e}")?,
            },
            ":depth" => match arg.parse::<usize>() {
                Ok(n) if n >= 1 => {
                    self.cfg.depth_limit = n;
                    writeln!(self.out, "depth {n}.")?;
                }
                _ => writeln!(self.out, "usage: :depth N with N >= 1")?,
            },
            ":trace" => match arg {
                "on" => {
                    self.trace = Some(TraceLog::new());
                    writeln!(self.out, "trace on.")?;
                }
                "off" => {
                    self.trace = None;
                    writeln!(self.out, "trace off.")?;
                }
                _ => writeln!(self.out, "usage: :trace on|off")?,
            },
            ";" => self.next()?,
            _ if line.starts_with("?-") => self.query(line)?,
            _ => writeln!(self.out, "unknown command `{line}`; :help lists commands")?,
        }
        Ok(true)
    }

    fn load(&mut self, path: &Path) -> io::Result<()> {
        let text = match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => return writeln!(self.out, "cannot read {}: {e}", path.display()),
        };
        match parse_program(&SourceProgram::new(text, path.display().to_string())) {
            Ok(program) => {
                writeln!(self.out, "loaded {} clauses.", program.len())?;
                self.program = Some(program);
                self.pending = None;
            }
            Err(e) => writeln!(self.out, "{}:{e}", path.display())?,
        }
        Ok(())
    }

    fn query(&mut self, text: &str) -> io::Result<()> {
        self.pending = None;
        let Some(program) = &self.program else {
            return writeln!(self.out, "no program; use :load PATH");
        };
        let (goal, vars) = match parse_goal(text, &VarGen::new()) {
            Ok(parsed) => parsed,
            Err(e) => return writeln!(self.out, "{e}"),
        };
        let mut engine = Engine::new(program, self.cfg).with_request_ids(self.ids.clone());
        if let Some(log) = &self.trace {
            engine = engine.with_trace(log.clone());
        }
        let result = match self.mode {
            Mode::Pv => engine.pv(&goal),
            Mode::Ex => {
                let (input, out, trace) = (&mut self.input, &mut self.out, &self.trace);
                let mut provider = |req: &ChoiceRequest| {
                    print_trace(out, trace).map_err(|e| EngineError::Provider(e.to_string()))?;
                    prompt_choice(input, out, req)
                };
                engine.ex(&goal, &mut provider)
            }
        };
        self.flush_trace()?;
        match result {
            Ok(ProveOutcome::Success(answers)) => {
                self.pending = Some((vars, answers));
                self.next()
            }
            Ok(ProveOutcome::Failure) => writeln!(self.out, "no."),
            Ok(ProveOutcome::DepthExceeded) => writeln!(self.out, "depth limit exceeded."),
            Err(e) => writeln!(self.out, "error: {e}"),
        }
    }

    fn next(&mut self) -> io::Result<()> {
        let Some((vars, answers)) = &mut self.pending else {
            return writeln!(self.out, "no query to continue; use ?- GOAL.");
        };
        match answers.next() {
            Some(answer) => {
                let line = format_answer(&render_bindings(vars, &answer));
                self.flush_trace()?;
                writeln!(self.out, "{line}")
            }
            None => {
                let msg = end_message(answers.termination());
                self.pending = None;
                self.flush_trace()?;
                writeln!(self.out, "{msg}")
            }
        }
    }

    fn flush_trace(&mut self) -> io::Result<()> {
        print_trace(&mut self.out, &self.trace)
    }
}

fn print_trace<W: Write>(out: &mut W, trace: &Option<TraceLog>) -> io::Result<()> {
    if let Some(log) = trace {
        for event in log.take() {
            write_event(out, &event)?;
        }
    }
    Ok(())
}

pub fn write_event<W: Write>(out: &mut W, event: &TraceEvent) -> io::Result<()> {
    writeln!(out, "% {event}")
}
