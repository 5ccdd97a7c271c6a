//! `mup run`: one query against one file, with an exit status.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use mup_core::engine::{
    make_script_provider, ChoiceRequest, ChoiceScript, Engine, ProveOutcome, SearchConfig,
    Termination, TraceEvent,
};
use mup_core::syntax::{render_bindings, SourceProgram};
use mup_core::{parse_goal, parse_program, VarGen};

use crate::protocol::Mode;
use crate::repl::{format_answer, prompt_choice, write_event};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub path: PathBuf,
    pub query: String,
    pub mode: Mode,
    /// Decisions for `ex`; without them `ex` asks on the terminal.
    pub script: Option<ChoiceScript>,
    pub cfg: SearchConfig,
    pub trace: bool,
}

/// Run the query and print its answers to `out`, one per line. Prompts,
/// trace lines and errors go to `err`; choices are read from `input`.
pub fn run_file<R, W, E>(opts: &RunOptions, input: &mut R, out: &mut W, err: &mut E) -> i32
where
    R: BufRead,
    W: Write,
    E: Write,
{
    match run(opts, input, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn run<R: BufRead, W: Write, E: Write>(
    opts: &RunOptions,
    input: &mut R,
    out: &mut W,
    err: &mut E,
) -> io::Result<i32> {
    let name = opts.path.display().to_string();
    let text = match std::fs::read_to_string(&opts.path) {
        Ok(text) => text,
        Err(e) => {
            writeln!(err, "cannot read {name}: {e}")?;
            return Ok(EXIT_ERROR);
        }
    };
    let program = match parse_program(&SourceProgram::new(text, name.clone())) {
        Ok(p) => p,
        Err(e) => {
            writeln!(err, "{name}:{e}")?;
            return Ok(EXIT_ERROR);
        }
    };
    let (goal, vars) = match parse_goal(&opts.query, &VarGen::new()) {
        Ok(parsed) => parsed,
        Err(e) => {
            writeln!(err, "query:{e}")?;
            return Ok(EXIT_ERROR);
        }
    };

    // trace lines are written as they happen, so they need their own handle
    let mut engine = Engine::new(&program, opts.cfg);
    if opts.trace {
        engine = engine.with_trace(|event: TraceEvent| {
            let _ = write_event(&mut io::stderr().lock(), &event);
        });
    }
    let result = match (opts.mode, &opts.script) {
        (Mode::Pv, _) => engine.pv(&goal),
        (Mode::Ex, Some(script)) => {
            let mut provider = make_script_provider(script.clone());
            let result = engine.ex(&goal, &mut provider);
            if result.is_ok() && !provider.remaining().is_empty() {
                writeln!(
                    err,
                    "warning: {} unused choices",
                    provider.remaining().len()
                )?;
            }
            result
        }
        (Mode::Ex, None) => {
            let mut provider = |req: &ChoiceRequest| prompt_choice(input, err, req);
            engine.ex(&goal, &mut provider)
        }
    };

    match result {
        Ok(ProveOutcome::Success(answers)) => {
            let mut answers = answers;
            for answer in answers.by_ref() {
                writeln!(out, "{}", format_answer(&render_bindings(&vars, &answer)))?;
            }
            if matches!(
                answers.termination(),
                Some(Termination::DepthLimited | Termination::StepLimit)
            ) {
                writeln!(err, "% search was cut off; further answers may exist")?;
            }
            Ok(EXIT_SUCCESS)
        }
        Ok(ProveOutcome::Failure) => {
            writeln!(out, "no.")?;
            Ok(EXIT_FAILURE)
        }
        Ok(ProveOutcome::DepthExceeded) => {
            writeln!(out, "depth limit exceeded.")?;
            Ok(EXIT_ERROR)
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            Ok(EXIT_ERROR)
        }
    }
}
