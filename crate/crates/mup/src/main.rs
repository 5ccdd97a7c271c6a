use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mup::repl::Repl;
use mup::run::{run_file, RunOptions};
use mup::{server, Mode};
use mup_core::engine::{ChoiceScript, SearchConfig, DEFAULT_DEPTH_LIMIT};

#[derive(Parser)]
#[command(
    name = "mup",
    version,
    about = "Horn clauses with choice-disjunctive clauses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one query against a program file.
    Run {
        file: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, value_enum, default_value_t = Mode::Pv)]
        mode: Mode,
        /// 0-based alternative for each choice clause, in program order.
        #[arg(long, value_delimiter = ',')]
        choices: Option<Vec<usize>>,
        #[command(flatten)]
        search: SearchArgs,
        /// Print derivation events to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Interactive loop.
    Repl {
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Speak the session protocol over WebSocket or stdio.
    Serve {
        #[arg(long, required_unless_present = "stdio", conflicts_with = "stdio")]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// NDJSON on standard input and output.
        #[arg(long)]
        stdio: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
}

#[derive(Args)]
struct SearchArgs {
    /// Backchaining depth limit.
    #[arg(long, default_value_t = DEFAULT_DEPTH_LIMIT, value_parser = positive)]
    depth: usize,
    #[arg(long)]
    no_occurs_check: bool,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err("expected a positive integer".into()),
    }
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        let mut cfg = SearchConfig::with_depth(self.depth);
        cfg.unify.occurs_check = !self.no_occurs_check;
        cfg
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            file,
            query,
            mode,
            choices,
            search,
            trace,
        } => {
            let opts = RunOptions {
                path: file,
                query,
                mode,
                script: choices.map(ChoiceScript::new),
                cfg: search.config(),
                trace,
            };
            let code = run_file(
                &opts,
                &mut io::stdin().lock(),
                &mut io::stdout().lock(),
                &mut io::stderr().lock(),
            );
            ExitCode::from(code as u8)
        }
        Command::Repl { search } => {
            let mut repl = Repl::new(io::stdin().lock(), io::stdout().lock(), search.config());
            report(repl.run())
        }
        Command::Serve {
            port,
            host,
            stdio,
            search,
        } => {
            let cfg = search.config();
            if stdio {
                report(server::serve_stdio(cfg))
            } else {
                let port = port.expect("clap requires --port without --stdio");
                report(server::serve_ws((host.as_str(), port), cfg))
            }
        }
    }
}

fn report(result: io::Result<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
