//! File runner, REPL and session service for the mup interpreter.

pub mod protocol;
pub mod repl;
pub mod run;
pub mod server;
pub mod session;

pub use protocol::Mode;
