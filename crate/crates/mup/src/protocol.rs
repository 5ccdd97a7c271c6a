//! Wire messages: one JSON object per NDJSON line or WebSocket text frame,
//! discriminated by `"type"`. Terms travel as pretty-printed strings and
//! choice indices are 0-based.

use std::collections::BTreeMap;
use std::fmt;

use mup_core::engine::TraceEvent;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Provability: all alternatives must succeed, never asks.
    #[default]
    Pv,
    /// Execution: asks which alternative to take at each choice clause.
    Ex,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Pv => "pv",
            Mode::Ex => "ex",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pv" => Ok(Mode::Pv),
            "ex" => Ok(Mode::Ex),
            other => Err(format!("unknown mode `{other}`, expected pv or ex")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Load {
        source: String,
    },
    Query {
        goal: String,
        /// Defaults to pv.
        #[serde(default)]
        mode: Option<Mode>,
        /// Stream trace frames for this query.
        #[serde(default)]
        trace: bool,
    },
    Choice {
        request_id: usize,
        index: usize,
    },
    Next,
    Stop,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Loaded {
        clause_count: usize,
    },
    ChoiceRequest {
        request_id: usize,
        alternatives: Vec<String>,
        /// `line:column` of the choice clause in the loaded source.
        origin: Option<String>,
    },
    Answer {
        bindings: BTreeMap<String, String>,
    },
    Failure,
    DepthExceeded,
    /// Reply to `stop`.
    Stopped,
    Trace {
        event: TraceEvent,
    },
    Error {
        message: String,
        code: ErrorCode,
    },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            message: message.into(),
            code,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Valid JSON that is not a known message.
    BadMessage,
    BadJson,
    /// A choice that does not answer the outstanding request.
    StaleChoice,
    /// A query or load while a derivation is running or waiting for a
    /// choice, or `next` while it waits for a choice.
    Busy,
    /// `next` with no answer to continue from.
    NoActiveQuery,
    /// A choice index beyond the alternatives; the request stays open.
    OutOfRange,
    NoProgram,
    ParseError,
    EngineError,
}

/// Decode one frame, separating malformed JSON from unknown messages.
pub fn decode(text: &str) -> Result<ClientMessage, ServerMessage> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ServerMessage::error(ErrorCode::BadJson, e.to_string()))?;
    serde_json::from_value(value)
        .map_err(|e| ServerMessage::error(ErrorCode::BadMessage, e.to_string()))
}
