//! Transports for [`Session`]: NDJSON over a reader/writer pair, and
//! WebSocket text frames at `/ws`. Every connection gets its own session.

// the large error types are tungstenite's own
#![allow(clippy::result_large_err)]

use std::io::{self, BufRead, ErrorKind, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver};
use std::thread;
use std::time::Duration;

use mup_core::engine::SearchConfig;
use tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tungstenite::http::StatusCode;
use tungstenite::{Message, WebSocket};

use crate::protocol::ServerMessage;
use crate::session::Session;

pub const WS_PATH: &str = "/ws";

/// How often a WebSocket connection checks for outgoing frames while
/// waiting for the client.
const POLL: Duration = Duration::from_millis(20);

/// Serve one session as NDJSON until `input` ends.
pub fn serve_lines<R, W>(input: R, output: W, cfg: SearchConfig) -> io::Result<()>
where
    R: BufRead,
    W: Write + Send + 'static,
{
    let (tx, rx) = mpsc::channel();
    let writer = thread::spawn(move || write_lines(rx, output));
    let mut session = Session::new(tx, cfg);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        session.handle_text(&line);
    }
    // let a running query report before the input's end cancels it;
    // dropping the session then closes the channel and ends the writer
    session.wait_settled();
    session.close();
    drop(session);
    writer.join().expect("writer thread panicked")
}

fn write_lines<W: Write>(rx: Receiver<ServerMessage>, mut output: W) -> io::Result<()> {
    for msg in rx {
        writeln!(output, "{}", msg.to_json())?;
        output.flush()?;
    }
    Ok(())
}

pub fn serve_stdio(cfg: SearchConfig) -> io::Result<()> {
    serve_lines(io::stdin().lock(), io::stdout(), cfg)
}

/// Bind and accept WebSocket connections forever.
pub fn serve_ws(addr: impl ToSocketAddrs, cfg: SearchConfig) -> io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    eprintln!("listening on ws://{}{WS_PATH}", listener.local_addr()?);
    accept_loop(listener, cfg)
}

/// Accept connections on an already bound listener.
pub fn accept_loop(listener: TcpListener, cfg: SearchConfig) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        thread::spawn(move || {
            if let Err(e) = serve_connection(stream, cfg) {
                eprintln!("connection closed: {e}");
            }
        });
    }
    Ok(())
}

fn check_path(req: &Request, resp: Response) -> Result<Response, ErrorResponse> {
    if req.uri().path() == WS_PATH {
        Ok(resp)
    } else {
        let mut err = ErrorResponse::new(Some(format!("use {WS_PATH}")));
        *err.status_mut() = StatusCode::NOT_FOUND;
        Err(err)
    }
}

fn serve_connection(stream: TcpStream, cfg: SearchConfig) -> Result<(), tungstenite::Error> {
    let mut ws = tungstenite::accept_hdr(stream, check_path).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::Io(io::Error::new(
            ErrorKind::WouldBlock,
            "handshake interrupted",
        )),
    })?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    let (tx, rx) = mpsc::channel();
    let mut session = Session::new(tx, cfg);
    let result = pump(&mut ws, &mut session, &rx);
    session.close();
    result
}

fn pump(
    ws: &mut WebSocket<TcpStream>,
    session: &mut Session,
    rx: &Receiver<ServerMessage>,
) -> Result<(), tungstenite::Error> {
    loop {
        while let Ok(msg) = rx.try_recv() {
            ws.send(Message::text(msg.to_json()))?;
        }
        match ws.read() {
            Ok(Message::Text(text)) => session.handle_text(text.as_str()),
            Ok(Message::Binary(bytes)) => session.handle_text(&String::from_utf8_lossy(&bytes)),
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => {
                return Ok(())
            }
            Err(e) => return Err(e),
        }
    }
}
