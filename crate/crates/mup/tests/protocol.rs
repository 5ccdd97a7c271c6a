use std::collections::BTreeMap;
use std::io::{self, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use mup::protocol::{ClientMessage, ErrorCode, ServerMessage};
use mup::run::{run_file, RunOptions};
use mup::server::{accept_loop, serve_lines};
use mup::session::{RunStatus, Session};
use mup::Mode;
use mup_core::engine::{ChoiceScript, SearchConfig};
use mup_core::oracle::all_scripts;
use mup_core::pretty;
use mup_testgen::{cases, corpus, corpus_search, GenConfig};
use proptest::prelude::*;
use serde_json::{json, Value};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

const TUITION: &str = include_str!("../programs/tuition.mup");
const BMW: &str = include_str!("../programs/bmw.mup");
const TIMEOUT: Duration = Duration::from_secs(10);

fn session(cfg: SearchConfig) -> (Session, Receiver<ServerMessage>) {
    let (tx, rx) = mpsc::channel();
    (Session::new(tx, cfg), rx)
}

fn recv(rx: &Receiver<ServerMessage>) -> ServerMessage {
    rx.recv_timeout(TIMEOUT).expect("a reply")
}

fn load(source: &str) -> ClientMessage {
    ClientMessage::Load {
        source: source.into(),
    }
}

fn query(goal: &str, mode: Mode) -> ClientMessage {
    ClientMessage::Query {
        goal: goal.into(),
        mode: Some(mode),
        trace: false,
    }
}

fn error_code(msg: ServerMessage) -> ErrorCode {
    match msg {
        ServerMessage::Error { code, .. } => code,
        other => panic!("expected an error, got {other:?}"),
    }
}

fn answer(pairs: &[(&str, &str)]) -> ServerMessage {
    ServerMessage::Answer {
        bindings: pairs
            .iter()
            .map(|(v, t)| (v.to_string(), t.to_string()))
            .collect(),
    }
}

// ---- in-process sessions ----

#[test]
fn tuition_example() {
    let (mut s, rx) = session(SearchConfig::default());
    s.handle(load(TUITION));
    assert_eq!(recv(&rx), ServerMessage::Loaded { clause_count: 4 });
    s.handle(query("tuition(X)", Mode::Ex));
    let ServerMessage::ChoiceRequest {
        request_id,
        alternatives,
        ..
    } = recv(&rx)
    else {
        panic!("expected a choice request")
    };
    assert_eq!(alternatives, ["med", "eng", "eco"]);
    s.handle(ClientMessage::Choice {
        request_id,
        index: 0,
    });
    assert_eq!(recv(&rx), answer(&[("X", "40k")]));
    s.handle(ClientMessage::Next);
    assert_eq!(recv(&rx), ServerMessage::Failure);
    assert_eq!(s.status(), RunStatus::Idle);
}

#[test]
fn pv_never_asks() {
    let (mut s, rx) = session(SearchConfig::default());
    s.handle(load(BMW));
    recv(&rx);
    s.handle(query("bmw(X)", Mode::Pv));
    assert_eq!(recv(&rx), answer(&[("X", "120d")]));
    s.handle(ClientMessage::Next);
    assert_eq!(recv(&rx), ServerMessage::Failure);
    s.handle_text(r#"{"type":"query","goal":"twodoor"}"#);
    assert_eq!(recv(&rx), ServerMessage::Failure);
}

#[test]
fn malformed_frames() {
    let (mut s, rx) = session(SearchConfig::default());
    for (text, code) in [
        ("{", ErrorCode::BadJson),
        ("", ErrorCode::BadJson),
        ("null", ErrorCode::BadMessage),
        (r#"{"type":"hello"}"#, ErrorCode::BadMessage),
        (r#"{"goal":"p"}"#, ErrorCode::BadMessage),
        (
            r#"{"type":"choice","request_id":"x","index":0}"#,
            ErrorCode::BadMessage,
        ),
        (
            r#"{"type":"query","goal":"p","mode":"both"}"#,
            ErrorCode::BadMessage,
        ),
    ] {
        s.handle_text(text);
        assert_eq!(error_code(recv(&rx)), code, "{text}");
    }
    // the session is still usable
    s.handle(load(TUITION));
    assert_eq!(recv(&rx), ServerMessage::Loaded { clause_count: 4 });
}

#[test]
fn session_errors() {
    let (mut s, rx) = session(SearchConfig::default());
    s.handle(query("p", Mode::Pv));
    assert_eq!(error_code(recv(&rx)), ErrorCode::NoProgram);
    s.handle(ClientMessage::Next);
    assert_eq!(error_code(recv(&rx)), ErrorCode::NoActiveQuery);
    s.handle(ClientMessage::Choice {
        request_id: 0,
        index: 0,
    });
    assert_eq!(error_code(recv(&rx)), ErrorCode::StaleChoice);
    s.handle(load("p :- ."));
    assert_eq!(error_code(recv(&rx)), ErrorCode::ParseError);
    s.handle(load(BMW));
    recv(&rx);
    s.handle(query("bmw(", Mode::Pv));
    assert_eq!(error_code(recv(&rx)), ErrorCode::ParseError);

    s.handle(query("bmw(X)", Mode::Ex));
    let ServerMessage::ChoiceRequest { request_id, .. } = recv(&rx) else {
        panic!("expected a choice request")
    };
    for msg in [
        query("bmw(X)", Mode::Pv),
        load(TUITION),
        ClientMessage::Next,
    ] {
        s.handle(msg);
        assert_eq!(error_code(recv(&rx)), ErrorCode::Busy);
    }
    s.handle(ClientMessage::Choice {
        request_id: request_id + 7,
        index: 0,
    });
    assert_eq!(error_code(recv(&rx)), ErrorCode::StaleChoice);
    s.handle(ClientMessage::Choice {
        request_id,
        index: 2,
    });
    assert_eq!(error_code(recv(&rx)), ErrorCode::OutOfRange);
    // still pending after both errors
    s.handle(ClientMessage::Choice {
        request_id,
        index: 1,
    });
    let ServerMessage::ChoiceRequest {
        request_id: second, ..
    } = recv(&rx)
    else {
        panic!("expected the second choice request")
    };
    s.handle(ClientMessage::Choice {
        request_id,
        index: 0,
    });
    assert_eq!(error_code(recv(&rx)), ErrorCode::StaleChoice);
    s.handle(ClientMessage::Choice {
        request_id: second,
        index: 0,
    });
    assert_eq!(recv(&rx), answer(&[("X", "320d")]));
    s.handle(ClientMessage::Stop);
    assert_eq!(recv(&rx), ServerMessage::Stopped);
    s.handle(ClientMessage::Next);
    assert_eq!(error_code(recv(&rx)), ErrorCode::NoActiveQuery);
}

#[test]
fn trace_frames_precede_the_answer() {
    let (mut s, rx) = session(SearchConfig::default());
    s.handle(load(TUITION));
    recv(&rx);
    s.handle_text(r#"{"type":"query","goal":"tuition(X)","mode":"pv","trace":true}"#);
    let mut traces = 0;
    loop {
        match recv(&rx) {
            ServerMessage::Trace { .. } => traces += 1,
            msg => {
                assert_eq!(msg, answer(&[("X", "40k")]));
                break;
            }
        }
    }
    assert!(traces > 0);
    let frame = json!({"type": "trace", "event": {"kind": "failed"}});
    let msg: ServerMessage = serde_json::from_value(frame.clone()).unwrap();
    assert_eq!(
        serde_json::from_str::<Value>(&msg.to_json()).unwrap(),
        frame
    );
}

#[test]
fn depth_exceeded_is_reported() {
    let (mut s, rx) = session(SearchConfig::default());
    s.handle(load("p :- p."));
    recv(&rx);
    s.handle(query("p", Mode::Ex));
    assert_eq!(recv(&rx), ServerMessage::DepthExceeded);
}

#[test]
fn stop_cancels_a_long_search() {
    let cfg = SearchConfig {
        step_limit: None,
        ..SearchConfig::with_depth(100_000)
    };
    let (mut s, rx) = session(cfg);
    s.handle(load("n(z).\nn(s(X)) :- n(X).\n"));
    recv(&rx);
    s.handle(query("n(X), n(f(X))", Mode::Pv));
    thread::sleep(Duration::from_millis(50));
    assert_eq!(s.status(), RunStatus::Running);
    s.handle(ClientMessage::Stop);
    assert_eq!(recv(&rx), ServerMessage::Stopped);
    assert_eq!(s.status(), RunStatus::Idle);
    assert!(rx.try_recv().is_err());
}

// ---- protocol safety ----

fn messages() -> impl Strategy<Value = ClientMessage> {
    prop_oneof![
        prop_oneof![Just(TUITION), Just(BMW), Just("p (+) q."), Just("bad(")].prop_map(load),
        (
            prop_oneof![Just("tuition(X)"), Just("bmw(X)"), Just("p"), Just("q(")],
            any::<bool>()
        )
            .prop_map(|(g, ex)| query(g, if ex { Mode::Ex } else { Mode::Pv })),
        (0usize..4, 0usize..4)
            .prop_map(|(request_id, index)| ClientMessage::Choice { request_id, index }),
        Just(ClientMessage::Next),
        Just(ClientMessage::Stop),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Every message gets at least one frame once the session settles, and
    /// `choice_request` is outstanding exactly when the session waits.
    #[test]
    fn every_message_is_answered(msgs in prop::collection::vec(messages(), 1..24)) {
        let (mut s, rx) = session(SearchConfig::default());
        for msg in msgs {
            s.handle(msg.clone());
            s.wait_settled();
            let frames: Vec<ServerMessage> = rx.try_iter().collect();
            prop_assert!(!frames.is_empty(), "no reply to {:?}", msg);
            if matches!(frames.last(), Some(ServerMessage::ChoiceRequest { .. })) {
                prop_assert_eq!(s.status(), RunStatus::AwaitingChoice);
            }
        }
        s.close();
        prop_assert!(rx.try_recv().is_err());
    }

    /// pv queries never produce a choice request.
    #[test]
    fn pv_frames_have_no_choice_requests(case in cases(GenConfig::default())) {
        let (mut s, rx) = session(corpus_search());
        s.handle(load(&pretty(&case.program)));
        recv(&rx);
        s.handle(query(&pretty(&case.goal), Mode::Pv));
        for _ in 0..20 {
            match recv(&rx) {
                ServerMessage::Answer { .. } => s.handle(ClientMessage::Next),
                ServerMessage::ChoiceRequest { .. } => prop_assert!(false, "pv asked"),
                _ => break,
            }
        }
    }
}

// ---- script/live equivalence ----

/// Answers as sorted `V = t` lists, then how the sequence ended.
type Transcript = Vec<String>;

fn live(source: &str, goal: &str, script: &[usize]) -> Transcript {
    let (mut s, rx) = session(corpus_search());
    s.handle(load(source));
    assert!(matches!(recv(&rx), ServerMessage::Loaded { .. }));
    s.handle(query(goal, Mode::Ex));
    let mut picks = script.iter();
    let mut out = Vec::new();
    loop {
        match recv(&rx) {
            ServerMessage::ChoiceRequest { request_id, .. } => s.handle(ClientMessage::Choice {
                request_id,
                index: *picks.next().expect("script covers every choice"),
            }),
            ServerMessage::Answer { bindings } => {
                out.push(render(&bindings));
                s.handle(ClientMessage::Next);
            }
            ServerMessage::Failure => break out.push("no.".into()),
            ServerMessage::DepthExceeded => break out.push("depth".into()),
            other => panic!("unexpected {other:?}"),
        }
    }
    out
}

fn render(bindings: &BTreeMap<String, String>) -> String {
    if bindings.is_empty() {
        return "yes.".into();
    }
    let pairs: Vec<String> = bindings.iter().map(|(v, t)| format!("{v} = {t}")).collect();
    pairs.join(", ")
}

fn scripted(path: &std::path::Path, goal: &str, script: &[usize]) -> Transcript {
    let opts = RunOptions {
        path: path.to_path_buf(),
        query: goal.into(),
        mode: Mode::Ex,
        script: Some(ChoiceScript::new(script.to_vec())),
        cfg: corpus_search(),
        trace: false,
    };
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_file(&opts, &mut io::empty(), &mut out, &mut err);
    let out = String::from_utf8(out).unwrap();
    let err = String::from_utf8(err).unwrap();
    match code {
        1 => vec!["no.".into()],
        2 if out == "depth limit exceeded.\n" => vec!["depth".into()],
        0 => {
            let mut lines: Vec<String> = out
                .lines()
                .map(|l| {
                    // function-free terms contain no `, `
                    let mut pairs: Vec<&str> = l.split(", ").collect();
                    pairs.sort();
                    pairs.join(", ")
                })
                .collect();
            lines.push(
                if err.contains("cut off") {
                    "depth"
                } else {
                    "no."
                }
                .into(),
            );
            lines
        }
        _ => panic!("run failed: {out}{err}"),
    }
}

#[test]
fn live_sessions_match_scripted_runs() {
    let dir = std::env::temp_dir().join(format!("mup-equiv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut compared = 0;
    for (i, case) in corpus(GenConfig::default(), 150, 5).iter().enumerate() {
        let source = pretty(&case.program);
        let goal = pretty(&case.goal);
        let path = dir.join(format!("case{i}.mup"));
        std::fs::write(&path, &source).unwrap();
        for script in all_scripts(&case.program.choice_arities()) {
            assert_eq!(
                live(&source, &goal, &script),
                scripted(&path, &goal, &script),
                "{source}?- {goal} with {script:?}"
            );
            compared += 1;
        }
    }
    assert!(compared > 150);
    for (source, goal, script) in [
        (BMW, "bmw(X)", vec![1, 0]),
        (TUITION, "tuition(X)", vec![2]),
    ] {
        let path = dir.join("example.mup");
        std::fs::write(&path, source).unwrap();
        assert_eq!(live(source, goal, &script), scripted(&path, goal, &script));
    }
}

// ---- stdio framing ----

#[derive(Clone, Default)]
struct Shared(Arc<Mutex<Vec<u8>>>);

impl Write for Shared {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.lock().unwrap().write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

fn ndjson(input: &str) -> Vec<Value> {
    let out = Shared::default();
    serve_lines(input.as_bytes(), out.clone(), SearchConfig::default()).unwrap();
    let bytes = out.0.lock().unwrap().clone();
    String::from_utf8(bytes)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn ndjson_lines() {
    let input = [
        "{oops".to_string(),
        String::new(),
        json!({"type": "load", "source": BMW}).to_string(),
        r#"{"type":"query","goal":"bmw(X)","mode":"ex"}"#.into(),
        r#"{"type":"choice","request_id":0,"index":1}"#.into(),
        r#"{"type":"choice","request_id":1,"index":1}"#.into(),
        r#"{"type":"next"}"#.into(),
    ]
    .join("\n");
    let frames = ndjson(&input);
    let types: Vec<&str> = frames.iter().map(|f| f["type"].as_str().unwrap()).collect();
    assert_eq!(
        types,
        [
            "error",
            "loaded",
            "choice_request",
            "choice_request",
            "answer",
            "failure"
        ]
    );
    assert_eq!(frames[0]["code"], "bad_json");
    assert_eq!(frames[2]["origin"], "2:1");
    assert_eq!(frames[3]["alternatives"], json!(["diesel", "gas"]));
    assert_eq!(frames[4]["bindings"], json!({"X": "320"}));
}

#[test]
fn input_end_leaves_a_suspended_query() {
    let input = [
        json!({"type": "load", "source": TUITION}).to_string(),
        r#"{"type":"query","goal":"tuition(X)","mode":"ex"}"#.into(),
    ]
    .join("\n");
    let frames = ndjson(&input);
    assert_eq!(frames.len(), 2);
    assert_eq!(frames[1]["type"], "choice_request");
}

// ---- WebSocket ----

fn server() -> u16 {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    thread::spawn(move || accept_loop(listener, SearchConfig::default()));
    port
}

struct Client(WebSocket<MaybeTlsStream<TcpStream>>);

impl Client {
    fn connect(port: u16) -> Self {
        let (ws, _) = tungstenite::connect(format!("ws://127.0.0.1:{port}/ws")).unwrap();
        if let MaybeTlsStream::Plain(s) = ws.get_ref() {
            s.set_read_timeout(Some(TIMEOUT)).unwrap();
        }
        Client(ws)
    }

    fn send(&mut self, msg: Value) {
        self.0.send(Message::text(msg.to_string())).unwrap();
    }

    fn recv(&mut self) -> Value {
        loop {
            match self.0.read().unwrap() {
                Message::Text(t) => return serde_json::from_str(t.as_str()).unwrap(),
                Message::Ping(_) | Message::Pong(_) => {}
                other => panic!("unexpected frame {other:?}"),
            }
        }
    }
}

#[test]
fn websocket_tuition() {
    let mut c = Client::connect(server());
    c.send(json!({"type": "load", "source": TUITION}));
    assert_eq!(c.recv(), json!({"type": "loaded", "clause_count": 4}));
    c.send(json!({"type": "query", "goal": "tuition(X)", "mode": "ex"}));
    let req = c.recv();
    assert_eq!(req["type"], "choice_request");
    assert_eq!(req["alternatives"], json!(["med", "eng", "eco"]));
    c.send(json!({"type": "choice", "request_id": req["request_id"], "index": 0}));
    assert_eq!(
        c.recv(),
        json!({"type": "answer", "bindings": {"X": "40k"}})
    );
    c.0.send(Message::text("not json")).unwrap();
    assert_eq!(c.recv()["code"], "bad_json");
    c.0.send(Message::binary(b"{\"type\":\"next\"}".to_vec()))
        .unwrap();
    assert_eq!(c.recv(), json!({"type": "failure"}));
    c.0.close(None).unwrap();
}

#[test]
fn websocket_needs_the_ws_path() {
    let port = server();
    match tungstenite::connect(format!("ws://127.0.0.1:{port}/other")) {
        Err(tungstenite::Error::Http(resp)) => assert_eq!(resp.status(), 404),
        other => panic!("expected 404, got {:?}", other.map(|_| ())),
    }
    // the server keeps accepting
    Client::connect(port);
}

#[test]
fn sessions_are_isolated() {
    let port = server();
    let mut a = Client::connect(port);
    let mut b = Client::connect(port);
    a.send(json!({"type": "load", "source": TUITION}));
    b.send(json!({"type": "load", "source": BMW}));
    assert_eq!(a.recv()["clause_count"], 4);
    assert_eq!(b.recv()["clause_count"], 6);
    a.send(json!({"type": "query", "goal": "tuition(X)", "mode": "ex"}));
    b.send(json!({"type": "query", "goal": "bmw(X)", "mode": "ex"}));
    let ra = a.recv();
    let rb = b.recv();
    // each session numbers its own requests
    assert_eq!(ra["request_id"], 0);
    assert_eq!(rb["request_id"], 0);
    b.send(json!({"type": "choice", "request_id": 0, "index": 1}));
    a.send(json!({"type": "choice", "request_id": 0, "index": 2}));
    assert_eq!(a.recv()["bindings"], json!({"X": "20k"}));
    let rb = b.recv();
    assert_eq!(rb["alternatives"], json!(["diesel", "gas"]));
    // a query on one connection does not disturb the other's suspension
    a.send(json!({"type": "query", "goal": "tuition(X)", "mode": "pv"}));
    assert_eq!(a.recv()["bindings"], json!({"X": "40k"}));
    b.send(json!({"type": "choice", "request_id": rb["request_id"], "index": 1}));
    assert_eq!(b.recv()["bindings"], json!({"X": "320"}));
    // closing one connection leaves the other working
    a.0.close(None).unwrap();
    b.send(json!({"type": "next"}));
    assert_eq!(b.recv(), json!({"type": "failure"}));
}
