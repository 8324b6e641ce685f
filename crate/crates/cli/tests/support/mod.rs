//! Scripted HTTP stand-ins for the model and fill-mask services, and a
//! runner for the `sentasm` binary.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value};

pub struct StubServer {
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
    pub url: String,
    hits: Arc<AtomicUsize>,
}

impl StubServer {
    /// Serves `respond(path, body) -> (status, body)` on a free local port.
    pub fn start<F>(respond: F) -> StubServer
    where
        F: Fn(&str, &Value) -> (u16, Value) + Send + 'static,
    {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind stub server"));
        let url = format!("http://{}", server.server_addr().to_ip().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let (srv, counter) = (Arc::clone(&server), Arc::clone(&hits));
        let handle = std::thread::spawn(move || {
            for mut request in srv.incoming_requests() {
                counter.fetch_add(1, Ordering::SeqCst);
                let mut body = String::new();
                let _ = request.as_reader().read_to_string(&mut body);
                let (status, out) = match serde_json::from_str::<Value>(&body) {
                    Ok(v) => respond(request.url(), &v),
                    Err(e) => (400, json!({ "error": e.to_string() })),
                };
                let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                let response = tiny_http::Response::from_string(out.to_string())
                    .with_status_code(status)
                    .with_header(header);
                let _ = request.respond(response);
            }
        });
        StubServer {
            server,
            handle: Some(handle),
            url,
            hits,
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

const POSITIVE: &[&str] = &["good", "great", "brave", "enjoyed", "fun", "stunning", "wonderful", "best", "love"];
const NEGATIVE: &[&str] = &["bad", "boring", "dull", "worst", "awful", "tv", "terrible", "never", "weak"];

/// Bag-of-words sentiment: each polar word shifts the positive
/// probability by 0.15 from 0.5, clamped to [0.02, 0.98].
pub fn toy_sentiment(text: &str) -> Value {
    let mut p: f64 = 0.5;
    for w in text.split(|c: char| !c.is_alphanumeric()).map(str::to_lowercase) {
        if POSITIVE.contains(&w.as_str()) {
            p += 0.15;
        } else if NEGATIVE.contains(&w.as_str()) {
            p -= 0.15;
        }
    }
    let p = p.clamp(0.02, 0.98);
    let label = if p >= 0.5 { "positive" } else { "negative" };
    json!({ "label": label, "probs": { "positive": p, "negative": 1.0 - p } })
}

/// Answers the model protocol of every task from the request shape:
/// MRC echoes the paragraph's first three words, SA uses
/// [`toy_sentiment`], SSM calls pairs duplicates when their lengths are
/// within 8 bytes.
pub fn toy_model() -> StubServer {
    StubServer::start(|path, req| {
        if path != "/predict" {
            return (404, json!({ "error": "not found" }));
        }
        if let (Some(p), Some(_)) = (req["paragraph"].as_str(), req["question"].as_str()) {
            let answer: Vec<&str> = p.split_whitespace().take(3).collect();
            (200, json!({ "answer": answer.join(" ") }))
        } else if let Some(t) = req["text"].as_str() {
            (200, toy_sentiment(t))
        } else if let (Some(a), Some(b)) = (req["text_a"].as_str(), req["text_b"].as_str()) {
            let dup = u8::from(a.len().abs_diff(b.len()) <= 8);
            (200, json!({ "duplicate": dup }))
        } else {
            (400, json!({ "error": "unknown request" }))
        }
    })
}

const FILL: &[&str] = &["really", "old", "small", "quiet", "bright"];

/// Fill-mask service proposing a fixed word list with falling scores.
pub fn toy_fill_mask() -> StubServer {
    StubServer::start(|path, req| {
        if path != "/fill-mask" {
            return (404, json!({ "error": "not found" }));
        }
        let k = req["top_k"].as_u64().unwrap_or(5) as usize;
        let candidates: Vec<Value> = FILL
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, w)| json!({ "token": w, "score": 0.5 / (i + 1) as f64 }))
            .collect();
        (200, json!({ "candidates": candidates }))
    })
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn corpus_args() -> Vec<String> {
    let f = fixtures();
    [
        ("--conllu", "corpus.conllu"),
        ("--trees", "trees.ptb"),
        ("--labels", "labels.jsonl"),
        ("--lexicon", "lexicon.tsv"),
        ("--embeddings", "embeddings.txt"),
    ]
    .iter()
    .flat_map(|(flag, file)| [flag.to_string(), f.join(file).display().to_string()])
    .collect()
}

pub fn seeds(task: &str) -> String {
    let name = if task == "mrc" { "mrc.json".to_string() } else { format!("{task}.tsv") };
    fixtures().join(name).display().to_string()
}

pub fn sentasm<S: AsRef<str>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentasm"))
        .args(args.iter().map(AsRef::as_ref))
        .env("RUST_LOG", "error")
        .output()
        .expect("run sentasm")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}
