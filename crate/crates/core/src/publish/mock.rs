//! Loopback stand-in for a repository's deposit API, used by tests, examples
//! and `fairprov publish --mock`.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value as Json};
use tiny_http::{Header, Method, Request, Response, Server};

use super::package::sha256_hex;

/// Failure injection knobs. The defaults describe a well-behaved server.
#[derive(Debug, Clone)]
pub struct MockBehavior {
    pub token: String,
    pub doi: String,
    /// Status returned for every create call, e.g. 403.
    pub fail_create: Option<u16>,
    /// Number of publish calls answered with 500 before succeeding.
    pub publish_failures: u32,
    /// Report a wrong checksum for uploads.
    pub corrupt_checksum: bool,
    /// Number of uploads answered with 503 before succeeding.
    pub transient_upload_failures: u32,
}

impl Default for MockBehavior {
    fn default() -> Self {
        MockBehavior {
            token: "mock-token".into(),
            doi: "10.5281/zenodo.18702398".into(),
            fail_create: None,
            publish_failures: 0,
            corrupt_checksum: false,
            transient_upload_failures: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedCall {
    pub method: String,
    pub path: String,
    pub status: u16,
}

#[derive(Debug, Default)]
struct Deposition {
    metadata: Json,
    files: BTreeMap<String, Vec<u8>>,
    doi: Option<String>,
}

#[derive(Debug, Default)]
struct State {
    calls: Vec<RecordedCall>,
    depositions: BTreeMap<u64, Deposition>,
    transient_left: u32,
    publish_failures_left: u32,
}

pub struct MockServer {
    server: Arc<Server>,
    state: Arc<Mutex<State>>,
    endpoint: String,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds an ephemeral port on 127.0.0.1.
    pub fn start(behavior: MockBehavior) -> std::io::Result<Self> {
        let server = Arc::new(Server::http("127.0.0.1:0").map_err(std::io::Error::other)?);
        let port = server.server_addr().to_ip().map(|a| a.port()).ok_or_else(|| std::io::Error::other("no ip address"))?;
        let root = format!("http://127.0.0.1:{port}");
        let state = Arc::new(Mutex::new(State {
            transient_left: behavior.transient_upload_failures,
            publish_failures_left: behavior.publish_failures,
            ..State::default()
        }));
        let handle = {
            let server = Arc::clone(&server);
            let state = Arc::clone(&state);
            let root = root.clone();
            std::thread::spawn(move || {
                for req in server.incoming_requests() {
                    handle(req, &behavior, &state, &root);
                }
            })
        };
        Ok(MockServer { server, state, endpoint: format!("{root}/api"), handle: Some(handle) })
    }

    /// Base URL to hand to a deposit session.
    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn calls(&self) -> Vec<RecordedCall> {
        self.state.lock().expect("mock state").calls.clone()
    }

    /// `METHOD kind` per call, where kind is create, upload or publish.
    pub fn call_kinds(&self) -> Vec<String> {
        self.calls()
            .iter()
            .map(|c| {
                let kind = if c.path.ends_with("/actions/publish") {
                    "publish"
                } else if c.path.starts_with("/api/files/") {
                    "upload"
                } else {
                    "create"
                };
                format!("{} {kind}", c.method)
            })
            .collect()
    }

    /// Names and bytes uploaded to a deposition.
    pub fn files(&self, id: u64) -> BTreeMap<String, Vec<u8>> {
        self.state.lock().expect("mock state").depositions.get(&id).map(|d| d.files.clone()).unwrap_or_default()
    }

    pub fn metadata(&self, id: u64) -> Option<Json> {
        self.state.lock().expect("mock state").depositions.get(&id).map(|d| d.metadata.clone())
    }

    pub fn published_doi(&self, id: u64) -> Option<String> {
        self.state.lock().expect("mock state").depositions.get(&id).and_then(|d| d.doi.clone())
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn reply(req: Request, state: &Mutex<State>, status: u16, body: Json) {
    let path = req.url().to_string();
    let method = req.method().to_string();
    state.lock().expect("mock state").calls.push(RecordedCall { method, path, status });
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    let _ = req.respond(Response::from_string(body.to_string()).with_status_code(status).with_header(header));
}

fn handle(mut req: Request, behavior: &MockBehavior, state: &Mutex<State>, root: &str) {
    let authorized = req
        .headers()
        .iter()
        .any(|h| h.field.equiv("Authorization") && h.value.as_str() == format!("Bearer {}", behavior.token));
    let mut body = Vec::new();
    if req.as_reader().read_to_end(&mut body).is_err() {
        return reply(req, state, 400, json!({"message": "unreadable body"}));
    }
    if !authorized {
        return reply(req, state, 401, json!({"message": "missing or wrong token"}));
    }
    let url = req.url().to_string();
    let segments: Vec<&str> = url.trim_start_matches('/').split('/').collect();
    match (req.method(), segments.as_slice()) {
        (Method::Post, ["api", "deposit", "depositions"]) => {
            if let Some(status) = behavior.fail_create {
                return reply(req, state, status, json!({"message": "create refused"}));
            }
            let metadata = match serde_json::from_slice::<Json>(&body) {
                Ok(v) if v["metadata"]["title"].is_string() => v["metadata"].clone(),
                _ => return reply(req, state, 400, json!({"message": "metadata.title is required"})),
            };
            let id = {
                let mut s = state.lock().expect("mock state");
                let id = s.depositions.keys().next_back().map_or(1, |k| k + 1);
                s.depositions.insert(id, Deposition { metadata, ..Deposition::default() });
                id
            };
            reply(req, state, 201, json!({"id": id, "bucket": format!("{root}/api/files/{id}")}))
        }
        (Method::Put, ["api", "files", id, name]) => {
            let name = percent_encoding::percent_decode_str(name).decode_utf8_lossy().into_owned();
            let Ok(id) = id.parse::<u64>() else { return reply(req, state, 404, json!({})) };
            let outcome = {
                let mut s = state.lock().expect("mock state");
                if s.transient_left > 0 {
                    s.transient_left -= 1;
                    Err(503)
                } else {
                    match s.depositions.get_mut(&id) {
                        Some(d) if d.doi.is_some() => Err(409),
                        Some(d) => {
                            d.files.insert(name.clone(), body.clone());
                            Ok(())
                        }
                        None => Err(404),
                    }
                }
            };
            match outcome {
                Ok(()) => {
                    let mut digest = sha256_hex(&body);
                    if behavior.corrupt_checksum {
                        digest = sha256_hex(digest.as_bytes());
                    }
                    reply(req, state, 201, json!({"key": name, "size": body.len(), "checksum": format!("sha256:{digest}")}))
                }
                Err(status) => reply(req, state, status, json!({"message": "upload failed"})),
            }
        }
        (Method::Post, ["api", "deposit", "depositions", id, "actions", "publish"]) => {
            let Ok(id) = id.parse::<u64>() else { return reply(req, state, 404, json!({})) };
            let outcome = {
                let mut s = state.lock().expect("mock state");
                if s.publish_failures_left > 0 {
                    s.publish_failures_left -= 1;
                    Err(500)
                } else {
                    match s.depositions.get_mut(&id) {
                        Some(d) if d.files.is_empty() => Err(400),
                        Some(d) => Ok(d.doi.get_or_insert_with(|| behavior.doi.clone()).clone()),
                        None => Err(404),
                    }
                }
            };
            match outcome {
                Ok(doi) => reply(req, state, 202, json!({"id": id, "doi": doi})),
                Err(status) => reply(req, state, status, json!({"message": "cannot publish"})),
            }
        }
        _ => reply(req, state, 404, json!({"message": "no such route"})),
    }
}
