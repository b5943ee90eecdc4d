//! Client side of the repository deposit protocol:
//! create deposition, upload each archive, publish.

use std::fmt;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use super::package::Package;
use super::PublishError;
use crate::capture::manifest::DatasetMetadata;
use crate::identity;

pub const DEFAULT_TOKEN_ENV: &str = "DEPOSIT_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepositState {
    Fresh,
    Created,
    FilesUploaded,
    Published,
}

impl fmt::Display for DepositState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DepositState::Fresh => "fresh",
            DepositState::Created => "created",
            DepositState::FilesUploaded => "files-uploaded",
            DepositState::Published => "published",
        })
    }
}

/// Progress of one deposition. Holds the name of the token variable, never
/// the token, so it can be persisted next to the archives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepositSession {
    endpoint: String,
    token_env: String,
    state: DepositState,
    deposition_id: Option<u64>,
    bucket: Option<String>,
    uploaded: Vec<String>,
    doi: Option<String>,
}

fn is_loopback(host: &str) -> bool {
    let host = host.trim_start_matches('[').trim_end_matches(']');
    host == "localhost" || host.parse::<std::net::IpAddr>().map(|ip| ip.is_loopback()).unwrap_or(false)
}

/// Host part of an http(s) URL.
fn host_of(url: &str) -> Option<&str> {
    let rest = url.split_once("://")?.1;
    let authority = rest.split(['/', '?', '#']).next()?;
    let authority = authority.rsplit_once('@').map(|(_, h)| h).unwrap_or(authority);
    if authority.starts_with('[') {
        return authority.find(']').map(|i| &authority[..=i]);
    }
    Some(authority.split(':').next().unwrap_or(authority))
}

fn check_endpoint(url: &str) -> Result<(), PublishError> {
    if url.starts_with("https://") {
        return Ok(());
    }
    match (url.strip_prefix("http://"), host_of(url)) {
        (Some(_), Some(host)) if is_loopback(host) => Ok(()),
        _ => Err(PublishError::InsecureEndpoint(url.to_string())),
    }
}

impl DepositSession {
    pub fn new(endpoint: impl Into<String>, token_env: impl Into<String>) -> Result<Self, PublishError> {
        let endpoint = endpoint.into().trim_end_matches('/').to_string();
        check_endpoint(&endpoint)?;
        Ok(DepositSession {
            endpoint,
            token_env: token_env.into(),
            state: DepositState::Fresh,
            deposition_id: None,
            bucket: None,
            uploaded: Vec::new(),
            doi: None,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn token_env(&self) -> &str {
        &self.token_env
    }

    pub fn state(&self) -> DepositState {
        self.state
    }

    pub fn deposition_id(&self) -> Option<u64> {
        self.deposition_id
    }

    pub fn uploaded(&self) -> &[String] {
        &self.uploaded
    }

    pub fn doi(&self) -> Option<&str> {
        self.doi.as_deref()
    }

    fn created(&mut self, id: u64, bucket: String) {
        debug_assert_eq!(self.state, DepositState::Fresh);
        self.deposition_id = Some(id);
        self.bucket = Some(bucket);
        self.state = DepositState::Created;
    }

    fn files_uploaded(&mut self) {
        debug_assert_eq!(self.state, DepositState::Created);
        self.state = DepositState::FilesUploaded;
    }

    fn published(&mut self, doi: String) {
        debug_assert_eq!(self.state, DepositState::FilesUploaded);
        self.doi = Some(doi);
        self.state = DepositState::Published;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DepositCreator {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orcid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
}

/// The manifest fields sent with the create call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DepositMetadata {
    pub title: String,
    pub description: String,
    pub creators: Vec<DepositCreator>,
    pub keywords: Vec<String>,
    pub license: String,
}

impl DepositMetadata {
    pub fn from_manifest(md: &DatasetMetadata) -> Self {
        DepositMetadata {
            title: md.title.clone(),
            description: md.description.clone().unwrap_or_default(),
            creators: md
                .creators
                .iter()
                .map(|c| DepositCreator { name: c.name.clone(), orcid: c.orcid.clone(), affiliation: c.affiliation.clone() })
                .collect(),
            keywords: md.keywords.clone(),
            license: md.license.clone(),
        }
    }
}

/// HTTP side of a deposit. The token lives only here.
pub struct DepositClient {
    agent: ureq::Agent,
    token: String,
    retries: u32,
    backoff: Duration,
}

impl fmt::Debug for DepositClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DepositClient").field("retries", &self.retries).finish_non_exhaustive()
    }
}

enum Reply {
    Ok(Json),
    Status(u16, String),
}

impl DepositClient {
    pub fn new(token: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .proxy(None)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        DepositClient { agent, token: token.into(), retries: 3, backoff: Duration::from_millis(50) }
    }

    /// Reads the token from the named environment variable.
    pub fn from_env(var: &str) -> Result<Self, PublishError> {
        match std::env::var(var) {
            Ok(t) if !t.trim().is_empty() => Ok(DepositClient::new(t.trim())),
            _ => Err(PublishError::AuthError(format!("environment variable {var} is not set"))),
        }
    }

    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    /// Sends with retries on transport errors and 5xx; PUT and publish are
    /// idempotent on the server side, create is only retried before an id
    /// was handed out.
    fn call(&self, what: &str, send: impl Fn(&ureq::Agent, &str) -> Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<Reply, PublishError> {
        let auth = format!("Bearer {}", self.token);
        let mut attempt = 0;
        loop {
            let last = attempt >= self.retries;
            match send(&self.agent, &auth) {
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    let mut body = resp.into_body();
                    if (200..300).contains(&status) {
                        let json = body
                            .read_json::<Json>()
                            .map_err(|e| PublishError::ProtocolError(format!("{what}: unreadable body: {e}")))?;
                        return Ok(Reply::Ok(json));
                    }
                    if status >= 500 && !last {
                        attempt += 1;
                        thread::sleep(self.backoff * attempt);
                        continue;
                    }
                    let text = body.read_to_string().unwrap_or_default();
                    return Ok(Reply::Status(status, text));
                }
                Err(_) if !last => {
                    attempt += 1;
                    thread::sleep(self.backoff * attempt);
                }
                Err(e) => return Err(PublishError::ProtocolError(format!("{what}: {e}"))),
            }
        }
    }

    fn expect_ok(what: &str, reply: Reply) -> Result<Json, PublishError> {
        match reply {
            Reply::Ok(json) => Ok(json),
            Reply::Status(s @ (401 | 403), body) => Err(PublishError::AuthError(format!("{what}: HTTP {s} {body}").trim_end().to_string())),
            Reply::Status(s, body) => Err(PublishError::ProtocolError(format!("{what}: HTTP {s} {body}").trim_end().to_string())),
        }
    }

    /// Drives `session` forward as far as possible. On error the session
    /// keeps the last state it verifiably reached, so a later call resumes.
    pub fn deposit(&self, session: &mut DepositSession, metadata: &DepositMetadata, archives: &[Package]) -> Result<(), PublishError> {
        if session.state == DepositState::Published {
            return Err(PublishError::InvalidState(session.state));
        }
        if archives.is_empty() {
            return Err(PublishError::EmptySelection(Vec::new()));
        }
        if session.state == DepositState::Fresh {
            let url = format!("{}/deposit/depositions", session.endpoint);
            let body = json!({ "metadata": metadata });
            let reply = self.call("create", |a, auth| a.post(&url).header("Authorization", auth).send_json(&body))?;
            let json = Self::expect_ok("create", reply)?;
            let id = json["id"].as_u64().ok_or_else(|| PublishError::ProtocolError("create: response has no id".into()))?;
            let bucket = json["bucket"]
                .as_str()
                .ok_or_else(|| PublishError::ProtocolError("create: response has no bucket".into()))?;
            check_endpoint(bucket)?;
            session.created(id, bucket.trim_end_matches('/').to_string());
        }
        if session.state == DepositState::Created {
            let bucket = session.bucket.clone().expect("created sessions have a bucket");
            for p in archives {
                let name = &p.manifest.archive;
                if session.uploaded.contains(name) {
                    continue;
                }
                let url = format!("{bucket}/{}", identity::encode_segment(name));
                let reply = self.call("upload", |a, auth| {
                    a.put(&url).header("Authorization", auth).header("Content-Type", "application/zip").send(&p.archive[..])
                })?;
                let json = Self::expect_ok("upload", reply)?;
                let remote = json["checksum"].as_str().unwrap_or_default();
                let remote = remote.strip_prefix("sha256:").unwrap_or(remote).to_ascii_lowercase();
                if remote != p.manifest.archive_sha256 {
                    return Err(PublishError::DigestMismatch { file: name.clone(), local: p.manifest.archive_sha256.clone(), remote });
                }
                session.uploaded.push(name.clone());
            }
            session.files_uploaded();
        }
        let id = session.deposition_id.expect("uploaded sessions have an id");
        let url = format!("{}/deposit/depositions/{id}/actions/publish", session.endpoint);
        let reply = self.call("publish", |a, auth| a.post(&url).header("Authorization", auth).send_empty())?;
        let json = Self::expect_ok("publish", reply)?;
        let doi = json["doi"].as_str().ok_or_else(|| PublishError::ProtocolError("publish: response has no doi".into()))?;
        identity::validate_doi(doi)?;
        session.published(doi.to_string());
        Ok(())
    }
}

/// Deposits with the token read from the session's environment variable.
pub fn deposit(session: &mut DepositSession, metadata: &DepositMetadata, archives: &[Package]) -> Result<(), PublishError> {
    DepositClient::from_env(&session.token_env)?.deposit(session, metadata, archives)
}
