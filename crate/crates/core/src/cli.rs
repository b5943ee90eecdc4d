//! The `fairprov` command line. Lives in the library so tests can drive it
//! in-process with captured output.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::capture::layout::PROVENANCE_FILE;
use crate::consolidate::{self, read_provenance, validate_graph, write_provenance};
use crate::faircheck::{self, ReportFormat};
use crate::harness::{self, HarnessConfig};
use crate::publish::deposit::DEFAULT_TOKEN_ENV;
use crate::publish::package::{package_all, DIST_DIR};
use crate::publish::{self, DepositClient, DepositMetadata, DepositSession, DepositState, DistributionSpec, MockBehavior, MockServer, Package};
use crate::queryengine::{self, OutputFormat};

/// Session state of the last deposit, next to the archives.
pub const SESSION_FILE: &str = "deposit-session.json";

/// Token the bundled mock accepts when the token variable is unset.
const MOCK_FALLBACK_TOKEN: &str = "mock-token";

#[derive(Debug, Parser)]
#[command(name = "fairprov", version, about = "Provenance graphs, queries, FAIR checks and publication for simulation test campaigns")]
pub struct Cli {
    /// Directory relative paths are resolved against.
    #[arg(long, global = true, default_value = ".")]
    pub root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// 200 configurations of 10 runs.
    Default,
    /// 400 configurations of 10 runs with 290 failures.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QueryFormat {
    Csv,
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportStyle {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic campaign results tree.
    Demo {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "dataset")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "default")]
        profile: Profile,
    },
    /// Scan a results tree, build and validate its graph, write provenance.jsonld.
    Consolidate {
        /// Results root holding campaign.vast.yaml.
        dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportStyle,
    },
    /// Run a SELECT query over a graph file.
    Query {
        /// A .jsonld graph, or a results root holding provenance.jsonld.
        graph: PathBuf,
        /// Query file, `-` for stdin, or a bundled query name
        /// (input_closure, input_closure_joined, failure_rate).
        query: Option<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: QueryFormat,
    },
    /// FAIR compliance report; exits 1 when a machine-checkable principle fails.
    Check {
        /// A results root or a .jsonld graph.
        target: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportStyle,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Node, type and triple counts plus validation findings; exits 1 on violations.
    Stats {
        target: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportStyle,
    },
    /// Build the manifest's distributions into <dir>/dist.
    Package(PackageArgs),
    /// Package, deposit and write the DOI back into provenance.jsonld.
    Publish {
        #[command(flatten)]
        package: PackageArgs,
        /// Deposit API base URL; plain HTTP only for loopback hosts.
        #[arg(long, required_unless_present = "mock", conflicts_with = "mock")]
        endpoint: Option<String>,
        /// Deposit to a bundled loopback mock server.
        #[arg(long)]
        mock: bool,
        /// Environment variable holding the API token.
        #[arg(long, default_value = DEFAULT_TOKEN_ENV)]
        token_env: String,
    },
}

#[derive(Debug, Args)]
pub struct PackageArgs {
    /// Results root holding campaign.vast.yaml.
    pub dir: Option<PathBuf>,
    /// Output directory; defaults to <dir>/dist.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Clock for filename templates, RFC 3339; defaults to now.
    #[arg(long, value_parser = parse_timestamp)]
    pub timestamp: Option<DateTime<Utc>>,
}

fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s).map(|d| d.with_timezone(&Utc)).map_err(|e| e.to_string())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Harness(#[from] harness::HarnessError),
    #[error(transparent)]
    Consolidate(#[from] consolidate::ConsolidateError),
    #[error(transparent)]
    Query(#[from] queryengine::QueryError),
    #[error(transparent)]
    Publish(#[from] publish::PublishError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 success, 1 failed checks or errors, 2 usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn resolve(root: &Path, p: Option<&Path>) -> PathBuf {
    match p {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => root.join(p),
        None => root.to_path_buf(),
    }
}

/// A graph path and the dataset directory it describes.
fn graph_location(path: PathBuf) -> (PathBuf, PathBuf) {
    if path.is_dir() {
        (path.join(PROVENANCE_FILE), path)
    } else {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (path, dir)
    }
}

fn load_graph(path: &Path) -> Result<crate::ldgraph::LinkedDocument, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("{}: no such graph file (run `fairprov consolidate` first)", path.display())));
    }
    Ok(read_provenance(path)?)
}

fn emit(out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    out.write_all(bytes).map_err(io_err(Path::new("<stdout>")))
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let root = cli.root.as_path();
    match &cli.command {
        Command::Demo { seed, out: dir, profile } => {
            let mut cfg = match profile {
                Profile::Default => HarnessConfig::default(),
                Profile::Full => harness::paper_profile(),
            };
            cfg.seed = *seed;
            let dir = resolve(root, Some(dir));
            let summary = harness::generate(&cfg, &dir)?;
            let _ = writeln!(err, "wrote {} runs to {}", summary.n_runs, dir.display());
            emit(out, format!("{}\n", serde_json::to_string_pretty(&summary).expect("summary serializes")).as_bytes())?;
            Ok(0)
        }
        Command::Consolidate { dir, format } => {
            let dir = resolve(root, dir.as_deref());
            let c = consolidate::consolidate(&dir)?;
            for w in &c.manifest.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            let path = write_provenance(&dir, &c.doc)?;
            let _ = writeln!(err, "wrote {}", path.display());
            let report = validate_graph(&c.doc);
            emit(out, graph_report(&report, *format).as_bytes())?;
            Ok(if report.is_clean() { 0 } else { 1 })
        }
        Command::Stats { target, format } => {
            let (path, _) = graph_location(resolve(root, target.as_deref()));
            let report = validate_graph(&load_graph(&path)?);
            emit(out, graph_report(&report, *format).as_bytes())?;
            Ok(if report.is_clean() { 0 } else { 1 })
        }
        Command::Query { graph, query, format } => {
            let (path, _) = graph_location(resolve(root, Some(graph)));
            let text = query_text(root, query.as_deref())?;
            let doc = load_graph(&path)?;
            let table = queryengine::run_query(&doc, &text)?;
            let format = match format {
                QueryFormat::Csv => OutputFormat::Csv,
                QueryFormat::Table => OutputFormat::Table,
                QueryFormat::Json => OutputFormat::Json,
            };
            emit(out, table.render(format).as_bytes())?;
            Ok(0)
        }
        Command::Check { target, format, output } => {
            let (path, dir) = graph_location(resolve(root, target.as_deref()));
            let report = faircheck::check(&load_graph(&path)?, &dir);
            let format = match format {
                ReportStyle::Text => ReportFormat::Text,
                ReportStyle::Json => ReportFormat::Json,
            };
            let bytes = faircheck::render_report(&report, format);
            match output {
                Some(o) => {
                    let o = resolve(root, Some(o));
                    fs::write(&o, bytes).map_err(io_err(&o))?;
                }
                None => emit(out, &bytes)?,
            }
            Ok(if report.has_failures() { 1 } else { 0 })
        }
        Command::Package(args) => {
            let (_, packages, dist) = build_packages(root, args)?;
            for p in &packages {
                let m = &p.manifest;
                emit(out, format!("{}\t{}\t{}\t{}\n", m.archive, m.entries.len(), m.archive_size, m.archive_sha256).as_bytes())?;
            }
            let _ = writeln!(err, "wrote {} archive(s) to {}", packages.len(), dist.display());
            Ok(0)
        }
        Command::Publish { package, endpoint, mock, token_env } => publish_cmd(root, package, endpoint.as_deref(), *mock, token_env, out, err),
    }
}

fn graph_report(report: &consolidate::GraphReport, format: ReportStyle) -> String {
    match format {
        ReportStyle::Text => report.to_text(),
        ReportStyle::Json => report.to_json(),
    }
}

fn query_text(root: &Path, query: Option<&str>) -> Result<String, CliError> {
    match query {
        None | Some("-") => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(io_err(Path::new("<stdin>")))?;
            Ok(s)
        }
        Some(q) => {
            let path = resolve(root, Some(Path::new(q)));
            if path.is_file() {
                fs::read_to_string(&path).map_err(io_err(&path))
            } else if let Some(text) = queryengine::cookbook(q) {
                Ok(text.to_string())
            } else {
                Err(CliError::Usage(format!("{q}: neither a query file nor a bundled query")))
            }
        }
    }
}

fn dist_dir(root: &Path, args: &PackageArgs) -> PathBuf {
    let dir = resolve(root, args.dir.as_deref());
    args.out.as_deref().map(|o| resolve(root, Some(o))).unwrap_or_else(|| dir.join(DIST_DIR))
}

fn build_packages(root: &Path, args: &PackageArgs) -> Result<(PathBuf, Vec<Package>, PathBuf), CliError> {
    let dir = resolve(root, args.dir.as_deref());
    let manifest = consolidate::read_manifest(&dir)?;
    let specs = if manifest.publication.is_empty() { vec![DistributionSpec::default_metadata()] } else { manifest.publication };
    let clock = args.timestamp.unwrap_or_else(Utc::now);
    let packages = package_all(&dir, &specs, clock)?;
    let dist = dist_dir(root, args);
    for p in &packages {
        p.write_to(&dist)?;
    }
    Ok((dir, packages, dist))
}

fn save_session(path: &Path, session: &DepositSession) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(session).expect("session serializes");
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn publish_cmd(
    root: &Path,
    args: &PackageArgs,
    endpoint: Option<&str>,
    mock: bool,
    token_env: &str,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let dir = resolve(root, args.dir.as_deref());
    let graph_path = dir.join(PROVENANCE_FILE);
    let doc = load_graph(&graph_path)?;
    let manifest = consolidate::read_manifest(&dir)?;
    let session_path = dist_dir(root, args).join(SESSION_FILE);
    let previous = fs::read_to_string(&session_path).ok().and_then(|t| serde_json::from_str::<DepositSession>(&t).ok());
    if let Some(p) = previous.as_ref().filter(|p| p.state() == DepositState::Published) {
        return Err(CliError::Failed(format!(
            "already published as {} (remove {} to deposit again)",
            p.doi().unwrap_or("?"),
            session_path.display()
        )));
    }
    let (_, packages, _) = build_packages(root, args)?;

    let token = std::env::var(token_env).ok().filter(|t| !t.is_empty());
    let server;
    let (endpoint, client) = if mock {
        let token = token.unwrap_or_else(|| {
            let _ = writeln!(err, "note: ${token_env} unset; using the mock's built-in token");
            MOCK_FALLBACK_TOKEN.to_string()
        });
        server = MockServer::start(MockBehavior { token: token.clone(), ..MockBehavior::default() }).map_err(io_err(Path::new("<mock server>")))?;
        (server.endpoint().to_string(), DepositClient::new(token))
    } else {
        let endpoint = endpoint.expect("clap requires --endpoint without --mock");
        (endpoint.to_string(), DepositClient::from_env(token_env)?)
    };

    // Resume an unfinished session against the same endpoint.
    let mut session = DepositSession::new(endpoint.clone(), token_env)?;
    if let Some(p) = previous.filter(|p| p.endpoint() == session.endpoint() && p.token_env() == token_env) {
        let _ = writeln!(err, "resuming deposit from state {}", p.state());
        session = p;
    }

    let metadata = DepositMetadata::from_manifest(&manifest.metadata);
    let result = client.deposit(&mut session, &metadata, &packages);
    save_session(&session_path, &session)?;
    result?;
    let doi = session.doi().expect("published sessions carry a doi").to_string();

    let base = manifest.base();
    let mut doc = publish::attach_doi(doc, base.iri(), &doi)?;
    for p in &packages {
        publish::record_distribution(&mut doc, base, &p.manifest)?;
    }
    write_provenance(&dir, &doc)?;
    let _ = writeln!(err, "published {} archive(s) to {}", packages.len(), endpoint);
    emit(out, format!("{doi}\n").as_bytes())?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_captured(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("fairprov").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        let (code, out, err) = run_captured(&["frobnicate"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(!err.is_empty());
    }

    #[test]
    fn publish_needs_endpoint_or_mock() {
        assert_eq!(run_captured(&["publish"]).0, 2);
        assert_eq!(run_captured(&["publish", "--mock", "--endpoint", "https://x.test"]).0, 2);
    }

    #[test]
    fn missing_graph_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out, _) = run_captured(&["--root", dir.path().to_str().unwrap(), "stats"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
    }

    #[test]
    fn every_subcommand_exists() {
        for sub in ["demo", "consolidate", "query", "check", "stats", "package", "publish"] {
            let (code, out, _) = run_captured(&[sub, "--help"]);
            assert_eq!(code, 0, "{sub}");
            assert!(out.contains("Usage"), "{sub}");
        }
    }

    #[test]
    fn unknown_query_name_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = query_text(dir.path(), Some("no_such_query")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(query_text(dir.path(), Some("failure_rate")).unwrap().contains("SELECT"));
    }
}
