use std::fs;
use std::path::Path;

use fairprov::cli;

fn run(root: &Path, args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["fairprov", "--root", root.to_str().unwrap()];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn full_pipeline_through_the_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();

    let (code, _, err) = run(root, &["demo", "--seed", "42", "--out", "ds"]);
    assert_eq!(code, 0, "{err}");
    assert!(root.join("ds/campaign.vast.yaml").is_file());

    let (code, out, err) = run(root, &["consolidate", "ds"]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(root.join("ds/provenance.jsonld").is_file());

    let (code, out, _) = run(root, &["query", "ds", "failure_rate"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("conf,rate,total"));
    assert_eq!(lines.count(), 100);

    let query_file = root.join("q.rq");
    fs::write(&query_file, "SELECT ?d WHERE { ?d a dcat:Dataset . }").unwrap();
    let (code, out, _) = run(root, &["query", "ds/provenance.jsonld", query_file.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["results"]["bindings"].as_array().map(Vec::len), Some(1), "{out}");

    let (code, out, _) = run(root, &["check", "ds"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("R1.1"));

    let (code, out, _) = run(root, &["stats", "ds", "--format", "json"]);
    assert_eq!(code, 0);
    let stats: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(stats["triples"].as_u64().unwrap() > 100_000);

    let stamp = ["--timestamp", "2025-01-01T00:00:00Z"];
    let (code, out, err) = run(root, &[&["package", "ds"][..], &stamp].concat());
    assert_eq!(code, 0, "{err}");
    assert!(!out.is_empty());
    let dist: Vec<String> = fs::read_dir(root.join("ds/dist")).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(dist.iter().any(|n| n.ends_with(".zip")), "{dist:?}");

    let (code, out, err) = run(root, &[&["publish", "ds", "--mock"][..], &stamp].concat());
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("10.5281/"), "{out}");
    let prov = fs::read_to_string(root.join("ds/provenance.jsonld")).unwrap();
    assert!(prov.contains("https://doi.org/10.5281/"));
    let manifest = fs::read_to_string(root.join("ds/campaign.vast.yaml")).unwrap();
    assert!(!manifest.to_lowercase().contains("token:"), "token leaked into the manifest");

    let (code, _, err) = run(root, &[&["publish", "ds", "--mock"][..], &stamp].concat());
    assert_eq!(code, 1);
    assert!(err.contains("already published"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(tmp.path(), &["frobnicate"]).0, 2);
    assert_eq!(run(tmp.path(), &["publish", "ds"]).0, 2);
    assert_eq!(run(tmp.path(), &["publish", "ds", "--mock", "--endpoint", "http://127.0.0.1:1"]).0, 2);
}

#[test]
fn help_goes_to_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, out, _) = run(tmp.path(), &["--help"]);
    assert_eq!(code, 0);
    for sub in ["demo", "consolidate", "query", "check", "stats", "package", "publish"] {
        assert!(out.contains(sub), "missing {sub}");
    }
}

#[test]
fn missing_dataset_is_an_error_not_a_panic() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = run(tmp.path(), &["consolidate", "nowhere"]);
    assert_eq!(code, 1);
    assert!(!err.is_empty());
}
