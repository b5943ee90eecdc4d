//! Deterministic ZIP packaging with a SHA-256 manifest per archive.

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use globset::{GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipWriter};

use super::{DistributionSpec, PublishError};

/// Where archives and their manifests are written. Never packaged itself.
pub const DIST_DIR: &str = "dist";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageEntry {
    pub path: String,
    pub size: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageManifest {
    pub archive: String,
    pub archive_size: u64,
    pub archive_sha256: String,
    pub total_size: u64,
    pub entries: Vec<PackageEntry>,
}

impl PackageManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Paths whose current content under `dir` no longer matches.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.entries
            .par_iter()
            .filter(|e| match fs::read(dir.join(&e.path)) {
                Ok(bytes) => bytes.len() as u64 != e.size || sha256_hex(&bytes) != e.sha256,
                Err(_) => true,
            })
            .map(|e| e.path.clone())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Package {
    pub archive: Vec<u8>,
    pub manifest: PackageManifest,
}

impl Package {
    /// Writes `<archive>` and `<archive>.manifest.json` into `out_dir`.
    pub fn write_to(&self, out_dir: &Path) -> Result<PathBuf, PublishError> {
        fs::create_dir_all(out_dir).map_err(|e| PublishError::io(out_dir, e))?;
        let path = out_dir.join(&self.manifest.archive);
        fs::write(&path, &self.archive).map_err(|e| PublishError::io(&path, e))?;
        let mpath = out_dir.join(format!("{}.manifest.json", self.manifest.archive));
        fs::write(&mpath, self.manifest.to_json()).map_err(|e| PublishError::io(&mpath, e))?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn globset(patterns: &[String]) -> Result<GlobSet, PublishError> {
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        let g = globset::Glob::new(p)
            .map_err(|e| PublishError::InvalidFilter { pattern: p.clone(), message: e.to_string() })?;
        b.add(g);
    }
    b.build().map_err(|e| PublishError::InvalidFilter { pattern: patterns.join(","), message: e.to_string() })
}

/// Relative `/`-separated paths of files under `dir` matching any pattern,
/// sorted. The top-level `dist/` directory is skipped.
pub fn select(dir: &Path, patterns: &[String]) -> Result<Vec<String>, PublishError> {
    let set = globset(patterns)?;
    let mut out = Vec::new();
    let walker = WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| !(e.depth() == 1 && e.file_type().is_dir() && e.file_name() == DIST_DIR));
    for entry in walker {
        let entry = entry.map_err(|e| PublishError::io(dir, e.into()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).expect("walk stays below root");
        let rel: Vec<&str> = rel.iter().filter_map(|s| s.to_str()).collect();
        let rel = rel.join("/");
        if set.is_match(&rel) {
            out.push(rel);
        }
    }
    out.sort();
    Ok(out)
}

/// Builds one archive. Entry order, timestamps and permissions are fixed, so
/// equal inputs give equal bytes.
pub fn package(dataset_dir: &Path, spec: &DistributionSpec, clock: DateTime<Utc>) -> Result<Package, PublishError> {
    if !dataset_dir.is_dir() {
        return Err(PublishError::io(dataset_dir, std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found")));
    }
    let name = spec.filename(clock)?;
    let paths = select(dataset_dir, spec.include_filter())?;
    if paths.is_empty() {
        return Err(PublishError::EmptySelection(spec.include_filter().to_vec()));
    }
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::DEFAULT)
        .unix_permissions(0o644)
        .large_file(false);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let mut entries = Vec::with_capacity(paths.len());
    for rel in paths {
        let abs = dataset_dir.join(&rel);
        let bytes = fs::read(&abs).map_err(|e| PublishError::io(&abs, e))?;
        zip.start_file(rel.as_str(), options)?;
        zip.write_all(&bytes).map_err(|e| PublishError::io(&abs, e))?;
        entries.push(PackageEntry { size: bytes.len() as u64, sha256: sha256_hex(&bytes), path: rel });
    }
    let archive = zip.finish()?.into_inner();
    let manifest = PackageManifest {
        archive: name,
        archive_size: archive.len() as u64,
        archive_sha256: sha256_hex(&archive),
        total_size: entries.iter().map(|e| e.size).sum(),
        entries,
    };
    Ok(Package { archive, manifest })
}

/// Packages several distributions in parallel; results keep spec order.
pub fn package_all(
    dataset_dir: &Path,
    specs: &[DistributionSpec],
    clock: DateTime<Utc>,
) -> Result<Vec<Package>, PublishError> {
    specs.par_iter().map(|s| package(dataset_dir, s, clock)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use std::io::Read;

    fn clock() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap()
    }

    fn tree() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.json"), b"{\"a\":1}").unwrap();
        fs::write(dir.path().join("b.csv"), b"x,y\n1,2\n").unwrap();
        fs::create_dir_all(dir.path().join("runs/0")).unwrap();
        fs::write(dir.path().join("runs/0/m.json"), b"{}").unwrap();
        fs::create_dir_all(dir.path().join(DIST_DIR)).unwrap();
        fs::write(dir.path().join("dist/old.json"), b"{}").unwrap();
        dir
    }

    fn names(archive: &[u8]) -> Vec<String> {
        let mut z = zip::ZipArchive::new(Cursor::new(archive)).unwrap();
        (0..z.len()).map(|i| z.by_index(i).unwrap().name().unwrap().to_string()).collect()
    }

    #[test]
    fn json_filter_selects_only_json() {
        let dir = tree();
        let spec = DistributionSpec::new("{timestamp:%Y%m%d}_meta.zip", vec!["*.json".into()]).unwrap();
        let p = package(dir.path(), &spec, clock()).unwrap();
        assert_eq!(p.manifest.archive, "20250101_meta.zip");
        assert_eq!(names(&p.archive), ["a.json", "runs/0/m.json"]);
        assert_eq!(p.manifest.total_size, 9);
        assert!(p.manifest.verify(dir.path()).is_empty());
    }

    #[test]
    fn archive_contents_match_files() {
        let dir = tree();
        let spec = DistributionSpec::new("x.zip", vec!["b.csv".into()]).unwrap();
        let p = package(dir.path(), &spec, clock()).unwrap();
        let mut z = zip::ZipArchive::new(Cursor::new(&p.archive)).unwrap();
        let mut f = z.by_name("b.csv").unwrap();
        let mut s = String::new();
        f.read_to_string(&mut s).unwrap();
        assert_eq!(s, "x,y\n1,2\n");
        assert_eq!(f.last_modified(), Some(zip::DateTime::DEFAULT));
    }

    #[test]
    fn repackaging_is_byte_identical() {
        let dir = tree();
        let spec = DistributionSpec::new("x.zip", vec!["**".into()]).unwrap();
        let a = package(dir.path(), &spec, clock()).unwrap();
        // writing the first archive into dist/ must not change the second
        a.write_to(&dir.path().join(DIST_DIR)).unwrap();
        let b = package(dir.path(), &spec, clock()).unwrap();
        assert_eq!(a.archive, b.archive);
        assert_eq!(a.manifest, b.manifest);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let dir = tree();
        let spec = DistributionSpec::new("x.zip", vec!["*.mcap".into()]).unwrap();
        assert!(matches!(package(dir.path(), &spec, clock()), Err(PublishError::EmptySelection(_))));
    }

    #[test]
    fn verify_detects_edits() {
        let dir = tree();
        let spec = DistributionSpec::new("x.zip", vec!["*.json".into()]).unwrap();
        let p = package(dir.path(), &spec, clock()).unwrap();
        fs::write(dir.path().join("a.json"), b"{\"a\":2}").unwrap();
        assert_eq!(p.manifest.verify(dir.path()), ["a.json"]);
    }
}
