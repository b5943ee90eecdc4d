//! Packages a dataset into its declared distributions and deposits them on
//! the bundled loopback mock repository. Nothing leaves the machine.

use chrono::{TimeZone, Utc};
use fairprov::harness::{self, HarnessConfig};
use fairprov::publish::package::package_all;
use fairprov::publish::{self, DepositClient, DepositMetadata, DepositSession, MockBehavior, MockServer};
use fairprov::{consolidate, faircheck};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let root = tmp.path().join("campaign");
    harness::generate(&HarnessConfig { n_maps: 1, ..HarnessConfig::default() }, &root)?;
    let c = consolidate::consolidate(&root)?;
    consolidate::write_provenance(&root, &c.doc)?;

    let clock = Utc.with_ymd_and_hms(2025, 6, 30, 12, 0, 0).unwrap();
    let packages = package_all(&root, &c.manifest.publication, clock)?;
    for p in &packages {
        let m = &p.manifest;
        println!("{}: {} files, {} bytes, sha256 {}", m.archive, m.entries.len(), m.archive_size, m.archive_sha256);
        p.write_to(&tmp.path().join("dist"))?;
    }

    // The token would normally come from $DEPOSIT_TOKEN; the mock accepts this one.
    let server = MockServer::start(MockBehavior::default())?;
    let mut session = DepositSession::new(server.endpoint(), "DEPOSIT_TOKEN")?;
    DepositClient::new(MockBehavior::default().token).deposit(&mut session, &DepositMetadata::from_manifest(&c.manifest.metadata), &packages)?;
    println!("\ncalls: {}", server.call_kinds().join(" -> "));
    let doi = session.doi().expect("published");
    println!("state {} with DOI {doi}", session.state());

    let base = c.manifest.base();
    let mut doc = publish::attach_doi(c.doc, base.iri(), doi)?;
    for p in &packages {
        publish::record_distribution(&mut doc, base, &p.manifest)?;
    }
    let report = faircheck::check(&doc, &root);
    println!("F3 after deposit: {}", report.status(faircheck::Principle::F3).as_str());

    // A server that refuses the token leaves the session where it was.
    let strict = MockServer::start(MockBehavior { fail_create: Some(403), ..MockBehavior::default() })?;
    let mut refused = DepositSession::new(strict.endpoint(), "DEPOSIT_TOKEN")?;
    let err = DepositClient::new(MockBehavior::default().token).deposit(&mut refused, &DepositMetadata::from_manifest(&c.manifest.metadata), &packages).unwrap_err();
    println!("403: {err} (session still {})", refused.state());
    Ok(())
}
