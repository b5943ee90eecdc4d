//! Writes a synthetic campaign results tree and prints what went in it.
//!
//!     cargo run --example generate_campaign -- [out_dir] [--full]

use std::path::PathBuf;

use fairprov::harness::{self, HarnessConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let full = args.iter().any(|a| a == "--full");
    let out = args.iter().find(|a| !a.starts_with("--")).map(PathBuf::from);
    let tmp = tempfile::tempdir()?;
    let out = out.unwrap_or_else(|| tmp.path().join("campaign"));

    let cfg = if full { harness::paper_profile() } else { HarnessConfig::default() };
    println!("grid: {} maps x {} paths x {:?} obstacles/m x {:?} m radii, {} runs each", cfg.n_maps, cfg.paths_per_map, cfg.densities, cfg.radii_m, cfg.runs_per_config);
    println!("expected failures: {}", cfg.expected_failures());

    let summary = harness::generate(&cfg, &out)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    println!(
        "failure rate {:.2}%, {:.1} km driven by successful runs",
        100.0 * summary.n_failed as f64 / summary.n_runs as f64,
        summary.total_distance_m / 1000.0
    );

    // Same seed, same bytes.
    let again = tmp.path().join("again");
    harness::generate(&cfg, &again)?;
    let a = std::fs::read(out.join("configs/c_0000/runs/00/test.xml"))?;
    let b = std::fs::read(again.join("configs/c_0000/runs/00/test.xml"))?;
    println!("regenerated run report identical: {}", a == b);
    Ok(())
}
