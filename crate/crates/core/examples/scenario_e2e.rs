//! Loads the mini preset with overrides, runs simulate, process and analyze
//! into a directory and lists the manifest.
//!
//! `cargo run --example scenario_e2e -- out_dir`

use std::path::PathBuf;

use ofdr::cli::{cmd_e2e, Product};
use ofdr::scenario::Scenario;

fn main() -> ofdr::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ofdr-scenario-e2e"));
    let sc = Scenario::preset("transatlantic-mini")?.with_overrides(&["run.sweeps=128".into(), "run.seed=4".into()])?;
    print!("{}", sc.to_toml_string());
    let manifest = cmd_e2e(&sc, &dir, &Product::ALL)?;
    println!("{} records into {}", manifest.records, dir.display());
    for f in &manifest.outputs {
        println!("  {} ({} bytes)", f.path, f.bytes);
    }
    Ok(())
}
