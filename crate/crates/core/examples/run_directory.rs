//! The calibrate → train → evaluate → report workflow behind the `qcbm`
//! binary, driven from a config string.
//!
//! ```text
//! cargo run --release --example run_directory -- [out_dir]
//! ```
//!
//! The same run from the command line:
//!
//! ```text
//! qcbm calibrate --config experiment.toml --out runs/pb
//! qcbm train     --config experiment.toml --out runs/pb
//! qcbm evaluate  --out runs/pb
//! qcbm report    --out runs/pb
//! ```

use std::path::PathBuf;

use qcbm::harness::{ExperimentConfig, RunDir};

const CONFIG: &str = r#"
seed = 7

[target]
kind = "bas22"

[ansatz]
layout = "dc3_star"

[device]
preset = "tokyo-PB-like"

[training]
aem = "hw"
steps = 10

[evaluation]
post_aems = ["identity", "hw", "circ"]
subsample_shots = [4096, 2048, 512]
repeats = 10
"#;

fn main() -> qcbm::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("qcbm-run"));
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let run = RunDir::new(&root);

    run.calibrate(&cfg)?;
    let trace = run.train(&cfg, &root)?;
    let metrics = run.evaluate(&cfg)?;
    let report = run.report(std::slice::from_ref(&run))?;

    println!("run directory {}", root.display());
    println!(
        "  trace:   {} records, min MMD {:.5}",
        trace.len(),
        trace.min_loss().unwrap_or(f64::NAN)
    );
    println!("  metrics: {} rows", metrics.len());
    println!("\n{}", report.grid_csv());
    Ok(())
}
