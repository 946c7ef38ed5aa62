//! Experiment plumbing: configuration files, run directories, post-processing
//! sweeps over a training trace, summary reports and the command line.
//!
//! A run directory looks like
//!
//! ```text
//! run/
//!   config.toml      resolved copy of the experiment config
//!   aem/<kind>.json  assignment matrices (identity, hw, circ)
//!   trace.jsonl      header line + one training step per line
//!   theta.json       final parameters, loadable as a pre-trained init
//!   metrics.csv      step x post-AEM x sub-sample size
//!   report.csv       minimum mean KL per (train AEM, post AEM, shots)
//!   grid.csv         the same minima pivoted: rows train AEM, columns post AEM
//! ```

pub mod cli;
pub mod config;
pub mod drift;
pub mod evaluate;
pub mod report;
pub mod run;

pub use cli::cli;
pub use config::{BatchPlan, ExperimentConfig};
pub use drift::{aem_drift_study, aem_series, jitter_device, DriftReport};
pub use evaluate::{evaluate_trace, trace_composites, EvaluationPlan, MetricRow, MetricsTable};
pub use report::{summarize, Report, RunSummary};
pub use run::RunDir;

/// Render a float with 12 significant digits; non-finite values become
/// `inf`, `-inf` or `nan`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.11e}")
    }
}
