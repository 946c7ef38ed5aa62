//! `qcbm` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::{DeviceSection, ExperimentConfig};
use super::fmt_float;
use super::run::RunDir;
use crate::dist::{BasisState, TargetSpec, DEFAULT_POISSON_LAMBDA};
use crate::error::{Error, Result};
use crate::mitigation::frobenius_distance;

#[derive(Debug, Parser)]
#[command(
    name = "qcbm",
    version,
    about = "QCBM training with assignment-matrix error mitigation"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML). Defaults to <out>/config.toml where that
    /// makes sense.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replace the config device with a named preset.
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and store the AEMs the experiment uses under <out>/aem/.
    Calibrate,
    /// Train from the config, using the stored AEM of the training kind.
    Train,
    /// Replay the stored trace through the batch plan and write metrics.csv.
    Evaluate,
    /// Summarize evaluated runs into report.csv and grid.csv under <out>.
    Report {
        /// Run directories to include (default: <out> itself).
        runs: Vec<PathBuf>,
    },
    /// Print a target distribution as CSV.
    Targets {
        #[arg(long, default_value = "bas22")]
        kind: String,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 4)]
        qubits: usize,
    },
}

/// Parse `args` (including the program name), run the command and return
/// the process exit status.
pub fn cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Lookup { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn load_config(args: &Args, fallback_dir: Option<&Path>) -> Result<(ExperimentConfig, PathBuf)> {
    let path = match (&args.config, fallback_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join("config.toml"),
        (None, None) => return Err(Error::Config("--config is required".into())),
    };
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(preset) = &args.preset {
        cfg.device = DeviceSection::preset(preset);
        cfg.validate()?;
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, dir))
}

fn out_dir(args: &Args, cfg: Option<&ExperimentConfig>) -> Result<RunDir> {
    args.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .map(RunDir::new)
        .ok_or_else(|| Error::Config("no run directory: pass --out or set output_dir".into()))
}

fn dispatch(args: &Args) -> Result<()> {
    match &args.command {
        Command::Calibrate => {
            let (cfg, _) = load_config(args, None)?;
            let run = out_dir(args, Some(&cfg))?;
            for aem in run.calibrate(&cfg)? {
                let d = aem.diagnostics();
                println!(
                    "{}  frobenius={}  condition={}  min_fidelity={}",
                    run.aem_path(aem.kernel_class()).display(),
                    fmt_float(frobenius_distance(&aem)),
                    fmt_float(d.condition_number),
                    fmt_float(d.min_row_fidelity)
                );
            }
        }
        Command::Train => {
            let (cfg, cfg_dir) = load_config(args, args.out.as_deref())?;
            let run = out_dir(args, Some(&cfg))?;
            let trace = run.train(&cfg, &cfg_dir)?;
            println!(
                "{} records, min loss {}, trace {}",
                trace.len(),
                trace.min_loss().map(fmt_float).unwrap_or_else(|| "n/a".into()),
                run.trace_path().display()
            );
            for r in trace.records.iter().filter(|r| r.event.is_some()) {
                println!("step {}: {}", r.step, r.event.as_deref().unwrap_or_default());
            }
        }
        Command::Evaluate => {
            let run = out_dir(args, None)?;
            let (cfg, _) = load_config(args, Some(run.root()))?;
            let table = run.evaluate(&cfg)?;
            println!("{} rows, {}", table.len(), run.metrics_path().display());
        }
        Command::Report { runs } => {
            let out = match (&args.out, runs.as_slice()) {
                (Some(o), _) => RunDir::new(o),
                (None, [single]) => RunDir::new(single),
                _ => return Err(Error::Config("--out is required when reporting several runs".into())),
            };
            let dirs: Vec<RunDir> = if runs.is_empty() {
                vec![out.clone()]
            } else {
                runs.iter().map(RunDir::new).collect()
            };
            let report = out.report(&dirs)?;
            print!("{}", report.grid_csv());
        }
        Command::Targets { kind, lambda, qubits } => {
            let target = parse_target(kind, *lambda)?;
            let p = target.distribution(*qubits)?;
            println!("index,bits,probability");
            for (i, &x) in p.probs().iter().enumerate() {
                println!("{i},{},{}", BasisState::new(i, *qubits)?, fmt_float(x));
            }
        }
    }
    Ok(())
}

fn parse_target(kind: &str, lambda: Option<f64>) -> Result<TargetSpec> {
    let lambda = lambda.unwrap_or(DEFAULT_POISSON_LAMBDA);
    match kind {
        "bas22" => Ok(TargetSpec::Bas22),
        "poisson1" => Ok(TargetSpec::Poisson1 { lambda }),
        "poisson2" => Ok(TargetSpec::Poisson2 { lambda }),
        other => Err(Error::Lookup {
            what: "target kind",
            name: other.to_string(),
        }),
    }
}
