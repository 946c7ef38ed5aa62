//! Run directories and the calibrate → train → evaluate → report steps that
//! fill them.

use std::path::{Path, PathBuf};

use super::config::{save_theta, ExperimentConfig};
use super::evaluate::{evaluate_trace, EvaluationPlan, MetricsTable};
use super::report::{summarize, Report, RunSummary};
use crate::error::{Error, Result};
use crate::mitigation::{build_aem, AssignmentErrorMatrix, KernelClass};
use crate::rng;
use crate::training::{train, TrainTrace};

// Stream tags keeping calibration, training and evaluation randomness apart.
const CALIBRATION_TAG: u64 = 1;
const EVALUATION_TAG: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn aem_path(&self, kind: KernelClass) -> PathBuf {
        self.root.join("aem").join(format!("{kind}.json"))
    }

    pub fn trace_path(&self) -> PathBuf {
        self.root.join("trace.jsonl")
    }

    pub fn theta_path(&self) -> PathBuf {
        self.root.join("theta.json")
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }

    pub fn report_path(&self) -> PathBuf {
        self.root.join("report.csv")
    }

    pub fn grid_path(&self) -> PathBuf {
        self.root.join("grid.csv")
    }

    /// Name used for this run in report tables.
    pub fn label(&self) -> String {
        self.root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.root.display().to_string())
    }

    fn create(&self) -> Result<()> {
        let aem_dir = self.root.join("aem");
        std::fs::create_dir_all(&aem_dir).map_err(|e| Error::io(&aem_dir, e))
    }

    fn write(&self, path: &Path, text: &str) -> Result<()> {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn save_config(&self, cfg: &ExperimentConfig) -> Result<()> {
        self.create()?;
        self.write(&self.config_path(), &cfg.to_toml())
    }

    pub fn load_config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::load(&self.config_path())
    }

    pub fn load_aem(&self, kind: KernelClass) -> Result<AssignmentErrorMatrix> {
        let path = self.aem_path(kind);
        if !path.exists() {
            return Err(Error::Lookup {
                what: "AEM file",
                name: path.display().to_string(),
            });
        }
        let aem = AssignmentErrorMatrix::load(&path)?;
        if aem.kernel_class() != kind {
            return Err(Error::format(
                &path,
                format!("holds a {} AEM, expected {kind}", aem.kernel_class()),
            ));
        }
        Ok(aem)
    }

    pub fn load_trace(&self) -> Result<TrainTrace> {
        let path = self.trace_path();
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        TrainTrace::from_jsonl(&text).map_err(|e| Error::format(&path, e))
    }

    pub fn load_metrics(&self) -> Result<MetricsTable> {
        MetricsTable::load(&self.metrics_path())
    }

    /// Build and store every AEM the experiment uses.
    pub fn calibrate(&self, cfg: &ExperimentConfig) -> Result<Vec<AssignmentErrorMatrix>> {
        self.save_config(cfg)?;
        let spec = cfg.ansatz_spec()?;
        let device = cfg.device()?;
        cfg.aem_kinds()
            .into_iter()
            .map(|kind| {
                let mut stream = rng::derived_stream(cfg.seed, &[CALIBRATION_TAG, kind as u64]);
                let aem = build_aem(kind, &spec, &device, cfg.calibration_backend(), &mut stream)?;
                aem.save(&self.aem_path(kind))?;
                Ok(aem)
            })
            .collect()
    }

    /// Train with the stored AEM of the configured kind.
    pub fn train(&self, cfg: &ExperimentConfig, config_dir: &Path) -> Result<TrainTrace> {
        let aem = self.load_aem(cfg.training.aem)?;
        let tc = cfg.train_config(config_dir)?;
        let trace = train(&tc, &aem)?;
        self.save_config(cfg)?;
        self.write(&self.trace_path(), &trace.to_jsonl())?;
        save_theta(&self.theta_path(), trace.final_theta())?;
        Ok(trace)
    }

    /// Replay the stored trace and write `metrics.csv`. Reads the trace and
    /// AEMs, never rewrites them.
    pub fn evaluate(&self, cfg: &ExperimentConfig) -> Result<MetricsTable> {
        let trace = self.load_trace()?;
        let train_aem = self.load_aem(trace.header.aem_kind)?;
        if train_aem.fingerprint() != trace.header.aem_fingerprint {
            return Err(Error::Config(format!(
                "trace was trained with AEM {} but {} holds {}",
                trace.header.aem_fingerprint,
                self.aem_path(trace.header.aem_kind).display(),
                train_aem.fingerprint()
            )));
        }
        let post = cfg
            .evaluation
            .post_aems
            .iter()
            .map(|&k| self.load_aem(k))
            .collect::<Result<Vec<_>>>()?;
        let plan = EvaluationPlan {
            batch: cfg.batch_plan()?,
            shot_sizes: cfg.evaluation.subsample_shots.clone(),
            repeats: cfg.evaluation.repeats,
        };
        let target = cfg.target.distribution(cfg.ansatz.n_qubits)?;
        let mut stream = rng::derived_stream(cfg.seed, &[EVALUATION_TAG]);
        let table = evaluate_trace(
            &trace,
            &target,
            &cfg.ansatz_spec()?,
            &cfg.device()?,
            &post,
            &plan,
            &mut stream,
        )?;
        table.save(&self.metrics_path())?;
        Ok(table)
    }

    pub fn summary(&self) -> Result<RunSummary> {
        let trace = self.load_trace()?;
        Ok(RunSummary {
            label: self.label(),
            train_aem: trace.header.aem_kind,
            min_mmd: trace.min_loss(),
            metrics: self.load_metrics()?,
        })
    }

    /// Summarize `runs` and write `report.csv` and `grid.csv` here.
    pub fn report(&self, runs: &[RunDir]) -> Result<Report> {
        let summaries = runs.iter().map(RunDir::summary).collect::<Result<Vec<_>>>()?;
        let report = summarize(&summaries);
        std::fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        self.write(&self.report_path(), &report.rows_csv())?;
        self.write(&self.grid_path(), &report.grid_csv())?;
        Ok(report)
    }
}
