//! Experiment configuration file (TOML).
//!
//! ```toml
//! seed = 7
//!
//! [target]
//! kind = "bas22"            # bas22 | poisson1 | poisson2 | custom
//!
//! [ansatz]
//! n_qubits = 4
//! layout = "dc3_star"       # dc2 | dc3_line | dc3_star | { name, pairs }
//!
//! [device]
//! preset = "tokyo-PB-like"  # or inline: name, n_qubits, coupling, noise
//!
//! [training]
//! aem = "identity"          # identity | hw | circ
//! steps = 25
//! shots = 2048
//! backend = "sampled"       # sampled | exact
//! alpha = 0.25
//! sigma = 0.1
//! init = "random"           # or { from_file = "theta.json" }
//!
//! [calibration]
//! shots = 4096
//!
//! [evaluation]
//! batches = 5
//! batch_shots = 2048
//! post_aems = ["identity", "hw", "circ"]
//! subsample_shots = [4096, 2048, 512]
//! repeats = 10
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, EntanglerLayout, ParameterVector};
use crate::dist::TargetSpec;
use crate::error::{Error, Result};
use crate::execute::Backend;
use crate::mitigation::{KernelClass, DEFAULT_CALIBRATION_SHOTS};
use crate::simulator::{DeviceProfile, NoiseModel};
use crate::training::{Init, TrainConfig, DEFAULT_ALPHA, DEFAULT_SHOTS_PER_EVAL, DEFAULT_SIGMA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub target: TargetSpec,
    #[serde(default)]
    pub ansatz: AnsatzSection,
    pub device: DeviceSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    #[serde(default = "default_n_qubits")]
    pub n_qubits: usize,
    #[serde(default = "default_layout")]
    pub layout: EntanglerLayout,
}

fn default_n_qubits() -> usize {
    4
}

fn default_layout() -> EntanglerLayout {
    EntanglerLayout::named("dc3_star").expect("built-in layout")
}

impl Default for AnsatzSection {
    fn default() -> Self {
        Self {
            n_qubits: default_n_qubits(),
            layout: default_layout(),
        }
    }
}

/// Either a named preset or a fully inline device.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
}

impl DeviceSection {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.to_string()),
            ..Self::default()
        }
    }

    pub fn resolve(&self) -> Result<DeviceProfile> {
        let inline = self.name.is_some() || self.n_qubits.is_some() || self.coupling.is_some() || self.noise.is_some();
        match (&self.preset, inline) {
            (Some(_), true) => Err(Error::Config(
                "[device] takes either `preset` or inline fields, not both".into(),
            )),
            (Some(p), false) => DeviceProfile::preset(p),
            (None, true) => {
                let missing = |f: &str| Error::Config(format!("inline [device] is missing `{f}`"));
                DeviceProfile::new(
                    self.name.clone().ok_or_else(|| missing("name"))?,
                    self.n_qubits.ok_or_else(|| missing("n_qubits"))?,
                    self.coupling.clone().ok_or_else(|| missing("coupling"))?,
                    self.noise.clone().unwrap_or_else(NoiseModel::ideal),
                )
            }
            (None, false) => Err(Error::Config("[device] needs `preset` or inline fields".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Sampled,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSection {
    FromFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitChoice {
    Named(String),
    File(InitSection),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    #[serde(default = "default_aem")]
    pub aem: KernelClass,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_init")]
    pub init: InitChoice,
}

fn default_aem() -> KernelClass {
    KernelClass::Identity
}
fn default_steps() -> usize {
    25
}
fn default_shots() -> u64 {
    DEFAULT_SHOTS_PER_EVAL
}
fn default_backend() -> BackendKind {
    BackendKind::Sampled
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}
fn default_init() -> InitChoice {
    InitChoice::Named("random".into())
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            aem: default_aem(),
            steps: default_steps(),
            shots: default_shots(),
            backend: default_backend(),
            alpha: default_alpha(),
            sigma: default_sigma(),
            init: default_init(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(default = "default_calibration_shots")]
    pub shots: u64,
}

fn default_calibration_shots() -> u64 {
    DEFAULT_CALIBRATION_SHOTS
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            shots: default_calibration_shots(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    /// Circuits per batch; defaults from the device preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_shots: Option<u64>,
    #[serde(default = "default_post_aems")]
    pub post_aems: Vec<KernelClass>,
    #[serde(default = "default_subsample_shots")]
    pub subsample_shots: Vec<u64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_post_aems() -> Vec<KernelClass> {
    KernelClass::ALL.to_vec()
}
fn default_subsample_shots() -> Vec<u64> {
    vec![4096, 2048, 512]
}
fn default_repeats() -> usize {
    10
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            batches: None,
            batch_shots: None,
            post_aems: default_post_aems(),
            subsample_shots: default_subsample_shots(),
            repeats: default_repeats(),
        }
    }
}

/// `batches` identical circuits of `shots` each, pooled into one composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batches: usize,
    pub shots: u64,
}

impl BatchPlan {
    /// Five batches of 2048 shots (composite of 10240).
    pub const FIVE_BY_2048: BatchPlan = BatchPlan {
        batches: 5,
        shots: 2048,
    };
    /// Two batches of 8192 shots (composite of 16384).
    pub const TWO_BY_8192: BatchPlan = BatchPlan {
        batches: 2,
        shots: 8192,
    };

    pub fn total_shots(&self) -> u64 {
        self.batches as u64 * self.shots
    }

    /// Default plan for a named device preset.
    pub fn for_preset(preset: &str) -> BatchPlan {
        if preset == "valencia" {
            Self::TWO_BY_8192
        } else {
            Self::FIVE_BY_2048
        }
    }
}

impl ExperimentConfig {
    /// Minimal config for a preset device; everything else at defaults.
    pub fn for_preset(target: TargetSpec, preset: &str) -> Self {
        Self {
            seed: 0,
            output_dir: None,
            target,
            ansatz: AnsatzSection::default(),
            device: DeviceSection::preset(preset),
            training: TrainingSection::default(),
            calibration: CalibrationSection::default(),
            evaluation: EvaluationSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn ansatz_spec(&self) -> Result<AnsatzSpec> {
        AnsatzSpec::new(self.ansatz.n_qubits, self.ansatz.layout.clone())
    }

    pub fn device(&self) -> Result<DeviceProfile> {
        self.device.resolve()
    }

    pub fn batch_plan(&self) -> Result<BatchPlan> {
        let preset_plan = self.device.preset.as_deref().map(BatchPlan::for_preset);
        let plan = match (self.evaluation.batches, self.evaluation.batch_shots, preset_plan) {
            (Some(batches), Some(shots), _) => BatchPlan { batches, shots },
            (None, None, Some(p)) => p,
            (None, None, None) => BatchPlan::FIVE_BY_2048,
            _ => {
                return Err(Error::Config(
                    "[evaluation] needs both `batches` and `batch_shots`, or neither".into(),
                ))
            }
        };
        if plan.batches == 0 || plan.shots == 0 {
            return Err(Error::Config("batch plan must be non-empty".into()));
        }
        if let Some(p) = preset_plan {
            if p.total_shots() != plan.total_shots() {
                return Err(Error::Config(format!(
                    "batch plan {}x{} = {} shots does not match the {} preset composite of {}",
                    plan.batches,
                    plan.shots,
                    plan.total_shots(),
                    self.device.preset.as_deref().unwrap_or_default(),
                    p.total_shots()
                )));
            }
        }
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.ansatz_spec()?;
        let device = self.device()?;
        if device.n_qubits != spec.n_qubits {
            return Err(Error::Config(format!(
                "ansatz has {} qubits but device `{}` has {}",
                spec.n_qubits, device.name, device.n_qubits
            )));
        }
        self.target.distribution(spec.n_qubits)?;
        self.batch_plan()?;
        if self.training.shots == 0 || self.calibration.shots == 0 {
            return Err(Error::Config("shot counts must be at least 1".into()));
        }
        if self.evaluation.repeats == 0 {
            return Err(Error::Config("evaluation.repeats must be at least 1".into()));
        }
        if self.evaluation.subsample_shots.contains(&0) {
            return Err(Error::Config("sub-sample shot sizes must be at least 1".into()));
        }
        if let InitChoice::Named(n) = &self.training.init {
            if n != "random" {
                return Err(Error::Config(format!(
                    "training.init must be \"random\" or {{ from_file = \"...\" }}, got \"{n}\""
                )));
            }
        }
        Ok(())
    }

    /// AEM kinds this experiment needs, training kind first.
    pub fn aem_kinds(&self) -> Vec<KernelClass> {
        let mut kinds = vec![self.training.aem];
        for k in &self.evaluation.post_aems {
            if !kinds.contains(k) {
                kinds.push(*k);
            }
        }
        kinds
    }

    pub fn backend(&self) -> Backend {
        match self.training.backend {
            BackendKind::Exact => Backend::Exact,
            BackendKind::Sampled => Backend::Sampled {
                shots: self.training.shots,
            },
        }
    }

    pub fn calibration_backend(&self) -> Backend {
        Backend::Sampled {
            shots: self.calibration.shots,
        }
    }

    /// Training config; relative `from_file` paths resolve against `base`.
    pub fn train_config(&self, base: &Path) -> Result<TrainConfig> {
        let init = match &self.training.init {
            InitChoice::Named(_) => Init::Random,
            InitChoice::File(InitSection::FromFile(p)) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                Init::Fixed(load_theta(&path)?)
            }
        };
        let cfg = TrainConfig {
            target: self.target.clone(),
            spec: self.ansatz_spec()?,
            device: self.device()?,
            aem_kind: self.training.aem,
            steps: self.training.steps,
            backend: self.backend(),
            seed: self.seed,
            init,
            alpha: self.training.alpha,
            sigma: self.training.sigma,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Read a parameter vector stored as a JSON array of floats.
pub fn load_theta(path: &Path) -> Result<ParameterVector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

pub fn save_theta(path: &Path, theta: &ParameterVector) -> Result<()> {
    let text = serde_json::to_string(theta).expect("floats serialize");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
