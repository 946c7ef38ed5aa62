//! MMD loss, parameter-shift gradients over mitigated distributions, Adam,
//! and the training loop.
//!
//! Every circuit evaluation in a training step draws from its own stream
//! derived from `(seed, step, slot, sign)`, so a run is bit-reproducible no
//! matter how the evaluations are scheduled.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{self, AnsatzSpec, ParameterVector};
use crate::dist::{CountVector, ProbabilityDistribution, TargetSpec};
use crate::error::{Error, Result};
use crate::execute::{self, Backend};
use crate::mitigation::{self, AssignmentErrorMatrix, KernelClass};
use crate::rng;
use crate::simulator::DeviceProfile;

pub const DEFAULT_SIGMA: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 0.25;
pub const DEFAULT_SHOTS_PER_EVAL: u64 = 2048;

/// Gaussian kernel over integer basis labels,
/// `K(x, y) = exp(-(x - y)² / (2σ²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    sigma: f64,
    entries: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn gaussian(n_states: usize, sigma: f64) -> Result<Self> {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::Domain(format!("kernel bandwidth must be positive, got {sigma}")));
        }
        let entries = DMatrix::from_fn(n_states, n_states, |i, j| {
            let d = i as f64 - j as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        });
        let min_eig = entries.clone().symmetric_eigen().eigenvalues.min();
        if min_eig < -1e-12 {
            return Err(Error::Construction(format!(
                "kernel with bandwidth {sigma} is not positive semi-definite (eigenvalue {min_eig})"
            )));
        }
        Ok(Self { sigma, entries })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_states(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let a = DVector::from_column_slice(a);
        let b = DVector::from_column_slice(b);
        a.dot(&(&self.entries * b))
    }
}

fn check_dims(kernel: &KernelMatrix, n: usize) -> Result<()> {
    if kernel.n_states() != n {
        return Err(Error::Shape {
            expected: kernel.n_states(),
            actual: n,
        });
    }
    Ok(())
}

/// Squared MMD, `qᵀKq − 2qᵀKp + pᵀKp`, evaluated as `(q−p)ᵀK(q−p)`.
pub fn mmd_loss(q: &ProbabilityDistribution, p: &ProbabilityDistribution, kernel: &KernelMatrix) -> Result<f64> {
    check_dims(kernel, q.n_states())?;
    check_dims(kernel, p.n_states())?;
    let d: Vec<f64> = q.probs().iter().zip(p.probs()).map(|(a, b)| a - b).collect();
    Ok(kernel.bilinear(&d, &d))
}

/// Runs the ansatz on a device and mitigates the result.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'a> {
    pub spec: &'a AnsatzSpec,
    pub device: &'a DeviceProfile,
    pub aem: &'a AssignmentErrorMatrix,
    pub backend: Backend,
}

/// Raw and mitigated output of one circuit evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub raw: CountVector,
    pub mitigated: CountVector,
}

impl Evaluator<'_> {
    pub fn run_raw<R: Rng + ?Sized>(&self, theta: &ParameterVector, rng: &mut R) -> Result<CountVector> {
        let circuit = ansatz::build_circuit(self.spec, theta)?;
        execute::execute(&circuit, self.device, self.backend, rng)
    }

    pub fn evaluate<R: Rng + ?Sized>(&self, theta: &ParameterVector, rng: &mut R) -> Result<Evaluation> {
        let raw = self.run_raw(theta, rng)?;
        let mitigated = mitigation::mitigate(&raw, self.aem)?;
        Ok(Evaluation { raw, mitigated })
    }

    fn mitigated_distribution(
        &self,
        theta: &ParameterVector,
        seed: u64,
        path: [u64; 3],
    ) -> Result<ProbabilityDistribution> {
        let mut stream = rng::derived_stream(seed, &path);
        self.evaluate(theta, &mut stream)?.mitigated.normalize()
    }
}

const SIGN_PLUS: u64 = 1;
const SIGN_MINUS: u64 = 2;

/// Parameter-shift gradient of the MMD loss, given the unshifted mitigated
/// distribution `q`.
///
/// Component `s` is `q₊ᵀKq − q₋ᵀKq − q₊ᵀKp + q₋ᵀKp`, where `q±` are the
/// mitigated distributions with slot `s` shifted by `±π/2`.
pub fn mmd_gradient_at(
    theta: &ParameterVector,
    q: &ProbabilityDistribution,
    p: &ProbabilityDistribution,
    kernel: &KernelMatrix,
    eval: &Evaluator<'_>,
    seed: u64,
    step: u64,
) -> Result<Vec<f64>> {
    check_dims(kernel, q.n_states())?;
    check_dims(kernel, p.n_states())?;
    let kq = &kernel.entries * DVector::from_column_slice(q.probs());
    let kp = &kernel.entries * DVector::from_column_slice(p.probs());
    (0..theta.len())
        .into_par_iter()
        .map(|slot| {
            let shifted = |delta: f64, sign: u64| {
                eval.mitigated_distribution(&theta.shifted(slot, delta), seed, [step, slot as u64, sign])
                    .map_err(|e| match e {
                        Error::DegenerateMitigation { .. } => Error::DegenerateMitigation { slot: Some(slot) },
                        other => other,
                    })
            };
            let plus = DVector::from_column_slice(shifted(FRAC_PI_2, SIGN_PLUS)?.probs());
            let minus = DVector::from_column_slice(shifted(-FRAC_PI_2, SIGN_MINUS)?.probs());
            let diff = plus - minus;
            Ok(diff.dot(&kq) - diff.dot(&kp))
        })
        .collect()
}

/// Parameter-shift gradient including the unshifted evaluation
/// (`2·n_params + 1` circuit runs).
pub fn mmd_gradient<R: Rng + ?Sized>(
    theta: &ParameterVector,
    p: &ProbabilityDistribution,
    kernel: &KernelMatrix,
    eval: &Evaluator<'_>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let seed: u64 = rng.gen();
    let q = eval.mitigated_distribution(theta, seed, [0, theta.len() as u64, 0])?;
    mmd_gradient_at(theta, &q, p, kernel, eval, seed, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n_params: usize, alpha: f64) -> Self {
        Self {
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(state: &AdamState, grad: &[f64], theta: &ParameterVector) -> Result<(ParameterVector, AdamState)> {
    let n = theta.len();
    if grad.len() != n || state.first_moment.len() != n || state.second_moment.len() != n {
        return Err(Error::Shape {
            expected: n,
            actual: grad.len(),
        });
    }
    let mut next = state.clone();
    next.step_count += 1;
    let t = next.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let mut out = theta.0.clone();
    for i in 0..n {
        let g = grad[i];
        next.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        next.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        let m_hat = next.first_moment[i] / bc1;
        let v_hat = next.second_moment[i] / bc2;
        out[i] -= state.alpha * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok((ParameterVector(out), next))
}

/// Starting parameters for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform on `[-π, π)` per slot from the run seed.
    Random,
    Fixed(ParameterVector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub target: TargetSpec,
    pub spec: AnsatzSpec,
    pub device: DeviceProfile,
    pub aem_kind: KernelClass,
    pub steps: usize,
    pub backend: Backend,
    pub seed: u64,
    pub init: Init,
    pub alpha: f64,
    pub sigma: f64,
}

impl TrainConfig {
    /// Sampled-backend config with default hyper-parameters.
    pub fn new(target: TargetSpec, spec: AnsatzSpec, device: DeviceProfile, aem_kind: KernelClass) -> Self {
        Self {
            target,
            spec,
            device,
            aem_kind,
            steps: 25,
            backend: Backend::Sampled {
                shots: DEFAULT_SHOTS_PER_EVAL,
            },
            seed: 0,
            init: Init::Random,
            alpha: DEFAULT_ALPHA,
            sigma: DEFAULT_SIGMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.device.validate()?;
        if let Backend::Sampled { shots: 0 } = self.backend {
            return Err(Error::Config("shots per evaluation must be at least 1".into()));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.alpha
            )));
        }
        if let Init::Fixed(theta) = &self.init {
            if theta.len() != self.spec.n_params() {
                return Err(Error::Shape {
                    expected: self.spec.n_params(),
                    actual: theta.len(),
                });
            }
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(json)[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn initial_theta(&self) -> ParameterVector {
        match &self.init {
            Init::Fixed(theta) => theta.clone(),
            Init::Random => {
                let mut stream = rng::derived_stream(self.seed, &[u64::MAX]);
                ParameterVector((0..self.spec.n_params()).map(|_| stream.gen_range(-PI..PI)).collect())
            }
        }
    }
}

/// One recorded training step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub theta: ParameterVector,
    pub raw: CountVector,
    /// `None` when every mitigated count was clipped.
    pub mitigated: Option<ProbabilityDistribution>,
    pub loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub config_hash: String,
    pub aem_kind: KernelClass,
    pub aem_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub header: TraceHeader,
    pub records: Vec<StepRecord>,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn min_loss(&self) -> Option<f64> {
        self.records.iter().filter_map(|r| r.loss).reduce(f64::min)
    }

    pub fn final_theta(&self) -> &ParameterVector {
        &self.records.last().expect("trace has an initial record").theta
    }

    /// Header line followed by one JSON record per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty trace".into()))
            .and_then(|l| serde_json::from_str(l).map_err(|e| Error::Config(format!("trace header: {e}"))))?;
        let records = lines
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Config(format!("trace record {i}: {e}"))))
            .collect::<Result<Vec<StepRecord>>>()?;
        Ok(Self { header, records })
    }
}

/// Train the ansatz against the target with the given assignment matrix
/// applied at every evaluation.
pub fn train(config: &TrainConfig, aem: &AssignmentErrorMatrix) -> Result<TrainTrace> {
    config.validate()?;
    if aem.kernel_class() != config.aem_kind {
        return Err(Error::Config(format!(
            "config asks for a {} AEM but a {} AEM was supplied",
            config.aem_kind,
            aem.kernel_class()
        )));
    }
    if aem.n_states() != config.spec.n_states() {
        return Err(Error::Shape {
            expected: config.spec.n_states(),
            actual: aem.n_states(),
        });
    }
    let p = config.target.distribution(config.spec.n_qubits)?;
    let kernel = KernelMatrix::gaussian(p.n_states(), config.sigma)?;
    let eval = Evaluator {
        spec: &config.spec,
        device: &config.device,
        aem,
        backend: config.backend,
    };
    let base_slot = config.spec.n_params() as u64;

    let mut theta = config.initial_theta();
    let mut adam = AdamState::new(theta.len(), config.alpha);
    let mut records = Vec::with_capacity(config.steps + 1);
    for step in 0..=config.steps {
        let mut stream = rng::derived_stream(config.seed, &[step as u64, base_slot, 0]);
        let raw = eval.run_raw(&theta, &mut stream)?;
        let (mitigated, mut event) = match mitigation::mitigate(&raw, aem) {
            Ok(c) => (Some(c.normalize()?), None),
            Err(Error::DegenerateMitigation { .. }) => (
                None,
                Some("degenerate mitigation at base point; update skipped".to_string()),
            ),
            Err(e) => return Err(e),
        };
        let loss = mitigated.as_ref().map(|q| mmd_loss(q, &p, &kernel)).transpose()?;
        let mut next = None;
        if step < config.steps {
            if let Some(q) = &mitigated {
                match mmd_gradient_at(&theta, q, &p, &kernel, &eval, config.seed, step as u64) {
                    Ok(grad) => next = Some(adam_step(&adam, &grad, &theta)?),
                    Err(e @ Error::DegenerateMitigation { .. }) => {
                        event = Some(format!("{e}; update skipped"));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        records.push(StepRecord {
            step,
            theta: theta.clone(),
            raw,
            mitigated,
            loss,
            event,
        });
        if let Some((t, a)) = next {
            theta = t;
            adam = a;
        }
    }
    Ok(TrainTrace {
        header: TraceHeader {
            config_hash: config.hash(),
            aem_kind: aem.kernel_class(),
            aem_fingerprint: aem.fingerprint(),
        },
        records,
    })
}
