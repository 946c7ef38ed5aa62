//! Replaying a training trace through the evaluation batch plan.

use std::io;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Deserialize;

use super::config::BatchPlan;
use super::fmt_float;
use crate::ansatz::{self, AnsatzSpec};
use crate::dist::{self, CountVector, ProbabilityDistribution};
use crate::error::{Error, Result};
use crate::execute;
use crate::mitigation::{self, AssignmentErrorMatrix, KernelClass};
use crate::rng;
use crate::simulator::DeviceProfile;
use crate::training::TrainTrace;

/// What to do with each recorded parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationPlan {
    pub batch: BatchPlan,
    pub shot_sizes: Vec<u64>,
    pub repeats: usize,
}

impl Default for EvaluationPlan {
    fn default() -> Self {
        Self {
            batch: BatchPlan::FIVE_BY_2048,
            shot_sizes: vec![4096, 2048, 512],
            repeats: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MetricRow {
    pub step: usize,
    pub post_aem: KernelClass,
    pub shots: u64,
    pub mean_kl: f64,
    pub stddev: f64,
    pub divergent: usize,
    pub repeats: usize,
    pub composite_shots: f64,
    pub mitigated_shots: f64,
}

impl MetricRow {
    pub fn is_divergent(&self) -> bool {
        self.divergent > 0 || self.mean_kl.is_infinite()
    }
}

const METRICS_HEADER: [&str; 9] = [
    "step",
    "post_aem",
    "shots",
    "mean_kl",
    "stddev",
    "divergent",
    "repeats",
    "composite_shots",
    "mitigated_shots",
];

/// One row per (step, post-AEM, sub-sample size), in that nesting order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    pub rows: Vec<MetricRow>,
}

impl MetricsTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows for one post-AEM and sub-sample size, in step order.
    pub fn series(&self, post: KernelClass, shots: u64) -> impl Iterator<Item = &MetricRow> {
        self.rows.iter().filter(move |r| r.post_aem == post && r.shots == shots)
    }

    /// Smallest mean KL over steps for one post-AEM and shot size. Divergent
    /// steps only win when every step diverged.
    pub fn min_mean_kl(&self, post: KernelClass, shots: u64) -> Option<&MetricRow> {
        self.series(post, shots)
            .min_by(|a, b| a.mean_kl.total_cmp(&b.mean_kl).then(a.step.cmp(&b.step)))
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(METRICS_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.step.to_string(),
                r.post_aem.to_string(),
                r.shots.to_string(),
                fmt_float(r.mean_kl),
                fmt_float(r.stddev),
                r.divergent.to_string(),
                r.repeats.to_string(),
                fmt_float(r.composite_shots),
                fmt_float(r.mitigated_shots),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn from_csv<R: io::Read>(r: R) -> csv::Result<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let rows = reader.deserialize().collect::<csv::Result<Vec<MetricRow>>>()?;
        Ok(Self { rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(io::BufWriter::new(f))
            .map_err(|e| Error::format(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(io::BufReader::new(f)).map_err(|e| Error::format(path, e))
    }
}

/// Pooled counts of the batch plan for every recorded parameter vector.
///
/// Each step gets its own derived stream, so the result does not depend on
/// thread scheduling.
pub fn trace_composites(
    trace: &TrainTrace,
    spec: &AnsatzSpec,
    device: &DeviceProfile,
    batch: BatchPlan,
    seed: u64,
) -> Result<Vec<CountVector>> {
    trace
        .records
        .par_iter()
        .map(|rec| {
            let circuit = ansatz::build_circuit(spec, &rec.theta)?;
            let q = execute::device_distribution(&circuit, device)?;
            let mut stream = rng::derived_stream(seed, &[rec.step as u64, 0]);
            let batches = (0..batch.batches)
                .map(|_| dist::subsample(q.probs(), batch.shots, &mut stream))
                .collect::<Result<Vec<_>>>()?;
            dist::composite(&batches)
        })
        .collect()
}

/// Mitigate each composite with each post-AEM and estimate ⟨KL⟩ at every
/// sub-sample size.
///
/// Sub-samples for a given (step, shot size) use the same stream under every
/// post-AEM, so differences between AEMs are not masked by sampling noise.
pub fn evaluate_composites(
    steps: &[usize],
    composites: &[CountVector],
    target: &ProbabilityDistribution,
    post_aems: &[AssignmentErrorMatrix],
    plan: &EvaluationPlan,
    seed: u64,
) -> Result<MetricsTable> {
    if steps.len() != composites.len() {
        return Err(Error::Shape {
            expected: steps.len(),
            actual: composites.len(),
        });
    }
    for aem in post_aems {
        if aem.n_states() != target.n_states() {
            return Err(Error::Shape {
                expected: target.n_states(),
                actual: aem.n_states(),
            });
        }
    }
    let per_step = steps
        .par_iter()
        .zip(composites)
        .map(|(&step, composite)| {
            let mut rows = Vec::with_capacity(post_aems.len() * plan.shot_sizes.len());
            for aem in post_aems {
                let mitigated = match mitigation::mitigate(composite, aem) {
                    Ok(c) => Some(c),
                    Err(Error::DegenerateMitigation { .. }) => None,
                    Err(e) => return Err(e),
                };
                for &shots in &plan.shot_sizes {
                    let row = match &mitigated {
                        Some(m) => {
                            let mut stream = rng::derived_stream(seed, &[step as u64, 1, shots]);
                            let est = dist::mean_kl(target, m, shots, plan.repeats, &mut stream)?;
                            MetricRow {
                                step,
                                post_aem: aem.kernel_class(),
                                shots,
                                mean_kl: est.mean,
                                stddev: est.stddev,
                                divergent: est.divergent,
                                repeats: est.repeats,
                                composite_shots: composite.effective_shots(),
                                mitigated_shots: m.effective_shots(),
                            }
                        }
                        None => MetricRow {
                            step,
                            post_aem: aem.kernel_class(),
                            shots,
                            mean_kl: f64::INFINITY,
                            stddev: 0.0,
                            divergent: plan.repeats,
                            repeats: plan.repeats,
                            composite_shots: composite.effective_shots(),
                            mitigated_shots: 0.0,
                        },
                    };
                    rows.push(row);
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsTable {
        rows: per_step.into_iter().flatten().collect(),
    })
}

/// Run the batch plan at every recorded θ, pool each batch set into a
/// composite, and sweep post-AEMs × sub-sample sizes.
pub fn evaluate_trace<R: Rng + ?Sized>(
    trace: &TrainTrace,
    target: &ProbabilityDistribution,
    spec: &AnsatzSpec,
    device: &DeviceProfile,
    post_aems: &[AssignmentErrorMatrix],
    plan: &EvaluationPlan,
    rng: &mut R,
) -> Result<MetricsTable> {
    if plan.repeats == 0 || plan.batch.batches == 0 || plan.shot_sizes.is_empty() {
        return Err(Error::Config("evaluation plan has nothing to do".into()));
    }
    let seed: u64 = rng.gen();
    let composites = trace_composites(trace, spec, device, plan.batch, seed)?;
    let steps: Vec<usize> = trace.records.iter().map(|r| r.step).collect();
    evaluate_composites(&steps, &composites, target, post_aems, plan, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::ParameterVector;
    use crate::dist::bas_target;
    use crate::execute::Backend;
    use crate::simulator::{NoiseModel, ReadoutError};
    use crate::training::{StepRecord, TraceHeader};

    fn trace_of(thetas: Vec<ParameterVector>) -> TrainTrace {
        TrainTrace {
            header: TraceHeader {
                config_hash: "test".into(),
                aem_kind: KernelClass::Identity,
                aem_fingerprint: "none".into(),
            },
            records: thetas
                .into_iter()
                .enumerate()
                .map(|(step, theta)| StepRecord {
                    step,
                    theta,
                    raw: CountVector::new(vec![1.0; 16]).unwrap(),
                    mitigated: None,
                    loss: None,
                    event: None,
                })
                .collect(),
        }
    }

    #[test]
    fn identity_on_target_composite_is_near_zero() {
        let p = bas_target(2, 2).unwrap();
        let composite = CountVector::new(p.probs().iter().map(|x| x * 1e6).collect()).unwrap();
        let plan = EvaluationPlan {
            shot_sizes: vec![100_000],
            ..EvaluationPlan::default()
        };
        let aem = AssignmentErrorMatrix::identity(16, "ideal");
        let t = evaluate_composites(&[0], &[composite], &p, &[aem], &plan, 1).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.rows[0].mean_kl < 1e-3, "{}", t.rows[0].mean_kl);
        assert_eq!(t.rows[0].divergent, 0);
    }

    #[test]
    fn row_count_and_composite_size() {
        let spec = AnsatzSpec::four_qubit("dc3_star").unwrap();
        let device = DeviceProfile::preset("tokyo-PB-like").unwrap();
        let p = bas_target(2, 2).unwrap();
        let thetas = (0..3)
            .map(|i| ParameterVector(vec![0.3 * i as f64 + 0.1; 28]))
            .collect();
        let trace = trace_of(thetas);
        let aems = [
            AssignmentErrorMatrix::identity(16, "x"),
            AssignmentErrorMatrix::from_readout(&device.noise, 4, "x").unwrap(),
        ];
        let plan = EvaluationPlan::default();
        let t = evaluate_trace(&trace, &p, &spec, &device, &aems, &plan, &mut rng::stream(4)).unwrap();
        assert_eq!(t.len(), 3 * 2 * 3);
        assert!(t.rows.iter().all(|r| r.composite_shots == 10240.0));
        let again = evaluate_trace(&trace, &p, &spec, &device, &aems, &plan, &mut rng::stream(4)).unwrap();
        assert_eq!(t, again);
        assert_eq!(
            MetricsTable::from_csv(t.to_csv().as_bytes()).unwrap().to_csv(),
            t.to_csv()
        );
    }

    #[test]
    fn exact_readout_inverse_beats_identity() {
        let spec = AnsatzSpec::four_qubit("dc3_line").unwrap();
        let noise = NoiseModel::readout_only(vec![ReadoutError { p01: 0.02, p10: 0.05 }; 4]);
        let device = DeviceProfile::new("ro", 4, DeviceProfile::ideal(4).coupling, noise.clone()).unwrap();
        let p = bas_target(2, 2).unwrap();
        // A trained-ish point: noiseless training output.
        let mut cfg = crate::training::TrainConfig::new(
            dist::TargetSpec::Bas22,
            spec.clone(),
            DeviceProfile::ideal(4),
            KernelClass::Identity,
        );
        cfg.backend = Backend::Exact;
        cfg.steps = 120;
        let tr = crate::training::train(&cfg, &AssignmentErrorMatrix::identity(16, "ideal")).unwrap();
        let late = trace_of(tr.records[100..].iter().map(|r| r.theta.clone()).collect());
        let aems = [
            AssignmentErrorMatrix::identity(16, "ro"),
            AssignmentErrorMatrix::from_readout(&noise, 4, "ro").unwrap(),
        ];
        let plan = EvaluationPlan {
            batch: BatchPlan {
                batches: 5,
                shots: 100_000,
            },
            shot_sizes: vec![100_000],
            repeats: 3,
        };
        let t = evaluate_trace(&late, &p, &spec, &device, &aems, &plan, &mut rng::stream(2)).unwrap();
        for step in 0..late.len() {
            let id = t
                .rows
                .iter()
                .find(|r| r.step == step && r.post_aem == KernelClass::Identity)
                .unwrap();
            let hw = t
                .rows
                .iter()
                .find(|r| r.step == step && r.post_aem == KernelClass::Hw)
                .unwrap();
            assert!(hw.mean_kl < id.mean_kl, "step {step}: {} vs {}", hw.mean_kl, id.mean_kl);
        }
    }

    #[test]
    fn missing_target_state_diverges() {
        let p = bas_target(2, 2).unwrap();
        let mut counts = vec![0.0; 16];
        for &i in &p.support()[1..] {
            counts[i] = 1000.0;
        }
        let plan = EvaluationPlan {
            shot_sizes: vec![2048],
            repeats: 4,
            ..EvaluationPlan::default()
        };
        let t = evaluate_composites(
            &[0],
            &[CountVector::new(counts).unwrap()],
            &p,
            &[AssignmentErrorMatrix::identity(16, "x")],
            &plan,
            0,
        )
        .unwrap();
        assert_eq!(t.rows[0].divergent, 4);
        assert!(t.rows[0].mean_kl.is_infinite());
        assert!(t.to_csv().contains(",inf,"));
    }
}
