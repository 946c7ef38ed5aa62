//! Robustness of post-processing to calibration drift.
//!
//! A "date" is a copy of the device whose readout flips and depolarizing
//! rates are each scaled by an independent factor in `1 ± rel`. One AEM is
//! calibrated per date, and the same stored composites are re-processed
//! under each of them.

use std::io;

use rand::Rng;

use super::evaluate::{evaluate_composites, trace_composites, EvaluationPlan, MetricsTable};
use super::fmt_float;
use crate::ansatz::AnsatzSpec;
use crate::dist::ProbabilityDistribution;
use crate::error::{Error, Result};
use crate::execute::Backend;
use crate::mitigation::{self, frobenius_distance, AssignmentErrorMatrix, KernelClass};
use crate::rng;
use crate::simulator::{DeviceProfile, ReadoutError};
use crate::training::TrainTrace;

/// Relative jitter used by the drift examples.
pub const DEFAULT_JITTER: f64 = 0.2;

/// Copy of `device` with every noise rate scaled by `1 + U(-rel, rel)`.
pub fn jitter_device<R: Rng + ?Sized>(device: &DeviceProfile, rel: f64, rng: &mut R) -> Result<DeviceProfile> {
    if !(0.0..1.0).contains(&rel) {
        return Err(Error::Domain(format!("relative jitter {rel} outside [0, 1)")));
    }
    let mut scale = |x: f64| {
        let f = if rel > 0.0 {
            1.0 + rng.gen_range(-rel..=rel)
        } else {
            1.0
        };
        (x * f).min(0.5)
    };
    let mut d = device.clone();
    d.noise.readout = d
        .noise
        .readout
        .iter()
        .map(|r| ReadoutError {
            p01: scale(r.p01),
            p10: scale(r.p10),
        })
        .collect();
    d.noise.depol_1q = scale(d.noise.depol_1q);
    d.noise.depol_2q = scale(d.noise.depol_2q);
    d.validate()?;
    Ok(d)
}

/// One calibrated AEM per simulated date.
pub fn aem_series(
    kind: KernelClass,
    spec: &AnsatzSpec,
    device: &DeviceProfile,
    dates: usize,
    rel: f64,
    calibration: Backend,
    seed: u64,
) -> Result<Vec<AssignmentErrorMatrix>> {
    (0..dates as u64)
        .map(|date| {
            let drifted = jitter_device(device, rel, &mut rng::derived_stream(seed, &[date, 0]))?;
            let mut stream = rng::derived_stream(seed, &[date, 1]);
            mitigation::build_aem(kind, spec, &drifted, calibration, &mut stream)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftNorm {
    pub date: usize,
    pub kind: KernelClass,
    pub frobenius: f64,
    pub condition_number: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub norms: Vec<DriftNorm>,
    /// Unmitigated sweep of the same composites.
    pub baseline: MetricsTable,
    /// One sweep per AEM in the series, in series order.
    pub sweeps: Vec<MetricsTable>,
}

impl DriftReport {
    /// `⟨KL⟩(unmitigated) − ⟨KL⟩(date)` at one step and shot size; positive
    /// means the AEM helped.
    pub fn reduction(&self, date: usize, step: usize, shots: u64) -> Option<f64> {
        let pick = |t: &MetricsTable| {
            t.rows
                .iter()
                .find(|r| r.step == step && r.shots == shots)
                .map(|r| r.mean_kl)
        };
        Some(pick(&self.baseline)? - pick(self.sweeps.get(date)?)?)
    }

    pub fn write_norms_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["date", "kind", "frobenius", "condition_number"])?;
        for n in &self.norms {
            out.write_record([
                n.date.to_string(),
                n.kind.to_string(),
                fmt_float(n.frobenius),
                fmt_float(n.condition_number),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Long-format sweep: the metrics columns prefixed by the date, with the
    /// unmitigated baseline under date `baseline`.
    pub fn write_sweeps_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["date", "step", "post_aem", "shots", "mean_kl", "stddev", "divergent"])?;
        let tagged = std::iter::once(("baseline".to_string(), &self.baseline))
            .chain(self.sweeps.iter().enumerate().map(|(d, t)| (d.to_string(), t)));
        for (date, table) in tagged {
            for r in &table.rows {
                out.write_record([
                    date.clone(),
                    r.step.to_string(),
                    r.post_aem.to_string(),
                    r.shots.to_string(),
                    fmt_float(r.mean_kl),
                    fmt_float(r.stddev),
                    r.divergent.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Re-process one trace's composites under every AEM of `series`.
pub fn aem_drift_study<R: Rng + ?Sized>(
    series: &[AssignmentErrorMatrix],
    trace: &TrainTrace,
    target: &ProbabilityDistribution,
    spec: &AnsatzSpec,
    device: &DeviceProfile,
    plan: &EvaluationPlan,
    rng: &mut R,
) -> Result<DriftReport> {
    if let Some(first) = series.first() {
        if let Some(bad) = series.iter().find(|a| a.n_states() != first.n_states()) {
            return Err(Error::Shape {
                expected: first.n_states(),
                actual: bad.n_states(),
            });
        }
    }
    let seed: u64 = rng.gen();
    let composites = trace_composites(trace, spec, device, plan.batch, seed)?;
    let steps: Vec<usize> = trace.records.iter().map(|r| r.step).collect();
    let identity = AssignmentErrorMatrix::identity(target.n_states(), &device.name);
    let baseline = evaluate_composites(&steps, &composites, target, &[identity], plan, seed)?;
    let sweeps = series
        .iter()
        .map(|aem| evaluate_composites(&steps, &composites, target, std::slice::from_ref(aem), plan, seed))
        .collect::<Result<Vec<_>>>()?;
    let norms = series
        .iter()
        .enumerate()
        .map(|(date, aem)| DriftNorm {
            date,
            kind: aem.kernel_class(),
            frobenius: frobenius_distance(aem),
            condition_number: aem.diagnostics().condition_number,
        })
        .collect();
    Ok(DriftReport {
        norms,
        baseline,
        sweeps,
    })
}
