//! Drift study: AEMs calibrated on eight jittered copies of the device are
//! used to re-process the same stored composites.
//!
//! ```text
//! cargo run --release --example aem_drift
//! ```

use qcbm::ansatz::AnsatzSpec;
use qcbm::dist::TargetSpec;
use qcbm::execute::Backend;
use qcbm::harness::drift::DEFAULT_JITTER;
use qcbm::harness::{aem_drift_study, aem_series, EvaluationPlan};
use qcbm::mitigation::{AssignmentErrorMatrix, KernelClass, DEFAULT_CALIBRATION_SHOTS};
use qcbm::rng;
use qcbm::simulator::DeviceProfile;
use qcbm::training::{train, TrainConfig};

fn main() -> qcbm::Result<()> {
    let device = DeviceProfile::preset("tokyo-PA")?;
    let spec = AnsatzSpec::four_qubit("dc3_star")?;
    let target = TargetSpec::Bas22.distribution(4)?;
    let mut cfg = TrainConfig::new(TargetSpec::Bas22, spec.clone(), device.clone(), KernelClass::Identity);
    cfg.seed = 8;
    let trace = train(&cfg, &AssignmentErrorMatrix::identity(16, &device.name))?;

    let calibration = Backend::Sampled {
        shots: DEFAULT_CALIBRATION_SHOTS,
    };
    let plan = EvaluationPlan {
        shot_sizes: vec![2048],
        ..EvaluationPlan::default()
    };
    let last = trace.len() - 1;
    for kind in [KernelClass::Hw, KernelClass::Circ] {
        let series = aem_series(kind, &spec, &device, 8, DEFAULT_JITTER, calibration, 2019)?;
        let study = aem_drift_study(&series, &trace, &target, &spec, &device, &plan, &mut rng::stream(5))?;
        println!("{kind}: date  |1-K|_F   <KL> reduction over the last 5 steps");
        for n in &study.norms {
            let reductions: Vec<String> = (last - 4..=last)
                .map(|s| format!("{:+.3}", study.reduction(n.date, s, 2048).unwrap_or(f64::NAN)))
                .collect();
            println!("      {:>4}  {:.3}    {}", n.date, n.frobenius, reductions.join(" "));
        }
    }
    Ok(())
}
