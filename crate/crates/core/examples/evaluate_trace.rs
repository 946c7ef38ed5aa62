//! Post-processing a training run: replay every recorded θ through 5 × 2048
//! shot batches, mitigate the composites with each AEM class and estimate the
//! mean KL from 10 sub-samples.
//!
//! ```text
//! cargo run --release --example evaluate_trace -- [seed]
//! ```

use qcbm::ansatz::AnsatzSpec;
use qcbm::dist::TargetSpec;
use qcbm::execute::Backend;
use qcbm::harness::{evaluate_trace, summarize, EvaluationPlan, RunSummary};
use qcbm::mitigation::{build_aem, AssignmentErrorMatrix, KernelClass, DEFAULT_CALIBRATION_SHOTS};
use qcbm::rng;
use qcbm::simulator::DeviceProfile;
use qcbm::training::{train, TrainConfig};

fn main() -> qcbm::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let device = DeviceProfile::preset("tokyo-PB-like")?;
    let spec = AnsatzSpec::four_qubit("dc3_star")?;
    let target = TargetSpec::Bas22.distribution(4)?;

    let identity = AssignmentErrorMatrix::identity(16, &device.name);
    let mut cfg = TrainConfig::new(TargetSpec::Bas22, spec.clone(), device.clone(), KernelClass::Identity);
    cfg.seed = seed;
    let trace = train(&cfg, &identity)?;

    let mut r = rng::derived_stream(seed, &[1]);
    let calibration = Backend::Sampled {
        shots: DEFAULT_CALIBRATION_SHOTS,
    };
    let hw = build_aem(KernelClass::Hw, &spec, &device, calibration, &mut r)?;
    let circ = build_aem(KernelClass::Circ, &spec, &device, calibration, &mut r)?;
    let plan = EvaluationPlan::default();
    let metrics = evaluate_trace(&trace, &target, &spec, &device, &[identity, hw, circ], &plan, &mut r)?;

    println!("step  <KL> at 2048 shots: identity      hw    circ");
    for step in (0..trace.len()).step_by(5) {
        let cell = |k| {
            metrics
                .series(k, 2048)
                .find(|row| row.step == step)
                .map(|row| {
                    if row.is_divergent() {
                        "   inf".to_string()
                    } else {
                        format!("{:.4}", row.mean_kl)
                    }
                })
                .unwrap_or_default()
        };
        println!(
            "{step:>4}  {:>31} {:>7} {:>7}",
            cell(KernelClass::Identity),
            cell(KernelClass::Hw),
            cell(KernelClass::Circ)
        );
    }

    let report = summarize(&[RunSummary {
        label: format!("seed-{seed}"),
        train_aem: KernelClass::Identity,
        min_mmd: trace.min_loss(),
        metrics,
    }]);
    println!(
        "\nminimum <KL> (rows: training AEM, columns: post-processing AEM)\n{}",
        report.grid_csv()
    );
    Ok(())
}
