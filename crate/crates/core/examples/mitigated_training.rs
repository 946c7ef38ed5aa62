//! Mitigation inside the training loop: the same device and seeds trained
//! with the identity, hardware and circuit AEMs.
//!
//! ```text
//! cargo run --release --example mitigated_training
//! ```

use qcbm::ansatz::AnsatzSpec;
use qcbm::dist::TargetSpec;
use qcbm::execute::Backend;
use qcbm::mitigation::{build_aem, KernelClass, DEFAULT_CALIBRATION_SHOTS};
use qcbm::rng;
use qcbm::simulator::DeviceProfile;
use qcbm::training::{train, TrainConfig};

fn main() -> qcbm::Result<()> {
    let device = DeviceProfile::preset("boeblingen-T0")?;
    let spec = AnsatzSpec::four_qubit("dc3_star")?;
    println!("device {}, 20 Adam steps, 2048 shots per evaluation\n", device.name);
    println!(
        "seed  {:>10} {:>10} {:>10}   (min mitigated MMD)",
        "identity", "hw", "circ"
    );
    for seed in 0..3 {
        let mut row = Vec::new();
        for kind in KernelClass::ALL {
            let aem = build_aem(
                kind,
                &spec,
                &device,
                Backend::Sampled {
                    shots: DEFAULT_CALIBRATION_SHOTS,
                },
                &mut rng::derived_stream(seed, &[99]),
            )?;
            let mut cfg = TrainConfig::new(TargetSpec::Bas22, spec.clone(), device.clone(), kind);
            cfg.steps = 20;
            cfg.seed = seed;
            let trace = train(&cfg, &aem)?;
            row.push(trace.min_loss().unwrap_or(f64::NAN));
        }
        println!("{seed:>4}  {:>10.5} {:>10.5} {:>10.5}", row[0], row[1], row[2]);
    }
    Ok(())
}
