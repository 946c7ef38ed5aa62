//! A layout that does not fit the device: dc2 on a star coupling needs SWAPs,
//! and the extra CNOTs show up in the circuit AEM and the training loss.
//!
//! ```text
//! cargo run --release --example swap_noise
//! ```

use qcbm::ansatz::{build_circuit, cnot_count, route, AnsatzSpec};
use qcbm::dist::TargetSpec;
use qcbm::execute::Backend;
use qcbm::mitigation::{build_aem, frobenius_distance, KernelClass, DEFAULT_CALIBRATION_SHOTS};
use qcbm::rng;
use qcbm::simulator::DeviceProfile;
use qcbm::training::{train, TrainConfig};

fn main() -> qcbm::Result<()> {
    let spec = AnsatzSpec::four_qubit("dc2")?;
    let calibration = Backend::Sampled {
        shots: DEFAULT_CALIBRATION_SHOTS,
    };
    for preset in ["tokyo-PB-like", "boeblingen-T1"] {
        let device = DeviceProfile::preset(preset)?;
        let circuit = build_circuit(&spec, &qcbm::ansatz::ParameterVector::zeros(&spec))?;
        let compiled = cnot_count(&route(&circuit, &device.coupling)?.circuit);
        println!("{preset}: compiled CNOT count {compiled}");
        for kind in KernelClass::ALL {
            let aem = build_aem(kind, &spec, &device, calibration, &mut rng::stream(1))?;
            let mut cfg = TrainConfig::new(TargetSpec::Bas22, spec.clone(), device.clone(), kind);
            cfg.steps = 20;
            cfg.seed = 2;
            let trace = train(&cfg, &aem)?;
            println!(
                "  {kind:<8} |1-K|_F {:.3}  min MMD {:.5}",
                frobenius_distance(&aem),
                trace.min_loss().unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
