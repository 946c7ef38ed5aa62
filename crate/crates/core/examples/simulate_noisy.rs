//! The ansatz on the built-in device presets: exact output, noisy output and
//! a finite-shot sample.
//!
//! ```text
//! cargo run --example simulate_noisy
//! ```

use qcbm::ansatz::{build_circuit, cnot_count, AnsatzSpec, ParameterVector};
use qcbm::dist::BasisState;
use qcbm::execute::{device_distribution, execute, Backend};
use qcbm::rng;
use qcbm::simulator::{exact_distribution, DeviceProfile, PRESET_NAMES};

fn main() -> qcbm::Result<()> {
    let spec = AnsatzSpec::four_qubit("dc3_star")?;
    let theta = ParameterVector((0..28).map(|i| (i as f64 * 0.7).sin()).collect());
    let circuit = build_circuit(&spec, &theta)?;
    println!("{} gates, {} CNOTs", circuit.gates().len(), cnot_count(&circuit));

    let ideal = exact_distribution(&circuit);
    for name in PRESET_NAMES {
        let device = DeviceProfile::preset(name)?;
        let q = device_distribution(&circuit, &device)?;
        println!(
            "{name:<14} readout {:>2} qubits  depol 1q {:.4} 2q {:.4}  L1 from ideal {:.4}",
            device.noise.readout.len(),
            device.noise.depol_1q,
            device.noise.depol_2q,
            q.l1_distance(&ideal)?
        );
    }

    let device = DeviceProfile::preset("tokyo-PB-like")?;
    let counts = execute(&circuit, &device, Backend::Sampled { shots: 2048 }, &mut rng::stream(1))?;
    let q = device_distribution(&circuit, &device)?;
    println!("\nstate  ideal    noisy    2048 shots");
    for i in 0..16 {
        println!(
            "{}   {:.4}   {:.4}   {:>5}",
            BasisState::new(i, 4)?,
            ideal.get(i),
            q.get(i),
            counts.counts()[i]
        );
    }
    Ok(())
}
