//! Routing a circuit onto a coupling graph that lacks some of its CNOT pairs.
//!
//! ```text
//! cargo run --example route_circuit
//! ```

use qcbm::ansatz::{build_circuit, cnot_count, is_conformant, route, AnsatzSpec, ParameterVector};
use qcbm::simulator::{exact_distribution, DeviceProfile, Gate};

fn main() -> qcbm::Result<()> {
    let spec = AnsatzSpec::four_qubit("dc2")?;
    let theta = ParameterVector((0..28).map(|i| 0.3 * i as f64 - 2.0).collect());
    let circuit = build_circuit(&spec, &theta)?;
    let truth = exact_distribution(&circuit);

    for preset in ["tokyo-PB-like", "boeblingen-T0", "valencia"] {
        let device = DeviceProfile::preset(preset)?;
        let routed = route(&circuit, &device.coupling)?;
        let back = routed.unpermute(&exact_distribution(&routed.circuit));
        println!(
            "{preset:<14} coupling {:?}\n  conformant {}, CNOTs {} -> {} ({} SWAPs), final layout {:?}, L1 after un-permuting {:.1e}",
            device.coupling,
            is_conformant(&circuit, &device.coupling),
            cnot_count(&circuit),
            cnot_count(&routed.circuit),
            routed.swap_count(),
            routed.final_layout,
            back.l1_distance(&truth)?
        );
    }

    let device = DeviceProfile::preset("valencia")?;
    let routed = route(&circuit, &device.coupling)?;
    println!("\ntwo-qubit gates on valencia:");
    for g in routed.circuit.gates().iter().filter(|g| g.is_two_qubit()) {
        match g {
            Gate::Cnot { control, target } => println!("  CNOT {control} -> {target}"),
            Gate::Swap { a, b } => println!("  SWAP {a} <-> {b}"),
            _ => {}
        }
    }
    Ok(())
}
