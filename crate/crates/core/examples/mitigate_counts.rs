//! Solve, clip, renormalize: the mitigation pipeline on hand-made counts and
//! on a sampled four-qubit distribution.
//!
//! ```text
//! cargo run --example mitigate_counts
//! ```

use qcbm::ansatz::{build_circuit, AnsatzSpec, ParameterVector};
use qcbm::dist::CountVector;
use qcbm::execute::{execute, Backend};
use qcbm::mitigation::{build_aem, mitigate, solve_unclipped, AemMeta, AssignmentErrorMatrix, KernelClass};
use qcbm::rng;
use qcbm::simulator::{exact_distribution, DeviceProfile};

fn main() -> qcbm::Result<()> {
    let meta = AemMeta {
        device: "toy".into(),
        layout: None,
        shots: None,
        created: 0,
    };
    let k = AssignmentErrorMatrix::from_rows(KernelClass::Hw, vec![vec![0.9, 0.1], vec![0.1, 0.9]], meta)?;
    for raw in [vec![90.0, 10.0], vec![100.0, 0.0]] {
        let solved = solve_unclipped(&raw, &k)?;
        let m = mitigate(&CountVector::new(raw.clone())?, &k)?;
        println!(
            "raw {raw:?} -> solve {solved:?} -> clip {:?}, effective shots {}",
            m.counts(),
            m.effective_shots()
        );
    }

    let device = DeviceProfile::preset("readout-only")?;
    let spec = AnsatzSpec::four_qubit("dc3_line")?;
    let circuit = build_circuit(&spec, &ParameterVector((0..28).map(|i| 0.4 + 0.1 * i as f64).collect()))?;
    let truth = exact_distribution(&circuit);
    let hw = build_aem(
        KernelClass::Hw,
        &spec,
        &device,
        Backend::Sampled { shots: 100_000 },
        &mut rng::stream(4),
    )?;
    let raw = execute(
        &circuit,
        &device,
        Backend::Sampled { shots: 100_000 },
        &mut rng::stream(5),
    )?;
    let mitigated = mitigate(&raw, &hw)?;
    println!(
        "\nreadout-only device, 1e5 shots: L1 to truth raw {:.4}, mitigated {:.4} (effective shots {:.0})",
        raw.normalize()?.l1_distance(&truth)?,
        mitigated.normalize()?.l1_distance(&truth)?,
        mitigated.effective_shots()
    );
    Ok(())
}
