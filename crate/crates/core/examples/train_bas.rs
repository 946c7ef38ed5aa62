//! Noiseless training on BAS(2,2) with exact output probabilities.
//!
//! ```text
//! cargo run --release --example train_bas -- [layout] [seed]
//! ```

use qcbm::ansatz::{build_circuit, AnsatzSpec};
use qcbm::dist::{kl_divergence, BasisState, TargetSpec};
use qcbm::execute::Backend;
use qcbm::mitigation::{AssignmentErrorMatrix, KernelClass};
use qcbm::simulator::{exact_distribution, DeviceProfile};
use qcbm::training::{train, TrainConfig};

fn main() -> qcbm::Result<()> {
    let mut args = std::env::args().skip(1);
    let layout = args.next().unwrap_or_else(|| "dc3_star".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let spec = AnsatzSpec::four_qubit(&layout)?;
    let mut cfg = TrainConfig::new(
        TargetSpec::Bas22,
        spec.clone(),
        DeviceProfile::ideal(4),
        KernelClass::Identity,
    );
    cfg.backend = Backend::Exact;
    cfg.steps = 300;
    cfg.seed = seed;
    let trace = train(&cfg, &AssignmentErrorMatrix::identity(16, "ideal"))?;

    let p = cfg.target.distribution(4)?;
    for rec in trace.records.iter().step_by(25) {
        let q = exact_distribution(&build_circuit(&spec, &rec.theta)?);
        println!(
            "step {:>3}  mmd {:.3e}  KL {:.4}",
            rec.step,
            rec.loss.unwrap_or(f64::NAN),
            kl_divergence(&p, &q)?
        );
    }
    let q = exact_distribution(&build_circuit(&spec, trace.final_theta())?);
    println!("\nfinal KL {:.5}", kl_divergence(&p, &q)?);
    for i in p.support() {
        println!(
            "  {}  target {:.4}  model {:.4}",
            BasisState::new(i, 4)?,
            p.get(i),
            q.get(i)
        );
    }
    Ok(())
}
