//! Pre-train on one device, save θ, then continue for 7 steps at α = 0.1 on
//! another device starting from the saved file.
//!
//! ```text
//! cargo run --release --example pretrained
//! ```

use qcbm::ansatz::AnsatzSpec;
use qcbm::dist::TargetSpec;
use qcbm::execute::Backend;
use qcbm::harness::config::{load_theta, save_theta};
use qcbm::mitigation::{build_aem, AssignmentErrorMatrix, KernelClass, DEFAULT_CALIBRATION_SHOTS};
use qcbm::rng;
use qcbm::simulator::DeviceProfile;
use qcbm::training::{train, Init, TrainConfig};

fn main() -> qcbm::Result<()> {
    let spec = AnsatzSpec::four_qubit("dc3_star")?;
    let tokyo = DeviceProfile::preset("tokyo-PB-like")?;
    let mut pre = TrainConfig::new(TargetSpec::Bas22, spec.clone(), tokyo.clone(), KernelClass::Identity);
    pre.steps = 25;
    pre.seed = 3;
    let pre_trace = train(&pre, &AssignmentErrorMatrix::identity(16, &tokyo.name))?;
    let path = std::env::temp_dir().join("qcbm-pretrained-theta.json");
    save_theta(&path, pre_trace.final_theta())?;
    println!(
        "pre-trained on {}: min MMD {:.5}, saved {}",
        tokyo.name,
        pre_trace.min_loss().unwrap_or(f64::NAN),
        path.display()
    );

    let valencia = DeviceProfile::preset("valencia")?;
    let theta = load_theta(&path)?;
    for kind in KernelClass::ALL {
        let aem = build_aem(
            kind,
            &spec,
            &valencia,
            Backend::Sampled {
                shots: DEFAULT_CALIBRATION_SHOTS,
            },
            &mut rng::stream(11),
        )?;
        let mut cfg = TrainConfig::new(TargetSpec::Bas22, spec.clone(), valencia.clone(), kind);
        cfg.steps = 7;
        cfg.alpha = 0.1;
        cfg.seed = 4;
        cfg.init = Init::Fixed(theta.clone());
        let trace = train(&cfg, &aem)?;
        let losses: Vec<String> = trace
            .records
            .iter()
            .map(|r| format!("{:.4}", r.loss.unwrap_or(f64::NAN)))
            .collect();
        println!("{kind:<8} on valencia: {}", losses.join(" "));
    }
    Ok(())
}
