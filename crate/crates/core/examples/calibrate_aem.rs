//! Build the three assignment matrix classes on a preset device and write
//! them as JSON.
//!
//! ```text
//! cargo run --example calibrate_aem -- [out_dir]
//! ```

use std::path::PathBuf;

use qcbm::ansatz::AnsatzSpec;
use qcbm::execute::Backend;
use qcbm::mitigation::{build_aem, frobenius_distance, KernelClass, DEFAULT_CALIBRATION_SHOTS};
use qcbm::rng;
use qcbm::simulator::DeviceProfile;

fn main() -> qcbm::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("qcbm-aem"));
    std::fs::create_dir_all(&out).map_err(|e| qcbm::Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let device = DeviceProfile::preset("tokyo-PB-like")?;
    let calibration = Backend::Sampled {
        shots: DEFAULT_CALIBRATION_SHOTS,
    };
    for layout in ["dc2", "dc3_star"] {
        let spec = AnsatzSpec::four_qubit(layout)?;
        for kind in KernelClass::ALL {
            let aem = build_aem(kind, &spec, &device, calibration, &mut rng::stream(2019))?;
            let diag = aem.diagnostics();
            let path = out.join(format!("{layout}-{kind}.json"));
            aem.save(&path)?;
            println!(
                "{layout:<9} {kind:<8} |1-K|_F {:.3}  cond {:>6.3}  K[0000,0000] {:.4}  min fidelity {:.4}  -> {}",
                frobenius_distance(&aem),
                diag.condition_number,
                aem.get(0, 0),
                diag.min_row_fidelity,
                path.display()
            );
        }
    }
    Ok(())
}
