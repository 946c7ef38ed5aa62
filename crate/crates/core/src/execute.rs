//! Running circuits on a simulated device.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz;
use crate::dist::{self, CountVector, ProbabilityDistribution};
use crate::error::{Error, Result};
use crate::simulator::{self, Circuit, DeviceProfile};

/// How a circuit's output is turned into counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Backend {
    /// The exact output distribution is used in place of counts
    /// (effective shot size 1).
    Exact,
    /// Multinomial sample of `shots` outcomes.
    Sampled { shots: u64 },
}

/// Output distribution of `circuit` on `device`, routing onto the coupling
/// graph first when needed.
pub fn device_distribution(circuit: &Circuit, device: &DeviceProfile) -> Result<ProbabilityDistribution> {
    if circuit.n_qubits() != device.n_qubits {
        return Err(Error::Size(format!(
            "{}-qubit circuit on {}-qubit device `{}`",
            circuit.n_qubits(),
            device.n_qubits,
            device.name
        )));
    }
    if ansatz::is_conformant(circuit, &device.coupling) {
        return simulator::noisy_distribution(circuit, &device.noise);
    }
    let routed = ansatz::route(circuit, &device.coupling)?;
    let physical = simulator::noisy_distribution(&routed.circuit, &device.noise)?;
    Ok(routed.unpermute(&physical))
}

pub fn execute<R: Rng + ?Sized>(
    circuit: &Circuit,
    device: &DeviceProfile,
    backend: Backend,
    rng: &mut R,
) -> Result<CountVector> {
    let q = device_distribution(circuit, device)?;
    match backend {
        Backend::Exact => CountVector::new(q.probs().to_vec()),
        Backend::Sampled { shots } => dist::subsample(q.probs(), shots, rng),
    }
}
