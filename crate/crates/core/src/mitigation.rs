//! Assignment error matrices and matrix-inversion readout mitigation.
//!
//! `entries[i][j]` is the probability of measuring state `j` after preparing
//! state `i`, so measured counts are `entriesᵀ · true counts`. Mitigation
//! solves that system, clips negative counts to zero and renormalizes by the
//! surviving total.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{self, AnsatzSpec};
use crate::dist::CountVector;
use crate::error::{Error, Result};
use crate::execute::{self, Backend};
use crate::rng;
use crate::simulator::{DeviceProfile, NoiseModel};

/// Calibration shots per circuit used when none are given.
pub const DEFAULT_CALIBRATION_SHOTS: u64 = 4096;

/// Matrices with a larger condition number are rejected.
pub const MAX_CONDITION_NUMBER: f64 = 1e6;

const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelClass {
    Identity,
    Hw,
    Circ,
}

impl KernelClass {
    pub const ALL: [KernelClass; 3] = [KernelClass::Identity, KernelClass::Hw, KernelClass::Circ];

    pub fn as_str(&self) -> &'static str {
        match self {
            KernelClass::Identity => "identity",
            KernelClass::Hw => "hw",
            KernelClass::Circ => "circ",
        }
    }
}

impl fmt::Display for KernelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for KernelClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "1" => Ok(KernelClass::Identity),
            "hw" => Ok(KernelClass::Hw),
            "circ" => Ok(KernelClass::Circ),
            other => Err(Error::Lookup {
                what: "AEM kind",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AemMeta {
    pub device: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
    /// Calibration shots per circuit; `None` for exact or identity matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// Seconds since the Unix epoch.
    pub created: u64,
}

/// Row-stochastic `2^N × 2^N` assignment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentErrorMatrix {
    kernel_class: KernelClass,
    entries: DMatrix<f64>,
    meta: AemMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AemFile {
    kernel_class: KernelClass,
    n_states: usize,
    meta: AemMeta,
    entries: Vec<Vec<f64>>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl AssignmentErrorMatrix {
    pub fn identity(n_states: usize, device: &str) -> Self {
        Self {
            kernel_class: KernelClass::Identity,
            entries: DMatrix::identity(n_states, n_states),
            meta: AemMeta {
                device: device.to_string(),
                layout: None,
                shots: None,
                created: now_unix(),
            },
        }
    }

    /// Validate row-major `entries` and wrap them.
    pub fn from_rows(kernel_class: KernelClass, rows: Vec<Vec<f64>>, meta: AemMeta) -> Result<Self> {
        let n = rows.len();
        let name = format!("{kernel_class} AEM for `{}`", meta.device);
        let calib = |reason: String| Error::Calibration {
            matrix: name.clone(),
            reason,
        };
        if n == 0 || !n.is_power_of_two() {
            return Err(calib(format!("{n} rows is not a power of two")));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(calib(format!("row of length {} in a {n}-state matrix", r.len())));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                return Err(calib(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(calib(format!("row {i} sums to {s}")));
            }
        }
        let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        if kernel_class == KernelClass::Identity && entries != DMatrix::identity(n, n) {
            return Err(calib("identity-class matrix is not the identity".into()));
        }
        let aem = Self {
            kernel_class,
            entries,
            meta,
        };
        let cond = aem.diagnostics().condition_number;
        if cond.is_nan() || cond > MAX_CONDITION_NUMBER {
            return Err(calib(format!(
                "condition number {cond:e} exceeds {MAX_CONDITION_NUMBER:e}"
            )));
        }
        Ok(aem)
    }

    /// Analytic readout-only matrix: `entries[i][j] = Π_k R_k[i_k][j_k]`.
    pub fn from_readout(noise: &NoiseModel, n_qubits: usize, device: &str) -> Result<Self> {
        let n = 1usize << n_qubits;
        let rows = (0..n)
            .map(|i| {
                let mut probs = vec![0.0; n];
                probs[i] = 1.0;
                noise.apply_readout(&mut probs)?;
                Ok(probs)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(
            KernelClass::Hw,
            rows,
            AemMeta {
                device: device.to_string(),
                layout: None,
                shots: None,
                created: now_unix(),
            },
        )
    }

    pub fn kernel_class(&self) -> KernelClass {
        self.kernel_class
    }

    pub fn n_states(&self) -> usize {
        self.entries.nrows()
    }

    pub fn meta(&self) -> &AemMeta {
        &self.meta
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, prepared: usize, measured: usize) -> f64 {
        self.entries[(prepared, measured)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Short content hash identifying the matrix values.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.kernel_class.as_str().as_bytes());
        for x in self.entries.transpose().iter() {
            h.update(x.to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        let file = AemFile {
            kernel_class: self.kernel_class,
            n_states: self.n_states(),
            meta: self.meta.clone(),
            entries: self.rows(),
        };
        serde_json::to_string_pretty(&file).expect("AEM serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AemFile = serde_json::from_str(text).map_err(|e| Error::Config(format!("AEM document: {e}")))?;
        if file.n_states != file.entries.len() {
            return Err(Error::Shape {
                expected: file.n_states,
                actual: file.entries.len(),
            });
        }
        Self::from_rows(file.kernel_class, file.entries, file.meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::format(path, e))
    }

    pub fn diagnostics(&self) -> AemDiagnostics {
        aem_condition_diagnostics(self)
    }
}

/// Build an assignment matrix of the requested class.
///
/// `hw` rows come from the X-only calibration circuits, `circ` rows from the
/// ansatz at its analytic calibration parameters. Each of the `2^N` rows
/// runs on its own random stream derived from one draw of `rng`.
pub fn build_aem<R: Rng + ?Sized>(
    kind: KernelClass,
    spec: &AnsatzSpec,
    device: &DeviceProfile,
    calibration: Backend,
    rng: &mut R,
) -> Result<AssignmentErrorMatrix> {
    let n_states = spec.n_states();
    if kind == KernelClass::Identity {
        return Ok(AssignmentErrorMatrix::identity(n_states, &device.name));
    }
    let circuits = match kind {
        KernelClass::Hw => ansatz::hw_calibration_circuits(spec.n_qubits)?,
        KernelClass::Circ => (0..n_states)
            .map(|i| ansatz::build_circuit(spec, &ansatz::circ_calibration_params(spec, i)?))
            .collect::<Result<Vec<_>>>()?,
        KernelClass::Identity => unreachable!(),
    };
    let base: u64 = rng.gen();
    let rows = circuits
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut stream = rng::derived_stream(base, &[i as u64]);
            let counts = execute::execute(c, device, calibration, &mut stream)?;
            Ok(counts.normalize()?.probs().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    let shots = match calibration {
        Backend::Exact => None,
        Backend::Sampled { shots } => Some(shots),
    };
    AssignmentErrorMatrix::from_rows(
        kind,
        rows,
        AemMeta {
            device: device.name.clone(),
            layout: (kind == KernelClass::Circ).then(|| spec.layout.name().to_string()),
            shots,
            created: now_unix(),
        },
    )
}

/// Solve `entriesᵀ c′ = raw`, clip negatives, and rescale the effective shot
/// size to the surviving total.
pub fn mitigate(raw: &CountVector, aem: &AssignmentErrorMatrix) -> Result<CountVector> {
    if raw.n_states() != aem.n_states() {
        return Err(Error::Shape {
            expected: aem.n_states(),
            actual: raw.n_states(),
        });
    }
    if aem.kernel_class == KernelClass::Identity {
        return Ok(raw.clone());
    }
    let solved = solve_unclipped(raw.counts(), aem)?;
    let clipped: Vec<f64> = solved.into_iter().map(|c| c.max(0.0)).collect();
    if clipped.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateMitigation { slot: None });
    }
    CountVector::new(clipped)
}

/// The linear solve alone, before clipping.
pub fn solve_unclipped(counts: &[f64], aem: &AssignmentErrorMatrix) -> Result<Vec<f64>> {
    let rhs = nalgebra::DVector::from_column_slice(counts);
    let x = aem
        .entries
        .transpose()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Calibration {
            matrix: format!("{} AEM for `{}`", aem.kernel_class, aem.meta.device),
            reason: "matrix is singular".into(),
        })?;
    Ok(x.iter().copied().collect())
}

/// `‖1 − K‖_F`.
pub fn frobenius_distance(aem: &AssignmentErrorMatrix) -> f64 {
    let n = aem.n_states();
    (aem.entries.clone() - DMatrix::<f64>::identity(n, n)).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AemDiagnostics {
    /// Ratio of largest to smallest singular value.
    pub condition_number: f64,
    /// Smallest diagonal entry.
    pub min_row_fidelity: f64,
}

pub fn aem_condition_diagnostics(aem: &AssignmentErrorMatrix) -> AemDiagnostics {
    let sv = aem.entries.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    let condition_number = if min > 0.0 { max / min } else { f64::INFINITY };
    let min_row_fidelity = aem.entries.diagonal().min();
    AemDiagnostics {
        condition_number,
        min_row_fidelity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::DeviceProfile;

    fn meta() -> AemMeta {
        AemMeta {
            device: "test".into(),
            layout: None,
            shots: None,
            created: 0,
        }
    }

    fn two_by_two() -> AssignmentErrorMatrix {
        AssignmentErrorMatrix::from_rows(KernelClass::Hw, vec![vec![0.9, 0.1], vec![0.1, 0.9]], meta()).unwrap()
    }

    #[test]
    fn hand_solved_two_state_example() {
        let k = two_by_two();
        let out = mitigate(&CountVector::new(vec![80.0, 20.0]).unwrap(), &k).unwrap();
        assert!((out.counts()[0] - 87.5).abs() < 1e-12);
        assert!((out.counts()[1] - 12.5).abs() < 1e-12);
        let q = out.normalize().unwrap();
        assert!((q.get(0) - 0.875).abs() < 1e-12);
    }

    #[test]
    fn clipping_example() {
        let k = two_by_two();
        let raw = CountVector::new(vec![100.0, 0.0]).unwrap();
        let pre = solve_unclipped(raw.counts(), &k).unwrap();
        assert!((pre[0] - 112.5).abs() < 1e-12 && (pre[1] + 12.5).abs() < 1e-12);
        let out = mitigate(&raw, &k).unwrap();
        assert_eq!(out.counts()[1], 0.0);
        assert!((out.effective_shots() - 112.5).abs() < 1e-12);
        assert_eq!(out.normalize().unwrap().probs(), &[1.0, 0.0]);
    }

    #[test]
    fn identity_is_bit_exact() {
        let id = AssignmentErrorMatrix::identity(4, "x");
        let raw = CountVector::new(vec![0.1, 3.7, 0.0, 1e-300]).unwrap();
        assert_eq!(mitigate(&raw, &id).unwrap(), raw);
        assert_eq!(frobenius_distance(&id), 0.0);
        let d = id.diagnostics();
        assert_eq!((d.condition_number, d.min_row_fidelity), (1.0, 1.0));
    }

    #[test]
    fn frobenius_and_condition_of_two_by_two() {
        let k = two_by_two();
        assert!((frobenius_distance(&k) - 0.2).abs() < 1e-12);
        let d = k.diagnostics();
        assert!((d.condition_number - 1.25).abs() < 1e-12);
        assert_eq!(d.min_row_fidelity, 0.9);
    }

    #[test]
    fn rejects_bad_matrices() {
        let bad_sum = AssignmentErrorMatrix::from_rows(KernelClass::Hw, vec![vec![0.9, 0.2], vec![0.1, 0.9]], meta());
        assert!(matches!(bad_sum, Err(Error::Calibration { .. })));
        let singular = AssignmentErrorMatrix::from_rows(KernelClass::Hw, vec![vec![0.5, 0.5], vec![0.5, 0.5]], meta());
        assert!(matches!(singular, Err(Error::Calibration { .. })));
        let fake_identity =
            AssignmentErrorMatrix::from_rows(KernelClass::Identity, vec![vec![0.9, 0.1], vec![0.0, 1.0]], meta());
        assert!(fake_identity.is_err());
    }

    #[test]
    fn degenerate_mitigation() {
        // a raw vector that solves to all-non-positive counts
        let k = two_by_two();
        let raw = CountVector::new(vec![0.0, 0.0]).unwrap();
        assert!(matches!(mitigate(&raw, &k), Err(Error::DegenerateMitigation { .. })));
    }

    #[test]
    fn shape_mismatch() {
        let k = two_by_two();
        let raw = CountVector::new(vec![1.0; 4]).unwrap();
        assert!(matches!(mitigate(&raw, &k), Err(Error::Shape { .. })));
    }

    #[test]
    fn exact_hw_kernel_matches_analytic_readout_kernel() {
        let device = DeviceProfile::preset("readout-only").unwrap();
        let spec = AnsatzSpec::four_qubit("dc2").unwrap();
        let built = build_aem(KernelClass::Hw, &spec, &device, Backend::Exact, &mut rng::stream(0)).unwrap();
        let analytic = AssignmentErrorMatrix::from_readout(&device.noise, 4, "readout-only").unwrap();
        assert!((built.entries() - analytic.entries()).abs().max() < 1e-15);
        // asymmetric readout gives an asymmetric matrix
        assert!((built.entries() - built.entries().transpose()).abs().max() > 1e-3);
    }

    #[test]
    fn zero_noise_exact_hw_is_identity() {
        let device = DeviceProfile::ideal(4);
        let spec = AnsatzSpec::four_qubit("dc2").unwrap();
        let k = build_aem(KernelClass::Hw, &spec, &device, Backend::Exact, &mut rng::stream(0)).unwrap();
        assert_eq!(k.entries(), &DMatrix::identity(16, 16));
    }

    #[test]
    fn tokyo_pb_ground_fidelity() {
        let device = DeviceProfile::preset("tokyo-PB-like").unwrap();
        let spec = AnsatzSpec::four_qubit("dc3_star").unwrap();
        let exact = build_aem(KernelClass::Hw, &spec, &device, Backend::Exact, &mut rng::stream(0)).unwrap();
        assert!((exact.get(0, 0) - 0.936).abs() < 1e-12);
        let sampled = build_aem(
            KernelClass::Hw,
            &spec,
            &device,
            Backend::Sampled {
                shots: DEFAULT_CALIBRATION_SHOTS,
            },
            &mut rng::stream(1),
        )
        .unwrap();
        // binomial standard error at 4096 shots is ~0.0038
        assert!((sampled.get(0, 0) - 0.936).abs() < 0.02);
        assert_eq!(sampled.meta().shots, Some(4096));
    }

    #[test]
    fn circ_fidelity_below_hw_with_gate_noise() {
        let device = DeviceProfile::preset("tokyo-PB-like").unwrap();
        for layout in ["dc2", "dc3_star"] {
            let spec = AnsatzSpec::four_qubit(layout).unwrap();
            let hw = build_aem(KernelClass::Hw, &spec, &device, Backend::Exact, &mut rng::stream(0)).unwrap();
            let circ = build_aem(KernelClass::Circ, &spec, &device, Backend::Exact, &mut rng::stream(0)).unwrap();
            assert!(circ.diagnostics().min_row_fidelity < hw.diagnostics().min_row_fidelity);
            assert!(frobenius_distance(&circ) > frobenius_distance(&hw));
            assert_eq!(circ.meta().layout.as_deref(), Some(layout));
        }
    }

    #[test]
    fn json_round_trip() {
        let device = DeviceProfile::preset("valencia").unwrap();
        let spec = AnsatzSpec::four_qubit("dc3_star").unwrap();
        let k = build_aem(
            KernelClass::Circ,
            &spec,
            &device,
            Backend::Sampled { shots: 512 },
            &mut rng::stream(3),
        )
        .unwrap();
        let back = AssignmentErrorMatrix::from_json(&k.to_json()).unwrap();
        assert_eq!(back, k);
        assert_eq!(back.fingerprint(), k.fingerprint());
    }

    #[test]
    fn rows_are_stochastic_for_all_kinds() {
        let spec = AnsatzSpec::four_qubit("dc3_line").unwrap();
        for preset in ["tokyo-PA", "boeblingen-T0", "valencia"] {
            let device = DeviceProfile::preset(preset).unwrap();
            for kind in KernelClass::ALL {
                let k = build_aem(
                    kind,
                    &spec,
                    &device,
                    Backend::Sampled { shots: 1000 },
                    &mut rng::stream(2),
                )
                .unwrap();
                for row in k.rows() {
                    assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
