//! Small-register circuit simulation.
//!
//! `exact_distribution` runs a statevector; `noisy_distribution` evolves a
//! density matrix with a depolarizing channel after every gate and applies
//! per-qubit readout confusion to the final diagonal.
//!
//! Conventions: `RX(θ) = exp(-iθX/2)`, `RZ(θ) = exp(-iθZ/2)`, bit `k` of a
//! basis index is qubit `k`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{self, CountVector, ProbabilityDistribution, MAX_QUBITS};
use crate::error::{Error, Result};

/// Largest register the density-matrix path accepts.
pub const MAX_NOISY_QUBITS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    X { qubit: usize },
    Cnot { control: usize, target: usize },
    Swap { a: usize, b: usize },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } | Gate::X { qubit } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Swap { a, b } => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::Swap { .. })
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        }
    }

    /// Same gate with every qubit index passed through `map`.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::Rx { qubit, angle } => Gate::Rx {
                qubit: map(qubit),
                angle,
            },
            Gate::Rz { qubit, angle } => Gate::Rz {
                qubit: map(qubit),
                angle,
            },
            Gate::X { qubit } => Gate::X { qubit: map(qubit) },
            Gate::Cnot { control, target } => Gate::Cnot {
                control: map(control),
                target: map(target),
            },
            Gate::Swap { a, b } => Gate::Swap { a: map(a), b: map(b) },
        }
    }
}

/// An ordered gate list over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!(
                "circuits support 1..={MAX_QUBITS} qubits, got {n_qubits}"
            )));
        }
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(n_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Self::new(n_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qs = gate.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::Domain(format!(
                "gate {gate:?} touches qubit {q} of a {}-qubit circuit",
                self.n_qubits
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::Domain(format!("gate {gate:?} repeats a qubit")));
        }
        if let Some(a) = gate.angle() {
            if !a.is_finite() {
                return Err(Error::Domain(format!("gate {gate:?} has a non-finite angle")));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_states(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }
}

/// Readout flip probabilities for one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutError {
    /// P(read 1 | prepared 0)
    pub p01: f64,
    /// P(read 0 | prepared 1)
    pub p10: f64,
}

impl ReadoutError {
    pub const NONE: ReadoutError = ReadoutError { p01: 0.0, p10: 0.0 };

    pub fn symmetric(p: f64) -> Self {
        Self { p01: p, p10: p }
    }

    /// `R[a][b] = P(read b | true a)`.
    pub fn confusion(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.p01, self.p01], [self.p10, 1.0 - self.p10]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Per-qubit readout confusion; empty means perfect readout.
    #[serde(default)]
    pub readout: Vec<ReadoutError>,
    #[serde(default)]
    pub depol_1q: f64,
    #[serde(default)]
    pub depol_2q: f64,
}

pub const DEFAULT_DEPOL_1Q: f64 = 0.001;
pub const DEFAULT_DEPOL_2Q: f64 = 0.01;

impl NoiseModel {
    pub fn ideal() -> Self {
        Self {
            readout: Vec::new(),
            depol_1q: 0.0,
            depol_2q: 0.0,
        }
    }

    pub fn readout_only(readout: Vec<ReadoutError>) -> Self {
        Self {
            readout,
            depol_1q: 0.0,
            depol_2q: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = self
            .readout
            .iter()
            .flat_map(|r| [r.p01, r.p10])
            .chain([self.depol_1q, self.depol_2q]);
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("noise probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn has_gate_noise(&self) -> bool {
        self.depol_1q > 0.0 || self.depol_2q > 0.0
    }

    pub fn is_noiseless(&self) -> bool {
        !self.has_gate_noise() && self.readout.iter().all(|r| r.p01 == 0.0 && r.p10 == 0.0)
    }

    fn readout_for(&self, n_qubits: usize) -> Result<&[ReadoutError]> {
        match self.readout.len() {
            0 => Ok(&[]),
            n if n >= n_qubits => Ok(&self.readout[..n_qubits]),
            n => Err(Error::Size(format!(
                "noise model has readout data for {n} qubits, circuit needs {n_qubits}"
            ))),
        }
    }

    /// Apply the readout confusion to a true distribution:
    /// `q_meas = Rᵀ q_true` with `R` the tensor product of per-qubit
    /// confusion matrices.
    pub fn apply_readout(&self, probs: &mut [f64]) -> Result<()> {
        let n_qubits = probs.len().trailing_zeros() as usize;
        for (k, err) in self.readout_for(n_qubits)?.iter().enumerate() {
            let [[r00, r01], [r10, r11]] = err.confusion();
            let bit = 1 << k;
            for i0 in 0..probs.len() {
                if i0 & bit != 0 {
                    continue;
                }
                let i1 = i0 | bit;
                let (a, b) = (probs[i0], probs[i1]);
                probs[i0] = a * r00 + b * r10;
                probs[i1] = a * r01 + b * r11;
            }
        }
        Ok(())
    }
}

/// A named qubit layout with its coupling graph and noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    pub name: String,
    pub n_qubits: usize,
    /// Undirected coupling edges.
    pub coupling: Vec<(usize, usize)>,
    pub noise: NoiseModel,
}

const K4: &[(usize, usize)] = &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
const STAR4: &[(usize, usize)] = &[(0, 1), (0, 2), (0, 3)];
const PATH4: &[(usize, usize)] = &[(0, 1), (1, 2), (2, 3)];

/// 0→1 readout flip giving a |0000⟩ assignment fidelity of 0.936 on four
/// qubits: `1 - 0.936^(1/4)`.
pub const TOKYO_PB_P01: f64 = 0.016_398_998_680_955_956;

/// Names accepted by [`DeviceProfile::preset`].
pub const PRESET_NAMES: &[&str] = &[
    "ideal",
    "readout-only",
    "tokyo-PA",
    "tokyo-PB-like",
    "tokyo-T1",
    "boeblingen-T0",
    "boeblingen-T1",
    "valencia",
];

impl DeviceProfile {
    pub fn new(
        name: impl Into<String>,
        n_qubits: usize,
        coupling: Vec<(usize, usize)>,
        noise: NoiseModel,
    ) -> Result<Self> {
        let d = Self {
            name: name.into(),
            n_qubits,
            coupling,
            noise,
        };
        d.validate()?;
        Ok(d)
    }

    /// Noiseless device with all-to-all coupling.
    pub fn ideal(n_qubits: usize) -> Self {
        let coupling = (0..n_qubits)
            .flat_map(|a| (a + 1..n_qubits).map(move |b| (a, b)))
            .collect();
        Self {
            name: "ideal".into(),
            n_qubits,
            coupling,
            noise: NoiseModel::ideal(),
        }
    }

    /// Built-in four-qubit presets standing in for the hardware layouts.
    pub fn preset(name: &str) -> Result<Self> {
        let uniform = |p01: f64, p10: f64| vec![ReadoutError { p01, p10 }; 4];
        let make = |name: &str, coupling: &[(usize, usize)], readout, d1, d2| Self {
            name: name.to_string(),
            n_qubits: 4,
            coupling: coupling.to_vec(),
            noise: NoiseModel {
                readout,
                depol_1q: d1,
                depol_2q: d2,
            },
        };
        let d = match name {
            "ideal" => Self::ideal(4),
            "readout-only" => make("readout-only", K4, uniform(0.02, 0.05), 0.0, 0.0),
            "tokyo-PA" | "P_A" => make("tokyo-PA", K4, uniform(0.02, 0.07), 0.001, 0.012),
            "tokyo-PB-like" | "tokyo-PB" | "P_B" => make(
                "tokyo-PB-like",
                K4,
                uniform(TOKYO_PB_P01, 0.08),
                DEFAULT_DEPOL_1Q,
                DEFAULT_DEPOL_2Q,
            ),
            "tokyo-T1" => make("tokyo-T1", STAR4, uniform(0.025, 0.09), 0.0015, 0.015),
            "boeblingen-T0" | "T_0" => make("boeblingen-T0", PATH4, uniform(0.015, 0.05), 0.001, 0.01),
            "boeblingen-T1" | "T_1" => make("boeblingen-T1", STAR4, uniform(0.02, 0.06), 0.001, 0.012),
            "valencia" => make("valencia", STAR4, uniform(0.012, 0.04), 0.0005, 0.008),
            other => {
                return Err(Error::Lookup {
                    what: "device preset",
                    name: other.to_string(),
                })
            }
        };
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!("device with {} qubits", self.n_qubits)));
        }
        if !self.noise.readout.is_empty() && self.noise.readout.len() != self.n_qubits {
            return Err(Error::Config(format!(
                "device `{}` lists readout errors for {} qubits but declares {}",
                self.name,
                self.noise.readout.len(),
                self.n_qubits
            )));
        }
        for &(a, b) in &self.coupling {
            if a >= self.n_qubits || b >= self.n_qubits || a == b {
                return Err(Error::Config(format!(
                    "device `{}` has invalid coupling edge ({a}, {b})",
                    self.name
                )));
            }
        }
        if !is_connected(self.n_qubits, &self.coupling) {
            return Err(Error::Routing(format!(
                "coupling graph of `{}` is not connected",
                self.name
            )));
        }
        Ok(())
    }

    pub fn is_coupled(&self, a: usize, b: usize) -> bool {
        self.coupling.iter().any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b))
    }
}

pub(crate) fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            let next = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if next < n && !seen[next] {
                seen[next] = true;
                stack.push(next);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

type Mat2 = [[Complex64; 2]; 2];

fn unitary(gate: &Gate) -> Option<(usize, Mat2)> {
    let zero = Complex64::new(0.0, 0.0);
    match *gate {
        Gate::Rx { qubit, angle } => {
            let c = Complex64::new((angle / 2.0).cos(), 0.0);
            let s = Complex64::new(0.0, -(angle / 2.0).sin());
            Some((qubit, [[c, s], [s, c]]))
        }
        Gate::Rz { qubit, angle } => {
            let m = Complex64::from_polar(1.0, -angle / 2.0);
            let p = Complex64::from_polar(1.0, angle / 2.0);
            Some((qubit, [[m, zero], [zero, p]]))
        }
        _ => None,
    }
}

/// Basis-state permutation for the classical gates.
fn permute(gate: &Gate, i: usize) -> usize {
    match *gate {
        Gate::X { qubit } => i ^ (1 << qubit),
        Gate::Cnot { control, target } => {
            if i & (1 << control) != 0 {
                i ^ (1 << target)
            } else {
                i
            }
        }
        Gate::Swap { a, b } => {
            let (ba, bb) = ((i >> a) & 1, (i >> b) & 1);
            if ba != bb {
                i ^ (1 << a) ^ (1 << b)
            } else {
                i
            }
        }
        _ => unreachable!("rotation gates are not permutations"),
    }
}

fn apply_to_state(state: &mut [Complex64], gate: &Gate) {
    if let Some((q, u)) = unitary(gate) {
        let bit = 1 << q;
        for i0 in 0..state.len() {
            if i0 & bit != 0 {
                continue;
            }
            let i1 = i0 | bit;
            let (a, b) = (state[i0], state[i1]);
            state[i0] = u[0][0] * a + u[0][1] * b;
            state[i1] = u[1][0] * a + u[1][1] * b;
        }
    } else {
        let old = state.to_vec();
        for (i, amp) in old.into_iter().enumerate() {
            state[permute(gate, i)] = amp;
        }
    }
}

/// Final statevector of `circuit` from `|0…0⟩`.
pub fn statevector(circuit: &Circuit) -> Vec<Complex64> {
    let mut state = vec![Complex64::new(0.0, 0.0); circuit.n_states()];
    state[0] = Complex64::new(1.0, 0.0);
    for g in circuit.gates() {
        apply_to_state(&mut state, g);
    }
    state
}

/// Noiseless output distribution.
pub fn exact_distribution(circuit: &Circuit) -> ProbabilityDistribution {
    let probs = statevector(circuit).iter().map(|a| a.norm_sqr()).collect();
    ProbabilityDistribution::from_raw(probs)
}

/// Row-major `d × d` density matrix.
struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    fn ground(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        data[0] = Complex64::new(1.0, 0.0);
        Self { dim, data }
    }

    fn apply_gate(&mut self, gate: &Gate) {
        let d = self.dim;
        if let Some((q, u)) = unitary(gate) {
            let bit = 1 << q;
            // ρ ← U ρ
            for c in 0..d {
                for r0 in (0..d).filter(|r| r & bit == 0) {
                    let r1 = r0 | bit;
                    let (a, b) = (self.data[r0 * d + c], self.data[r1 * d + c]);
                    self.data[r0 * d + c] = u[0][0] * a + u[0][1] * b;
                    self.data[r1 * d + c] = u[1][0] * a + u[1][1] * b;
                }
            }
            // ρ ← ρ U†
            for r in 0..d {
                for c0 in (0..d).filter(|c| c & bit == 0) {
                    let c1 = c0 | bit;
                    let (a, b) = (self.data[r * d + c0], self.data[r * d + c1]);
                    self.data[r * d + c0] = a * u[0][0].conj() + b * u[0][1].conj();
                    self.data[r * d + c1] = a * u[1][0].conj() + b * u[1][1].conj();
                }
            }
        } else {
            let old = self.data.clone();
            for r in 0..d {
                let pr = permute(gate, r);
                for c in 0..d {
                    self.data[pr * d + permute(gate, c)] = old[r * d + c];
                }
            }
        }
    }

    /// `ρ ← (1-p) ρ + p · Tr_S(ρ) ⊗ I_S / 2^|S|` over the qubits in `qubits`.
    fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let d = self.dim;
        let mask: usize = qubits.iter().map(|q| 1 << q).sum();
        let subsets: Vec<usize> = (0..d).filter(|s| s & !mask == 0).collect();
        let weight = 1.0 / subsets.len() as f64;
        let old = self.data.clone();
        for r in 0..d {
            for c in 0..d {
                let mut v = old[r * d + c] * (1.0 - p);
                if r & mask == c & mask {
                    let (rr, cr) = (r & !mask, c & !mask);
                    let traced: Complex64 = subsets.iter().map(|&s| old[(rr | s) * d + (cr | s)]).sum();
                    v += traced * (p * weight);
                }
                self.data[r * d + c] = v;
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re.max(0.0)).collect()
    }
}

/// Output distribution under depolarizing gate noise and readout confusion.
pub fn noisy_distribution(circuit: &Circuit, noise: &NoiseModel) -> Result<ProbabilityDistribution> {
    noise.validate()?;
    let mut probs = if noise.has_gate_noise() {
        if circuit.n_qubits() > MAX_NOISY_QUBITS {
            return Err(Error::Size(format!(
                "noisy simulation supports at most {MAX_NOISY_QUBITS} qubits, got {}",
                circuit.n_qubits()
            )));
        }
        let mut rho = DensityMatrix::ground(circuit.n_qubits());
        for g in circuit.gates() {
            rho.apply_gate(g);
            let p = if g.is_two_qubit() {
                noise.depol_2q
            } else {
                noise.depol_1q
            };
            rho.depolarize(&g.qubits(), p);
        }
        rho.diagonal()
    } else {
        exact_distribution(circuit).probs().to_vec()
    };
    noise.apply_readout(&mut probs)?;
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(ProbabilityDistribution::from_raw(probs))
}

/// Shot-sampled counts from the noisy output distribution.
pub fn sample<R: Rng + ?Sized>(circuit: &Circuit, noise: &NoiseModel, shots: u64, rng: &mut R) -> Result<CountVector> {
    let q = noisy_distribution(circuit, noise)?;
    dist::subsample(q.probs(), shots, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::f64::consts::PI;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn empty_circuit_is_ground_state() {
        let c = Circuit::new(4).unwrap();
        assert_eq!(exact_distribution(&c).probs()[0], 1.0);
    }

    #[test]
    fn x_sets_bit_k() {
        let c = Circuit::from_gates(4, [Gate::X { qubit: 2 }]).unwrap();
        assert_eq!(exact_distribution(&c).get(4), 1.0);
    }

    #[test]
    fn rx_half_pi() {
        let c = Circuit::from_gates(
            1,
            [Gate::Rx {
                qubit: 0,
                angle: PI / 2.0,
            }],
        )
        .unwrap();
        assert_close(exact_distribution(&c).probs(), &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn rx_pi_flips_each_qubit() {
        for k in 0..4 {
            let c = Circuit::from_gates(4, [Gate::Rx { qubit: k, angle: PI }]).unwrap();
            assert!((exact_distribution(&c).get(1 << k) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rz_only_circuits_stay_in_ground_state() {
        let gates = (0..4).map(|q| Gate::Rz {
            qubit: q,
            angle: 0.3 + q as f64,
        });
        let c = Circuit::from_gates(4, gates).unwrap();
        assert_eq!(exact_distribution(&c).probs()[0], 1.0);
    }

    #[test]
    fn gate_validation() {
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push(Gate::X { qubit: 2 }).is_err());
        assert!(c.push(Gate::Cnot { control: 1, target: 1 }).is_err());
        assert!(c
            .push(Gate::Rx {
                qubit: 0,
                angle: f64::NAN
            })
            .is_err());
        assert!(Circuit::new(7).is_err());
    }

    #[test]
    fn zero_noise_matches_exact() {
        let c = Circuit::from_gates(
            3,
            [
                Gate::Rx { qubit: 0, angle: 0.7 },
                Gate::Cnot { control: 0, target: 1 },
                Gate::Rz { qubit: 1, angle: 1.1 },
                Gate::Rx { qubit: 2, angle: -2.0 },
                Gate::Swap { a: 1, b: 2 },
                Gate::Rx { qubit: 1, angle: 0.4 },
            ],
        )
        .unwrap();
        let zero = NoiseModel {
            readout: vec![ReadoutError::NONE; 3],
            depol_1q: 0.0,
            depol_2q: 0.0,
        };
        assert_close(
            noisy_distribution(&c, &zero).unwrap().probs(),
            exact_distribution(&c).probs(),
            1e-12,
        );
    }

    #[test]
    fn density_matrix_path_matches_statevector_without_noise() {
        let c = Circuit::from_gates(
            3,
            [
                Gate::Rx { qubit: 0, angle: 0.7 },
                Gate::Cnot { control: 0, target: 2 },
                Gate::Rz { qubit: 2, angle: 1.1 },
                Gate::Rx { qubit: 2, angle: 0.9 },
                Gate::Swap { a: 0, b: 1 },
                Gate::X { qubit: 0 },
            ],
        )
        .unwrap();
        let mut rho = DensityMatrix::ground(3);
        for g in c.gates() {
            rho.apply_gate(g);
        }
        assert_close(&rho.diagonal(), exact_distribution(&c).probs(), 1e-12);
    }

    #[test]
    fn readout_confusion_on_one_qubit() {
        let c = Circuit::new(1).unwrap();
        let noise = NoiseModel::readout_only(vec![ReadoutError { p01: 0.1, p10: 0.0 }]);
        assert_close(noisy_distribution(&c, &noise).unwrap().probs(), &[0.9, 0.1], 1e-15);
    }

    #[test]
    fn full_depolarization_gives_uniform() {
        let c = Circuit::from_gates(1, [Gate::Rx { qubit: 0, angle: 0.3 }]).unwrap();
        let noise = NoiseModel {
            readout: vec![],
            depol_1q: 1.0,
            depol_2q: 0.0,
        };
        assert_close(noisy_distribution(&c, &noise).unwrap().probs(), &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn identity_confusion_is_bit_exact() {
        let c = Circuit::from_gates(
            2,
            [Gate::Rx { qubit: 0, angle: 0.77 }, Gate::Rx { qubit: 1, angle: 2.1 }],
        )
        .unwrap();
        let mut probs = exact_distribution(&c).probs().to_vec();
        let before = probs.clone();
        NoiseModel::readout_only(vec![ReadoutError::NONE; 2])
            .apply_readout(&mut probs)
            .unwrap();
        assert_eq!(probs, before);
    }

    #[test]
    fn noisy_limit_is_enforced() {
        let c = Circuit::new(6).unwrap();
        let noise = NoiseModel {
            readout: vec![],
            depol_1q: 0.01,
            depol_2q: 0.0,
        };
        assert!(matches!(noisy_distribution(&c, &noise), Err(Error::Size(_))));
    }

    #[test]
    fn sampling_is_reproducible() {
        let c = Circuit::from_gates(2, [Gate::Rx { qubit: 0, angle: 1.0 }]).unwrap();
        let noise = DeviceProfile::preset("readout-only").unwrap().noise;
        let noise = NoiseModel {
            readout: noise.readout[..2].to_vec(),
            ..noise
        };
        let a = sample(&c, &noise, 2048, &mut rng::stream(5)).unwrap();
        let b = sample(&c, &noise, 2048, &mut rng::stream(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.effective_shots(), 2048.0);
        let ground = sample(
            &Circuit::new(4).unwrap(),
            &NoiseModel::ideal(),
            2048,
            &mut rng::stream(1),
        )
        .unwrap();
        assert_eq!(ground.counts()[0], 2048.0);
    }

    #[test]
    fn presets_are_valid() {
        for name in PRESET_NAMES {
            let d = DeviceProfile::preset(name).unwrap();
            d.validate().unwrap();
            assert_eq!(d.n_qubits, 4);
        }
        assert!(DeviceProfile::preset("nope").is_err());
        let pb = DeviceProfile::preset("tokyo-PB-like").unwrap();
        let f0: f64 = pb.noise.readout.iter().map(|r| 1.0 - r.p01).product();
        assert!((f0 - 0.936).abs() < 1e-12);
    }

    #[test]
    fn disconnected_coupling_rejected() {
        let err = DeviceProfile::new("split", 4, vec![(0, 1), (2, 3)], NoiseModel::ideal());
        assert!(matches!(err, Err(Error::Routing(_))));
    }
}
