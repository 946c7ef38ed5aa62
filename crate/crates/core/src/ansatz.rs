//! Bi-layer QCBM ansatz, calibration circuits and coupling-graph routing.
//!
//! Gate order of [`build_circuit`]:
//!
//! ```text
//! layer A  (per qubit RX RZ)      slots  0 .. 2n
//! entangler
//! layer B  (per qubit RX RZ RX)   slots 2n .. 5n
//! entangler
//! layer C  (per qubit RZ RX)      slots 5n .. 7n
//! ```
//!
//! Slots are qubit-major inside each layer, giving 28 parameters for four
//! qubits. Every layer stores its RX slot before its RZ slot; layer C
//! applies them in the opposite order.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dist::{ProbabilityDistribution, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::simulator::{self, is_connected, Circuit, Gate};

/// CNOT `(control, target)` pairs applied, in order, in both entangling
/// layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntanglerLayout {
    name: String,
    pairs: Vec<(usize, usize)>,
}

pub const LAYOUT_NAMES: &[&str] = &["dc2", "dc3_line", "dc3_star"];

impl EntanglerLayout {
    pub fn named(name: &str) -> Result<Self> {
        let pairs = match name {
            "dc2" => vec![(0, 1), (2, 3)],
            "dc3_line" => vec![(0, 1), (1, 2), (2, 3)],
            "dc3_star" => vec![(0, 1), (0, 2), (0, 3)],
            other => {
                return Err(Error::Lookup {
                    what: "entangler layout",
                    name: other.to_string(),
                })
            }
        };
        Ok(Self {
            name: name.to_string(),
            pairs,
        })
    }

    pub fn custom(name: impl Into<String>, pairs: Vec<(usize, usize)>) -> Self {
        Self {
            name: name.into(),
            pairs,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// CNOTs per entangling layer.
    pub fn depth(&self) -> usize {
        self.pairs.len()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LayoutRepr {
    Named(String),
    Custom { name: String, pairs: Vec<(usize, usize)> },
}

impl Serialize for EntanglerLayout {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if LAYOUT_NAMES.contains(&self.name.as_str())
            && EntanglerLayout::named(&self.name)
                .map(|l| l.pairs == self.pairs)
                .unwrap_or(false)
        {
            LayoutRepr::Named(self.name.clone()).serialize(s)
        } else {
            LayoutRepr::Custom {
                name: self.name.clone(),
                pairs: self.pairs.clone(),
            }
            .serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for EntanglerLayout {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match LayoutRepr::deserialize(d)? {
            LayoutRepr::Named(n) => EntanglerLayout::named(&n).map_err(serde::de::Error::custom),
            LayoutRepr::Custom { name, pairs } => Ok(EntanglerLayout::custom(name, pairs)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub layout: EntanglerLayout,
}

/// Which rotation layer a parameter slot belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationLayer {
    First,
    Middle,
    Last,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, layout: EntanglerLayout) -> Result<Self> {
        let spec = Self { n_qubits, layout };
        spec.validate()?;
        Ok(spec)
    }

    /// Four-qubit ansatz with a named entangler.
    pub fn four_qubit(layout: &str) -> Result<Self> {
        Self::new(4, EntanglerLayout::named(layout)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!("ansatz over {} qubits", self.n_qubits)));
        }
        for &(c, t) in self.layout.pairs() {
            if c == t || c >= self.n_qubits || t >= self.n_qubits {
                return Err(Error::Construction(format!(
                    "layout `{}` has invalid CNOT pair ({c}, {t}) for {} qubits",
                    self.layout.name(),
                    self.n_qubits
                )));
            }
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        7 * self.n_qubits
    }

    pub fn n_states(&self) -> usize {
        1 << self.n_qubits
    }

    /// Slot of the `k`-th rotation on `qubit` within `layer`.
    pub fn slot(&self, layer: RotationLayer, qubit: usize, k: usize) -> usize {
        let n = self.n_qubits;
        match layer {
            RotationLayer::First => 2 * qubit + k,
            RotationLayer::Middle => 2 * n + 3 * qubit + k,
            RotationLayer::Last => 5 * n + 2 * qubit + k,
        }
    }

    /// Position in `build_circuit(..).gates()` of the gate driven by `slot`.
    pub fn gate_index_of_slot(&self, slot: usize) -> usize {
        let n = self.n_qubits;
        let cnots = self.layout.depth();
        if slot < 2 * n {
            slot
        } else if slot < 5 * n {
            slot + cnots
        } else {
            // Last layer stores (RX, RZ) per qubit but applies RZ first.
            let local = slot - 5 * n;
            5 * n + 2 * cnots + (local & !1) + (1 - local % 2)
        }
    }
}

/// Circuit parameters, one angle per slot (radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn zeros(spec: &AnsatzSpec) -> Self {
        Self(vec![0.0; spec.n_params()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Copy with `slot` moved by `delta`.
    pub fn shifted(&self, slot: usize, delta: f64) -> Self {
        let mut v = self.0.clone();
        v[slot] += delta;
        Self(v)
    }

    fn check(&self, spec: &AnsatzSpec) -> Result<()> {
        if self.0.len() != spec.n_params() {
            return Err(Error::Shape {
                expected: spec.n_params(),
                actual: self.0.len(),
            });
        }
        Ok(())
    }
}

fn push_entangler(c: &mut Circuit, layout: &EntanglerLayout) -> Result<()> {
    for &(control, target) in layout.pairs() {
        c.push(Gate::Cnot { control, target })?;
    }
    Ok(())
}

pub fn build_circuit(spec: &AnsatzSpec, theta: &ParameterVector) -> Result<Circuit> {
    spec.validate()?;
    theta.check(spec)?;
    let t = theta.as_slice();
    let n = spec.n_qubits;
    let mut c = Circuit::new(n)?;
    for q in 0..n {
        c.push(Gate::Rx {
            qubit: q,
            angle: t[spec.slot(RotationLayer::First, q, 0)],
        })?;
        c.push(Gate::Rz {
            qubit: q,
            angle: t[spec.slot(RotationLayer::First, q, 1)],
        })?;
    }
    push_entangler(&mut c, &spec.layout)?;
    for q in 0..n {
        c.push(Gate::Rx {
            qubit: q,
            angle: t[spec.slot(RotationLayer::Middle, q, 0)],
        })?;
        c.push(Gate::Rz {
            qubit: q,
            angle: t[spec.slot(RotationLayer::Middle, q, 1)],
        })?;
        c.push(Gate::Rx {
            qubit: q,
            angle: t[spec.slot(RotationLayer::Middle, q, 2)],
        })?;
    }
    push_entangler(&mut c, &spec.layout)?;
    for q in 0..n {
        // Z before X here, so the final rotation is not a bare phase.
        c.push(Gate::Rz {
            qubit: q,
            angle: t[spec.slot(RotationLayer::Last, q, 1)],
        })?;
        c.push(Gate::Rx {
            qubit: q,
            angle: t[spec.slot(RotationLayer::Last, q, 0)],
        })?;
    }
    Ok(c)
}

/// CNOT gates plus three per SWAP.
pub fn cnot_count(circuit: &Circuit) -> usize {
    circuit
        .gates()
        .iter()
        .map(|g| match g {
            Gate::Cnot { .. } => 1,
            Gate::Swap { .. } => 3,
            _ => 0,
        })
        .sum()
}

/// One X-only circuit per basis state: circuit `i` flips every qubit `k`
/// whose bit is set in `i`.
pub fn hw_calibration_circuits(n_qubits: usize) -> Result<Vec<Circuit>> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::Size(format!("{n_qubits} calibration qubits")));
    }
    (0..1usize << n_qubits)
        .map(|i| {
            Circuit::from_gates(
                n_qubits,
                (0..n_qubits)
                    .filter(|k| (i >> k) & 1 == 1)
                    .map(|qubit| Gate::X { qubit }),
            )
        })
        .collect()
}

/// Classical action of a CNOT sequence on a basis index.
pub fn propagate_bits(pairs: &[(usize, usize)], index: usize) -> usize {
    pairs.iter().fold(
        index,
        |acc, &(c, t)| {
            if (acc >> c) & 1 == 1 {
                acc ^ (1 << t)
            } else {
                acc
            }
        },
    )
}

/// Inverse of [`propagate_bits`]: the same CNOTs in reverse order.
pub fn unpropagate_bits(pairs: &[(usize, usize)], index: usize) -> usize {
    pairs.iter().rev().fold(
        index,
        |acc, &(c, t)| {
            if (acc >> c) & 1 == 1 {
                acc ^ (1 << t)
            } else {
                acc
            }
        },
    )
}

/// Middle-layer `(RX, RZ, RX)` angles that take `|0⟩` to `|1⟩`.
pub const FLIP_TRIPLE: [f64; 3] = [PI, 0.0, 0.0];

fn triple_flips(triple: [f64; 3]) -> bool {
    let c = Circuit::from_gates(
        1,
        [
            Gate::Rx {
                qubit: 0,
                angle: triple[0],
            },
            Gate::Rz {
                qubit: 0,
                angle: triple[1],
            },
            Gate::Rx {
                qubit: 0,
                angle: triple[2],
            },
        ],
    )
    .expect("single-qubit circuit");
    simulator::exact_distribution(&c).get(1) >= 1.0 - 1e-12
}

/// Parameters that make the ansatz prepare `target` in the absence of noise.
///
/// Outer layers are zero; the middle layer applies [`FLIP_TRIPLE`] on every
/// qubit set in `E⁻¹(target)`, where `E` is the second entangler's action.
pub fn circ_calibration_params(spec: &AnsatzSpec, target: usize) -> Result<ParameterVector> {
    circ_calibration_params_with(spec, target, FLIP_TRIPLE)
}

/// As [`circ_calibration_params`] with an explicit flip triple, which is
/// checked by simulation before use.
pub fn circ_calibration_params_with(spec: &AnsatzSpec, target: usize, flip: [f64; 3]) -> Result<ParameterVector> {
    spec.validate()?;
    if target >= spec.n_states() {
        return Err(Error::Domain(format!(
            "target {target} out of range for {} qubits",
            spec.n_qubits
        )));
    }
    if !triple_flips(flip) {
        return Err(Error::Construction(format!(
            "rotation triple {flip:?} does not map |0> to |1>"
        )));
    }
    let pre = unpropagate_bits(spec.layout.pairs(), target);
    let mut theta = ParameterVector::zeros(spec);
    for q in (0..spec.n_qubits).filter(|q| (pre >> q) & 1 == 1) {
        for (k, angle) in flip.iter().enumerate() {
            theta.0[spec.slot(RotationLayer::Middle, q, k)] = *angle;
        }
    }
    Ok(theta)
}

/// A circuit mapped onto physical qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutedCircuit {
    pub circuit: Circuit,
    /// `layout[logical] = physical` after the last gate.
    pub final_layout: Vec<usize>,
}

impl RoutedCircuit {
    pub fn swap_count(&self) -> usize {
        self.circuit
            .gates()
            .iter()
            .filter(|g| matches!(g, Gate::Swap { .. }))
            .count()
    }

    /// Map a distribution over physical bits back to logical bits.
    pub fn unpermute(&self, physical: &ProbabilityDistribution) -> ProbabilityDistribution {
        let n = self.final_layout.len();
        let probs = (0..1usize << n)
            .map(|logical| {
                let phys = (0..n)
                    .filter(|k| (logical >> k) & 1 == 1)
                    .fold(0, |acc, k| acc | 1 << self.final_layout[k]);
                physical.get(phys)
            })
            .collect();
        ProbabilityDistribution::from_raw(probs)
    }
}

fn shortest_path(n: usize, edges: &[(usize, usize)], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; n];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        let mut next: Vec<usize> = edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        next.sort_unstable();
        for w in next {
            if prev[w] == usize::MAX {
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Greedy SWAP-insertion routing.
///
/// Starts from the trivial layout. Before each two-qubit gate whose operands
/// are not coupled, the first operand is swapped along a shortest path until
/// it neighbours the second. The final permutation is returned alongside the
/// circuit; measurement results are un-permuted with
/// [`RoutedCircuit::unpermute`].
pub fn route(circuit: &Circuit, coupling: &[(usize, usize)]) -> Result<RoutedCircuit> {
    let n = circuit.n_qubits();
    if let Some(&(a, b)) = coupling.iter().find(|&&(a, b)| a >= n || b >= n || a == b) {
        return Err(Error::Routing(format!(
            "invalid coupling edge ({a}, {b}) for {n} qubits"
        )));
    }
    if !is_connected(n, coupling) {
        return Err(Error::Routing("coupling graph is not connected".into()));
    }
    let adjacent = |a: usize, b: usize| coupling.iter().any(|&(x, y)| (x == a && y == b) || (x == b && y == a));

    let mut layout: Vec<usize> = (0..n).collect();
    let mut out = Circuit::new(n)?;
    for gate in circuit.gates() {
        if gate.is_two_qubit() {
            let qs = gate.qubits();
            let (pa, pb) = (layout[qs[0]], layout[qs[1]]);
            if !adjacent(pa, pb) {
                let path = shortest_path(n, coupling, pa, pb)
                    .ok_or_else(|| Error::Routing(format!("no path between {pa} and {pb}")))?;
                // walk the first operand toward the second, stopping one hop short
                for w in path.windows(2).take(path.len() - 2) {
                    let (x, y) = (w[0], w[1]);
                    out.push(Gate::Swap { a: x, b: y })?;
                    for p in layout.iter_mut() {
                        if *p == x {
                            *p = y;
                        } else if *p == y {
                            *p = x;
                        }
                    }
                }
            }
        }
        out.push(gate.relabel(|q| layout[q]))?;
    }
    Ok(RoutedCircuit {
        circuit: out,
        final_layout: layout,
    })
}

pub fn is_conformant(circuit: &Circuit, coupling: &[(usize, usize)]) -> bool {
    circuit.gates().iter().filter(|g| g.is_two_qubit()).all(|g| {
        let q = g.qubits();
        coupling
            .iter()
            .any(|&(a, b)| (a == q[0] && b == q[1]) || (a == q[1] && b == q[0]))
    })
}
