//! Discrete distributions over computational basis states.
//!
//! Basis index convention: bit `k` of an index is the state of qubit `k`, so
//! `index = Σ_k b_k 2^k`. Strings render qubit 0 leftmost.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register this crate handles (2^6 = 64 states).
pub const MAX_QUBITS: usize = 6;

const SUM_TOL: f64 = 1e-9;

/// A computational basis state of an `n_qubits` register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    index: usize,
    n_qubits: usize,
}

impl BasisState {
    pub fn new(index: usize, n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!(
                "{n_qubits} qubits exceeds the supported maximum of {MAX_QUBITS}"
            )));
        }
        if index >= 1 << n_qubits {
            return Err(Error::Domain(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        Ok(Self { index, n_qubits })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let index = bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &b)| acc | (usize::from(b) << k));
        Self::new(index, bits.len())
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn bit(&self, qubit: usize) -> bool {
        (self.index >> qubit) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.n_qubits).map(|k| self.bit(k)).collect()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.n_qubits {
            f.write_str(if self.bit(k) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn n_qubits_for(n_states: usize) -> Result<usize> {
    if n_states == 0 || !n_states.is_power_of_two() {
        return Err(Error::Size(format!("{n_states} states is not a power of two")));
    }
    let n = n_states.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::Size(format!(
            "{n_states} states exceeds the supported maximum of 2^{MAX_QUBITS}"
        )));
    }
    Ok(n)
}

/// A normalized probability vector over `2^N` basis states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityDistribution {
    probs: Vec<f64>,
}

impl ProbabilityDistribution {
    /// Validate and wrap an already-normalized vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        n_qubits_for(probs.len())?;
        if let Some(bad) = probs.iter().find(|p| **p < 0.0 || !p.is_finite()) {
            return Err(Error::Domain(format!(
                "probability entry {bad} is not a finite non-negative value"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalize non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        n_qubits_for(weights.len())?;
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Domain("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Domain("weights sum to zero".into()));
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n_states: usize) -> Result<Self> {
        n_qubits_for(n_states)?;
        Ok(Self {
            probs: vec![1.0 / n_states as f64; n_states],
        })
    }

    pub fn delta(n_states: usize, index: usize) -> Result<Self> {
        n_qubits_for(n_states)?;
        if index >= n_states {
            return Err(Error::Domain(format!("index {index} out of range")));
        }
        let mut probs = vec![0.0; n_states];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    /// Trusted constructor for crate-internal simulators whose output is
    /// normalized up to rounding.
    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        debug_assert!(probs.iter().all(|p| *p >= 0.0));
        Self { probs }
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// Indices with non-zero probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        check_len(self.n_states(), other.n_states())?;
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum())
    }
}

impl TryFrom<Vec<f64>> for ProbabilityDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilityDistribution> for Vec<f64> {
    fn from(d: ProbabilityDistribution) -> Self {
        d.probs
    }
}

/// Per-state counts with an effective shot size.
///
/// Counts are real-valued because mitigation produces fractional counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CountVectorRepr", into = "CountVectorRepr")]
pub struct CountVector {
    counts: Vec<f64>,
    effective_shots: f64,
}

#[derive(Serialize, Deserialize)]
struct CountVectorRepr {
    counts: Vec<f64>,
    effective_shots: f64,
}

impl TryFrom<CountVectorRepr> for CountVector {
    type Error = Error;
    fn try_from(r: CountVectorRepr) -> Result<Self> {
        let cv = Self::new(r.counts)?;
        if (cv.effective_shots - r.effective_shots).abs() > SUM_TOL * r.effective_shots.max(1.0) {
            return Err(Error::Domain(format!(
                "effective_shots {} does not match count total {}",
                r.effective_shots, cv.effective_shots
            )));
        }
        Ok(cv)
    }
}

impl From<CountVector> for CountVectorRepr {
    fn from(c: CountVector) -> Self {
        Self {
            counts: c.counts,
            effective_shots: c.effective_shots,
        }
    }
}

impl CountVector {
    /// Wrap non-negative counts; the effective shot size is their total.
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        n_qubits_for(counts.len())?;
        if counts.iter().any(|c| *c < 0.0 || !c.is_finite()) {
            return Err(Error::Domain("counts must be finite and non-negative".into()));
        }
        let effective_shots = counts.iter().sum();
        Ok(Self {
            counts,
            effective_shots,
        })
    }

    pub fn from_integers(counts: &[u64]) -> Result<Self> {
        Self::new(counts.iter().map(|&c| c as f64).collect())
    }

    pub fn n_states(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn effective_shots(&self) -> f64 {
        self.effective_shots
    }

    pub fn normalize(&self) -> Result<ProbabilityDistribution> {
        ProbabilityDistribution::from_weights(&self.counts)
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape { expected: a, actual: b });
    }
    Ok(())
}

/// Which built-in target a run trains against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSpec {
    Bas22,
    Poisson1 {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    Poisson2 {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    Custom {
        probs: Vec<f64>,
    },
}

pub const DEFAULT_POISSON_LAMBDA: f64 = 5.0;

fn default_lambda() -> f64 {
    DEFAULT_POISSON_LAMBDA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonKind {
    Poisson1,
    Poisson2,
}

impl TargetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TargetSpec::Bas22 => "bas22",
            TargetSpec::Poisson1 { .. } => "poisson1",
            TargetSpec::Poisson2 { .. } => "poisson2",
            TargetSpec::Custom { .. } => "custom",
        }
    }

    /// Generate the distribution over `2^n_qubits` states.
    pub fn distribution(&self, n_qubits: usize) -> Result<ProbabilityDistribution> {
        let n_states = 1usize << n_qubits;
        match self {
            TargetSpec::Bas22 => {
                if n_qubits != 4 {
                    return Err(Error::Size(format!("BAS(2,2) needs 4 qubits, got {n_qubits}")));
                }
                bas_target(2, 2)
            }
            TargetSpec::Poisson1 { lambda } => poisson_target(PoissonKind::Poisson1, *lambda, n_states),
            TargetSpec::Poisson2 { lambda } => poisson_target(PoissonKind::Poisson2, *lambda, n_states),
            TargetSpec::Custom { probs } => {
                check_len(n_states, probs.len())?;
                ProbabilityDistribution::new(probs.clone())
            }
        }
    }
}

/// Bars-and-stripes target on a `rows × cols` pixel grid.
///
/// Uniform over every image whose rows are each constant or whose columns
/// are each constant. Pixel `(r, c)` is qubit `r * cols + c`.
pub fn bas_target(rows: usize, cols: usize) -> Result<ProbabilityDistribution> {
    let n = rows * cols;
    if n == 0 {
        return Err(Error::Size("empty pixel grid".into()));
    }
    if n > MAX_QUBITS {
        return Err(Error::Size(format!(
            "{rows}x{cols} grid needs {n} qubits, more than {MAX_QUBITS}"
        )));
    }
    let mut images = BTreeSet::new();
    // bars: one bit per row
    for pattern in 0..1usize << rows {
        let mut idx = 0;
        for r in 0..rows {
            if (pattern >> r) & 1 == 1 {
                for c in 0..cols {
                    idx |= 1 << (r * cols + c);
                }
            }
        }
        images.insert(idx);
    }
    // stripes: one bit per column
    for pattern in 0..1usize << cols {
        let mut idx = 0;
        for c in 0..cols {
            if (pattern >> c) & 1 == 1 {
                for r in 0..rows {
                    idx |= 1 << (r * cols + c);
                }
            }
        }
        images.insert(idx);
    }
    let mut probs = vec![0.0; 1 << n];
    let w = 1.0 / images.len() as f64;
    for i in images {
        probs[i] = w;
    }
    Ok(ProbabilityDistribution { probs })
}

/// Truncated Poisson targets.
///
/// `Poisson1` puts `λ^k e^{-λ}/k!` on `k = 0..n_states-2`, zero on the last
/// state, renormalized. `Poisson2` is its mirror image.
pub fn poisson_target(kind: PoissonKind, lambda: f64, n_states: usize) -> Result<ProbabilityDistribution> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::Domain(format!("poisson rate must be positive, got {lambda}")));
    }
    n_qubits_for(n_states)?;
    if n_states < 2 {
        return Err(Error::Size("poisson target needs at least 2 states".into()));
    }
    let mut pmf = vec![0.0; n_states];
    let mut term = (-lambda).exp();
    for (k, slot) in pmf.iter_mut().enumerate().take(n_states - 1) {
        if k > 0 {
            term *= lambda / k as f64;
        }
        *slot = term;
    }
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    if kind == PoissonKind::Poisson2 {
        pmf.reverse();
    }
    Ok(ProbabilityDistribution { probs: pmf })
}

/// Kullback-Leibler divergence `D(p‖q)` in nats.
///
/// Returns `f64::INFINITY` when `q` vanishes somewhere on the support of `p`.
pub fn kl_divergence(p: &ProbabilityDistribution, q: &ProbabilityDistribution) -> Result<f64> {
    check_len(p.n_states(), q.n_states())?;
    let mut total = 0.0;
    for (&pi, &qi) in p.probs.iter().zip(&q.probs) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total)
}

/// Draw a multinomial sample of `shots` outcomes from non-negative weights.
pub fn multinomial<R: Rng + ?Sized>(weights: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::Domain("sampling weights must be finite and non-negative".into()));
    }
    let mut remaining_mass: f64 = weights.iter().sum();
    if remaining_mass <= 0.0 {
        return Err(Error::Domain("cannot sample from an all-zero source".into()));
    }
    let mut remaining = shots;
    let mut out = vec![0u64; weights.len()];
    // conditional binomial chain
    for (i, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if w <= 0.0 {
            continue;
        }
        let p = (w / remaining_mass).clamp(0.0, 1.0);
        let draw = if p >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, p)
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(rng)
        };
        out[i] = draw;
        remaining -= draw;
        remaining_mass -= w;
    }
    if remaining > 0 {
        // rounding left mass on the table; give it to the last populated state
        let last = weights.iter().rposition(|w| *w > 0.0).expect("non-zero mass");
        out[last] += remaining;
    }
    Ok(out)
}

/// Multinomial sub-sample of `shots` outcomes from a count vector or a
/// distribution.
pub fn subsample<R: Rng + ?Sized>(source: &[f64], shots: u64, rng: &mut R) -> Result<CountVector> {
    if shots == 0 {
        return Err(Error::Domain("shots must be at least 1".into()));
    }
    if source.is_empty() {
        return Err(Error::Domain("empty source".into()));
    }
    let counts = multinomial(source, shots, rng)?;
    CountVector::from_integers(&counts)
}

/// Pool batches of counts into one composite vector.
pub fn composite(batches: &[CountVector]) -> Result<CountVector> {
    let first = batches
        .first()
        .ok_or_else(|| Error::Domain("composite of an empty batch list".into()))?;
    let mut counts = vec![0.0; first.n_states()];
    let mut shots = 0.0;
    for b in batches {
        check_len(first.n_states(), b.n_states())?;
        counts.iter_mut().zip(&b.counts).for_each(|(a, c)| *a += c);
        shots += b.effective_shots;
    }
    Ok(CountVector {
        counts,
        effective_shots: shots,
    })
}

/// Sub-sampled KL estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlEstimate {
    /// Mean over repeats; `+∞` when any repeat diverged.
    pub mean: f64,
    /// Sample standard deviation over the finite repeats.
    pub stddev: f64,
    /// Number of repeats whose KL was `+∞`.
    pub divergent: usize,
    pub repeats: usize,
}

impl KlEstimate {
    pub fn is_divergent(&self) -> bool {
        self.divergent > 0
    }
}

/// Mean and spread of `D(p‖q̂)` over `repeats` multinomial sub-samples of
/// `source`.
pub fn mean_kl<R: Rng + ?Sized>(
    p: &ProbabilityDistribution,
    source: &CountVector,
    shots: u64,
    repeats: usize,
    rng: &mut R,
) -> Result<KlEstimate> {
    if repeats == 0 {
        return Err(Error::Domain("repeats must be at least 1".into()));
    }
    check_len(p.n_states(), source.n_states())?;
    let mut finite = Vec::with_capacity(repeats);
    let mut divergent = 0;
    for _ in 0..repeats {
        let draw = subsample(source.counts(), shots, rng)?.normalize()?;
        let kl = kl_divergence(p, &draw)?;
        if kl.is_finite() {
            finite.push(kl);
        } else {
            divergent += 1;
        }
    }
    let (mean_finite, stddev) = mean_and_sample_std(&finite);
    let mean = if divergent > 0 { f64::INFINITY } else { mean_finite };
    Ok(KlEstimate {
        mean,
        stddev,
        divergent,
        repeats,
    })
}

fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Zero every entry below `p0` and renormalize. Diagnostic only.
pub fn threshold_filter(q: &ProbabilityDistribution, p0: f64) -> Result<ProbabilityDistribution> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Domain(format!("threshold {p0} must lie in (0, 1)")));
    }
    let kept: Vec<f64> = q.probs.iter().map(|&x| if x < p0 { 0.0 } else { x }).collect();
    if kept.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateOutput(p0));
    }
    ProbabilityDistribution::from_weights(&kept)
}
