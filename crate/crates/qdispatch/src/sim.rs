//! Dense statevector simulation.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * **Little-endian basis ordering**: qubit `q` is bit `q` of the basis
//!   index, so qubit 0 is the least significant bit. `X` on qubit 0 of a
//!   2-qubit register moves amplitude from index 0 to index 1.
//! * **Basis strings** (as returned by [`measure_counts`] and
//!   [`exact_probabilities`]) list qubits in subset order: character `j` of
//!   the string is the measured value of `subset[j]`.
//! * Statevectors are capped at [`MAX_QUBITS`] qubits; larger requests error
//!   out instead of allocating.
//!
//! All measurement randomness comes from one explicit seed per call.

use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::rng::rng_from_seed;

/// Hard cap on simulator width (a 26-qubit statevector is 1 GiB of
/// amplitudes; anything bigger is a bug in the caller, not a workload).
pub const MAX_QUBITS: usize = 26;

/// Norm slack accepted when ingesting externally supplied amplitudes.
pub const PREP_NORM_TOL: f64 = 1e-9;

/// Norm slack enforced after every gate application (debug builds).
pub const GATE_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{requested} qubits requested, simulator caps at {max}")]
    TooManyQubits { requested: usize, max: usize },
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {qubit} used more than once in one gate")]
    DuplicateQubit { qubit: usize },
    #[error("amplitude vector length {len} is not a power of two")]
    LengthNotPowerOfTwo { len: usize },
    #[error("amplitude vector has squared norm {norm_sq}, expected 1")]
    NotNormalized { norm_sq: f64 },
    #[error("diagonal gate over {qubits} qubits needs {expected} phases, got {got}")]
    DiagonalLengthMismatch {
        qubits: usize,
        expected: usize,
        got: usize,
    },
    #[error("measurement subset is empty")]
    EmptySubset,
}

/// One gate. Composite structure (`Controlled`) nests arbitrarily; controls
/// accumulate across nesting levels.
#[derive(Debug, Clone, PartialEq)]
pub enum GateOp {
    /// Real rotation about Y: `[[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.
    Ry { qubit: usize, angle: f64 },
    /// Pauli X (bit flip).
    X { qubit: usize },
    /// Hadamard.
    H { qubit: usize },
    /// Phase gate `diag(1, e^{iθ})`.
    Phase { qubit: usize, angle: f64 },
    /// Controlled-X on `target`, conditioned on `control`.
    Cnot { control: usize, target: usize },
    /// Diagonal phase gate over a qubit subset: basis state `s` of the subset
    /// (bit `j` of `s` = value of `qubits[j]`) picks up phase `e^{i phases[s]}`.
    Diagonal { qubits: Vec<usize>, phases: Vec<f64> },
    /// Apply `gate` only where every qubit in `controls` is |1>.
    Controlled {
        gate: Box<GateOp>,
        controls: Vec<usize>,
    },
}

impl GateOp {
    /// The inverse gate. Every supported gate inverts structurally:
    /// rotations and phases negate, self-inverse gates stay put.
    pub fn inverse(&self) -> GateOp {
        match self {
            GateOp::Ry { qubit, angle } => GateOp::Ry {
                qubit: *qubit,
                angle: -angle,
            },
            GateOp::X { .. } | GateOp::H { .. } | GateOp::Cnot { .. } => self.clone(),
            GateOp::Phase { qubit, angle } => GateOp::Phase {
                qubit: *qubit,
                angle: -angle,
            },
            GateOp::Diagonal { qubits, phases } => GateOp::Diagonal {
                qubits: qubits.clone(),
                phases: phases.iter().map(|p| -p).collect(),
            },
            GateOp::Controlled { gate, controls } => GateOp::Controlled {
                gate: Box::new(gate.inverse()),
                controls: controls.clone(),
            },
        }
    }

    /// All qubit indices the gate touches (targets then controls), used for
    /// validation.
    fn qubits(&self, out: &mut Vec<usize>) {
        match self {
            GateOp::Ry { qubit, .. }
            | GateOp::X { qubit }
            | GateOp::H { qubit }
            | GateOp::Phase { qubit, .. } => out.push(*qubit),
            GateOp::Cnot { control, target } => {
                out.push(*target);
                out.push(*control);
            }
            GateOp::Diagonal { qubits, .. } => out.extend_from_slice(qubits),
            GateOp::Controlled { gate, controls } => {
                gate.qubits(out);
                out.extend_from_slice(controls);
            }
        }
    }
}

/// A gate list applied in order. `gates[0]` acts first.
#[derive(Debug, Clone, Default)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<GateOp>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Circuit {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: GateOp) {
        self.gates.push(gate);
    }

    /// The inverse circuit: gates reversed, each inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(GateOp::inverse).collect(),
        }
    }

    /// Applies every gate to `state` in order.
    pub fn apply_to(&self, state: &mut QuantumState) -> Result<(), SimError> {
        for gate in &self.gates {
            state.apply_gate(gate)?;
        }
        Ok(())
    }

    /// Runs the circuit on |0...0>.
    pub fn run_from_zero(&self) -> Result<QuantumState, SimError> {
        let mut state = QuantumState::zero(self.num_qubits)?;
        self.apply_to(&mut state)?;
        Ok(state)
    }
}

/// A normalized statevector over `num_qubits` qubits, little-endian.
#[derive(Debug, Clone)]
pub struct QuantumState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// |0...0> on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<QuantumState, SimError> {
        if num_qubits > MAX_QUBITS {
            return Err(SimError::TooManyQubits {
                requested: num_qubits,
                max: MAX_QUBITS,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(QuantumState {
            num_qubits,
            amplitudes,
        })
    }

    /// Builds a state directly from real target amplitudes (exact state
    /// preparation). The vector length must be a power of two and the squared
    /// norm must be 1 within [`PREP_NORM_TOL`].
    pub fn prepare_amplitudes(targets: &[f64]) -> Result<QuantumState, SimError> {
        let len = targets.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(SimError::LengthNotPowerOfTwo { len });
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(SimError::TooManyQubits {
                requested: num_qubits,
                max: MAX_QUBITS,
            });
        }
        let norm_sq: f64 = targets.iter().map(|a| a * a).sum();
        if (norm_sq - 1.0).abs() > PREP_NORM_TOL {
            return Err(SimError::NotNormalized { norm_sq });
        }
        Ok(QuantumState {
            num_qubits,
            amplitudes: targets.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn validate_gate(&self, gate: &GateOp) -> Result<(), SimError> {
        let mut qubits = Vec::new();
        gate.qubits(&mut qubits);
        let mut seen = 0u64;
        for &q in &qubits {
            if q >= self.num_qubits {
                return Err(SimError::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
            if seen & (1 << q) != 0 {
                return Err(SimError::DuplicateQubit { qubit: q });
            }
            seen |= 1 << q;
        }
        // Diagonal phase vectors must match their subset size.
        self.validate_diagonal(gate)
    }

    fn validate_diagonal(&self, gate: &GateOp) -> Result<(), SimError> {
        match gate {
            GateOp::Diagonal { qubits, phases } => {
                let expected = 1usize << qubits.len();
                if phases.len() != expected {
                    return Err(SimError::DiagonalLengthMismatch {
                        qubits: qubits.len(),
                        expected,
                        got: phases.len(),
                    });
                }
                Ok(())
            }
            GateOp::Controlled { gate, .. } => self.validate_diagonal(gate),
            _ => Ok(()),
        }
    }

    /// Applies one gate in place.
    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<(), SimError> {
        self.validate_gate(gate)?;
        self.apply_with_controls(gate, 0);
        #[cfg(debug_assertions)]
        {
            let n = self.norm_sq();
            debug_assert!(
                (n - 1.0).abs() <= GATE_NORM_TOL,
                "norm drifted to {n} after {gate:?}"
            );
        }
        Ok(())
    }

    /// Dispatch with an accumulated control mask: the gate acts only on basis
    /// indices where every bit of `ctrl_mask` is set.
    fn apply_with_controls(&mut self, gate: &GateOp, ctrl_mask: usize) {
        match gate {
            GateOp::Ry { qubit, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                self.apply_real_1q(*qubit, ctrl_mask, c, -s, s, c);
            }
            GateOp::X { qubit } => self.apply_real_1q(*qubit, ctrl_mask, 0.0, 1.0, 1.0, 0.0),
            GateOp::H { qubit } => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                self.apply_real_1q(*qubit, ctrl_mask, r, r, r, -r);
            }
            GateOp::Phase { qubit, angle } => {
                let phase = Complex64::from_polar(1.0, *angle);
                let bit = 1usize << qubit;
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if i & bit != 0 && i & ctrl_mask == ctrl_mask {
                        *amp *= phase;
                    }
                }
            }
            GateOp::Cnot { control, target } => {
                self.apply_real_1q(*target, ctrl_mask | (1 << control), 0.0, 1.0, 1.0, 0.0);
            }
            GateOp::Diagonal { qubits, phases } => {
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if i & ctrl_mask != ctrl_mask {
                        continue;
                    }
                    let mut sub = 0usize;
                    for (j, &q) in qubits.iter().enumerate() {
                        sub |= ((i >> q) & 1) << j;
                    }
                    *amp *= Complex64::from_polar(1.0, phases[sub]);
                }
            }
            GateOp::Controlled { gate, controls } => {
                let mut mask = ctrl_mask;
                for &c in controls {
                    mask |= 1 << c;
                }
                self.apply_with_controls(gate, mask);
            }
        }
    }

    /// Real 2x2 matrix `[[m00, m01], [m10, m11]]` on `qubit`, restricted to
    /// the control mask.
    fn apply_real_1q(
        &mut self,
        qubit: usize,
        ctrl_mask: usize,
        m00: f64,
        m01: f64,
        m10: f64,
        m11: f64,
    ) {
        let bit = 1usize << qubit;
        let dim = self.amplitudes.len();
        let mut i0 = 0usize;
        while i0 < dim {
            if i0 & bit == 0 && i0 & ctrl_mask == ctrl_mask {
                let i1 = i0 | bit;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = a0 * m00 + a1 * m01;
                self.amplitudes[i1] = a0 * m10 + a1 * m11;
            }
            i0 += 1;
        }
    }

    /// Marginal probability vector over `subset`, indexed by the subset basis
    /// index (bit `j` = value of `subset[j]`).
    pub fn marginal(&self, subset: &[usize]) -> Result<Vec<f64>, SimError> {
        if subset.is_empty() {
            return Err(SimError::EmptySubset);
        }
        let mut seen = 0u64;
        for &q in subset {
            if q >= self.num_qubits {
                return Err(SimError::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
            if seen & (1 << q) != 0 {
                return Err(SimError::DuplicateQubit { qubit: q });
            }
            seen |= 1 << q;
        }
        let mut probs = vec![0.0f64; 1 << subset.len()];
        for (i, amp) in self.amplitudes.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut sub = 0usize;
            for (j, &q) in subset.iter().enumerate() {
                sub |= ((i >> q) & 1) << j;
            }
            probs[sub] += p;
        }
        Ok(probs)
    }
}

/// Renders a subset basis index as a string: character `j` is the value of
/// `subset[j]`.
fn basis_string(sub_index: usize, width: usize) -> String {
    (0..width)
        .map(|j| if sub_index >> j & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Exact marginal outcome distribution over `subset`. Probabilities sum to 1
/// within 1e-9 for any normalized state.
pub fn exact_probabilities(
    state: &QuantumState,
    subset: &[usize],
) -> Result<BTreeMap<String, f64>, SimError> {
    let probs = state.marginal(subset)?;
    Ok(probs
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .map(|(i, p)| (basis_string(i, subset.len()), p))
        .collect())
}

/// Draws `shots` outcomes from the marginal over `subset`, returning the raw
/// subset-index sequence in draw order. Deterministic for a fixed seed.
pub fn measure_indices(
    state: &QuantumState,
    subset: &[usize],
    shots: u64,
    seed: u64,
) -> Result<Vec<usize>, SimError> {
    let probs = state.marginal(subset)?;
    // Cumulative table; the final entry absorbs rounding so the last bucket
    // always catches u -> 1.
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0f64;
    for &p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(shots as usize);
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * acc;
        let idx = cumulative.partition_point(|&c| c <= u);
        out.push(idx.min(probs.len() - 1));
    }
    Ok(out)
}

/// Samples `shots` measurements of `subset` and tallies them per basis
/// string. Same seed, same counts — bit for bit.
pub fn measure_counts(
    state: &QuantumState,
    subset: &[usize],
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<String, u64>, SimError> {
    let draws = measure_indices(state, subset, shots, seed)?;
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for idx in draws {
        *counts.entry(basis_string(idx, subset.len())).or_insert(0) += 1;
    }
    Ok(counts)
}
