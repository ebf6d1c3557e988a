//! Minimizers for binary quadratic forms: a variational circuit ansatz, an
//! exhaustive reference, and a simulated annealer.
//!
//! All three return the same shape (bits plus exact energy) so callers can
//! swap them freely. Conventions:
//!
//! * Bit `i` of a qubo maps to simulator qubit `i`; basis index `s` decodes
//!   as `bits[i] = (s >> i) & 1` (the simulator is little-endian).
//! * Exhaustive ties resolve to the lexicographically smallest bit vector
//!   (`bits[0]` most significant), the same rule the dispatch-model search
//!   uses, so interchangeable backends agree bit for bit.
//! * Every random choice flows from one caller seed through
//!   [`crate::rng::derive_seed`]; parallel restarts use per-index streams and
//!   a deterministic reduction, so results do not depend on scheduling.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use thiserror::Error;

use crate::qubo::{Qubo, QuboError};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::{self, Circuit, GateOp, SimError};
use rand::Rng;

/// Exhaustive search refuses instances wider than this.
pub const EXACT_BITS_CAP: usize = 24;

/// Default width cap for the variational backend.
pub const DEFAULT_QUBIT_CAP: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum QaoaError {
    #[error("{dim}-bit instance exceeds the {cap}-qubit variational cap")]
    TooManyQubits { dim: usize, cap: usize },
    #[error("{dim}-bit instance exceeds the {EXACT_BITS_CAP}-bit exhaustive cap")]
    ExactTooLarge { dim: usize },
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

/// A bit assignment with its exact energy.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub bits: Vec<u8>,
    pub energy: f64,
}

/// `true` when (e1, bits1) improves on (e2, bits2) under the shared rule:
/// strictly lower energy (beyond 1e-12), or a tie won by the
/// lexicographically smaller bit vector.
fn improves(e1: f64, bits1: &[u8], e2: f64, bits2: &[u8]) -> bool {
    if e1 < e2 - 1e-12 {
        return true;
    }
    if e1 > e2 + 1e-12 {
        return false;
    }
    bits1 < bits2
}

// ---------------------------------------------------------------------------
// Exhaustive reference
// ---------------------------------------------------------------------------

/// Exact minimizer by full enumeration (at most [`EXACT_BITS_CAP`] bits).
///
/// Enumerates assignments in increasing binary order with `bits[0]` as the
/// most significant bit, tracking energy incrementally through single-bit
/// flip deltas and re-evaluating exactly at every candidate improvement, so
/// the first assignment attaining the minimum — the lexicographically
/// smallest one — is returned.
pub fn solve_exact(qubo: &Qubo) -> Result<GroundState, QaoaError> {
    let d = qubo.dimension();
    if d > EXACT_BITS_CAP {
        return Err(QaoaError::ExactTooLarge { dim: d });
    }
    let mut bits = vec![0u8; d];
    let mut energy = qubo.energy(&bits)?;
    if d == 0 {
        return Ok(GroundState { bits, energy });
    }
    let mut best = GroundState {
        bits: bits.clone(),
        energy,
    };
    for v in 1u64..(1u64 << d) {
        let mut changed = (v - 1) ^ v;
        while changed != 0 {
            let j = d - 1 - changed.trailing_zeros() as usize;
            energy += qubo.flip_delta(&bits, j);
            bits[j] ^= 1;
            changed &= changed - 1;
        }
        if v & 0xFF == 0 {
            energy = qubo.energy(&bits)?; // periodic resync against drift
        }
        if energy < best.energy - 1e-12 {
            let exact = qubo.energy(&bits)?;
            if exact < best.energy - 1e-12 {
                best.energy = exact;
                best.bits.copy_from_slice(&bits);
            }
            energy = exact;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Simulated annealing
// ---------------------------------------------------------------------------

/// Single-flip Metropolis annealing with a geometric temperature schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    pub restarts: usize,
    /// Temperature steps; each performs one flip attempt per bit.
    pub sweeps: usize,
    /// Starting temperature; `None` picks the largest possible single-flip
    /// energy change.
    pub t_start: Option<f64>,
    /// Final temperature; `None` picks one thousandth of the start.
    pub t_end: Option<f64>,
    pub seed: u64,
    /// Record the best energy after every sweep (winning restart only).
    pub record_trace: bool,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            restarts: 20,
            sweeps: 200,
            t_start: None,
            t_end: None,
            seed: 7,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutput {
    pub best: GroundState,
    /// Best energy seen after each sweep of the winning restart (only when
    /// `record_trace` is set); never increases.
    pub trace: Vec<f64>,
}

/// Largest single-flip energy change possible anywhere in the hypercube —
/// the natural hot-temperature scale.
fn flip_scale(qubo: &Qubo) -> f64 {
    let d = qubo.dimension();
    let mut scale = 0.0f64;
    for k in 0..d {
        let mut s = qubo.linear()[k].abs();
        for j in 0..d {
            s += 2.0 * qubo.matrix()[k][j].abs();
        }
        scale = scale.max(s);
    }
    if scale > 0.0 {
        scale
    } else {
        1.0
    }
}

pub fn solve_anneal(qubo: &Qubo, cfg: &AnnealConfig) -> Result<AnnealOutput, QaoaError> {
    if cfg.restarts == 0 || cfg.sweeps == 0 {
        return Err(QaoaError::BadConfig(
            "annealing needs at least one restart and one sweep".into(),
        ));
    }
    let d = qubo.dimension();
    if d == 0 {
        return Ok(AnnealOutput {
            best: GroundState {
                bits: vec![],
                energy: qubo.offset(),
            },
            trace: vec![],
        });
    }
    let t_start = cfg.t_start.unwrap_or_else(|| flip_scale(qubo));
    let t_end = cfg.t_end.unwrap_or(1e-3 * t_start);
    if !(t_start > 0.0 && t_end > 0.0 && t_end <= t_start) {
        return Err(QaoaError::BadConfig(format!(
            "temperature schedule must satisfy 0 < t_end <= t_start, got {t_start} -> {t_end}"
        )));
    }
    let ratio = if cfg.sweeps > 1 {
        (t_end / t_start).powf(1.0 / (cfg.sweeps - 1) as f64)
    } else {
        1.0
    };

    let runs: Vec<(GroundState, Vec<f64>)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, r as u64));
            let mut bits: Vec<u8> = (0..d).map(|_| u8::from(rng.gen_bool(0.5))).collect();
            let mut energy = qubo.energy(&bits).expect("dimension is consistent");
            let mut best_bits = bits.clone();
            let mut best_energy = energy;
            let mut trace = Vec::new();
            let mut t = t_start;
            for _ in 0..cfg.sweeps {
                for _ in 0..d {
                    let k = rng.gen_range(0..d);
                    let delta = qubo.flip_delta(&bits, k);
                    if delta <= 0.0 || rng.gen::<f64>() < (-delta / t).exp() {
                        bits[k] ^= 1;
                        energy += delta;
                        if energy < best_energy {
                            best_energy = energy;
                            best_bits.copy_from_slice(&bits);
                        }
                    }
                }
                energy = qubo.energy(&bits).expect("dimension is consistent");
                best_energy = best_energy.min(energy);
                if cfg.record_trace {
                    trace.push(best_energy);
                }
                t *= ratio;
            }
            let exact = qubo.energy(&best_bits).expect("dimension is consistent");
            (
                GroundState {
                    bits: best_bits,
                    energy: exact,
                },
                trace,
            )
        })
        .collect();

    let mut winner: Option<(GroundState, Vec<f64>)> = None;
    for (gs, trace) in runs {
        let take = match &winner {
            None => true,
            Some((w, _)) => improves(gs.energy, &gs.bits, w.energy, &w.bits),
        };
        if take {
            winner = Some((gs, trace));
        }
    }
    let (best, trace) = winner.expect("at least one restart ran");
    Ok(AnnealOutput { best, trace })
}

// ---------------------------------------------------------------------------
// Variational circuit ansatz
// ---------------------------------------------------------------------------

/// How the optimizer scores a parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpectationMode {
    /// Full statevector contraction — noiseless objective.
    Exact,
    /// Monte-Carlo estimate from this many measured shots per evaluation;
    /// every measured assignment also competes as a candidate solution.
    Sampled { shots: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaoaConfig {
    /// Ansatz depth (alternating phase and mixing layers); at least 1.
    pub layers: usize,
    /// Independent restarts with fresh random starting angles.
    pub restarts: usize,
    /// Total objective-evaluation budget across all restarts.
    pub max_evals: usize,
    pub expectation: ExpectationMode,
    /// Shots drawn from the final optimized state of each restart to extract
    /// candidate assignments.
    pub sample_shots: u64,
    pub seed: u64,
    /// Instances wider than this are refused (see
    /// [`solve_quantum_or_anneal`] for the fallback wrapper).
    pub qubit_cap: usize,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        QaoaConfig {
            layers: 2,
            restarts: 4,
            max_evals: 160,
            expectation: ExpectationMode::Exact,
            sample_shots: 256,
            seed: 7,
            qubit_cap: DEFAULT_QUBIT_CAP,
        }
    }
}

/// One optimizer evaluation, for diagnostics export.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRow {
    pub restart: usize,
    pub eval: usize,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub expectation: f64,
    /// Best expectation this restart had seen up to and including this row.
    pub best_expectation: f64,
}

/// CSV rendering of optimizer diagnostics. Angle vectors are
/// semicolon-joined inside their cells.
pub fn diagnostics_to_csv(rows: &[DiagRow]) -> String {
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.12e}"))
            .collect::<Vec<_>>()
            .join(";")
    };
    let mut out = String::from("restart,eval,gammas,betas,expectation,best_expectation\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.17e},{:.17e}\n",
            r.restart,
            r.eval,
            join(&r.gammas),
            join(&r.betas),
            r.expectation,
            r.best_expectation
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaoaOutput {
    pub best: GroundState,
    /// Best expectation reached by any restart.
    pub expectation: f64,
    /// Angles attaining that expectation.
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub evals: usize,
    pub diagnostics: Vec<DiagRow>,
}

/// Energy of every basis state, indexed like the simulator (bit `i` of the
/// index is qubo bit `i`). Computed by a reflected-Gray-code walk with
/// incremental flip deltas and periodic exact resynchronization.
pub fn diagonal_energies(qubo: &Qubo) -> Result<Vec<f64>, QaoaError> {
    let d = qubo.dimension();
    if d > sim::MAX_QUBITS {
        return Err(QaoaError::TooManyQubits {
            dim: d,
            cap: sim::MAX_QUBITS,
        });
    }
    let mut out = vec![0.0; 1usize << d];
    let mut bits = vec![0u8; d];
    let mut energy = qubo.energy(&bits)?;
    out[0] = energy;
    let mut cur = 0usize;
    for k in 1u64..(1u64 << d) {
        let b = k.trailing_zeros() as usize;
        energy += qubo.flip_delta(&bits, b);
        bits[b] ^= 1;
        cur ^= 1usize << b;
        if k & 0xFFF == 0 {
            energy = qubo.energy(&bits)?;
        }
        out[cur] = energy;
    }
    Ok(out)
}

/// The alternating ansatz over precomputed basis energies: a uniform
/// superposition, then per layer a diagonal phase `e^{-i gamma E(b)}` and a
/// transverse mixing rotation `RX(2 beta)` on every qubit, realized as
/// `Phase(-pi/2) . Ry(-2 beta) . Phase(pi/2)`.
fn circuit_from_diagonal(diag: &[f64], n: usize, gammas: &[f64], betas: &[f64]) -> Circuit {
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.push(GateOp::H { qubit: q });
    }
    for (&g, &b) in gammas.iter().zip(betas) {
        c.push(GateOp::Diagonal {
            qubits: (0..n).collect(),
            phases: diag.iter().map(|&e| -g * e).collect(),
        });
        for q in 0..n {
            c.push(GateOp::Phase {
                qubit: q,
                angle: -FRAC_PI_2,
            });
            c.push(GateOp::Ry {
                qubit: q,
                angle: -2.0 * b,
            });
            c.push(GateOp::Phase {
                qubit: q,
                angle: FRAC_PI_2,
            });
        }
    }
    c
}

/// Build the ansatz circuit for the given angles. Fails when the instance
/// exceeds `qubit_cap` (or the simulator limit).
pub fn build_circuit(
    qubo: &Qubo,
    gammas: &[f64],
    betas: &[f64],
    qubit_cap: usize,
) -> Result<Circuit, QaoaError> {
    let d = qubo.dimension();
    let cap = qubit_cap.min(sim::MAX_QUBITS);
    if d > cap {
        return Err(QaoaError::TooManyQubits { dim: d, cap });
    }
    if gammas.len() != betas.len() || gammas.is_empty() {
        return Err(QaoaError::BadConfig(format!(
            "angle vectors must be nonempty and equally long, got {} and {}",
            gammas.len(),
            betas.len()
        )));
    }
    let diag = diagonal_energies(qubo)?;
    Ok(circuit_from_diagonal(&diag, d, gammas, betas))
}

fn decode_index(idx: usize, d: usize) -> Vec<u8> {
    (0..d).map(|i| ((idx >> i) & 1) as u8).collect()
}

struct RestartResult {
    best_expectation: f64,
    gammas: Vec<f64>,
    betas: Vec<f64>,
    candidate: Option<GroundState>,
    evals: usize,
    rows: Vec<DiagRow>,
}

/// One full evaluation: simulate the ansatz, score it, and (in sampled mode)
/// surface measured assignments as candidates.
#[allow(clippy::too_many_arguments)]
fn evaluate_point(
    diag: &[f64],
    d: usize,
    gammas: &[f64],
    betas: &[f64],
    mode: ExpectationMode,
    shot_seed: u64,
    candidate: &mut Option<GroundState>,
) -> Result<f64, QaoaError> {
    let circuit = circuit_from_diagonal(diag, d, gammas, betas);
    let state = circuit.run_from_zero()?;
    match mode {
        ExpectationMode::Exact => {
            let mut exp = 0.0;
            for (i, amp) in state.amplitudes().iter().enumerate() {
                exp += amp.norm_sqr() * diag[i];
            }
            Ok(exp)
        }
        ExpectationMode::Sampled { shots } => {
            let subset: Vec<usize> = (0..d).collect();
            let draws = sim::measure_indices(&state, &subset, shots, shot_seed)?;
            let mut sum = 0.0;
            for idx in draws {
                let e = diag[idx];
                sum += e;
                let bits = decode_index(idx, d);
                let better = match candidate {
                    None => true,
                    Some(c) => improves(e, &bits, c.energy, &c.bits),
                };
                if better {
                    *candidate = Some(GroundState { bits, energy: e });
                }
            }
            Ok(sum / shots as f64)
        }
    }
}

fn run_restart(
    qubo: &Qubo,
    diag: &[f64],
    cfg: &QaoaConfig,
    restart: usize,
    budget: usize,
) -> Result<RestartResult, QaoaError> {
    let d = qubo.dimension();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, restart as u64));
    let e_min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let e_max = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = e_max - e_min;
    let gamma_scale = if spread > 0.0 { 2.0 * PI / spread } else { PI };

    let p = cfg.layers;
    let mut gammas: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..gamma_scale)).collect();
    let mut betas: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..FRAC_PI_2)).collect();

    let mut evals = 0usize;
    let mut rows = Vec::new();
    let mut candidate: Option<GroundState> = None;
    let mut best_expectation = f64::INFINITY;
    let mut best_gammas = gammas.clone();
    let mut best_betas = betas.clone();

    macro_rules! eval_at {
        ($g:expr, $b:expr) => {{
            let shot_seed = derive_seed(derive_seed(cfg.seed, restart as u64), 7000 + evals as u64);
            let exp = evaluate_point(diag, d, $g, $b, cfg.expectation, shot_seed, &mut candidate)?;
            evals += 1;
            if exp < best_expectation {
                best_expectation = exp;
                best_gammas = $g.to_vec();
                best_betas = $b.to_vec();
            }
            rows.push(DiagRow {
                restart,
                eval: evals,
                gammas: $g.to_vec(),
                betas: $b.to_vec(),
                expectation: exp,
                best_expectation,
            });
            exp
        }};
    }

    let mut current = eval_at!(&gammas, &betas);
    let golden: f64 = (5f64.sqrt() - 1.0) / 2.0;
    let mut gamma_span = gamma_scale / 2.0;
    let mut beta_span = FRAC_PI_2 / 2.0;

    'outer: loop {
        for coord in 0..2 * p {
            if evals >= budget {
                break 'outer;
            }
            let is_gamma = coord < p;
            let idx = if is_gamma { coord } else { coord - p };
            let span = if is_gamma { gamma_span } else { beta_span };
            let center = if is_gamma { gammas[idx] } else { betas[idx] };
            let mut lo = center - span;
            let mut hi = center + span;
            let mut best_x = center;
            let mut best_f = current;
            // Golden-section narrowing; each probe costs one evaluation.
            let mut x1 = hi - golden * (hi - lo);
            let mut x2 = lo + golden * (hi - lo);
            let probe = |x: f64, gammas: &[f64], betas: &[f64]| -> (Vec<f64>, Vec<f64>) {
                let mut g = gammas.to_vec();
                let mut b = betas.to_vec();
                if is_gamma {
                    g[idx] = x;
                } else {
                    b[idx] = x;
                }
                (g, b)
            };
            let (g1, b1) = probe(x1, &gammas, &betas);
            let mut f1 = eval_at!(&g1, &b1);
            if f1 < best_f {
                best_f = f1;
                best_x = x1;
            }
            if evals >= budget {
                if is_gamma {
                    gammas[idx] = best_x;
                } else {
                    betas[idx] = best_x;
                }
                break 'outer;
            }
            let (g2, b2) = probe(x2, &gammas, &betas);
            let mut f2 = eval_at!(&g2, &b2);
            if f2 < best_f {
                best_f = f2;
                best_x = x2;
            }
            for _ in 0..4 {
                if evals >= budget {
                    break;
                }
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - golden * (hi - lo);
                    let (g, b) = probe(x1, &gammas, &betas);
                    f1 = eval_at!(&g, &b);
                    if f1 < best_f {
                        best_f = f1;
                        best_x = x1;
                    }
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + golden * (hi - lo);
                    let (g, b) = probe(x2, &gammas, &betas);
                    f2 = eval_at!(&g, &b);
                    if f2 < best_f {
                        best_f = f2;
                        best_x = x2;
                    }
                }
            }
            if is_gamma {
                gammas[idx] = best_x;
            } else {
                betas[idx] = best_x;
            }
            current = best_f;
        }
        gamma_span *= 0.5;
        beta_span *= 0.5;
        if evals >= budget {
            break;
        }
    }

    // Candidate extraction from the best angles found.
    let circuit = circuit_from_diagonal(diag, d, &best_gammas, &best_betas);
    let state = circuit.run_from_zero()?;
    let subset: Vec<usize> = (0..d).collect();
    let final_seed = derive_seed(derive_seed(cfg.seed, restart as u64), 9001);
    for idx in sim::measure_indices(&state, &subset, cfg.sample_shots, final_seed)? {
        let e = diag[idx];
        let bits = decode_index(idx, d);
        let better = match &candidate {
            None => true,
            Some(c) => improves(e, &bits, c.energy, &c.bits),
        };
        if better {
            candidate = Some(GroundState { bits, energy: e });
        }
    }
    // Report the candidate's exact energy, independent of the diagonal walk.
    if let Some(c) = &mut candidate {
        c.energy = qubo.energy(&c.bits)?;
    }
    Ok(RestartResult {
        best_expectation,
        gammas: best_gammas,
        betas: best_betas,
        candidate,
        evals,
        rows,
    })
}

/// Minimize through the variational ansatz: parallel seeded restarts of
/// golden-section coordinate descent over the angles, candidate assignments
/// harvested from measurements, deterministic for a fixed seed.
pub fn solve_qaoa(qubo: &Qubo, cfg: &QaoaConfig) -> Result<QaoaOutput, QaoaError> {
    if cfg.layers == 0 {
        return Err(QaoaError::BadConfig("need at least one layer".into()));
    }
    if cfg.restarts == 0 {
        return Err(QaoaError::BadConfig("need at least one restart".into()));
    }
    if cfg.max_evals < cfg.restarts {
        return Err(QaoaError::BadConfig(format!(
            "evaluation budget {} cannot cover {} restarts",
            cfg.max_evals, cfg.restarts
        )));
    }
    if cfg.sample_shots == 0 {
        return Err(QaoaError::BadConfig("need at least one sample shot".into()));
    }
    if let ExpectationMode::Sampled { shots: 0 } = cfg.expectation {
        return Err(QaoaError::BadConfig(
            "sampled expectation needs at least one shot".into(),
        ));
    }
    let d = qubo.dimension();
    let cap = cfg.qubit_cap.min(sim::MAX_QUBITS);
    if d > cap {
        return Err(QaoaError::TooManyQubits { dim: d, cap });
    }
    if d == 0 {
        return Ok(QaoaOutput {
            best: GroundState {
                bits: vec![],
                energy: qubo.offset(),
            },
            expectation: qubo.offset(),
            gammas: vec![0.0; cfg.layers],
            betas: vec![0.0; cfg.layers],
            evals: 0,
            diagnostics: vec![],
        });
    }
    let diag = diagonal_energies(qubo)?;
    let budget = cfg.max_evals / cfg.restarts;

    let results: Vec<RestartResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(qubo, &diag, cfg, r, budget))
        .collect::<Result<_, _>>()?;

    let mut best: Option<GroundState> = None;
    let mut expectation = f64::INFINITY;
    let mut gammas = vec![];
    let mut betas = vec![];
    let mut evals = 0;
    let mut diagnostics = Vec::new();
    for r in results {
        evals += r.evals;
        if r.best_expectation < expectation {
            expectation = r.best_expectation;
            gammas = r.gammas.clone();
            betas = r.betas.clone();
        }
        if let Some(c) = r.candidate {
            let take = match &best {
                None => true,
                Some(b) => improves(c.energy, &c.bits, b.energy, &b.bits),
            };
            if take {
                best = Some(c);
            }
        }
        diagnostics.extend(r.rows);
    }
    let best = best.expect("sampling always yields at least one candidate");
    Ok(QaoaOutput {
        best,
        expectation,
        gammas,
        betas,
        evals,
        diagnostics,
    })
}

// ---------------------------------------------------------------------------
// Width-capped dispatch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendUsed {
    Qaoa,
    Anneal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoOutput {
    pub backend: BackendUsed,
    pub best: GroundState,
    /// Final variational expectation (circuit path only).
    pub expectation: Option<f64>,
    /// Present when the instance was too wide for the circuit and annealing
    /// ran instead.
    pub notice: Option<String>,
    pub diagnostics: Vec<DiagRow>,
}

/// Run the variational backend when the instance fits under its qubit cap;
/// otherwise fall back to annealing and say so in the notice.
pub fn solve_quantum_or_anneal(
    qubo: &Qubo,
    qaoa_cfg: &QaoaConfig,
    anneal_cfg: &AnnealConfig,
) -> Result<AutoOutput, QaoaError> {
    let d = qubo.dimension();
    let cap = qaoa_cfg.qubit_cap.min(sim::MAX_QUBITS);
    if d <= cap {
        let out = solve_qaoa(qubo, qaoa_cfg)?;
        Ok(AutoOutput {
            backend: BackendUsed::Qaoa,
            best: out.best,
            expectation: Some(out.expectation),
            notice: None,
            diagnostics: out.diagnostics,
        })
    } else {
        let out = solve_anneal(qubo, anneal_cfg)?;
        Ok(AutoOutput {
            backend: BackendUsed::Anneal,
            best: out.best,
            expectation: None,
            notice: Some(format!(
                "{d}-bit instance exceeds the {cap}-qubit variational cap; annealed instead"
            )),
            diagnostics: vec![],
        })
    }
}
