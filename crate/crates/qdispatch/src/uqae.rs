//! Forecast-error uncertainty on a quantum register.
//!
//! A renewable unit's per-unit forecast error ζ is discretized onto a signed
//! binary grid, loaded into a value register as amplitudes, and linked to an
//! ancilla whose |1> probability equals the normalized mean of the encoded
//! distribution. Squaring the Grover operator against that preparation powers
//! a maximum-likelihood amplitude estimate of the mean; sampling the value
//! registers of several units yields weighted joint scenarios.
//!
//! Register layout for a [`GridEncoding`] with `frac_bits` = m and
//! `int_bits` = n: value qubits 0..=(n+m) where qubit `j` carries weight
//! `2^(j-m)`, plus one ancilla at index `n+m+1`. The encoded value of a basis
//! state `z` (as an integer over the value qubits) is `z * step - bias` with
//! `step = 2^-m` and `bias = 2^n - 2^(-m-1)`, which centers the grid
//! symmetrically around zero.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::{measure_indices, Circuit, GateOp, SimError};

#[derive(Debug, Error, PartialEq)]
pub enum UqaeError {
    #[error("standard deviation must be positive, got {0}")]
    NonPositiveSd(f64),
    #[error("mixture weights must be positive and sum to 1, got sum {0}")]
    BadMixtureWeights(f64),
    #[error("mixture must have at least one component")]
    EmptyMixture,
    #[error("probability vector has {got} entries, encoding expects {expected}")]
    GridSizeMismatch { expected: usize, got: usize },
    #[error("discretized distribution has no mass inside the representable range")]
    NoMassInRange,
    #[error("power count must be at least 1")]
    NoPowers,
    #[error("shot count must be at least 1")]
    NoShots,
    #[error("simulator: {0}")]
    Sim(#[from] SimError),
}

/// Signed binary grid for per-unit forecast errors.
///
/// `frac_bits` fractional weights (2^-1 .. 2^-m) and `int_bits + 1` integer
/// weights (2^0 .. 2^n) give `int_bits + frac_bits + 1` value qubits and
/// `2^(int_bits+frac_bits+1)` grid points with spacing [`Self::step`],
/// spanning `[-bias, +bias]` symmetrically.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEncoding {
    pub int_bits: u32,
    pub frac_bits: u32,
}

impl GridEncoding {
    pub fn new(int_bits: u32, frac_bits: u32) -> GridEncoding {
        GridEncoding {
            int_bits,
            frac_bits,
        }
    }

    /// Number of value qubits.
    pub fn value_qubits(&self) -> usize {
        (self.int_bits + self.frac_bits + 1) as usize
    }

    /// Number of representable grid points.
    pub fn num_points(&self) -> usize {
        1usize << self.value_qubits()
    }

    /// Grid spacing `2^-frac_bits`.
    pub fn step(&self) -> f64 {
        (2.0f64).powi(-(self.frac_bits as i32))
    }

    /// Symmetric offset `2^int_bits - 2^(-frac_bits-1)`.
    pub fn bias(&self) -> f64 {
        (2.0f64).powi(self.int_bits as i32) - (2.0f64).powi(-(self.frac_bits as i32) - 1)
    }

    /// Value of grid point `index` (the value register read as an integer).
    pub fn value(&self, index: usize) -> f64 {
        index as f64 * self.step() - self.bias()
    }

    /// All grid values, ascending.
    pub fn grid_points(&self) -> Vec<f64> {
        (0..self.num_points()).map(|i| self.value(i)).collect()
    }

    /// Maps a representable value into `[0, 1)`: `(zeta + bias) / 2^(n+1)`.
    pub fn unify(&self, zeta: f64) -> f64 {
        (zeta + self.bias()) / (2.0f64).powi(self.int_bits as i32 + 1)
    }

    /// Inverse of [`Self::unify`].
    pub fn de_unify(&self, unified: f64) -> f64 {
        unified * (2.0f64).powi(self.int_bits as i32 + 1) - self.bias()
    }
}

/// Forecast-error distribution of one renewable unit, in per-unit terms.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorDistribution {
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Weighted sum of normal components; weights must be positive and sum
    /// to 1.
    GaussianMixture {
        components: Vec<MixtureComponent>,
    },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

impl ErrorDistribution {
    pub fn validate(&self) -> Result<(), UqaeError> {
        match self {
            ErrorDistribution::Normal { sd, .. } => {
                if *sd <= 0.0 {
                    return Err(UqaeError::NonPositiveSd(*sd));
                }
            }
            ErrorDistribution::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(UqaeError::EmptyMixture);
                }
                let mut sum = 0.0;
                for c in components {
                    if c.sd <= 0.0 {
                        return Err(UqaeError::NonPositiveSd(c.sd));
                    }
                    if c.weight <= 0.0 {
                        return Err(UqaeError::BadMixtureWeights(c.weight));
                    }
                    sum += c.weight;
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(UqaeError::BadMixtureWeights(sum));
                }
            }
        }
        Ok(())
    }

    /// CDF at `x`.
    fn cdf(&self, x: f64) -> f64 {
        match self {
            ErrorDistribution::Normal { mean, sd } => {
                Normal::new(*mean, *sd).expect("validated").cdf(x)
            }
            ErrorDistribution::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight * Normal::new(c.mean, c.sd).expect("validated").cdf(x))
                .sum(),
        }
    }
}

/// Cell-mass discretization of `dist` onto the grid.
///
/// Grid point `g` receives the probability mass of its step-width cell
/// `[g - step/2, g + step/2]`; mass outside the union of cells (beyond the
/// representable range) is truncated and the result renormalized to sum
/// to 1.
pub fn discretize_distribution(
    dist: &ErrorDistribution,
    enc: &GridEncoding,
) -> Result<Vec<f64>, UqaeError> {
    dist.validate()?;
    let half = enc.step() / 2.0;
    let mut masses: Vec<f64> = (0..enc.num_points())
        .map(|i| {
            let g = enc.value(i);
            (dist.cdf(g + half) - dist.cdf(g - half)).max(0.0)
        })
        .collect();
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(UqaeError::NoMassInRange);
    }
    for m in &mut masses {
        *m /= total;
    }
    Ok(masses)
}

/// Builds the full preparation circuit `A` over `value_qubits + 1` qubits:
/// a controlled-rotation tree loads `sqrt(probs)` into the value register,
/// then per-basis-state controlled rotations put the ancilla (last qubit) at
/// `sqrt(unify(value))|1> + sqrt(1 - unify(value))|0>` for each grid point.
///
/// After running from |0..0>, the ancilla's |1> probability is exactly the
/// probability-weighted mean of the unified grid values.
pub fn build_preparation(probs: &[f64], enc: &GridEncoding) -> Result<Circuit, UqaeError> {
    let k = enc.value_qubits();
    if probs.len() != enc.num_points() {
        return Err(UqaeError::GridSizeMismatch {
            expected: enc.num_points(),
            got: probs.len(),
        });
    }
    let ancilla = k;
    let mut circuit = Circuit::new(k + 1);

    // Value-register loading: condition each qubit, most significant first,
    // on every assignment of the higher qubits. Zero-controls are realized by
    // X conjugation around the controlled rotation.
    for depth in 0..k {
        let target = k - 1 - depth;
        for prefix in 0..1usize << depth {
            // prefix bit d (0-based) is the chosen value of qubit k-1-d.
            let mut mass = 0.0f64;
            let mut mass_one = 0.0f64;
            for (z, &p) in probs.iter().enumerate() {
                let mut matches = true;
                for d in 0..depth {
                    let want = (prefix >> d) & 1;
                    if (z >> (k - 1 - d)) & 1 != want {
                        matches = false;
                        break;
                    }
                }
                if matches {
                    mass += p;
                    if (z >> target) & 1 == 1 {
                        mass_one += p;
                    }
                }
            }
            if mass <= 0.0 {
                continue; // unreachable branch of the tree, no rotation needed
            }
            let p1 = (mass_one / mass).clamp(0.0, 1.0);
            let angle = 2.0 * p1.sqrt().asin();
            let controls: Vec<usize> = (0..depth).map(|d| k - 1 - d).collect();
            let zero_controls: Vec<usize> = (0..depth)
                .filter(|&d| (prefix >> d) & 1 == 0)
                .map(|d| k - 1 - d)
                .collect();
            push_masked(
                &mut circuit,
                GateOp::Ry {
                    qubit: target,
                    angle,
                },
                &controls,
                &zero_controls,
            );
        }
    }

    // Ancilla linking: for each basis state z, rotate the ancilla by
    // 2 asin(sqrt(unified value)).
    for z in 0..enc.num_points() {
        let unified = enc.unify(enc.value(z)).clamp(0.0, 1.0);
        let angle = 2.0 * unified.sqrt().asin();
        let controls: Vec<usize> = (0..k).collect();
        let zero_controls: Vec<usize> = (0..k).filter(|&j| (z >> j) & 1 == 0).collect();
        push_masked(
            &mut circuit,
            GateOp::Ry {
                qubit: ancilla,
                angle,
            },
            &controls,
            &zero_controls,
        );
    }
    Ok(circuit)
}

/// Pushes `gate` controlled on `controls`, with the listed zero-controls
/// X-conjugated so the gate fires on the intended bit pattern.
fn push_masked(circuit: &mut Circuit, gate: GateOp, controls: &[usize], zero_controls: &[usize]) {
    for &q in zero_controls {
        circuit.push(GateOp::X { qubit: q });
    }
    if controls.is_empty() {
        circuit.push(gate);
    } else {
        circuit.push(GateOp::Controlled {
            gate: Box::new(gate),
            controls: controls.to_vec(),
        });
    }
    for &q in zero_controls {
        circuit.push(GateOp::X { qubit: q });
    }
}

/// The Grover operator `Q = A S0 A^-1 S_chi` for a preparation `A`:
/// `S_chi` flips the sign of ancilla-|1> components, `S0` reflects about
/// |0..0>. Applied k times to `A|0..0>`, the ancilla-|1> probability becomes
/// `sin^2((2k+1) theta)` where `sin^2(theta)` is the prepared mean.
pub fn grover_operator(prep: &Circuit) -> Circuit {
    let n = prep.num_qubits;
    let ancilla = n - 1;
    let mut q = Circuit::new(n);
    // S_chi: phase pi on the ancilla-|1> subspace.
    q.push(GateOp::Phase {
        qubit: ancilla,
        angle: std::f64::consts::PI,
    });
    // A^-1.
    q.gates.extend(prep.inverse().gates);
    // S0: reflect about |0..0> = X-conjugated phase pi on |1..1>.
    for qubit in 0..n {
        q.push(GateOp::X { qubit });
    }
    q.push(GateOp::Controlled {
        gate: Box::new(GateOp::Phase {
            qubit: 0,
            angle: std::f64::consts::PI,
        }),
        controls: (1..n).collect(),
    });
    for qubit in 0..n {
        q.push(GateOp::X { qubit });
    }
    // A.
    q.gates.extend(prep.gates.iter().cloned());
    q
}

/// How measurement outcomes feed the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateMode {
    /// Use exact ancilla probabilities from the statevector (noise-free
    /// limit; the estimate is grid-search exact).
    ExactProbability,
    /// Draw this many seeded shots per Grover power.
    Shots(u64),
}

/// One Grover-power observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerOutcome {
    /// Number of Grover applications before measuring.
    pub power: u64,
    /// Ancilla-|1> probability (exact) or empirical frequency (shots).
    pub prob_one: f64,
}

/// Result of a mean estimation run.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    /// Estimated rotation angle, in `[0, pi/2]`.
    pub theta: f64,
    /// `sin^2(theta)`: the estimated normalized mean in `[0, 1]`.
    pub unified_mean: f64,
    /// De-normalized mean on the grid scale.
    pub mean: f64,
    pub outcomes: Vec<PowerOutcome>,
}

/// Estimates the mean of the prepared distribution by the Grover-power
/// schedule `Q^1, Q^2, Q^4, ..., Q^(2^(a-1))` with maximum-likelihood
/// combination of the ancilla observations.
///
/// In [`EstimateMode::ExactProbability`] the estimate lands within
/// `pi / 2^a` of the exact discretized mean (the likelihood grid is an order
/// of magnitude finer than that bound).
pub fn estimate_mean(
    prep: &Circuit,
    enc: &GridEncoding,
    num_powers: u32,
    mode: EstimateMode,
    seed: u64,
) -> Result<EstimateResult, UqaeError> {
    if num_powers == 0 {
        return Err(UqaeError::NoPowers);
    }
    if let EstimateMode::Shots(0) = mode {
        return Err(UqaeError::NoShots);
    }
    let ancilla = prep.num_qubits - 1;
    let grover = grover_operator(prep);
    let mut state = prep.run_from_zero()?;
    let mut outcomes = Vec::with_capacity(num_powers as usize);
    let mut applied = 0u64;
    for j in 0..num_powers {
        let power = 1u64 << j;
        while applied < power {
            grover.apply_to(&mut state)?;
            applied += 1;
        }
        let exact_p1 = state.marginal(&[ancilla])?[1];
        let prob_one = match mode {
            EstimateMode::ExactProbability => exact_p1,
            EstimateMode::Shots(shots) => {
                let draws = measure_indices(&state, &[ancilla], shots, derive_seed(seed, j as u64))?;
                draws.iter().filter(|&&d| d == 1).count() as f64 / shots as f64
            }
        };
        outcomes.push(PowerOutcome { power, prob_one });
    }

    let theta = max_likelihood_theta(&outcomes, num_powers);
    let unified_mean = theta.sin().powi(2);
    Ok(EstimateResult {
        theta,
        unified_mean,
        mean: enc.de_unify(unified_mean),
        outcomes,
    })
}

/// Log-likelihood of `theta` given the power observations (shot counts enter
/// only through frequencies, which scales the likelihood uniformly).
fn log_likelihood(outcomes: &[PowerOutcome], theta: f64) -> f64 {
    let mut ll = 0.0;
    for o in outcomes {
        let phase = (2 * o.power + 1) as f64 * theta;
        let s2 = phase.sin().powi(2).max(1e-300);
        let c2 = phase.cos().powi(2).max(1e-300);
        ll += o.prob_one * s2.ln() + (1.0 - o.prob_one) * c2.ln();
    }
    ll
}

/// Dense grid search over `[0, pi/2]` followed by golden-section refinement
/// around the best cell. The grid spacing `pi / 2^(a+7)` keeps the search
/// error two orders below the `pi / 2^a` reporting bound.
fn max_likelihood_theta(outcomes: &[PowerOutcome], num_powers: u32) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let cells = 1usize << (num_powers + 7).min(22);
    let mut best_theta = 0.0;
    let mut best_ll = f64::NEG_INFINITY;
    for i in 0..=cells {
        let theta = half_pi * i as f64 / cells as f64;
        let ll = log_likelihood(outcomes, theta);
        if ll > best_ll {
            best_ll = ll;
            best_theta = theta;
        }
    }
    // Golden-section polish inside the winning cell's neighborhood.
    let width = half_pi / cells as f64;
    let (mut lo, mut hi) = (
        (best_theta - width).max(0.0),
        (best_theta + width).min(half_pi),
    );
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    for _ in 0..40 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if log_likelihood(outcomes, a) < log_likelihood(outcomes, b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    0.5 * (lo + hi)
}

/// Uncertainty description of one renewable unit, ready for scenario work.
#[derive(Debug, Clone, PartialEq)]
pub struct ResUncertainty {
    pub dist: ErrorDistribution,
    pub enc: GridEncoding,
}

/// How joint scenario weights are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMode {
    /// Product of exact discretized cell masses.
    ExactWeights,
    /// Joint empirical frequencies from measuring each unit's value register
    /// this many times (independent registers, one draw per unit per shot);
    /// combinations never observed are dropped.
    SampledWeights { shots: u64 },
}

/// One joint uncertainty scenario: a per-unit error draw and its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: usize,
    /// Per-unit forecast error (per unit of capacity), one entry per RES.
    pub errors: Vec<f64>,
    pub weight: f64,
}

/// A weighted scenario collection. Weights sum to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub mode_label: String,
}

impl ScenarioSet {
    pub fn total_weight(&self) -> f64 {
        self.scenarios.iter().map(|s| s.weight).sum()
    }
}

/// Builds the joint scenario set over all units.
///
/// Exact mode enumerates the full Cartesian product (unit 0's grid index
/// varies fastest). Sampled mode draws `shots` joint tuples by measuring each
/// unit's prepared value register with an independent seed derived from
/// `master_seed`, then tallies; the resulting weights are empirical
/// frequencies and zero-count combinations are dropped.
pub fn generate_scenarios(
    units: &[ResUncertainty],
    mode: WeightMode,
    master_seed: u64,
) -> Result<ScenarioSet, UqaeError> {
    if units.is_empty() {
        return Err(UqaeError::EmptyMixture);
    }
    let per_unit_probs: Vec<Vec<f64>> = units
        .iter()
        .map(|u| discretize_distribution(&u.dist, &u.enc))
        .collect::<Result<_, _>>()?;

    match mode {
        WeightMode::ExactWeights => {
            let counts: Vec<usize> = units.iter().map(|u| u.enc.num_points()).collect();
            let total: usize = counts.iter().product();
            let mut scenarios = Vec::with_capacity(total);
            for s in 0..total {
                let mut weight = 1.0f64;
                let mut errors = Vec::with_capacity(units.len());
                let mut rem = s;
                for (r, unit) in units.iter().enumerate() {
                    let idx = rem % counts[r];
                    rem /= counts[r];
                    weight *= per_unit_probs[r][idx];
                    errors.push(unit.enc.value(idx));
                }
                scenarios.push(Scenario {
                    id: s,
                    errors,
                    weight,
                });
            }
            Ok(ScenarioSet {
                scenarios,
                mode_label: "exact".to_string(),
            })
        }
        WeightMode::SampledWeights { shots } => {
            if shots == 0 {
                return Err(UqaeError::NoShots);
            }
            // One independent measured sequence per unit, zipped shot-wise
            // into joint tuples.
            let mut sequences: Vec<Vec<usize>> = Vec::with_capacity(units.len());
            for (r, unit) in units.iter().enumerate() {
                let prep = build_preparation(&per_unit_probs[r], &unit.enc)?;
                let state = prep.run_from_zero()?;
                let value_qubits: Vec<usize> = (0..unit.enc.value_qubits()).collect();
                sequences.push(measure_indices(
                    &state,
                    &value_qubits,
                    shots,
                    derive_seed(master_seed, r as u64),
                )?);
            }
            let mut tally: std::collections::BTreeMap<Vec<usize>, u64> = Default::default();
            for shot in 0..shots as usize {
                let tuple: Vec<usize> = sequences.iter().map(|seq| seq[shot]).collect();
                *tally.entry(tuple).or_insert(0) += 1;
            }
            let scenarios = tally
                .into_iter()
                .enumerate()
                .map(|(id, (tuple, count))| Scenario {
                    id,
                    errors: tuple
                        .iter()
                        .zip(units)
                        .map(|(&idx, unit)| unit.enc.value(idx))
                        .collect(),
                    weight: count as f64 / shots as f64,
                })
                .collect();
            Ok(ScenarioSet {
                scenarios,
                mode_label: format!("sampled:{shots}"),
            })
        }
    }
}

/// Side-by-side error report: amplitude estimation at `a` powers versus a
/// classical Monte Carlo mean using `2^(a+1)` draws from the same
/// discretized distribution.
#[derive(Debug, Clone)]
pub struct McComparison {
    pub powers: u32,
    pub exact_mean: f64,
    pub uqae_error: f64,
    pub mc_draws: u64,
    pub mc_error: f64,
}

pub fn compare_with_monte_carlo(
    dist: &ErrorDistribution,
    enc: &GridEncoding,
    num_powers: u32,
    seed: u64,
) -> Result<McComparison, UqaeError> {
    let probs = discretize_distribution(dist, enc)?;
    let exact_mean: f64 = probs
        .iter()
        .enumerate()
        .map(|(i, p)| p * enc.value(i))
        .sum();
    let prep = build_preparation(&probs, enc)?;
    let est = estimate_mean(&prep, enc, num_powers, EstimateMode::ExactProbability, seed)?;

    let draws = 1u64 << (num_powers + 1);
    let mut rng = rng_from_seed(derive_seed(seed, 0x4D43));
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut sum = 0.0f64;
    for _ in 0..draws {
        let u: f64 = rand::Rng::gen::<f64>(&mut rng) * acc;
        let idx = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
        sum += enc.value(idx);
    }
    let mc_mean = sum / draws as f64;
    Ok(McComparison {
        powers: num_powers,
        exact_mean,
        uqae_error: (est.mean - exact_mean).abs(),
        mc_draws: draws,
        mc_error: (mc_mean - exact_mean).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn enc11() -> GridEncoding {
        GridEncoding::new(1, 1)
    }

    #[test]
    fn grid_one_one_matches_closed_form() {
        let enc = enc11();
        assert_eq!(enc.value_qubits(), 3);
        assert_eq!(enc.num_points(), 8);
        assert_abs_diff_eq!(enc.step(), 0.5);
        assert_abs_diff_eq!(enc.bias(), 1.75);
        let pts = enc.grid_points();
        let expected = [-1.75, -1.25, -0.75, -0.25, 0.25, 0.75, 1.25, 1.75];
        for (p, e) in pts.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(p, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn one_bit_grid_is_half_steps() {
        let enc = GridEncoding::new(0, 0);
        assert_eq!(enc.value_qubits(), 1);
        assert_abs_diff_eq!(enc.bias(), 0.5);
        let pts = enc.grid_points();
        assert_abs_diff_eq!(pts[0], -0.5);
        assert_abs_diff_eq!(pts[1], 0.5);
    }

    #[test]
    fn grids_are_symmetric_and_uniform() {
        for n in 0..4u32 {
            for m in 0..4u32 {
                let enc = GridEncoding::new(n, m);
                let pts = enc.grid_points();
                let cnt = pts.len();
                for i in 0..cnt {
                    // Symmetry about zero.
                    assert_abs_diff_eq!(pts[i], -pts[cnt - 1 - i], epsilon = 1e-12);
                    if i > 0 {
                        assert_abs_diff_eq!(pts[i] - pts[i - 1], enc.step(), epsilon = 1e-12);
                    }
                    // Unified values stay in [0, 1).
                    let u = enc.unify(pts[i]);
                    assert!((0.0..1.0).contains(&u), "unify({}) = {u}", pts[i]);
                    assert_abs_diff_eq!(enc.de_unify(u), pts[i], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn unify_examples() {
        let enc = enc11();
        assert_abs_diff_eq!(enc.unify(1.75), 0.875, epsilon = 1e-12);
        assert_abs_diff_eq!(enc.unify(-1.75), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(enc.unify(0.25), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn distribution_validation() {
        assert_eq!(
            ErrorDistribution::Normal { mean: 0.0, sd: 0.0 }.validate(),
            Err(UqaeError::NonPositiveSd(0.0))
        );
        let bad = ErrorDistribution::GaussianMixture {
            components: vec![
                MixtureComponent {
                    weight: 0.6,
                    mean: -1.0,
                    sd: 0.3,
                },
                MixtureComponent {
                    weight: 0.6,
                    mean: 1.0,
                    sd: 0.3,
                },
            ],
        };
        assert!(matches!(
            bad.validate(),
            Err(UqaeError::BadMixtureWeights(_))
        ));
        assert_eq!(
            ErrorDistribution::GaussianMixture { components: vec![] }.validate(),
            Err(UqaeError::EmptyMixture)
        );
    }

    #[test]
    fn discretized_normal_is_symmetric_and_normalized() {
        let enc = enc11();
        let probs =
            discretize_distribution(&ErrorDistribution::Normal { mean: 0.0, sd: 0.5 }, &enc)
                .unwrap();
        let total: f64 = probs.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        for i in 0..probs.len() {
            assert_abs_diff_eq!(probs[i], probs[probs.len() - 1 - i], epsilon = 1e-12);
        }
        // Mass concentrates toward the center cells.
        assert!(probs[3] > probs[1]);
        assert!(probs[4] > probs[6]);
    }

    #[test]
    fn symmetric_one_bit_split_is_exact_half() {
        let enc = GridEncoding::new(0, 0);
        let probs =
            discretize_distribution(&ErrorDistribution::Normal { mean: 0.0, sd: 0.4 }, &enc)
                .unwrap();
        assert_abs_diff_eq!(probs[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(probs[1], 0.5, epsilon = 1e-12);
    }

    /// Simpson-rule mass of a mixture pdf over [lo, hi] — an integration path
    /// independent of the CDF-difference implementation.
    fn simpson_mass(components: &[(f64, f64, f64)], lo: f64, hi: f64) -> f64 {
        let pdf = |x: f64| -> f64 {
            components
                .iter()
                .map(|&(w, mu, sd)| {
                    w * (-0.5 * ((x - mu) / sd).powi(2)).exp()
                        / (sd * (2.0 * std::f64::consts::PI).sqrt())
                })
                .sum()
        };
        let n = 4000usize; // even
        let h = (hi - lo) / n as f64;
        let mut acc = pdf(lo) + pdf(hi);
        for i in 1..n {
            let x = lo + i as f64 * h;
            acc += pdf(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn discretized_mixture_matches_numerical_integration() {
        let comps = [(0.55, -0.8, 0.35), (0.45, 0.9, 0.25)];
        let dist = ErrorDistribution::GaussianMixture {
            components: comps
                .iter()
                .map(|&(weight, mean, sd)| MixtureComponent { weight, mean, sd })
                .collect(),
        };
        let enc = enc11();
        let probs = discretize_distribution(&dist, &enc).unwrap();
        let half = enc.step() / 2.0;
        let raw: Vec<f64> = enc
            .grid_points()
            .iter()
            .map(|&g| simpson_mass(&comps, g - half, g + half))
            .collect();
        let total: f64 = raw.iter().sum();
        for (p, r) in probs.iter().zip(raw.iter()) {
            assert_abs_diff_eq!(*p, r / total, epsilon = 1e-9);
        }
    }

    #[test]
    fn preparation_loads_marginal_and_mean() {
        let enc = enc11();
        let probs =
            discretize_distribution(&ErrorDistribution::Normal { mean: 0.2, sd: 0.6 }, &enc)
                .unwrap();
        let prep = build_preparation(&probs, &enc).unwrap();
        assert_eq!(prep.num_qubits, 4);
        let state = prep.run_from_zero().unwrap();
        // Value-register marginal reproduces the cell masses.
        let marg = state.marginal(&[0, 1, 2]).unwrap();
        for (m, p) in marg.iter().zip(probs.iter()) {
            assert_abs_diff_eq!(*m, *p, epsilon = 1e-12);
        }
        // Ancilla-|1> probability equals the weighted unified mean.
        let want: f64 = probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * enc.unify(enc.value(i)))
            .sum();
        let p1 = state.marginal(&[3]).unwrap()[1];
        assert_abs_diff_eq!(p1, want, epsilon = 1e-12);
    }

    #[test]
    fn preparation_rejects_wrong_length() {
        let enc = enc11();
        assert_eq!(
            build_preparation(&[0.5, 0.5], &enc).unwrap_err(),
            UqaeError::GridSizeMismatch {
                expected: 8,
                got: 2
            }
        );
    }

    #[test]
    fn grover_powers_follow_the_rotation_law() {
        let enc = enc11();
        let probs =
            discretize_distribution(&ErrorDistribution::Normal { mean: 0.1, sd: 0.5 }, &enc)
                .unwrap();
        let prep = build_preparation(&probs, &enc).unwrap();
        let state0 = prep.run_from_zero().unwrap();
        let p1 = state0.marginal(&[3]).unwrap()[1];
        let theta = p1.sqrt().asin();
        let grover = grover_operator(&prep);
        let mut state = state0;
        for k in 1..=5u32 {
            grover.apply_to(&mut state).unwrap();
            let expected = ((2 * k + 1) as f64 * theta).sin().powi(2);
            let got = state.marginal(&[3]).unwrap()[1];
            assert_abs_diff_eq!(got, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn exact_mode_estimate_hits_the_bound() {
        let enc = enc11();
        for (dist, seed) in [
            (ErrorDistribution::Normal { mean: 0.0, sd: 0.5 }, 11u64),
            (
                ErrorDistribution::GaussianMixture {
                    components: vec![
                        MixtureComponent {
                            weight: 0.5,
                            mean: -0.9,
                            sd: 0.3,
                        },
                        MixtureComponent {
                            weight: 0.5,
                            mean: 0.9,
                            sd: 0.3,
                        },
                    ],
                },
                12u64,
            ),
        ] {
            let probs = discretize_distribution(&dist, &enc).unwrap();
            let exact_mean: f64 = probs
                .iter()
                .enumerate()
                .map(|(i, p)| p * enc.value(i))
                .sum();
            let prep = build_preparation(&probs, &enc).unwrap();
            for a in [4u32, 5, 6] {
                let est =
                    estimate_mean(&prep, &enc, a, EstimateMode::ExactProbability, seed).unwrap();
                let bound = std::f64::consts::PI / (1u64 << a) as f64;
                assert!(
                    (est.mean - exact_mean).abs() <= bound,
                    "a={a}: |{} - {exact_mean}| > {bound}",
                    est.mean
                );
                assert_eq!(est.outcomes.len(), a as usize);
                assert_eq!(est.outcomes.last().unwrap().power, 1 << (a - 1));
            }
        }
    }

    #[test]
    fn shot_mode_is_seed_deterministic() {
        let enc = enc11();
        let probs =
            discretize_distribution(&ErrorDistribution::Normal { mean: 0.0, sd: 0.5 }, &enc)
                .unwrap();
        let prep = build_preparation(&probs, &enc).unwrap();
        let e1 = estimate_mean(&prep, &enc, 4, EstimateMode::Shots(256), 5).unwrap();
        let e2 = estimate_mean(&prep, &enc, 4, EstimateMode::Shots(256), 5).unwrap();
        assert_eq!(e1.outcomes, e2.outcomes);
        assert_abs_diff_eq!(e1.mean, e2.mean);
        assert_eq!(
            estimate_mean(&prep, &enc, 0, EstimateMode::ExactProbability, 5).unwrap_err(),
            UqaeError::NoPowers
        );
    }

    fn three_units() -> Vec<ResUncertainty> {
        (0..3)
            .map(|i| ResUncertainty {
                dist: ErrorDistribution::Normal {
                    mean: 0.05 * i as f64,
                    sd: 0.4 + 0.1 * i as f64,
                },
                enc: enc11(),
            })
            .collect()
    }

    #[test]
    fn exact_product_scenarios_count_and_weights() {
        let set = generate_scenarios(&three_units(), WeightMode::ExactWeights, 0).unwrap();
        assert_eq!(set.scenarios.len(), 512);
        assert_abs_diff_eq!(set.total_weight(), 1.0, epsilon = 1e-9);
        // Weight of a joint cell is the product of its marginals.
        let units = three_units();
        let probs: Vec<Vec<f64>> = units
            .iter()
            .map(|u| discretize_distribution(&u.dist, &u.enc).unwrap())
            .collect();
        let s = &set.scenarios[5 + 8 * 3 + 64 * 7]; // indices (5, 3, 7)
        assert_abs_diff_eq!(
            s.weight,
            probs[0][5] * probs[1][3] * probs[2][7],
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(s.errors[0], units[0].enc.value(5), epsilon = 1e-15);
        assert_abs_diff_eq!(s.errors[1], units[1].enc.value(3), epsilon = 1e-15);
        assert_abs_diff_eq!(s.errors[2], units[2].enc.value(7), epsilon = 1e-15);
    }

    #[test]
    fn sampled_scenarios_drop_unseen_and_sum_to_one() {
        let set = generate_scenarios(
            &three_units(),
            WeightMode::SampledWeights { shots: 512 },
            42,
        )
        .unwrap();
        assert!(set.scenarios.len() <= 512);
        assert!(!set.scenarios.is_empty());
        assert_abs_diff_eq!(set.total_weight(), 1.0, epsilon = 1e-9);
        // Weights are multiples of 1/shots.
        for s in &set.scenarios {
            let times = s.weight * 512.0;
            assert_abs_diff_eq!(times, times.round(), epsilon = 1e-9);
            assert!(times >= 1.0 - 1e-9);
        }
        // Determinism.
        let again = generate_scenarios(
            &three_units(),
            WeightMode::SampledWeights { shots: 512 },
            42,
        )
        .unwrap();
        assert_eq!(set, again);
    }

    #[test]
    fn mc_comparison_reports_both_errors() {
        let cmp = compare_with_monte_carlo(
            &ErrorDistribution::Normal { mean: 0.0, sd: 0.5 },
            &enc11(),
            5,
            7,
        )
        .unwrap();
        assert_eq!(cmp.mc_draws, 64);
        assert!(cmp.uqae_error <= std::f64::consts::PI / 32.0);
        assert!(cmp.mc_error.is_finite());
    }
}
