//! Multi-cut decomposition loop for the two-stage dispatch program.
//!
//! Each round solves a relaxed master over the binary commitment vector,
//! prices every positive-weight scenario's recourse LP at the trial
//! commitment through its dual, folds optimal duals into one
//! probability-weighted value cut on the recourse estimate, turns unbounded
//! dual rays into exclusion cuts, optionally thins the exclusion pool by set
//! cover, and stops once the bound gap closes or the cut pool stops growing.
//!
//! The master can run as a plain enumeration oracle or as a penalized
//! binary-quadratic model handed to the exact, variational, or annealing
//! minimizer.

use std::collections::HashSet;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutsel::{self, CutselError, SelectMethod};
use crate::lp::{self, Cut, FeasibilityCut, LpError, LpOutcome, OptimalityCut};
use crate::model::{
    DispatchCase, DispatchReport, ModelError, TwoStageProgram, EXTENSIVE_ENUM_BITS,
};
use crate::qaoa::{self, AnnealConfig, QaoaConfig, QaoaError};
use crate::qubo::{self, AffineExpr, QuboError};
use crate::rng::derive_seed;
use crate::uqae::{generate_scenarios, ResUncertainty, ScenarioSet, UqaeError, WeightMode};

/// Violation level above which an exclusion cut rules a commitment out.
pub const EXCLUSION_TOL: f64 = 1e-9;

/// Tie tolerance for the enumeration master: a candidate replaces the
/// incumbent only on strict improvement, so ties resolve toward the
/// lexicographically smallest bit string.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BendersError {
    #[error("scenario set has no positive-weight scenario")]
    EmptyScenarios,
    #[error("scenario weights sum to {0:.12}, expected 1 within 1e-9")]
    BadWeights(f64),
    #[error("master enumeration handles at most {cap} commitment bits, case has {got}")]
    TooManyCommitmentBits { got: usize, cap: usize },
    #[error("aggregation weight list has {got} entries, expected {expected}")]
    WeightLength { got: usize, expected: usize },
    #[error("aggregation needs one value cut per positive-weight scenario; scenario {0} has none")]
    MissingScenarioCut(usize),
    #[error("value cut for scenario {scenario} has {got} commitment coefficients, expected {expected}")]
    CutLength {
        scenario: usize,
        got: usize,
        expected: usize,
    },
    #[error("exclusion cuts rule out every commitment; the cut system is inconsistent")]
    MasterInfeasible,
    #[error(
        "master minimizer settled on an assignment violating its own constraint system \
         (energy {energy:.6e} vs plain cost {cost:.6e}); widths or penalties are misconfigured"
    )]
    MasterUnfaithful { energy: f64, cost: f64 },
    #[error("no feasible commitment was found within the iteration budget")]
    NoIncumbent,
    #[error("recourse re-solve at the incumbent commitment failed for scenario {0}")]
    IncumbentResolve(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Qaoa(#[from] QaoaError),
    #[error(transparent)]
    Cutsel(#[from] CutselError),
    #[error(transparent)]
    Scenario(#[from] UqaeError),
}

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------

/// How the relaxed master over the commitment binaries is minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MasterBackend {
    /// Enumerate every commitment, evaluating the cut system directly.
    IlpOracle,
    /// Penalized binary-quadratic encoding minimized by exhaustive scan.
    QuboExact,
    /// Penalized encoding minimized by the variational circuit (falls back
    /// to annealing above the qubit cap).
    QuboQaoa,
    /// Penalized encoding minimized by simulated annealing.
    QuboAnneal,
}

impl fmt::Display for MasterBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MasterBackend::IlpOracle => "ilp-oracle",
            MasterBackend::QuboExact => "qubo-exact",
            MasterBackend::QuboQaoa => "qubo-qaoa",
            MasterBackend::QuboAnneal => "qubo-anneal",
        };
        f.write_str(s)
    }
}

/// How the exclusion-cut pool is thinned each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutSelection {
    /// Keep every generated exclusion cut active.
    None,
    /// Greedy set cover over (infeasible trial, cut) incidence.
    Greedy,
    /// Exact minimum cover via the binary-quadratic encoding.
    QuboExact,
    /// Variational cover solve with greedy repair.
    QuboQaoa,
}

impl fmt::Display for CutSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CutSelection::None => "none",
            CutSelection::Greedy => "greedy",
            CutSelection::QuboExact => "qubo-exact",
            CutSelection::QuboQaoa => "qubo-qaoa",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct BendersConfig {
    pub master: MasterBackend,
    pub cut_selection: CutSelection,
    pub max_iterations: usize,
    /// Relative gap tolerance: stop once `UB - LB <= epsilon * (1 + |UB|)`.
    pub epsilon: f64,
    /// Also stop when a round adds no new value cut, no new exclusion cut,
    /// and leaves the active exclusion set unchanged.
    pub stall_termination: bool,
    pub seed: u64,
    /// Resolution cap (fractional bits) for encoded slack registers.
    pub slack_frac_bits: u32,
    /// Settings for the variational master and cover solves.
    pub qaoa: QaoaConfig,
    /// Settings for the annealing master and oversize fallbacks.
    pub anneal: AnnealConfig,
}

impl Default for BendersConfig {
    fn default() -> Self {
        Self {
            master: MasterBackend::IlpOracle,
            cut_selection: CutSelection::Greedy,
            max_iterations: 50,
            epsilon: 1e-6,
            stall_termination: true,
            seed: 7,
            slack_frac_bits: 3,
            qaoa: QaoaConfig::default(),
            anneal: AnnealConfig::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Cut pool.
// ---------------------------------------------------------------------------

/// One stored exclusion cut with its provenance.
#[derive(Debug, Clone)]
pub struct StoredFeasibilityCut {
    pub cut: FeasibilityCut,
    /// Iteration whose trial commitment produced it.
    pub trial_id: usize,
}

/// Accumulated cuts across the run.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    /// Per feasible-trial round: the per-scenario value cuts behind one
    /// aggregate, indexed by scenario position (zero-weight slots stay
    /// `None`).
    pub scenario_cuts: Vec<Vec<Option<OptimalityCut>>>,
    /// Probability-weighted aggregate of each entry in `scenario_cuts`.
    pub aggregates: Vec<AffineExpr>,
    /// Every distinct exclusion cut generated so far.
    pub feasibility: Vec<StoredFeasibilityCut>,
    /// Indices into `feasibility` currently active in the master.
    pub selected: Vec<usize>,
    /// Exclusion cuts generated including content duplicates.
    pub generated_feasibility: usize,
}

impl CutPool {
    /// Number of stored value-cut aggregates.
    pub fn num_aggregates(&self) -> usize {
        self.aggregates.len()
    }

    /// Number of currently active exclusion cuts.
    pub fn num_selected(&self) -> usize {
        self.selected.len()
    }

    /// Affine forms of the active exclusion cuts, in selection order.
    pub fn selected_exprs(&self) -> Vec<AffineExpr> {
        self.selected
            .iter()
            .map(|&k| feasibility_expr(&self.feasibility[k].cut))
            .collect()
    }

    /// Check the structural invariants: every aggregate equals the
    /// probability-weighted sum of its per-scenario cuts coefficientwise,
    /// and the active set is a sorted, duplicate-free subset of the pool.
    pub fn verify(&self, weights: &[f64]) -> Result<(), String> {
        if self.scenario_cuts.len() != self.aggregates.len() {
            return Err(format!(
                "{} scenario-cut groups but {} aggregates",
                self.scenario_cuts.len(),
                self.aggregates.len()
            ));
        }
        for (k, (cuts, agg)) in self.scenario_cuts.iter().zip(&self.aggregates).enumerate() {
            let rebuilt = aggregate_optimality(cuts, weights)
                .map_err(|e| format!("aggregate {k} does not rebuild: {e}"))?;
            if (rebuilt.constant - agg.constant).abs() > 1e-9 {
                return Err(format!(
                    "aggregate {k} constant drift {}",
                    (rebuilt.constant - agg.constant).abs()
                ));
            }
            if rebuilt.coefficients.len() != agg.coefficients.len() {
                return Err(format!("aggregate {k} coefficient arity mismatch"));
            }
            for (j, (r, s)) in rebuilt
                .coefficients
                .iter()
                .zip(&agg.coefficients)
                .enumerate()
            {
                if (r - s).abs() > 1e-9 {
                    return Err(format!("aggregate {k} coefficient {j} drift {}", (r - s).abs()));
                }
            }
        }
        let mut last: Option<usize> = None;
        for &k in &self.selected {
            if k >= self.feasibility.len() {
                return Err(format!("selected index {k} outside the pool"));
            }
            if let Some(prev) = last {
                if k <= prev {
                    return Err("selected indices are not strictly increasing".into());
                }
            }
            last = Some(k);
        }
        Ok(())
    }
}

fn feasibility_expr(cut: &FeasibilityCut) -> AffineExpr {
    AffineExpr {
        constant: cut.constant,
        coefficients: cut.z_coefficients.clone(),
    }
}

fn affine_close(x: &AffineExpr, y: &AffineExpr, tol: f64) -> bool {
    x.coefficients.len() == y.coefficients.len()
        && (x.constant - y.constant).abs() <= tol
        && x.coefficients
            .iter()
            .zip(&y.coefficients)
            .all(|(a, b)| (a - b).abs() <= tol)
}

/// Combine one value cut per positive-weight scenario into a single
/// probability-weighted cut `eta >= constant + coefficients · z0`.
///
/// `cuts` is indexed by scenario position; zero-weight slots may be `None`.
/// The weights must sum to one within `1e-9`.
pub fn aggregate_optimality(
    cuts: &[Option<OptimalityCut>],
    weights: &[f64],
) -> Result<AffineExpr, BendersError> {
    if cuts.len() != weights.len() {
        return Err(BendersError::WeightLength {
            got: weights.len(),
            expected: cuts.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(BendersError::BadWeights(total));
    }
    let Some(first_pos) = weights.iter().position(|&w| w > 0.0) else {
        return Err(BendersError::EmptyScenarios);
    };
    let m = cuts
        .iter()
        .zip(weights)
        .find_map(|(c, &w)| {
            if w > 0.0 {
                c.as_ref().map(|c| c.z_coefficients.len())
            } else {
                None
            }
        });
    let Some(m) = m else {
        return Err(BendersError::MissingScenarioCut(first_pos));
    };
    let mut constant = 0.0;
    let mut coefficients = vec![0.0; m];
    for (s, (cut, &w)) in cuts.iter().zip(weights).enumerate() {
        if w <= 0.0 {
            continue;
        }
        let Some(cut) = cut.as_ref() else {
            return Err(BendersError::MissingScenarioCut(s));
        };
        if cut.z_coefficients.len() != m {
            return Err(BendersError::CutLength {
                scenario: s,
                got: cut.z_coefficients.len(),
                expected: m,
            });
        }
        constant += w * cut.constant;
        for (acc, c) in coefficients.iter_mut().zip(&cut.z_coefficients) {
            *acc += w * c;
        }
    }
    Ok(AffineExpr {
        constant,
        coefficients,
    })
}

// ---------------------------------------------------------------------------
// Trace.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// `UB - LB` fell under the relative tolerance.
    GapClosed,
    /// A round produced no new cut of either kind and left the active
    /// exclusion set unchanged.
    CutStall,
    /// The iteration budget ran out before either test fired.
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Trial commitment proposed by the master this round.
    pub trial: Vec<u8>,
    /// Master objective at the trial (lower bound under exact masters).
    pub lower: f64,
    /// Incumbent total cost after this round; infinite until a trial is
    /// feasible for every scenario.
    pub upper: f64,
    pub backend: MasterBackend,
    /// Binary-quadratic model width (0 for the enumeration oracle).
    pub master_bits: usize,
    /// Scenarios whose recourse was infeasible at the trial.
    pub infeasible_scenarios: usize,
    /// Exclusion cuts generated so far, counting content duplicates.
    pub generated_cuts: usize,
    /// Active exclusion cuts after this round's selection.
    pub selected_cuts: usize,
    /// Stored value-cut aggregates after this round.
    pub aggregate_count: usize,
    pub master_notice: Option<String>,
    pub master_ms: f64,
    pub subproblem_ms: f64,
    pub selection_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BendersTrace {
    pub iterations: Vec<IterationRecord>,
}

impl BendersTrace {
    /// Trial commitments in iteration order.
    pub fn trial_sequence(&self) -> Vec<Vec<u8>> {
        self.iterations.iter().map(|r| r.trial.clone()).collect()
    }

    /// Render the trace as CSV, one row per iteration.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iteration,lower,upper,trial,backend,master_bits,infeasible_scenarios,\
             generated_cuts,selected_cuts,aggregates,master_ms,subproblem_ms,selection_ms\n",
        );
        for r in &self.iterations {
            let trial: String = r.trial.iter().map(|b| char::from(b'0' + b)).collect();
            out.push_str(&format!(
                "{},{:.12e},{},{},{},{},{},{},{},{},{:.3},{:.3},{:.3}\n",
                r.iteration,
                r.lower,
                if r.upper.is_finite() {
                    format!("{:.12e}", r.upper)
                } else {
                    "inf".into()
                },
                trial,
                r.backend,
                r.master_bits,
                r.infeasible_scenarios,
                r.generated_cuts,
                r.selected_cuts,
                r.aggregate_count,
                r.master_ms,
                r.subproblem_ms,
                r.selection_ms,
            ));
        }
        out
    }

    /// Check `UB >= LB - tol` on every round where the upper bound exists.
    pub fn verify_bounds(&self) -> Result<(), String> {
        for r in &self.iterations {
            if r.upper.is_finite() && r.upper < r.lower - 1e-9 * (1.0 + r.upper.abs()) {
                return Err(format!(
                    "round {}: upper {} fell below lower {}",
                    r.iteration, r.upper, r.lower
                ));
            }
        }
        Ok(())
    }

    /// Check the lower bound never decreases (valid under exact masters).
    pub fn verify_monotone_lower(&self) -> Result<(), String> {
        for pair in self.iterations.windows(2) {
            if pair[1].lower < pair[0].lower - 1e-9 {
                return Err(format!(
                    "lower bound fell from {} (round {}) to {} (round {})",
                    pair[0].lower, pair[0].iteration, pair[1].lower, pair[1].iteration
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Master solves.
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct MasterSolve {
    trial: Vec<u8>,
    /// `a · z0 + eta` at the returned assignment.
    objective: f64,
    bits: usize,
    notice: Option<String>,
    snap_distance: f64,
}

/// Enumerate every commitment, skip those violating an active exclusion
/// cut, and price the rest with the recourse estimate clamped at zero.
fn solve_master_oracle(
    a: &[f64],
    aggregates: &[AffineExpr],
    exclusions: &[AffineExpr],
) -> Result<MasterSolve, BendersError> {
    let m = a.len();
    if m > EXTENSIVE_ENUM_BITS {
        return Err(BendersError::TooManyCommitmentBits {
            got: m,
            cap: EXTENSIVE_ENUM_BITS,
        });
    }
    let mut best: Option<(Vec<u8>, f64)> = None;
    for v in 0..(1u64 << m) {
        let z0: Vec<u8> = (0..m).map(|j| ((v >> (m - 1 - j)) & 1) as u8).collect();
        if exclusions.iter().any(|c| c.evaluate(&z0) > EXCLUSION_TOL) {
            continue;
        }
        let eta = aggregates
            .iter()
            .map(|g| g.evaluate(&z0))
            .fold(0.0_f64, f64::max);
        let obj = eta
            + a.iter()
                .zip(&z0)
                .map(|(c, &z)| c * f64::from(z))
                .sum::<f64>();
        let improves = match &best {
            None => true,
            Some((_, cur)) => obj < cur - TIE_TOL,
        };
        if improves {
            best = Some((z0, obj));
        }
    }
    let (trial, objective) = best.ok_or(BendersError::MasterInfeasible)?;
    Ok(MasterSolve {
        trial,
        objective,
        bits: 0,
        notice: None,
        snap_distance: 0.0,
    })
}

/// Encode the cut system as a penalized binary-quadratic model and minimize
/// it with the requested backend.
fn solve_master_qubo(
    backend: MasterBackend,
    a: &[f64],
    aggregates: &[AffineExpr],
    exclusions: &[AffineExpr],
    eta_hint: Option<f64>,
    cfg: &BendersConfig,
    iteration: usize,
) -> Result<MasterSolve, BendersError> {
    let widths = qubo::choose_widths(
        a,
        aggregates,
        exclusions,
        None,
        eta_hint,
        cfg.slack_frac_bits,
    )?;
    let penalties = qubo::choose_penalties(a, &widths, 0);
    let enc = qubo::encode_master(a, aggregates, exclusions, &widths, &penalties)?;
    let dim = enc.qubo.dimension();
    let mut notice = None;
    let bits = match backend {
        MasterBackend::QuboExact => qaoa::solve_exact(&enc.qubo)?.bits,
        MasterBackend::QuboAnneal => {
            let mut acfg = cfg.anneal.clone();
            acfg.seed = derive_seed(cfg.seed, 2000 + iteration as u64);
            qaoa::solve_anneal(&enc.qubo, &acfg)?.best.bits
        }
        MasterBackend::QuboQaoa => {
            let mut qcfg = cfg.qaoa.clone();
            qcfg.seed = derive_seed(cfg.seed, 1000 + iteration as u64);
            let mut acfg = cfg.anneal.clone();
            acfg.seed = derive_seed(cfg.seed, 3000 + iteration as u64);
            let out = qaoa::solve_quantum_or_anneal(&enc.qubo, &qcfg, &acfg)?;
            notice = out.notice;
            out.best.bits
        }
        MasterBackend::IlpOracle => unreachable!("oracle handled separately"),
    };
    let objective = enc.objective_value(&bits);
    if !enc.satisfies_constraints(&bits) {
        if backend == MasterBackend::QuboExact {
            // The exhaustive scan returned the true energy minimum; a
            // constraint-violating minimum means the penalty weights or
            // register widths cannot express a feasible assignment.
            let energy = enc.qubo.energy(&bits)?;
            return Err(BendersError::MasterUnfaithful {
                energy,
                cost: objective,
            });
        }
        let extra = "assignment violates the encoded cut system; continuing with it";
        notice = Some(match notice {
            Some(n) => format!("{n}; {extra}"),
            None => extra.to_string(),
        });
    }
    Ok(MasterSolve {
        trial: enc.decode_z0(&bits),
        objective,
        bits: dim,
        notice,
        snap_distance: enc.max_snap_distance,
    })
}

// ---------------------------------------------------------------------------
// Orchestrator.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BendersOutcome {
    /// Incumbent commitment.
    pub z0: Vec<u8>,
    /// Incumbent total expected cost (equals the final upper bound).
    pub objective: f64,
    pub lower: f64,
    pub upper: f64,
    pub stop: StopReason,
    /// Physical schedule decoded at the incumbent.
    pub report: DispatchReport,
    pub trace: BendersTrace,
    pub pool: CutPool,
    /// Largest grid-snap displacement any master encoding applied.
    pub snap_distance: f64,
}

/// Build the per-unit uncertainty list a case implies, ready for scenario
/// generation.
pub fn case_uncertainties(case: &DispatchCase) -> Vec<ResUncertainty> {
    case.res_units
        .iter()
        .map(|r| ResUncertainty {
            dist: r.error.clone(),
            enc: r.encoding,
        })
        .collect()
}

/// Generate the scenario set a case implies under the given weighting mode.
pub fn scenarios_for_case(
    case: &DispatchCase,
    mode: WeightMode,
    seed: u64,
) -> Result<ScenarioSet, BendersError> {
    Ok(generate_scenarios(&case_uncertainties(case), mode, seed)?)
}

/// Run the decomposition loop to convergence, stall, or the iteration cap.
pub fn run(
    program: &TwoStageProgram,
    scenarios: &ScenarioSet,
    config: &BendersConfig,
) -> Result<BendersOutcome, BendersError> {
    let a = &program.first_stage_cost;
    let weights: Vec<f64> = scenarios.scenarios.iter().map(|s| s.weight).collect();
    let total_weight: f64 = weights.iter().sum();
    if (total_weight - 1.0).abs() > 1e-9 {
        return Err(BendersError::BadWeights(total_weight));
    }

    // Active scenarios: positive weight, right-hand side precomputed.
    let active: Vec<(usize, f64, Vec<f64>)> = scenarios
        .scenarios
        .iter()
        .enumerate()
        .filter(|(_, s)| s.weight > 0.0)
        .map(|(i, s)| Ok((i, s.weight, program.scenario_rhs(&s.errors)?)))
        .collect::<Result<_, ModelError>>()?;
    if active.is_empty() {
        return Err(BendersError::EmptyScenarios);
    }

    // Row-major recourse and commitment matrices, shared by every solve.
    let c_rows: Vec<Vec<f64>> = program.rows.iter().map(|r| r.c_coeffs.clone()).collect();
    let b_rows: Vec<Vec<f64>> = program.rows.iter().map(|r| r.b_coeffs.clone()).collect();

    let mut pool = CutPool::default();
    let mut trace = BendersTrace::default();
    let mut incumbent: Option<(Vec<u8>, f64)> = None;
    let mut infeasible_trials: Vec<Vec<u8>> = Vec::new();
    let mut infeasible_seen: HashSet<Vec<u8>> = HashSet::new();
    let mut snap_max = 0.0_f64;
    let mut stop = StopReason::IterationCap;

    for iteration in 0..config.max_iterations {
        // Master: propose a trial commitment and a bound.
        let t_master = Instant::now();
        let aggregates = pool.aggregates.clone();
        let exclusions = pool.selected_exprs();
        let master = match config.master {
            MasterBackend::IlpOracle => solve_master_oracle(a, &aggregates, &exclusions)?,
            backend => solve_master_qubo(
                backend,
                a,
                &aggregates,
                &exclusions,
                incumbent.as_ref().map(|(_, c)| *c),
                config,
                iteration,
            )?,
        };
        let master_ms = t_master.elapsed().as_secs_f64() * 1e3;
        snap_max = snap_max.max(master.snap_distance);
        let trial = master.trial.clone();

        // Price every active scenario's recourse at the trial, in parallel,
        // keeping scenario order.
        let t_sub = Instant::now();
        let cuts: Vec<Cut> = active
            .par_iter()
            .map(|(idx, _, rhs)| {
                lp::solve_subproblem(
                    *idx,
                    &program.second_stage_cost,
                    &c_rows,
                    &b_rows,
                    rhs,
                    &trial,
                )
            })
            .collect::<Result<_, LpError>>()?;
        let subproblem_ms = t_sub.elapsed().as_secs_f64() * 1e3;

        let mut scenario_cuts: Vec<Option<OptimalityCut>> = vec![None; weights.len()];
        let mut new_exclusions: Vec<FeasibilityCut> = Vec::new();
        for cut in cuts {
            match cut {
                Cut::Optimality(c) => {
                    let slot = c.scenario;
                    scenario_cuts[slot] = Some(c);
                }
                Cut::Feasibility(c) => new_exclusions.push(c),
            }
        }
        let infeasible_scenarios = new_exclusions.len();

        // Fold the round's cuts into the pool.
        let mut added_aggregate = false;
        let mut added_exclusion = false;
        if infeasible_scenarios == 0 {
            let agg = aggregate_optimality(&scenario_cuts, &weights)?;
            let total = program.first_stage_cost_of(&trial) + agg.evaluate(&trial);
            let improves = match &incumbent {
                None => true,
                Some((_, cur)) => total < cur - TIE_TOL,
            };
            if improves {
                incumbent = Some((trial.clone(), total));
            }
            if !pool.aggregates.iter().any(|g| affine_close(g, &agg, 1e-12)) {
                pool.scenario_cuts.push(scenario_cuts);
                pool.aggregates.push(agg);
                added_aggregate = true;
            }
        } else {
            // At least one scenario rejects the trial: record exclusion cuts
            // for every infeasible scenario and no value cut this round.
            if infeasible_seen.insert(trial.clone()) {
                infeasible_trials.push(trial.clone());
            }
            pool.generated_feasibility += infeasible_scenarios;
            // Canonical content order keeps the pool independent of the
            // scenario ordering.
            new_exclusions.sort_by(|x, y| {
                x.z_coefficients
                    .iter()
                    .chain(std::iter::once(&x.constant))
                    .zip(y.z_coefficients.iter().chain(std::iter::once(&y.constant)))
                    .find_map(|(p, q)| {
                        let ord = p.total_cmp(q);
                        ord.is_ne().then_some(ord)
                    })
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            for cut in new_exclusions {
                let expr = feasibility_expr(&cut);
                let dup = pool
                    .feasibility
                    .iter()
                    .any(|s| affine_close(&feasibility_expr(&s.cut), &expr, 1e-12));
                if !dup {
                    pool.feasibility.push(StoredFeasibilityCut {
                        cut,
                        trial_id: iteration,
                    });
                    added_exclusion = true;
                }
            }
        }

        // Thin the exclusion pool.
        let t_sel = Instant::now();
        let selected_before = pool.selected.clone();
        if !pool.feasibility.is_empty() {
            match config.cut_selection {
                CutSelection::None => {
                    pool.selected = (0..pool.feasibility.len()).collect();
                }
                method => {
                    let exprs: Vec<AffineExpr> = pool
                        .feasibility
                        .iter()
                        .map(|s| feasibility_expr(&s.cut))
                        .collect();
                    let inst = cutsel::build_cover_matrix(&exprs, &infeasible_trials)?;
                    let select = match method {
                        CutSelection::Greedy => SelectMethod::Greedy,
                        CutSelection::QuboExact => SelectMethod::QuboExact,
                        CutSelection::QuboQaoa => SelectMethod::QuboQaoa,
                        CutSelection::None => unreachable!(),
                    };
                    let sel = cutsel::select_cover(
                        &inst,
                        select,
                        derive_seed(config.seed, 500 + iteration as u64),
                    )?;
                    pool.selected = sel.chosen;
                }
            }
        }
        let selection_ms = t_sel.elapsed().as_secs_f64() * 1e3;
        let selection_changed = pool.selected != selected_before;

        let upper = incumbent.as_ref().map_or(f64::INFINITY, |(_, c)| *c);
        trace.iterations.push(IterationRecord {
            iteration,
            trial,
            lower: master.objective,
            upper,
            backend: config.master,
            master_bits: master.bits,
            infeasible_scenarios,
            generated_cuts: pool.generated_feasibility,
            selected_cuts: pool.num_selected(),
            aggregate_count: pool.num_aggregates(),
            master_notice: master.notice,
            master_ms,
            subproblem_ms,
            selection_ms,
        });

        if upper.is_finite() && upper - master.objective <= config.epsilon * (1.0 + upper.abs()) {
            stop = StopReason::GapClosed;
            break;
        }
        if config.stall_termination && !added_aggregate && !added_exclusion && !selection_changed {
            stop = StopReason::CutStall;
            break;
        }
    }

    let (z0, objective) = incumbent.ok_or(BendersError::NoIncumbent)?;

    // Recover the physical schedule by primal re-solves at the incumbent.
    let weighted_x: Vec<(f64, Vec<f64>)> = active
        .par_iter()
        .map(|(idx, w, rhs)| match program.solve_primal_subproblem(&z0, rhs) {
            Ok(LpOutcome::Optimal { x, .. }) => Ok((*w, x)),
            Ok(_) => Err(BendersError::IncumbentResolve(*idx)),
            Err(e) => Err(BendersError::Model(e)),
        })
        .collect::<Result<_, BendersError>>()?;
    let report = program.decode_schedule(&z0, &weighted_x)?;

    let lower = trace
        .iterations
        .last()
        .map_or(f64::NEG_INFINITY, |r| r.lower);
    Ok(BendersOutcome {
        z0,
        objective,
        lower,
        upper: objective,
        stop,
        report,
        trace,
        pool,
        snap_distance: snap_max,
    })
}

// ---------------------------------------------------------------------------
// Tests.
// ---------------------------------------------------------------------------
