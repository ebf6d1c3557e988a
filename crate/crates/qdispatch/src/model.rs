//! Renewables-rich dispatch cases and their compilation into a standard-form
//! two-stage program.
//!
//! A [`DispatchCase`] describes buses, DC lines, thermal generators, storage
//! units, and renewable units with per-unit forecast-error models over a
//! planning horizon. [`DispatchCase::compile`] turns it into a
//! [`TwoStageProgram`]: binary first-stage commitment variables `z0` (unit
//! on/off, startup indicators, storage charge/discharge modes) and continuous
//! nonnegative recourse variables `x_s` per scenario, with every constraint
//! stored as a `>=` row `B z0 + C x_s >= rhs_s` (equalities as paired rows).
//!
//! Conventions baked into the compilation:
//! * DC power flow; the slack bus is the lowest-numbered generator bus.
//! * Bus angles are shifted by a constant large enough to keep them
//!   nonnegative (the shift cancels in every angle difference and is pinned
//!   at the slack bus), so `x_s >= 0` is the only variable bound.
//! * Renewable output realizes as `clamp(forecast + error · capacity, 0,
//!   capacity)`; curtailment is a free nonnegative injection variable capped
//!   by the realized output, so high-error scenarios stay representable.
//! * Startup indicators (and their linking rows) are only compiled for
//!   generators with a positive startup cost.
//! * Rows that involve only first-stage variables (mode exclusivity, startup
//!   linking) carry all-zero recourse coefficients; a trial commitment that
//!   violates one makes every scenario subproblem infeasible, which the
//!   decomposition loop turns into a feasibility cut.
//! * Ramp limits couple consecutive hours inside the horizon; the hour-zero
//!   output is not ramp-constrained against any pre-horizon state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, LpOutcome, RowSense, Sense};
use crate::uqae::{ErrorDistribution, GridEncoding, ScenarioSet};

/// Default cap on `scenarios × recourse variables` for the extensive form.
pub const EXTENSIVE_SIZE_CAP: usize = 200_000;
/// Enumerating the extensive form is refused above this many binaries.
pub const EXTENSIVE_ENUM_BITS: usize = 20;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("case has no buses")]
    NoBuses,
    #[error("horizon must be at least one hour")]
    EmptyHorizon,
    #[error("duplicate bus id {0}")]
    DuplicateBus(usize),
    #[error("{element} references unknown bus {bus}")]
    UnknownBus { element: String, bus: usize },
    #[error("bus {bus}: load series has {got} entries, horizon is {expected}")]
    LoadLength {
        bus: usize,
        got: usize,
        expected: usize,
    },
    #[error("renewable {name}: forecast has {got} entries, horizon is {expected}")]
    ForecastLength {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("line {from}-{to}: reactance must be positive, got {x}")]
    BadReactance { from: usize, to: usize, x: f64 },
    #[error("line {from}-{to}: flow limit must be positive, got {limit}")]
    BadFlowLimit { from: usize, to: usize, limit: f64 },
    #[error("line endpoints must differ, got {0}-{0}")]
    SelfLoop(usize),
    #[error("generator {name}: p_min {p_min} exceeds p_max {p_max}")]
    PministAbovePmax {
        name: String,
        p_min: f64,
        p_max: f64,
    },
    #[error("generator {name}: {what} must be nonnegative")]
    NegativeGenParam { name: String, what: String },
    #[error("storage {name}: {what}")]
    BadStorage { name: String, what: String },
    #[error("renewable {name}: {what}")]
    BadRes { name: String, what: String },
    #[error("network is not connected: bus {0} is unreachable")]
    Disconnected(usize),
    #[error("non-finite number in field {0}")]
    NonFinite(String),
    #[error("extensive form needs {got} first-stage bits; enumeration is capped at {cap}")]
    TooManyFirstStageBits { got: usize, cap: usize },
    #[error("extensive form size {got} exceeds cap {cap} (scenarios x recourse variables)")]
    ExtensiveTooLarge { got: usize, cap: usize },
    #[error("scenario error vector has {got} entries, expected {expected}")]
    ScenarioDimension { got: usize, expected: usize },
    #[error("solution vector has {got} entries, expected {expected}")]
    SolutionDimension { got: usize, expected: usize },
    #[error("linear solve failed: {0}")]
    Lp(#[from] LpError),
}

// ---------------------------------------------------------------------------
// Case data
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: usize,
    /// Demand per hour, MW; length equals the horizon.
    pub load_mw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from_bus: usize,
    pub to_bus: usize,
    pub reactance_pu: f64,
    pub flow_limit_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub name: String,
    pub bus: usize,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    pub ramp_mw_per_hour: f64,
    pub startup_cost_usd: f64,
    pub marginal_cost_usd_per_mwh: f64,
    pub initially_on: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Storage {
    pub name: String,
    pub bus: usize,
    pub energy_capacity_mwh: f64,
    pub soc_min_fraction: f64,
    pub soc_max_fraction: f64,
    pub charge_limit_mw: f64,
    pub discharge_limit_mw: f64,
    pub charge_cost_usd_per_mwh: f64,
    pub discharge_cost_usd_per_mwh: f64,
    /// Round-trip efficiency in `(0, 1]`; charging and discharging each apply
    /// its square root.
    pub round_trip_efficiency: f64,
    pub initial_soc_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResUnit {
    pub name: String,
    pub bus: usize,
    pub capacity_mw: f64,
    /// Point forecast per hour, MW; length equals the horizon.
    pub forecast_mw: Vec<f64>,
    pub error: ErrorDistribution,
    pub encoding: GridEncoding,
}

impl ResUnit {
    /// Realized output per hour for a per-unit forecast error `zeta`:
    /// `clamp(forecast + zeta * capacity, 0, capacity)`. One error draw
    /// applies to the whole horizon.
    pub fn realized_mw(&self, zeta: f64) -> Vec<f64> {
        self.forecast_mw
            .iter()
            .map(|&f| (f + zeta * self.capacity_mw).clamp(0.0, self.capacity_mw))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispatchCase {
    pub name: String,
    pub horizon_hours: usize,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub storages: Vec<Storage>,
    #[serde(default)]
    pub res_units: Vec<ResUnit>,
}

impl DispatchCase {
    fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Structural validation: dimensions, signs, references, connectivity.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.buses.is_empty() {
            return Err(ModelError::NoBuses);
        }
        let t = self.horizon_hours;
        if t == 0 {
            return Err(ModelError::EmptyHorizon);
        }
        for (i, b) in self.buses.iter().enumerate() {
            if self.buses[..i].iter().any(|o| o.id == b.id) {
                return Err(ModelError::DuplicateBus(b.id));
            }
            if b.load_mw.len() != t {
                return Err(ModelError::LoadLength {
                    bus: b.id,
                    got: b.load_mw.len(),
                    expected: t,
                });
            }
            if !b.load_mw.iter().all(|v| v.is_finite()) {
                return Err(ModelError::NonFinite(format!("bus {} load", b.id)));
            }
        }
        for l in &self.lines {
            if l.from_bus == l.to_bus {
                return Err(ModelError::SelfLoop(l.from_bus));
            }
            for end in [l.from_bus, l.to_bus] {
                if self.bus_index(end).is_none() {
                    return Err(ModelError::UnknownBus {
                        element: format!("line {}-{}", l.from_bus, l.to_bus),
                        bus: end,
                    });
                }
            }
            if !(l.reactance_pu > 0.0) || !l.reactance_pu.is_finite() {
                return Err(ModelError::BadReactance {
                    from: l.from_bus,
                    to: l.to_bus,
                    x: l.reactance_pu,
                });
            }
            if !(l.flow_limit_mw > 0.0) || !l.flow_limit_mw.is_finite() {
                return Err(ModelError::BadFlowLimit {
                    from: l.from_bus,
                    to: l.to_bus,
                    limit: l.flow_limit_mw,
                });
            }
        }
        for g in &self.generators {
            if self.bus_index(g.bus).is_none() {
                return Err(ModelError::UnknownBus {
                    element: format!("generator {}", g.name),
                    bus: g.bus,
                });
            }
            if g.p_min_mw > g.p_max_mw {
                return Err(ModelError::PministAbovePmax {
                    name: g.name.clone(),
                    p_min: g.p_min_mw,
                    p_max: g.p_max_mw,
                });
            }
            for (v, what) in [
                (g.p_min_mw, "p_min"),
                (g.p_max_mw, "p_max"),
                (g.ramp_mw_per_hour, "ramp"),
                (g.startup_cost_usd, "startup cost"),
                (g.marginal_cost_usd_per_mwh, "marginal cost"),
            ] {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(ModelError::NegativeGenParam {
                        name: g.name.clone(),
                        what: what.into(),
                    });
                }
            }
        }
        for s in &self.storages {
            if self.bus_index(s.bus).is_none() {
                return Err(ModelError::UnknownBus {
                    element: format!("storage {}", s.name),
                    bus: s.bus,
                });
            }
            let bad = |what: &str| ModelError::BadStorage {
                name: s.name.clone(),
                what: what.into(),
            };
            if !(s.energy_capacity_mwh >= 0.0) {
                return Err(bad("energy capacity must be nonnegative"));
            }
            if !(0.0 <= s.soc_min_fraction
                && s.soc_min_fraction <= s.soc_max_fraction
                && s.soc_max_fraction <= 1.0)
            {
                return Err(bad("need 0 <= soc_min <= soc_max <= 1"));
            }
            if !(0.0..=1.0).contains(&s.initial_soc_fraction) {
                return Err(bad("initial SoC fraction must lie in [0, 1]"));
            }
            if !(s.charge_limit_mw >= 0.0) || !(s.discharge_limit_mw >= 0.0) {
                return Err(bad("power limits must be nonnegative"));
            }
            if !(s.charge_cost_usd_per_mwh >= 0.0) || !(s.discharge_cost_usd_per_mwh >= 0.0) {
                return Err(bad("costs must be nonnegative"));
            }
            if !(s.round_trip_efficiency > 0.0 && s.round_trip_efficiency <= 1.0) {
                return Err(bad("round-trip efficiency must lie in (0, 1]"));
            }
        }
        for r in &self.res_units {
            if self.bus_index(r.bus).is_none() {
                return Err(ModelError::UnknownBus {
                    element: format!("renewable {}", r.name),
                    bus: r.bus,
                });
            }
            if r.forecast_mw.len() != t {
                return Err(ModelError::ForecastLength {
                    name: r.name.clone(),
                    got: r.forecast_mw.len(),
                    expected: t,
                });
            }
            let bad = |what: String| ModelError::BadRes {
                name: r.name.clone(),
                what,
            };
            if !(r.capacity_mw >= 0.0) || !r.capacity_mw.is_finite() {
                return Err(bad("capacity must be nonnegative".into()));
            }
            for (h, &f) in r.forecast_mw.iter().enumerate() {
                if !(0.0..=r.capacity_mw).contains(&f) {
                    return Err(bad(format!(
                        "forecast at hour {h} ({f} MW) outside [0, capacity]"
                    )));
                }
            }
            r.error
                .validate()
                .map_err(|e| bad(format!("error model: {e}")))?;
        }
        // Connectivity over the line graph.
        let n = self.buses.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(b) = stack.pop() {
            for l in &self.lines {
                let (fi, ti) = (
                    self.bus_index(l.from_bus).unwrap(),
                    self.bus_index(l.to_bus).unwrap(),
                );
                for (a, c) in [(fi, ti), (ti, fi)] {
                    if a == b && !seen[c] {
                        seen[c] = true;
                        stack.push(c);
                    }
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(ModelError::Disconnected(self.buses[i].id));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Compiled program
// ---------------------------------------------------------------------------

/// Descriptor of one binary first-stage variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstStageVar {
    GeneratorOn { gen: usize, hour: usize },
    StartUp { gen: usize, hour: usize },
    ChargeMode { storage: usize, hour: usize },
    DischargeMode { storage: usize, hour: usize },
}

/// Descriptor of one continuous recourse variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondStageVar {
    GenPower { gen: usize, hour: usize },
    Charge { storage: usize, hour: usize },
    Discharge { storage: usize, hour: usize },
    StateOfCharge { storage: usize, hour: usize },
    ResInjection { res: usize, hour: usize },
    /// Shifted bus angle; subtract the program's `angle_shift` to read the
    /// physical angle (slack pinned at the shift, i.e. physical zero).
    BusAngle { bus: usize, hour: usize },
}

/// Which half of an equality-as-two-inequalities pair a row is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    /// The `>= rhs` half.
    Lower,
    /// The negated `>= -rhs` half.
    Upper,
}

/// Structural meaning of one compiled row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    PowerBalance { bus: usize, hour: usize, half: Half },
    SlackPin { hour: usize, half: Half },
    FlowUpper { line: usize, hour: usize },
    FlowLower { line: usize, hour: usize },
    GenUpper { gen: usize, hour: usize },
    GenLower { gen: usize, hour: usize },
    RampUp { gen: usize, hour: usize },
    RampDown { gen: usize, hour: usize },
    ChargeLimit { storage: usize, hour: usize },
    DischargeLimit { storage: usize, hour: usize },
    SocDynamics { storage: usize, hour: usize, half: Half },
    SocMin { storage: usize, hour: usize },
    SocMax { storage: usize, hour: usize },
    ResInjectionCap { res: usize, hour: usize },
    ModeExclusivity { storage: usize, hour: usize },
    StartupLink { gen: usize, hour: usize },
}

/// Right-hand side of a row: fixed, or dependent on one renewable's realized
/// output in the scenario at hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsKind {
    Constant(f64),
    /// `rhs = -realized_output(res, hour)` — the injection-cap row.
    ResRealized { res: usize, hour: usize },
}

/// One compiled `>=` row `b_coeffs · z0 + c_coeffs · x >= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledRow {
    pub tag: RowTag,
    pub b_coeffs: Vec<f64>,
    pub c_coeffs: Vec<f64>,
    pub rhs: RhsKind,
}

/// Standard-form two-stage program compiled from a dispatch case.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageProgram {
    pub case: DispatchCase,
    /// First-stage cost vector `a` (startup costs land here).
    pub first_stage_cost: Vec<f64>,
    pub first_stage_vars: Vec<FirstStageVar>,
    /// Recourse cost vector, shared by all scenarios; nonnegative.
    pub second_stage_cost: Vec<f64>,
    pub second_stage_vars: Vec<SecondStageVar>,
    pub rows: Vec<CompiledRow>,
    /// Indices of rows whose recourse coefficients are all zero.
    pub first_stage_only_rows: Vec<usize>,
    /// Constant added to every bus angle so recourse variables stay
    /// nonnegative; cancels in all angle differences.
    pub angle_shift: f64,
    /// Slack bus index (position in `case.buses`).
    pub slack_bus: usize,
}

impl TwoStageProgram {
    pub fn num_first_stage(&self) -> usize {
        self.first_stage_vars.len()
    }

    pub fn num_second_stage(&self) -> usize {
        self.second_stage_vars.len()
    }

    /// Number of uncertain dimensions (one error per renewable unit).
    pub fn num_uncertain(&self) -> usize {
        self.case.res_units.len()
    }

    /// Full right-hand-side vector for one scenario's error draw.
    pub fn scenario_rhs(&self, errors: &[f64]) -> Result<Vec<f64>, ModelError> {
        if errors.len() != self.num_uncertain() {
            return Err(ModelError::ScenarioDimension {
                got: errors.len(),
                expected: self.num_uncertain(),
            });
        }
        let realized: Vec<Vec<f64>> = self
            .case
            .res_units
            .iter()
            .zip(errors)
            .map(|(r, &z)| r.realized_mw(z))
            .collect();
        Ok(self
            .rows
            .iter()
            .map(|row| match row.rhs {
                RhsKind::Constant(c) => c,
                RhsKind::ResRealized { res, hour } => -realized[res][hour],
            })
            .collect())
    }

    /// Check the rows that involve only first-stage variables.
    pub fn first_stage_feasible(&self, z0: &[u8]) -> bool {
        self.first_stage_only_rows.iter().all(|&i| {
            let row = &self.rows[i];
            let lhs: f64 = row
                .b_coeffs
                .iter()
                .zip(z0)
                .map(|(b, &z)| b * f64::from(z))
                .sum();
            let rhs = match row.rhs {
                RhsKind::Constant(c) => c,
                RhsKind::ResRealized { .. } => unreachable!("first-stage row with scenario rhs"),
            };
            lhs >= rhs - 1e-9
        })
    }

    /// First-stage cost `a · z0`.
    pub fn first_stage_cost_of(&self, z0: &[u8]) -> f64 {
        self.first_stage_cost
            .iter()
            .zip(z0)
            .map(|(a, &z)| a * f64::from(z))
            .sum()
    }

    /// Solve one scenario's recourse LP for a fixed commitment.
    pub fn solve_primal_subproblem(
        &self,
        z0: &[u8],
        scenario_rhs: &[f64],
    ) -> Result<LpOutcome, ModelError> {
        let mut lp = LinearProgram::new(Sense::Min, self.second_stage_cost.clone());
        for (row, &r) in self.rows.iter().zip(scenario_rhs) {
            let bz: f64 = row
                .b_coeffs
                .iter()
                .zip(z0)
                .map(|(b, &z)| b * f64::from(z))
                .sum();
            lp.push_row(row.c_coeffs.clone(), RowSense::Ge, r - bz);
        }
        Ok(lp.solve()?)
    }

    /// Ground-truth solve: enumerate every first-stage assignment (pruning on
    /// the first-stage-only rows) and price each scenario by an LP.
    ///
    /// Assignments are enumerated with bit 0 as the most significant digit,
    /// so ties resolve toward the lexicographically smallest bit string.
    /// Scenarios with zero weight are skipped entirely.
    pub fn extensive_form(
        &self,
        scenarios: &ScenarioSet,
        size_cap: Option<usize>,
    ) -> Result<ExtensiveOutcome, ModelError> {
        let m = self.num_first_stage();
        if m > EXTENSIVE_ENUM_BITS {
            return Err(ModelError::TooManyFirstStageBits {
                got: m,
                cap: EXTENSIVE_ENUM_BITS,
            });
        }
        let cap = size_cap.unwrap_or(EXTENSIVE_SIZE_CAP);
        let size = scenarios.scenarios.len() * self.num_second_stage();
        if size > cap {
            return Err(ModelError::ExtensiveTooLarge { got: size, cap });
        }
        let rhs_s: Vec<Option<Vec<f64>>> = scenarios
            .scenarios
            .iter()
            .map(|s| {
                if s.weight > 0.0 {
                    self.scenario_rhs(&s.errors).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_, _>>()?;
        let mut best: Option<ExtensiveSolution> = None;
        for v in 0..(1usize << m) {
            let z0: Vec<u8> = (0..m).map(|j| ((v >> (m - 1 - j)) & 1) as u8).collect();
            if !self.first_stage_feasible(&z0) {
                continue;
            }
            let mut objective = self.first_stage_cost_of(&z0);
            // Recourse costs are nonnegative, so once the running objective
            // reaches the incumbent this assignment cannot strictly improve.
            let hopeless = |obj: f64, best: &Option<ExtensiveSolution>| {
                best.as_ref().is_some_and(|cur| obj >= cur.objective)
            };
            if hopeless(objective, &best) {
                continue;
            }
            let mut xs: Vec<Option<Vec<f64>>> = Vec::with_capacity(rhs_s.len());
            let mut abandoned = false;
            for (srhs, sc) in rhs_s.iter().zip(&scenarios.scenarios) {
                match srhs {
                    None => xs.push(None),
                    Some(r) => match self.solve_primal_subproblem(&z0, r)? {
                        LpOutcome::Optimal { x, objective: o, .. } => {
                            objective += sc.weight * o;
                            xs.push(Some(x));
                        }
                        _ => {
                            abandoned = true;
                            break;
                        }
                    },
                }
                if hopeless(objective, &best) {
                    abandoned = true;
                    break;
                }
            }
            if abandoned {
                continue;
            }
            let better = match &best {
                None => true,
                Some(cur) => objective < cur.objective - 1e-12,
            };
            if better {
                best = Some(ExtensiveSolution {
                    objective,
                    z0,
                    scenario_solutions: xs,
                });
            }
        }
        Ok(match best {
            Some(sol) => ExtensiveOutcome::Optimal(sol),
            None => ExtensiveOutcome::Infeasible,
        })
    }

    /// Turn a solution into a physical dispatch report.
    ///
    /// `weighted_x` pairs each scenario's weight with its recourse vector;
    /// storage output is reported as discharge minus charge (charging shows
    /// as negative power).
    pub fn decode_schedule(
        &self,
        z0: &[u8],
        weighted_x: &[(f64, Vec<f64>)],
    ) -> Result<DispatchReport, ModelError> {
        let m = self.num_first_stage();
        let n = self.num_second_stage();
        if z0.len() != m {
            return Err(ModelError::SolutionDimension {
                got: z0.len(),
                expected: m,
            });
        }
        let t_len = self.case.horizon_hours;
        let first_stage_cost = self.first_stage_cost_of(z0);
        let mut scenario_reports = Vec::with_capacity(weighted_x.len());
        let mut expected_recourse = 0.0;
        for (weight, x) in weighted_x {
            if x.len() != n {
                return Err(ModelError::SolutionDimension {
                    got: x.len(),
                    expected: n,
                });
            }
            let recourse_cost: f64 = self
                .second_stage_cost
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum();
            expected_recourse += weight * recourse_cost;
            let mut generator_mw = vec![vec![0.0; t_len]; self.case.generators.len()];
            let mut storage_mw = vec![vec![0.0; t_len]; self.case.storages.len()];
            let mut soc_mwh = vec![vec![0.0; t_len]; self.case.storages.len()];
            let mut res_injection_mw = vec![vec![0.0; t_len]; self.case.res_units.len()];
            let mut bus_angle = vec![vec![0.0; t_len]; self.case.buses.len()];
            for (j, var) in self.second_stage_vars.iter().enumerate() {
                match *var {
                    SecondStageVar::GenPower { gen, hour } => generator_mw[gen][hour] += x[j],
                    SecondStageVar::Charge { storage, hour } => storage_mw[storage][hour] -= x[j],
                    SecondStageVar::Discharge { storage, hour } => {
                        storage_mw[storage][hour] += x[j]
                    }
                    SecondStageVar::StateOfCharge { storage, hour } => {
                        soc_mwh[storage][hour] = x[j]
                    }
                    SecondStageVar::ResInjection { res, hour } => {
                        res_injection_mw[res][hour] = x[j]
                    }
                    SecondStageVar::BusAngle { bus, hour } => {
                        bus_angle[bus][hour] = x[j] - self.angle_shift
                    }
                }
            }
            let mut line_flow_mw = vec![vec![0.0; t_len]; self.case.lines.len()];
            for (li, line) in self.case.lines.iter().enumerate() {
                let fi = self.case.bus_index(line.from_bus).unwrap();
                let ti = self.case.bus_index(line.to_bus).unwrap();
                for h in 0..t_len {
                    line_flow_mw[li][h] =
                        (bus_angle[fi][h] - bus_angle[ti][h]) / line.reactance_pu;
                }
            }
            scenario_reports.push(ScenarioSchedule {
                weight: *weight,
                recourse_cost,
                generator_mw,
                storage_mw,
                soc_mwh,
                res_injection_mw,
                line_flow_mw,
                bus_angle,
            });
        }
        Ok(DispatchReport {
            first_stage_cost,
            expected_recourse_cost: expected_recourse,
            total_cost: first_stage_cost + expected_recourse,
            commitment: self.commitment_table(z0),
            scenarios: scenario_reports,
        })
    }

    /// On/off and mode bits as per-device hour series, for reporting.
    fn commitment_table(&self, z0: &[u8]) -> CommitmentTable {
        let t_len = self.case.horizon_hours;
        let mut generator_on = vec![vec![false; t_len]; self.case.generators.len()];
        let mut startup = vec![vec![false; t_len]; self.case.generators.len()];
        let mut charge_mode = vec![vec![false; t_len]; self.case.storages.len()];
        let mut discharge_mode = vec![vec![false; t_len]; self.case.storages.len()];
        for (j, var) in self.first_stage_vars.iter().enumerate() {
            let set = z0.get(j).copied().unwrap_or(0) == 1;
            match *var {
                FirstStageVar::GeneratorOn { gen, hour } => generator_on[gen][hour] = set,
                FirstStageVar::StartUp { gen, hour } => startup[gen][hour] = set,
                FirstStageVar::ChargeMode { storage, hour } => charge_mode[storage][hour] = set,
                FirstStageVar::DischargeMode { storage, hour } => {
                    discharge_mode[storage][hour] = set
                }
            }
        }
        CommitmentTable {
            generator_on,
            startup,
            charge_mode,
            discharge_mode,
        }
    }
}

/// Extensive-form result.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtensiveOutcome {
    Optimal(ExtensiveSolution),
    /// No first-stage assignment keeps every positive-weight scenario
    /// feasible.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensiveSolution {
    pub objective: f64,
    pub z0: Vec<u8>,
    /// One recourse vector per scenario; `None` for skipped zero-weight
    /// scenarios.
    pub scenario_solutions: Vec<Option<Vec<f64>>>,
}

/// First-stage bits arranged per device and hour.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitmentTable {
    pub generator_on: Vec<Vec<bool>>,
    pub startup: Vec<Vec<bool>>,
    pub charge_mode: Vec<Vec<bool>>,
    pub discharge_mode: Vec<Vec<bool>>,
}

/// Physical schedule decoded from a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchReport {
    pub first_stage_cost: f64,
    pub expected_recourse_cost: f64,
    pub total_cost: f64,
    pub commitment: CommitmentTable,
    pub scenarios: Vec<ScenarioSchedule>,
}

/// One scenario's decoded quantities, `[device][hour]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSchedule {
    pub weight: f64,
    pub recourse_cost: f64,
    pub generator_mw: Vec<Vec<f64>>,
    /// Discharge minus charge: charging is negative.
    pub storage_mw: Vec<Vec<f64>>,
    pub soc_mwh: Vec<Vec<f64>>,
    pub res_injection_mw: Vec<Vec<f64>>,
    pub line_flow_mw: Vec<Vec<f64>>,
    /// Physical (unshifted) angles; slack bus at zero.
    pub bus_angle: Vec<Vec<f64>>,
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

impl DispatchCase {
    /// Compile the case into the standard-form two-stage program.
    pub fn compile(&self) -> Result<TwoStageProgram, ModelError> {
        self.validate()?;
        let t_len = self.horizon_hours;
        let n_bus = self.buses.len();
        let n_gen = self.generators.len();
        let n_st = self.storages.len();
        let n_res = self.res_units.len();

        // Slack bus: lowest-numbered generator bus; lowest bus id if the case
        // has no generators.
        let slack_id = self
            .generators
            .iter()
            .map(|g| g.bus)
            .min()
            .unwrap_or_else(|| self.buses.iter().map(|b| b.id).min().unwrap());
        let slack_bus = self.bus_index(slack_id).unwrap();

        // First-stage variables: on bits, startup bits (positive startup cost
        // only), charge modes, discharge modes — each device-major, hour-minor.
        let mut first_stage_vars = Vec::new();
        let mut first_stage_cost = Vec::new();
        for g in 0..n_gen {
            for hour in 0..t_len {
                first_stage_vars.push(FirstStageVar::GeneratorOn { gen: g, hour });
                first_stage_cost.push(0.0);
            }
        }
        let startup_gens: Vec<usize> = (0..n_gen)
            .filter(|&g| self.generators[g].startup_cost_usd > 0.0)
            .collect();
        for &g in &startup_gens {
            for hour in 0..t_len {
                first_stage_vars.push(FirstStageVar::StartUp { gen: g, hour });
                first_stage_cost.push(self.generators[g].startup_cost_usd);
            }
        }
        for s in 0..n_st {
            for hour in 0..t_len {
                first_stage_vars.push(FirstStageVar::ChargeMode { storage: s, hour });
                first_stage_cost.push(0.0);
            }
        }
        for s in 0..n_st {
            for hour in 0..t_len {
                first_stage_vars.push(FirstStageVar::DischargeMode { storage: s, hour });
                first_stage_cost.push(0.0);
            }
        }
        let m = first_stage_vars.len();
        let on_idx = |g: usize, h: usize| g * t_len + h;
        let su_idx = |g: usize, h: usize| {
            n_gen * t_len + startup_gens.iter().position(|&x| x == g).unwrap() * t_len + h
        };
        let ch_mode_idx =
            |s: usize, h: usize| (n_gen + startup_gens.len()) * t_len + s * t_len + h;
        let dis_mode_idx = |s: usize, h: usize| {
            (n_gen + startup_gens.len()) * t_len + (n_st + s) * t_len + h
        };

        // Second-stage variables, device-major, hour-minor.
        let mut second_stage_vars = Vec::new();
        let mut second_stage_cost = Vec::new();
        for g in 0..n_gen {
            for hour in 0..t_len {
                second_stage_vars.push(SecondStageVar::GenPower { gen: g, hour });
                second_stage_cost.push(self.generators[g].marginal_cost_usd_per_mwh);
            }
        }
        for s in 0..n_st {
            for hour in 0..t_len {
                second_stage_vars.push(SecondStageVar::Charge { storage: s, hour });
                second_stage_cost.push(self.storages[s].charge_cost_usd_per_mwh);
            }
        }
        for s in 0..n_st {
            for hour in 0..t_len {
                second_stage_vars.push(SecondStageVar::Discharge { storage: s, hour });
                second_stage_cost.push(self.storages[s].discharge_cost_usd_per_mwh);
            }
        }
        for s in 0..n_st {
            for hour in 0..t_len {
                second_stage_vars.push(SecondStageVar::StateOfCharge { storage: s, hour });
                second_stage_cost.push(0.0);
            }
        }
        for r in 0..n_res {
            for hour in 0..t_len {
                second_stage_vars.push(SecondStageVar::ResInjection { res: r, hour });
                second_stage_cost.push(0.0);
            }
        }
        for b in 0..n_bus {
            for hour in 0..t_len {
                second_stage_vars.push(SecondStageVar::BusAngle { bus: b, hour });
                second_stage_cost.push(0.0);
            }
        }
        let n = second_stage_vars.len();
        let p_idx = |g: usize, h: usize| g * t_len + h;
        let ch_idx = |s: usize, h: usize| (n_gen + s) * t_len + h;
        let dis_idx = |s: usize, h: usize| (n_gen + n_st + s) * t_len + h;
        let soc_idx = |s: usize, h: usize| (n_gen + 2 * n_st + s) * t_len + h;
        let inj_idx = |r: usize, h: usize| (n_gen + 3 * n_st + r) * t_len + h;
        let th_idx = |b: usize, h: usize| (n_gen + 3 * n_st + n_res + b) * t_len + h;

        // Any flow-feasible angle is bounded by the sum of limit·reactance
        // along a path, so this shift keeps shifted angles nonnegative.
        let angle_shift: f64 = self
            .lines
            .iter()
            .map(|l| l.flow_limit_mw * l.reactance_pu)
            .sum();

        let line_idx: Vec<(usize, usize)> = self
            .lines
            .iter()
            .map(|l| {
                (
                    self.bus_index(l.from_bus).unwrap(),
                    self.bus_index(l.to_bus).unwrap(),
                )
            })
            .collect();

        let mut rows: Vec<CompiledRow> = Vec::new();
        let mut push = |tag: RowTag, b: Vec<f64>, c: Vec<f64>, rhs: RhsKind| {
            rows.push(CompiledRow {
                tag,
                b_coeffs: b,
                c_coeffs: c,
                rhs,
            });
        };
        let negate = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();

        for hour in 0..t_len {
            // Nodal balance, one equality pair per bus.
            for (bi, bus) in self.buses.iter().enumerate() {
                let mut c = vec![0.0; n];
                for g in 0..n_gen {
                    if self.bus_index(self.generators[g].bus).unwrap() == bi {
                        c[p_idx(g, hour)] += 1.0;
                    }
                }
                for r in 0..n_res {
                    if self.bus_index(self.res_units[r].bus).unwrap() == bi {
                        c[inj_idx(r, hour)] += 1.0;
                    }
                }
                for s in 0..n_st {
                    if self.bus_index(self.storages[s].bus).unwrap() == bi {
                        c[dis_idx(s, hour)] += 1.0;
                        c[ch_idx(s, hour)] -= 1.0;
                    }
                }
                for (li, line) in self.lines.iter().enumerate() {
                    let (fi, ti) = line_idx[li];
                    let w = 1.0 / line.reactance_pu;
                    if fi == bi {
                        // Flow leaves this bus: subtract (th_f - th_t)/x.
                        c[th_idx(fi, hour)] -= w;
                        c[th_idx(ti, hour)] += w;
                    }
                    if ti == bi {
                        c[th_idx(fi, hour)] += w;
                        c[th_idx(ti, hour)] -= w;
                    }
                }
                let rhs = bus.load_mw[hour];
                push(
                    RowTag::PowerBalance {
                        bus: bi,
                        hour,
                        half: Half::Lower,
                    },
                    vec![0.0; m],
                    c.clone(),
                    RhsKind::Constant(rhs),
                );
                push(
                    RowTag::PowerBalance {
                        bus: bi,
                        hour,
                        half: Half::Upper,
                    },
                    vec![0.0; m],
                    negate(&c),
                    RhsKind::Constant(-rhs),
                );
            }
            // Slack angle pinned to the shift (physical zero).
            {
                let mut c = vec![0.0; n];
                c[th_idx(slack_bus, hour)] = 1.0;
                push(
                    RowTag::SlackPin {
                        hour,
                        half: Half::Lower,
                    },
                    vec![0.0; m],
                    c.clone(),
                    RhsKind::Constant(angle_shift),
                );
                push(
                    RowTag::SlackPin {
                        hour,
                        half: Half::Upper,
                    },
                    vec![0.0; m],
                    negate(&c),
                    RhsKind::Constant(-angle_shift),
                );
            }
            // Line flow limits.
            for (li, line) in self.lines.iter().enumerate() {
                let (fi, ti) = line_idx[li];
                let w = 1.0 / line.reactance_pu;
                let mut c_up = vec![0.0; n]; // -flow >= -limit
                c_up[th_idx(fi, hour)] = -w;
                c_up[th_idx(ti, hour)] = w;
                push(
                    RowTag::FlowUpper { line: li, hour },
                    vec![0.0; m],
                    c_up,
                    RhsKind::Constant(-line.flow_limit_mw),
                );
                let mut c_lo = vec![0.0; n]; // flow >= -limit
                c_lo[th_idx(fi, hour)] = w;
                c_lo[th_idx(ti, hour)] = -w;
                push(
                    RowTag::FlowLower { line: li, hour },
                    vec![0.0; m],
                    c_lo,
                    RhsKind::Constant(-line.flow_limit_mw),
                );
            }
            // Generator output bounds linked to the on bit.
            for (g, gen) in self.generators.iter().enumerate() {
                let mut b_up = vec![0.0; m];
                let mut c_up = vec![0.0; n];
                b_up[on_idx(g, hour)] = gen.p_max_mw;
                c_up[p_idx(g, hour)] = -1.0;
                push(
                    RowTag::GenUpper { gen: g, hour },
                    b_up,
                    c_up,
                    RhsKind::Constant(0.0),
                );
                let mut b_lo = vec![0.0; m];
                let mut c_lo = vec![0.0; n];
                b_lo[on_idx(g, hour)] = -gen.p_min_mw;
                c_lo[p_idx(g, hour)] = 1.0;
                push(
                    RowTag::GenLower { gen: g, hour },
                    b_lo,
                    c_lo,
                    RhsKind::Constant(0.0),
                );
            }
            // Ramp limits between consecutive in-horizon hours.
            if hour >= 1 {
                for (g, gen) in self.generators.iter().enumerate() {
                    let mut c_u = vec![0.0; n];
                    c_u[p_idx(g, hour)] = -1.0;
                    c_u[p_idx(g, hour - 1)] = 1.0;
                    push(
                        RowTag::RampUp { gen: g, hour },
                        vec![0.0; m],
                        c_u,
                        RhsKind::Constant(-gen.ramp_mw_per_hour),
                    );
                    let mut c_d = vec![0.0; n];
                    c_d[p_idx(g, hour)] = 1.0;
                    c_d[p_idx(g, hour - 1)] = -1.0;
                    push(
                        RowTag::RampDown { gen: g, hour },
                        vec![0.0; m],
                        c_d,
                        RhsKind::Constant(-gen.ramp_mw_per_hour),
                    );
                }
            }
            // Storage rows.
            for (s, st) in self.storages.iter().enumerate() {
                let eff = st.round_trip_efficiency.sqrt();
                let mut b_ch = vec![0.0; m];
                let mut c_ch = vec![0.0; n];
                b_ch[ch_mode_idx(s, hour)] = st.charge_limit_mw;
                c_ch[ch_idx(s, hour)] = -1.0;
                push(
                    RowTag::ChargeLimit { storage: s, hour },
                    b_ch,
                    c_ch,
                    RhsKind::Constant(0.0),
                );
                let mut b_dc = vec![0.0; m];
                let mut c_dc = vec![0.0; n];
                b_dc[dis_mode_idx(s, hour)] = st.discharge_limit_mw;
                c_dc[dis_idx(s, hour)] = -1.0;
                push(
                    RowTag::DischargeLimit { storage: s, hour },
                    b_dc,
                    c_dc,
                    RhsKind::Constant(0.0),
                );
                // SoC dynamics equality pair:
                // soc_t - soc_{t-1} - eff·ch_t + dis_t/eff = 0,
                // with soc_{-1} replaced by the initial stored energy.
                let mut c_dyn = vec![0.0; n];
                c_dyn[soc_idx(s, hour)] = 1.0;
                c_dyn[ch_idx(s, hour)] = -eff;
                c_dyn[dis_idx(s, hour)] = 1.0 / eff;
                let rhs_dyn = if hour == 0 {
                    st.initial_soc_fraction * st.energy_capacity_mwh
                } else {
                    c_dyn[soc_idx(s, hour - 1)] = -1.0;
                    0.0
                };
                push(
                    RowTag::SocDynamics {
                        storage: s,
                        hour,
                        half: Half::Lower,
                    },
                    vec![0.0; m],
                    c_dyn.clone(),
                    RhsKind::Constant(rhs_dyn),
                );
                push(
                    RowTag::SocDynamics {
                        storage: s,
                        hour,
                        half: Half::Upper,
                    },
                    vec![0.0; m],
                    negate(&c_dyn),
                    RhsKind::Constant(-rhs_dyn),
                );
                let mut c_min = vec![0.0; n];
                c_min[soc_idx(s, hour)] = 1.0;
                push(
                    RowTag::SocMin { storage: s, hour },
                    vec![0.0; m],
                    c_min,
                    RhsKind::Constant(st.soc_min_fraction * st.energy_capacity_mwh),
                );
                let mut c_max = vec![0.0; n];
                c_max[soc_idx(s, hour)] = -1.0;
                push(
                    RowTag::SocMax { storage: s, hour },
                    vec![0.0; m],
                    c_max,
                    RhsKind::Constant(-st.soc_max_fraction * st.energy_capacity_mwh),
                );
            }
            // Renewable injection capped by realized output.
            for r in 0..n_res {
                let mut c = vec![0.0; n];
                c[inj_idx(r, hour)] = -1.0;
                push(
                    RowTag::ResInjectionCap { res: r, hour },
                    vec![0.0; m],
                    c,
                    RhsKind::ResRealized { res: r, hour },
                );
            }
        }
        // First-stage-only rows: mode exclusivity, startup linking.
        for s in 0..n_st {
            for hour in 0..t_len {
                let mut b = vec![0.0; m];
                b[ch_mode_idx(s, hour)] = -1.0;
                b[dis_mode_idx(s, hour)] = -1.0;
                push(
                    RowTag::ModeExclusivity { storage: s, hour },
                    b,
                    vec![0.0; n],
                    RhsKind::Constant(-1.0),
                );
            }
        }
        for &g in &startup_gens {
            for hour in 0..t_len {
                if hour == 0 && self.generators[g].initially_on {
                    // su >= on - 1 holds for any bits; no row needed.
                    continue;
                }
                let mut b = vec![0.0; m];
                b[su_idx(g, hour)] = 1.0;
                b[on_idx(g, hour)] = -1.0;
                if hour >= 1 {
                    b[on_idx(g, hour - 1)] = 1.0;
                }
                push(
                    RowTag::StartupLink { gen: g, hour },
                    b,
                    vec![0.0; n],
                    RhsKind::Constant(0.0),
                );
            }
        }

        let first_stage_only_rows: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.c_coeffs.iter().all(|&c| c == 0.0))
            .map(|(i, _)| i)
            .collect();

        Ok(TwoStageProgram {
            case: self.clone(),
            first_stage_cost,
            first_stage_vars,
            second_stage_cost,
            second_stage_vars,
            rows,
            first_stage_only_rows,
            angle_shift,
            slack_bus,
        })
    }
}
