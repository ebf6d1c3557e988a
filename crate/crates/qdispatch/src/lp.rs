//! Dense linear programming with primal solutions, row duals, Farkas
//! infeasibility certificates, and unbounded-ray certificates.
//!
//! The solver is a two-phase primal simplex on a dense tableau. Entering
//! columns follow Dantzig's rule (most negative reduced cost) until a pivot
//! budget is exhausted, then switch to Bland's rule, which guarantees
//! termination. Every outcome is certified: optimal points carry duals that
//! close the duality gap, infeasible programs carry a Farkas vector, and
//! unbounded programs carry a feasible point plus an improving recession ray.
//!
//! Problems are stated over variables with lower bounds (default `0`) and
//! optional upper bounds, with arbitrary `>=` / `<=` / `==` rows. Internally
//! lower bounds are shifted away and upper bounds become extra rows, so the
//! engine itself only ever sees `min c'x, A'x = b', x >= 0`.
//!
//! This module also hosts the dual-based scenario subproblem solve used by the
//! decomposition loop: [`solve_subproblem`] turns one scenario's recourse LP
//! into either an optimality cut (dual optimum) or a feasibility cut (dual
//! ray, normalized to unit infinity norm).

use thiserror::Error;

/// Feasibility tolerance on constraint residuals.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Optimality / duality-gap tolerance (scaled by `1 + |objective|`).
pub const OPTIMALITY_TOL: f64 = 1e-7;
/// Magnitudes at or below this are treated as zero when choosing pivots.
pub const PIVOT_TOL: f64 = 1e-10;
/// Hard cap on simplex pivots before the solve reports a numerical failure.
pub const PIVOT_LIMIT: usize = 50_000;

/// Reduced costs closer to zero than this are not worth entering on.
const ENTER_TOL: f64 = 1e-9;

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Row comparison direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    /// `a·x >= rhs`
    Ge,
    /// `a·x <= rhs`
    Le,
    /// `a·x == rhs`
    Eq,
}

/// Errors raised when a program is malformed or the solver breaks down.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    RowLengthMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("mismatched lengths: {what}")]
    LengthMismatch { what: String },
    #[error("non-finite coefficient in {what}")]
    NonFinite { what: String },
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    BoundOrder { var: usize, lower: f64, upper: f64 },
    #[error("pivot limit of {0} exceeded; solve abandoned to avoid returning an unverified optimum")]
    PivotLimit(usize),
    #[error("phase 1 reported unbounded, which is impossible; numerical breakdown")]
    Phase1Breakdown,
    #[error("dual subproblem is infeasible: recourse cost vector leaves the dual cone empty")]
    DualInfeasible,
    #[error("subproblem dimensions inconsistent: {what}")]
    SubproblemShape { what: String },
}

/// A linear program over `x` with per-variable bounds and general rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    /// Objective coefficients, one per variable.
    pub objective: Vec<f64>,
    /// Dense constraint rows, each with one coefficient per variable.
    pub rows: Vec<Vec<f64>>,
    pub row_senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    /// Finite lower bound per variable (default `0`).
    pub var_lower: Vec<f64>,
    /// Optional upper bound per variable (default none).
    pub var_upper: Vec<Option<f64>>,
}

/// Outcome of a solve, always carrying its certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        /// Optimal point in the original variable space.
        x: Vec<f64>,
        /// One dual per input row. For `Min`: `>= 0` on `Ge` rows, `<= 0` on
        /// `Le` rows, free on `Eq`; signs negate for `Max`.
        duals: Vec<f64>,
        objective: f64,
    },
    Infeasible {
        /// Farkas certificate `y`, one entry per input row: `y` obeys the row
        /// sign conditions, `Aᵀy <= 0` componentwise, and `rhs·y > 0`, so no
        /// `x >=` lower-bounds can satisfy all rows.
        farkas: Vec<f64>,
    },
    Unbounded {
        /// A feasible point.
        point: Vec<f64>,
        /// Recession direction: `point + t·ray` stays feasible for every
        /// `t >= 0` and improves the objective without bound.
        ray: Vec<f64>,
    },
}

impl LinearProgram {
    /// Empty program in `num_vars` variables with bounds `x >= 0`.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            rows: Vec::new(),
            row_senses: Vec::new(),
            rhs: Vec::new(),
            var_lower: vec![0.0; n],
            var_upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Append one constraint row.
    pub fn push_row(&mut self, coefficients: Vec<f64>, sense: RowSense, rhs: f64) {
        self.rows.push(coefficients);
        self.row_senses.push(sense);
        self.rhs.push(rhs);
    }

    /// Check dimensional consistency, finiteness, and bound ordering.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.var_lower.len() != n || self.var_upper.len() != n {
            return Err(LpError::LengthMismatch {
                what: format!(
                    "bounds ({}, {}) vs {} variables",
                    self.var_lower.len(),
                    self.var_upper.len(),
                    n
                ),
            });
        }
        if self.rows.len() != self.rhs.len() || self.rows.len() != self.row_senses.len() {
            return Err(LpError::LengthMismatch {
                what: format!(
                    "rows {} / senses {} / rhs {}",
                    self.rows.len(),
                    self.row_senses.len(),
                    self.rhs.len()
                ),
            });
        }
        if !self.objective.iter().all(|c| c.is_finite()) {
            return Err(LpError::NonFinite {
                what: "objective".into(),
            });
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::RowLengthMismatch {
                    row: i,
                    expected: n,
                    got: row.len(),
                });
            }
            if !row.iter().all(|c| c.is_finite()) || !self.rhs[i].is_finite() {
                return Err(LpError::NonFinite {
                    what: format!("row {i}"),
                });
            }
        }
        for (j, (&lo, up)) in self.var_lower.iter().zip(&self.var_upper).enumerate() {
            if !lo.is_finite() {
                return Err(LpError::NonFinite {
                    what: format!("lower bound of variable {j}"),
                });
            }
            if let Some(u) = up {
                if !u.is_finite() {
                    return Err(LpError::NonFinite {
                        what: format!("upper bound of variable {j}"),
                    });
                }
                if *u < lo {
                    return Err(LpError::BoundOrder {
                        var: j,
                        lower: lo,
                        upper: *u,
                    });
                }
            }
        }
        Ok(())
    }

    /// Render the raw program as an aligned plain-text tableau: one line per
    /// row (`coefficients  sense  rhs`), preceded by the objective line.
    pub fn tableau_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Min => "min",
            Sense::Max => "max",
        };
        write!(out, "{sense} ").unwrap();
        for c in &self.objective {
            write!(out, "{c:>10.4} ").unwrap();
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str("    ");
            for c in row {
                write!(out, "{c:>10.4} ").unwrap();
            }
            let s = match self.row_senses[i] {
                RowSense::Ge => ">=",
                RowSense::Le => "<=",
                RowSense::Eq => "==",
            };
            writeln!(out, "{s} {:>10.4}", self.rhs[i]).unwrap();
        }
        out
    }

    /// Solve the program, returning a certified outcome.
    ///
    /// Deterministic for a fixed input: pivot choices depend only on the data.
    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        self.validate()?;
        SimplexEngine::build(self)?.run()
    }
}

/// Internal canonical-form engine: `min c·x̂, Â x̂ = b̂ (b̂ >= 0), x̂ >= 0` with
/// column layout `[structural | slack | artificial]`.
struct SimplexEngine {
    /// Structural variable count (original variables, lower-shifted).
    n_struct: usize,
    /// Number of rows fed to the engine (original rows + upper-bound rows).
    n_rows_in: usize,
    /// Number of original (caller-visible) rows.
    n_rows_orig: usize,
    /// Total tableau columns (structural + slack + artificial).
    n_cols: usize,
    /// First artificial column.
    art0: usize,
    /// Active tableau rows (redundant rows get dropped after phase 1).
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Basic column per active row.
    basis: Vec<usize>,
    /// Input-row index behind each active tableau row.
    row_origin: Vec<usize>,
    /// Whether each input row was negated to make its rhs nonnegative.
    flipped: Vec<bool>,
    /// Phase-1 reduced costs and objective value.
    red1: Vec<f64>,
    obj1: f64,
    /// Phase-2 reduced costs and objective value (kept hot during phase 1).
    red2: Vec<f64>,
    obj2: f64,
    /// Internal objective sign and shift bookkeeping.
    negate_objective: bool,
    objective_shift: f64,
    var_lower: Vec<f64>,
    pivots: usize,
    bland_after: usize,
}

impl SimplexEngine {
    fn build(lp: &LinearProgram) -> Result<Self, LpError> {
        let n_struct = lp.num_vars();
        let negate_objective = lp.sense == Sense::Max;

        // Shifted objective over x' = x - lower: c·x = c·x' + c·lower.
        let mut cost: Vec<f64> = lp.objective.clone();
        if negate_objective {
            for c in &mut cost {
                *c = -*c;
            }
        }
        let objective_shift: f64 = lp
            .objective
            .iter()
            .zip(&lp.var_lower)
            .map(|(c, l)| c * l)
            .sum();

        // Upper bounds become extra `<=` rows in shifted coordinates.
        let mut rows: Vec<(Vec<f64>, RowSense, f64)> = Vec::new();
        for i in 0..lp.num_rows() {
            let shift: f64 = lp.rows[i]
                .iter()
                .zip(&lp.var_lower)
                .map(|(a, l)| a * l)
                .sum();
            rows.push((lp.rows[i].clone(), lp.row_senses[i], lp.rhs[i] - shift));
        }
        let n_rows_orig = rows.len();
        for (j, up) in lp.var_upper.iter().enumerate() {
            if let Some(u) = up {
                let mut r = vec![0.0; n_struct];
                r[j] = 1.0;
                rows.push((r, RowSense::Le, u - lp.var_lower[j]));
            }
        }
        let n_rows_in = rows.len();

        let n_slack = rows
            .iter()
            .filter(|(_, s, _)| *s != RowSense::Eq)
            .count();
        let n_cols = n_struct + n_slack + n_rows_in;
        let art0 = n_struct + n_slack;

        let mut a = Vec::with_capacity(n_rows_in);
        let mut rhs = Vec::with_capacity(n_rows_in);
        let mut basis = Vec::with_capacity(n_rows_in);
        let mut row_origin = Vec::with_capacity(n_rows_in);
        let mut flipped = vec![false; n_rows_in];
        let mut slack_idx = n_struct;
        for (i, (coeffs, sense, b)) in rows.iter().enumerate() {
            let mut row = vec![0.0; n_cols];
            row[..n_struct].copy_from_slice(coeffs);
            match sense {
                RowSense::Ge => {
                    row[slack_idx] = -1.0;
                    slack_idx += 1;
                }
                RowSense::Le => {
                    row[slack_idx] = 1.0;
                    slack_idx += 1;
                }
                RowSense::Eq => {}
            }
            let mut b = *b;
            if b < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
                b = -b;
                flipped[i] = true;
            }
            row[art0 + i] = 1.0;
            a.push(row);
            rhs.push(b);
            basis.push(art0 + i);
            row_origin.push(i);
        }

        // Phase-1 reduced costs: cost 1 on artificials (all basic), 0 elsewhere.
        let mut red1 = vec![0.0; n_cols];
        let mut obj1 = 0.0;
        for j in 0..n_cols {
            let col_sum: f64 = a.iter().map(|row| row[j]).sum();
            red1[j] = if j >= art0 { 1.0 } else { 0.0 } - col_sum;
        }
        for &b in &rhs {
            obj1 += b;
        }
        // Artificial columns start basic with zero reduced cost.
        for j in art0..n_cols {
            red1[j] = 0.0;
        }

        // Phase-2 reduced costs: artificials cost 0 and the basis is all
        // artificial, so the initial reduced costs are the raw costs.
        let mut red2 = vec![0.0; n_cols];
        red2[..n_struct].copy_from_slice(&cost);

        let bland_after = 4 * (n_rows_in + n_cols) + 64;
        Ok(SimplexEngine {
            n_struct,
            n_rows_in,
            n_rows_orig,
            n_cols,
            art0,
            a,
            rhs,
            basis,
            row_origin,
            flipped,
            red1,
            obj1,
            red2,
            obj2: 0.0,
            negate_objective,
            objective_shift,
            var_lower: lp.var_lower.clone(),
            pivots: 0,
            bland_after,
        })
    }

    /// Gauss–Jordan pivot at active row `r`, column `c`, keeping both cost
    /// rows in sync.
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        debug_assert!(p.abs() > PIVOT_TOL);
        let inv = 1.0 / p;
        for v in self.a[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        // Snap the pivot entry exactly.
        self.a[r][c] = 1.0;
        let row_r = self.a[r].clone();
        let rhs_r = self.rhs[r];
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][c];
            if f != 0.0 {
                for (v, rv) in self.a[i].iter_mut().zip(row_r.iter()) {
                    *v -= f * rv;
                }
                self.a[i][c] = 0.0;
                self.rhs[i] -= f * rhs_r;
            }
        }
        let f1 = self.red1[c];
        if f1 != 0.0 {
            self.obj1 += f1 * rhs_r;
            for (v, rv) in self.red1.iter_mut().zip(row_r.iter()) {
                *v -= f1 * rv;
            }
            self.red1[c] = 0.0;
        }
        let f2 = self.red2[c];
        if f2 != 0.0 {
            self.obj2 += f2 * rhs_r;
            for (v, rv) in self.red2.iter_mut().zip(row_r.iter()) {
                *v -= f2 * rv;
            }
            self.red2[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// One simplex phase over the given reduced-cost selector.
    /// `phase1` bars artificial columns from entering and stops at obj1 ~ 0.
    fn run_phase(&mut self, phase1: bool) -> Result<PhaseEnd, LpError> {
        loop {
            if self.pivots > PIVOT_LIMIT {
                return Err(LpError::PivotLimit(PIVOT_LIMIT));
            }
            let bland = self.pivots >= self.bland_after;
            let limit = if phase1 { self.n_cols } else { self.art0 };
            let red = if phase1 { &self.red1 } else { &self.red2 };
            // Entering column.
            let mut enter: Option<usize> = None;
            let mut best = -ENTER_TOL;
            for j in 0..limit {
                if phase1 && j >= self.art0 {
                    continue;
                }
                let rc = red[j];
                if rc < -ENTER_TOL {
                    if bland {
                        enter = Some(j);
                        break;
                    }
                    if rc < best {
                        best = rc;
                        enter = Some(j);
                    }
                }
            }
            let Some(c) = enter else {
                return Ok(PhaseEnd::Converged);
            };
            // Ratio test.
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.a.len() {
                let d = self.a[i][c];
                if d > PIVOT_TOL {
                    let ratio = self.rhs[i] / d;
                    let better = if bland {
                        ratio < best_ratio - 1e-12
                            || (ratio < best_ratio + 1e-12
                                && leave.map_or(true, |l| self.basis[i] < self.basis[l]))
                    } else {
                        ratio < best_ratio - 1e-12
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(PhaseEnd::Unbounded { entering: c });
            };
            self.pivot(r, c);
        }
    }

    /// After a feasible phase 1: pivot artificials out of the basis, dropping
    /// rows that turn out redundant.
    fn purge_artificials(&mut self) {
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] >= self.art0 {
                let mut pivot_col = None;
                for j in 0..self.art0 {
                    if self.a[i][j].abs() > 1e-9 {
                        pivot_col = Some(j);
                        break;
                    }
                }
                if let Some(j) = pivot_col {
                    self.pivot(i, j);
                } else {
                    // Redundant row: every structural and slack coefficient is
                    // zero. Drop it; its dual is zero.
                    self.a.swap_remove(i);
                    self.rhs.swap_remove(i);
                    self.basis.swap_remove(i);
                    self.row_origin.swap_remove(i);
                    continue;
                }
            }
            i += 1;
        }
    }

    /// Un-shift a structural solution and read the objective/duals.
    fn extract_optimal(&self) -> LpOutcome {
        let mut x = self.var_lower.clone();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] += self.rhs[i].max(0.0);
            }
        }
        // The engine minimizes the (possibly negated) shifted objective.
        let objective = if self.negate_objective {
            -self.obj2 + self.objective_shift
        } else {
            self.obj2 + self.objective_shift
        };
        // Duals only for rows still in the tableau; dropped (redundant) rows
        // keep dual zero, which is always admissible for them.
        let mut duals = vec![0.0; self.n_rows_orig];
        for &orig in &self.row_origin {
            if orig >= self.n_rows_orig {
                continue; // internal upper-bound row
            }
            let mut y = -self.red2[self.art0 + orig];
            if self.flipped[orig] {
                y = -y;
            }
            if self.negate_objective {
                y = -y;
            }
            duals[orig] = y;
        }
        LpOutcome::Optimal { x, duals, objective }
    }

    /// Build the recession ray for an unbounded phase 2.
    fn extract_unbounded(&self, entering: usize) -> LpOutcome {
        let mut point = self.var_lower.clone();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                point[b] += self.rhs[i].max(0.0);
            }
        }
        let mut ray = vec![0.0; self.n_struct];
        if entering < self.n_struct {
            ray[entering] = 1.0;
        }
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                ray[b] -= self.a[i][entering];
            }
        }
        LpOutcome::Unbounded { point, ray }
    }

    /// Farkas vector from the phase-1 duals.
    fn extract_infeasible(&self) -> LpOutcome {
        let mut farkas = vec![0.0; self.n_rows_orig];
        // red1 over artificial columns: 1 - y1_i, except that dropped rows
        // never reach this path (phase 1 concluded infeasible first).
        for i in 0..self.n_rows_in.min(self.n_rows_orig) {
            let mut y = 1.0 - self.red1[self.art0 + i];
            if self.flipped[i] {
                y = -y;
            }
            farkas[i] = y;
        }
        LpOutcome::Infeasible { farkas }
    }

    fn run(mut self) -> Result<LpOutcome, LpError> {
        match self.run_phase(true)? {
            PhaseEnd::Unbounded { .. } => return Err(LpError::Phase1Breakdown),
            PhaseEnd::Converged => {}
        }
        let scale = 1.0 + self.rhs.iter().map(|b| b.abs()).fold(0.0, f64::max);
        if self.obj1 > FEASIBILITY_TOL * scale {
            return Ok(self.extract_infeasible());
        }
        self.purge_artificials();
        match self.run_phase(false)? {
            PhaseEnd::Converged => Ok(self.extract_optimal()),
            PhaseEnd::Unbounded { entering } => Ok(self.extract_unbounded(entering)),
        }
    }
}

enum PhaseEnd {
    Converged,
    Unbounded { entering: usize },
}

// ---------------------------------------------------------------------------
// Scenario subproblem: dual solve producing decomposition cuts.
// ---------------------------------------------------------------------------

/// Optimality cut `eta_s >= constant + z_coefficients · z0` produced by an
/// optimal dual point of one scenario's recourse problem.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCut {
    pub scenario: usize,
    /// Dual point, one entry per recourse row.
    pub dual: Vec<f64>,
    pub constant: f64,
    pub z_coefficients: Vec<f64>,
}

/// Feasibility cut `constant + z_coefficients · z0 <= 0` produced by an
/// unbounded dual ray; normalized to unit infinity norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityCut {
    pub scenario: usize,
    /// Dual recession ray, one entry per recourse row.
    pub ray: Vec<f64>,
    pub constant: f64,
    pub z_coefficients: Vec<f64>,
}

/// Either cut kind from one subproblem solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Cut {
    Optimality(OptimalityCut),
    Feasibility(FeasibilityCut),
}

impl OptimalityCut {
    /// Value of the affine form at a binary first-stage point.
    pub fn evaluate(&self, z0: &[u8]) -> f64 {
        affine(self.constant, &self.z_coefficients, z0)
    }
}

impl FeasibilityCut {
    /// Value of the affine form at a binary first-stage point; feasible
    /// points give values `<= 0`.
    pub fn evaluate(&self, z0: &[u8]) -> f64 {
        affine(self.constant, &self.z_coefficients, z0)
    }
}

fn affine(constant: f64, coeffs: &[f64], z0: &[u8]) -> f64 {
    constant
        + coeffs
            .iter()
            .zip(z0)
            .map(|(c, &z)| c * f64::from(z))
            .sum::<f64>()
}

/// Solve one scenario's recourse subproblem through its dual and convert the
/// outcome into a cut on the first-stage binaries.
///
/// The recourse primal is `min sub_cost · x` over `x >= 0` subject to rows
/// `B z0 + C x >= r`, i.e. `C x >= q` with `q = r - B z0`. The dual is
/// `max q·u` over `u >= 0` with `Cᵀu <= sub_cost`:
/// * dual optimal at `u*` → optimality cut with constant `r·u*` and
///   first-stage coefficients `-Bᵀu*`;
/// * dual unbounded along ray `u_r` (scaled to unit infinity norm) →
///   feasibility cut with the same affine construction, required `<= 0`.
///
/// `c_matrix` and `b_matrix` are row-major with one row per recourse row.
pub fn solve_subproblem(
    scenario: usize,
    sub_cost: &[f64],
    c_matrix: &[Vec<f64>],
    b_matrix: &[Vec<f64>],
    r: &[f64],
    z0: &[u8],
) -> Result<Cut, LpError> {
    let n_rows = c_matrix.len();
    if b_matrix.len() != n_rows || r.len() != n_rows {
        return Err(LpError::SubproblemShape {
            what: format!(
                "C has {} rows, B has {}, r has {}",
                n_rows,
                b_matrix.len(),
                r.len()
            ),
        });
    }
    let n_x = sub_cost.len();
    for (i, row) in c_matrix.iter().enumerate() {
        if row.len() != n_x {
            return Err(LpError::SubproblemShape {
                what: format!("C row {i} has {} entries, expected {n_x}", row.len()),
            });
        }
    }
    let m = z0.len();
    for (i, row) in b_matrix.iter().enumerate() {
        if row.len() != m {
            return Err(LpError::SubproblemShape {
                what: format!("B row {i} has {} entries, expected {m}", row.len()),
            });
        }
    }

    // q_i = r_i - B_i · z0
    let q: Vec<f64> = (0..n_rows)
        .map(|i| {
            r[i]
                - b_matrix[i]
                    .iter()
                    .zip(z0)
                    .map(|(b, &z)| b * f64::from(z))
                    .sum::<f64>()
        })
        .collect();

    // Dual LP: variables u (one per recourse row).
    let mut dual_lp = LinearProgram::new(Sense::Max, q);
    for j in 0..n_x {
        let col: Vec<f64> = c_matrix.iter().map(|row| row[j]).collect();
        dual_lp.push_row(col, RowSense::Le, sub_cost[j]);
    }

    match dual_lp.solve()? {
        LpOutcome::Optimal { x: u, .. } => {
            let constant = dot(r, &u);
            let z_coefficients = neg_bt_u(b_matrix, &u, m);
            Ok(Cut::Optimality(OptimalityCut {
                scenario,
                dual: u,
                constant,
                z_coefficients,
            }))
        }
        LpOutcome::Unbounded { ray, .. } => {
            let norm = ray.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            debug_assert!(norm > 0.0);
            let u_ray: Vec<f64> = ray.iter().map(|v| v / norm).collect();
            let constant = dot(r, &u_ray);
            let z_coefficients = neg_bt_u(b_matrix, &u_ray, m);
            Ok(Cut::Feasibility(FeasibilityCut {
                scenario,
                ray: u_ray,
                constant,
                z_coefficients,
            }))
        }
        LpOutcome::Infeasible { .. } => Err(LpError::DualInfeasible),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn neg_bt_u(b_matrix: &[Vec<f64>], u: &[f64], m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| -b_matrix.iter().zip(u).map(|(row, ui)| row[k] * ui).sum::<f64>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn assert_optimal(out: &LpOutcome) -> (Vec<f64>, Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, duals, objective } => {
                (x.clone(), duals.clone(), *objective)
            }
            other => panic!("expected Optimal, got {other:?}"),
        }
    }

    #[test]
    fn single_lower_bound_row() {
        let mut lp = LinearProgram::new(Sense::Min, vec![1.0]);
        lp.push_row(vec![1.0], RowSense::Ge, 1.0);
        let (x, duals, obj) = assert_optimal(&lp.solve().unwrap());
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(obj, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(duals[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn separable_box_maximum() {
        let mut lp = LinearProgram::new(Sense::Max, vec![1.0, 1.0]);
        lp.push_row(vec![1.0, 0.0], RowSense::Le, 2.0);
        lp.push_row(vec![0.0, 1.0], RowSense::Le, 3.0);
        let (x, duals, obj) = assert_optimal(&lp.solve().unwrap());
        assert_abs_diff_eq!(obj, 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(duals[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(duals[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn unconstrained_direction_is_unbounded() {
        let lp = LinearProgram::new(Sense::Max, vec![1.0]);
        match lp.solve().unwrap() {
            LpOutcome::Unbounded { point, ray } => {
                assert_abs_diff_eq!(point[0], 0.0);
                assert_abs_diff_eq!(ray[0], 1.0);
            }
            other => panic!("expected Unbounded, got {other:?}"),
        }
    }

    #[test]
    fn contradictory_rows_yield_farkas_certificate() {
        let mut lp = LinearProgram::new(Sense::Min, vec![0.0]);
        lp.push_row(vec![1.0], RowSense::Ge, 2.0);
        lp.push_row(vec![1.0], RowSense::Le, 1.0);
        match lp.solve().unwrap() {
            LpOutcome::Infeasible { farkas } => {
                assert!(farkas[0] >= -1e-9, "Ge row multiplier must be >= 0");
                assert!(farkas[1] <= 1e-9, "Le row multiplier must be <= 0");
                let at_y: f64 = farkas[0] + farkas[1];
                assert!(at_y <= 1e-9, "certificate must lie in the polar cone");
                let by: f64 = 2.0 * farkas[0] + 1.0 * farkas[1];
                assert!(by > 1e-6, "certificate must separate the rhs");
            }
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn equality_rows_and_free_duals() {
        let mut lp = LinearProgram::new(Sense::Min, vec![1.0, 0.0]);
        lp.push_row(vec![1.0, 1.0], RowSense::Eq, 1.0);
        let (x, duals, obj) = assert_optimal(&lp.solve().unwrap());
        assert_abs_diff_eq!(obj, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0] + x[1], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(duals[0], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn duplicate_rows_are_tolerated() {
        let mut lp = LinearProgram::new(Sense::Min, vec![1.0]);
        lp.push_row(vec![1.0], RowSense::Ge, 1.0);
        lp.push_row(vec![1.0], RowSense::Ge, 1.0);
        let (_, duals, obj) = assert_optimal(&lp.solve().unwrap());
        assert_abs_diff_eq!(obj, 1.0, epsilon = 1e-9);
        // Whichever copy carries the dual, together they price the optimum.
        assert_abs_diff_eq!(duals[0] + duals[1], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn lower_and_upper_variable_bounds() {
        let mut lp = LinearProgram::new(Sense::Max, vec![2.0, 1.0]);
        lp.var_lower = vec![1.0, 0.5];
        lp.var_upper = vec![Some(4.0), Some(2.0)];
        lp.push_row(vec![1.0, 1.0], RowSense::Le, 5.0);
        let (x, _, obj) = assert_optimal(&lp.solve().unwrap());
        assert_abs_diff_eq!(x[0], 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(obj, 9.0, epsilon = 1e-9);
    }

    #[test]
    fn bad_bounds_and_shapes_are_rejected() {
        let mut lp = LinearProgram::new(Sense::Min, vec![1.0]);
        lp.var_upper = vec![Some(-1.0)];
        assert!(matches!(lp.solve(), Err(LpError::BoundOrder { .. })));
        let mut lp2 = LinearProgram::new(Sense::Min, vec![1.0, 2.0]);
        lp2.push_row(vec![1.0], RowSense::Ge, 0.0);
        assert!(matches!(
            lp2.solve(),
            Err(LpError::RowLengthMismatch { .. })
        ));
        let mut lp3 = LinearProgram::new(Sense::Min, vec![f64::NAN]);
        lp3.push_row(vec![1.0], RowSense::Ge, 0.0);
        assert!(matches!(lp3.solve(), Err(LpError::NonFinite { .. })));
    }

    /// Residual-based feasibility check against the original row data.
    fn feasibility_residual(lp: &LinearProgram, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(lp.var_lower[j] - xj);
            if let Some(u) = lp.var_upper[j] {
                worst = worst.max(xj - u);
            }
        }
        for i in 0..lp.num_rows() {
            let lhs: f64 = lp.rows[i].iter().zip(x).map(|(a, b)| a * b).sum();
            let viol = match lp.row_senses[i] {
                RowSense::Ge => lp.rhs[i] - lhs,
                RowSense::Le => lhs - lp.rhs[i],
                RowSense::Eq => (lhs - lp.rhs[i]).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    #[test]
    fn random_feasible_programs_close_the_duality_gap() {
        let mut rng = crate::rng::rng_from_seed(90_210);
        for case in 0..120 {
            let n = rng.gen_range(1..=12);
            let m = rng.gen_range(1..=12);
            let maximize = case % 2 == 0;
            let lp = if maximize {
                // max c·x, A x <= b with strictly positive A: recession cone
                // is {0}, so the program is bounded for any c.
                let mut lp = LinearProgram::new(
                    Sense::Max,
                    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                );
                let xstar: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
                for _ in 0..m {
                    let row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
                    let lhs: f64 = row.iter().zip(&xstar).map(|(a, b)| a * b).sum();
                    let margin = rng.gen_range(0.0..1.0);
                    lp.push_row(row, RowSense::Le, lhs + margin);
                }
                lp
            } else {
                // min c·x with c >= 0 and Ge rows satisfied by a known point:
                // bounded below by 0, feasible by construction.
                let mut lp = LinearProgram::new(
                    Sense::Min,
                    (0..n).map(|_| rng.gen_range(0.0..2.0)).collect(),
                );
                let xstar: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
                for _ in 0..m {
                    let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
                    let lhs: f64 = row.iter().zip(&xstar).map(|(a, b)| a * b).sum();
                    let margin = rng.gen_range(0.0..1.0);
                    lp.push_row(row, RowSense::Ge, lhs - margin);
                }
                lp
            };
            let (x, duals, obj) = assert_optimal(&lp.solve().unwrap());
            assert!(
                feasibility_residual(&lp, &x) <= FEASIBILITY_TOL,
                "case {case}: primal residual too large"
            );
            let dual_obj: f64 = duals.iter().zip(&lp.rhs).map(|(y, b)| y * b).sum();
            assert!(
                (obj - dual_obj).abs() <= OPTIMALITY_TOL * (1.0 + obj.abs()),
                "case {case}: duality gap {} vs {}",
                obj,
                dual_obj
            );
            // Dual sign conditions.
            for (i, &y) in duals.iter().enumerate() {
                let ok = match (lp.sense, lp.row_senses[i]) {
                    (_, RowSense::Eq) => true,
                    (Sense::Min, RowSense::Ge) | (Sense::Max, RowSense::Le) => y >= -1e-7,
                    (Sense::Min, RowSense::Le) | (Sense::Max, RowSense::Ge) => y <= 1e-7,
                };
                assert!(ok, "case {case}: dual sign violated on row {i}: {y}");
            }
        }
    }

    #[test]
    fn constructed_unbounded_duals_return_valid_rays() {
        let mut rng = crate::rng::rng_from_seed(777);
        for case in 0..20 {
            let nu = rng.gen_range(2..=8); // dual variables
            let nx = rng.gen_range(1..=6); // primal columns (dual rows)
            let k = rng.gen_range(0..nu);
            // Columns of the primal C matrix; force row k of C nonpositive so
            // u -> u + t e_k is a recession direction of {Cᵀu <= b, u >= 0}.
            let mut c_cols: Vec<Vec<f64>> = (0..nx)
                .map(|_| (0..nu).map(|_| rng.gen_range(-1.5..1.5)).collect())
                .collect();
            for col in &mut c_cols {
                col[k] = -col[k].abs();
            }
            let mut q: Vec<f64> = (0..nu).map(|_| rng.gen_range(-1.0..1.0)).collect();
            q[k] = rng.gen_range(0.5..2.0);
            let b: Vec<f64> = (0..nx).map(|_| rng.gen_range(0.0..2.0)).collect();
            let mut lp = LinearProgram::new(Sense::Max, q.clone());
            for j in 0..nx {
                lp.push_row(c_cols[j].clone(), RowSense::Le, b[j]);
            }
            match lp.solve().unwrap() {
                LpOutcome::Unbounded { point, ray } => {
                    assert!(feasibility_residual(&lp, &point) <= FEASIBILITY_TOL);
                    let gain: f64 = q.iter().zip(&ray).map(|(a, b)| a * b).sum();
                    assert!(gain > 1e-9, "case {case}: ray does not improve");
                    for t in [1.0, 10.0, 100.0] {
                        let shifted: Vec<f64> =
                            point.iter().zip(&ray).map(|(p, r)| p + t * r).collect();
                        assert!(
                            feasibility_residual(&lp, &shifted) <= 1e-6,
                            "case {case}: point + {t}·ray leaves the feasible set"
                        );
                    }
                }
                other => panic!("case {case}: expected Unbounded, got {other:?}"),
            }
        }
    }

    #[test]
    fn degenerate_stacked_rows_terminate() {
        // Many redundant rows through the same vertex exercise the Bland
        // fallback path without cycling.
        let mut lp = LinearProgram::new(Sense::Min, vec![1.0, 1.0]);
        for k in 0..12 {
            let w = 1.0 + 0.0 * k as f64;
            lp.push_row(vec![w, w], RowSense::Ge, 2.0);
        }
        let (_, _, obj) = assert_optimal(&lp.solve().unwrap());
        assert_abs_diff_eq!(obj, 2.0, epsilon = 1e-8);
    }

    // ------------------------------------------------------------------
    // Subproblem cut construction
    // ------------------------------------------------------------------

    /// One demand row plus one capacity row switched by a single binary:
    ///   x >= 1               (demand)
    ///   2 z - x >= 0         (capacity available only when z = 1)
    /// with recourse cost 1 on x.
    fn switched_capacity() -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
        let sub_cost = vec![1.0];
        let c_matrix = vec![vec![1.0], vec![-1.0]];
        let b_matrix = vec![vec![0.0], vec![2.0]];
        let r = vec![1.0, 0.0];
        (sub_cost, c_matrix, b_matrix, r)
    }

    #[test]
    fn feasible_trial_gives_optimality_cut_matching_primal() {
        let (sub_cost, c, b, r) = switched_capacity();
        let cut = solve_subproblem(3, &sub_cost, &c, &b, &r, &[1]).unwrap();
        match cut {
            Cut::Optimality(oc) => {
                assert_eq!(oc.scenario, 3);
                // Primal optimum: x = 1, cost 1.
                assert_abs_diff_eq!(oc.evaluate(&[1]), 1.0, epsilon = 1e-7);
            }
            other => panic!("expected optimality cut, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_trial_gives_violated_feasibility_cut() {
        let (sub_cost, c, b, r) = switched_capacity();
        let cut = solve_subproblem(0, &sub_cost, &c, &b, &r, &[0]).unwrap();
        match cut {
            Cut::Feasibility(fc) => {
                let norm = fc.ray.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
                assert!(
                    fc.evaluate(&[0]) > 1e-9,
                    "cut must be violated by the trial that produced it"
                );
                assert!(
                    fc.evaluate(&[1]) <= 1e-9,
                    "cut must admit every recourse-feasible assignment"
                );
            }
            other => panic!("expected feasibility cut, got {other:?}"),
        }
    }

    #[test]
    fn optimality_cut_reproduces_subproblem_value_on_random_instances() {
        let mut rng = crate::rng::rng_from_seed(4242);
        for case in 0..30 {
            let n_rows = rng.gen_range(1..=6);
            let n_x = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=4);
            // Build C with a strictly positive column so the primal is
            // feasible for any rhs (x can absorb every Ge row).
            let mut c_matrix: Vec<Vec<f64>> = (0..n_rows)
                .map(|_| (0..n_x).map(|_| rng.gen_range(-1.0..1.5)).collect())
                .collect();
            for row in c_matrix.iter_mut() {
                row[0] = rng.gen_range(0.2..1.5);
            }
            let b_matrix: Vec<Vec<f64>> = (0..n_rows)
                .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let r: Vec<f64> = (0..n_rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sub_cost: Vec<f64> = (0..n_x).map(|_| rng.gen_range(0.1..2.0)).collect();
            let z0: Vec<u8> = (0..m).map(|_| rng.gen_range(0..=1u8)).collect();
            let cut = solve_subproblem(case, &sub_cost, &c_matrix, &b_matrix, &r, &z0).unwrap();
            let Cut::Optimality(oc) = cut else {
                panic!("case {case}: expected optimality cut");
            };
            // Independent primal solve of min sub_cost·x, C x >= r - B z0.
            let mut primal = LinearProgram::new(Sense::Min, sub_cost.clone());
            for i in 0..n_rows {
                let qi = r[i]
                    - b_matrix[i]
                        .iter()
                        .zip(&z0)
                        .map(|(bb, &z)| bb * f64::from(z))
                        .sum::<f64>();
                primal.push_row(c_matrix[i].clone(), RowSense::Ge, qi);
            }
            let (_, _, primal_obj) = assert_optimal(&primal.solve().unwrap());
            assert!(
                (oc.evaluate(&z0) - primal_obj).abs() <= 1e-7 * (1.0 + primal_obj.abs()),
                "case {case}: cut value {} vs primal {}",
                oc.evaluate(&z0),
                primal_obj
            );
        }
    }

    #[test]
    fn subproblem_shape_errors() {
        let err = solve_subproblem(0, &[1.0], &[vec![1.0]], &[], &[1.0], &[1]).unwrap_err();
        assert!(matches!(err, LpError::SubproblemShape { .. }));
    }

    #[test]
    fn tableau_text_mentions_every_row() {
        let mut lp = LinearProgram::new(Sense::Min, vec![1.0, 2.0]);
        lp.push_row(vec![1.0, 1.0], RowSense::Ge, 3.0);
        lp.push_row(vec![1.0, -1.0], RowSense::Le, 1.0);
        let text = lp.tableau_text();
        assert!(text.contains("min"));
        assert!(text.contains(">="));
        assert!(text.contains("<="));
        assert_eq!(text.lines().count(), 3);
    }
}
