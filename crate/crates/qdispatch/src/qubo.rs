//! Binary-quadratic encodings of the decomposition master problem and of
//! minimum-set-cover cut selection.
//!
//! The master search over commitments `z0` with accumulated cuts
//!
//! ```text
//!   min  a·z0 + eta
//!   s.t. eta >= agg_j(z0)     (aggregated value cuts)
//!        cut_k(z0) <= 0       (selected exclusion cuts)
//! ```
//!
//! becomes an energy function over bits: `eta` is carried by a weighted bit
//! register, each inequality gains a binary-expanded slack register, and each
//! equality `lhs = 0` is enforced as a penalty `lambda * lhs^2`. Feasible
//! assignments therefore have energy exactly equal to the objective part, and
//! the penalty rule guarantees every violating assignment lands strictly
//! above every feasible one.
//!
//! All quantities inside a squared penalty must live on a common dyadic grid
//! for that guarantee to be checkable, so cut coefficients are snapped to the
//! register resolution before encoding and the largest snap distance is
//! reported rather than hidden.
//!
//! Set cover (pick fewest columns of a binary matrix so every row has a
//! picked one) uses the same device: `H = 1·sigma0 + lambda *
//! sum_r (N_r·sigma0 - 1 - slack_r)^2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuboError {
    #[error("bit vector has {got} entries, dimension is {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("coefficient vector has {got} entries, expected {expected}")]
    CoefficientLength { got: usize, expected: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("exclusion cut {index} is violated by every assignment (interval minimum {min:.6} > 0)")]
    UnsatisfiableCut { index: usize, min: f64 },
    #[error("register too narrow: {0}")]
    WidthOverflow(String),
    #[error("cover row {0} has no available column")]
    UncoverableRow(usize),
    #[error("cover matrix is empty")]
    EmptyCover,
    #[error("penalties must be positive, got {0}")]
    BadPenalty(f64),
}

// ---------------------------------------------------------------------------
// Affine forms over decision bits
// ---------------------------------------------------------------------------

/// Affine expression `constant + coefficients · z0` over binary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub constant: f64,
    pub coefficients: Vec<f64>,
}

impl AffineExpr {
    pub fn evaluate(&self, z0: &[u8]) -> f64 {
        self.constant
            + self
                .coefficients
                .iter()
                .zip(z0)
                .map(|(c, &z)| c * f64::from(z))
                .sum::<f64>()
    }

    /// Smallest value attainable over all bit assignments.
    pub fn interval_min(&self) -> f64 {
        self.constant + self.coefficients.iter().map(|c| c.min(0.0)).sum::<f64>()
    }

    /// Largest value attainable over all bit assignments.
    pub fn interval_max(&self) -> f64 {
        self.constant + self.coefficients.iter().map(|c| c.max(0.0)).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.coefficients.iter().all(|c| c.is_finite())
    }

    /// Round every coefficient and the constant to multiples of `grid`;
    /// returns the snapped form and the largest absolute rounding distance.
    pub fn snapped(&self, grid: f64) -> (AffineExpr, f64) {
        let snap = |v: f64| (v / grid).round() * grid;
        let mut dist: f64 = (snap(self.constant) - self.constant).abs();
        let coefficients: Vec<f64> = self
            .coefficients
            .iter()
            .map(|&c| {
                let s = snap(c);
                dist = dist.max((s - c).abs());
                s
            })
            .collect();
        (
            AffineExpr {
                constant: snap(self.constant),
                coefficients,
            },
            dist,
        )
    }
}

// ---------------------------------------------------------------------------
// The quadratic form
// ---------------------------------------------------------------------------

/// What a bit position means in an encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarRole {
    /// Original decision bit.
    Decision { index: usize },
    /// Value-register bit carrying `weight` toward eta.
    EtaBit { weight: f64 },
    /// Slack bit for aggregated-cut inequality `aggregate`.
    OptSlackBit { aggregate: usize, weight: f64 },
    /// Slack bit for exclusion cut `cut`.
    FeaSlackBit { cut: usize, weight: f64 },
    /// Cover-selection bit for a column.
    CoverPick { column: usize },
    /// Cover slack bit for a row.
    CoverSlackBit { row: usize, weight: f64 },
}

/// Symmetric binary-quadratic form `bits^T M bits + linear·bits + offset`.
///
/// The matrix keeps a zero diagonal (squares fold into the linear part, since
/// b^2 = b) and stores half of each pair coefficient on each side, so the
/// quadratic form evaluates pairs once per orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Qubo {
    matrix: Vec<Vec<f64>>,
    linear: Vec<f64>,
    offset: f64,
    roles: Vec<VarRole>,
}

impl Qubo {
    pub fn new(roles: Vec<VarRole>) -> Self {
        let d = roles.len();
        Qubo {
            matrix: vec![vec![0.0; d]; d],
            linear: vec![0.0; d],
            offset: 0.0,
            roles,
        }
    }

    pub fn dimension(&self) -> usize {
        self.roles.len()
    }

    pub fn roles(&self) -> &[VarRole] {
        &self.roles
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn add_offset(&mut self, v: f64) {
        self.offset += v;
    }

    pub fn add_linear(&mut self, i: usize, v: f64) {
        self.linear[i] += v;
    }

    /// Add `v · b_i b_j` (full pair coefficient, split symmetrically); adding
    /// a diagonal pair folds into the linear part.
    pub fn add_pair(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.linear[i] += v;
        } else {
            self.matrix[i][j] += v / 2.0;
            self.matrix[j][i] += v / 2.0;
        }
    }

    /// Add `weight · (constant + sum terms)^2`, expanding the square with
    /// binary idempotence.
    pub fn add_squared_affine(&mut self, weight: f64, terms: &[(usize, f64)], constant: f64) {
        self.offset += weight * constant * constant;
        for (a, &(i, ci)) in terms.iter().enumerate() {
            self.linear[i] += weight * (ci * ci + 2.0 * constant * ci);
            for &(j, cj) in &terms[a + 1..] {
                self.add_pair(i, j, 2.0 * weight * ci * cj);
            }
        }
    }

    /// Exact energy of a bit assignment.
    pub fn energy(&self, bits: &[u8]) -> Result<f64, QuboError> {
        if bits.len() != self.dimension() {
            return Err(QuboError::LengthMismatch {
                got: bits.len(),
                expected: self.dimension(),
            });
        }
        let mut e = self.offset;
        for (i, &bi) in bits.iter().enumerate() {
            if bi == 0 {
                continue;
            }
            e += self.linear[i];
            let row = &self.matrix[i];
            for (j, &bj) in bits.iter().enumerate() {
                if bj != 0 {
                    e += row[j];
                }
            }
        }
        Ok(e)
    }

    /// Energy change from flipping bit `k` of `bits` (bits unchanged).
    pub fn flip_delta(&self, bits: &[u8], k: usize) -> f64 {
        let mut cross = 0.0;
        let row = &self.matrix[k];
        for (j, &bj) in bits.iter().enumerate() {
            if bj != 0 {
                cross += row[j];
            }
        }
        let base = self.linear[k] + 2.0 * cross;
        if bits[k] == 0 {
            base
        } else {
            -base
        }
    }

    /// Plain-text export for external annealers.
    ///
    /// Format: a comment line with the dimension, one `offset <value>` line,
    /// then one `<i> <j> <value>` line per nonzero term with `i <= j`;
    /// `i == j` lines carry linear coefficients, `i < j` lines carry the full
    /// pair coefficient of `b_i b_j`.
    pub fn to_triplet_text(&self) -> String {
        let mut out = format!(
            "# qubo dimension {}\noffset {:.17e}\n",
            self.dimension(),
            self.offset
        );
        for i in 0..self.dimension() {
            if self.linear[i] != 0.0 {
                out.push_str(&format!("{} {} {:.17e}\n", i, i, self.linear[i]));
            }
            for j in (i + 1)..self.dimension() {
                let pair = 2.0 * self.matrix[i][j];
                if pair != 0.0 {
                    out.push_str(&format!("{} {} {:.17e}\n", i, j, pair));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Register widths
// ---------------------------------------------------------------------------

/// Bit-register widths and resolutions for every encoded quantity.
///
/// A register with `int_bits = N` and `frac_bits = M` carries weights
/// `2^(N-1) … 2^0, 2^(-1) … 2^(-M)` and spans `[0, 2^N - 2^(-M)]` on the grid
/// `2^(-M)`. The eta and value-slack registers share one grid (they meet
/// inside the same squared penalty); exclusion-cut slacks keep their own,
/// and cover slacks are integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Widths {
    pub eta_int: u32,
    pub eta_frac: u32,
    pub opt_int: u32,
    pub opt_frac: u32,
    pub fea_int: u32,
    pub fea_frac: u32,
    pub cover_int: u32,
    pub cover_frac: u32,
}

impl Widths {
    pub fn master_grid(&self) -> f64 {
        (0.5f64).powi(self.eta_frac as i32)
    }

    pub fn fea_grid(&self) -> f64 {
        (0.5f64).powi(self.fea_frac as i32)
    }

    pub fn eta_capacity(&self) -> f64 {
        register_capacity(self.eta_int, self.eta_frac)
    }
}

fn register_capacity(int_bits: u32, frac_bits: u32) -> f64 {
    (2.0f64).powi(int_bits as i32) - (0.5f64).powi(frac_bits as i32)
}

/// MSB-first weights of a register.
fn register_weights(int_bits: u32, frac_bits: u32) -> Vec<f64> {
    let mut w = Vec::with_capacity((int_bits + frac_bits) as usize);
    for i in (0..int_bits as i32).rev() {
        w.push((2.0f64).powi(i));
    }
    for j in 1..=frac_bits as i32 {
        w.push((0.5f64).powi(j));
    }
    w
}

/// Smallest integer width whose register (at the given resolution) reaches
/// `upper`; at least 1 bit.
fn int_bits_for(upper: f64, frac_bits: u32) -> Result<u32, QuboError> {
    if !upper.is_finite() {
        return Err(QuboError::NonFinite("register bound".into()));
    }
    let mut n = 1u32;
    while register_capacity(n, frac_bits) < upper - 1e-9 {
        n += 1;
        if n > 48 {
            return Err(QuboError::WidthOverflow(format!(
                "bound {upper} needs more than 48 integer bits"
            )));
        }
    }
    Ok(n)
}

/// Smallest fractional width (up to `cap`) on which every value in `vals`
/// sits exactly (within 1e-9); falls back to `cap` when none does, in which
/// case snapping will report a nonzero distance.
fn frac_bits_for(vals: impl Iterator<Item = f64>, cap: u32) -> u32 {
    let vals: Vec<f64> = vals.collect();
    for m in 0..=cap {
        let grid = (0.5f64).powi(m as i32);
        if vals
            .iter()
            .all(|v| ((v / grid).round() * grid - v).abs() <= 1e-9)
        {
            return m;
        }
    }
    cap
}

/// Pick register widths for a master encoding (and optionally a cover
/// instance) by interval arithmetic over the cut set.
///
/// * The eta register spans `[0, U]` where `U` is the largest attainable
///   aggregate value, tightened by `eta_upper_hint` when the caller holds a
///   valid bound on the optimum (any incumbent upper bound qualifies).
/// * Value-slack registers span the largest attainable `eta - aggregate`
///   residual; exclusion-cut slacks span the largest attainable `-cut`.
/// * Fractional resolution per family: the coarsest dyadic grid that carries
///   every coefficient exactly, capped at `frac_cap` (the configured floor on
///   resolution); data off the capped grid gets snapped later, with the
///   distance reported.
/// * With no cuts (or no cover), the corresponding registers default to one
///   integer bit.
pub fn choose_widths(
    a: &[f64],
    aggregates: &[AffineExpr],
    exclusion_cuts: &[AffineExpr],
    cover_rows: Option<&[Vec<u8>]>,
    eta_upper_hint: Option<f64>,
    frac_cap: u32,
) -> Result<Widths, QuboError> {
    if !a.iter().all(|v| v.is_finite()) {
        return Err(QuboError::NonFinite("objective vector".into()));
    }
    for (what, cuts) in [("aggregate", aggregates), ("exclusion cut", exclusion_cuts)] {
        if let Some(bad) = cuts.iter().position(|c| !c.is_finite()) {
            return Err(QuboError::NonFinite(format!("{what} {bad}")));
        }
    }
    if let Some(h) = eta_upper_hint {
        if !h.is_finite() {
            return Err(QuboError::NonFinite("eta upper hint".into()));
        }
    }

    let (eta_int, eta_frac, opt_int, opt_frac) = if aggregates.is_empty() {
        (1, 0, 1, 0)
    } else {
        let m2 = frac_bits_for(
            aggregates
                .iter()
                .flat_map(|c| c.coefficients.iter().copied().chain([c.constant])),
            frac_cap,
        );
        let grid = (0.5f64).powi(m2 as i32);
        let snapped: Vec<AffineExpr> = aggregates.iter().map(|c| c.snapped(grid).0).collect();
        let mut upper: f64 = snapped
            .iter()
            .map(|c| c.interval_max())
            .fold(0.0, f64::max);
        if let Some(hint) = eta_upper_hint {
            upper = upper.min(hint.max(0.0));
        }
        let n2 = int_bits_for(upper.max(grid), m2)?;
        let eta_max = register_capacity(n2, m2);
        let resid: f64 = snapped
            .iter()
            .map(|c| eta_max - c.interval_min())
            .fold(0.0, f64::max);
        let n3 = int_bits_for(resid.max(grid), m2)?;
        (n2, m2, n3, m2)
    };

    let (fea_int, fea_frac) = if exclusion_cuts.is_empty() {
        (1, 0)
    } else {
        let m4 = frac_bits_for(
            exclusion_cuts
                .iter()
                .flat_map(|c| c.coefficients.iter().copied().chain([c.constant])),
            frac_cap,
        );
        let grid = (0.5f64).powi(m4 as i32);
        let mut reach: f64 = grid;
        for (k, cut) in exclusion_cuts.iter().enumerate() {
            let (s, _) = cut.snapped(grid);
            let lo = s.interval_min();
            if lo > 1e-9 {
                return Err(QuboError::UnsatisfiableCut { index: k, min: lo });
            }
            reach = reach.max(-lo);
        }
        (int_bits_for(reach, m4)?, m4)
    };

    let (cover_int, cover_frac) = match cover_rows {
        None => (1, 0),
        Some(rows) => {
            let mut max_excess = 0u32;
            for (r, row) in rows.iter().enumerate() {
                let ones = row.iter().filter(|&&v| v != 0).count() as u32;
                if ones == 0 {
                    return Err(QuboError::UncoverableRow(r));
                }
                max_excess = max_excess.max(ones - 1);
            }
            (int_bits_for(f64::from(max_excess.max(1)), 0)?, 0)
        }
    };

    Ok(Widths {
        eta_int,
        eta_frac,
        opt_int,
        opt_frac,
        fea_int,
        fea_frac,
        cover_int,
        cover_frac,
    })
}

/// Penalty factors for the encodings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalties {
    /// Factor on the value-cut equalities.
    pub value: f64,
    /// Factor on the exclusion-cut equalities.
    pub exclusion: f64,
    /// Factor on the cover equalities.
    pub cover: f64,
}

/// Penalty rule: `lambda >= 2 * (objective spread) / (minimum representable
/// squared violation)`, floored at 1. The spread is bounded by interval
/// arithmetic; any violation on the encoding grid is at least one grid step,
/// so its square is at least `grid^2`. This puts every violating assignment
/// strictly above every feasible one. One rule, applied per penalty family.
pub fn choose_penalties(a: &[f64], widths: &Widths, cover_columns: usize) -> Penalties {
    let spread: f64 = a.iter().map(|v| v.abs()).sum::<f64>() + widths.eta_capacity();
    let master_grid = widths.master_grid().min(widths.fea_grid());
    let lambda = (2.0 * spread / (master_grid * master_grid)).max(1.0);
    let cover = (2.0 * cover_columns as f64).max(1.0);
    Penalties {
        value: lambda,
        exclusion: lambda,
        cover,
    }
}

// ---------------------------------------------------------------------------
// Master encoding
// ---------------------------------------------------------------------------

/// A master problem rendered as a `Qubo`, together with the snapped cut
/// system it actually encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterEncoding {
    pub qubo: Qubo,
    pub widths: Widths,
    pub penalties: Penalties,
    pub objective: Vec<f64>,
    /// Aggregated value cuts after grid snapping — the system the energy
    /// landscape truly enforces.
    pub aggregates: Vec<AffineExpr>,
    /// Exclusion cuts after grid snapping.
    pub exclusion_cuts: Vec<AffineExpr>,
    /// Largest |snapped - original| over all cut coefficients.
    pub max_snap_distance: f64,
}

impl MasterEncoding {
    pub fn num_decision(&self) -> usize {
        self.objective.len()
    }

    pub fn decode_z0(&self, bits: &[u8]) -> Vec<u8> {
        bits[..self.num_decision()].to_vec()
    }

    pub fn decode_eta(&self, bits: &[u8]) -> f64 {
        self.qubo
            .roles()
            .iter()
            .zip(bits)
            .map(|(r, &b)| match r {
                VarRole::EtaBit { weight } => weight * f64::from(b),
                _ => 0.0,
            })
            .sum()
    }

    /// Objective part of the energy: `a · z0 + eta`. Equals the full energy
    /// exactly when the assignment satisfies every encoded equality.
    pub fn objective_value(&self, bits: &[u8]) -> f64 {
        let z0 = &bits[..self.num_decision()];
        self.objective
            .iter()
            .zip(z0)
            .map(|(a, &z)| a * f64::from(z))
            .sum::<f64>()
            + self.decode_eta(bits)
    }

    /// Does this bit assignment satisfy every encoded constraint exactly
    /// (all penalties zero on the grid)?
    pub fn satisfies_constraints(&self, bits: &[u8]) -> bool {
        let z0 = self.decode_z0(bits);
        let eta = self.decode_eta(bits);
        let grid = self.widths.master_grid().min(self.widths.fea_grid());
        let tol = grid * 1e-6;
        for (j, agg) in self.aggregates.iter().enumerate() {
            let slack: f64 = self
                .qubo
                .roles()
                .iter()
                .zip(bits)
                .map(|(r, &b)| match r {
                    VarRole::OptSlackBit { aggregate, weight } if *aggregate == j => {
                        weight * f64::from(b)
                    }
                    _ => 0.0,
                })
                .sum();
            if (eta - slack - agg.evaluate(&z0)).abs() > tol {
                return false;
            }
        }
        for (k, cut) in self.exclusion_cuts.iter().enumerate() {
            let slack: f64 = self
                .qubo
                .roles()
                .iter()
                .zip(bits)
                .map(|(r, &b)| match r {
                    VarRole::FeaSlackBit { cut: c, weight } if *c == k => weight * f64::from(b),
                    _ => 0.0,
                })
                .sum();
            if (slack + cut.evaluate(&z0)).abs() > tol {
                return false;
            }
        }
        true
    }
}

/// Encode the master problem over the given widths and penalties.
///
/// Layout: decision bits first, then the eta register (most significant bit
/// first), then one value-slack register per aggregate, then one slack
/// register per exclusion cut. Cut coefficients are snapped to their
/// family's grid; the worst distance is reported in the result.
pub fn encode_master(
    a: &[f64],
    aggregates: &[AffineExpr],
    exclusion_cuts: &[AffineExpr],
    widths: &Widths,
    penalties: &Penalties,
) -> Result<MasterEncoding, QuboError> {
    let m = a.len();
    if !a.iter().all(|v| v.is_finite()) {
        return Err(QuboError::NonFinite("objective vector".into()));
    }
    if penalties.value <= 0.0 || penalties.exclusion <= 0.0 {
        return Err(QuboError::BadPenalty(penalties.value.min(penalties.exclusion)));
    }
    for (what, cuts) in [("aggregate", aggregates), ("exclusion cut", exclusion_cuts)] {
        for (k, c) in cuts.iter().enumerate() {
            if !c.is_finite() {
                return Err(QuboError::NonFinite(format!("{what} {k}")));
            }
            if c.coefficients.len() != m {
                return Err(QuboError::CoefficientLength {
                    got: c.coefficients.len(),
                    expected: m,
                });
            }
        }
    }

    let master_grid = widths.master_grid();
    let fea_grid = widths.fea_grid();
    let mut max_snap = 0.0f64;
    let aggregates_snapped: Vec<AffineExpr> = aggregates
        .iter()
        .map(|c| {
            let (s, d) = c.snapped(master_grid);
            max_snap = max_snap.max(d);
            s
        })
        .collect();
    let exclusion_snapped: Vec<AffineExpr> = exclusion_cuts
        .iter()
        .map(|c| {
            let (s, d) = c.snapped(fea_grid);
            max_snap = max_snap.max(d);
            s
        })
        .collect();

    // Width sanity: every snapped quantity must be representable.
    let eta_max = widths.eta_capacity();
    let opt_cap = register_capacity(widths.opt_int, widths.opt_frac);
    for (j, agg) in aggregates_snapped.iter().enumerate() {
        let resid = eta_max - agg.interval_min();
        if resid > opt_cap + 1e-9 {
            return Err(QuboError::WidthOverflow(format!(
                "value-slack register (capacity {opt_cap}) cannot reach residual {resid} of aggregate {j}"
            )));
        }
    }
    let fea_cap = register_capacity(widths.fea_int, widths.fea_frac);
    for (k, cut) in exclusion_snapped.iter().enumerate() {
        let lo = cut.interval_min();
        if lo > 1e-9 {
            return Err(QuboError::UnsatisfiableCut { index: k, min: lo });
        }
        if -lo > fea_cap + 1e-9 {
            return Err(QuboError::WidthOverflow(format!(
                "exclusion-slack register (capacity {fea_cap}) cannot reach {} for cut {k}",
                -lo
            )));
        }
    }

    // Roles and layout.
    let mut roles: Vec<VarRole> = (0..m).map(|index| VarRole::Decision { index }).collect();
    let eta_weights = register_weights(widths.eta_int, widths.eta_frac);
    let eta_base = roles.len();
    roles.extend(eta_weights.iter().map(|&weight| VarRole::EtaBit { weight }));
    let opt_weights = register_weights(widths.opt_int, widths.opt_frac);
    let mut opt_bases = Vec::with_capacity(aggregates_snapped.len());
    for aggregate in 0..aggregates_snapped.len() {
        opt_bases.push(roles.len());
        roles.extend(
            opt_weights
                .iter()
                .map(|&weight| VarRole::OptSlackBit { aggregate, weight }),
        );
    }
    let fea_weights = register_weights(widths.fea_int, widths.fea_frac);
    let mut fea_bases = Vec::with_capacity(exclusion_snapped.len());
    for cut in 0..exclusion_snapped.len() {
        fea_bases.push(roles.len());
        roles.extend(
            fea_weights
                .iter()
                .map(|&weight| VarRole::FeaSlackBit { cut, weight }),
        );
    }

    let mut qubo = Qubo::new(roles);
    // Objective: a·z0 + eta.
    for (i, &ai) in a.iter().enumerate() {
        qubo.add_linear(i, ai);
    }
    for (o, &w) in eta_weights.iter().enumerate() {
        qubo.add_linear(eta_base + o, w);
    }
    // Value cuts: (eta - slack_j - agg_j(z0))^2.
    for (j, agg) in aggregates_snapped.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for (o, &w) in eta_weights.iter().enumerate() {
            terms.push((eta_base + o, w));
        }
        for (o, &w) in opt_weights.iter().enumerate() {
            terms.push((opt_bases[j] + o, -w));
        }
        for (i, &c) in agg.coefficients.iter().enumerate() {
            if c != 0.0 {
                terms.push((i, -c));
            }
        }
        qubo.add_squared_affine(penalties.value, &terms, -agg.constant);
    }
    // Exclusion cuts: (slack_k + cut_k(z0))^2.
    for (k, cut) in exclusion_snapped.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for (o, &w) in fea_weights.iter().enumerate() {
            terms.push((fea_bases[k] + o, w));
        }
        for (i, &c) in cut.coefficients.iter().enumerate() {
            if c != 0.0 {
                terms.push((i, c));
            }
        }
        qubo.add_squared_affine(penalties.exclusion, &terms, cut.constant);
    }

    Ok(MasterEncoding {
        qubo,
        widths: *widths,
        penalties: *penalties,
        objective: a.to_vec(),
        aggregates: aggregates_snapped,
        exclusion_cuts: exclusion_snapped,
        max_snap_distance: max_snap,
    })
}

// ---------------------------------------------------------------------------
// Set-cover encoding
// ---------------------------------------------------------------------------

/// A cover instance rendered as a `Qubo`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverEncoding {
    pub qubo: Qubo,
    pub rows: usize,
    pub columns: usize,
}

impl CoverEncoding {
    /// Columns picked by a bit assignment.
    pub fn decode_selected(&self, bits: &[u8]) -> Vec<usize> {
        (0..self.columns).filter(|&j| bits[j] == 1).collect()
    }
}

/// Encode minimum set cover: pick the fewest columns so that every row of
/// the binary matrix has at least one picked entry.
///
/// Layout: one pick bit per column, then one integer slack register per row
/// (most significant bit first). Energy = picks + penalty on
/// `(row_coverage - 1 - slack)^2`.
pub fn encode_set_cover(
    matrix: &[Vec<u8>],
    widths: &Widths,
    lambda: f64,
) -> Result<CoverEncoding, QuboError> {
    if matrix.is_empty() || matrix[0].is_empty() {
        return Err(QuboError::EmptyCover);
    }
    if lambda <= 0.0 {
        return Err(QuboError::BadPenalty(lambda));
    }
    let columns = matrix[0].len();
    for (r, row) in matrix.iter().enumerate() {
        if row.len() != columns {
            return Err(QuboError::CoefficientLength {
                got: row.len(),
                expected: columns,
            });
        }
        if row.iter().all(|&v| v == 0) {
            return Err(QuboError::UncoverableRow(r));
        }
    }
    let rows = matrix.len();
    let slack_weights = register_weights(widths.cover_int, widths.cover_frac);
    let mut roles: Vec<VarRole> = (0..columns)
        .map(|column| VarRole::CoverPick { column })
        .collect();
    let mut slack_bases = Vec::with_capacity(rows);
    for row in 0..rows {
        slack_bases.push(roles.len());
        roles.extend(
            slack_weights
                .iter()
                .map(|&weight| VarRole::CoverSlackBit { row, weight }),
        );
    }
    let mut qubo = Qubo::new(roles);
    for j in 0..columns {
        qubo.add_linear(j, 1.0);
    }
    for (r, row) in matrix.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for (j, &v) in row.iter().enumerate() {
            if v != 0 {
                terms.push((j, 1.0));
            }
        }
        for (o, &w) in slack_weights.iter().enumerate() {
            terms.push((slack_bases[r] + o, -w));
        }
        qubo.add_squared_affine(lambda, &terms, -1.0);
    }
    Ok(CoverEncoding {
        qubo,
        rows,
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    /// Term-by-term quadratic form, written independently of `energy`.
    fn oracle_energy(q: &Qubo, bits: &[u8]) -> f64 {
        let d = q.dimension();
        let mut e = q.offset();
        for i in 0..d {
            e += q.linear()[i] * f64::from(bits[i]);
            for j in 0..d {
                e += q.matrix()[i][j] * f64::from(bits[i]) * f64::from(bits[j]);
            }
        }
        e
    }

    fn random_bits(rng: &mut impl Rng, d: usize) -> Vec<u8> {
        (0..d).map(|_| u8::from(rng.gen_bool(0.5))).collect()
    }

    fn random_qubo(rng: &mut impl Rng, d: usize) -> Qubo {
        let roles = (0..d).map(|index| VarRole::Decision { index }).collect();
        let mut q = Qubo::new(roles);
        q.add_offset(rng.gen_range(-4.0..4.0));
        for i in 0..d {
            if rng.gen_bool(0.7) {
                q.add_linear(i, rng.gen_range(-3.0..3.0));
            }
            for j in (i + 1)..d {
                if rng.gen_bool(0.5) {
                    q.add_pair(i, j, rng.gen_range(-2.0..2.0));
                }
            }
        }
        q
    }

    /// Exhaustive ground state via reflected-Gray-code enumeration with
    /// incremental flip deltas (cross-checked against full evaluation).
    /// Returns (ground bits, ground energy, count of assignments within 1e-9).
    fn brute_ground(q: &Qubo) -> (Vec<u8>, f64, usize) {
        let d = q.dimension();
        assert!(d <= 20, "brute force capped at 20 bits, got {d}");
        let mut bits = vec![0u8; d];
        let mut e = q.energy(&bits).unwrap();
        let mut best = bits.clone();
        let mut best_e = e;
        let mut near = 1usize;
        for k in 1u64..(1u64 << d) {
            let b = k.trailing_zeros() as usize;
            e += q.flip_delta(&bits, b);
            bits[b] ^= 1;
            if k & 0xFFF == 0 {
                let exact = q.energy(&bits).unwrap();
                assert!(
                    (exact - e).abs() <= 1e-7 * (1.0 + exact.abs()),
                    "incremental energy drifted: {e} vs {exact}"
                );
                e = exact;
            }
            if e < best_e - 1e-9 {
                best_e = e;
                best = bits.clone();
                near = 1;
            } else if (e - best_e).abs() <= 1e-9 {
                near += 1;
            }
        }
        (best, best_e, near)
    }

    #[test]
    fn energy_matches_quadratic_form_oracle() {
        let mut rng = rng_from_seed(11);
        for _ in 0..25 {
            let d = rng.gen_range(2..=8);
            let q = random_qubo(&mut rng, d);
            for _ in 0..8 {
                let bits = random_bits(&mut rng, d);
                let got = q.energy(&bits).unwrap();
                let want = oracle_energy(&q, &bits);
                assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn squared_affine_expands_exactly() {
        let mut rng = rng_from_seed(12);
        for _ in 0..20 {
            let d = rng.gen_range(2..=7);
            let n_terms = rng.gen_range(1..=d);
            let terms: Vec<(usize, f64)> = (0..n_terms)
                .map(|i| (i, rng.gen_range(-2.0..2.0)))
                .collect();
            let c = rng.gen_range(-2.0..2.0);
            let w = rng.gen_range(0.5..4.0);
            let roles = (0..d).map(|index| VarRole::Decision { index }).collect();
            let mut q = Qubo::new(roles);
            q.add_squared_affine(w, &terms, c);
            for _ in 0..10 {
                let bits = random_bits(&mut rng, d);
                let affine: f64 = c
                    + terms
                        .iter()
                        .map(|&(i, ci)| ci * f64::from(bits[i]))
                        .sum::<f64>();
                let want = w * affine * affine;
                let got = q.energy(&bits).unwrap();
                assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn flip_delta_matches_reevaluation() {
        let mut rng = rng_from_seed(13);
        for _ in 0..15 {
            let d = rng.gen_range(2..=8);
            let q = random_qubo(&mut rng, d);
            let bits = random_bits(&mut rng, d);
            let base = q.energy(&bits).unwrap();
            for k in 0..d {
                let mut flipped = bits.clone();
                flipped[k] ^= 1;
                let want = q.energy(&flipped).unwrap() - base;
                let got = q.flip_delta(&bits, k);
                assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn matrix_stays_symmetric_with_zero_diagonal() {
        let mut rng = rng_from_seed(14);
        let d = 6;
        let mut q = random_qubo(&mut rng, d);
        q.add_pair(2, 2, 1.5); // diagonal pair folds into linear
        q.add_squared_affine(2.0, &[(0, 1.0), (3, -0.5), (5, 0.25)], -1.0);
        for i in 0..d {
            assert_eq!(q.matrix()[i][i], 0.0);
            for j in 0..d {
                assert_eq!(q.matrix()[i][j], q.matrix()[j][i]);
            }
        }
        // The diagonal pair acted as a linear term: b*b = b.
        let mut bits = vec![0u8; d];
        bits[2] = 1;
        let with = q.energy(&bits).unwrap();
        let q2 = {
            let mut q2 = q.clone();
            q2.add_pair(2, 2, -1.5);
            q2
        };
        assert!((with - q2.energy(&bits).unwrap() - 1.5).abs() <= 1e-12);
    }

    #[test]
    fn energy_rejects_wrong_length() {
        let q = random_qubo(&mut rng_from_seed(15), 4);
        assert_eq!(
            q.energy(&[1, 0, 1]),
            Err(QuboError::LengthMismatch {
                got: 3,
                expected: 4
            })
        );
    }

    #[test]
    fn triplet_export_reparses_to_same_energies() {
        let mut rng = rng_from_seed(16);
        let q = random_qubo(&mut rng, 7);
        let text = q.to_triplet_text();
        assert!(text.starts_with("# qubo dimension 7\n"));
        assert!(text.lines().any(|l| l.starts_with("offset ")));
        let energy_from_text = |bits: &[u8]| -> f64 {
            let mut e = 0.0;
            for line in text.lines() {
                if line.starts_with('#') {
                    continue;
                }
                if let Some(rest) = line.strip_prefix("offset ") {
                    e += rest.parse::<f64>().unwrap();
                    continue;
                }
                let mut it = line.split_whitespace();
                let i: usize = it.next().unwrap().parse().unwrap();
                let j: usize = it.next().unwrap().parse().unwrap();
                let v: f64 = it.next().unwrap().parse().unwrap();
                if i == j {
                    e += v * f64::from(bits[i]);
                } else {
                    e += v * f64::from(bits[i]) * f64::from(bits[j]);
                }
            }
            e
        };
        for _ in 0..20 {
            let bits = random_bits(&mut rng, 7);
            let want = q.energy(&bits).unwrap();
            assert!((energy_from_text(&bits) - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn affine_interval_and_snapping() {
        let f = AffineExpr {
            constant: 2.0,
            coefficients: vec![-1.0, 0.3, -0.5],
        };
        assert!((f.interval_min() - 0.5).abs() <= 1e-12);
        assert!((f.interval_max() - 2.3).abs() <= 1e-12);
        assert!((f.evaluate(&[1, 1, 0]) - 1.3).abs() <= 1e-12);
        let (s, d) = f.snapped(0.25);
        assert_eq!(s.coefficients, vec![-1.0, 0.25, -0.5]);
        assert!((d - 0.05).abs() <= 1e-12);
    }

    #[test]
    fn widths_integer_value_cut_needs_two_bits() {
        // All cut data integer with attainable values in [0, 3]:
        // two integer bits at integer resolution suffice.
        let agg = AffineExpr {
            constant: 1.0,
            coefficients: vec![2.0, -1.0],
        };
        let w = choose_widths(&[0.0, 0.0], &[agg], &[], None, None, 6).unwrap();
        assert_eq!((w.eta_int, w.eta_frac), (2, 0));
        assert_eq!(w.opt_frac, 0);
    }

    #[test]
    fn widths_quarter_grid_exclusion_slack() {
        // Residual range [0, 1.5] on a quarter grid: slack bits must cover
        // {0, 0.25, ..., 1.5}.
        let cut = AffineExpr {
            constant: -1.5,
            coefficients: vec![1.25, 0.25],
        };
        let w = choose_widths(&[0.0, 0.0], &[], &[cut.clone()], None, None, 2).unwrap();
        assert_eq!((w.fea_int, w.fea_frac), (1, 2));
        let p = Penalties {
            value: 8.0,
            exclusion: 8.0,
            cover: 1.0,
        };
        let enc = encode_master(&[0.0, 0.0], &[], &[cut], &w, &p).unwrap();
        let mut weights: Vec<f64> = enc
            .qubo
            .roles()
            .iter()
            .filter_map(|r| match r {
                VarRole::FeaSlackBit { weight, .. } => Some(*weight),
                _ => None,
            })
            .collect();
        weights.sort_by(|x, y| y.partial_cmp(x).unwrap());
        assert_eq!(weights, vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn widths_empty_cut_set_is_minimal() {
        let w = choose_widths(&[1.0], &[], &[], None, None, 6).unwrap();
        assert_eq!(
            w,
            Widths {
                eta_int: 1,
                eta_frac: 0,
                opt_int: 1,
                opt_frac: 0,
                fea_int: 1,
                fea_frac: 0,
                cover_int: 1,
                cover_frac: 0,
            }
        );
    }

    #[test]
    fn widths_value_bound_hint_tightens_register() {
        let agg = AffineExpr {
            constant: 100.0,
            coefficients: vec![0.0],
        };
        let wide = choose_widths(&[1.0], std::slice::from_ref(&agg), &[], None, None, 6).unwrap();
        assert_eq!((wide.eta_int, wide.eta_frac), (7, 0));
        let tight = choose_widths(&[1.0], &[agg], &[], None, Some(5.0), 6).unwrap();
        assert_eq!((tight.eta_int, tight.eta_frac), (3, 0));
    }

    #[test]
    fn penalties_follow_spread_over_resolution_rule() {
        // Spread 10 at quarter resolution: 2 * 10 / 0.0625 = 320.
        let w = Widths {
            eta_int: 2,
            eta_frac: 2,
            opt_int: 2,
            opt_frac: 2,
            fea_int: 1,
            fea_frac: 0,
            cover_int: 1,
            cover_frac: 0,
        };
        assert!((w.eta_capacity() - 3.75).abs() <= 1e-12);
        let p = choose_penalties(&[6.25], &w, 5);
        assert!((p.value - 320.0).abs() <= 1e-12);
        assert!((p.exclusion - 320.0).abs() <= 1e-12);
        assert!((p.cover - 10.0).abs() <= 1e-12);
        // Degenerate cover (nothing to pick): the floor of 1 applies.
        assert!((choose_penalties(&[6.25], &w, 0).cover - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn master_without_cuts_is_pure_objective() {
        let a = [3.0, 1.0, 2.0];
        let w = choose_widths(&a, &[], &[], None, None, 6).unwrap();
        let p = choose_penalties(&a, &w, 0);
        let enc = encode_master(&a, &[], &[], &w, &p).unwrap();
        assert_eq!(enc.qubo.dimension(), 4); // three decisions + one value bit
        for row in enc.qubo.matrix() {
            assert!(row.iter().all(|&v| v == 0.0));
        }
        assert_eq!(enc.qubo.offset(), 0.0);
        let (ground, e, _) = brute_ground(&enc.qubo);
        assert_eq!(ground, vec![0, 0, 0, 0]);
        assert_eq!(e, 0.0);
    }

    /// Independent master oracle: enumerate decision assignments, drop those
    /// violating any exclusion cut, price the rest at
    /// `a·z0 + max(0, max_j agg_j(z0))`.
    fn ilp_oracle(
        a: &[f64],
        aggs: &[AffineExpr],
        cuts: &[AffineExpr],
    ) -> (Vec<u8>, f64, f64) {
        let m = a.len();
        let mut best: Option<(Vec<u8>, f64, f64)> = None;
        for v in 0..(1u32 << m) {
            let z0: Vec<u8> = (0..m).map(|j| ((v >> (m - 1 - j)) & 1) as u8).collect();
            if cuts.iter().any(|c| c.evaluate(&z0) > 1e-9) {
                continue;
            }
            let eta = aggs
                .iter()
                .map(|g| g.evaluate(&z0))
                .fold(0.0f64, f64::max);
            let obj: f64 = a
                .iter()
                .zip(&z0)
                .map(|(ai, &z)| ai * f64::from(z))
                .sum::<f64>()
                + eta;
            if best.as_ref().is_none_or(|(_, _, bo)| obj < bo - 1e-12) {
                best = Some((z0, eta, obj));
            }
        }
        best.expect("oracle found no feasible assignment")
    }

    fn four_var_instance() -> (Vec<f64>, Vec<AffineExpr>, Vec<AffineExpr>) {
        let a = vec![0.25, 2.0, 1.0, 3.0];
        let aggs = vec![
            AffineExpr {
                constant: 2.0,
                coefficients: vec![-1.0, -0.5, 0.0, 0.0],
            },
            AffineExpr {
                constant: 1.5,
                coefficients: vec![0.0, 0.0, -0.25, 0.0],
            },
        ];
        let cuts = vec![AffineExpr {
            constant: -1.0,
            coefficients: vec![1.0, 1.0, 0.0, 0.0],
        }];
        (a, aggs, cuts)
    }

    #[test]
    fn four_variable_master_ground_state_matches_oracle() {
        let (a, aggs, cuts) = four_var_instance();
        let (oz0, oeta, oobj) = ilp_oracle(&a, &aggs, &cuts);
        assert_eq!(oz0, vec![1, 0, 0, 0]);
        assert!((oeta - 1.5).abs() <= 1e-12);
        assert!((oobj - 1.75).abs() <= 1e-12);

        let w = choose_widths(&a, &aggs, &cuts, None, None, 6).unwrap();
        let p = choose_penalties(&a, &w, 0);
        let enc = encode_master(&a, &aggs, &cuts, &w, &p).unwrap();
        assert_eq!(enc.max_snap_distance, 0.0);
        let (ground, e, _) = brute_ground(&enc.qubo);
        assert!(enc.satisfies_constraints(&ground));
        assert_eq!(enc.decode_z0(&ground), oz0);
        assert!((enc.decode_eta(&ground) - oeta).abs() <= 1e-9);
        assert!((e - oobj).abs() <= 1e-9);
        assert!((enc.objective_value(&ground) - e).abs() <= 1e-9);
    }

    #[test]
    fn feasible_energies_sit_below_every_violation() {
        let (a, aggs, cuts) = four_var_instance();
        let w = choose_widths(&a, &aggs, &cuts, None, None, 6).unwrap();
        let p = choose_penalties(&a, &w, 0);
        let enc = encode_master(&a, &aggs, &cuts, &w, &p).unwrap();
        let d = enc.qubo.dimension();
        let mut feasible = 0usize;
        let mut max_feasible = f64::NEG_INFINITY;
        let mut min_violating = f64::INFINITY;
        for v in 0..(1u64 << d) {
            let bits: Vec<u8> = (0..d).map(|j| ((v >> j) & 1) as u8).collect();
            let e = enc.qubo.energy(&bits).unwrap();
            if enc.satisfies_constraints(&bits) {
                feasible += 1;
                let obj = enc.objective_value(&bits);
                assert!(
                    (e - obj).abs() <= 1e-9 * (1.0 + obj.abs()),
                    "feasible assignment energy {e} differs from objective part {obj}"
                );
                max_feasible = max_feasible.max(e);
            } else {
                min_violating = min_violating.min(e);
            }
        }
        assert!(feasible > 0);
        assert!(
            min_violating > max_feasible,
            "a violating assignment ({min_violating}) undercut a feasible one ({max_feasible})"
        );
    }

    #[test]
    fn off_grid_coefficients_snap_with_reported_distance() {
        let agg = AffineExpr {
            constant: 0.0,
            coefficients: vec![0.3],
        };
        let w = choose_widths(&[1.0], std::slice::from_ref(&agg), &[], None, None, 2).unwrap();
        assert_eq!(w.eta_frac, 2); // never exact, so the cap applies
        let p = choose_penalties(&[1.0], &w, 0);
        let enc = encode_master(&[1.0], &[agg], &[], &w, &p).unwrap();
        assert!((enc.max_snap_distance - 0.05).abs() <= 1e-12);
        assert!((enc.aggregates[0].coefficients[0] - 0.25).abs() <= 1e-12);
    }

    #[test]
    fn always_violated_cut_is_rejected() {
        let cut = AffineExpr {
            constant: 1.0,
            coefficients: vec![0.5],
        };
        let err = choose_widths(&[1.0], &[], std::slice::from_ref(&cut), None, None, 6);
        assert!(matches!(err, Err(QuboError::UnsatisfiableCut { index: 0, .. })));
        let w = Widths {
            eta_int: 1,
            eta_frac: 0,
            opt_int: 1,
            opt_frac: 0,
            fea_int: 4,
            fea_frac: 1,
            cover_int: 1,
            cover_frac: 0,
        };
        let p = Penalties {
            value: 8.0,
            exclusion: 8.0,
            cover: 1.0,
        };
        let err = encode_master(&[1.0], &[], &[cut], &w, &p);
        assert!(matches!(err, Err(QuboError::UnsatisfiableCut { index: 0, .. })));
    }

    #[test]
    fn narrow_registers_error_instead_of_truncating() {
        let narrow = Widths {
            eta_int: 1,
            eta_frac: 0,
            opt_int: 1,
            opt_frac: 0,
            fea_int: 1,
            fea_frac: 0,
            cover_int: 1,
            cover_frac: 0,
        };
        let p = Penalties {
            value: 8.0,
            exclusion: 8.0,
            cover: 1.0,
        };
        let deep_agg = AffineExpr {
            constant: -10.0,
            coefficients: vec![0.0],
        };
        let err = encode_master(&[1.0], &[deep_agg], &[], &narrow, &p);
        assert!(matches!(err, Err(QuboError::WidthOverflow(_))), "{err:?}");
        let deep_cut = AffineExpr {
            constant: -10.0,
            coefficients: vec![0.0],
        };
        let err = encode_master(&[1.0], &[], &[deep_cut], &narrow, &p);
        assert!(matches!(err, Err(QuboError::WidthOverflow(_))), "{err:?}");
    }

    // ------------------------------------------------------------------
    // Set cover
    // ------------------------------------------------------------------

    /// Exhaustive minimum cover size over all column subsets.
    fn min_cover_size(rows: &[Vec<u8>]) -> usize {
        let cols = rows[0].len();
        (0u32..(1 << cols))
            .filter(|&s| {
                rows.iter()
                    .all(|row| (0..cols).any(|j| row[j] == 1 && (s >> j) & 1 == 1))
            })
            .map(|s| s.count_ones() as usize)
            .min()
            .expect("instance had no cover")
    }

    fn is_cover(rows: &[Vec<u8>], picked: &[usize]) -> bool {
        rows.iter()
            .all(|row| picked.iter().any(|&j| row[j] == 1))
    }

    #[test]
    fn identity_cover_picks_every_column() {
        let rows: Vec<Vec<u8>> = (0..3)
            .map(|i| (0..3).map(|j| u8::from(i == j)).collect())
            .collect();
        let w = choose_widths(&[], &[], &[], Some(&rows), None, 0).unwrap();
        assert_eq!((w.cover_int, w.cover_frac), (1, 0));
        let p = choose_penalties(&[], &w, 3);
        let enc = encode_set_cover(&rows, &w, p.cover).unwrap();
        assert_eq!(enc.qubo.dimension(), 6);
        let (ground, e, near) = brute_ground(&enc.qubo);
        assert_eq!(near, 1, "identity cover ground state should be unique");
        assert_eq!(enc.decode_selected(&ground), vec![0, 1, 2]);
        assert!((e - 3.0).abs() <= 1e-9);
    }

    #[test]
    fn shared_column_cover_picks_it_alone() {
        let rows = vec![
            vec![1, 1, 0, 0, 0],
            vec![1, 0, 1, 0, 0],
            vec![1, 0, 0, 1, 0],
            vec![1, 0, 0, 0, 1],
        ];
        let w = choose_widths(&[], &[], &[], Some(&rows), None, 0).unwrap();
        let p = choose_penalties(&[], &w, 5);
        let enc = encode_set_cover(&rows, &w, p.cover).unwrap();
        let (ground, e, _) = brute_ground(&enc.qubo);
        assert_eq!(enc.decode_selected(&ground), vec![0]);
        assert!((e - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn random_covers_match_exhaustive_minimum() {
        let mut rng = rng_from_seed(21);
        for round in 0..12 {
            let rows: Vec<Vec<u8>> = loop {
                let cand: Vec<Vec<u8>> = (0..4)
                    .map(|_| (0..6).map(|_| u8::from(rng.gen_bool(0.5))).collect())
                    .collect();
                if cand.iter().all(|r| r.iter().any(|&v| v == 1)) {
                    break cand;
                }
            };
            let want = min_cover_size(&rows);
            let w = choose_widths(&[], &[], &[], Some(&rows), None, 0).unwrap();
            let p = choose_penalties(&[], &w, 6);
            let enc = encode_set_cover(&rows, &w, p.cover).unwrap();
            let (ground, e, _) = brute_ground(&enc.qubo);
            let picked = enc.decode_selected(&ground);
            assert!(is_cover(&rows, &picked), "round {round}: not a cover");
            assert_eq!(picked.len(), want, "round {round}: wrong cover size");
            assert!(
                (e - want as f64).abs() <= 1e-6,
                "round {round}: ground energy {e} vs minimum {want}"
            );
        }
    }

    #[test]
    fn uncoverable_row_is_rejected() {
        let rows = vec![vec![1, 0], vec![0, 0]];
        assert_eq!(
            choose_widths(&[], &[], &[], Some(&rows), None, 0),
            Err(QuboError::UncoverableRow(1))
        );
        let w = Widths {
            eta_int: 1,
            eta_frac: 0,
            opt_int: 1,
            opt_frac: 0,
            fea_int: 1,
            fea_frac: 0,
            cover_int: 1,
            cover_frac: 0,
        };
        assert_eq!(
            encode_set_cover(&rows, &w, 4.0),
            Err(QuboError::UncoverableRow(1))
        );
        assert_eq!(encode_set_cover(&[], &w, 4.0), Err(QuboError::EmptyCover));
        let ragged = vec![vec![1, 0], vec![1]];
        assert_eq!(
            encode_set_cover(&ragged, &w, 4.0),
            Err(QuboError::CoefficientLength {
                got: 1,
                expected: 2
            })
        );
    }
}
