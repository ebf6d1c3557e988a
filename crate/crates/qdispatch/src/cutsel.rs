//! Exclusion-cut selection as minimum set cover.
//!
//! The decomposition loop accumulates exclusion cuts faster than the master
//! encoding can afford bits, but most are redundant: it suffices to keep a
//! subset that still rules out every infeasible trial seen so far. That is a
//! set-cover instance — rows are infeasible trials, columns are cuts, and an
//! entry is set when the cut is violated by (and therefore excludes) the
//! trial.
//!
//! Three interchangeable selectors: a greedy pass with the classical
//! `ln(rows) + 1` approximation guarantee, an exhaustive search that returns
//! a true minimum cover, and a variational route that minimizes the
//! set-cover energy encoding and classically repairs any uncovered rows.

use thiserror::Error;

use crate::qaoa::{self, AnnealConfig, QaoaConfig, QaoaError};
use crate::qubo::{choose_penalties, choose_widths, encode_set_cover, AffineExpr, QuboError};

/// Exhaustive selection refuses instances with more columns than this.
pub const EXACT_COLUMNS_CAP: usize = 24;

/// Violation tolerance: a cut excludes a trial when its value there exceeds
/// this.
pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CutselError {
    #[error("cover instance needs at least one trial and one cut")]
    EmptyInstance,
    #[error("trial {trial} violates no cut — the cut set cannot exclude it")]
    TrialViolatesNothing { trial: usize },
    #[error("trial {trial} has {got} bits, cuts expect {expected}")]
    TrialLength {
        trial: usize,
        got: usize,
        expected: usize,
    },
    #[error("{got} columns exceed the {EXACT_COLUMNS_CAP}-column exhaustive cap")]
    TooManyColumns { got: usize },
    #[error(transparent)]
    Qaoa(#[from] QaoaError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

/// Binary violation matrix: `matrix[r][k] = 1` iff cut `k` is violated by
/// trial `r`. Row `r` is trial `trial_ids[r]`; column `k` is cut
/// `cut_ids[k]` in the caller's numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverInstance {
    pub matrix: Vec<Vec<u8>>,
    pub trial_ids: Vec<usize>,
    pub cut_ids: Vec<usize>,
}

impl CoverInstance {
    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn columns(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    /// Does this column set cover every row?
    pub fn is_cover(&self, columns: &[usize]) -> bool {
        self.matrix
            .iter()
            .all(|row| columns.iter().any(|&k| row[k] == 1))
    }
}

/// Evaluate every cut at every infeasible trial and mark the violations.
/// Every trial must be excluded by at least one cut; a trial violating
/// nothing means the caller fed an inconsistent pair and is reported as an
/// error, never papered over.
pub fn build_cover_matrix(
    cuts: &[AffineExpr],
    trials: &[Vec<u8>],
) -> Result<CoverInstance, CutselError> {
    if cuts.is_empty() || trials.is_empty() {
        return Err(CutselError::EmptyInstance);
    }
    let m = cuts[0].coefficients.len();
    let mut matrix = Vec::with_capacity(trials.len());
    for (r, trial) in trials.iter().enumerate() {
        if trial.len() != m {
            return Err(CutselError::TrialLength {
                trial: r,
                got: trial.len(),
                expected: m,
            });
        }
        let row: Vec<u8> = cuts
            .iter()
            .map(|cut| u8::from(cut.evaluate(trial) > VIOLATION_TOL))
            .collect();
        if row.iter().all(|&v| v == 0) {
            return Err(CutselError::TrialViolatesNothing { trial: r });
        }
        matrix.push(row);
    }
    Ok(CoverInstance {
        matrix,
        trial_ids: (0..trials.len()).collect(),
        cut_ids: (0..cuts.len()).collect(),
    })
}

/// Which selector to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMethod {
    /// Pick the column covering the most uncovered rows until done;
    /// `ln(rows) + 1` approximation guarantee, ties to the lowest column.
    Greedy,
    /// True minimum cover by subset enumeration (≤ [`EXACT_COLUMNS_CAP`]
    /// columns), ties to the lexicographically smallest pick vector.
    QuboExact,
    /// Minimize the set-cover energy encoding with the variational backend
    /// (annealing beyond its qubit cap), then repair uncovered rows
    /// greedily.
    QuboQaoa,
}

/// A chosen subset of columns, always a valid cover.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Column indices into the instance, ascending.
    pub chosen: Vec<usize>,
    /// Notes from the variational route (backend fallback, repair).
    pub notice: Option<String>,
}

fn greedy_cover(inst: &CoverInstance) -> Vec<usize> {
    let rows = inst.rows();
    let cols = inst.columns();
    let mut covered = vec![false; rows];
    let mut chosen = Vec::new();
    while covered.iter().any(|&c| !c) {
        let mut best_col = 0usize;
        let mut best_gain = 0usize;
        for k in 0..cols {
            let gain = (0..rows)
                .filter(|&r| !covered[r] && inst.matrix[r][k] == 1)
                .count();
            if gain > best_gain {
                best_gain = gain;
                best_col = k;
            }
        }
        debug_assert!(best_gain > 0, "uncoverable row slipped past validation");
        chosen.push(best_col);
        for r in 0..rows {
            if inst.matrix[r][best_col] == 1 {
                covered[r] = true;
            }
        }
    }
    chosen.sort_unstable();
    chosen
}

fn exact_cover(inst: &CoverInstance) -> Result<Vec<usize>, CutselError> {
    let cols = inst.columns();
    if cols > EXACT_COLUMNS_CAP {
        return Err(CutselError::TooManyColumns { got: cols });
    }
    // Row masks over columns for O(1) cover checks.
    let row_masks: Vec<u64> = inst
        .matrix
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|&(_, &v)| v == 1)
                .fold(0u64, |m, (k, _)| m | (1u64 << k))
        })
        .collect();
    let mut best: Option<u64> = None;
    let mut best_count = u32::MAX;
    // Subsets in increasing binary value with column 0 as the most
    // significant bit, so the first minimum found is the lexicographically
    // smallest pick vector — the same tie rule the exhaustive energy
    // minimizer uses.
    for v in 0..(1u64 << cols) {
        let count = v.count_ones();
        if count >= best_count {
            continue;
        }
        let mask: u64 = (0..cols)
            .filter(|&j| (v >> (cols - 1 - j)) & 1 == 1)
            .fold(0u64, |m, j| m | (1u64 << j));
        if row_masks.iter().all(|&rm| rm & mask != 0) {
            best = Some(mask);
            best_count = count;
        }
    }
    let mask = best.expect("validated instances always have the all-columns cover");
    Ok((0..cols).filter(|&k| (mask >> k) & 1 == 1).collect())
}

fn variational_cover(inst: &CoverInstance, seed: u64) -> Result<(Vec<usize>, Option<String>), CutselError> {
    let widths = choose_widths(&[], &[], &[], Some(&inst.matrix), None, 0)?;
    let penalties = choose_penalties(&[], &widths, inst.columns());
    let enc = encode_set_cover(&inst.matrix, &widths, penalties.cover)?;
    let qcfg = QaoaConfig {
        seed,
        ..QaoaConfig::default()
    };
    let acfg = AnnealConfig {
        seed,
        ..AnnealConfig::default()
    };
    let out = qaoa::solve_quantum_or_anneal(&enc.qubo, &qcfg, &acfg)?;
    let mut chosen = enc.decode_selected(&out.best.bits);
    let mut notice = out.notice;
    if !inst.is_cover(&chosen) {
        // Classical repair: cover the leftover rows greedily. The energy
        // minimizer proposes, the repair guarantees.
        let leftover: Vec<usize> = (0..inst.rows())
            .filter(|&r| !chosen.iter().any(|&k| inst.matrix[r][k] == 1))
            .collect();
        let sub = CoverInstance {
            matrix: leftover.iter().map(|&r| inst.matrix[r].clone()).collect(),
            trial_ids: leftover.clone(),
            cut_ids: inst.cut_ids.clone(),
        };
        let extra = greedy_cover(&sub);
        let repaired = extra.iter().filter(|k| !chosen.contains(k)).count();
        chosen.extend(extra);
        chosen.sort_unstable();
        chosen.dedup();
        let msg = format!("repaired {repaired} uncovered rows greedily");
        notice = Some(match notice {
            Some(n) => format!("{n}; {msg}"),
            None => msg,
        });
    }
    Ok((chosen, notice))
}

/// Select a covering subset of cuts. The result is always a valid cover of
/// every row; `Greedy` and `QuboExact` are deterministic, `QuboQaoa` is
/// deterministic for a fixed seed.
pub fn select_cover(
    inst: &CoverInstance,
    method: SelectMethod,
    seed: u64,
) -> Result<Selection, CutselError> {
    if inst.rows() == 0 || inst.columns() == 0 {
        return Err(CutselError::EmptyInstance);
    }
    for (r, row) in inst.matrix.iter().enumerate() {
        if row.len() != inst.columns() {
            return Err(CutselError::TrialLength {
                trial: r,
                got: row.len(),
                expected: inst.columns(),
            });
        }
        if row.iter().all(|&v| v == 0) {
            return Err(CutselError::TrialViolatesNothing { trial: r });
        }
    }
    let (chosen, notice) = match method {
        SelectMethod::Greedy => (greedy_cover(inst), None),
        SelectMethod::QuboExact => (exact_cover(inst)?, None),
        SelectMethod::QuboQaoa => variational_cover(inst, seed)?,
    };
    debug_assert!(inst.is_cover(&chosen));
    Ok(Selection { chosen, notice })
}
