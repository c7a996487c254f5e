//! Probability vectors, row-stochastic matrices, and the consensus
//! functionals `delta` and `gamma`.
//!
//! An [`Opinion`] is one expert's probability vector over `z >= 2` mutually
//! exclusive outcomes. An [`OpinionPanel`] stacks `n` opinions into the
//! row-stochastic matrix `F`; a [`WeightMatrix`] is the square row-stochastic
//! matrix of peer weights used for one revision step. Consensus is the state
//! where all rows of the panel coincide, detected via [`delta`]: half the
//! maximum L1 distance between any two rows, which is zero exactly when the
//! rows are identical.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on row sums when validating probability vectors.
///
/// Text-parsed decimal inputs rarely sum to exactly 1; anything within this
/// slack is accepted as stochastic. Entries themselves must lie in `[0, 1]`
/// exactly.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Validation failure for a single probability vector.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpinionError {
    #[error("opinion must cover at least 2 outcomes, got {0}")]
    DimensionTooSmall(usize),
    #[error("entry {index} is {value}, outside [0, 1]")]
    EntryOutOfRange { index: usize, value: f64 },
    #[error("entries sum to {sum}, not 1 (tolerance {ROW_SUM_TOLERANCE:e})")]
    SumNotOne { sum: f64 },
}

/// Validation failure for a row-stochastic matrix.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix has no rows")]
    Empty,
    #[error("row {row} has {got} entries, row 0 has {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix must be square, got {rows} rows of width {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("row {row}, entry {index} is {value}, outside [0, 1]")]
    EntryOutOfRange {
        row: usize,
        index: usize,
        value: f64,
    },
    #[error("row {row} sums to {sum}, not 1 (tolerance {ROW_SUM_TOLERANCE:e})")]
    RowSumNotOne { row: usize, sum: f64 },
}

/// One expert's probability vector over `z >= 2` outcomes.
///
/// Construction validates; entries are never silently renormalized. Callers
/// that want renormalization must do it explicitly before constructing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Opinion {
    probs: Vec<f64>,
}

impl Opinion {
    /// Validates `raw` as a probability vector: length at least 2, every
    /// entry in `[0, 1]`, entries summing to 1 within [`ROW_SUM_TOLERANCE`].
    pub fn new(raw: Vec<f64>) -> Result<Self, OpinionError> {
        if raw.len() < 2 {
            return Err(OpinionError::DimensionTooSmall(raw.len()));
        }
        for (index, &value) in raw.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(OpinionError::EntryOutOfRange { index, value });
            }
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(OpinionError::SumNotOne { sum });
        }
        Ok(Self { probs: raw })
    }

    /// Wraps entries produced by internal simplex arithmetic (convex
    /// combinations, renormalization).
    ///
    /// The inputs are mathematically a probability vector; only rounding can
    /// perturb them, so this skips the strict entry checks.
    pub(crate) fn from_simplex_arithmetic(probs: Vec<f64>) -> Self {
        debug_assert!(probs.len() >= 2);
        debug_assert!(probs.iter().all(|p| (-1e-12..=1.0 + 1e-12).contains(p)));
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        Self { probs }
    }

    /// Number of outcomes `z`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability assigned to `outcome` (0-based), if in range.
    pub fn prob(&self, outcome: usize) -> Option<f64> {
        self.probs.get(outcome).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

impl TryFrom<Vec<f64>> for Opinion {
    type Error = OpinionError;

    fn try_from(raw: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(raw)
    }
}

impl From<Opinion> for Vec<f64> {
    fn from(opinion: Opinion) -> Self {
        opinion.probs
    }
}

impl AsRef<[f64]> for Opinion {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

/// A panel of `n >= 1` opinions over a common outcome space: the
/// row-stochastic matrix `F`, one expert per row.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionPanel {
    rows: Vec<Opinion>,
    z: usize,
}

impl OpinionPanel {
    /// Stacks already-validated opinions, checking that the panel is
    /// non-empty and all rows share the same outcome count.
    pub fn new(rows: Vec<Opinion>) -> Result<Self, MatrixError> {
        let z = rows.first().ok_or(MatrixError::Empty)?.len();
        for (row, opinion) in rows.iter().enumerate() {
            if opinion.len() != z {
                return Err(MatrixError::RaggedRows {
                    row,
                    expected: z,
                    got: opinion.len(),
                });
            }
        }
        Ok(Self { rows, z })
    }

    /// Validates a raw matrix of probabilities row by row.
    pub fn from_raw(raw: Vec<Vec<f64>>) -> Result<Self, MatrixError> {
        if raw.is_empty() {
            return Err(MatrixError::Empty);
        }
        let expected = raw[0].len();
        let mut rows = Vec::with_capacity(raw.len());
        for (row, entries) in raw.into_iter().enumerate() {
            if entries.len() != expected {
                return Err(MatrixError::RaggedRows {
                    row,
                    expected,
                    got: entries.len(),
                });
            }
            rows.push(Opinion::new(entries).map_err(|e| lift_row_error(row, e))?);
        }
        Self::new(rows)
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Opinion>) -> Self {
        debug_assert!(!rows.is_empty());
        let z = rows[0].len();
        debug_assert!(rows.iter().all(|r| r.len() == z));
        Self { rows, z }
    }

    /// Number of experts `n`.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Number of outcomes `z`.
    pub fn z(&self) -> usize {
        self.z
    }

    pub fn rows(&self) -> &[Opinion] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Opinion {
        &self.rows[i]
    }

    /// `delta` of the panel matrix; zero exactly at consensus.
    pub fn delta(&self) -> f64 {
        delta_unchecked(&self.rows)
    }

    /// `gamma` (minimum pairwise overlap) of the panel matrix.
    pub fn gamma(&self) -> f64 {
        gamma_unchecked(&self.rows)
    }
}

fn lift_row_error(row: usize, e: OpinionError) -> MatrixError {
    match e {
        OpinionError::DimensionTooSmall(got) => MatrixError::RaggedRows {
            row,
            expected: 2,
            got,
        },
        OpinionError::EntryOutOfRange { index, value } => MatrixError::EntryOutOfRange {
            row,
            index,
            value,
        },
        OpinionError::SumNotOne { sum } => MatrixError::RowSumNotOne { row, sum },
    }
}

/// Square row-stochastic matrix `P` of peer weights: entry `(i, j)` is the
/// weight expert `i` places on expert `j`'s opinion in one revision step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct WeightMatrix {
    entries: Vec<Vec<f64>>,
}

impl WeightMatrix {
    /// Validates an `n x n` matrix: square, entries in `[0, 1]`, each row
    /// summing to 1 within [`ROW_SUM_TOLERANCE`].
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self, MatrixError> {
        let n = entries.len();
        if n == 0 {
            return Err(MatrixError::Empty);
        }
        for (row, r) in entries.iter().enumerate() {
            if r.len() != n {
                return Err(MatrixError::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
            for (index, &value) in r.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) || value.is_nan() {
                    return Err(MatrixError::EntryOutOfRange { row, index, value });
                }
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(MatrixError::RowSumNotOne { row, sum });
            }
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_rows_unchecked(entries: Vec<Vec<f64>>) -> Self {
        debug_assert!(!entries.is_empty());
        debug_assert!(entries.iter().all(|r| r.len() == entries.len()));
        Self { entries }
    }

    /// Matrix order `n`.
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// Weight expert `i` assigns to expert `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn delta(&self) -> f64 {
        delta_unchecked(&self.entries)
    }

    pub fn gamma(&self) -> f64 {
        gamma_unchecked(&self.entries)
    }
}

impl TryFrom<Vec<Vec<f64>>> for WeightMatrix {
    type Error = MatrixError;

    fn try_from(entries: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<WeightMatrix> for Vec<Vec<f64>> {
    fn from(m: WeightMatrix) -> Self {
        m.entries
    }
}

/// Half the maximum L1 distance between two rows of a row-stochastic matrix.
///
/// `delta(m) = (1/2) max_{i,j} sum_k |m[i][k] - m[j][k]|`, always in
/// `[0, 1]`, and 0 exactly when all rows are identical. Defined for any
/// row-stochastic matrix, square or not.
pub fn delta<R: AsRef<[f64]>>(rows: &[R]) -> Result<f64, MatrixError> {
    validate_stochastic(rows)?;
    Ok(delta_unchecked(rows))
}

/// Minimum pairwise overlap of a row-stochastic matrix:
/// `gamma(m) = min_{i,j} sum_k min(m[i][k], m[j][k])`, in `[0, 1]`.
///
/// Complements [`delta`]: `delta(m) = 1 - gamma(m)` for every row-stochastic
/// matrix.
pub fn gamma<R: AsRef<[f64]>>(rows: &[R]) -> Result<f64, MatrixError> {
    validate_stochastic(rows)?;
    Ok(gamma_unchecked(rows))
}

fn validate_stochastic<R: AsRef<[f64]>>(rows: &[R]) -> Result<(), MatrixError> {
    if rows.is_empty() {
        return Err(MatrixError::Empty);
    }
    let expected = rows[0].as_ref().len();
    for (row, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != expected {
            return Err(MatrixError::RaggedRows {
                row,
                expected,
                got: r.len(),
            });
        }
        for (index, &value) in r.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(MatrixError::EntryOutOfRange { row, index, value });
            }
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(MatrixError::RowSumNotOne { row, sum });
        }
    }
    Ok(())
}

// Pair loops include i == j so that single-row matrices get the consistent
// values delta = 0, gamma = 1 without a special case.

pub(crate) fn delta_unchecked<R: AsRef<[f64]>>(rows: &[R]) -> f64 {
    let mut max = 0.0f64;
    for i in 0..rows.len() {
        let a = rows[i].as_ref();
        for b in rows[i + 1..].iter() {
            let b = b.as_ref();
            let l1: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
            max = max.max(0.5 * l1);
        }
    }
    max.min(1.0)
}

pub(crate) fn gamma_unchecked<R: AsRef<[f64]>>(rows: &[R]) -> f64 {
    let mut min = 1.0f64;
    for i in 0..rows.len() {
        let a = rows[i].as_ref();
        for b in rows[i..].iter() {
            let b = b.as_ref();
            let overlap: f64 = a.iter().zip(b).map(|(x, y)| x.min(*y)).sum();
            min = min.min(overlap);
        }
    }
    min.clamp(0.0, 1.0)
}
