//! Linear opinion pools: the consensual iterative method and the average
//! and BMS baselines.
//!
//! All three methods are instances of the weighted linear pool
//! `sum_i w_i f_i`. The consensual method derives its weights from opinion
//! distances and iterates: at each revision every expert re-weights all
//! peers inversely to the RMSD between their current opinions
//! (`1 / (epsilon + D)`, row-normalized) and replaces their opinion with the
//! weighted combination. The distance-driven weights shrink the spread of
//! the panel at every step, so the revisions converge to a single shared
//! opinion; the accumulated product of the per-step weight matrices yields
//! the effective weights `beta` that express that consensus as a one-shot
//! linear pool of the original opinions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{kl_divergence, rmsd_unchecked, DistanceError};
use crate::opinion::{Opinion, OpinionPanel, WeightMatrix, ROW_SUM_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoolError {
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("max_iterations must be at least 1")]
    ZeroMaxIterations,
    #[error("BMS clamp must lie strictly between 0 and 0.5, got {0}")]
    ClampOutOfRange(f64),
    #[error("weight vector has {got} entries for a panel of {expected} experts")]
    WeightLengthMismatch { expected: usize, got: usize },
    #[error("weight {index} is {value}, outside [0, 1]")]
    WeightOutOfRange { index: usize, value: f64 },
    #[error("weights sum to {sum}, not 1 (tolerance {ROW_SUM_TOLERANCE:e})")]
    WeightSumNotOne { sum: f64 },
    #[error("weight matrix is {got}x{got}, panel has {expected} experts")]
    MatrixSizeMismatch { expected: usize, got: usize },
    #[error("weight history is empty")]
    EmptyHistory,
    #[error("matrix {index} in the weight history is {got}x{got}, expected {expected}x{expected}")]
    HistorySizeMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("pool requires at least {required} experts, got {got}")]
    PanelTooSmall { required: usize, got: usize },
    /// Iteration budget exhausted with the panel spread still at or above
    /// the stopping tolerance. The near-consensus state is carried along so
    /// callers can decide whether to accept it.
    #[error("no consensus within the iteration budget (final delta {final_delta:e})")]
    DidNotConverge {
        result: Box<ConsensusResult>,
        final_delta: f64,
    },
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

/// Tuning knobs for the iterative pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    /// Small positive constant added to every distance so no weight divides
    /// by zero; also caps how dominant a zero-distance peer can become.
    pub epsilon: f64,
    /// Stop once the panel spread `delta` falls below this.
    pub tolerance: f64,
    /// Hard cap on revisions; hitting it yields [`PoolError::DidNotConverge`].
    pub max_iterations: usize,
    /// BMS recalibration bound: entries of exactly 0 become `bms_clamp`,
    /// entries of exactly 1 become `1 - bms_clamp`.
    pub bms_clamp: f64,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            tolerance: 1e-9,
            max_iterations: 1_000_000,
            bms_clamp: 0.01,
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<(), PoolError> {
        if !(self.epsilon > 0.0) {
            return Err(PoolError::NonPositiveEpsilon(self.epsilon));
        }
        if !(self.tolerance > 0.0) {
            return Err(PoolError::NonPositiveTolerance(self.tolerance));
        }
        if self.max_iterations == 0 {
            return Err(PoolError::ZeroMaxIterations);
        }
        if !(self.bms_clamp > 0.0 && self.bms_clamp < 0.5) {
            return Err(PoolError::ClampOutOfRange(self.bms_clamp));
        }
        Ok(())
    }
}

/// Outcome of a converged (or truncated) consensual run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusResult {
    /// Row 1 of the final panel. At convergence all rows agree within the
    /// stopping tolerance, so the residual inter-row spread is below that
    /// tolerance by construction.
    pub consensus: Opinion,
    /// Number of revision steps taken.
    pub iterations: usize,
    /// `delta` of the panel before any step and after each step; length
    /// `iterations + 1`, non-increasing.
    pub delta_trace: Vec<f64>,
    /// Row 1 of the accumulated product `P(t) ... P(1)`: the probability
    /// vector `beta` with `consensus = sum_j beta_j f_j(0)`.
    pub effective_weights: Vec<f64>,
    /// The weight matrix the *next* revision would use, i.e. the one
    /// computed from the final panel. At convergence every entry is `1/n`
    /// up to the residual spread; for a panel that starts consensual this
    /// is exactly the uniform matrix.
    pub final_weight_matrix: WeightMatrix,
}

/// Weighted linear pool `sum_i w_i f_i`.
///
/// `weights` must be a probability vector of length `panel.n()`. Indicator
/// weights return the selected row exactly.
pub fn linear_pool(panel: &OpinionPanel, weights: &[f64]) -> Result<Opinion, PoolError> {
    validate_weights(weights, panel.n())?;
    Ok(combine(panel, weights))
}

/// Uniform-weight pool: the plain average of the opinions.
pub fn average_pool(panel: &OpinionPanel) -> Opinion {
    let w = vec![1.0 / panel.n() as f64; panel.n()];
    combine(panel, &w)
}

/// Distance-derived weight matrix: entry `(i, j)` proportional to
/// `1 / (epsilon + D(f_i, f_j))`, rows normalized to sum to 1.
///
/// Every entry is strictly positive, and each diagonal entry is its row's
/// maximum because the self-distance is zero.
pub fn consensual_weights(panel: &OpinionPanel, epsilon: f64) -> Result<WeightMatrix, PoolError> {
    if !(epsilon > 0.0) {
        return Err(PoolError::NonPositiveEpsilon(epsilon));
    }
    let n = panel.n();
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<f64> = (0..n)
            .map(|j| {
                let d = rmsd_unchecked(panel.row(i).as_slice(), panel.row(j).as_slice());
                1.0 / (epsilon + d)
            })
            .collect();
        let sum: f64 = row.iter().sum();
        for w in row.iter_mut() {
            *w /= sum;
        }
        entries.push(row);
    }
    Ok(WeightMatrix::from_rows_unchecked(entries))
}

/// One synchronous revision with a fixed weight matrix: `P * F`.
///
/// Every updated row is computed from the pre-step panel; iterating a
/// constant matrix reproduces the classic fixed-weight updating scheme.
pub fn apply_weights(panel: &OpinionPanel, weights: &WeightMatrix) -> Result<OpinionPanel, PoolError> {
    if weights.n() != panel.n() {
        return Err(PoolError::MatrixSizeMismatch {
            expected: panel.n(),
            got: weights.n(),
        });
    }
    let rows = weights.rows().iter().map(|w| combine(panel, w)).collect();
    Ok(OpinionPanel::from_rows_unchecked(rows))
}

/// One consensual revision: recompute the distance-derived weights from the
/// current panel, then apply them.
pub fn consensual_step(panel: &OpinionPanel, epsilon: f64) -> Result<OpinionPanel, PoolError> {
    let weights = consensual_weights(panel, epsilon)?;
    apply_weights(panel, &weights)
}

/// Runs consensual revisions until the panel spread `delta` drops below
/// `config.tolerance`, or fails with [`PoolError::DidNotConverge`] after
/// `config.max_iterations` steps.
pub fn consensual_pool(
    panel: &OpinionPanel,
    config: &PoolConfig,
) -> Result<ConsensusResult, PoolError> {
    config.validate()?;
    let n = panel.n();
    let mut current = panel.clone();
    let mut trace = vec![current.delta()];
    let mut product = identity(n);
    let mut iterations = 0usize;

    while *trace.last().expect("trace is never empty") >= config.tolerance
        && iterations < config.max_iterations
    {
        let step_weights = consensual_weights(&current, config.epsilon)?;
        current = apply_weights(&current, &step_weights)?;
        product = matmul(step_weights.rows(), &product);
        iterations += 1;
        trace.push(current.delta());
    }

    let final_delta = *trace.last().expect("trace is never empty");
    let final_weight_matrix = consensual_weights(&current, config.epsilon)?;
    let result = ConsensusResult {
        consensus: current.row(0).clone(),
        iterations,
        delta_trace: trace,
        effective_weights: product.swap_remove(0),
        final_weight_matrix,
    };
    if final_delta >= config.tolerance {
        return Err(PoolError::DidNotConverge {
            result: Box::new(result),
            final_delta,
        });
    }
    Ok(result)
}

/// Row 1 of `P(t) * P(t-1) * ... * P(1)` for a chronological sequence of
/// weight matrices: the effective weights that compress the whole revision
/// history into a single linear pool.
pub fn effective_weights(weight_history: &[WeightMatrix]) -> Result<Vec<f64>, PoolError> {
    let first = weight_history.first().ok_or(PoolError::EmptyHistory)?;
    let n = first.n();
    for (index, m) in weight_history.iter().enumerate() {
        if m.n() != n {
            return Err(PoolError::HistorySizeMismatch {
                index,
                expected: n,
                got: m.n(),
            });
        }
    }
    // beta^T = e_1^T P(t) ... P(1): fold right-to-left as row-vector
    // products, newest matrix first.
    let mut beta = vec![0.0; n];
    beta[0] = 1.0;
    for m in weight_history.iter().rev() {
        let mut next = vec![0.0; n];
        for (k, &b) in beta.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            for (j, next_j) in next.iter_mut().enumerate() {
                *next_j += b * m.get(k, j);
            }
        }
        beta = next;
    }
    Ok(beta)
}

/// The pool of Barlow et al.: weight each opinion inversely to its
/// Kullback-Leibler divergence from the opinion most distant to it.
///
/// Opinions are first recalibrated so the divergence stays finite: entries
/// of exactly 0 become `clamp`, entries of exactly 1 become `1 - clamp`,
/// and any row that was touched is renormalized. The pool aggregates the
/// recalibrated opinions. If all recalibrated opinions are identical the
/// inverse-divergence weights are undefined; the pool falls back to uniform
/// weights (the output is forced either way) and logs a warning.
pub fn bms_pool(panel: &OpinionPanel, clamp: f64) -> Result<Opinion, PoolError> {
    if !(clamp > 0.0 && clamp < 0.5) {
        return Err(PoolError::ClampOutOfRange(clamp));
    }
    if panel.n() < 2 {
        return Err(PoolError::PanelTooSmall {
            required: 2,
            got: panel.n(),
        });
    }
    let recalibrated = recalibrate(panel, clamp);
    let n = recalibrated.n();

    let mut peaks = Vec::with_capacity(n);
    for i in 0..n {
        let mut peak = 0.0f64;
        for j in 0..n {
            let d = kl_divergence(recalibrated.row(i), recalibrated.row(j))?;
            peak = peak.max(d);
        }
        peaks.push(peak);
    }

    let weights = if peaks.iter().any(|&p| p == 0.0) {
        log::warn!(
            "BMS pool: all {n} opinions identical after recalibration; using uniform weights"
        );
        vec![1.0 / n as f64; n]
    } else {
        weights_from_peak_divergences(&peaks)
    };
    Ok(combine(&recalibrated, &weights))
}

/// Normalized inverse-divergence weights `w_i = c / peak_i`.
///
/// Scaling every divergence by the same positive constant (e.g. a change of
/// logarithm base) cancels in the normalization.
pub(crate) fn weights_from_peak_divergences(peaks: &[f64]) -> Vec<f64> {
    let mut weights: Vec<f64> = peaks.iter().map(|&p| 1.0 / p).collect();
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= sum;
    }
    weights
}

fn recalibrate(panel: &OpinionPanel, clamp: f64) -> OpinionPanel {
    let rows = panel
        .rows()
        .iter()
        .map(|row| {
            let mut entries = row.as_slice().to_vec();
            let mut touched = false;
            for e in entries.iter_mut() {
                if *e == 0.0 {
                    *e = clamp;
                    touched = true;
                } else if *e == 1.0 {
                    *e = 1.0 - clamp;
                    touched = true;
                }
            }
            if touched {
                let sum: f64 = entries.iter().sum();
                for e in entries.iter_mut() {
                    *e /= sum;
                }
                Opinion::from_simplex_arithmetic(entries)
            } else {
                row.clone()
            }
        })
        .collect();
    OpinionPanel::from_rows_unchecked(rows)
}

fn validate_weights(weights: &[f64], n: usize) -> Result<(), PoolError> {
    if weights.len() != n {
        return Err(PoolError::WeightLengthMismatch {
            expected: n,
            got: weights.len(),
        });
    }
    for (index, &value) in weights.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(PoolError::WeightOutOfRange { index, value });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(PoolError::WeightSumNotOne { sum });
    }
    Ok(())
}

/// Convex combination of the panel rows. Coordinates are clipped at 1.0:
/// the exact combination cannot exceed it, only rounding can.
fn combine(panel: &OpinionPanel, weights: &[f64]) -> Opinion {
    let mut probs = vec![0.0; panel.z()];
    for (w, row) in weights.iter().zip(panel.rows()) {
        for (p, x) in probs.iter_mut().zip(row.as_slice()) {
            *p += w * x;
        }
    }
    for p in probs.iter_mut() {
        *p = p.min(1.0);
    }
    Opinion::from_simplex_arithmetic(probs)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// Plain row-times-column product of an `n x n` matrix with an `n x m` one.
fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for (out_row, a_row) in out.iter_mut().zip(a) {
        for (k, &aik) in a_row.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(&b[k]) {
                *o += aik * bkj;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn op(v: &[f64]) -> Opinion {
        Opinion::new(v.to_vec()).unwrap()
    }

    /// The worked three-expert example: f1 = (0.9, 0.1), f2 = (0.05, 0.95),
    /// f3 = (0.2, 0.8).
    fn example_panel() -> OpinionPanel {
        OpinionPanel::new(vec![
            op(&[0.9, 0.1]),
            op(&[0.05, 0.95]),
            op(&[0.2, 0.8]),
        ])
        .unwrap()
    }

    fn assert_opinion_close(actual: &Opinion, expected: &[f64], epsilon: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.as_slice().iter().zip(expected) {
            assert_abs_diff_eq!(a, e, epsilon = epsilon);
        }
    }

    #[test]
    fn linear_pool_uniform_matches_example() {
        let panel = example_panel();
        let w = [1.0 / 3.0; 3];
        let pooled = linear_pool(&panel, &w).unwrap();
        assert_opinion_close(&pooled, &[0.3833, 0.6167], 1e-4);
    }

    #[test]
    fn linear_pool_indicator_weights_select_row_exactly() {
        let panel = example_panel();
        for i in 0..3 {
            let mut w = vec![0.0; 3];
            w[i] = 1.0;
            let pooled = linear_pool(&panel, &w).unwrap();
            assert_eq!(pooled, *panel.row(i));
        }
    }

    #[test]
    fn linear_pool_symmetric_point_masses() {
        let panel = OpinionPanel::new(vec![op(&[1.0, 0.0]), op(&[0.0, 1.0])]).unwrap();
        let pooled = linear_pool(&panel, &[0.5, 0.5]).unwrap();
        assert_eq!(pooled.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn linear_pool_rejects_bad_weights() {
        let panel = example_panel();
        assert_eq!(
            linear_pool(&panel, &[0.5, 0.5]),
            Err(PoolError::WeightLengthMismatch {
                expected: 3,
                got: 2
            })
        );
        assert!(matches!(
            linear_pool(&panel, &[0.5, 0.6, -0.1]),
            Err(PoolError::WeightOutOfRange { index: 2, .. })
        ));
        assert!(matches!(
            linear_pool(&panel, &[0.5, 0.4, 0.2]),
            Err(PoolError::WeightSumNotOne { .. })
        ));
    }

    #[test]
    fn consensual_weights_match_example_matrix() {
        let weights = consensual_weights(&example_panel(), 0.01).unwrap();
        let expected = [
            [0.975, 0.011, 0.014],
            [0.011, 0.931, 0.058],
            [0.013, 0.058, 0.929],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(weights.get(i, j), expected[i][j], epsilon = 1e-3);
            }
        }
    }

    #[test]
    fn consensual_weights_single_expert() {
        let panel = OpinionPanel::new(vec![op(&[0.4, 0.6])]).unwrap();
        let weights = consensual_weights(&panel, 0.01).unwrap();
        assert_eq!(weights.rows(), &[vec![1.0]]);
    }

    #[test]
    fn consensual_weights_identical_opinions_are_uniform() {
        let panel = OpinionPanel::new(vec![op(&[0.3, 0.7]); 4]).unwrap();
        let weights = consensual_weights(&panel, 0.01).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(weights.get(i, j), 0.25, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn consensual_weights_diagonal_dominance() {
        let panel = example_panel();
        for &epsilon in &[1e-2, 1e-4] {
            let weights = consensual_weights(&panel, epsilon).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!(weights.get(i, i) >= weights.get(i, j));
                }
            }
        }
    }

    #[test]
    fn consensual_step_matches_example() {
        let stepped = consensual_step(&example_panel(), 0.01).unwrap();
        assert_opinion_close(stepped.row(0), &[0.8809, 0.1191], 1e-3);
    }

    #[test]
    fn consensual_step_fixes_identical_panels() {
        let panel = OpinionPanel::new(vec![op(&[0.25, 0.75]); 3]).unwrap();
        let stepped = consensual_step(&panel, 0.01).unwrap();
        for row in stepped.rows() {
            assert_opinion_close(row, &[0.25, 0.75], 1e-12);
        }
    }

    #[test]
    fn consensual_step_preserves_two_expert_symmetry() {
        let panel = OpinionPanel::new(vec![op(&[0.8, 0.2]), op(&[0.2, 0.8])]).unwrap();
        let stepped = consensual_step(&panel, 0.01).unwrap();
        for k in 0..2 {
            let sum = stepped.row(0).as_slice()[k] + stepped.row(1).as_slice()[k];
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn consensual_pool_reaches_example_consensus() {
        let config = PoolConfig {
            epsilon: 0.01,
            ..PoolConfig::default()
        };
        let result = consensual_pool(&example_panel(), &config).unwrap();
        assert_opinion_close(&result.consensus, &[0.3175, 0.6825], 1e-3);
        assert!(result.iterations > 0);
        assert_eq!(result.delta_trace.len(), result.iterations + 1);
        assert!(*result.delta_trace.last().unwrap() < config.tolerance);
    }

    #[test]
    fn consensual_pool_identical_panel_is_immediate() {
        let panel = OpinionPanel::new(vec![op(&[0.3, 0.7]); 3]).unwrap();
        let result = consensual_pool(&panel, &PoolConfig::default()).unwrap();
        assert_eq!(result.iterations, 0);
        assert_eq!(result.delta_trace, vec![0.0]);
        assert_eq!(result.consensus, *panel.row(0));
        assert_eq!(result.effective_weights, vec![1.0, 0.0, 0.0]);
        // next-step weights off a consensual panel are exactly uniform
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(
                    result.final_weight_matrix.get(i, j),
                    1.0 / 3.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn consensual_pool_effective_weights_reproduce_consensus() {
        let panel = example_panel();
        let config = PoolConfig {
            epsilon: 0.01,
            ..PoolConfig::default()
        };
        let result = consensual_pool(&panel, &config).unwrap();
        let beta = &result.effective_weights;
        assert_abs_diff_eq!(beta.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        // beta is not uniform even though the per-step weights approach 1/n
        assert!((beta[0] - 1.0 / 3.0).abs() > 1e-2);
        let recombined = linear_pool(&panel, beta).unwrap();
        for (r, c) in recombined
            .as_slice()
            .iter()
            .zip(result.consensus.as_slice())
        {
            assert_abs_diff_eq!(r, c, epsilon = 1e-9);
        }
    }

    #[test]
    fn consensual_pool_delta_trace_is_monotone() {
        let config = PoolConfig {
            epsilon: 0.01,
            ..PoolConfig::default()
        };
        let result = consensual_pool(&example_panel(), &config).unwrap();
        for pair in result.delta_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn consensual_pool_signals_non_convergence() {
        let config = PoolConfig {
            epsilon: 0.01,
            max_iterations: 2,
            ..PoolConfig::default()
        };
        match consensual_pool(&example_panel(), &config) {
            Err(PoolError::DidNotConverge {
                result,
                final_delta,
            }) => {
                assert_eq!(result.iterations, 2);
                assert!(final_delta >= config.tolerance);
                assert_eq!(result.delta_trace.len(), 3);
            }
            other => panic!("expected DidNotConverge, got {other:?}"),
        }
    }

    #[test]
    fn consensual_pool_rejects_bad_config() {
        let panel = example_panel();
        let bad = PoolConfig {
            epsilon: 0.0,
            ..PoolConfig::default()
        };
        assert_eq!(
            consensual_pool(&panel, &bad),
            Err(PoolError::NonPositiveEpsilon(0.0))
        );
    }

    #[test]
    fn effective_weights_single_matrix_is_first_row() {
        let m = WeightMatrix::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        assert_eq!(effective_weights(&[m]).unwrap(), vec![0.7, 0.3]);
    }

    #[test]
    fn effective_weights_uniform_matrices_stay_uniform() {
        let uniform = WeightMatrix::new(vec![vec![0.25; 4]; 4]).unwrap();
        let beta = effective_weights(&[uniform.clone(), uniform.clone(), uniform]).unwrap();
        for b in beta {
            assert_abs_diff_eq!(b, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn effective_weights_match_replayed_run() {
        // Replay the consensual iteration by hand, collect the per-step
        // matrices, and check the folded history against the pool's beta.
        let panel = example_panel();
        let config = PoolConfig {
            epsilon: 0.01,
            ..PoolConfig::default()
        };
        let result = consensual_pool(&panel, &config).unwrap();

        let mut history = Vec::new();
        let mut current = panel.clone();
        while current.delta() >= config.tolerance {
            let w = consensual_weights(&current, config.epsilon).unwrap();
            current = apply_weights(&current, &w).unwrap();
            history.push(w);
        }
        let beta = effective_weights(&history).unwrap();
        assert_eq!(beta.len(), result.effective_weights.len());
        for (a, b) in beta.iter().zip(&result.effective_weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let recombined = linear_pool(&panel, &beta).unwrap();
        for (r, c) in recombined
            .as_slice()
            .iter()
            .zip(result.consensus.as_slice())
        {
            assert_abs_diff_eq!(r, c, epsilon = 1e-9);
        }
    }

    #[test]
    fn effective_weights_rejects_empty_and_ragged_history() {
        assert_eq!(effective_weights(&[]), Err(PoolError::EmptyHistory));
        let a = WeightMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let b = WeightMatrix::new(vec![vec![1.0]]).unwrap();
        assert_eq!(
            effective_weights(&[a, b]),
            Err(PoolError::HistorySizeMismatch {
                index: 1,
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn fixed_matrix_iteration_matches_matrix_power() {
        // Iterating a constant weight matrix t times equals applying its
        // t-th power once: the two algebraic routes to the same panel.
        let panel = example_panel();
        let p = consensual_weights(&panel, 0.01).unwrap();

        let mut iterated = panel.clone();
        for _ in 0..3 {
            iterated = apply_weights(&iterated, &p).unwrap();
        }

        let p2 = matmul(p.rows(), p.rows());
        let p3 = matmul(p.rows(), &p2);
        let cubed = WeightMatrix::new(p3).unwrap();
        let direct = apply_weights(&panel, &cubed).unwrap();

        for (a, b) in iterated.rows().iter().zip(direct.rows()) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn average_pool_examples() {
        assert_opinion_close(&average_pool(&example_panel()), &[0.3833, 0.6167], 1e-4);

        let single = OpinionPanel::new(vec![op(&[0.4, 0.6])]).unwrap();
        assert_eq!(average_pool(&single), *single.row(0));

        let masses = OpinionPanel::new(vec![op(&[1.0, 0.0]), op(&[0.0, 1.0])]).unwrap();
        assert_eq!(average_pool(&masses).as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn bms_pool_symmetric_pair() {
        let panel = OpinionPanel::new(vec![op(&[0.8, 0.2]), op(&[0.2, 0.8])]).unwrap();
        let pooled = bms_pool(&panel, 0.01).unwrap();
        assert_opinion_close(&pooled, &[0.5, 0.5], 1e-12);
    }

    #[test]
    fn bms_pool_identical_opinions_fall_back_to_uniform() {
        let panel = OpinionPanel::new(vec![op(&[0.3, 0.7]); 3]).unwrap();
        let pooled = bms_pool(&panel, 0.01).unwrap();
        assert_opinion_close(&pooled, &[0.3, 0.7], 1e-12);
    }

    #[test]
    fn bms_pool_recalibrates_point_masses() {
        // (1, 0) must be clamped to (0.99, 0.01) before any divergence is
        // taken, keeping the pool finite.
        let panel = OpinionPanel::new(vec![op(&[1.0, 0.0]), op(&[0.5, 0.5])]).unwrap();
        let pooled = bms_pool(&panel, 0.01).unwrap();
        assert!(pooled.as_slice().iter().all(|p| p.is_finite()));
        assert!(pooled.as_slice()[0] > 0.5 && pooled.as_slice()[0] < 0.99);
    }

    #[test]
    fn bms_pool_rejects_undersized_panels_and_bad_clamp() {
        let single = OpinionPanel::new(vec![op(&[0.4, 0.6])]).unwrap();
        assert_eq!(
            bms_pool(&single, 0.01),
            Err(PoolError::PanelTooSmall {
                required: 2,
                got: 1
            })
        );
        let pair = OpinionPanel::new(vec![op(&[0.4, 0.6]), op(&[0.6, 0.4])]).unwrap();
        assert_eq!(bms_pool(&pair, 0.5), Err(PoolError::ClampOutOfRange(0.5)));
        assert_eq!(bms_pool(&pair, 0.0), Err(PoolError::ClampOutOfRange(0.0)));
    }

    #[test]
    fn bms_weights_are_scale_invariant() {
        // A change of logarithm base multiplies every divergence by the
        // same constant; the normalized weights must not move.
        let peaks = [0.8, 0.31, 1.7, 0.05];
        let scaled: Vec<f64> = peaks.iter().map(|p| p * std::f64::consts::LN_10).collect();
        let a = weights_from_peak_divergences(&peaks);
        let b = weights_from_peak_divergences(&scaled);
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }
}
