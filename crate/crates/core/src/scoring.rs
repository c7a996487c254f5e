//! The quadratic scoring rule, its affine transforms, expected scores, and
//! the audit tying distance-derived weights to expected scores.
//!
//! The quadratic rule `R(f, e) = 2 f_e - sum_k f_k^2` is strictly proper:
//! an expert maximizes their expected score exactly by reporting their true
//! belief. It is also *effective* with respect to the consensual weights:
//! expert `i` assigns a higher weight to peer `j` than to peer `k` exactly
//! when reporting `j`'s opinion would give `i` a higher expected score than
//! reporting `k`'s. [`effectiveness_audit`] checks that biconditional
//! exhaustively and returns the disagreements; it is expected to return
//! none, which makes it a cheap self-check for the weighting rule.

use thiserror::Error;

use crate::opinion::{Opinion, OpinionPanel};
use crate::pooling::{consensual_weights, PoolError};

/// Strict-order disagreements closer than this, on either the weight or the
/// expected-score side, count as ties and are never violations.
pub const EFFECTIVENESS_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("outcome index {index} out of range for {z} outcomes")]
    OutcomeOutOfRange { index: usize, z: usize },
    #[error("affine scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("believer has {believer} outcomes, reported opinion has {reported}")]
    DimensionMismatch { believer: usize, reported: usize },
    #[error(transparent)]
    Pool(#[from] PoolError),
}

/// One strict-order disagreement between a weight comparison and the
/// corresponding expected-score comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivenessViolation {
    /// Expert whose weights and expected scores are compared.
    pub evaluator: usize,
    /// The two peers `(j, k)` being ranked.
    pub pair: (usize, usize),
    /// `(p[i][j], p[i][k])`.
    pub weight_order: (f64, f64),
    /// Expected scores of reporting `f_j` and `f_k` under belief `f_i`.
    pub expected_score_order: (f64, f64),
}

/// Quadratic score `2 f_e - sum_k f_k^2` of a reported opinion against a
/// realized outcome (0-based index). Ranges over `[-1, 1]`.
pub fn quadratic_score(reported: &Opinion, outcome: usize) -> Result<f64, ScoreError> {
    let f_e = reported
        .prob(outcome)
        .ok_or(ScoreError::OutcomeOutOfRange {
            index: outcome,
            z: reported.len(),
        })?;
    let sum_sq: f64 = reported.as_slice().iter().map(|f| f * f).sum();
    Ok(2.0 * f_e - sum_sq)
}

/// Positive affine transform `x * quadratic_score + y` of the quadratic
/// rule; still strictly proper for any `x > 0`.
pub fn affine_score(reported: &Opinion, outcome: usize, x: f64, y: f64) -> Result<f64, ScoreError> {
    if !(x > 0.0) {
        return Err(ScoreError::NonPositiveScale(x));
    }
    Ok(x * quadratic_score(reported, outcome)? + y)
}

/// The binary contest payout `100 - 400 * p_l^2`, where `p_l` is the
/// probability the forecaster put on the eventual loser.
///
/// For two outcomes this equals `affine_score(x = 200, y = -100)`.
pub fn contest_score(prob_assigned_to_loser: f64) -> Result<f64, ScoreError> {
    let p = prob_assigned_to_loser;
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(ScoreError::ProbabilityOutOfRange(p));
    }
    Ok(100.0 - 400.0 * p * p)
}

/// Expected quadratic score of reporting `reported` when the scorer's true
/// belief is `believer`: `sum_e believer_e * quadratic_score(reported, e)`.
pub fn expected_score(believer: &Opinion, reported: &Opinion) -> Result<f64, ScoreError> {
    if believer.len() != reported.len() {
        return Err(ScoreError::DimensionMismatch {
            believer: believer.len(),
            reported: reported.len(),
        });
    }
    let mut total = 0.0;
    for (e, &b) in believer.as_slice().iter().enumerate() {
        total += b * quadratic_score(reported, e)?;
    }
    Ok(total)
}

/// Checks, for every expert `i` and every ordered peer pair `(j, k)`, that
/// `p[i][j] < p[i][k]` holds exactly when reporting `f_k` has the higher
/// expected quadratic score under belief `f_i`.
///
/// Returns every strict-order disagreement. The weighting rule guarantees
/// the biconditional, so any non-empty result indicates an implementation
/// bug — which is precisely its value as a self-check.
pub fn effectiveness_audit(
    panel: &OpinionPanel,
    epsilon: f64,
) -> Result<Vec<EffectivenessViolation>, ScoreError> {
    effectiveness_audit_affine(panel, epsilon, 1.0, 0.0)
}

/// [`effectiveness_audit`] with the expected scores taken under the affine
/// transform `x * R + y`; any `x > 0` must leave every verdict unchanged.
pub fn effectiveness_audit_affine(
    panel: &OpinionPanel,
    epsilon: f64,
    x: f64,
    y: f64,
) -> Result<Vec<EffectivenessViolation>, ScoreError> {
    if !(x > 0.0) {
        return Err(ScoreError::NonPositiveScale(x));
    }
    let weights = consensual_weights(panel, epsilon)?;
    let n = panel.n();

    // Expected affine score of expert i reporting expert j's opinion.
    let mut scores = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            scores[i][j] = x * expected_score(panel.row(i), panel.row(j))? + y;
        }
    }

    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    continue;
                }
                let (w_j, w_k) = (weights.get(i, j), weights.get(i, k));
                if (w_j - w_k).abs() < EFFECTIVENESS_TIE_TOLERANCE {
                    continue;
                }
                let (s_j, s_k) = (scores[i][j], scores[i][k]);
                if (s_j - s_k).abs() < EFFECTIVENESS_TIE_TOLERANCE {
                    continue;
                }
                if (w_j < w_k) != (s_k > s_j) {
                    violations.push(EffectivenessViolation {
                        evaluator: i,
                        pair: (j, k),
                        weight_order: (w_j, w_k),
                        expected_score_order: (s_j, s_k),
                    });
                }
            }
        }
    }
    Ok(violations)
}
