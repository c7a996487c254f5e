//! Benchmark machinery: accuracy metrics for binary events, the left-tailed
//! Wilcoxon signed-rank test, and a seedable synthetic panel generator.
//!
//! Metrics follow the forecasting-contest conventions: a *predicted
//! favorite* is an outcome given aggregate probability strictly above 0.5,
//! and the *absolute error* of a prediction is the probability it assigned
//! to the realized loser. Both are defined for two-outcome events only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opinion::{Opinion, OpinionPanel};

/// Largest number of nonzero differences for which the Wilcoxon null
/// distribution is computed exactly; above this the tie-corrected normal
/// approximation with continuity correction takes over.
pub const WILCOXON_EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("metric requires binary outcomes (z = 2), got z = {0}")]
    NotBinary(usize),
    #[error("no games provided")]
    EmptyInput,
    #[error("winner index {index} out of range for {z} outcomes")]
    WinnerOutOfRange { index: usize, z: usize },
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("difference {index} is {value}, expected a finite number")]
    NonFiniteDifference { index: usize, value: f64 },
    #[error("panel must have at least one expert")]
    EmptyPanel,
    #[error("outlier count {outliers} must be smaller than the expert count {experts}")]
    TooManyOutliers { outliers: usize, experts: usize },
    #[error("noise must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("ground truth has {got} outcomes, expected {expected}")]
    GroundTruthDimension { expected: usize, got: usize },
    #[error("got {winners} winners for {games} scored games")]
    WinnerCountMismatch { games: usize, winners: usize },
}

/// One event: the opinions reported for it and the realized outcome.
///
/// Experts who did not report for an event simply do not appear in its
/// panel, so panels of different games may have different sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct GameRecord {
    pub game_id: String,
    pub panel: OpinionPanel,
    /// Realized outcome, 0-based.
    pub winner: usize,
}

impl GameRecord {
    pub fn new(
        game_id: impl Into<String>,
        panel: OpinionPanel,
        winner: usize,
    ) -> Result<Self, EvalError> {
        if winner >= panel.z() {
            return Err(EvalError::WinnerOutOfRange {
                index: winner,
                z: panel.z(),
            });
        }
        Ok(Self {
            game_id: game_id.into(),
            panel,
            winner,
        })
    }
}

/// Favorite-accuracy counts: games whose aggregate named a favorite that
/// won, games that named any favorite, and games excluded for naming none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub correct: usize,
    pub counted: usize,
    pub excluded: usize,
}

impl AccuracySummary {
    /// `correct / counted`, undefined when no game named a favorite.
    pub fn accuracy(&self) -> Option<f64> {
        if self.counted == 0 {
            None
        } else {
            Some(self.correct as f64 / self.counted as f64)
        }
    }
}

/// Fraction of games whose predicted favorite (aggregate probability
/// strictly above 0.5) actually won. Games with no favorite are excluded
/// from both numerator and denominator.
pub fn overall_accuracy(results: &[(Opinion, usize)]) -> Result<AccuracySummary, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut summary = AccuracySummary {
        correct: 0,
        counted: 0,
        excluded: 0,
    };
    for (aggregate, winner) in results {
        check_binary(aggregate, *winner)?;
        match aggregate.as_slice().iter().position(|&p| p > 0.5) {
            Some(favorite) => {
                summary.counted += 1;
                if favorite == *winner {
                    summary.correct += 1;
                }
            }
            None => summary.excluded += 1,
        }
    }
    Ok(summary)
}

/// Probability the aggregate assigned to the losing side: `1 - p_winner`.
pub fn absolute_error(aggregate: &Opinion, winner: usize) -> Result<f64, EvalError> {
    check_binary(aggregate, winner)?;
    Ok(1.0 - aggregate.as_slice()[winner])
}

fn check_binary(aggregate: &Opinion, winner: usize) -> Result<(), EvalError> {
    if aggregate.len() != 2 {
        return Err(EvalError::NotBinary(aggregate.len()));
    }
    if winner >= 2 {
        return Err(EvalError::WinnerOutOfRange {
            index: winner,
            z: 2,
        });
    }
    Ok(())
}

/// Left-tailed Wilcoxon signed-rank test outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `W+`: sum of the ranks of the positive differences.
    pub statistic: f64,
    /// `P(W <= W+)` under the null of symmetric differences.
    pub p_value: f64,
    /// Differences remaining after exact zeros are dropped.
    pub n_nonzero: usize,
    /// Whether the exact null distribution was used (vs. the normal
    /// approximation).
    pub exact: bool,
}

/// Left-tailed Wilcoxon signed-rank test on paired differences.
///
/// Exact zeros are dropped; absolute differences are ranked with average
/// ranks for ties. A small statistic (many negative differences) gives a
/// small p-value, evidence that the first series runs below the second.
/// The null distribution is exact for up to [`WILCOXON_EXACT_LIMIT`]
/// nonzero pairs, and a tie-corrected normal approximation with continuity
/// correction beyond that.
pub fn wilcoxon_left_tailed(differences: &[f64]) -> Result<WilcoxonResult, EvalError> {
    for (index, &value) in differences.iter().enumerate() {
        if !value.is_finite() {
            return Err(EvalError::NonFiniteDifference { index, value });
        }
    }
    let nonzero: Vec<f64> = differences.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(EvalError::AllZeroDifferences);
    }

    let magnitudes: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(&d, _)| d > 0.0)
        .map(|(_, &r)| r)
        .sum();

    let m = nonzero.len();
    let (p_value, exact) = if m <= WILCOXON_EXACT_LIMIT {
        (exact_left_p(&ranks, w_plus), true)
    } else {
        (normal_left_p(&ranks, w_plus), false)
    };
    Ok(WilcoxonResult {
        statistic: w_plus,
        p_value,
        n_nonzero: m,
        exact,
    })
}

/// Ascending ranks 1..=n with average ranks for exactly-equal values.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Exact `P(W <= w_obs)`: distribution of the rank sum over all 2^m
/// equally likely sign assignments, counted by dynamic programming over
/// doubled ranks (integers even under average-rank ties).
fn exact_left_p(ranks: &[f64], w_obs: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|&r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    // W+ is a sum of exact half-integer ranks, so 2*W+ is integral.
    let threshold = (2.0 * w_obs).round() as usize;
    let favorable: u64 = counts[..=threshold.min(total)].iter().sum();
    favorable as f64 / (1u64 << ranks.len()) as f64
}

/// Normal approximation to `P(W <= w_obs)` with tie-corrected variance and
/// continuity correction.
fn normal_left_p(ranks: &[f64], w_obs: f64) -> f64 {
    let m = ranks.len() as f64;
    let mean = m * (m + 1.0) / 4.0;
    let mut variance = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0;
    variance -= tie_correction(ranks) / 48.0;
    let sigma = variance.sqrt();
    let standardized = (w_obs + 0.5 - mean) / sigma;
    standard_normal_cdf(standardized)
}

/// `sum over tie groups of (t^3 - t)` for the variance correction.
fn tie_correction(ranks: &[f64]) -> f64 {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut correction = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        correction += t * t * t - t;
        i = j;
    }
    correction
}

fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Deterministic panel around a known ground truth: the first
/// `n - outlier_count` rows perturb `ground_truth` coordinate-wise with
/// Gaussian noise of the given scale (then clamp to `[0, 1]` and
/// renormalize); the remaining rows are drawn uniformly from the simplex.
pub fn synthetic_panel(
    seed: u64,
    n: usize,
    z: usize,
    ground_truth: &Opinion,
    noise: f64,
    outlier_count: usize,
) -> Result<OpinionPanel, EvalError> {
    if n == 0 {
        return Err(EvalError::EmptyPanel);
    }
    if outlier_count >= n {
        return Err(EvalError::TooManyOutliers {
            outliers: outlier_count,
            experts: n,
        });
    }
    if ground_truth.len() != z {
        return Err(EvalError::GroundTruthDimension {
            expected: z,
            got: ground_truth.len(),
        });
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(EvalError::InvalidNoise(noise));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    if noise == 0.0 {
        rows.extend(std::iter::repeat_n(
            ground_truth.clone(),
            n - outlier_count,
        ));
    } else {
        let gaussian = Normal::new(0.0, noise).expect("validated noise scale");
        for _ in 0..n - outlier_count {
            let mut entries: Vec<f64> = ground_truth
                .as_slice()
                .iter()
                .map(|&g| (g + gaussian.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            let sum: f64 = entries.iter().sum();
            if sum > 0.0 {
                for e in entries.iter_mut() {
                    *e /= sum;
                }
            } else {
                entries = vec![1.0 / z as f64; z];
            }
            rows.push(Opinion::from_simplex_arithmetic(entries));
        }
    }
    for _ in 0..outlier_count {
        rows.push(uniform_simplex(&mut rng, z));
    }
    Ok(OpinionPanel::from_rows_unchecked(rows))
}

/// Uniform draw from the probability simplex (normalized unit
/// exponentials).
fn uniform_simplex(rng: &mut ChaCha8Rng, z: usize) -> Opinion {
    loop {
        let draws: Vec<f64> = (0..z).map(|_| Exp1.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 {
            return Opinion::from_simplex_arithmetic(draws.into_iter().map(|d| d / sum).collect());
        }
    }
}

/// One scored game inside a [`MethodResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameScore {
    pub game_id: String,
    pub aggregate: Opinion,
    pub absolute_error: f64,
}

/// A game a method could not score, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedGame {
    pub game_id: String,
    pub reason: String,
}

/// Per-method benchmark outcome: per-game aggregates and errors plus the
/// summary metrics over the games the method scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method_name: String,
    pub per_game: Vec<GameScore>,
    pub accuracy: AccuracySummary,
    /// `accuracy.correct / accuracy.counted`; absent when no scored game
    /// named a favorite.
    pub overall_accuracy: Option<f64>,
    /// Absent when the method scored no games.
    pub mean_absolute_error: Option<f64>,
    /// Sample standard deviation; absent for fewer than two scored games.
    pub stddev_absolute_error: Option<f64>,
    pub skipped_games: Vec<SkippedGame>,
}

impl MethodResult {
    /// Assembles the summary metrics from scored games (paired with their
    /// realized winners, used for the favorite-accuracy count) and skips.
    pub fn summarize(
        method_name: impl Into<String>,
        per_game: Vec<GameScore>,
        winners: &[usize],
        skipped_games: Vec<SkippedGame>,
    ) -> Result<Self, EvalError> {
        if winners.len() != per_game.len() {
            return Err(EvalError::WinnerCountMismatch {
                games: per_game.len(),
                winners: winners.len(),
            });
        }
        let accuracy = if per_game.is_empty() {
            AccuracySummary {
                correct: 0,
                counted: 0,
                excluded: 0,
            }
        } else {
            let pairs: Vec<(Opinion, usize)> = per_game
                .iter()
                .zip(winners)
                .map(|(g, &w)| (g.aggregate.clone(), w))
                .collect();
            overall_accuracy(&pairs)?
        };

        let errors: Vec<f64> = per_game.iter().map(|g| g.absolute_error).collect();
        let mean = if errors.is_empty() {
            None
        } else {
            Some(errors.iter().sum::<f64>() / errors.len() as f64)
        };
        let stddev = match (mean, errors.len()) {
            (Some(mu), len) if len >= 2 => {
                let ss: f64 = errors.iter().map(|e| (e - mu) * (e - mu)).sum();
                Some((ss / (len - 1) as f64).sqrt())
            }
            _ => None,
        };

        Ok(Self {
            method_name: method_name.into(),
            per_game,
            accuracy,
            overall_accuracy: accuracy.accuracy(),
            mean_absolute_error: mean,
            stddev_absolute_error: stddev,
            skipped_games,
        })
    }
}
