//! Aggregation of probabilistic expert opinions.
//!
//! The centerpiece is the *consensual* linear opinion pool: experts
//! iteratively revise their probability vectors, each step weighting peers
//! inversely to the root-mean-square distance between opinions, until all
//! opinions coincide. Two baselines (plain averaging and the
//! inverse-KL-divergence pool of Barlow et al.) share the same linear-pool
//! machinery, and a scoring/evaluation layer provides the quadratic scoring
//! rule, accuracy metrics, and a left-tailed Wilcoxon signed-rank test for
//! benchmarking the methods against each other.
//!
//! Module map:
//!
//! - [`opinion`] — probability vectors, row-stochastic matrices, and the
//!   `delta`/`gamma` functionals that define consensus.
//! - [`distance`] — RMSD and Kullback-Leibler divergence between opinions.
//! - [`pooling`] — the consensual pool, the average and BMS baselines, and
//!   the generic weighted linear pool they instantiate.
//! - [`scoring`] — quadratic scoring rule, affine transforms, expected
//!   scores, and the weight/score effectiveness audit.
//! - [`evaluation`] — accuracy metrics, the Wilcoxon signed-rank test, and a
//!   seedable synthetic panel generator.

pub mod distance;
pub mod evaluation;
pub mod opinion;
pub mod pooling;
pub mod scoring;

pub use opinion::{delta, gamma, MatrixError, Opinion, OpinionError, OpinionPanel, WeightMatrix};
pub use pooling::{
    average_pool, bms_pool, consensual_pool, consensual_step, consensual_weights,
    effective_weights, linear_pool, ConsensusResult, PoolConfig, PoolError,
};
