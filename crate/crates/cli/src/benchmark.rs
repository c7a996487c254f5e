//! Per-game method evaluation and pairwise comparison.
//!
//! Every selected method aggregates every game's panel, the aggregate is
//! scored by the probability it left on the realized loser, and each method
//! pair gets a left-tailed Wilcoxon signed-rank test on the per-game error
//! differences (first method minus second) over the games both scored.
//!
//! Two per-game conditions are recorded as skips rather than failures: a
//! consensual run that exhausts its iteration budget (the convergence
//! theorem says this should never happen, so any occurrence is itself a
//! signal and is flagged in the report) and a BMS pool on a single-expert
//! panel, where inverse-divergence weights are undefined.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use pool_core::evaluation::{
    absolute_error, wilcoxon_left_tailed, EvalError, GameRecord, GameScore, MethodResult,
    SkippedGame,
};
use pool_core::opinion::Opinion;
use pool_core::pooling::{average_pool, bms_pool, consensual_pool, PoolConfig, PoolError};

use crate::report::{
    ConvergenceInfo, EvaluationReport, MethodReport, PairwiseTest, ReportConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Method {
    Consensual,
    Average,
    Bms,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Consensual => "consensual",
            Method::Average => "average",
            Method::Bms => "bms",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub methods: Vec<Method>,
    pub pool: PoolConfig,
    /// Keep the full per-game delta traces in the report.
    pub collect_traces: bool,
}

impl BenchmarkOptions {
    pub fn new(methods: Vec<Method>) -> Self {
        Self {
            methods,
            pool: PoolConfig::default(),
            collect_traces: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("no methods selected")]
    NoMethods,
    #[error("duplicate method {0}")]
    DuplicateMethod(Method),
    #[error("no games provided")]
    NoGames,
    #[error("invalid pool configuration: {0}")]
    Config(PoolError),
    #[error("game {game}: {source}")]
    Pool {
        game: String,
        #[source]
        source: PoolError,
    },
    #[error("game {game}: {source}")]
    Eval {
        game: String,
        #[source]
        source: EvalError,
    },
}

/// Runs every selected method over every game and assembles the report.
/// Deterministic: identical games and options give identical reports.
pub fn run_benchmark(
    games: &[GameRecord],
    options: &BenchmarkOptions,
) -> Result<EvaluationReport, BenchmarkError> {
    if options.methods.is_empty() {
        return Err(BenchmarkError::NoMethods);
    }
    for (i, m) in options.methods.iter().enumerate() {
        if options.methods[..i].contains(m) {
            return Err(BenchmarkError::DuplicateMethod(*m));
        }
    }
    if games.is_empty() {
        return Err(BenchmarkError::NoGames);
    }
    options.pool.validate().map_err(BenchmarkError::Config)?;

    let mut method_reports = Vec::with_capacity(options.methods.len());
    for &method in &options.methods {
        method_reports.push(evaluate_method(method, games, options)?);
    }

    let pairwise_tests = pairwise_tests(&method_reports);

    Ok(EvaluationReport {
        games: games.len(),
        config: ReportConfig {
            methods: options.methods.iter().map(|m| m.name().into()).collect(),
            epsilon: options.pool.epsilon,
            tolerance: options.pool.tolerance,
            max_iterations: options.pool.max_iterations,
            bms_clamp: options.pool.bms_clamp,
        },
        methods: method_reports,
        pairwise_tests,
    })
}

fn evaluate_method(
    method: Method,
    games: &[GameRecord],
    options: &BenchmarkOptions,
) -> Result<MethodReport, BenchmarkError> {
    let mut per_game = Vec::with_capacity(games.len());
    let mut winners = Vec::with_capacity(games.len());
    let mut skipped = Vec::new();
    let mut convergence = Vec::new();

    for game in games {
        let aggregate: Opinion = match method {
            Method::Average => average_pool(&game.panel),
            Method::Consensual => match consensual_pool(&game.panel, &options.pool) {
                Ok(result) => {
                    convergence.push(ConvergenceInfo {
                        game_id: game.game_id.clone(),
                        iterations: result.iterations,
                        final_delta: *result.delta_trace.last().expect("non-empty trace"),
                        delta_trace: options.collect_traces.then_some(result.delta_trace),
                    });
                    result.consensus
                }
                Err(PoolError::DidNotConverge { final_delta, .. }) => {
                    skipped.push(SkippedGame {
                        game_id: game.game_id.clone(),
                        reason: format!(
                            "no consensus after {} iterations (delta {final_delta:e})",
                            options.pool.max_iterations
                        ),
                    });
                    continue;
                }
                Err(source) => {
                    return Err(BenchmarkError::Pool {
                        game: game.game_id.clone(),
                        source,
                    })
                }
            },
            Method::Bms => match bms_pool(&game.panel, options.pool.bms_clamp) {
                Ok(aggregate) => aggregate,
                Err(PoolError::PanelTooSmall { required, got }) => {
                    skipped.push(SkippedGame {
                        game_id: game.game_id.clone(),
                        reason: format!(
                            "BMS needs at least {required} experts, panel has {got}"
                        ),
                    });
                    continue;
                }
                Err(source) => {
                    return Err(BenchmarkError::Pool {
                        game: game.game_id.clone(),
                        source,
                    })
                }
            },
        };

        let error = absolute_error(&aggregate, game.winner).map_err(|source| {
            BenchmarkError::Eval {
                game: game.game_id.clone(),
                source,
            }
        })?;
        per_game.push(GameScore {
            game_id: game.game_id.clone(),
            aggregate,
            absolute_error: error,
        });
        winners.push(game.winner);
    }

    let result = MethodResult::summarize(method.name(), per_game, &winners, skipped)
        .map_err(|source| BenchmarkError::Eval {
            game: "<summary>".into(),
            source,
        })?;
    Ok(MethodReport {
        result,
        convergence: (method == Method::Consensual).then_some(convergence),
    })
}

/// Left-tailed Wilcoxon on per-game absolute-error differences for every
/// ordered method pair, restricted to games both methods scored.
fn pairwise_tests(methods: &[MethodReport]) -> Vec<PairwiseTest> {
    let mut tests = Vec::new();
    for (i, a) in methods.iter().enumerate() {
        for b in &methods[i + 1..] {
            let b_errors: HashMap<&str, f64> = b
                .result
                .per_game
                .iter()
                .map(|g| (g.game_id.as_str(), g.absolute_error))
                .collect();
            let differences: Vec<f64> = a
                .result
                .per_game
                .iter()
                .filter_map(|g| {
                    b_errors
                        .get(g.game_id.as_str())
                        .map(|be| g.absolute_error - be)
                })
                .collect();

            let (outcome, note) = if differences.is_empty() {
                (None, Some("no games scored by both methods".to_string()))
            } else {
                match wilcoxon_left_tailed(&differences) {
                    Ok(result) => (Some(result), None),
                    Err(EvalError::AllZeroDifferences) => {
                        (None, Some("all paired differences are zero".to_string()))
                    }
                    Err(other) => (None, Some(other.to_string())),
                }
            };
            tests.push(PairwiseTest {
                method_a: a.result.method_name.clone(),
                method_b: b.result.method_name.clone(),
                games_compared: differences.len(),
                outcome,
                note,
            });
        }
    }
    tests
}
