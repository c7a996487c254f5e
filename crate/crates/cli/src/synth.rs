//! Seedable synthetic dataset generation.
//!
//! Each game gets a binary ground truth with a uniformly drawn favorite
//! probability, a winner sampled from that ground truth, and a panel from
//! [`pool_core::evaluation::synthetic_panel`]: experts scattered around the
//! ground truth plus a configurable number of uniform-simplex outliers.
//! Everything derives from the master seed, so a given configuration always
//! produces the same dataset.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use pool_core::evaluation::{synthetic_panel, EvalError, GameRecord};
use pool_core::opinion::Opinion;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub games: usize,
    pub experts: usize,
    /// Gaussian scale of the per-coordinate scatter around the ground truth.
    pub noise: f64,
    /// Uniform-simplex opinions per game.
    pub outliers: usize,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("games must be at least 1")]
    NoGames,
    #[error(transparent)]
    Panel(#[from] EvalError),
    #[error("cannot write {}: {source}", path.display())]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Generates the in-memory dataset for the given parameters.
pub fn synthetic_games(params: &SynthParams) -> Result<Vec<GameRecord>, SynthError> {
    if params.games == 0 {
        return Err(SynthError::NoGames);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut games = Vec::with_capacity(params.games);
    for g in 0..params.games {
        let favorite: f64 = rng.random();
        let ground_truth = Opinion::new(vec![favorite, 1.0 - favorite]).expect("binary vector");
        let winner = if rng.random_bool(favorite) { 0 } else { 1 };
        let panel_seed: u64 = rng.random();
        let panel = synthetic_panel(
            panel_seed,
            params.experts,
            2,
            &ground_truth,
            params.noise,
            params.outliers,
        )?;
        let record = GameRecord::new(format!("G{:04}", g + 1), panel, winner)
            .expect("winner index is 0 or 1");
        games.push(record);
    }
    Ok(games)
}

/// Writes `opinions.csv` and `outcomes.csv` for the games into `dir`
/// (created if missing), in the format [`crate::dataset::load_dataset`]
/// reads. Probabilities carry 17 significant digits, so loading the files
/// reproduces the in-memory panels exactly.
pub fn write_dataset(games: &[GameRecord], dir: &Path) -> Result<(PathBuf, PathBuf), SynthError> {
    std::fs::create_dir_all(dir).map_err(|source| SynthError::Unwritable {
        path: dir.to_path_buf(),
        source,
    })?;

    let mut opinions = String::from("game_id,expert_id");
    let z = games.first().map(|g| g.panel.z()).unwrap_or(2);
    for k in 1..=z {
        let _ = write!(opinions, ",p_{k}");
    }
    opinions.push('\n');
    let mut outcomes = String::from("game_id,winner\n");

    for game in games {
        for (e, row) in game.panel.rows().iter().enumerate() {
            let _ = write!(opinions, "{},E{:03}", game.game_id, e + 1);
            for p in row.as_slice() {
                let _ = write!(opinions, ",{p:.16e}");
            }
            opinions.push('\n');
        }
        let _ = writeln!(outcomes, "{},{}", game.game_id, game.winner + 1);
    }

    let opinions_path = dir.join("opinions.csv");
    let outcomes_path = dir.join("outcomes.csv");
    std::fs::write(&opinions_path, opinions).map_err(|source| SynthError::Unwritable {
        path: opinions_path.clone(),
        source,
    })?;
    std::fs::write(&outcomes_path, outcomes).map_err(|source| SynthError::Unwritable {
        path: outcomes_path.clone(),
        source,
    })?;
    Ok((opinions_path, outcomes_path))
}
