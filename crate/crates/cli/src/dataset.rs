//! CSV dataset ingestion.
//!
//! Two flat files joined on `game_id`:
//!
//! - opinions: header `game_id,expert_id,p_1,...,p_z`, one row per
//!   (game, expert). An expert absent from a game is simply absent from its
//!   rows. With a single probability column, `derive_complement` turns
//!   `p_1` into the binary opinion `(p_1, 1 - p_1)`.
//! - outcomes: header `game_id,winner`, winner a 1-based outcome index,
//!   exactly one row per game.
//!
//! Rows are validated as probability vectors and never silently repaired;
//! `renormalize` opts in to rescaling non-negative rows to sum to 1.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use pool_core::evaluation::GameRecord;
use pool_core::opinion::{Opinion, OpinionPanel};

#[derive(Debug, Default, Clone, Copy)]
pub struct LoadOptions {
    /// Rescale non-negative opinion rows to sum to 1 instead of rejecting
    /// rows whose sum is off.
    pub renormalize: bool,
    /// Accept a single probability column and derive `p_2 = 1 - p_1`.
    pub derive_complement: bool,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    BadHeader { path: PathBuf, message: String },
    #[error("{}:{line}: {message}", path.display())]
    MalformedRow {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}:{line}: opinion of expert {expert} for game {game}: {message}", path.display())]
    InvalidOpinion {
        path: PathBuf,
        line: u64,
        game: String,
        expert: String,
        message: String,
    },
    #[error("{}:{line}: duplicate opinion for game {game}, expert {expert}", path.display())]
    DuplicateOpinion {
        path: PathBuf,
        line: u64,
        game: String,
        expert: String,
    },
    #[error("{}:{line}: duplicate outcome for game {game}", path.display())]
    DuplicateOutcome {
        path: PathBuf,
        line: u64,
        game: String,
    },
    #[error("{}:{line}: winner {winner} out of range 1..={z} for game {game}", path.display())]
    WinnerOutOfRange {
        path: PathBuf,
        line: u64,
        game: String,
        winner: usize,
        z: usize,
    },
    #[error("game {game} has opinions but no outcome row")]
    MissingOutcome { game: String },
    #[error("{}:{line}: outcome for game {game}, which has no opinions (empty panel)", path.display())]
    EmptyPanel {
        path: PathBuf,
        line: u64,
        game: String,
    },
    #[error("{}: no opinion rows", path.display())]
    NoGames { path: PathBuf },
}

impl DatasetError {
    /// Which CLI stage this failure belongs to: `parse` for file-shape
    /// problems, `validate` for contract violations in well-formed files.
    pub fn stage(&self) -> &'static str {
        match self {
            DatasetError::Io { .. }
            | DatasetError::BadHeader { .. }
            | DatasetError::MalformedRow { .. } => "parse",
            _ => "validate",
        }
    }
}

struct GameBuilder {
    id: String,
    rows: Vec<Opinion>,
    experts: HashMap<String, ()>,
}

/// Parses and joins the two files into per-game records, in the order games
/// first appear in the opinions file.
pub fn load_dataset(
    opinions_path: &Path,
    outcomes_path: &Path,
    options: &LoadOptions,
) -> Result<Vec<GameRecord>, DatasetError> {
    let (mut games, index) = read_opinions(opinions_path, options)?;
    let outcomes = read_outcomes(outcomes_path)?;

    for (game, &(_, line)) in &outcomes {
        if !index.contains_key(game) {
            return Err(DatasetError::EmptyPanel {
                path: outcomes_path.to_path_buf(),
                line,
                game: game.clone(),
            });
        }
    }

    let mut records = Vec::with_capacity(games.len());
    for builder in games.drain(..) {
        let &(winner_1based, line) =
            outcomes
                .get(&builder.id)
                .ok_or_else(|| DatasetError::MissingOutcome {
                    game: builder.id.clone(),
                })?;
        let panel = OpinionPanel::new(builder.rows).expect("non-empty uniform panel");
        if winner_1based == 0 || winner_1based > panel.z() {
            return Err(DatasetError::WinnerOutOfRange {
                path: outcomes_path.to_path_buf(),
                line,
                game: builder.id,
                winner: winner_1based,
                z: panel.z(),
            });
        }
        let record = GameRecord::new(builder.id, panel, winner_1based - 1)
            .expect("winner index already checked");
        records.push(record);
    }
    Ok(records)
}

fn read_opinions(
    path: &Path,
    options: &LoadOptions,
) -> Result<(Vec<GameBuilder>, HashMap<String, usize>), DatasetError> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let z_columns = validate_opinion_header(path, &headers, options)?;

    let mut games: Vec<GameBuilder> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record_line(&record);
        if record.len() != 2 + z_columns {
            return Err(DatasetError::MalformedRow {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} fields, got {}", 2 + z_columns, record.len()),
            });
        }
        let game_id = record[0].trim().to_string();
        let expert_id = record[1].trim().to_string();
        if game_id.is_empty() || expert_id.is_empty() {
            return Err(DatasetError::MalformedRow {
                path: path.to_path_buf(),
                line,
                message: "empty game_id or expert_id".into(),
            });
        }

        let mut raw = Vec::with_capacity(z_columns.max(2));
        for (offset, field) in record.iter().skip(2).enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| DatasetError::MalformedRow {
                path: path.to_path_buf(),
                line,
                message: format!("field p_{} is not a number: {field:?}", offset + 1),
            })?;
            raw.push(value);
        }
        if options.derive_complement && raw.len() == 1 {
            raw.push(1.0 - raw[0]);
        }

        let opinion =
            build_opinion(raw, options.renormalize).map_err(|message| DatasetError::InvalidOpinion {
                path: path.to_path_buf(),
                line,
                game: game_id.clone(),
                expert: expert_id.clone(),
                message,
            })?;

        let game_idx = match index.entry(game_id.clone()) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                games.push(GameBuilder {
                    id: game_id.clone(),
                    rows: Vec::new(),
                    experts: HashMap::new(),
                });
                *e.insert(games.len() - 1)
            }
        };
        let game = &mut games[game_idx];
        if game.experts.insert(expert_id.clone(), ()).is_some() {
            return Err(DatasetError::DuplicateOpinion {
                path: path.to_path_buf(),
                line,
                game: game_id,
                expert: expert_id,
            });
        }
        game.rows.push(opinion);
    }

    if games.is_empty() {
        return Err(DatasetError::NoGames {
            path: path.to_path_buf(),
        });
    }
    Ok((games, index))
}

fn read_outcomes(path: &Path) -> Result<HashMap<String, (usize, u64)>, DatasetError> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers.len() != 2
        || headers[0].trim() != "game_id"
        || headers[1].trim() != "winner"
    {
        return Err(DatasetError::BadHeader {
            path: path.to_path_buf(),
            message: format!("expected header game_id,winner, got {headers:?}"),
        });
    }

    let mut outcomes = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record_line(&record);
        if record.len() != 2 {
            return Err(DatasetError::MalformedRow {
                path: path.to_path_buf(),
                line,
                message: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let game_id = record[0].trim().to_string();
        let winner: usize = record[1].trim().parse().map_err(|_| DatasetError::MalformedRow {
            path: path.to_path_buf(),
            line,
            message: format!("winner is not a positive integer: {:?}", &record[1]),
        })?;
        if outcomes.insert(game_id.clone(), (winner, line)).is_some() {
            return Err(DatasetError::DuplicateOutcome {
                path: path.to_path_buf(),
                line,
                game: game_id,
            });
        }
    }
    Ok(outcomes)
}

fn validate_opinion_header(
    path: &Path,
    headers: &csv::StringRecord,
    options: &LoadOptions,
) -> Result<usize, DatasetError> {
    let bad = |message: String| DatasetError::BadHeader {
        path: path.to_path_buf(),
        message,
    };
    if headers.len() < 3 {
        return Err(bad(format!(
            "expected header game_id,expert_id,p_1,..., got {headers:?}"
        )));
    }
    if headers[0].trim() != "game_id" || headers[1].trim() != "expert_id" {
        return Err(bad(format!(
            "expected header to start with game_id,expert_id, got {headers:?}"
        )));
    }
    let z_columns = headers.len() - 2;
    for k in 0..z_columns {
        let expected = format!("p_{}", k + 1);
        if headers[k + 2].trim() != expected {
            return Err(bad(format!(
                "expected probability column {expected}, got {:?}",
                &headers[k + 2]
            )));
        }
    }
    if z_columns == 1 && !options.derive_complement {
        return Err(bad(
            "a single probability column needs --derive-complement to supply p_2 = 1 - p_1"
                .into(),
        ));
    }
    Ok(z_columns)
}

fn build_opinion(raw: Vec<f64>, renormalize: bool) -> Result<Opinion, String> {
    if !renormalize {
        return Opinion::new(raw).map_err(|e| e.to_string());
    }
    if raw.len() < 2 {
        return Err(format!("opinion must cover at least 2 outcomes, got {}", raw.len()));
    }
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(format!(
                "entry {index} is {value}; renormalization requires finite non-negative entries"
            ));
        }
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        return Err("row has zero total mass, cannot renormalize".into());
    }
    Opinion::new(raw.into_iter().map(|x| x / sum).collect()).map_err(|e| e.to_string())
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, DatasetError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => DatasetError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => DatasetError::BadHeader {
                path: path.to_path_buf(),
                message: format!("{other:?}"),
            },
        })
}

fn csv_error(path: &Path, e: csv::Error) -> DatasetError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => DatasetError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => DatasetError::MalformedRow {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_minimal_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let opinions = write_file(
            dir.path(),
            "opinions.csv",
            "game_id,expert_id,p_1,p_2\nG1,E1,0.9,0.1\nG1,E2,0.05,0.95\nG1,E3,0.2,0.8\n",
        );
        let outcomes = write_file(dir.path(), "outcomes.csv", "game_id,winner\nG1,1\n");
        let games = load_dataset(&opinions, &outcomes, &LoadOptions::default()).unwrap();
        assert_eq!(games.len(), 1);
        assert_eq!(games[0].game_id, "G1");
        assert_eq!(games[0].panel.n(), 3);
        assert_eq!(games[0].winner, 0);
        assert_eq!(games[0].panel.row(0).as_slice(), &[0.9, 0.1]);
    }

    #[test]
    fn aborts_on_invalid_row_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let opinions = write_file(
            dir.path(),
            "opinions.csv",
            "game_id,expert_id,p_1,p_2\nG1,E1,0.9,0.1\nG1,E2,0.6,0.6\n",
        );
        let outcomes = write_file(dir.path(), "outcomes.csv", "game_id,winner\nG1,1\n");
        let err = load_dataset(&opinions, &outcomes, &LoadOptions::default()).unwrap_err();
        match err {
            DatasetError::InvalidOpinion { line, ref game, ref expert, .. } => {
                assert_eq!(line, 3);
                assert_eq!(game, "G1");
                assert_eq!(expert, "E2");
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert_eq!(err.stage(), "validate");
    }

    #[test]
    fn renormalize_rescales_rows() {
        let dir = tempfile::tempdir().unwrap();
        let opinions = write_file(
            dir.path(),
            "opinions.csv",
            "game_id,expert_id,p_1,p_2\nG1,E1,0.6,0.6\nG1,E2,2.0,2.0\n",
        );
        let outcomes = write_file(dir.path(), "outcomes.csv", "game_id,winner\nG1,2\n");
        let options = LoadOptions {
            renormalize: true,
            ..LoadOptions::default()
        };
        let games = load_dataset(&opinions, &outcomes, &options).unwrap();
        assert_eq!(games[0].panel.row(0).as_slice(), &[0.5, 0.5]);
        assert_eq!(games[0].panel.row(1).as_slice(), &[0.5, 0.5]);
        assert_eq!(games[0].winner, 1);
    }

    #[test]
    fn renormalize_still_rejects_negative_rows() {
        let dir = tempfile::tempdir().unwrap();
        let opinions = write_file(
            dir.path(),
            "opinions.csv",
            "game_id,expert_id,p_1,p_2\nG1,E1,-0.1,1.1\n",
        );
        let outcomes = write_file(dir.path(), "outcomes.csv", "game_id,winner\nG1,1\n");
        let options = LoadOptions {
            renormalize: true,
            ..LoadOptions::default()
        };
        assert!(matches!(
            load_dataset(&opinions, &outcomes, &options),
            Err(DatasetError::InvalidOpinion { line: 2, .. })
        ));
    }

    #[test]
    fn derive_complement_builds_binary_opinions() {
        let dir = tempfile::tempdir().unwrap();
        let opinions = write_file(
            dir.path(),
            "opinions.csv",
            "game_id,expert_id,p_1\nG1,E1,0.9\nG1,E2,0.3\n",
        );
        let outcomes = write_file(dir.path(), "outcomes.csv", "game_id,winner\nG1,1\n");
        let options = LoadOptions {
            derive_complement: true,
            ..LoadOptions::default()
        };
        let games = load_dataset(&opinions, &outcomes, &options).unwrap();
        assert_eq!(games[0].panel.row(0).as_slice(), &[0.9, 1.0 - 0.9]);
        assert_eq!(games[0].panel.row(1).as_slice(), &[0.3, 0.7]);

        // without the flag the single-column header is rejected outright
        let err = load_dataset(&opinions, &outcomes, &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, DatasetError::BadHeader { .. }));
        assert_eq!(err.stage(), "parse");
    }

    #[test]
    fn detects_duplicates_and_joins() {
        let dir = tempfile::tempdir().unwrap();
        let outcomes_ok = write_file(dir.path(), "outcomes.csv", "game_id,winner\nG1,1\n");

        let duplicate = write_file(
            dir.path(),
            "dup.csv",
            "game_id,expert_id,p_1,p_2\nG1,E1,0.9,0.1\nG1,E1,0.8,0.2\n",
        );
        assert!(matches!(
            load_dataset(&duplicate, &outcomes_ok, &LoadOptions::default()),
            Err(DatasetError::DuplicateOpinion { line: 3, .. })
        ));

        let opinions = write_file(
            dir.path(),
            "opinions.csv",
            "game_id,expert_id,p_1,p_2\nG1,E1,0.9,0.1\nG2,E1,0.4,0.6\n",
        );
        assert!(matches!(
            load_dataset(&opinions, &outcomes_ok, &LoadOptions::default()),
            Err(DatasetError::MissingOutcome { .. })
        ));

        let outcomes_extra = write_file(
            dir.path(),
            "extra.csv",
            "game_id,winner\nG1,1\nG2,1\nG3,2\n",
        );
        assert!(matches!(
            load_dataset(&opinions, &outcomes_extra, &LoadOptions::default()),
            Err(DatasetError::EmptyPanel { line: 4, .. })
        ));

        let outcomes_dup = write_file(dir.path(), "dupout.csv", "game_id,winner\nG1,1\nG1,2\n");
        assert!(matches!(
            load_dataset(&opinions, &outcomes_dup, &LoadOptions::default()),
            Err(DatasetError::DuplicateOutcome { line: 3, .. })
        ));

        let outcomes_bad = write_file(dir.path(), "badwin.csv", "game_id,winner\nG1,3\nG2,1\n");
        assert!(matches!(
            load_dataset(&opinions, &outcomes_bad, &LoadOptions::default()),
            Err(DatasetError::WinnerOutOfRange { winner: 3, z: 2, .. })
        ));
    }

    #[test]
    fn games_keep_first_appearance_order() {
        let dir = tempfile::tempdir().unwrap();
        let opinions = write_file(
            dir.path(),
            "opinions.csv",
            "game_id,expert_id,p_1,p_2\nG2,E1,0.4,0.6\nG1,E1,0.9,0.1\nG2,E2,0.5,0.5\n",
        );
        let outcomes = write_file(dir.path(), "outcomes.csv", "game_id,winner\nG1,1\nG2,2\n");
        let games = load_dataset(&opinions, &outcomes, &LoadOptions::default()).unwrap();
        assert_eq!(games[0].game_id, "G2");
        assert_eq!(games[0].panel.n(), 2);
        assert_eq!(games[1].game_id, "G1");
    }
}
