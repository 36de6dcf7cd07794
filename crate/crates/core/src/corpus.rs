//! Match logs, roster tables and season-level views.
//!
//! Match files are delimited text with a header row. The default column names
//! are `league,season,round,home,away,home_score,away_score`; a [`ColumnMapping`]
//! (usually read from a JSON sidecar) renames them. Roster files use
//! `season,team,player,salary,per,first_season` plus an optional `conference`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad schema file: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: `{column}` must be a non-negative integer, got `{value}`")]
    NonIntegerScore {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: `{column}` has invalid value `{value}`")]
    InvalidField {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: team `{team}` is listed as both home and away")]
    SelfMatch { line: u64, team: String },
    #[error("line {line}: negative salary for player `{player}`")]
    NegativeSalary { line: u64, player: String },
    #[error("line {line}: player `{player}` has first season {first} after season {season}")]
    FirstSeasonAfterSeason {
        line: u64,
        player: String,
        first: i32,
        season: i32,
    },
    #[error("season {league}/{season} has no matches")]
    EmptySeason { league: String, season: String },
    #[error("expected only {league}/{season}, found a match from {found_league}/{found_season}")]
    MixedSeason {
        league: String,
        season: String,
        found_league: String,
        found_season: String,
    },
    #[error("season {league}/{season} has an irregular schedule: {detail}")]
    IrregularSchedule {
        league: String,
        season: String,
        detail: String,
    },
    #[error("season {league}/{season} has {teams} teams, at least {min} required")]
    TooFewTeams {
        league: String,
        season: String,
        teams: usize,
        min: usize,
    },
}

/// One game.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MatchRecord {
    pub league: String,
    pub season: String,
    pub round: u32,
    pub home: String,
    pub away: String,
    /// Native score units of the sport (goals, points, sets), not table points.
    pub home_score: u32,
    pub away_score: u32,
}

impl MatchRecord {
    /// Combined score of both sides.
    pub fn total_score(&self) -> u32 {
        self.home_score + self.away_score
    }
}

/// Column names used when reading match files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub league: String,
    pub season: String,
    pub round: String,
    pub home: String,
    pub away: String,
    pub home_score: String,
    pub away_score: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            league: "league".into(),
            season: "season".into(),
            round: "round".into(),
            home: "home".into(),
            away: "away".into(),
            home_score: "home_score".into(),
            away_score: "away_score".into(),
        }
    }
}

impl ColumnMapping {
    /// Reads a JSON sidecar; keys that are absent keep their default names.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let file = open(path.as_ref())?;
        Ok(serde_json::from_reader(file)?)
    }
}

#[derive(Clone, Debug)]
pub struct MatchFormat {
    pub delimiter: u8,
    pub columns: ColumnMapping,
}

impl Default for MatchFormat {
    fn default() -> Self {
        Self {
            delimiter: b',',
            columns: ColumnMapping::default(),
        }
    }
}

fn open(path: &Path) -> Result<File, CorpusError> {
    File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, CorpusError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

pub fn load_matches(
    path: impl AsRef<Path>,
    format: &MatchFormat,
) -> Result<Vec<MatchRecord>, CorpusError> {
    read_matches(open(path.as_ref())?, format)
}

/// Parses and validates match rows. Errors name the file line (header = line 1).
pub fn read_matches<R: Read>(
    reader: R,
    format: &MatchFormat,
) -> Result<Vec<MatchRecord>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let c = &format.columns;
    let idx = [
        column_index(&headers, &c.league)?,
        column_index(&headers, &c.season)?,
        column_index(&headers, &c.round)?,
        column_index(&headers, &c.home)?,
        column_index(&headers, &c.away)?,
        column_index(&headers, &c.home_score)?,
        column_index(&headers, &c.away_score)?,
    ];

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        let score = |i: usize, column: &str| -> Result<u32, CorpusError> {
            field(i)
                .parse::<u32>()
                .map_err(|_| CorpusError::NonIntegerScore {
                    line,
                    column: column.to_string(),
                    value: field(i).to_string(),
                })
        };
        let round = field(2)
            .parse::<u32>()
            .ok()
            .filter(|r| *r >= 1)
            .ok_or_else(|| CorpusError::InvalidField {
                line,
                column: c.round.clone(),
                value: field(2).to_string(),
            })?;
        let record = MatchRecord {
            league: field(0).to_string(),
            season: field(1).to_string(),
            round,
            home: field(3).to_string(),
            away: field(4).to_string(),
            home_score: score(5, &c.home_score)?,
            away_score: score(6, &c.away_score)?,
        };
        for (i, name) in [(3, &c.home), (4, &c.away)] {
            if field(i).is_empty() {
                return Err(CorpusError::InvalidField {
                    line,
                    column: name.clone(),
                    value: String::new(),
                });
            }
        }
        if record.home == record.away {
            return Err(CorpusError::SelfMatch {
                line,
                team: record.home,
            });
        }
        out.push(record);
    }
    Ok(out)
}

/// Writes records with the default column names.
pub fn write_matches<W: Write>(writer: W, records: &[MatchRecord]) -> Result<(), CorpusError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|source| CorpusError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

/// Groups records by `(league, season)`.
pub fn split_by_season(records: &[MatchRecord]) -> BTreeMap<(String, String), Vec<MatchRecord>> {
    let mut out: BTreeMap<(String, String), Vec<MatchRecord>> = BTreeMap::new();
    for r in records {
        out.entry((r.league.clone(), r.season.clone()))
            .or_default()
            .push(r.clone());
    }
    out
}

/// Team indices of one match inside a [`SeasonView`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fixture {
    pub home: usize,
    pub away: usize,
}

#[derive(Clone, Debug)]
pub struct SeasonOptions {
    pub min_teams: usize,
    /// Downgrade schedule irregularity to a flag on the view.
    pub allow_irregular: bool,
}

impl Default for SeasonOptions {
    fn default() -> Self {
        Self {
            min_teams: 8,
            allow_irregular: false,
        }
    }
}

/// A validated season: sorted team list, canonically ordered matches and
/// per-team venue counts.
#[derive(Clone, Debug, PartialEq)]
pub struct SeasonView {
    pub league: String,
    pub season: String,
    pub teams: Vec<String>,
    pub matches: Vec<MatchRecord>,
    /// Parallel to `matches`.
    pub fixtures: Vec<Fixture>,
    pub home_games: Vec<u32>,
    pub away_games: Vec<u32>,
    /// 2k for a regular season; the largest per-team count otherwise.
    pub games_per_team: u32,
    pub irregular: bool,
}

impl SeasonView {
    /// Builds the view without regularity checks. Matches are sorted so the
    /// result does not depend on input order.
    pub fn from_matches(league: &str, season: &str, mut matches: Vec<MatchRecord>) -> Self {
        matches.sort();
        let teams: Vec<String> = matches
            .iter()
            .flat_map(|m| [m.home.clone(), m.away.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<&str, usize> = teams
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let mut home_games = vec![0u32; teams.len()];
        let mut away_games = vec![0u32; teams.len()];
        let fixtures: Vec<Fixture> = matches
            .iter()
            .map(|m| {
                let f = Fixture {
                    home: index[m.home.as_str()],
                    away: index[m.away.as_str()],
                };
                home_games[f.home] += 1;
                away_games[f.away] += 1;
                f
            })
            .collect();
        let mut view = Self {
            league: league.to_string(),
            season: season.to_string(),
            teams,
            matches,
            fixtures,
            home_games,
            away_games,
            games_per_team: 0,
            irregular: false,
        };
        view.games_per_team = (0..view.teams.len())
            .map(|i| view.games_of(i))
            .max()
            .unwrap_or(0);
        view.irregular = view.irregularity().is_some();
        view
    }

    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn n_matches(&self) -> usize {
        self.matches.len()
    }

    /// Half the per-team game count.
    pub fn k(&self) -> u32 {
        self.games_per_team / 2
    }

    pub fn games_of(&self, team: usize) -> u32 {
        self.home_games[team] + self.away_games[team]
    }

    pub fn team_index(&self, team: &str) -> Option<usize> {
        self.teams.binary_search_by(|t| t.as_str().cmp(team)).ok()
    }

    /// Describes the first regularity violation, if any: every team must play
    /// the same number of games, half of them at home.
    pub fn irregularity(&self) -> Option<String> {
        if self.teams.is_empty() {
            return None;
        }
        let first = self.games_of(0);
        for (i, team) in self.teams.iter().enumerate() {
            let total = self.games_of(i);
            if total != first {
                return Some(format!(
                    "`{team}` plays {total} games, `{}` plays {first}",
                    self.teams[0]
                ));
            }
            if self.home_games[i] != self.away_games[i] {
                return Some(format!(
                    "`{team}` has {} home and {} away games",
                    self.home_games[i], self.away_games[i]
                ));
            }
        }
        None
    }

    /// True when every ordered pair (i home, j away) occurs as often as (j, i).
    pub fn has_symmetric_pairs(&self) -> bool {
        let mut counts: HashMap<(usize, usize), i64> = HashMap::new();
        for f in &self.fixtures {
            *counts.entry((f.home, f.away)).or_default() += 1;
            *counts.entry((f.away, f.home)).or_default() -= 1;
        }
        counts.values().all(|c| *c == 0)
    }

    /// The season with `team` and all of its matches dropped.
    pub fn without_team(&self, team: &str) -> SeasonView {
        let matches = self
            .matches
            .iter()
            .filter(|m| m.home != team && m.away != team)
            .cloned()
            .collect();
        SeasonView::from_matches(&self.league, &self.season, matches)
    }

    /// Pools several seasons into one irregular-tolerant view.
    pub fn pooled(seasons: &[SeasonView], label: &str) -> SeasonView {
        let league = seasons.first().map(|s| s.league.as_str()).unwrap_or("");
        let matches = seasons
            .iter()
            .flat_map(|s| s.matches.iter().cloned())
            .collect();
        SeasonView::from_matches(league, label, matches)
    }
}

/// Validates and indexes one season.
pub fn build_season(
    records: &[MatchRecord],
    league: &str,
    season: &str,
    opts: &SeasonOptions,
) -> Result<SeasonView, CorpusError> {
    if let Some(m) = records
        .iter()
        .find(|m| m.league != league || m.season != season)
    {
        return Err(CorpusError::MixedSeason {
            league: league.into(),
            season: season.into(),
            found_league: m.league.clone(),
            found_season: m.season.clone(),
        });
    }
    if records.is_empty() {
        return Err(CorpusError::EmptySeason {
            league: league.into(),
            season: season.into(),
        });
    }
    let view = SeasonView::from_matches(league, season, records.to_vec());
    if let Some(detail) = view.irregularity() {
        if !opts.allow_irregular {
            return Err(CorpusError::IrregularSchedule {
                league: league.into(),
                season: season.into(),
                detail,
            });
        }
    }
    if view.n_teams() < opts.min_teams {
        return Err(CorpusError::TooFewTeams {
            league: league.into(),
            season: season.into(),
            teams: view.n_teams(),
            min: opts.min_teams,
        });
    }
    Ok(view)
}

/// One player on one team in one season.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosterRecord {
    pub season: i32,
    pub team: String,
    pub player: String,
    pub salary: f64,
    /// Player Efficiency Rating.
    pub per: f64,
    pub first_season: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conference: Option<String>,
}

pub fn load_rosters(
    path: impl AsRef<Path>,
    delimiter: u8,
) -> Result<Vec<RosterRecord>, CorpusError> {
    read_rosters(open(path.as_ref())?, delimiter)
}

pub fn read_rosters<R: Read>(reader: R, delimiter: u8) -> Result<Vec<RosterRecord>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names = ["season", "team", "player", "salary", "per", "first_season"];
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(names) {
        *slot = column_index(&headers, name)?;
    }
    let conference = column_index(&headers, "conference").ok();

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        let invalid = |i: usize| CorpusError::InvalidField {
            line,
            column: names[i].to_string(),
            value: field(i).to_string(),
        };
        let season: i32 = field(0).parse().map_err(|_| invalid(0))?;
        let salary: f64 = field(3).parse().map_err(|_| invalid(3))?;
        let per: f64 = field(4).parse().map_err(|_| invalid(4))?;
        let first_season: i32 = field(5).parse().map_err(|_| invalid(5))?;
        if field(1).is_empty() {
            return Err(invalid(1));
        }
        if field(2).is_empty() {
            return Err(invalid(2));
        }
        if !salary.is_finite() || salary < 0.0 {
            return Err(CorpusError::NegativeSalary {
                line,
                player: field(2).to_string(),
            });
        }
        if first_season > season {
            return Err(CorpusError::FirstSeasonAfterSeason {
                line,
                player: field(2).to_string(),
                first: first_season,
                season,
            });
        }
        out.push(RosterRecord {
            season,
            team: field(1).to_string(),
            player: field(2).to_string(),
            salary,
            per,
            first_season,
            conference: conference
                .and_then(|i| row.get(i))
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        });
    }
    Ok(out)
}

pub fn write_rosters<W: Write>(writer: W, records: &[RosterRecord]) -> Result<(), CorpusError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let with_conf = records.iter().any(|r| r.conference.is_some());
    let mut header = vec!["season", "team", "player", "salary", "per", "first_season"];
    if with_conf {
        header.push("conference");
    }
    wtr.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.season.to_string(),
            r.team.clone(),
            r.player.clone(),
            r.salary.to_string(),
            r.per.to_string(),
            r.first_season.to_string(),
        ];
        if with_conf {
            row.push(r.conference.clone().unwrap_or_default());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|source| CorpusError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}
