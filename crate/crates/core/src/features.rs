//! Roster-network features for each team in a season.
//!
//! The affiliation graph for year `y` has a node for each player with a roster
//! row in `y` and for each team seen in the window `[y - 6, y]`. Two active
//! players are adjacent if they shared a roster in any season of the window;
//! an active player is adjacent to every team they played for in the window.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::RosterRecord;
use crate::stats;

/// Seasons before the target year that still count toward the graph.
pub const WINDOW: i32 = 6;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("no roster rows for season {0}")]
    EmptyWindow(i32),
    #[error("no roster rows for season {0}, needed for team volatility")]
    MissingPriorYear(i32),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: bad value `{value}` in column `{column}`")]
    BadValue {
        line: u64,
        column: String,
        value: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureName {
    CO,
    A5,
    A6_10,
    SD,
    AP,
    VL,
    RV,
    CC,
    RC,
    SI,
}

impl FeatureName {
    pub const ALL: [FeatureName; 10] = [
        FeatureName::CO,
        FeatureName::A5,
        FeatureName::A6_10,
        FeatureName::SD,
        FeatureName::AP,
        FeatureName::VL,
        FeatureName::RV,
        FeatureName::CC,
        FeatureName::RC,
        FeatureName::SI,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureName::CO => "CO",
            FeatureName::A5 => "A5",
            FeatureName::A6_10 => "A6_10",
            FeatureName::SD => "SD",
            FeatureName::AP => "AP",
            FeatureName::VL => "VL",
            FeatureName::RV => "RV",
            FeatureName::CC => "CC",
            FeatureName::RC => "RC",
            FeatureName::SI => "SI",
        }
    }

    /// Parses a comma-separated list such as `CO,A5,AP`.
    pub fn parse_list(s: &str) -> Result<Vec<FeatureName>, FeatureError> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureName {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        FeatureName::ALL
            .into_iter()
            .find(|f| f.as_str() == norm)
            .ok_or_else(|| FeatureError::UnknownFeature(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    Player(String),
    Team(String),
}

/// Undirected simple graph over players (ids `0..players.len()`) followed by teams.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffiliationGraph {
    pub year: i32,
    pub players: Vec<String>,
    pub teams: Vec<String>,
    adj: Vec<BTreeSet<usize>>,
}

impl AffiliationGraph {
    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn player_id(&self, player: &str) -> Option<usize> {
        self.players.binary_search_by(|p| p.as_str().cmp(player)).ok()
    }

    pub fn team_id(&self, team: &str) -> Option<usize> {
        self.teams
            .binary_search_by(|t| t.as_str().cmp(team))
            .ok()
            .map(|i| i + self.players.len())
    }

    pub fn node(&self, id: usize) -> Node {
        match id.checked_sub(self.players.len()) {
            None => Node::Player(self.players[id].clone()),
            Some(t) => Node::Team(self.teams[t].clone()),
        }
    }

    pub fn degree(&self, id: usize) -> usize {
        self.adj[id].len()
    }

    pub fn neighbors(&self, id: usize) -> &BTreeSet<usize> {
        &self.adj[id]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    /// Team degree, or 0 if the team has no node.
    pub fn team_degree(&self, team: &str) -> usize {
        self.team_id(team).map_or(0, |id| self.degree(id))
    }

    /// Local clustering coefficient; 0 for fewer than two neighbours.
    pub fn clustering(&self, id: usize) -> f64 {
        let nb: Vec<usize> = self.adj[id].iter().copied().collect();
        let k = nb.len();
        if k < 2 {
            return 0.0;
        }
        let mut links = 0usize;
        for (i, &a) in nb.iter().enumerate() {
            links += nb[i + 1..].iter().filter(|&&b| self.adj[a].contains(&b)).count();
        }
        2.0 * links as f64 / (k * (k - 1)) as f64
    }

    /// All edges as labelled, ordered pairs.
    pub fn edges(&self) -> BTreeSet<(Node, Node)> {
        let mut out = BTreeSet::new();
        for (a, nb) in self.adj.iter().enumerate() {
            for &b in nb.range(a + 1..) {
                let (x, y) = (self.node(a), self.node(b));
                out.insert(if x <= y { (x, y) } else { (y, x) });
            }
        }
        out
    }

    fn link(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }
}

pub fn build_graph(rosters: &[RosterRecord], year: i32) -> Result<AffiliationGraph, FeatureError> {
    let window: Vec<&RosterRecord> = rosters
        .iter()
        .filter(|r| (year - WINDOW..=year).contains(&r.season))
        .collect();
    let players: BTreeSet<&str> = window
        .iter()
        .filter(|r| r.season == year)
        .map(|r| r.player.as_str())
        .collect();
    if players.is_empty() {
        return Err(FeatureError::EmptyWindow(year));
    }
    let teams: BTreeSet<&str> = window.iter().map(|r| r.team.as_str()).collect();
    let mut g = AffiliationGraph {
        year,
        players: players.iter().map(|s| s.to_string()).collect(),
        teams: teams.iter().map(|s| s.to_string()).collect(),
        adj: vec![BTreeSet::new(); players.len() + teams.len()],
    };

    let mut squads: BTreeMap<(i32, &str), BTreeSet<usize>> = BTreeMap::new();
    for r in &window {
        let Some(p) = g.player_id(&r.player) else {
            continue;
        };
        let t = g.team_id(&r.team).expect("team indexed");
        g.link(p, t);
        squads.entry((r.season, r.team.as_str())).or_default().insert(p);
    }
    for squad in squads.values() {
        let members: Vec<usize> = squad.iter().copied().collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                g.link(a, b);
            }
        }
    }
    Ok(g)
}

fn first_seasons(rosters: &[RosterRecord]) -> BTreeMap<&str, i32> {
    let mut y0: BTreeMap<&str, i32> = BTreeMap::new();
    for r in rosters {
        let e = y0.entry(r.player.as_str()).or_insert(r.first_season);
        *e = (*e).min(r.first_season);
    }
    y0
}

fn roster_of<'a>(rosters: &'a [RosterRecord], team: &str, year: i32) -> Vec<&'a RosterRecord> {
    rosters
        .iter()
        .filter(|r| r.season == year && r.team == team)
        .collect()
}

fn career(year: i32, y0: i32) -> f64 {
    f64::from((year - y0).max(0))
}

/// `d_t^y − d_t^{y−1}` for the team node.
pub fn team_volatility(current: &AffiliationGraph, prior: &AffiliationGraph, team: &str) -> f64 {
    current.team_degree(team) as f64 - prior.team_degree(team) as f64
}

/// `Σ_v d_v / (y − y0_v)` over the year-`y` roster; rookies divide by 1.
pub fn roster_volatility(graph: &AffiliationGraph, rosters: &[RosterRecord], team: &str) -> f64 {
    let y0 = first_seasons(rosters);
    roster_players(rosters, team, graph.year)
        .iter()
        .filter_map(|p| graph.player_id(p).map(|id| (p, id)))
        .map(|(p, id)| graph.degree(id) as f64 / career(graph.year, y0[p.as_str()]).max(1.0))
        .sum()
}

/// Local clustering of the team node and roster-average `cc_v · (y − y0_v)`.
pub fn team_clustering(
    graph: &AffiliationGraph,
    rosters: &[RosterRecord],
    team: &str,
) -> (f64, f64) {
    let cc = graph.team_id(team).map_or(0.0, |id| graph.clustering(id));
    let y0 = first_seasons(rosters);
    let terms: Vec<f64> = roster_players(rosters, team, graph.year)
        .iter()
        .filter_map(|p| graph.player_id(p).map(|id| (p, id)))
        .map(|(p, id)| graph.clustering(id) * career(graph.year, y0[p.as_str()]))
        .collect();
    (cc, if terms.is_empty() { 0.0 } else { stats::mean(&terms) })
}

fn roster_players(rosters: &[RosterRecord], team: &str, year: i32) -> BTreeSet<String> {
    roster_of(rosters, team, year)
        .into_iter()
        .map(|r| r.player.clone())
        .collect()
}

/// Salary, efficiency, size and conference statistics for one roster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosterStats {
    pub a5: f64,
    pub a6_10: f64,
    pub sd: f64,
    pub ap: f64,
    pub si: f64,
    pub co: f64,
    /// Fewer than five players: A5 averages what is there.
    pub short_roster: bool,
}

pub fn salary_per_features(rosters: &[RosterRecord], team: &str, year: i32) -> Option<RosterStats> {
    let roster = roster_of(rosters, team, year);
    if roster.is_empty() {
        return None;
    }
    let mut salaries: Vec<f64> = roster.iter().map(|r| r.salary).collect();
    salaries.sort_by(|a, b| b.total_cmp(a));
    let top = &salaries[..salaries.len().min(5)];
    let next = if salaries.len() > 5 {
        &salaries[5..salaries.len().min(10)]
    } else {
        &[][..]
    };
    let per: Vec<f64> = roster.iter().map(|r| r.per).collect();
    let co = match roster.iter().find_map(|r| r.conference.as_deref()) {
        Some(c) if c.eq_ignore_ascii_case("e") || c.eq_ignore_ascii_case("east") => 0.5,
        Some(c) if c.eq_ignore_ascii_case("w") || c.eq_ignore_ascii_case("west") => -0.5,
        _ => 0.0,
    };
    Some(RosterStats {
        a5: stats::mean(top),
        a6_10: if next.is_empty() { 0.0 } else { stats::mean(next) },
        sd: stats::sample_sd(&salaries),
        ap: stats::mean(&per),
        si: roster.len() as f64,
        co,
        short_roster: salaries.len() < 5,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeamFeatures {
    pub team: String,
    /// Indexed by [`FeatureName::index`].
    pub raw: [f64; 10],
    pub standardized: [f64; 10],
    pub short_roster: bool,
}

impl TeamFeatures {
    pub fn get(&self, f: FeatureName) -> f64 {
        self.standardized[f.index()]
    }

    pub fn get_raw(&self, f: FeatureName) -> f64 {
        self.raw[f.index()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub season: i32,
    pub rows: Vec<TeamFeatures>,
}

impl FeatureTable {
    pub fn teams(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.team.clone()).collect()
    }

    pub fn row(&self, team: &str) -> Option<&TeamFeatures> {
        self.rows.iter().find(|r| r.team == team)
    }

    pub fn column(&self, f: FeatureName) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(f)).collect()
    }

    /// Standardized values of `names`, one row per team of `teams`.
    pub fn design(&self, teams: &[String], names: &[FeatureName]) -> Option<Vec<Vec<f64>>> {
        teams
            .iter()
            .map(|t| {
                let row = self.row(t)?;
                Some(names.iter().map(|&f| row.get(f)).collect())
            })
            .collect()
    }
}

/// Rescales to sample mean 0 and sd 1; a constant column maps to 0.
pub fn standardize(xs: &[f64]) -> Vec<f64> {
    let m = stats::mean(xs);
    let sd = stats::sample_sd(xs);
    xs.iter()
        .map(|x| if sd > 0.0 { (x - m) / sd } else { 0.0 })
        .collect()
}

/// Raw and standardized features for every team with a roster in `year`.
pub fn compute_features(rosters: &[RosterRecord], year: i32) -> Result<FeatureTable, FeatureError> {
    let current = build_graph(rosters, year)?;
    let prior = match build_graph(rosters, year - 1) {
        Err(FeatureError::EmptyWindow(y)) => return Err(FeatureError::MissingPriorYear(y)),
        other => other?,
    };
    let teams: BTreeSet<&str> = rosters
        .iter()
        .filter(|r| r.season == year)
        .map(|r| r.team.as_str())
        .collect();

    let mut rows: Vec<TeamFeatures> = teams
        .into_iter()
        .map(|team| {
            let s = salary_per_features(rosters, team, year).expect("team has a roster");
            let (cc, rc) = team_clustering(&current, rosters, team);
            let mut raw = [0.0; 10];
            raw[FeatureName::CO.index()] = s.co;
            raw[FeatureName::A5.index()] = s.a5;
            raw[FeatureName::A6_10.index()] = s.a6_10;
            raw[FeatureName::SD.index()] = s.sd;
            raw[FeatureName::AP.index()] = s.ap;
            raw[FeatureName::VL.index()] = team_volatility(&current, &prior, team);
            raw[FeatureName::RV.index()] = roster_volatility(&current, rosters, team);
            raw[FeatureName::CC.index()] = cc;
            raw[FeatureName::RC.index()] = rc;
            raw[FeatureName::SI.index()] = s.si;
            TeamFeatures {
                team: team.to_string(),
                raw,
                standardized: [0.0; 10],
                short_roster: s.short_roster,
            }
        })
        .collect();

    for f in FeatureName::ALL {
        let col: Vec<f64> = rows.iter().map(|r| r.raw[f.index()]).collect();
        for (row, z) in rows.iter_mut().zip(standardize(&col)) {
            row.standardized[f.index()] = z;
        }
    }
    Ok(FeatureTable { season: year, rows })
}

/// Columns: `season, team`, the standardized features, then `<F>_raw` and `short_roster`.
pub fn write_features<W: Write>(writer: W, tables: &[FeatureTable]) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["season".to_string(), "team".to_string()];
    header.extend(FeatureName::ALL.iter().map(|f| f.to_string()));
    header.extend(FeatureName::ALL.iter().map(|f| format!("{f}_raw")));
    header.push("short_roster".into());
    w.write_record(&header)?;
    for t in tables {
        for r in &t.rows {
            let mut rec = vec![t.season.to_string(), r.team.clone()];
            rec.extend(r.standardized.iter().map(f64::to_string));
            rec.extend(r.raw.iter().map(f64::to_string));
            rec.push(r.short_roster.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a features file. `season` and `team` are required; absent feature
/// columns read as NaN so callers can reject only the ones they use.
pub fn read_features<R: Read>(reader: R) -> Result<Vec<FeatureTable>, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let season_col = col("season").ok_or_else(|| FeatureError::MissingColumn("season".into()))?;
    let team_col = col("team").ok_or_else(|| FeatureError::MissingColumn("team".into()))?;
    let std_cols: Vec<Option<usize>> = FeatureName::ALL.iter().map(|f| col(f.as_str())).collect();
    let raw_cols: Vec<Option<usize>> = FeatureName::ALL
        .iter()
        .map(|f| col(&format!("{f}_raw")))
        .collect();
    let short_col = col("short_roster");

    let mut by_season: BTreeMap<i32, Vec<TeamFeatures>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let bad = |column: &str, value: &str| FeatureError::BadValue {
            line,
            column: column.to_string(),
            value: value.to_string(),
        };
        let season: i32 = rec[season_col]
            .parse()
            .map_err(|_| bad("season", &rec[season_col]))?;
        let mut row = TeamFeatures {
            team: rec[team_col].to_string(),
            raw: [f64::NAN; 10],
            standardized: [f64::NAN; 10],
            short_roster: false,
        };
        for (j, f) in FeatureName::ALL.iter().enumerate() {
            if let Some(c) = std_cols[j] {
                row.standardized[j] = rec[c].parse().map_err(|_| bad(f.as_str(), &rec[c]))?;
            }
            if let Some(c) = raw_cols[j] {
                row.raw[j] = rec[c]
                    .parse()
                    .map_err(|_| bad(&format!("{f}_raw"), &rec[c]))?;
            }
        }
        if let Some(c) = short_col {
            row.short_roster = rec[c].parse().map_err(|_| bad("short_roster", &rec[c]))?;
        }
        by_season.entry(season).or_default().push(row);
    }
    Ok(by_season
        .into_iter()
        .map(|(season, mut rows)| {
            rows.sort_by(|a, b| a.team.cmp(&b.team));
            FeatureTable { season, rows }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(season: i32, team: &str, player: &str, salary: f64, y0: i32) -> RosterRecord {
        RosterRecord {
            season,
            team: team.into(),
            player: player.into(),
            salary,
            per: 15.0,
            first_season: y0,
            conference: None,
        }
    }

    #[test]
    fn co_rostered_active_players_are_linked() {
        let rs = vec![
            row(2015, "X", "a", 1.0, 2010),
            row(2015, "X", "b", 1.0, 2010),
            row(2016, "Y", "a", 1.0, 2010),
            row(2016, "Z", "b", 1.0, 2010),
        ];
        let g = build_graph(&rs, 2016).unwrap();
        let (a, b) = (g.player_id("a").unwrap(), g.player_id("b").unwrap());
        assert!(g.has_edge(a, b));
        assert!(g.has_edge(a, g.team_id("X").unwrap()));
        assert!(g.has_edge(a, g.team_id("Y").unwrap()));
        assert!(!g.has_edge(a, g.team_id("Z").unwrap()));
    }

    #[test]
    fn retired_players_are_dropped() {
        let rs = vec![
            row(2015, "X", "old", 1.0, 2000),
            row(2015, "X", "a", 1.0, 2010),
            row(2016, "X", "a", 1.0, 2010),
        ];
        let g = build_graph(&rs, 2016).unwrap();
        assert!(g.player_id("old").is_none());
        assert_eq!(g.team_degree("X"), 1);
    }

    #[test]
    fn seasons_outside_window_are_ignored() {
        let rs = vec![
            row(2009, "X", "a", 1.0, 2005),
            row(2009, "X", "b", 1.0, 2005),
            row(2016, "Y", "a", 1.0, 2005),
            row(2016, "Z", "b", 1.0, 2005),
        ];
        let g = build_graph(&rs, 2016).unwrap();
        assert!(g.team_id("X").is_none());
        assert_eq!(g.n_edges(), 2);
    }

    #[test]
    fn salary_statistics() {
        let rs: Vec<RosterRecord> = [10.0, 8.0, 6.0, 4.0, 2.0, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &s)| row(2016, "X", &format!("p{i}"), s, 2012))
            .collect();
        let s = salary_per_features(&rs, "X", 2016).unwrap();
        assert_eq!(s.a5, 6.0);
        assert_eq!(s.a6_10, 1.0);
        assert_eq!(s.si, 6.0);
        assert!(!s.short_roster);

        let flat: Vec<RosterRecord> = (0..4)
            .map(|i| row(2016, "Y", &format!("q{i}"), 3.0, 2012))
            .collect();
        let s = salary_per_features(&flat, "Y", 2016).unwrap();
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.a5, 3.0);
        assert!(s.short_roster);
    }

    #[test]
    fn veteran_roster_volatility() {
        // one veteran linked to three teammates and the team: degree 4, career 2
        let mut rs = vec![row(2016, "X", "v", 1.0, 2014)];
        for p in ["a", "b", "c"] {
            rs.push(row(2016, "X", p, 1.0, 2016));
        }
        let g = build_graph(&rs, 2016).unwrap();
        let rv = roster_volatility(&g, &rs, "X");
        // veteran 4/2 plus three rookies 4/1
        assert_eq!(rv, 2.0 + 12.0);
    }

    #[test]
    fn clique_team_has_unit_clustering() {
        let rs: Vec<RosterRecord> = (0..5)
            .map(|i| row(2016, "X", &format!("p{i}"), 1.0, 2010))
            .collect();
        let g = build_graph(&rs, 2016).unwrap();
        let (cc, rc) = team_clustering(&g, &rs, "X");
        assert_eq!(cc, 1.0);
        assert_eq!(rc, 6.0);
    }

    #[test]
    fn feature_names_parse() {
        let names = FeatureName::parse_list("CO, a5,A6-10,SI").unwrap();
        assert_eq!(
            names,
            vec![FeatureName::CO, FeatureName::A5, FeatureName::A6_10, FeatureName::SI]
        );
        assert!(FeatureName::parse_list("XX").is_err());
    }

    #[test]
    fn missing_prior_year() {
        let rs = vec![row(2016, "X", "a", 1.0, 2010), row(2016, "Y", "b", 1.0, 2010)];
        assert!(matches!(
            compute_features(&rs, 2016),
            Err(FeatureError::MissingPriorYear(2015))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let mut rs = Vec::new();
        for year in [2015, 2016] {
            for (t, team) in ["X", "Y", "Z"].iter().enumerate() {
                for p in 0..6 {
                    let salary = (p + t + year as usize % 3) as f64;
                    rs.push(row(year, team, &format!("{team}{p}"), salary, 2012));
                }
            }
        }
        let table = compute_features(&rs, 2016).unwrap();
        let mut buf = Vec::new();
        write_features(&mut buf, std::slice::from_ref(&table)).unwrap();
        let back = read_features(&buf[..]).unwrap();
        assert_eq!(back, vec![table]);
    }
}
