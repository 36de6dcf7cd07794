//! Scoring schemes, outcome frequencies and the pure-luck moments of a
//! team's season total.
//!
//! Under the random model every match is an independent draw from the
//! context probabilities `(P_h, P_t, P_a)`, identical for all teams. A team's
//! home table points `X_h` and away table points `X_a` then have fixed first
//! and second moments, and a season total over `k` home and `k` away games has
//! mean `k(μ_h + μ_a)` and variance `k(σ²_h + σ²_a)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SeasonView;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("season {0} has no matches")]
    EmptySeason(String),
    #[error("scheme `{scheme}` has no outcome for score {home}-{away}")]
    UnclassifiableScore {
        scheme: String,
        home: u32,
        away: u32,
    },
    #[error("invalid scoring scheme: {0}")]
    InvalidScheme(String),
    #[error("context probabilities must be in [0,1] and sum to 1, got ({0}, {1}, {2})")]
    InvalidProbabilities(f64, f64, f64),
}

/// Result of a match from the home side's perspective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    HomeWin,
    Tie,
    AwayWin,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::HomeWin, Outcome::Tie, Outcome::AwayWin];

    pub fn index(self) -> usize {
        match self {
            Outcome::HomeWin => 0,
            Outcome::Tie => 1,
            Outcome::AwayWin => 2,
        }
    }
}

/// How the home raw score compares with the away raw score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Greater,
    Equal,
    Less,
}

impl Comparison {
    fn outcome(self) -> Outcome {
        match self {
            Comparison::Greater => Outcome::HomeWin,
            Comparison::Equal => Outcome::Tie,
            Comparison::Less => Outcome::AwayWin,
        }
    }
}

/// Table points awarded for one outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRule {
    pub label: String,
    pub when: Comparison,
    pub home_points: f64,
    pub away_points: f64,
}

#[derive(Deserialize)]
struct RawScheme {
    name: String,
    outcomes: Vec<OutcomeRule>,
}

/// Maps raw scores to outcomes and outcomes to table points.
///
/// A scheme must cover home wins and away wins; ties are optional, and a
/// scheme without them rejects level raw scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScheme")]
pub struct ScoringScheme {
    pub name: String,
    pub outcomes: Vec<OutcomeRule>,
    #[serde(skip)]
    points: [Option<(f64, f64)>; 3],
}

impl TryFrom<RawScheme> for ScoringScheme {
    type Error = BaselineError;

    fn try_from(raw: RawScheme) -> Result<Self, Self::Error> {
        ScoringScheme::new(&raw.name, raw.outcomes)
    }
}

impl ScoringScheme {
    pub fn new(name: &str, outcomes: Vec<OutcomeRule>) -> Result<Self, BaselineError> {
        let mut points = [None; 3];
        for rule in &outcomes {
            let slot = &mut points[rule.when.outcome().index()];
            if slot.is_some() {
                return Err(BaselineError::InvalidScheme(format!(
                    "`{name}` has two rules for {:?}",
                    rule.when
                )));
            }
            if !(rule.home_points.is_finite() && rule.away_points.is_finite()) {
                return Err(BaselineError::InvalidScheme(format!(
                    "`{name}` has non-finite points for `{}`",
                    rule.label
                )));
            }
            *slot = Some((rule.home_points, rule.away_points));
        }
        if points[0].is_none() || points[2].is_none() {
            return Err(BaselineError::InvalidScheme(format!(
                "`{name}` must define both home and away wins"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            outcomes,
            points,
        })
    }

    fn from_table(name: &str, win: f64, tie: Option<f64>, loss: f64) -> Self {
        let mut outcomes = vec![OutcomeRule {
            label: "home win".into(),
            when: Comparison::Greater,
            home_points: win,
            away_points: loss,
        }];
        if let Some(t) = tie {
            outcomes.push(OutcomeRule {
                label: "tie".into(),
                when: Comparison::Equal,
                home_points: t,
                away_points: t,
            });
        }
        outcomes.push(OutcomeRule {
            label: "away win".into(),
            when: Comparison::Less,
            home_points: loss,
            away_points: win,
        });
        Self::new(name, outcomes).expect("built-in schemes are valid")
    }

    /// 3 points for a win, 1 for a tie.
    pub fn soccer() -> Self {
        Self::from_table("soccer", 3.0, Some(1.0), 0.0)
    }

    /// 1 point per win, no ties.
    pub fn basketball() -> Self {
        Self::from_table("basketball", 1.0, None, 0.0)
    }

    /// 2 points for a win, 1 for a tie.
    pub fn handball() -> Self {
        Self::from_table("handball", 2.0, Some(1.0), 0.0)
    }

    /// 3 points per match win on sets, no ties. Set-dependent tables need a
    /// custom scheme.
    pub fn volleyball() -> Self {
        Self::from_table("volleyball", 3.0, None, 0.0)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "soccer" | "football" => Some(Self::soccer()),
            "basketball" => Some(Self::basketball()),
            "handball" => Some(Self::handball()),
            "volleyball" => Some(Self::volleyball()),
            _ => None,
        }
    }

    pub fn allows_ties(&self) -> bool {
        self.points[Outcome::Tie.index()].is_some()
    }

    /// `(home points, away points)` for an outcome, if the scheme has it.
    pub fn points(&self, outcome: Outcome) -> Option<(f64, f64)> {
        self.points[outcome.index()]
    }

    /// Points per outcome index; missing outcomes score zero.
    pub(crate) fn point_table(&self) -> ([f64; 3], [f64; 3]) {
        let mut home = [0.0; 3];
        let mut away = [0.0; 3];
        for o in Outcome::ALL {
            if let Some((h, a)) = self.points(o) {
                home[o.index()] = h;
                away[o.index()] = a;
            }
        }
        (home, away)
    }

    pub fn classify(&self, home_score: u32, away_score: u32) -> Result<Outcome, BaselineError> {
        let outcome = match home_score.cmp(&away_score) {
            std::cmp::Ordering::Greater => Outcome::HomeWin,
            std::cmp::Ordering::Equal => Outcome::Tie,
            std::cmp::Ordering::Less => Outcome::AwayWin,
        };
        if self.points(outcome).is_none() {
            return Err(BaselineError::UnclassifiableScore {
                scheme: self.name.clone(),
                home: home_score,
                away: away_score,
            });
        }
        Ok(outcome)
    }
}

impl fmt::Display for ScoringScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A scheme as written in configuration: a built-in name or a full table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeSpec {
    Named(String),
    Custom(ScoringScheme),
}

impl SchemeSpec {
    pub fn resolve(&self) -> Result<ScoringScheme, BaselineError> {
        match self {
            SchemeSpec::Named(name) => ScoringScheme::builtin(name)
                .ok_or_else(|| BaselineError::InvalidScheme(format!("unknown scheme `{name}`"))),
            SchemeSpec::Custom(s) => Ok(s.clone()),
        }
    }
}

impl From<ScoringScheme> for SchemeSpec {
    fn from(s: ScoringScheme) -> Self {
        SchemeSpec::Custom(s)
    }
}

/// Estimated `(P_h, P_t, P_a)` for one season.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextProbs {
    pub p_home: f64,
    pub p_tie: f64,
    pub p_away: f64,
    pub n_matches: usize,
}

impl ContextProbs {
    pub fn new(p_home: f64, p_tie: f64, p_away: f64) -> Result<Self, BaselineError> {
        let ok = [p_home, p_tie, p_away]
            .iter()
            .all(|p| (0.0..=1.0).contains(p))
            && (p_home + p_tie + p_away - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(BaselineError::InvalidProbabilities(p_home, p_tie, p_away));
        }
        Ok(Self {
            p_home,
            p_tie,
            p_away,
            n_matches: 0,
        })
    }

    /// Frequencies from outcome counts `[home wins, ties, away wins]`.
    pub fn from_counts(counts: [usize; 3]) -> Self {
        let n = counts.iter().sum::<usize>();
        let nf = n as f64;
        Self {
            p_home: counts[0] as f64 / nf,
            p_tie: counts[1] as f64 / nf,
            p_away: counts[2] as f64 / nf,
            n_matches: n,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_home, self.p_tie, self.p_away]
    }
}

/// Outcome of every match of the season, in match order.
pub fn season_outcomes(
    season: &SeasonView,
    scheme: &ScoringScheme,
) -> Result<Vec<Outcome>, BaselineError> {
    season
        .matches
        .iter()
        .map(|m| scheme.classify(m.home_score, m.away_score))
        .collect()
}

/// `P_h = W_h / N` and likewise for ties and away wins.
pub fn estimate_context_probs(
    season: &SeasonView,
    scheme: &ScoringScheme,
) -> Result<ContextProbs, BaselineError> {
    if season.matches.is_empty() {
        return Err(BaselineError::EmptySeason(format!(
            "{}/{}",
            season.league, season.season
        )));
    }
    let mut counts = [0usize; 3];
    for o in season_outcomes(season, scheme)? {
        counts[o.index()] += 1;
    }
    Ok(ContextProbs::from_counts(counts))
}

/// Mean and variance of the table points from a single home and a single away game.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameMoments {
    pub mu_home: f64,
    pub var_home: f64,
    pub mu_away: f64,
    pub var_away: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineMoments {
    pub mu_home: f64,
    pub var_home: f64,
    pub mu_away: f64,
    pub var_away: f64,
    pub mu_2k: f64,
    pub var_2k: f64,
}

/// Moments of `X_h` and `X_a` under the scheme. For soccer these are
/// `μ_h = 3P_h + P_t`, `σ²_h = 9P_h + P_t − μ_h²` and the mirror for away.
pub fn game_moments(probs: &ContextProbs, scheme: &ScoringScheme) -> GameMoments {
    let (home, away) = scheme.point_table();
    game_moments_from_table(&probs.as_array(), &home, &away)
}

#[inline]
pub(crate) fn game_moments_from_table(p: &[f64; 3], home: &[f64; 3], away: &[f64; 3]) -> GameMoments {
    let mut m = [0.0; 4];
    for i in 0..3 {
        m[0] += p[i] * home[i];
        m[1] += p[i] * home[i] * home[i];
        m[2] += p[i] * away[i];
        m[3] += p[i] * away[i] * away[i];
    }
    GameMoments {
        mu_home: m[0],
        var_home: (m[1] - m[0] * m[0]).max(0.0),
        mu_away: m[2],
        var_away: (m[3] - m[2] * m[2]).max(0.0),
    }
}

/// Season-total moments for `k` home and `k` away games.
pub fn moments(probs: &ContextProbs, scheme: &ScoringScheme, k: u32) -> BaselineMoments {
    let g = game_moments(probs, scheme);
    let k = f64::from(k);
    BaselineMoments {
        mu_home: g.mu_home,
        var_home: g.var_home,
        mu_away: g.mu_away,
        var_away: g.var_away,
        mu_2k: k * (g.mu_home + g.mu_away),
        var_2k: k * (g.var_home + g.var_away),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::MatchRecord;

    fn probs(h: f64, t: f64, a: f64) -> ContextProbs {
        ContextProbs::new(h, t, a).unwrap()
    }

    fn season_from_scores(scores: &[(u32, u32)]) -> SeasonView {
        let matches = scores
            .iter()
            .enumerate()
            .map(|(i, &(h, a))| MatchRecord {
                league: "L".into(),
                season: "S".into(),
                round: i as u32 + 1,
                home: format!("H{i}"),
                away: format!("A{i}"),
                home_score: h,
                away_score: a,
            })
            .collect();
        SeasonView::from_matches("L", "S", matches)
    }

    #[test]
    fn frequencies() {
        let mut scores = vec![(2, 1); 5];
        scores.extend([(1, 1); 3]);
        scores.extend([(0, 2); 2]);
        let p = estimate_context_probs(&season_from_scores(&scores), &ScoringScheme::soccer()).unwrap();
        assert_eq!((p.p_home, p.p_tie, p.p_away, p.n_matches), (0.5, 0.3, 0.2, 10));

        let p = estimate_context_probs(&season_from_scores(&[(3, 0); 4]), &ScoringScheme::soccer()).unwrap();
        assert_eq!((p.p_home, p.p_tie, p.p_away), (1.0, 0.0, 0.0));
    }

    #[test]
    fn empty_season_and_tie_in_tieless_sport() {
        let empty = SeasonView::from_matches("L", "S", vec![]);
        assert!(matches!(
            estimate_context_probs(&empty, &ScoringScheme::soccer()),
            Err(BaselineError::EmptySeason(_))
        ));
        let tied = season_from_scores(&[(100, 100)]);
        assert!(matches!(
            estimate_context_probs(&tied, &ScoringScheme::basketball()),
            Err(BaselineError::UnclassifiableScore { .. })
        ));
    }

    #[test]
    fn soccer_moments_match_hand_evaluation() {
        let m = moments(&probs(0.5, 0.3, 0.2), &ScoringScheme::soccer(), 1);
        assert!((m.mu_home - 1.8).abs() < 1e-12);
        assert!((m.var_home - 1.56).abs() < 1e-12);
        // away: mu = 0.3 + 0.6 = 0.9, E[X²] = 0.3 + 1.8 = 2.1
        assert!((m.mu_away - 0.9).abs() < 1e-12);
        assert!((m.var_away - (2.1 - 0.81)).abs() < 1e-12);
        assert!((m.var_2k - (1.56 + 1.29)).abs() < 1e-12);
    }

    #[test]
    fn basketball_moments_are_bernoulli() {
        let m = moments(&probs(0.5, 0.0, 0.5), &ScoringScheme::basketball(), 41);
        assert!((m.mu_2k - 41.0).abs() < 1e-12);
        assert!((m.var_2k - 20.5).abs() < 1e-12);
        let m = moments(&probs(0.62, 0.0, 0.38), &ScoringScheme::basketball(), 1);
        assert!((m.var_home - 0.62 * 0.38).abs() < 1e-12);
    }

    #[test]
    fn deterministic_outcome_has_zero_variance() {
        let m = moments(&probs(1.0, 0.0, 0.0), &ScoringScheme::soccer(), 19);
        assert_eq!(m.var_home, 0.0);
        assert_eq!(m.var_away, 0.0);
        assert_eq!(m.mu_2k, 19.0 * 3.0);
    }

    #[test]
    fn scheme_validation_and_json() {
        let json = r#"{"name":"sets","outcomes":[
            {"label":"win","when":"greater","home_points":3,"away_points":0},
            {"label":"loss","when":"less","home_points":0,"away_points":3}]}"#;
        let s: ScoringScheme = serde_json::from_str(json).unwrap();
        assert!(!s.allows_ties());
        assert_eq!(s.points(Outcome::AwayWin), Some((0.0, 3.0)));

        let missing = r#"{"name":"x","outcomes":[
            {"label":"win","when":"greater","home_points":3,"away_points":0}]}"#;
        assert!(serde_json::from_str::<ScoringScheme>(missing).is_err());

        let round_trip: ScoringScheme =
            serde_json::from_str(&serde_json::to_string(&ScoringScheme::handball()).unwrap()).unwrap();
        assert_eq!(round_trip, ScoringScheme::handball());
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        assert!(ContextProbs::new(0.5, 0.3, 0.3).is_err());
        assert!(ContextProbs::new(1.1, -0.1, 0.0).is_err());
    }
}
