//! Simulated leagues with known ground truth.
//!
//! Three generators share one schedule builder:
//!
//! - `Random`: every match outcome is an i.i.d. draw from `(P_h, P_t, P_a)`.
//! - `Planted`: as `Random`, except designated strong teams beat everyone else
//!   with a fixed probability regardless of venue.
//! - `BradleyTerry`: home scores follow `Poisson(N_k α_h/(α_h+α_a) + ε_k)` with
//!   `log α_i = w·x_i` and `ε_k ~ N(0, 1/τ_ε)`.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{BaselineError, ContextProbs, Outcome, SchemeSpec, ScoringScheme};
use crate::corpus::{MatchRecord, SeasonView};
use crate::exec::Execution;
use crate::rng::{mix_seed, stream_rng, StreamRng};
use crate::stats;

/// Lower bound applied to a simulated Poisson rate.
pub const RATE_FLOOR: f64 = 1e-6;
const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("need at least 4 teams, got {0}")]
    TooFewTeams(usize),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("could not draw a decisive score for match {0} after {MAX_REDRAWS} attempts")]
    RedrawLimit(usize),
    #[error("this generator does not apply to the configured mode")]
    WrongMode,
}

/// One scheduled game, before an outcome is drawn.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledMatch {
    pub round: u32,
    pub home: String,
    pub away: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Circle-method single round-robin followed by its mirror.
    #[default]
    DoubleRoundRobin,
    /// `rounds` circle-method matchings (cycled), each played home and away.
    /// With an even team count every team plays `2 * rounds` games.
    MirroredRounds { rounds: usize },
    /// Exactly these fixtures.
    Replay(Vec<ScheduledMatch>),
}

impl Schedule {
    pub fn replay_of(season: &SeasonView) -> Self {
        Schedule::Replay(
            season
                .matches
                .iter()
                .map(|m| ScheduledMatch {
                    round: m.round,
                    home: m.home.clone(),
                    away: m.away.clone(),
                })
                .collect(),
        )
    }
}

/// How each match's combined score `N_k` is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalScore {
    Constant(u32),
    Poisson { mean: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SynthMode {
    Random {
        probs: [f64; 3],
    },
    Planted {
        probs: [f64; 3],
        /// Indices (into the team list) of the strong teams.
        strong: Vec<usize>,
        win_prob: f64,
    },
    BradleyTerry {
        weights: Vec<f64>,
        /// `n_teams × d`; drawn and standardised when absent.
        #[serde(default)]
        features: Option<Vec<Vec<f64>>>,
        eps_precision: f64,
        total: TotalScore,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default = "default_league")]
    pub league: String,
    #[serde(default = "default_season")]
    pub season: String,
    pub n_teams: usize,
    pub scheme: SchemeSpec,
    pub seed: u64,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(flatten)]
    pub mode: SynthMode,
}

fn default_league() -> String {
    "SYN".into()
}

fn default_season() -> String {
    "1".into()
}

impl SynthConfig {
    pub fn random(n_teams: usize, scheme: ScoringScheme, probs: [f64; 3], seed: u64) -> Self {
        Self {
            league: default_league(),
            season: default_season(),
            n_teams,
            scheme: scheme.into(),
            seed,
            schedule: Schedule::DoubleRoundRobin,
            mode: SynthMode::Random { probs },
        }
    }

    pub fn team_names(&self) -> Vec<String> {
        if let Schedule::Replay(fixtures) = &self.schedule {
            let mut names: Vec<String> = fixtures
                .iter()
                .flat_map(|f| [f.home.clone(), f.away.clone()])
                .collect();
            names.sort();
            names.dedup();
            return names;
        }
        let width = self.n_teams.to_string().len();
        (1..=self.n_teams)
            .map(|i| format!("T{i:0width$}"))
            .collect()
    }
}

/// Single round-robin matchings by the circle method. Odd team counts get a
/// bye slot, so each matching leaves one team idle.
pub fn circle_rounds(n_teams: usize) -> Vec<Vec<(usize, usize)>> {
    let slots = n_teams + n_teams % 2;
    let mut ring: Vec<usize> = (0..slots).collect();
    let mut rounds = Vec::with_capacity(slots - 1);
    for r in 0..slots - 1 {
        let mut pairs = Vec::with_capacity(slots / 2);
        for i in 0..slots / 2 {
            let (a, b) = (ring[i], ring[slots - 1 - i]);
            if a >= n_teams || b >= n_teams {
                continue;
            }
            // alternate venues so home counts stay balanced within a leg
            let flip = if i == 0 { r % 2 == 1 } else { i % 2 == 1 };
            pairs.push(if flip { (b, a) } else { (a, b) });
        }
        rounds.push(pairs);
        ring[1..].rotate_right(1);
    }
    rounds
}

fn build_schedule(config: &SynthConfig, names: &[String]) -> Result<Vec<ScheduledMatch>, SynthError> {
    let n = config.n_teams;
    let fixture = |round: usize, h: usize, a: usize| ScheduledMatch {
        round: round as u32,
        home: names[h].clone(),
        away: names[a].clone(),
    };
    match &config.schedule {
        Schedule::Replay(fixtures) => Ok(fixtures.clone()),
        Schedule::DoubleRoundRobin => {
            let rounds = circle_rounds(n);
            let legs = rounds.len();
            let mut out = Vec::with_capacity(n * (n - 1));
            for (r, pairs) in rounds.iter().enumerate() {
                for &(h, a) in pairs {
                    out.push(fixture(r + 1, h, a));
                    out.push(fixture(r + 1 + legs, a, h));
                }
            }
            Ok(out)
        }
        Schedule::MirroredRounds { rounds } => {
            let matchings = circle_rounds(n);
            if n % 2 == 1 && rounds % matchings.len() != 0 {
                return Err(SynthError::Invalid(format!(
                    "{n} teams: mirrored rounds must be a multiple of {}",
                    matchings.len()
                )));
            }
            let mut out = Vec::new();
            for j in 0..*rounds {
                for &(h, a) in &matchings[j % matchings.len()] {
                    out.push(fixture(2 * j + 1, h, a));
                    out.push(fixture(2 * j + 2, a, h));
                }
            }
            Ok(out)
        }
    }
}

fn check_probs(p: &[f64; 3], scheme: &ScoringScheme) -> Result<ContextProbs, SynthError> {
    let probs = ContextProbs::new(p[0], p[1], p[2])?;
    if !scheme.allows_ties() && probs.p_tie > 0.0 {
        return Err(SynthError::Invalid(format!(
            "scheme `{}` has no ties but P_t = {}",
            scheme.name, probs.p_tie
        )));
    }
    Ok(probs)
}

fn draw_outcome(rng: &mut StreamRng, p: [f64; 3]) -> Outcome {
    let u: f64 = rng.random();
    if u < p[0] {
        Outcome::HomeWin
    } else if u < p[0] + p[1] {
        Outcome::Tie
    } else {
        Outcome::AwayWin
    }
}

fn outcome_scores(o: Outcome) -> (u32, u32) {
    match o {
        Outcome::HomeWin => (1, 0),
        Outcome::Tie => (0, 0),
        Outcome::AwayWin => (0, 1),
    }
}

/// Match records from a `Random` or `Planted` configuration.
pub fn simulate_random_matches(config: &SynthConfig) -> Result<Vec<MatchRecord>, SynthError> {
    let scheme = config.scheme.resolve()?;
    let names = config.team_names();
    if names.len() < 4 {
        return Err(SynthError::TooFewTeams(names.len()));
    }
    let schedule = build_schedule(config, &names)?;
    let (base, strong, win_prob) = match &config.mode {
        SynthMode::Random { probs } => (check_probs(probs, &scheme)?, vec![], 0.0),
        SynthMode::Planted {
            probs,
            strong,
            win_prob,
        } => {
            if !(0.0..=1.0).contains(win_prob) {
                return Err(SynthError::Invalid(format!("win_prob {win_prob}")));
            }
            if let Some(bad) = strong.iter().find(|&&i| i >= names.len()) {
                return Err(SynthError::Invalid(format!("strong team index {bad}")));
            }
            let strong: Vec<String> = strong.iter().map(|&i| names[i].clone()).collect();
            (check_probs(probs, &scheme)?, strong, *win_prob)
        }
        SynthMode::BradleyTerry { .. } => return Err(SynthError::WrongMode),
    };
    let rest = 1.0 - win_prob;
    let (tie, loss) = if scheme.allows_ties() {
        (rest / 2.0, rest / 2.0)
    } else {
        (0.0, rest)
    };

    let mut rng = stream_rng(config.seed, 0);
    let out = schedule
        .into_iter()
        .map(|f| {
            let home_strong = strong.contains(&f.home);
            let away_strong = strong.contains(&f.away);
            let p = match (home_strong, away_strong) {
                (true, false) => [win_prob, tie, loss],
                (false, true) => [loss, tie, win_prob],
                _ => base.as_array(),
            };
            let (hs, as_) = outcome_scores(draw_outcome(&mut rng, p));
            MatchRecord {
                league: config.league.clone(),
                season: config.season.clone(),
                round: f.round,
                home: f.home,
                away: f.away,
                home_score: hs,
                away_score: as_,
            }
        })
        .collect();
    Ok(out)
}

pub fn simulate_random(config: &SynthConfig) -> Result<SeasonView, SynthError> {
    let records = simulate_random_matches(config)?;
    Ok(SeasonView::from_matches(&config.league, &config.season, records))
}

/// `count` independent seasons; season `i` uses seed `mix_seed(config.seed, i)`.
pub fn simulate_random_many(
    config: &SynthConfig,
    count: usize,
    exec: Execution,
) -> Result<Vec<SeasonView>, SynthError> {
    exec.map_range(count, |i| {
        let mut c = config.clone();
        c.seed = mix_seed(config.seed, i as u64);
        simulate_random(&c)
    })
    .into_iter()
    .collect()
}

/// Ground truth behind a Bradley-Terry simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BtTruth {
    pub teams: Vec<String>,
    /// `n_teams × d`, row per team in `teams` order.
    pub features: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Random effect of each match, aligned with the season's match order.
    pub eps: Vec<f64>,
}

impl BtTruth {
    pub fn alpha_of(&self, team: &str) -> Option<f64> {
        self.teams
            .iter()
            .position(|t| t == team)
            .map(|i| self.alpha[i])
    }
}

/// Standard normal columns rescaled to sample mean 0 and sd 1.
pub fn standardized_normal_features(n: usize, d: usize, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; d]; n];
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let (m, sd) = (stats::mean(&col), stats::sample_sd(&col));
        for (row, x) in rows.iter_mut().zip(&col) {
            row[j] = if sd > 0.0 { (x - m) / sd } else { 0.0 };
        }
    }
    rows
}

fn poisson(rng: &mut StreamRng, rate: f64) -> u32 {
    let rate = rate.max(RATE_FLOOR);
    Poisson::new(rate).expect("positive finite rate").sample(rng) as u32
}

pub fn simulate_bt(config: &SynthConfig) -> Result<(SeasonView, BtTruth), SynthError> {
    let SynthMode::BradleyTerry {
        weights,
        features,
        eps_precision,
        total,
    } = &config.mode
    else {
        return Err(SynthError::WrongMode);
    };
    let scheme = config.scheme.resolve()?;
    let names = config.team_names();
    if names.len() < 4 {
        return Err(SynthError::TooFewTeams(names.len()));
    }
    if !(eps_precision.is_finite() && *eps_precision > 0.0) {
        return Err(SynthError::Invalid(format!("eps_precision {eps_precision}")));
    }
    let d = weights.len();
    let features = match features {
        Some(rows) => {
            if rows.len() != names.len() || rows.iter().any(|r| r.len() != d) {
                return Err(SynthError::Invalid(format!(
                    "features must be {} × {d}",
                    names.len()
                )));
            }
            rows.clone()
        }
        None => standardized_normal_features(names.len(), d, &mut stream_rng(config.seed, 1)),
    };
    let alpha: Vec<f64> = features
        .iter()
        .map(|x| x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>().exp())
        .collect();
    let index = |t: &str| names.binary_search_by(|n| n.as_str().cmp(t)).expect("scheduled team");
    let eps_sd = eps_precision.recip().sqrt();

    let schedule = build_schedule(config, &names)?;
    let mut rng = stream_rng(config.seed, 0);
    let mut rows: Vec<(MatchRecord, f64)> = Vec::with_capacity(schedule.len());
    for (k, f) in schedule.into_iter().enumerate() {
        let (h, a) = (index(&f.home), index(&f.away));
        let n_total = match total {
            TotalScore::Constant(n) => *n,
            TotalScore::Poisson { mean } => poisson(&mut rng, *mean).max(1),
        };
        let share = alpha[h] / (alpha[h] + alpha[a]);
        let eps = eps_sd * rng.sample::<f64, _>(StandardNormal);
        let rate = f64::from(n_total) * share + eps;
        let mut tries = 0;
        let home_score = loop {
            let y = poisson(&mut rng, rate);
            let decisive = scheme.allows_ties() || 2 * y != n_total;
            if y <= n_total && decisive {
                break y;
            }
            tries += 1;
            if tries >= MAX_REDRAWS {
                return Err(SynthError::RedrawLimit(k));
            }
        };
        rows.push((
            MatchRecord {
                league: config.league.clone(),
                season: config.season.clone(),
                round: f.round,
                home: f.home,
                away: f.away,
                home_score,
                away_score: n_total - home_score,
            },
            eps,
        ));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let eps = rows.iter().map(|r| r.1).collect();
    let records = rows.into_iter().map(|r| r.0).collect();
    let season = SeasonView::from_matches(&config.league, &config.season, records);
    Ok((
        season,
        BtTruth {
            teams: names,
            features,
            weights: weights.clone(),
            alpha,
            eps,
        },
    ))
}
