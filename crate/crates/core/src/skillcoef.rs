//! The skill coefficient φ = (s² − σ²₂ₖ)/s², its Monte-Carlo interval under
//! the random model, season classification and the team-removal procedure.
//!
//! `s²` is the sample variance of the teams' final table points and `σ²₂ₖ`
//! the variance a single team's total would have if every match were an
//! independent draw from the season's context probabilities.
//!
//! When per-team game counts differ (pooled seasons, or seasons accepted
//! with `allow_irregular`) the baseline generalises to the expected sample
//! variance of independent totals with unequal means:
//! `mean_i(h_i σ²_h + a_i σ²_a) + Σ_i (μ_i − μ̄)² / (n − 1)`, which equals
//! `σ²₂ₖ` when every team plays `k` home and `k` away games.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::Rng;

use crate::baseline::{
    estimate_context_probs, game_moments, game_moments_from_table, season_outcomes,
    BaselineError, BaselineMoments, ContextProbs, GameMoments, ScoringScheme,
};
use crate::corpus::SeasonView;
use crate::exec::Execution;
use crate::rng::{mix_seed, stream_rng};
use crate::stats;

/// Fewest Monte-Carlo replicates accepted for an interval.
pub const MIN_REPLICATES: usize = 1000;
/// The removal loop stops rather than go below this many teams.
pub const MIN_TEAMS_AFTER_REMOVAL: usize = 4;

#[derive(Debug, Error)]
pub enum SkillError {
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("{0} replicates requested, at least {MIN_REPLICATES} required")]
    TooFewReplicates(usize),
    #[error("ci level must lie in (0, 1), got {0}")]
    BadLevel(f64),
    #[error("season is not skill-driven: φ = {phi:.4} with interval [{ci_low:.4}, {ci_high:.4}]")]
    NotSkillSeason { phi: f64, ci_low: f64, ci_high: f64 },
    #[error("removal reached {} teams without the season becoming random", .trace.teams_remaining)]
    ExhaustedTeams { trace: Box<RemovalTrace> },
    #[error("no seasons given")]
    NoSeasons,
}

/// Divisor used for the sample variance of final scores.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceDenominator {
    /// n − 1.
    #[default]
    Unbiased,
    /// n.
    Population,
}

impl VarianceDenominator {
    pub fn divisor(self, n: usize) -> f64 {
        match self {
            VarianceDenominator::Unbiased => n.saturating_sub(1).max(1) as f64,
            VarianceDenominator::Population => n.max(1) as f64,
        }
    }

    fn variance(self, xs: &[f64]) -> f64 {
        if xs.len() < 2 {
            return 0.0;
        }
        stats::sum_sq_dev(xs) / self.divisor(xs.len())
    }
}

/// Final table points per team.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonTable {
    pub teams: Vec<String>,
    pub points: Vec<f64>,
    pub s2: f64,
}

impl SeasonTable {
    pub fn mean(&self) -> f64 {
        stats::mean(&self.points)
    }

    pub fn points_of(&self, team: &str) -> Option<f64> {
        self.teams
            .iter()
            .position(|t| t == team)
            .map(|i| self.points[i])
    }
}

pub fn final_table(season: &SeasonView, scheme: &ScoringScheme) -> Result<SeasonTable, SkillError> {
    final_table_with(season, scheme, VarianceDenominator::default())
}

pub fn final_table_with(
    season: &SeasonView,
    scheme: &ScoringScheme,
    denominator: VarianceDenominator,
) -> Result<SeasonTable, SkillError> {
    let outcomes = season_outcomes(season, scheme)?;
    let mut points = vec![0.0; season.n_teams()];
    for (f, o) in season.fixtures.iter().zip(outcomes) {
        let (h, a) = scheme.points(o).expect("classified outcomes have points");
        points[f.home] += h;
        points[f.away] += a;
    }
    let s2 = denominator.variance(&points);
    Ok(SeasonTable {
        teams: season.teams.clone(),
        points,
        s2,
    })
}

/// A φ value; `degenerate` marks s² = 0, where φ is reported as −∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phi {
    #[serde(with = "crate::serde_float")]
    pub value: f64,
    pub degenerate: bool,
}

pub fn phi_from_variances(s2: f64, baseline_variance: f64) -> Phi {
    if s2 <= 0.0 {
        return Phi {
            value: f64::NEG_INFINITY,
            degenerate: true,
        };
    }
    Phi {
        value: (s2 - baseline_variance) / s2,
        degenerate: false,
    }
}

pub fn phi(table: &SeasonTable, moments: &BaselineMoments) -> Phi {
    phi_from_variances(table.s2, moments.var_2k)
}

/// Per-team counts and the pieces needed for the baseline variance.
struct VenueCounts<'a> {
    home: &'a [u32],
    away: &'a [u32],
    regular_k: Option<u32>,
}

impl<'a> VenueCounts<'a> {
    fn of(season: &'a SeasonView) -> Self {
        Self {
            home: &season.home_games,
            away: &season.away_games,
            regular_k: (!season.irregular).then(|| season.k()),
        }
    }

    fn baseline_variance(&self, g: &GameMoments, denominator: VarianceDenominator) -> f64 {
        if let Some(k) = self.regular_k {
            return f64::from(k) * (g.var_home + g.var_away);
        }
        let n = self.home.len();
        let mut means = Vec::with_capacity(n);
        let mut var_sum = 0.0;
        for (&h, &a) in self.home.iter().zip(self.away) {
            let (h, a) = (f64::from(h), f64::from(a));
            means.push(h * g.mu_home + a * g.mu_away);
            var_sum += h * g.var_home + a * g.var_away;
        }
        var_sum / n as f64 + stats::sum_sq_dev(&means) / denominator.divisor(n)
    }
}

/// Expected variance of the final scores under the random model for this
/// season's schedule.
pub fn baseline_variance(
    season: &SeasonView,
    moments: &GameMoments,
    denominator: VarianceDenominator,
) -> f64 {
    VenueCounts::of(season).baseline_variance(moments, denominator)
}

/// φ for one season without any Monte-Carlo work.
#[derive(Clone, Debug, PartialEq)]
pub struct SeasonPhi {
    pub probs: ContextProbs,
    pub table: SeasonTable,
    pub baseline_variance: f64,
    pub phi: Phi,
}

pub fn season_phi(
    season: &SeasonView,
    scheme: &ScoringScheme,
    denominator: VarianceDenominator,
) -> Result<SeasonPhi, SkillError> {
    let probs = estimate_context_probs(season, scheme)?;
    let table = final_table_with(season, scheme, denominator)?;
    let g = game_moments(&probs, scheme);
    let base = baseline_variance(season, &g, denominator);
    let phi = phi_from_variances(table.s2, base);
    Ok(SeasonPhi {
        probs,
        table,
        baseline_variance: base,
        phi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// φ above the interval: more spread than luck explains.
    Skill,
    /// φ inside the interval.
    Random,
    /// φ below the interval: less spread than luck explains.
    SubRandom,
}

pub fn classify(phi: f64, ci_low: f64, ci_high: f64) -> Classification {
    if phi > ci_high {
        Classification::Skill
    } else if phi < ci_low {
        Classification::SubRandom
    } else {
        Classification::Random
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiOptions {
    pub n_replicates: usize,
    pub replicate_baseline: ReplicateBaseline,
    pub seed: u64,
    pub ci_level: f64,
    pub denominator: VarianceDenominator,
    pub execution: Execution,
}

impl Default for PhiOptions {
    fn default() -> Self {
        Self {
            n_replicates: 10_000,
            replicate_baseline: ReplicateBaseline::Observed,
            seed: 0,
            ci_level: 0.95,
            denominator: VarianceDenominator::Unbiased,
            execution: Execution::Parallel,
        }
    }
}

impl PhiOptions {
    pub fn validate(&self) -> Result<(), SkillError> {
        if self.n_replicates < MIN_REPLICATES {
            return Err(SkillError::TooFewReplicates(self.n_replicates));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(SkillError::BadLevel(self.ci_level));
        }
        Ok(())
    }

    fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Which baseline variance a replicated season's φ is measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicateBaseline {
    /// The observed season's baseline, from the probabilities used to simulate.
    #[default]
    Observed,
    /// Re-estimate the probabilities from each replicate's own outcomes.
    Refit,
}

/// Percentile interval of φ over replicated seasons.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloCi {
    pub ci_low: f64,
    pub ci_high: f64,
    /// Replicate φ values in replicate order.
    pub replicates: Vec<f64>,
}

/// Replays a fixed schedule with i.i.d. outcomes and recomputes φ.
struct Replayer<'a> {
    home: Vec<u32>,
    away: Vec<u32>,
    n_teams: usize,
    venues: VenueCounts<'a>,
    home_points: [f64; 3],
    away_points: [f64; 3],
    denominator: VarianceDenominator,
}

impl<'a> Replayer<'a> {
    fn new(season: &'a SeasonView, scheme: &ScoringScheme, denominator: VarianceDenominator) -> Self {
        let (home_points, away_points) = scheme.point_table();
        Self {
            home: season.fixtures.iter().map(|f| f.home as u32).collect(),
            away: season.fixtures.iter().map(|f| f.away as u32).collect(),
            n_teams: season.n_teams(),
            venues: VenueCounts::of(season),
            home_points,
            away_points,
            denominator,
        }
    }

    /// One replicate. Without a fixed baseline the context probabilities are
    /// re-estimated from the replicate's own outcomes.
    fn replicate(
        &self,
        rng: &mut impl Rng,
        cutoffs: [f64; 2],
        fixed_base: Option<f64>,
        points: &mut [f64],
    ) -> f64 {
        points.fill(0.0);
        let mut counts = [0u32; 3];
        for (&h, &a) in self.home.iter().zip(&self.away) {
            let u: f64 = rng.random();
            let o = if u < cutoffs[0] {
                0
            } else if u < cutoffs[1] {
                1
            } else {
                2
            };
            counts[o] += 1;
            points[h as usize] += self.home_points[o];
            points[a as usize] += self.away_points[o];
        }
        let s2 = self.denominator.variance(points);
        if let Some(base) = fixed_base {
            return phi_from_variances(s2, base).value;
        }
        let n = self.home.len() as f64;
        let p = [
            f64::from(counts[0]) / n,
            f64::from(counts[1]) / n,
            f64::from(counts[2]) / n,
        ];
        let g = game_moments_from_table(&p, &self.home_points, &self.away_points);
        let base = self.venues.baseline_variance(&g, self.denominator);
        phi_from_variances(s2, base).value
    }
}

/// Monte-Carlo interval for φ under the random model on the season's own
/// schedule. Replicate `i` draws from ChaCha stream `i` of `opts.seed`, so the
/// interval is identical for parallel and sequential execution.
pub fn monte_carlo_ci(
    season: &SeasonView,
    scheme: &ScoringScheme,
    probs: &ContextProbs,
    opts: &PhiOptions,
) -> Result<MonteCarloCi, SkillError> {
    opts.validate()?;
    let replayer = Replayer::new(season, scheme, opts.denominator);
    let cutoffs = [probs.p_home, probs.p_home + probs.p_tie];
    let fixed_base = match opts.replicate_baseline {
        ReplicateBaseline::Observed => {
            let (hp, ap) = scheme.point_table();
            let g = game_moments_from_table(&probs.as_array(), &hp, &ap);
            Some(replayer.venues.baseline_variance(&g, opts.denominator))
        }
        ReplicateBaseline::Refit => None,
    };
    let replicates = opts.execution.map_range(opts.n_replicates, |i| {
        let mut rng = stream_rng(opts.seed, i as u64);
        let mut points = vec![0.0; replayer.n_teams];
        replayer.replicate(&mut rng, cutoffs, fixed_base, &mut points)
    });
    let sorted = stats::sorted(&replicates);
    let tail = (1.0 - opts.ci_level) / 2.0;
    Ok(MonteCarloCi {
        ci_low: stats::quantile_sorted(&sorted, tail),
        ci_high: stats::quantile_sorted(&sorted, 1.0 - tail),
        replicates,
    })
}

/// Everything reported for one season.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiReport {
    pub league: String,
    pub season: String,
    pub n_teams: usize,
    pub n_matches: usize,
    pub games_per_team: u32,
    pub probs: ContextProbs,
    pub s2: f64,
    pub baseline_variance: f64,
    #[serde(with = "crate::serde_float")]
    pub phi: f64,
    #[serde(with = "crate::serde_float")]
    pub ci_low: f64,
    #[serde(with = "crate::serde_float")]
    pub ci_high: f64,
    pub ci_level: f64,
    pub n_replicates: usize,
    pub classification: Classification,
    pub rng_seed: u64,
    /// s² was zero and φ is the −∞ sentinel.
    pub degenerate: bool,
    /// Unequal per-team game counts; the baseline uses each team's own counts.
    pub irregular: bool,
}

impl PhiReport {
    pub fn contains_phi(&self) -> bool {
        self.classification == Classification::Random
    }
}

/// φ, its interval and the classification for one season.
pub fn evaluate_season(
    season: &SeasonView,
    scheme: &ScoringScheme,
    opts: &PhiOptions,
) -> Result<PhiReport, SkillError> {
    opts.validate()?;
    let sp = season_phi(season, scheme, opts.denominator)?;
    let ci = monte_carlo_ci(season, scheme, &sp.probs, opts)?;
    let classification = if sp.phi.degenerate {
        Classification::SubRandom
    } else {
        classify(sp.phi.value, ci.ci_low, ci.ci_high)
    };
    Ok(PhiReport {
        league: season.league.clone(),
        season: season.season.clone(),
        n_teams: season.n_teams(),
        n_matches: season.n_matches(),
        games_per_team: season.games_per_team,
        probs: sp.probs,
        s2: sp.table.s2,
        baseline_variance: sp.baseline_variance,
        phi: sp.phi.value,
        ci_low: ci.ci_low,
        ci_high: ci.ci_high,
        ci_level: opts.ci_level,
        n_replicates: opts.n_replicates,
        classification,
        rng_seed: opts.seed,
        degenerate: sp.phi.degenerate,
        irregular: season.irregular,
    })
}

/// One removal: the team taken out and the state of the season just before.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalStep {
    pub team: String,
    /// Final points at or above the league mean ("best" side).
    pub above_mean: bool,
    pub points: f64,
    #[serde(with = "crate::serde_float")]
    pub phi_before: f64,
    #[serde(with = "crate::serde_float")]
    pub ci_low_before: f64,
    #[serde(with = "crate::serde_float")]
    pub ci_high_before: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalTrace {
    pub league: String,
    pub season: String,
    pub initial_teams: usize,
    pub removed: Vec<RemovalStep>,
    #[serde(with = "crate::serde_float")]
    pub final_phi: f64,
    #[serde(with = "crate::serde_float")]
    pub final_ci_low: f64,
    #[serde(with = "crate::serde_float")]
    pub final_ci_high: f64,
    pub teams_remaining: usize,
    pub n_replicates: usize,
    pub rng_seed: u64,
}

impl RemovalTrace {
    pub fn removed_teams(&self) -> Vec<String> {
        self.removed.iter().map(|s| s.team.clone()).collect()
    }

    /// Removed teams from the top of the table.
    pub fn removed_plus(&self) -> Vec<String> {
        self.removed
            .iter()
            .filter(|s| s.above_mean)
            .map(|s| s.team.clone())
            .collect()
    }

    pub fn fraction_removed(&self) -> f64 {
        self.removed.len() as f64 / self.initial_teams as f64
    }
}

/// Index of the team farthest from the mean score. Ties prefer the team
/// above the mean, then the alphabetically first name.
pub fn farthest_from_mean(table: &SeasonTable) -> usize {
    let mean = table.mean();
    let dist: Vec<f64> = table.points.iter().map(|p| (p - mean).abs()).collect();
    let max = dist.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-9 * max.max(1.0);
    let tied: Vec<usize> = (0..dist.len()).filter(|&i| max - dist[i] <= tol).collect();
    let above: Vec<usize> = tied
        .iter()
        .copied()
        .filter(|&i| table.points[i] >= mean)
        .collect();
    let pool = if above.is_empty() { &tied } else { &above };
    *pool
        .iter()
        .min_by(|&&a, &&b| table.teams[a].cmp(&table.teams[b]))
        .expect("a non-empty table has a farthest team")
}

/// Removes teams one at a time, farthest from the mean first, until φ lies
/// inside its Monte-Carlo interval. Context probabilities, φ and the interval
/// are recomputed from the surviving matches after every removal; step `s`
/// uses seed `mix_seed(opts.seed, s)` (step 0 uses `opts.seed` itself).
pub fn reduce_to_random(
    season: &SeasonView,
    scheme: &ScoringScheme,
    opts: &PhiOptions,
) -> Result<RemovalTrace, SkillError> {
    let mut report = evaluate_season(season, scheme, opts)?;
    if report.classification != Classification::Skill {
        return Err(SkillError::NotSkillSeason {
            phi: report.phi,
            ci_low: report.ci_low,
            ci_high: report.ci_high,
        });
    }
    let mut current = season.clone();
    let mut trace = RemovalTrace {
        league: season.league.clone(),
        season: season.season.clone(),
        initial_teams: season.n_teams(),
        removed: Vec::new(),
        final_phi: report.phi,
        final_ci_low: report.ci_low,
        final_ci_high: report.ci_high,
        teams_remaining: season.n_teams(),
        n_replicates: opts.n_replicates,
        rng_seed: opts.seed,
    };
    while report.classification != Classification::Random {
        if current.n_teams() <= MIN_TEAMS_AFTER_REMOVAL {
            return Err(SkillError::ExhaustedTeams {
                trace: Box::new(trace),
            });
        }
        let table = final_table_with(&current, scheme, opts.denominator)?;
        let idx = farthest_from_mean(&table);
        trace.removed.push(RemovalStep {
            team: table.teams[idx].clone(),
            above_mean: table.points[idx] >= table.mean(),
            points: table.points[idx],
            phi_before: report.phi,
            ci_low_before: report.ci_low,
            ci_high_before: report.ci_high,
        });
        current = current.without_team(&table.teams[idx]);
        let step_opts = opts.with_seed(mix_seed(opts.seed, trace.removed.len() as u64));
        report = evaluate_season(&current, scheme, &step_opts)?;
        trace.final_phi = report.phi;
        trace.final_ci_low = report.ci_low;
        trace.final_ci_high = report.ci_high;
        trace.teams_remaining = current.n_teams();
    }
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulativePoint {
    /// Label of the latest season in the pool.
    pub season: String,
    pub n_seasons: usize,
    pub n_teams: usize,
    #[serde(with = "crate::serde_float")]
    pub phi: f64,
    pub degenerate: bool,
    /// Per-team game counts differ across the pool.
    pub irregular: bool,
}

/// φ on all matches from the first season up to each season in turn, pooled
/// as one championship.
pub fn cumulative_phi(
    seasons: &[SeasonView],
    scheme: &ScoringScheme,
    denominator: VarianceDenominator,
) -> Result<Vec<CumulativePoint>, SkillError> {
    if seasons.is_empty() {
        return Err(SkillError::NoSeasons);
    }
    (1..=seasons.len())
        .map(|t| {
            let last = &seasons[t - 1];
            let pooled = SeasonView::pooled(&seasons[..t], &last.season);
            let sp = season_phi(&pooled, scheme, denominator)?;
            Ok(CumulativePoint {
                season: last.season.clone(),
                n_seasons: t,
                n_teams: pooled.n_teams(),
                phi: sp.phi.value,
                degenerate: sp.phi.degenerate,
                irregular: pooled.irregular,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::MatchRecord;

    fn m(home: &str, away: &str, hs: u32, as_: u32) -> MatchRecord {
        MatchRecord {
            league: "L".into(),
            season: "S".into(),
            round: 1,
            home: home.into(),
            away: away.into(),
            home_score: hs,
            away_score: as_,
        }
    }

    #[test]
    fn two_teams_each_winning_at_home() {
        let s = SeasonView::from_matches("L", "S", vec![m("A", "B", 2, 0), m("B", "A", 1, 0)]);
        let t = final_table(&s, &ScoringScheme::soccer()).unwrap();
        assert_eq!(t.points, vec![3.0, 3.0]);
        assert_eq!(t.s2, 0.0);
    }

    #[test]
    fn hand_worked_four_team_table() {
        let matches = vec![
            m("A", "B", 2, 0),
            m("A", "C", 1, 0),
            m("A", "D", 3, 1),
            m("B", "A", 1, 1),
            m("C", "A", 2, 1),
            m("D", "A", 1, 0),
            m("B", "C", 0, 0),
            m("C", "B", 0, 2),
            m("B", "D", 1, 2),
            m("D", "B", 0, 0),
            m("C", "D", 4, 0),
            m("D", "C", 1, 1),
        ];
        let s = SeasonView::from_matches("L", "S", matches);
        let t = final_table(&s, &ScoringScheme::soccer()).unwrap();
        // A: 3 + 3 + 3 + 1 = 10   B: 1 + 1 + 3 + 1 = 6
        // C: 3 + 1 + 3 + 1 = 8    D: 3 + 3 + 1 + 1 = 8
        assert_eq!(t.points, vec![10.0, 6.0, 8.0, 8.0]);
        let mean = 8.0;
        let expected = ((10.0f64 - mean).powi(2) + (6.0f64 - mean).powi(2)) / 3.0;
        assert!((t.s2 - expected).abs() < 1e-12);
        let pop = final_table_with(&s, &ScoringScheme::soccer(), VarianceDenominator::Population).unwrap();
        assert!((pop.s2 - expected * 3.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn all_ties_season() {
        let matches = vec![
            m("A", "B", 1, 1),
            m("B", "A", 0, 0),
            m("A", "C", 2, 2),
            m("C", "A", 0, 0),
            m("B", "C", 0, 0),
            m("C", "B", 3, 3),
        ];
        let s = SeasonView::from_matches("L", "S", matches);
        let t = final_table(&s, &ScoringScheme::soccer()).unwrap();
        assert!(t.points.iter().all(|&p| p == 4.0));
        assert_eq!(t.s2, 0.0);
        let sp = season_phi(&s, &ScoringScheme::soccer(), VarianceDenominator::Unbiased).unwrap();
        assert!(sp.phi.degenerate);
        assert_eq!(sp.phi.value, f64::NEG_INFINITY);
    }

    #[test]
    fn phi_arithmetic() {
        assert_eq!(phi_from_variances(4.0, 4.0).value, 0.0);
        assert_eq!(phi_from_variances(8.0, 4.0).value, 0.5);
        let d = phi_from_variances(0.0, 4.0);
        assert!(d.degenerate && d.value == f64::NEG_INFINITY);
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify(0.8, -0.2, 0.3), Classification::Skill);
        assert_eq!(classify(0.1, -0.2, 0.3), Classification::Random);
        assert_eq!(classify(-1.9, -0.2, 0.3), Classification::SubRandom);
        assert_eq!(classify(0.3, -0.2, 0.3), Classification::Random);
    }

    #[test]
    fn farthest_team_tie_breaks() {
        let table = |teams: &[&str], points: &[f64]| SeasonTable {
            teams: teams.iter().map(|t| t.to_string()).collect(),
            points: points.to_vec(),
            s2: 0.0,
        };
        // best and worst equally far: best goes
        assert_eq!(farthest_from_mean(&table(&["A", "B", "C"], &[0.0, 5.0, 10.0])), 2);
        // four-way tie: above-mean side, then alphabetical
        let t = table(&["Zeta", "Alpha", "M", "N"], &[10.0, 10.0, 0.0, 0.0]);
        assert_eq!(t.teams[farthest_from_mean(&t)], "Alpha");
        // two worst tied and farther than the best
        let t = table(&["Q", "P", "R", "S", "T", "U"], &[0.0, 0.0, 5.0, 5.0, 5.0, 5.0]);
        assert_eq!(t.teams[farthest_from_mean(&t)], "P");
    }

    #[test]
    fn rejects_small_replicate_counts() {
        let s = SeasonView::from_matches("L", "S", vec![m("A", "B", 2, 0), m("B", "A", 1, 0)]);
        let probs = ContextProbs::new(0.5, 0.25, 0.25).unwrap();
        let opts = PhiOptions {
            n_replicates: 10,
            ..PhiOptions::default()
        };
        assert!(matches!(
            monte_carlo_ci(&s, &ScoringScheme::soccer(), &probs, &opts),
            Err(SkillError::TooFewReplicates(10))
        ));
    }

    #[test]
    fn report_json_round_trip_keeps_sentinel() {
        let r = PhiReport {
            league: "L".into(),
            season: "S".into(),
            n_teams: 3,
            n_matches: 6,
            games_per_team: 4,
            probs: ContextProbs::new(0.0, 1.0, 0.0).unwrap(),
            s2: 0.0,
            baseline_variance: 0.0,
            phi: f64::NEG_INFINITY,
            ci_low: -0.5,
            ci_high: 0.25,
            ci_level: 0.95,
            n_replicates: 1000,
            classification: Classification::SubRandom,
            rng_seed: 9,
            degenerate: true,
            irregular: false,
        };
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"-inf\""));
        let back: PhiReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
