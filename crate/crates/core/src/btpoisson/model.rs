use serde::{Deserialize, Serialize};

use super::BtError;
use crate::corpus::SeasonView;
use crate::features::{FeatureName, FeatureTable};

/// Lower bound on the Poisson rate `λ_k`.
pub const RATE_FLOOR: f64 = 1e-6;

/// Gamma shape/rate pairs: `(a, b)` for `τ_w`, `(c, d)` for `τ_ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            a: 0.01,
            b: 0.01,
            c: 0.01,
            d: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub features: Vec<FeatureName>,
    #[serde(default)]
    pub hyper: Hyper,
    /// Adds a constant column. It cancels in every win probability, so only
    /// the prior pins it down.
    #[serde(default)]
    pub include_intercept: bool,
}

impl ModelSpec {
    pub fn new(features: Vec<FeatureName>) -> Self {
        Self {
            features,
            hyper: Hyper::default(),
            include_intercept: false,
        }
    }

    pub fn validate(&self) -> Result<(), BtError> {
        if self.features.is_empty() {
            return Err(BtError::InvalidSpec("no features".into()));
        }
        let mut seen = self.features.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.features.len() {
            return Err(BtError::InvalidSpec("repeated feature".into()));
        }
        let h = self.hyper;
        if [h.a, h.b, h.c, h.d].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(BtError::InvalidSpec("hyperparameters must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.features.len() + usize::from(self.include_intercept)
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.features.iter().map(|f| f.to_string()).collect();
        if self.include_intercept {
            names.push("intercept".into());
        }
        names
    }

    /// Human-readable label such as `CO+A5+AP`.
    pub fn label(&self) -> String {
        self.column_names().join("+")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameObs {
    pub home: usize,
    pub away: usize,
    /// Combined score `N_k`.
    pub n: u32,
    /// Home score `Y_k`.
    pub y: u32,
}

/// Design matrix and observations for one season.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BtData {
    pub teams: Vec<String>,
    pub columns: Vec<String>,
    /// `teams.len() × columns.len()`.
    pub x: Vec<Vec<f64>>,
    pub games: Vec<GameObs>,
}

impl BtData {
    pub fn new(
        teams: Vec<String>,
        columns: Vec<String>,
        x: Vec<Vec<f64>>,
        games: Vec<GameObs>,
    ) -> Result<Self, BtError> {
        let bad = |m: String| Err(BtError::InvalidData(m));
        if teams.len() < 2 {
            return bad("need at least two teams".into());
        }
        if x.len() != teams.len() || x.iter().any(|r| r.len() != columns.len()) {
            return bad(format!("design must be {} × {}", teams.len(), columns.len()));
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return bad("non-finite feature value".into());
        }
        if games.is_empty() {
            return bad("no games".into());
        }
        for (k, g) in games.iter().enumerate() {
            if g.home >= teams.len() || g.away >= teams.len() || g.home == g.away {
                return bad(format!("game {k}: bad team index"));
            }
            if g.y > g.n {
                return bad(format!("game {k}: home score {} exceeds total {}", g.y, g.n));
            }
        }
        Ok(Self {
            teams,
            columns,
            x,
            games,
        })
    }

    /// Joins a season's matches with standardized features.
    pub fn from_season(
        season: &SeasonView,
        table: &FeatureTable,
        spec: &ModelSpec,
    ) -> Result<Self, BtError> {
        spec.validate()?;
        let mut x = Vec::with_capacity(season.teams.len());
        for team in &season.teams {
            let row = table
                .row(team)
                .ok_or_else(|| BtError::MissingFeatures(team.clone()))?;
            let mut xs = Vec::with_capacity(spec.dim());
            for &f in &spec.features {
                let v = row.get(f);
                if !v.is_finite() {
                    return Err(BtError::MissingFeatureValue {
                        team: team.clone(),
                        feature: f.to_string(),
                    });
                }
                xs.push(v);
            }
            if spec.include_intercept {
                xs.push(1.0);
            }
            x.push(xs);
        }
        Self::new(
            season.teams.clone(),
            spec.column_names(),
            x,
            games_of(season),
        )
    }

    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn n_games(&self) -> usize {
        self.games.len()
    }

    /// Linear predictors `w·x_i`.
    pub fn eta(&self, w: &[f64]) -> Vec<f64> {
        self.x
            .iter()
            .map(|xi| xi.iter().zip(w).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn alpha(&self, w: &[f64]) -> Vec<f64> {
        self.eta(w).into_iter().map(f64::exp).collect()
    }
}

/// One observation per match, in the season's match order.
pub fn games_of(season: &SeasonView) -> Vec<GameObs> {
    season
        .matches
        .iter()
        .map(|m| GameObs {
            home: season.team_index(&m.home).expect("team listed"),
            away: season.team_index(&m.away).expect("team listed"),
            n: m.total_score(),
            y: m.home_score,
        })
        .collect()
}

/// Model parameters on their natural scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub w: Vec<f64>,
    pub eps: Vec<f64>,
    pub tau_w: f64,
    pub tau_eps: f64,
}

/// `π = α_i/(α_i + α_j)`.
pub fn bt_probability(alpha_i: f64, alpha_j: f64) -> Result<f64, BtError> {
    if !(alpha_i > 0.0 && alpha_j > 0.0) {
        return Err(BtError::NonPositiveSkill(alpha_i, alpha_j));
    }
    Ok(alpha_i / (alpha_i + alpha_j))
}

/// `α_h/(α_h + α_a)` from log-skills, without overflow.
pub(crate) fn share(eta_h: f64, eta_a: f64) -> f64 {
    1.0 / (1.0 + (eta_a - eta_h).exp())
}

/// `(λ, floored)` for a game given its home share and random effect.
pub(crate) fn rate(n: u32, pi: f64, eps: f64) -> (f64, bool) {
    let lam = f64::from(n) * pi + eps;
    if lam < RATE_FLOOR || lam.is_nan() {
        (RATE_FLOOR, true)
    } else {
        (lam, false)
    }
}

/// Poisson log-density of `y` at rate `λ` without the `log y!` term.
pub(crate) fn poisson_kernel(y: u32, lam: f64) -> f64 {
    if y == 0 {
        -lam
    } else {
        f64::from(y) * lam.ln() - lam
    }
}

/// `λ_k` and whether the floor was applied.
pub fn game_rate(params: &Params, data: &BtData, k: usize) -> (f64, bool) {
    let g = data.games[k];
    let eta = |i: usize| -> f64 { data.x[i].iter().zip(&params.w).map(|(a, b)| a * b).sum() };
    rate(g.n, share(eta(g.home), eta(g.away)), params.eps[k])
}

/// `Σ_k (y_k log λ_k − λ_k)`.
pub fn log_likelihood(w: &[f64], eps: &[f64], data: &BtData) -> f64 {
    let eta = data.eta(w);
    data.games
        .iter()
        .zip(eps)
        .map(|(g, &e)| poisson_kernel(g.y, rate(g.n, share(eta[g.home], eta[g.away]), e).0))
        .sum()
}

/// `−2 Σ_k (y_k log λ_k − λ_k)`.
pub fn deviance(w: &[f64], eps: &[f64], data: &BtData) -> f64 {
    -2.0 * log_likelihood(w, eps, data)
}

pub(crate) fn log_prior_w(w: &[f64], tau_w: f64) -> f64 {
    let ss: f64 = w.iter().map(|v| v * v).sum();
    0.5 * w.len() as f64 * tau_w.ln() - 0.5 * tau_w * ss
}

pub(crate) fn log_prior_eps(eps: &[f64], tau_eps: f64) -> f64 {
    let ss: f64 = eps.iter().map(|v| v * v).sum();
    0.5 * eps.len() as f64 * tau_eps.ln() - 0.5 * tau_eps * ss
}

pub(crate) fn log_gamma_kernel(tau: f64, shape: f64, rate: f64) -> f64 {
    (shape - 1.0) * tau.ln() - rate * tau
}

/// Unnormalised log posterior density in `(w, ε, τ_w, τ_ε)`.
pub fn log_posterior(params: &Params, data: &BtData, hyper: &Hyper) -> Result<f64, BtError> {
    if params.w.len() != data.dim() || params.eps.len() != data.n_games() {
        return Err(BtError::InvalidData("parameter dimensions".into()));
    }
    if !(params.tau_w > 0.0 && params.tau_eps > 0.0) {
        return Err(BtError::NonFiniteLogPost { term: "precision" });
    }
    let terms = [
        ("likelihood", log_likelihood(&params.w, &params.eps, data)),
        ("weight prior", log_prior_w(&params.w, params.tau_w)),
        ("effect prior", log_prior_eps(&params.eps, params.tau_eps)),
        ("tau_w prior", log_gamma_kernel(params.tau_w, hyper.a, hyper.b)),
        ("tau_eps prior", log_gamma_kernel(params.tau_eps, hyper.c, hyper.d)),
    ];
    let mut total = 0.0;
    for (term, v) in terms {
        if !v.is_finite() {
            return Err(BtError::NonFiniteLogPost { term });
        }
        total += v;
    }
    Ok(total)
}

/// Gradient of [`log_posterior`] in `w`. Floored games contribute nothing.
pub fn gradient_w(params: &Params, data: &BtData) -> Vec<f64> {
    let eta = data.eta(&params.w);
    let mut grad: Vec<f64> = params.w.iter().map(|w| -params.tau_w * w).collect();
    for (g, &e) in data.games.iter().zip(&params.eps) {
        let pi = share(eta[g.home], eta[g.away]);
        let (lam, floored) = rate(g.n, pi, e);
        if floored {
            continue;
        }
        let scale = (f64::from(g.y) / lam - 1.0) * f64::from(g.n) * pi * (1.0 - pi);
        for (j, gj) in grad.iter_mut().enumerate() {
            *gj += scale * (data.x[g.home][j] - data.x[g.away][j]);
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BtData {
        BtData::new(
            vec!["A".into(), "B".into()],
            vec!["f".into()],
            vec![vec![1.0], vec![-1.0]],
            vec![
                GameObs {
                    home: 0,
                    away: 1,
                    n: 10,
                    y: 7,
                },
                GameObs {
                    home: 1,
                    away: 0,
                    n: 12,
                    y: 4,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn probability_examples() {
        assert_eq!(bt_probability(2.0, 2.0).unwrap(), 0.5);
        assert_eq!(bt_probability(3.0, 1.0).unwrap(), 0.75);
        let p = bt_probability(3.0 * 7.3, 7.3).unwrap();
        assert!((p - 0.75).abs() < 1e-12);
        assert!(bt_probability(0.0, 1.0).is_err());
        assert!(bt_probability(1.0, -2.0).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(200, 0.5, 0.0), (100.0, false));
        assert_eq!(rate(100, 0.75, -2.0), (73.0, false));
        assert_eq!(rate(10, 0.5, -9.0), (RATE_FLOOR, true));
    }

    #[test]
    fn single_game_at_mode() {
        assert!((poisson_kernel(5, 5.0) - (5.0 * 5f64.ln() - 5.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_parameters_leave_gamma_terms() {
        let data = tiny();
        let p = Params {
            w: vec![0.0],
            eps: vec![0.0, 0.0],
            tau_w: 2.0,
            tau_eps: 3.0,
        };
        let h = Hyper::default();
        let lp = log_posterior(&p, &data, &h).unwrap();
        let ll = poisson_kernel(7, 5.0) + poisson_kernel(4, 6.0);
        let expected = ll
            + 0.5 * 2f64.ln()
            + 3f64.ln()
            + log_gamma_kernel(2.0, h.a, h.b)
            + log_gamma_kernel(3.0, h.c, h.d);
        assert!((lp - expected).abs() < 1e-12);
    }

    #[test]
    fn data_validation() {
        let err = BtData::new(
            vec!["A".into(), "B".into()],
            vec![],
            vec![vec![], vec![]],
            vec![GameObs {
                home: 0,
                away: 1,
                n: 3,
                y: 4,
            }],
        );
        assert!(matches!(err, Err(BtError::InvalidData(_))));
    }
}
