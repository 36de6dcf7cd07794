//! Bradley-Terry–Poisson random-effects model.
//!
//! Team `i` has skill `α_i = exp(w·x_i)`. In game `k` the home score is
//! `Y_k ~ Poisson(λ_k)` with `λ_k = N_k α_h/(α_h + α_a) + ε_k`, where `N_k` is
//! the combined score. Priors: `w ~ N(0, τ_w⁻¹ I)`, `ε_k ~ N(0, τ_ε⁻¹)`,
//! `τ_w ~ Gamma(a, b)`, `τ_ε ~ Gamma(c, d)` (rate parametrisation).

mod dic;
mod mcmc;
mod model;
mod underdog;

pub use dic::{dic, DicReport};
pub use mcmc::{
    fit, fit_chains, log_acceptance, log_target, split_rhat, AcceptanceRates, FitOptions,
    FitResult, MultiFit, PosteriorSample,
};
pub use model::{
    bt_probability, deviance, game_rate, gradient_w, log_likelihood, log_posterior, BtData,
    GameObs, Hyper, ModelSpec, Params, RATE_FLOOR,
};
pub use underdog::{skill_win_correlation, underdog_probs, UnderdogCell, UnderdogTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BtError {
    #[error("skills must be positive, got {0} and {1}")]
    NonPositiveSkill(f64, f64),
    #[error("invalid model: {0}")]
    InvalidSpec(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("team `{0}` has no feature row")]
    MissingFeatures(String),
    #[error("feature {feature} is missing for team `{team}`")]
    MissingFeatureValue { team: String, feature: String },
    #[error("log-posterior is not finite ({term})")]
    NonFiniteLogPost { term: &'static str },
    #[error("chain diverged: {0}")]
    ChainDiverged(String),
    #[error("need more iterations than burn-in ({n_iter} <= {burn_in})")]
    InsufficientIterations { n_iter: usize, burn_in: usize },
    #[error("no matches satisfy the condition")]
    EmptyCondition,
}
