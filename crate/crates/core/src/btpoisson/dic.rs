use serde::{Deserialize, Serialize};

use super::mcmc::FitResult;
use super::model::{deviance, BtData};

/// Deviance information criterion, `D̄ + p_D` with `p_D = D̄ − D(θ̄)`.
///
/// Deviance omits the `log y!` terms, so values can be negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DicReport {
    pub d_bar: f64,
    pub d_hat: f64,
    pub p_d: f64,
    pub dic: f64,
}

impl DicReport {
    pub(crate) fn from_parts(d_bar: f64, d_hat: f64) -> Self {
        let p_d = d_bar - d_hat;
        Self {
            d_bar,
            d_hat,
            p_d,
            dic: d_bar + p_d,
        }
    }
}

/// DIC at the posterior means of `w` and `ε`.
pub fn dic(fit: &FitResult, data: &BtData) -> DicReport {
    let d_bar = fit.samples.iter().map(|s| s.deviance).sum::<f64>() / fit.samples.len() as f64;
    DicReport::from_parts(d_bar, deviance(&fit.w_mean, &fit.eps_mean, data))
}
