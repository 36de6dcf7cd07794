use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dic::DicReport;
use super::model::{
    deviance, log_gamma_kernel, log_posterior, poisson_kernel, rate, share, BtData, Hyper,
    ModelSpec, Params,
};
use super::BtError;
use crate::exec::Execution;
use crate::rng::{mix_seed, stream_rng, StreamRng};
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub n_iter: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    pub seed: u64,
    pub target_accept: f64,
    /// Store `ε` in every retained sample (large for long seasons).
    pub keep_eps: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_iter: 10_000,
            burn_in: 2_000,
            thin: 5,
            seed: 0,
            target_accept: 0.39,
            keep_eps: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub w: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    pub tau_w: f64,
    pub tau_eps: f64,
    pub log_post: f64,
    pub deviance: f64,
}

/// Post-burn-in acceptance fractions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    /// Over every coordinate proposal.
    pub overall: f64,
    pub w: f64,
    pub eps: f64,
    pub tau_w: f64,
    pub tau_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub options: FitOptions,
    pub teams: Vec<String>,
    pub columns: Vec<String>,
    pub samples: Vec<PosteriorSample>,
    pub acceptance: AcceptanceRates,
    /// Posterior mean of `exp(w·x_i)` per team.
    pub alpha_hat: BTreeMap<String, f64>,
    pub w_mean: Vec<f64>,
    pub w_sd: Vec<f64>,
    /// Central 95% credible interval per coordinate.
    pub w_ci: Vec<(f64, f64)>,
    pub eps_mean: Vec<f64>,
    pub tau_w_mean: f64,
    pub tau_eps_mean: f64,
    pub dic: DicReport,
    /// Fraction of retained game rates that hit the floor.
    pub floor_rate: f64,
    pub w_scales: Vec<f64>,
}

impl FitResult {
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance.overall
    }
}

/// Log target in the sampled coordinates `(w, ε, log τ_w, log τ_ε)`.
pub fn log_target(params: &Params, data: &BtData, hyper: &Hyper) -> Result<f64, BtError> {
    Ok(log_posterior(params, data, hyper)? + params.tau_w.ln() + params.tau_eps.ln())
}

/// Log Metropolis ratio for a symmetric proposal `from → to`.
pub fn log_acceptance(
    from: &Params,
    to: &Params,
    data: &BtData,
    hyper: &Hyper,
) -> Result<f64, BtError> {
    Ok(log_target(to, data, hyper)? - log_target(from, data, hyper)?)
}

fn accept(rng: &mut StreamRng, log_ratio: f64) -> (bool, f64) {
    if log_ratio.is_nan() {
        return (false, 0.0);
    }
    let p = log_ratio.min(0.0).exp();
    (p >= 1.0 || rng.random::<f64>() < p, p)
}

#[derive(Default)]
struct Tally {
    proposed: u64,
    accepted: u64,
}

impl Tally {
    fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

struct Chain<'a> {
    data: &'a BtData,
    w: Vec<f64>,
    eps: Vec<f64>,
    log_tau_w: f64,
    log_tau_eps: f64,
    eta: Vec<f64>,
    pi: Vec<f64>,
    ll: Vec<f64>,
    ll_sum: f64,
    scale_w: Vec<f64>,
    scale_eps: Vec<f64>,
    scale_tau: [f64; 2],
    eta_new: Vec<f64>,
    pi_new: Vec<f64>,
    ll_new: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(data: &'a BtData) -> Self {
        let k = data.n_games();
        let resid: Vec<f64> = data
            .games
            .iter()
            .map(|g| f64::from(g.y) - 0.5 * f64::from(g.n))
            .collect();
        let half: Vec<f64> = data.games.iter().map(|g| 0.5 * f64::from(g.n)).collect();
        let excess = stats::sample_variance(&resid) - stats::mean(&half);
        let tau_eps = 1.0 / excess.max(1.0);
        let scale_eps = data
            .games
            .iter()
            .map(|g| 2.4 / (1.0 / f64::from(g.y.max(1)) + tau_eps).sqrt())
            .collect();
        let mut c = Self {
            data,
            w: vec![0.0; data.dim()],
            eps: vec![0.0; k],
            log_tau_w: 0.0,
            log_tau_eps: tau_eps.ln(),
            eta: vec![0.0; data.n_teams()],
            pi: vec![0.0; k],
            ll: vec![0.0; k],
            ll_sum: 0.0,
            scale_w: vec![0.05; data.dim()],
            scale_eps,
            scale_tau: [0.5, 0.5],
            eta_new: vec![0.0; data.n_teams()],
            pi_new: vec![0.0; k],
            ll_new: vec![0.0; k],
        };
        c.refresh();
        c
    }

    fn refresh(&mut self) {
        self.eta = self.data.eta(&self.w);
        for (k, g) in self.data.games.iter().enumerate() {
            self.pi[k] = share(self.eta[g.home], self.eta[g.away]);
            self.ll[k] = poisson_kernel(g.y, rate(g.n, self.pi[k], self.eps[k]).0);
        }
        self.ll_sum = self.ll.iter().sum();
    }

    fn params(&self) -> Params {
        Params {
            w: self.w.clone(),
            eps: self.eps.clone(),
            tau_w: self.log_tau_w.exp(),
            tau_eps: self.log_tau_eps.exp(),
        }
    }

    fn ss_w(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum()
    }

    fn ss_eps(&self) -> f64 {
        self.eps.iter().map(|v| v * v).sum()
    }

    fn step_w(&mut self, j: usize, rng: &mut StreamRng) -> (bool, f64) {
        let delta = self.scale_w[j] * rng.sample::<f64, _>(StandardNormal);
        let old = self.w[j];
        let new = old + delta;
        for (i, xi) in self.data.x.iter().enumerate() {
            self.eta_new[i] = self.eta[i] + delta * xi[j];
        }
        let mut ll_new_sum = 0.0;
        for (k, g) in self.data.games.iter().enumerate() {
            let p = share(self.eta_new[g.home], self.eta_new[g.away]);
            self.pi_new[k] = p;
            let l = poisson_kernel(g.y, rate(g.n, p, self.eps[k]).0);
            self.ll_new[k] = l;
            ll_new_sum += l;
        }
        let tau = self.log_tau_w.exp();
        let log_ratio = ll_new_sum - self.ll_sum - 0.5 * tau * (new * new - old * old);
        let (ok, p) = accept(rng, log_ratio);
        if ok {
            self.w[j] = new;
            std::mem::swap(&mut self.eta, &mut self.eta_new);
            std::mem::swap(&mut self.pi, &mut self.pi_new);
            std::mem::swap(&mut self.ll, &mut self.ll_new);
            self.ll_sum = ll_new_sum;
        }
        (ok, p)
    }

    fn step_eps(&mut self, k: usize, rng: &mut StreamRng) -> (bool, f64) {
        let g = self.data.games[k];
        let old = self.eps[k];
        let new = old + self.scale_eps[k] * rng.sample::<f64, _>(StandardNormal);
        let l = poisson_kernel(g.y, rate(g.n, self.pi[k], new).0);
        let tau = self.log_tau_eps.exp();
        let log_ratio = l - self.ll[k] - 0.5 * tau * (new * new - old * old);
        let (ok, p) = accept(rng, log_ratio);
        if ok {
            self.eps[k] = new;
            self.ll_sum += l - self.ll[k];
            self.ll[k] = l;
        }
        (ok, p)
    }

    /// Random walk on a log precision with Gaussian prior block of size `m`
    /// and sum of squares `ss`; the `+ log τ` Jacobian folds into the shape.
    fn step_log_tau(
        current: f64,
        scale: f64,
        m: usize,
        ss: f64,
        shape: f64,
        rate_: f64,
        rng: &mut StreamRng,
    ) -> (f64, bool, f64) {
        let new = current + scale * rng.sample::<f64, _>(StandardNormal);
        let f = |lt: f64| {
            let tau = lt.exp();
            0.5 * m as f64 * lt - 0.5 * tau * ss + log_gamma_kernel(tau, shape, rate_) + lt
        };
        let (ok, p) = accept(rng, f(new) - f(current));
        (if ok { new } else { current }, ok, p)
    }

    fn floored(&self) -> usize {
        self.data
            .games
            .iter()
            .enumerate()
            .filter(|(k, g)| rate(g.n, self.pi[*k], self.eps[*k]).1)
            .count()
    }
}

fn adapt(scale: &mut f64, gamma: f64, prob: f64, target: f64) {
    *scale = (scale.ln() + gamma * (prob - target)).exp().clamp(1e-8, 1e8);
}

/// One Metropolis-within-Gibbs chain.
pub fn fit(data: &BtData, spec: &ModelSpec, opts: &FitOptions) -> Result<FitResult, BtError> {
    spec.validate()?;
    if data.dim() != spec.dim() {
        return Err(BtError::InvalidSpec(format!(
            "model has {} columns, data has {}",
            spec.dim(),
            data.dim()
        )));
    }
    if opts.n_iter <= opts.burn_in {
        return Err(BtError::InsufficientIterations {
            n_iter: opts.n_iter,
            burn_in: opts.burn_in,
        });
    }
    if opts.thin == 0 || !(0.0 < opts.target_accept && opts.target_accept < 1.0) {
        return Err(BtError::InvalidSpec("thin must be ≥ 1, target in (0, 1)".into()));
    }

    let h = spec.hyper;
    let mut rng = stream_rng(opts.seed, 0);
    let mut c = Chain::new(data);
    let lp0 = log_posterior(&c.params(), data, &h)
        .map_err(|e| BtError::ChainDiverged(format!("initial state: {e}")))?;
    if !lp0.is_finite() {
        return Err(BtError::ChainDiverged("initial state".into()));
    }

    let (d, k) = (data.dim(), data.n_games());
    let target = opts.target_accept;
    let mut tally = [Tally::default(), Tally::default(), Tally::default(), Tally::default()];
    let mut samples = Vec::new();
    let mut eps_sum = vec![0.0; k];
    let mut floored = 0usize;

    for t in 0..opts.n_iter {
        let tuning = t < opts.burn_in;
        let gamma = (1.0 + t as f64).powf(-0.6);
        let mut record = |block: usize, ok: bool| {
            if !tuning {
                tally[block].proposed += 1;
                tally[block].accepted += u64::from(ok);
            }
        };

        for j in 0..d {
            let (ok, p) = c.step_w(j, &mut rng);
            record(0, ok);
            if tuning {
                adapt(&mut c.scale_w[j], gamma, p, target);
            }
        }
        for kk in 0..k {
            let (ok, p) = c.step_eps(kk, &mut rng);
            record(1, ok);
            if tuning {
                adapt(&mut c.scale_eps[kk], gamma, p, target);
            }
        }
        c.ll_sum = c.ll.iter().sum();

        let ss = c.ss_w();
        let (lt, ok, p) =
            Chain::step_log_tau(c.log_tau_w, c.scale_tau[0], d, ss, h.a, h.b, &mut rng);
        c.log_tau_w = lt;
        record(2, ok);
        if tuning {
            adapt(&mut c.scale_tau[0], gamma, p, target);
        }
        let ss = c.ss_eps();
        let (lt, ok, p) =
            Chain::step_log_tau(c.log_tau_eps, c.scale_tau[1], k, ss, h.c, h.d, &mut rng);
        c.log_tau_eps = lt;
        record(3, ok);
        if tuning {
            adapt(&mut c.scale_tau[1], gamma, p, target);
        }

        if !c.ll_sum.is_finite() {
            return Err(BtError::ChainDiverged(format!("iteration {t}")));
        }
        if !tuning && (t - opts.burn_in).is_multiple_of(opts.thin) {
            let params = c.params();
            let log_post = log_posterior(&params, data, &h)
                .map_err(|e| BtError::ChainDiverged(format!("iteration {t}: {e}")))?;
            for (s, e) in eps_sum.iter_mut().zip(&c.eps) {
                *s += e;
            }
            floored += c.floored();
            samples.push(PosteriorSample {
                w: params.w,
                eps: opts.keep_eps.then_some(params.eps),
                tau_w: params.tau_w,
                tau_eps: params.tau_eps,
                log_post,
                deviance: -2.0 * c.ll_sum,
            });
        }
    }

    let n = samples.len() as f64;
    let eps_mean: Vec<f64> = eps_sum.iter().map(|s| s / n).collect();
    let total: u64 = tally.iter().map(|t| t.proposed).sum();
    let acc: u64 = tally.iter().map(|t| t.accepted).sum();
    let acceptance = AcceptanceRates {
        overall: acc as f64 / total as f64,
        w: tally[0].rate(),
        eps: tally[1].rate(),
        tau_w: tally[2].rate(),
        tau_eps: tally[3].rate(),
    };
    let mut result = summarize(data, spec, opts, samples, eps_mean, acceptance);
    result.floor_rate = floored as f64 / (n * k as f64);
    result.w_scales = c.scale_w.clone();
    Ok(result)
}

fn summarize(
    data: &BtData,
    spec: &ModelSpec,
    opts: &FitOptions,
    samples: Vec<PosteriorSample>,
    eps_mean: Vec<f64>,
    acceptance: AcceptanceRates,
) -> FitResult {
    let d = data.dim();
    let n = samples.len() as f64;
    let column = |j: usize| samples.iter().map(|s| s.w[j]).collect::<Vec<f64>>();
    let w_mean: Vec<f64> = (0..d).map(|j| stats::mean(&column(j))).collect();
    let w_sd: Vec<f64> = (0..d).map(|j| stats::sample_sd(&column(j))).collect();
    let w_ci: Vec<(f64, f64)> = (0..d)
        .map(|j| {
            let s = stats::sorted(&column(j));
            (stats::quantile_sorted(&s, 0.025), stats::quantile_sorted(&s, 0.975))
        })
        .collect();
    let mut alpha_sum = vec![0.0; data.n_teams()];
    for s in &samples {
        for (a, v) in alpha_sum.iter_mut().zip(data.alpha(&s.w)) {
            *a += v;
        }
    }
    let alpha_hat = data
        .teams
        .iter()
        .cloned()
        .zip(alpha_sum.iter().map(|a| a / n))
        .collect();
    let d_bar = samples.iter().map(|s| s.deviance).sum::<f64>() / n;
    let dic = DicReport::from_parts(d_bar, deviance(&w_mean, &eps_mean, data));
    FitResult {
        spec: spec.clone(),
        options: opts.clone(),
        teams: data.teams.clone(),
        columns: data.columns.clone(),
        tau_w_mean: samples.iter().map(|s| s.tau_w).sum::<f64>() / n,
        tau_eps_mean: samples.iter().map(|s| s.tau_eps).sum::<f64>() / n,
        samples,
        acceptance,
        alpha_hat,
        w_mean,
        w_sd,
        w_ci,
        eps_mean,
        dic,
        floor_rate: 0.0,
        w_scales: Vec::new(),
    }
}

/// Independent chains pooled into one posterior summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiFit {
    pub chains: Vec<FitResult>,
    /// Split-R̂ per weight coordinate; NaN with fewer than four retained draws.
    pub rhat: Vec<f64>,
    pub pooled: FitResult,
}

/// `n_chains` chains with seeds `mix_seed(opts.seed, c)`.
pub fn fit_chains(
    data: &BtData,
    spec: &ModelSpec,
    opts: &FitOptions,
    n_chains: usize,
    exec: Execution,
) -> Result<MultiFit, BtError> {
    if n_chains == 0 {
        return Err(BtError::InvalidSpec("need at least one chain".into()));
    }
    let chains: Vec<FitResult> = exec
        .map_range(n_chains, |c| {
            let o = FitOptions {
                seed: mix_seed(opts.seed, c as u64),
                ..opts.clone()
            };
            fit(data, spec, &o)
        })
        .into_iter()
        .collect::<Result<_, _>>()?;

    let d = data.dim();
    let rhat = (0..d)
        .map(|j| {
            let draws: Vec<Vec<f64>> = chains
                .iter()
                .map(|ch| ch.samples.iter().map(|s| s.w[j]).collect())
                .collect();
            split_rhat(&draws)
        })
        .collect();

    let samples: Vec<PosteriorSample> = chains
        .iter()
        .flat_map(|c| c.samples.iter().cloned())
        .collect();
    let weights: Vec<f64> = chains.iter().map(|c| c.samples.len() as f64).collect();
    let total: f64 = weights.iter().sum();
    let eps_mean = (0..data.n_games())
        .map(|k| {
            chains
                .iter()
                .zip(&weights)
                .map(|(c, w)| c.eps_mean[k] * w)
                .sum::<f64>()
                / total
        })
        .collect();
    let mean_of = |f: fn(&AcceptanceRates) -> f64| {
        chains.iter().map(|c| f(&c.acceptance)).sum::<f64>() / n_chains as f64
    };
    let acceptance = AcceptanceRates {
        overall: mean_of(|a| a.overall),
        w: mean_of(|a| a.w),
        eps: mean_of(|a| a.eps),
        tau_w: mean_of(|a| a.tau_w),
        tau_eps: mean_of(|a| a.tau_eps),
    };
    let mut pooled = summarize(data, spec, opts, samples, eps_mean, acceptance);
    pooled.floor_rate = chains
        .iter()
        .zip(&weights)
        .map(|(c, w)| c.floor_rate * w)
        .sum::<f64>()
        / total;
    pooled.w_scales = chains[0].w_scales.clone();
    Ok(MultiFit {
        chains,
        rhat,
        pooled,
    })
}

/// Split-R̂: each chain is halved and the halves compared as separate chains.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    if n < 2 {
        return f64::NAN;
    }
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..n], &c[n..2 * n]])
        .collect();
    let means: Vec<f64> = halves.iter().map(|h| stats::mean(h)).collect();
    let within = halves.iter().map(|h| stats::sample_variance(h)).sum::<f64>() / halves.len() as f64;
    let between = n as f64 * stats::sample_variance(&means);
    let nf = n as f64;
    let var_plus = (nf - 1.0) / nf * within + between / nf;
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (var_plus / within).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btpoisson::model::GameObs;

    fn toy() -> BtData {
        let teams: Vec<String> = (0..4).map(|i| format!("T{i}")).collect();
        let x = vec![vec![1.0], vec![0.5], vec![-0.5], vec![-1.0]];
        let mut games = Vec::new();
        for h in 0..4 {
            for a in 0..4 {
                if h != a {
                    let y = 10 + 3 * (a as u32) - 3 * (h as u32).min(3);
                    games.push(GameObs { home: h, away: a, n: 20, y });
                }
            }
        }
        BtData::new(teams, vec!["CO".into()], x, games).unwrap()
    }

    fn spec() -> ModelSpec {
        ModelSpec::new(vec![crate::features::FeatureName::CO])
    }

    #[test]
    fn seeded_fit_is_reproducible() {
        let opts = FitOptions {
            n_iter: 400,
            burn_in: 100,
            thin: 2,
            seed: 42,
            ..FitOptions::default()
        };
        let a = fit(&toy(), &spec(), &opts).unwrap();
        let b = fit(&toy(), &spec(), &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 150);
        assert!(a.alpha_hat.values().all(|&v| v > 0.0));
        assert!(a.acceptance.overall > 0.0 && a.acceptance.overall < 1.0);
    }

    #[test]
    fn rejects_short_runs() {
        let opts = FitOptions {
            n_iter: 100,
            burn_in: 100,
            ..FitOptions::default()
        };
        assert!(matches!(
            fit(&toy(), &spec(), &opts),
            Err(BtError::InsufficientIterations { .. })
        ));
    }

    #[test]
    fn reverse_move_ratio_cancels() {
        let data = toy();
        let h = Hyper::default();
        let a = Params {
            w: vec![0.3],
            eps: vec![0.1; data.n_games()],
            tau_w: 2.0,
            tau_eps: 0.5,
        };
        let mut b = a.clone();
        b.w[0] = -0.2;
        b.eps[3] = 1.5;
        b.tau_eps = 0.8;
        let fwd = log_acceptance(&a, &b, &data, &h).unwrap();
        let back = log_acceptance(&b, &a, &data, &h).unwrap();
        assert!((fwd + back).abs() < 1e-9);
    }

    #[test]
    fn rhat_of_identical_chains() {
        let c: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = split_rhat(&[c.clone(), c]);
        assert!(r < 1.1, "{r}");
        let shifted = vec![vec![0.0, 0.1, 0.0, 0.1], vec![5.0, 5.1, 5.0, 5.1]];
        assert!(split_rhat(&shifted) > 2.0);
    }
}
