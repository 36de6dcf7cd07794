use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use luckskill::btpoisson::{
    fit_chains, skill_win_correlation, underdog_probs, BtData, FitOptions, FitResult, Hyper,
    ModelSpec, UnderdogCell, UnderdogTable,
};
use luckskill::corpus::{load_rosters, write_matches, MatchRecord, SeasonView};
use luckskill::features::{
    compute_features, read_features, write_features, FeatureName, FeatureTable, TeamFeatures,
};
use luckskill::skillcoef::{
    evaluate_season, reduce_to_random, Classification, PhiOptions, PhiReport, RemovalTrace,
    SkillError,
};
use luckskill::synth::{simulate_bt, simulate_random_matches, SynthConfig, SynthMode};
use luckskill::ScoringScheme;

use crate::error::{CliError, CliResult, OrInvalid};
use crate::inputs::{self, delimiter_byte, season_year, MatchArgs, McArgs};
use crate::output::{num, opt_num, Output, Table};

fn invalid(msg: String) -> CliError {
    CliError::invalid(anyhow::anyhow!(msg))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, out: &mut Output) -> CliResult<T> {
    out.input(path)?;
    let text = std::fs::read_to_string(path).or_invalid()?;
    serde_json::from_str(&text)
        .or_invalid()
        .map_err(|e| e.context(format!("parsing {}", path.display())))
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Random,
    Bt,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mode: SimMode,
    /// JSON simulation configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "matches.csv")]
    pub out: PathBuf,
    /// Ground-truth skills and effects (bt mode).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Features file for the generated covariates (bt mode).
    #[arg(long)]
    pub features_out: Option<PathBuf>,
    /// Names for the generated covariates, in weight order.
    #[arg(long)]
    pub feature_names: Option<String>,
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    league: &'a str,
    season: &'a str,
    n_teams: usize,
    n_matches: usize,
    seed: u64,
    matches_file: String,
}

pub fn simulate(a: &SimulateArgs, seed: Option<u64>, out: &mut Output) -> CliResult<()> {
    let mut cfg: SynthConfig = read_json(&a.config, out)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let is_bt = matches!(cfg.mode, SynthMode::BradleyTerry { .. });
    if is_bt != (a.mode == SimMode::Bt) {
        return Err(invalid(format!(
            "--mode {:?} does not match the configuration's mode",
            a.mode
        )));
    }
    if !is_bt && (a.truth.is_some() || a.features_out.is_some()) {
        return Err(invalid("--truth and --features-out need bt mode".into()));
    }

    let records: Vec<MatchRecord> = if is_bt {
        let (season, truth) = simulate_bt(&cfg)?;
        if let Some(p) = &a.truth {
            out.json(p, &truth)?;
        }
        if let Some(p) = &a.features_out {
            let names = match &a.feature_names {
                Some(list) => FeatureName::parse_list(list)?,
                None => FeatureName::ALL[..truth.weights.len()].to_vec(),
            };
            if names.len() != truth.weights.len() {
                return Err(invalid(format!(
                    "{} feature names for {} weights",
                    names.len(),
                    truth.weights.len()
                )));
            }
            let year = season_year(&cfg.season).unwrap_or(0);
            let table = truth_features(&truth.teams, &truth.features, &names, year);
            let mut buf = Vec::new();
            write_features(&mut buf, &[table])?;
            out.write_bytes(p, &buf)?;
        }
        season.matches
    } else {
        simulate_random_matches(&cfg)?
    };
    let mut buf = Vec::new();
    write_matches(&mut buf, &records)?;
    let path = out.write_bytes(&a.out, &buf)?;

    let summary = SimulationSummary {
        league: &cfg.league,
        season: &cfg.season,
        n_teams: cfg.team_names().len(),
        n_matches: records.len(),
        seed: cfg.seed,
        matches_file: path.display().to_string(),
    };
    let mut t = Table::new(&["league", "season", "n_teams", "n_matches", "seed"]);
    t.push(vec![
        cfg.league.clone(),
        cfg.season.clone(),
        summary.n_teams.to_string(),
        summary.n_matches.to_string(),
        cfg.seed.to_string(),
    ]);
    out.report("simulation", &summary, &t)
}

/// Generated covariates as a features table; they are already standardized.
fn truth_features(
    teams: &[String],
    x: &[Vec<f64>],
    names: &[FeatureName],
    year: i32,
) -> FeatureTable {
    let rows = teams
        .iter()
        .zip(x)
        .map(|(team, xi)| {
            let mut vals = [f64::NAN; 10];
            for (f, v) in names.iter().zip(xi) {
                vals[f.index()] = *v;
            }
            TeamFeatures {
                team: team.clone(),
                raw: vals,
                standardized: vals,
                short_roster: false,
            }
        })
        .collect();
    FeatureTable { season: year, rows }
}

// ---------------------------------------------------------------- phi / reduce

#[derive(Debug, Args)]
pub struct PhiArgs {
    #[command(flatten)]
    pub input: MatchArgs,
    /// soccer, basketball, handball, volleyball, or a JSON scheme file.
    #[arg(long)]
    pub scheme: String,
    #[command(flatten)]
    pub mc: McArgs,
}

/// Seed for season `i` of a multi-season run.
pub fn season_seed(seed: u64, i: usize) -> u64 {
    if i == 0 {
        seed
    } else {
        luckskill::rng::mix_seed(seed, 1_000_000 + i as u64)
    }
}

pub fn phi_table(reports: &[PhiReport]) -> Table {
    let mut t = Table::new(&[
        "league",
        "season",
        "n_teams",
        "n_matches",
        "games_per_team",
        "p_home",
        "p_tie",
        "p_away",
        "s2",
        "baseline_variance",
        "phi",
        "ci_low",
        "ci_high",
        "classification",
        "n_replicates",
        "seed",
        "irregular",
    ]);
    for r in reports {
        t.push(vec![
            r.league.clone(),
            r.season.clone(),
            r.n_teams.to_string(),
            r.n_matches.to_string(),
            r.games_per_team.to_string(),
            num(r.probs.p_home),
            num(r.probs.p_tie),
            num(r.probs.p_away),
            num(r.s2),
            num(r.baseline_variance),
            num(r.phi),
            num(r.ci_low),
            num(r.ci_high),
            classification_name(r.classification).into(),
            r.n_replicates.to_string(),
            r.rng_seed.to_string(),
            r.irregular.to_string(),
        ]);
    }
    t
}

pub fn classification_name(c: Classification) -> &'static str {
    match c {
        Classification::Skill => "skill",
        Classification::Random => "random",
        Classification::SubRandom => "sub_random",
    }
}

pub fn phi(a: &PhiArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let scheme = inputs::scheme(&a.scheme, out)?;
    let seasons = a.input.seasons(out)?;
    let reports = seasons
        .iter()
        .enumerate()
        .map(|(i, s)| evaluate_season(s, &scheme, &a.mc.options(season_seed(seed, i))))
        .collect::<Result<Vec<_>, _>>()?;
    out.report("phi", &reports, &phi_table(&reports))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionStatus {
    /// The season became random after the listed removals.
    Reduced,
    /// The season was not a skill season; nothing removed.
    NotSkill,
    /// Too few teams would remain before the season became random.
    Exhausted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionRow {
    pub status: ReductionStatus,
    #[serde(flatten)]
    pub trace: RemovalTrace,
}

pub fn reduce_season(
    season: &SeasonView,
    scheme: &ScoringScheme,
    opts: &PhiOptions,
) -> Result<ReductionRow, SkillError> {
    match reduce_to_random(season, scheme, opts) {
        Ok(trace) => Ok(ReductionRow {
            status: ReductionStatus::Reduced,
            trace,
        }),
        Err(SkillError::ExhaustedTeams { trace }) => Ok(ReductionRow {
            status: ReductionStatus::Exhausted,
            trace: *trace,
        }),
        Err(SkillError::NotSkillSeason {
            phi,
            ci_low,
            ci_high,
        }) => Ok(ReductionRow {
            status: ReductionStatus::NotSkill,
            trace: RemovalTrace {
                league: season.league.clone(),
                season: season.season.clone(),
                initial_teams: season.n_teams(),
                removed: Vec::new(),
                final_phi: phi,
                final_ci_low: ci_low,
                final_ci_high: ci_high,
                teams_remaining: season.n_teams(),
                n_replicates: opts.n_replicates,
                rng_seed: opts.seed,
            },
        }),
        Err(e) => Err(e),
    }
}

pub fn removal_table(rows: &[(String, &ReductionRow)]) -> Table {
    let mut t = Table::new(&[
        "sport",
        "league",
        "season",
        "status",
        "step",
        "team",
        "above_mean",
        "points",
        "phi_before",
        "ci_low_before",
        "ci_high_before",
        "initial_teams",
    ]);
    for (sport, r) in rows {
        let tr = &r.trace;
        let status = serde_json::to_value(r.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        for (i, s) in tr.removed.iter().enumerate() {
            t.push(vec![
                sport.clone(),
                tr.league.clone(),
                tr.season.clone(),
                status.clone(),
                (i + 1).to_string(),
                s.team.clone(),
                s.above_mean.to_string(),
                num(s.points),
                num(s.phi_before),
                num(s.ci_low_before),
                num(s.ci_high_before),
                tr.initial_teams.to_string(),
            ]);
        }
    }
    t
}

pub fn reduce(a: &PhiArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let scheme = inputs::scheme(&a.scheme, out)?;
    let seasons = a.input.seasons(out)?;
    let rows = seasons
        .iter()
        .enumerate()
        .map(|(i, s)| reduce_season(s, &scheme, &a.mc.options(season_seed(seed, i))))
        .collect::<Result<Vec<_>, _>>()?;
    let labelled: Vec<(String, &ReductionRow)> =
        rows.iter().map(|r| (String::new(), r)).collect();
    let mut table = removal_table(&labelled);
    // the CSV keeps one line per removal; seasons with none still get a line
    for r in &rows {
        if r.trace.removed.is_empty() {
            let status = match r.status {
                ReductionStatus::NotSkill => "not_skill",
                ReductionStatus::Reduced => "reduced",
                ReductionStatus::Exhausted => "exhausted",
            };
            table.push(vec![
                String::new(),
                r.trace.league.clone(),
                r.trace.season.clone(),
                status.into(),
                "0".into(),
                String::new(),
                String::new(),
                String::new(),
                num(r.trace.final_phi),
                num(r.trace.final_ci_low),
                num(r.trace.final_ci_high),
                r.trace.initial_teams.to_string(),
            ]);
        }
    }
    out.report("removal", &rows, &table)
}

// ---------------------------------------------------------------- features

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub rosters: PathBuf,
    #[arg(long)]
    pub year: i32,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    #[arg(long, default_value = "features.csv")]
    pub out: PathBuf,
}

pub fn features(a: &FeaturesArgs, out: &mut Output) -> CliResult<()> {
    out.input(&a.rosters)?;
    let rosters = load_rosters(&a.rosters, delimiter_byte(a.delimiter)?)?;
    let table = compute_features(&rosters, a.year)?;
    let mut buf = Vec::new();
    write_features(&mut buf, std::slice::from_ref(&table))?;
    out.write_bytes(&a.out, &buf)?;
    out.json(&a.out.with_extension("json"), &table)?;
    out.report("features_summary", &table, &features_summary(&table))
}

fn features_summary(table: &FeatureTable) -> Table {
    let mut header = vec!["season", "team"];
    header.extend(FeatureName::ALL.iter().map(|f| f.as_str()));
    header.push("short_roster");
    let mut t = Table::new(&header);
    for r in &table.rows {
        let mut row = vec![table.season.to_string(), r.team.clone()];
        row.extend(r.standardized.iter().map(|v| num(*v)));
        row.push(r.short_roster.to_string());
        t.push(row);
    }
    t
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: MatchArgs,
    /// Features file with standardized columns.
    #[arg(long)]
    pub features: PathBuf,
    /// Comma-separated feature list, e.g. CO,A5,AP,VL,RC,SI.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 2_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 5)]
    pub thin: usize,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 0.39)]
    pub target_accept: f64,
    /// Gamma hyperparameters a,b,c,d.
    #[arg(long, default_value = "0.01,0.01,0.01,0.01")]
    pub hyper: String,
    /// Add a constant column (not identifiable; for experiments).
    #[arg(long)]
    pub intercept: bool,
    /// Store every retained ε draw.
    #[arg(long)]
    pub keep_eps: bool,
    /// Run chains on one thread.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long, default_value = "fit.json")]
    pub out: PathBuf,
}

/// Everything later commands need from a fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitFile {
    pub version: String,
    pub league: String,
    pub season: String,
    pub seed: u64,
    pub chain_seeds: Vec<u64>,
    pub spec: ModelSpec,
    pub options: FitOptions,
    pub acceptance_rates: Vec<f64>,
    /// Split-R̂ per weight; `None` when too few draws.
    pub rhat: Vec<Option<f64>>,
    /// Pooled summary; samples live in `chains`.
    pub summary: FitResult,
    pub chains: Vec<FitResult>,
    pub data: BtData,
    pub matches: Vec<MatchRecord>,
}

fn parse_hyper(s: &str) -> CliResult<Hyper> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .or_invalid()?;
    match v.as_slice() {
        [a, b, c, d] => Ok(Hyper {
            a: *a,
            b: *b,
            c: *c,
            d: *d,
        }),
        _ => Err(invalid(format!("--hyper needs four numbers, got `{s}`"))),
    }
}

fn pick_features<'a>(tables: &'a [FeatureTable], season: &str) -> CliResult<&'a FeatureTable> {
    if let [only] = tables {
        return Ok(only);
    }
    let year = season_year(season)
        .ok_or_else(|| invalid(format!("cannot read a year from season `{season}`")))?;
    tables
        .iter()
        .find(|t| t.season == year)
        .ok_or_else(|| invalid(format!("features file has no rows for {year}")))
}

pub fn fit(a: &FitArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let spec = ModelSpec {
        features: FeatureName::parse_list(&a.model)?,
        hyper: parse_hyper(&a.hyper)?,
        include_intercept: a.intercept,
    };
    spec.validate()?;
    let seasons = a.input.seasons(out)?;
    let season = match seasons.as_slice() {
        [one] => one,
        _ => {
            return Err(invalid(format!(
                "{} seasons selected; narrow with --league/--season",
                seasons.len()
            )))
        }
    };
    out.input(&a.features)?;
    let file = std::fs::File::open(&a.features).or_invalid()?;
    let tables = read_features(file)?;
    let table = pick_features(&tables, &season.season)?;
    let data = BtData::from_season(season, table, &spec)?;
    let opts = FitOptions {
        n_iter: a.iters,
        burn_in: a.burnin,
        thin: a.thin,
        seed,
        target_accept: a.target_accept,
        keep_eps: a.keep_eps,
    };
    let mut multi = fit_chains(&data, &spec, &opts, a.chains, inputs::execution(a.sequential))?;
    let mut summary = multi.pooled.clone();
    summary.samples.clear();
    multi.pooled.samples.clear();

    let fit_file = FitFile {
        version: env!("CARGO_PKG_VERSION").into(),
        league: season.league.clone(),
        season: season.season.clone(),
        seed,
        chain_seeds: multi.chains.iter().map(|c| c.options.seed).collect(),
        spec: spec.clone(),
        options: opts,
        acceptance_rates: multi.chains.iter().map(|c| c.acceptance.overall).collect(),
        rhat: multi.rhat.iter().map(|r| r.is_finite().then_some(*r)).collect(),
        summary,
        chains: multi.chains,
        data,
        matches: season.matches.clone(),
    };
    out.json(&a.out, &fit_file)?;

    let mut alpha = Table::new(&["team", "alpha_hat"]);
    for (team, v) in &fit_file.summary.alpha_hat {
        alpha.push(vec![team.clone(), num(*v)]);
    }
    out.csv(Path::new("alpha.csv"), &alpha)?;
    out.report("fit_summary", &fit_report(&fit_file), &coefficient_table(&fit_file))
}

#[derive(Serialize)]
struct FitReport<'a> {
    league: &'a str,
    season: &'a str,
    model: String,
    coefficients: Vec<Coefficient<'a>>,
    acceptance_rates: &'a [f64],
    dic: f64,
    p_d: f64,
    floor_rate: f64,
    skill_win_correlation: f64,
}

#[derive(Serialize)]
struct Coefficient<'a> {
    name: &'a str,
    mean: f64,
    sd: f64,
    ci_low: f64,
    ci_high: f64,
    rhat: Option<f64>,
}

fn fit_report(f: &FitFile) -> FitReport<'_> {
    let s = &f.summary;
    FitReport {
        league: &f.league,
        season: &f.season,
        model: f.spec.label(),
        coefficients: s
            .columns
            .iter()
            .enumerate()
            .map(|(j, name)| Coefficient {
                name,
                mean: s.w_mean[j],
                sd: s.w_sd[j],
                ci_low: s.w_ci[j].0,
                ci_high: s.w_ci[j].1,
                rhat: f.rhat[j],
            })
            .collect(),
        acceptance_rates: &f.acceptance_rates,
        dic: s.dic.dic,
        p_d: s.dic.p_d,
        floor_rate: s.floor_rate,
        skill_win_correlation: skill_win_correlation(&s.alpha_hat, &f.matches),
    }
}

fn coefficient_table(f: &FitFile) -> Table {
    let s = &f.summary;
    let mut t = Table::new(&["coefficient", "mean", "sd", "ci_low", "ci_high", "rhat"]);
    for (j, name) in s.columns.iter().enumerate() {
        t.push(vec![
            name.clone(),
            num(s.w_mean[j]),
            num(s.w_sd[j]),
            num(s.w_ci[j].0),
            num(s.w_ci[j].1),
            opt_num(f.rhat[j]),
        ]);
    }
    t
}

// ---------------------------------------------------------------- dic

#[derive(Debug, Args)]
pub struct DicArgs {
    /// fit.json files to compare.
    #[arg(required = true)]
    pub fits: Vec<PathBuf>,
}

#[derive(Serialize)]
struct DicRow {
    rank: usize,
    file: String,
    league: String,
    season: String,
    model: String,
    d_bar: f64,
    d_hat: f64,
    p_d: f64,
    dic: f64,
}

pub fn dic(a: &DicArgs, out: &mut Output) -> CliResult<()> {
    let mut rows = Vec::new();
    for p in &a.fits {
        let f: FitFile = read_json(p, out)?;
        let d = f.summary.dic;
        rows.push(DicRow {
            rank: 0,
            file: p.display().to_string(),
            league: f.league,
            season: f.season,
            model: f.spec.label(),
            d_bar: d.d_bar,
            d_hat: d.d_hat,
            p_d: d.p_d,
            dic: d.dic,
        });
    }
    rows.sort_by(|a, b| a.dic.total_cmp(&b.dic));
    let mut t = Table::new(&[
        "rank", "file", "league", "season", "model", "d_bar", "d_hat", "p_d", "dic",
    ]);
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
        t.push(vec![
            r.rank.to_string(),
            r.file.clone(),
            r.league.clone(),
            r.season.clone(),
            r.model.clone(),
            num(r.d_bar),
            num(r.d_hat),
            num(r.p_d),
            num(r.dic),
        ]);
    }
    out.report("dic", &rows, &t)
}

// ---------------------------------------------------------------- underdog

#[derive(Debug, Args)]
pub struct UnderdogArgs {
    #[arg(long)]
    pub fit: PathBuf,
    /// High-skill teams: a JSON list of names, a removal trace, or `removal.json`.
    #[arg(long)]
    pub removed_plus: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RemovedPlus {
    Names(Vec<String>),
    Trace(RemovalTrace),
    Traces(Vec<RemovalTrace>),
}

fn removed_plus(path: &Path, fit: &FitFile, out: &mut Output) -> CliResult<Vec<String>> {
    Ok(match read_json::<RemovedPlus>(path, out)? {
        RemovedPlus::Names(n) => n,
        RemovedPlus::Trace(t) => t.removed_plus(),
        RemovedPlus::Traces(ts) => ts
            .iter()
            .find(|t| t.league == fit.league && t.season == fit.season)
            .map(RemovalTrace::removed_plus)
            .ok_or_else(|| {
                invalid(format!(
                    "{} has no trace for {}/{}",
                    path.display(),
                    fit.league,
                    fit.season
                ))
            })?,
    })
}

#[derive(Serialize)]
struct UnderdogReport<'a> {
    league: &'a str,
    season: &'a str,
    removed_plus: Option<Vec<String>>,
    table: UnderdogTable,
    skill_win_correlation: f64,
}

pub fn underdog(a: &UnderdogArgs, out: &mut Output) -> CliResult<()> {
    let f: FitFile = read_json(&a.fit, out)?;
    let plus = match &a.removed_plus {
        Some(p) => Some(removed_plus(p, &f, out)?),
        None => None,
    };
    let table = underdog_probs(&f.summary.alpha_hat, &f.matches, plus.as_deref())?;
    let mut t = Table::new(&["condition", "matches", "underdog_wins", "prob"]);
    let mut row = |name: &str, c: Option<&UnderdogCell>| {
        if let Some(c) = c {
            t.push(vec![
                name.into(),
                c.matches.to_string(),
                c.underdog_wins.to_string(),
                opt_num(c.prob),
            ]);
        }
    };
    row("U", Some(&table.overall));
    row("U|A", Some(&table.away));
    row("U|H", Some(&table.home));
    row("U|A,R+", table.away_rplus.as_ref());
    row("U|H,R+", table.home_rplus.as_ref());
    let report = UnderdogReport {
        league: &f.league,
        season: &f.season,
        removed_plus: plus,
        skill_win_correlation: skill_win_correlation(&f.summary.alpha_hat, &f.matches),
        table,
    };
    out.report("underdog", &report, &t)
}
