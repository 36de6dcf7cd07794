//! φ and team removal over a corpus laid out as `DIR/<sport>/*.csv`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use luckskill::corpus::{build_season, load_matches, split_by_season, MatchFormat, SeasonOptions};
use luckskill::skillcoef::{cumulative_phi, evaluate_season, Classification, PhiReport};
use luckskill::stats::quantile_sorted;
use luckskill::{ScoringScheme, SeasonView};

use crate::commands::{
    classification_name, reduce_season, removal_table, season_seed, ReductionRow, ReductionStatus,
};
use crate::error::{CliError, CliResult, OrInvalid};
use crate::inputs::{delimiter_byte, read_scheme, season_year, McArgs};
use crate::output::{num, opt_num, Output, Table};

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Directory with one subdirectory of match files per sport.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Scheme for sports without `scheme.json` or a built-in name.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    #[arg(long, default_value_t = 8)]
    pub min_teams: usize,
    #[arg(long)]
    pub allow_irregular: bool,
    /// Skip team removal.
    #[arg(long)]
    pub no_reduce: bool,
    #[command(flatten)]
    pub mc: McArgs,
}

struct Sport {
    name: String,
    scheme: ScoringScheme,
    files: Vec<PathBuf>,
}

struct Job {
    sport: String,
    file: String,
    league: String,
    season: String,
    view: Result<SeasonView, String>,
}

#[derive(Serialize)]
pub struct SeasonResult {
    pub sport: String,
    pub file: String,
    pub league: String,
    pub season: String,
    pub report: Option<PhiReport>,
    pub reduction: Option<ReductionRow>,
    pub pct_removed: Option<f64>,
    pub error: Option<String>,
}

#[derive(Serialize)]
pub struct SportAggregate {
    pub sport: String,
    pub n_seasons: usize,
    pub n_errors: usize,
    #[serde(with = "opt_float")]
    pub phi_min: Option<f64>,
    #[serde(with = "opt_float")]
    pub phi_q25: Option<f64>,
    #[serde(with = "opt_float")]
    pub phi_median: Option<f64>,
    #[serde(with = "opt_float")]
    pub phi_q75: Option<f64>,
    #[serde(with = "opt_float")]
    pub phi_max: Option<f64>,
    pub pct_random: Option<f64>,
    pub pct_skill: Option<f64>,
    pub pct_sub_random: Option<f64>,
    /// Mean share of teams removed over skill seasons.
    pub mean_pct_removed: Option<f64>,
}

mod opt_float {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => luckskill::serde_float::serialize(v, s),
            None => s.serialize_none(),
        }
    }
}

#[derive(Serialize)]
pub struct CumulativeRow {
    pub sport: String,
    pub league: String,
    pub season: String,
    pub n_seasons: usize,
    pub n_teams: usize,
    #[serde(with = "luckskill::serde_float")]
    pub phi: f64,
    pub degenerate: bool,
    pub irregular: bool,
}

fn sports(a: &BatchArgs, out: &mut Output) -> CliResult<Vec<Sport>> {
    let fallback = match &a.scheme {
        Some(s) => Some(crate::inputs::scheme(s, out)?),
        None => None,
    };
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&a.corpus)
        .or_invalid()
        .map_err(|e| e.context(format!("reading corpus {}", a.corpus.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut sports = Vec::new();
    for dir in dirs {
        let name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let scheme_file = dir.join("scheme.json");
        let scheme = if scheme_file.exists() {
            out.input(&scheme_file)?;
            read_scheme(&scheme_file)?
        } else if let Some(s) = ScoringScheme::builtin(&name) {
            s
        } else if let Some(s) = &fallback {
            s.clone()
        } else {
            return Err(CliError::invalid(anyhow::anyhow!(
                "no scheme for sport `{name}`: add {} or pass --scheme",
                scheme_file.display()
            )));
        };
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
            .or_invalid()?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv" || x == "tsv"))
            .collect();
        files.sort();
        sports.push(Sport {
            name,
            scheme,
            files,
        });
    }
    Ok(sports)
}

fn jobs(sport: &Sport, format: &MatchFormat, opts: &SeasonOptions, out: &mut Output) -> Vec<Job> {
    let mut jobs = Vec::new();
    for path in &sport.files {
        let file = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let loaded = out
            .input(path)
            .and_then(|_| load_matches(path, format).map_err(CliError::from));
        let records = match loaded {
            Ok(r) => r,
            Err(e) => {
                jobs.push(Job {
                    sport: sport.name.clone(),
                    file,
                    league: String::new(),
                    season: String::new(),
                    view: Err(e.to_string()),
                });
                continue;
            }
        };
        for ((league, season), recs) in split_by_season(&records) {
            let view = build_season(&recs, &league, &season, opts).map_err(|e| e.to_string());
            jobs.push(Job {
                sport: sport.name.clone(),
                file: file.clone(),
                league,
                season,
                view,
            });
        }
    }
    jobs
}

fn pct_removed(r: &ReductionRow) -> f64 {
    100.0 * r.trace.removed.len() as f64 / r.trace.initial_teams as f64
}

pub fn run(a: &BatchArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    a.mc.options(seed).validate()?;
    let sports = sports(a, out)?;
    let format = MatchFormat {
        delimiter: delimiter_byte(a.delimiter)?,
        ..MatchFormat::default()
    };
    let season_opts = SeasonOptions {
        min_teams: a.min_teams,
        allow_irregular: a.allow_irregular,
    };
    let mut all = Vec::new();
    let mut schemes = BTreeMap::new();
    for s in &sports {
        all.extend(jobs(s, &format, &season_opts, out));
        schemes.insert(s.name.clone(), s.scheme.clone());
    }
    let indexed: Vec<(usize, &Job)> = all.iter().enumerate().collect();
    let execution = crate::inputs::execution(a.mc.sequential);
    let results: Vec<SeasonResult> = execution.map_slice(&indexed, |&(i, job)| {
        let opts = a.mc.options(season_seed(seed, i));
        let mut res = SeasonResult {
            sport: job.sport.clone(),
            file: job.file.clone(),
            league: job.league.clone(),
            season: job.season.clone(),
            report: None,
            reduction: None,
            pct_removed: None,
            error: None,
        };
        let view = match &job.view {
            Ok(v) => v,
            Err(e) => {
                res.error = Some(e.clone());
                return res;
            }
        };
        let scheme = &schemes[&job.sport];
        match evaluate_season(view, scheme, &opts) {
            Ok(r) => res.report = Some(r),
            Err(e) => {
                res.error = Some(e.to_string());
                return res;
            }
        }
        if a.no_reduce {
            return res;
        }
        match reduce_season(view, scheme, &opts) {
            Ok(r) => {
                res.pct_removed = Some(pct_removed(&r));
                res.reduction = Some(r);
            }
            Err(e) => res.error = Some(e.to_string()),
        }
        res
    });
    for r in results.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: {}/{} {} {}: {}",
            r.sport,
            r.file,
            r.league,
            r.season,
            r.error.as_deref().unwrap_or_default()
        );
    }

    out.report("summary", &results, &summary_table(&results))?;
    let aggregates = aggregate(&results);
    out.report("aggregates", &aggregates, &aggregate_table(&aggregates))?;
    out.csv(Path::new("phi_by_season.csv"), &phi_by_season(&results))?;
    let cumulative = cumulative(&all, &schemes, a);
    out.report("cumulative_phi", &cumulative, &cumulative_table(&cumulative))?;
    let removals: Vec<(String, &ReductionRow)> = results
        .iter()
        .filter_map(|r| r.reduction.as_ref().map(|x| (r.sport.clone(), x)))
        .collect();
    out.csv(Path::new("removal.csv"), &removal_table(&removals))?;
    Ok(())
}

fn summary_table(results: &[SeasonResult]) -> Table {
    let mut t = Table::new(&[
        "sport",
        "file",
        "league",
        "season",
        "n_teams",
        "phi",
        "ci_low",
        "ci_high",
        "classification",
        "reduction",
        "n_removed",
        "pct_removed",
        "error",
    ]);
    for r in results {
        let rep = r.report.as_ref();
        let status = r.reduction.as_ref().map(|x| match x.status {
            ReductionStatus::Reduced => "reduced",
            ReductionStatus::NotSkill => "not_skill",
            ReductionStatus::Exhausted => "exhausted",
        });
        t.push(vec![
            r.sport.clone(),
            r.file.clone(),
            r.league.clone(),
            r.season.clone(),
            rep.map(|x| x.n_teams.to_string()).unwrap_or_default(),
            opt_num(rep.map(|x| x.phi)),
            opt_num(rep.map(|x| x.ci_low)),
            opt_num(rep.map(|x| x.ci_high)),
            rep.map(|x| classification_name(x.classification).to_string()).unwrap_or_default(),
            status.unwrap_or_default().to_string(),
            r.reduction.as_ref().map(|x| x.trace.removed.len().to_string()).unwrap_or_default(),
            opt_num(r.pct_removed),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    t
}

fn phi_by_season(results: &[SeasonResult]) -> Table {
    let mut t = Table::new(&[
        "sport",
        "league",
        "season",
        "year",
        "phi",
        "ci_low",
        "ci_high",
        "classification",
    ]);
    for r in results {
        if let Some(rep) = &r.report {
            t.push(vec![
                r.sport.clone(),
                r.league.clone(),
                r.season.clone(),
                season_year(&r.season).map(|y| y.to_string()).unwrap_or_default(),
                num(rep.phi),
                num(rep.ci_low),
                num(rep.ci_high),
                classification_name(rep.classification).into(),
            ]);
        }
    }
    t
}

fn share(n: usize, of: usize) -> Option<f64> {
    (of > 0).then(|| 100.0 * n as f64 / of as f64)
}

pub fn aggregate(results: &[SeasonResult]) -> Vec<SportAggregate> {
    let mut by_sport: BTreeMap<&str, Vec<&SeasonResult>> = BTreeMap::new();
    for r in results {
        by_sport.entry(&r.sport).or_default().push(r);
    }
    by_sport
        .into_iter()
        .map(|(sport, rs)| {
            let reports: Vec<&PhiReport> = rs.iter().filter_map(|r| r.report.as_ref()).collect();
            let mut phis: Vec<f64> = reports.iter().map(|r| r.phi).filter(|p| !p.is_nan()).collect();
            phis.sort_by(f64::total_cmp);
            let q = |p: f64| (!phis.is_empty()).then(|| quantile_sorted(&phis, p));
            let count = |c: Classification| reports.iter().filter(|r| r.classification == c).count();
            let removed: Vec<f64> = rs
                .iter()
                .filter(|r| {
                    r.reduction
                        .as_ref()
                        .is_some_and(|x| x.status != ReductionStatus::NotSkill)
                })
                .filter_map(|r| r.pct_removed)
                .collect();
            SportAggregate {
                sport: sport.to_string(),
                n_seasons: rs.len(),
                n_errors: rs.iter().filter(|r| r.error.is_some()).count(),
                phi_min: q(0.0),
                phi_q25: q(0.25),
                phi_median: q(0.5),
                phi_q75: q(0.75),
                phi_max: q(1.0),
                pct_random: share(count(Classification::Random), reports.len()),
                pct_skill: share(count(Classification::Skill), reports.len()),
                pct_sub_random: share(count(Classification::SubRandom), reports.len()),
                mean_pct_removed: (!removed.is_empty())
                    .then(|| removed.iter().sum::<f64>() / removed.len() as f64),
            }
        })
        .collect()
}

fn aggregate_table(aggs: &[SportAggregate]) -> Table {
    let mut t = Table::new(&[
        "sport",
        "n_seasons",
        "n_errors",
        "phi_min",
        "phi_q25",
        "phi_median",
        "phi_q75",
        "phi_max",
        "pct_random",
        "pct_skill",
        "pct_sub_random",
        "mean_pct_removed",
    ]);
    for a in aggs {
        t.push(vec![
            a.sport.clone(),
            a.n_seasons.to_string(),
            a.n_errors.to_string(),
            opt_num(a.phi_min),
            opt_num(a.phi_q25),
            opt_num(a.phi_median),
            opt_num(a.phi_q75),
            opt_num(a.phi_max),
            opt_num(a.pct_random),
            opt_num(a.pct_skill),
            opt_num(a.pct_sub_random),
            opt_num(a.mean_pct_removed),
        ]);
    }
    t
}

/// Pooled φ per league, seasons in chronological order.
fn cumulative(
    jobs: &[Job],
    schemes: &BTreeMap<String, ScoringScheme>,
    a: &BatchArgs,
) -> Vec<CumulativeRow> {
    let mut leagues: BTreeMap<(&str, &str), Vec<&SeasonView>> = BTreeMap::new();
    for j in jobs {
        if let Ok(v) = &j.view {
            leagues.entry((&j.sport, &j.league)).or_default().push(v);
        }
    }
    let denominator = a.mc.options(0).denominator;
    let mut rows = Vec::new();
    for ((sport, league), mut views) in leagues {
        views.sort_by_key(|v| (season_year(&v.season), v.season.clone()));
        let seasons: Vec<SeasonView> = views.into_iter().cloned().collect();
        match cumulative_phi(&seasons, &schemes[sport], denominator) {
            Ok(points) => rows.extend(points.into_iter().map(|p| CumulativeRow {
                sport: sport.to_string(),
                league: league.to_string(),
                season: p.season,
                n_seasons: p.n_seasons,
                n_teams: p.n_teams,
                phi: p.phi,
                degenerate: p.degenerate,
                irregular: p.irregular,
            })),
            Err(e) => eprintln!("warning: cumulative φ for {sport}/{league}: {e}"),
        }
    }
    rows
}

fn cumulative_table(rows: &[CumulativeRow]) -> Table {
    let mut t = Table::new(&[
        "sport",
        "league",
        "season",
        "n_seasons",
        "n_teams",
        "phi",
        "degenerate",
        "irregular",
    ]);
    for r in rows {
        t.push(vec![
            r.sport.clone(),
            r.league.clone(),
            r.season.clone(),
            r.n_seasons.to_string(),
            r.n_teams.to_string(),
            num(r.phi),
            r.degenerate.to_string(),
            r.irregular.to_string(),
        ]);
    }
    t
}
