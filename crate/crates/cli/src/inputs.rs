use std::path::{Path, PathBuf};

use clap::Args;
use luckskill::baseline::ScoringScheme;
use luckskill::corpus::{
    build_season, load_matches, split_by_season, ColumnMapping, MatchFormat, MatchRecord,
    SeasonOptions, SeasonView,
};
use luckskill::skillcoef::{PhiOptions, ReplicateBaseline, VarianceDenominator};
use luckskill::Execution;

use crate::error::{CliError, CliResult, OrInvalid};
use crate::output::Output;

#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    /// Delimited match file.
    #[arg(long)]
    pub matches: PathBuf,
    /// JSON file renaming the match columns.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    /// Keep only this league.
    #[arg(long)]
    pub league: Option<String>,
    /// Keep only this season.
    #[arg(long)]
    pub season: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub min_teams: usize,
    /// Accept seasons with unequal or venue-unbalanced schedules.
    #[arg(long)]
    pub allow_irregular: bool,
}

impl MatchArgs {
    pub fn format(&self, out: &mut Output) -> CliResult<MatchFormat> {
        let columns = match &self.schema {
            Some(p) => {
                out.input(p)?;
                ColumnMapping::from_json_file(p)?
            }
            None => ColumnMapping::default(),
        };
        Ok(MatchFormat {
            delimiter: delimiter_byte(self.delimiter)?,
            columns,
        })
    }

    pub fn records(&self, out: &mut Output) -> CliResult<Vec<MatchRecord>> {
        let format = self.format(out)?;
        out.input(&self.matches)?;
        let records = load_matches(&self.matches, &format)?;
        Ok(records
            .into_iter()
            .filter(|r| self.league.as_ref().is_none_or(|l| &r.league == l))
            .filter(|r| self.season.as_ref().is_none_or(|s| &r.season == s))
            .collect())
    }

    pub fn season_options(&self) -> SeasonOptions {
        SeasonOptions {
            min_teams: self.min_teams,
            allow_irregular: self.allow_irregular,
        }
    }

    /// Every selected season, validated.
    pub fn seasons(&self, out: &mut Output) -> CliResult<Vec<SeasonView>> {
        let records = self.records(out)?;
        if records.is_empty() {
            return Err(CliError::invalid(anyhow::anyhow!(
                "no matches left after filtering {}",
                self.matches.display()
            )));
        }
        let opts = self.season_options();
        split_by_season(&records)
            .into_iter()
            .map(|((league, season), recs)| {
                build_season(&recs, &league, &season, &opts).map_err(CliError::from)
            })
            .collect()
    }
}

pub fn delimiter_byte(c: char) -> CliResult<u8> {
    if c.is_ascii() {
        Ok(c as u8)
    } else {
        Err(CliError::invalid(anyhow::anyhow!("delimiter must be ASCII, got {c:?}")))
    }
}

/// A built-in scheme name or a path to a JSON scheme.
pub fn scheme(spec: &str, out: &mut Output) -> CliResult<ScoringScheme> {
    if let Some(s) = ScoringScheme::builtin(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::invalid(anyhow::anyhow!(
            "`{spec}` is neither a built-in scheme (soccer, basketball, handball, volleyball) nor a file"
        )));
    }
    out.input(path)?;
    read_scheme(path)
}

pub fn read_scheme(path: &Path) -> CliResult<ScoringScheme> {
    let text = std::fs::read_to_string(path).or_invalid()?;
    serde_json::from_str(&text)
        .or_invalid()
        .map_err(|e| e.context(format!("scheme file {}", path.display())))
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    /// Divide the table variance by n instead of n − 1.
    #[arg(long)]
    pub population_variance: bool,
    /// Re-estimate outcome probabilities inside every replicate.
    #[arg(long)]
    pub refit_replicates: bool,
    /// Run replicates on one thread.
    #[arg(long)]
    pub sequential: bool,
}

impl McArgs {
    pub fn options(&self, seed: u64) -> PhiOptions {
        PhiOptions {
            n_replicates: self.replicates,
            replicate_baseline: if self.refit_replicates {
                ReplicateBaseline::Refit
            } else {
                ReplicateBaseline::Observed
            },
            seed,
            ci_level: self.ci_level,
            denominator: if self.population_variance {
                VarianceDenominator::Population
            } else {
                VarianceDenominator::Unbiased
            },
            execution: execution(self.sequential),
        }
    }
}

pub fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Year of a season label: `2016`, `2015-16` and `2015/2016` all give 2016.
pub fn season_year(label: &str) -> Option<i32> {
    let parts: Vec<&str> = label
        .split(|c: char| !c.is_ascii_digit())
        .filter(|p| !p.is_empty())
        .collect();
    match parts.as_slice() {
        [y] => y.parse().ok(),
        [a, b, ..] if b.len() == 2 => {
            let a: i32 = a.parse().ok()?;
            let b: i32 = b.parse().ok()?;
            let century = a / 100 * 100;
            Some(if century + b < a { century + 100 + b } else { century + b })
        }
        [_, b, ..] => b.parse().ok(),
        [] => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn season_labels() {
        assert_eq!(season_year("2016"), Some(2016));
        assert_eq!(season_year("2015-16"), Some(2016));
        assert_eq!(season_year("1999-00"), Some(2000));
        assert_eq!(season_year("2014/2015"), Some(2015));
        assert_eq!(season_year("spring"), None);
    }
}
