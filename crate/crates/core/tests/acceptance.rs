//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criterion 8 runs only against real corpora named by environment variables:
//! `LUCKSKILL_NBA_MATCHES`, `LUCKSKILL_NBA_ROSTERS`, `LUCKSKILL_ALGERIA_MATCHES`.

use std::collections::BTreeMap;
use std::time::Instant;

use luckskill::baseline::{moments, ContextProbs, ScoringScheme};
use luckskill::btpoisson::{
    fit, gradient_w, log_posterior, skill_win_correlation, underdog_probs, BtData, FitOptions,
    GameObs, Hyper, ModelSpec, Params, UnderdogTable,
};
use luckskill::corpus::{build_season, load_matches, load_rosters, split_by_season, MatchFormat};
use luckskill::corpus::{SeasonOptions, SeasonView};
use luckskill::features::{compute_features, FeatureName};
use luckskill::rng::{mix_seed, stream_rng};
use luckskill::skillcoef::{
    evaluate_season, phi, phi_from_variances, reduce_to_random, Classification, PhiOptions,
    SeasonTable, SkillError,
};
use luckskill::synth::{
    simulate_bt, simulate_random, BtTruth, Schedule, SynthConfig, SynthMode, TotalScore,
};
use rand::Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

const TRUE_MODEL: [FeatureName; 6] = [
    FeatureName::CO,
    FeatureName::A5,
    FeatureName::AP,
    FeatureName::VL,
    FeatureName::RC,
    FeatureName::SI,
];
const NOISE: [FeatureName; 3] = [FeatureName::A6_10, FeatureName::SD, FeatureName::RV];
const W_STAR: [f64; 6] = [0.15, 0.30, 0.25, -0.10, 0.10, -0.05];
const EPS_PRECISION: f64 = 0.05;

fn soccer_probs() -> [f64; 3] {
    [0.50, 0.25, 0.25]
}

/// 30 teams, 82 games each, `N_k = 200`, weights padded with zeros for noise columns.
fn bt_league(seed: u64, n_noise: usize) -> (SeasonView, BtTruth) {
    let mut weights = W_STAR.to_vec();
    weights.extend(std::iter::repeat_n(0.0, n_noise));
    let cfg = SynthConfig {
        league: "BT".into(),
        season: seed.to_string(),
        n_teams: 30,
        scheme: ScoringScheme::basketball().into(),
        seed,
        schedule: Schedule::MirroredRounds { rounds: 41 },
        mode: SynthMode::BradleyTerry {
            weights,
            features: None,
            eps_precision: EPS_PRECISION,
            total: TotalScore::Constant(200),
        },
    };
    simulate_bt(&cfg).expect("valid configuration")
}

fn bt_data(season: &SeasonView, truth: &BtTruth, names: &[FeatureName]) -> BtData {
    let x = season
        .teams
        .iter()
        .map(|t| {
            let i = truth.teams.iter().position(|u| u == t).unwrap();
            truth.features[i][..names.len()].to_vec()
        })
        .collect();
    let games = season
        .matches
        .iter()
        .map(|m| GameObs {
            home: season.team_index(&m.home).unwrap(),
            away: season.team_index(&m.away).unwrap(),
            n: m.total_score(),
            y: m.home_score,
        })
        .collect();
    BtData::new(
        season.teams.clone(),
        names.iter().map(|f| f.to_string()).collect(),
        x,
        games,
    )
    .unwrap()
}

fn ci_calibration() -> Verdict {
    let n_seasons = 500;
    let mut inside = 0;
    for i in 0..n_seasons {
        let cfg = SynthConfig::random(
            20,
            ScoringScheme::soccer(),
            soccer_probs(),
            mix_seed(1, i),
        );
        let season = simulate_random(&cfg).unwrap();
        let opts = PhiOptions {
            n_replicates: 10_000,
            seed: mix_seed(2, i),
            ..PhiOptions::default()
        };
        let r = evaluate_season(&season, &ScoringScheme::soccer(), &opts).unwrap();
        inside += usize::from(r.contains_phi());
    }
    let frac = inside as f64 / n_seasons as f64;
    check(
        (0.93..=0.97).contains(&frac),
        format!("{inside}/{n_seasons} seasons inside the 95% interval ({frac:.3}), need [0.93, 0.97]"),
    )
}

fn phi_identities() -> Verdict {
    let mut rng = stream_rng(7, 0);
    let mut zero_ok = true;
    let mut max_phi = f64::NEG_INFINITY;
    for _ in 0..100_000 {
        let v = rng.random_range(1e-6..1e3);
        zero_ok &= phi_from_variances(v, v).value == 0.0;

        let n = rng.random_range(2..=24);
        let k = rng.random_range(1..=40);
        let p: [f64; 3] = {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            let (lo, hi) = (a.min(b), a.max(b));
            [lo, hi - lo, 1.0 - hi]
        };
        let probs = match ContextProbs::new(p[0], p[1], p[2]) {
            Ok(pr) => pr,
            Err(_) => continue,
        };
        let points: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..(6.0 * k as f64))).collect();
        let table = SeasonTable {
            teams: (0..n).map(|i| i.to_string()).collect(),
            s2: luckskill::stats::sample_variance(&points),
            points,
        };
        let value = phi(&table, &moments(&probs, &ScoringScheme::soccer(), k)).value;
        max_phi = max_phi.max(value);
    }

    let draws: Vec<_> = ["A", "B", "C", "D"]
        .iter()
        .flat_map(|h| ["A", "B", "C", "D"].map(move |a| (h.to_string(), a.to_string())))
        .filter(|(h, a)| h != a)
        .map(|(home, away)| luckskill::MatchRecord {
            league: "L".into(),
            season: "S".into(),
            round: 1,
            home,
            away,
            home_score: 1,
            away_score: 1,
        })
        .collect();
    let opts = SeasonOptions {
        min_teams: 4,
        ..SeasonOptions::default()
    };
    let all_draws = build_season(&draws, "L", "S", &opts).unwrap();
    let r = evaluate_season(&all_draws, &ScoringScheme::soccer(), &PhiOptions::default()).unwrap();
    let sentinel = r.classification == Classification::SubRandom && r.phi == f64::NEG_INFINITY;

    check(
        zero_ok && max_phi <= 1.0 && sentinel,
        format!(
            "φ(s²=σ²)=0 on all draws: {zero_ok}; max φ over 10⁵ tables {max_phi:.6}; zero-variance sentinel: {sentinel}"
        ),
    )
}

fn removal_ground_truth() -> Verdict {
    let trials = 100;
    let mut summary = Vec::new();
    let mut ok = true;
    for m in 1..=3usize {
        let (mut exact, mut missed, mut extra, mut not_skill) = (0, 0, 0, 0);
        for t in 0..trials {
            let seed = mix_seed(300 + m as u64, t);
            let n = 10 + m;
            let cfg = SynthConfig {
                mode: SynthMode::Planted {
                    probs: soccer_probs(),
                    strong: (0..m).collect(),
                    win_prob: 0.9,
                },
                ..SynthConfig::random(n, ScoringScheme::soccer(), soccer_probs(), seed)
            };
            let planted: Vec<String> = cfg.team_names()[..m].to_vec();
            let season = simulate_random(&cfg).unwrap();
            let opts = PhiOptions {
                n_replicates: 10_000,
                seed: mix_seed(seed, 1),
                ..PhiOptions::default()
            };
            match reduce_to_random(&season, &ScoringScheme::soccer(), &opts) {
                Ok(trace) => {
                    let removed = trace.removed_teams();
                    let hits = removed.iter().filter(|r| planted.contains(r)).count();
                    if hits < m {
                        missed += 1;
                    } else if removed.len() > m {
                        extra += 1;
                    } else {
                        exact += 1;
                    }
                }
                Err(SkillError::NotSkillSeason { .. }) => not_skill += 1,
                Err(_) => extra += 1,
            }
        }
        let frac = exact as f64 / trials as f64;
        ok &= frac >= 0.90;
        summary.push(format!(
            "m={m}: {exact}/{trials} (kept a planted team {missed}, removed an equal team {extra}, not classified skill {not_skill})"
        ));
    }
    check(ok, format!("exact removal {}; need ≥ 90% each", summary.join("; ")))
}

fn posterior_recovery() -> Verdict {
    let reps = 20;
    let (mut covered, mut total) = (0, 0);
    let mut acc = Vec::new();
    let mut slowest = 0.0f64;
    for r in 0..reps {
        let (season, truth) = bt_league(mix_seed(400, r), 0);
        let data = bt_data(&season, &truth, &TRUE_MODEL);
        let opts = FitOptions {
            seed: mix_seed(401, r),
            ..FitOptions::default()
        };
        let start = Instant::now();
        let f = fit(&data, &ModelSpec::new(TRUE_MODEL.to_vec()), &opts).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        for (j, &(lo, hi)) in f.w_ci.iter().enumerate() {
            covered += usize::from(lo <= W_STAR[j] && W_STAR[j] <= hi);
            total += 1;
        }
        acc.push(f.acceptance.overall);
    }
    let coverage = covered as f64 / total as f64;
    let (lo, hi) = acc.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
        (a.min(x), b.max(x))
    });
    check(
        coverage >= 0.90 && lo >= 0.30 && hi <= 0.50 && slowest < 600.0,
        format!(
            "coverage {covered}/{total} ({coverage:.3}, need ≥ 0.90); acceptance in [{lo:.3}, {hi:.3}] (need [0.30, 0.50]); slowest fit {slowest:.1}s"
        ),
    )
}

fn dic_discrimination() -> Verdict {
    let reps = 20;
    let mut wins = 0;
    let mut gaps = Vec::new();
    let mut wide: Vec<FeatureName> = TRUE_MODEL.to_vec();
    wide.extend(NOISE);
    for r in 0..reps {
        let (season, truth) = bt_league(mix_seed(500, r), NOISE.len());
        let opts = FitOptions {
            seed: mix_seed(501, r),
            ..FitOptions::default()
        };
        let narrow = fit(
            &bt_data(&season, &truth, &TRUE_MODEL),
            &ModelSpec::new(TRUE_MODEL.to_vec()),
            &opts,
        )
        .unwrap();
        let full = fit(
            &bt_data(&season, &truth, &wide),
            &ModelSpec::new(wide.clone()),
            &opts,
        )
        .unwrap();
        let gap = full.dic.dic - narrow.dic.dic;
        wins += usize::from(gap > 0.0);
        gaps.push(gap);
    }
    let median = luckskill::stats::quantile_sorted(&luckskill::stats::sorted(&gaps), 0.5);
    check(
        wins as f64 >= 0.8 * reps as f64,
        format!("true model has lower DIC in {wins}/{reps} (need ≥ 16); median DIC gap {median:.2}"),
    )
}

/// Independent tally by direct comparison of ground-truth skills.
fn brute_force(alpha: &BTreeMap<String, f64>, season: &SeasonView) -> [(usize, usize); 3] {
    let mut cells = [(0, 0); 3]; // overall, underdog home, underdog away
    for m in &season.matches {
        let (h, a) = (alpha[&m.home], alpha[&m.away]);
        if h == a {
            continue;
        }
        let underdog_won = if h < a {
            m.home_score > m.away_score
        } else {
            m.away_score > m.home_score
        };
        let venue = if h < a { 1 } else { 2 };
        for c in [0, venue] {
            cells[c].0 += 1;
            cells[c].1 += usize::from(underdog_won);
        }
    }
    cells
}

fn underdog_oracle() -> Verdict {
    let mut agree = 0;
    let leagues = 20usize;
    for r in 0..leagues {
        let (season, truth) = bt_league(mix_seed(600, r as u64), 0);
        let alpha: BTreeMap<String, f64> = truth
            .teams
            .iter()
            .cloned()
            .zip(truth.alpha.iter().copied())
            .collect();
        let t: UnderdogTable = underdog_probs(&alpha, &season.matches, None).unwrap();
        let bf = brute_force(&alpha, &season);
        let same = |cell: &luckskill::btpoisson::UnderdogCell, (n, w): (usize, usize)| {
            cell.matches == n
                && cell.underdog_wins == w
                && cell.prob == Some(w as f64 / n as f64)
        };
        agree += usize::from(same(&t.overall, bf[0]) && same(&t.home, bf[1]) && same(&t.away, bf[2]));
    }
    check(
        agree == leagues,
        format!("P(U), P(U|H), P(U|A) equal brute-force counts in {agree}/{leagues} leagues"),
    )
}

fn gradient_check() -> Verdict {
    let (season, truth) = bt_league(mix_seed(700, 0), 0);
    let data = bt_data(&season, &truth, &TRUE_MODEL);
    let hyper = Hyper::default();
    let mut rng = stream_rng(701, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let params = Params {
            w: (0..data.dim()).map(|_| rng.random_range(-0.5..0.5)).collect(),
            eps: (0..data.n_games()).map(|_| rng.random_range(-5.0..5.0)).collect(),
            tau_w: rng.random_range(0.1..10.0),
            tau_eps: rng.random_range(0.01..1.0),
        };
        let g = gradient_w(&params, &data);
        for j in 0..data.dim() {
            let h = 1e-5;
            let mut up = params.clone();
            up.w[j] += h;
            let mut down = params.clone();
            down.w[j] -= h;
            let fd = (log_posterior(&up, &data, &hyper).unwrap()
                - log_posterior(&down, &data, &hyper).unwrap())
                / (2.0 * h);
            let rel = (g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1.0);
            worst = worst.max(rel);
        }
    }
    check(
        worst <= 1e-4,
        format!("worst relative error {worst:.2e} over 50 points (need ≤ 1e-4)"),
    )
}

fn season_year(label: &str) -> Option<i32> {
    let parts: Vec<&str> = label
        .split(|c: char| !c.is_ascii_digit())
        .filter(|p| !p.is_empty())
        .collect();
    match parts.as_slice() {
        [y] => y.parse().ok(),
        [a, b, ..] if b.len() == 2 => {
            let (a, b): (i32, i32) = (a.parse().ok()?, b.parse().ok()?);
            Some(if a / 100 * 100 + b < a { a / 100 * 100 + 100 + b } else { a / 100 * 100 + b })
        }
        [_, b, ..] => b.parse().ok(),
        [] => None,
    }
}

fn real_corpora() -> Verdict {
    let nba = std::env::var("LUCKSKILL_NBA_MATCHES").ok();
    let rosters = std::env::var("LUCKSKILL_NBA_ROSTERS").ok();
    let algeria = std::env::var("LUCKSKILL_ALGERIA_MATCHES").ok();
    if nba.is_none() && algeria.is_none() {
        return Verdict::Skip(
            "no real corpus supplied (set LUCKSKILL_NBA_MATCHES, LUCKSKILL_NBA_ROSTERS, LUCKSKILL_ALGERIA_MATCHES)".into(),
        );
    }
    let mut ok = true;
    let mut notes = Vec::new();
    let opts = PhiOptions::default();
    let season_opts = SeasonOptions::default();

    if let Some(path) = &algeria {
        let records = load_matches(path, &MatchFormat::default()).unwrap();
        for ((league, label), recs) in split_by_season(&records) {
            if !label.contains("2014") {
                continue;
            }
            let s = build_season(&recs, &league, &label, &season_opts).unwrap();
            let r = evaluate_season(&s, &ScoringScheme::soccer(), &opts).unwrap();
            let hit = (r.phi + 1.93).abs() <= 0.02;
            ok &= hit;
            notes.push(format!("Algeria {label} φ={:.3}", r.phi));
        }
    }

    if let Some(path) = &nba {
        let records = load_matches(path, &MatchFormat::default()).unwrap();
        let rosters = rosters.map(|p| load_rosters(p, b',').unwrap());
        let scheme = ScoringScheme::basketball();
        let (mut corr, mut tables) = (Vec::new(), Vec::new());
        let mut min_phi = f64::INFINITY;
        for ((league, label), recs) in split_by_season(&records) {
            let s = build_season(&recs, &league, &label, &season_opts).unwrap();
            let r = evaluate_season(&s, &scheme, &opts).unwrap();
            min_phi = min_phi.min(r.phi);
            let (Some(rs), Some(year)) = (&rosters, season_year(&label)) else {
                continue;
            };
            if !(2012..=2016).contains(&year) {
                continue;
            }
            let table = compute_features(rs, year).unwrap();
            let spec = ModelSpec::new(TRUE_MODEL.to_vec());
            let data = BtData::from_season(&s, &table, &spec).unwrap();
            let f = fit(&data, &spec, &FitOptions::default()).unwrap();
            corr.push(skill_win_correlation(&f.alpha_hat, &s.matches));
            tables.push(underdog_probs(&f.alpha_hat, &s.matches, None).unwrap());
        }
        ok &= min_phi > 0.95;
        notes.push(format!("NBA min φ={min_phi:.3}"));
        if !corr.is_empty() {
            let c = luckskill::stats::mean(&corr);
            ok &= (c - 0.74).abs() <= 0.08;
            let mean_of = |f: fn(&UnderdogTable) -> Option<f64>| {
                luckskill::stats::mean(&tables.iter().filter_map(f).collect::<Vec<_>>())
            };
            let (u, ua, uh) = (
                mean_of(|t| t.overall.prob),
                mean_of(|t| t.away.prob),
                mean_of(|t| t.home.prob),
            );
            ok &= (u - 0.36).abs() <= 0.03 && (ua - 0.27).abs() <= 0.03 && (uh - 0.45).abs() <= 0.03;
            notes.push(format!(
                "corr(α̂, wins)={c:.3}; P(U)={u:.3} P(U|A)={ua:.3} P(U|H)={uh:.3}"
            ));
        }
    }
    check(ok, notes.join("; "))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 confidence-interval calibration", ci_calibration),
        ("2 phi identities", phi_identities),
        ("3 removal ground truth", removal_ground_truth),
        ("4 posterior recovery", posterior_recovery),
        ("5 DIC discrimination", dic_discrimination),
        ("6 underdog oracle", underdog_oracle),
        ("7 gradient check", gradient_check),
        ("8 real corpora", real_corpora),
    ];
    let only: Option<String> = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, run) in criteria {
        if only.as_ref().is_some_and(|o| !name.starts_with(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {name}: {tag} ({secs:.1}s) {detail}");
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
