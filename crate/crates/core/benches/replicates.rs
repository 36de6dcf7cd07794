//! Parallel against sequential execution of the two replicate-heavy loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use luckskill::baseline::estimate_context_probs;
use luckskill::btpoisson::{fit_chains, BtData, FitOptions, ModelSpec};
use luckskill::features::{FeatureName, FeatureTable, TeamFeatures};
use luckskill::skillcoef::{monte_carlo_ci, PhiOptions};
use luckskill::synth::{simulate_bt, simulate_random, Schedule, SynthConfig, SynthMode, TotalScore};
use luckskill::{Execution, ScoringScheme};

const MODES: [(&str, Execution); 2] = [
    ("parallel", Execution::Parallel),
    ("sequential", Execution::Sequential),
];

fn phi_interval(c: &mut Criterion) {
    let scheme = ScoringScheme::soccer();
    let season =
        simulate_random(&SynthConfig::random(20, scheme.clone(), [0.5, 0.25, 0.25], 1)).unwrap();
    let probs = estimate_context_probs(&season, &scheme).unwrap();
    let mut group = c.benchmark_group("monte_carlo_ci");
    group.sample_size(10);
    for (name, execution) in MODES {
        let opts = PhiOptions {
            n_replicates: 10_000,
            execution,
            ..PhiOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| monte_carlo_ci(&season, &scheme, &probs, &opts).unwrap())
        });
    }
    group.finish();
}

fn chains(c: &mut Criterion) {
    let names = [FeatureName::CO, FeatureName::A5];
    let cfg = SynthConfig {
        league: "B".into(),
        season: "1".into(),
        n_teams: 16,
        scheme: ScoringScheme::basketball().into(),
        seed: 2,
        schedule: Schedule::MirroredRounds { rounds: 30 },
        mode: SynthMode::BradleyTerry {
            weights: vec![0.3, -0.2],
            features: None,
            eps_precision: 0.05,
            total: TotalScore::Constant(200),
        },
    };
    let (season, truth) = simulate_bt(&cfg).unwrap();
    let rows = truth
        .teams
        .iter()
        .zip(&truth.features)
        .map(|(team, x)| {
            let mut v = [0.0; 10];
            for (f, xi) in names.iter().zip(x) {
                v[f.index()] = *xi;
            }
            TeamFeatures {
                team: team.clone(),
                raw: v,
                standardized: v,
                short_roster: false,
            }
        })
        .collect();
    let table = FeatureTable { season: 1, rows };
    let spec = ModelSpec::new(names.to_vec());
    let data = BtData::from_season(&season, &table, &spec).unwrap();
    let opts = FitOptions {
        n_iter: 2_000,
        burn_in: 500,
        ..FitOptions::default()
    };
    let mut group = c.benchmark_group("fit_chains");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| fit_chains(&data, &spec, &opts, 4, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, phi_interval, chains);
criterion_main!(benches);
