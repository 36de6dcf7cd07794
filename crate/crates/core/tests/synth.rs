use std::collections::{BTreeMap, BTreeSet};

use luckskill::corpus::{read_matches, write_matches, MatchFormat};
use luckskill::skillcoef::{evaluate_season, PhiOptions, PhiReport};
use luckskill::synth::{circle_rounds, simulate_random, Schedule, SynthConfig, SynthMode};
use luckskill::ScoringScheme;
use proptest::prelude::*;

proptest! {
    #[test]
    fn circle_rounds_pair_everyone_once(n in 2usize..30) {
        let rounds = circle_rounds(n);
        prop_assert_eq!(rounds.len(), if n % 2 == 0 { n - 1 } else { n });
        let mut pairs = BTreeSet::new();
        for r in &rounds {
            let mut seen = BTreeSet::new();
            for &(h, a) in r {
                prop_assert!(seen.insert(h) && seen.insert(a));
                prop_assert!(pairs.insert((h.min(a), h.max(a))));
            }
        }
        prop_assert_eq!(pairs.len(), n * (n - 1) / 2);
    }

    #[test]
    fn double_round_robin_meets_each_pair_home_and_away(n in 4usize..16, seed in any::<u64>()) {
        let s = simulate_random(&SynthConfig::random(n, ScoringScheme::soccer(), [0.4, 0.3, 0.3], seed)).unwrap();
        let mut pairs: BTreeMap<(String, String), usize> = BTreeMap::new();
        for m in &s.matches {
            *pairs.entry((m.home.clone(), m.away.clone())).or_default() += 1;
        }
        prop_assert_eq!(pairs.len(), n * (n - 1));
        prop_assert!(pairs.values().all(|&c| c == 1));
        prop_assert!(!s.irregular);
    }

    #[test]
    fn matches_survive_a_csv_round_trip(n in 4usize..10, seed in any::<u64>()) {
        let s = simulate_random(&SynthConfig::random(n, ScoringScheme::soccer(), [0.4, 0.3, 0.3], seed)).unwrap();
        let mut buf = Vec::new();
        write_matches(&mut buf, &s.matches).unwrap();
        let back = read_matches(buf.as_slice(), &MatchFormat::default()).unwrap();
        prop_assert_eq!(back, s.matches);
    }
}

#[test]
fn mirrored_rounds_give_equal_schedules() {
    for (n, rounds) in [(6, 10), (7, 14), (30, 41)] {
        let cfg = SynthConfig {
            schedule: Schedule::MirroredRounds { rounds },
            ..SynthConfig::random(n, ScoringScheme::basketball(), [0.6, 0.0, 0.4], 3)
        };
        let s = simulate_random(&cfg).unwrap();
        assert!(!s.irregular, "n={n}");
        let played = if n % 2 == 0 { 2 * rounds } else { 2 * rounds * (n - 1) / n };
        assert_eq!(s.games_per_team as usize, played, "n={n}");
    }
}

#[test]
fn phi_report_round_trips_through_json() {
    let s = simulate_random(&SynthConfig::random(12, ScoringScheme::soccer(), [0.5, 0.25, 0.25], 8)).unwrap();
    let r = evaluate_season(&s, &ScoringScheme::soccer(), &PhiOptions { n_replicates: 1000, ..PhiOptions::default() }).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let back: PhiReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}

#[test]
fn random_mode_only_produces_the_three_outcomes() {
    let cfg = SynthConfig {
        mode: SynthMode::Random { probs: [0.2, 0.5, 0.3] },
        ..SynthConfig::random(10, ScoringScheme::soccer(), [0.0, 1.0, 0.0], 1)
    };
    let s = simulate_random(&cfg).unwrap();
    for m in &s.matches {
        assert!(matches!((m.home_score, m.away_score), (1, 0) | (0, 0) | (0, 1)));
    }
}
