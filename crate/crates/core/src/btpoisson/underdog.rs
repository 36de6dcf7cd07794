use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::BtError;
use crate::corpus::MatchRecord;
use crate::stats;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UnderdogCell {
    pub matches: usize,
    pub underdog_wins: usize,
    /// `None` when no match qualifies.
    pub prob: Option<f64>,
}

impl UnderdogCell {
    fn add(&mut self, won: bool) {
        self.matches += 1;
        self.underdog_wins += usize::from(won);
    }

    fn finish(&mut self) {
        self.prob = (self.matches > 0).then(|| self.underdog_wins as f64 / self.matches as f64);
    }
}

/// Underdog win frequencies. The underdog is the side with the smaller skill.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UnderdogTable {
    /// `P(U)`.
    pub overall: UnderdogCell,
    /// `P(U|A)`: underdog plays away.
    pub away: UnderdogCell,
    /// `P(U|H)`: underdog plays at home.
    pub home: UnderdogCell,
    /// As `away`, restricted to favourites in the high-skill set.
    pub away_rplus: Option<UnderdogCell>,
    pub home_rplus: Option<UnderdogCell>,
    /// Matches skipped because both sides have equal skill.
    pub equal_skill: usize,
    /// Matches skipped because a team has no skill estimate.
    pub unknown_team: usize,
}

/// Counts underdog wins. A draw is not a win.
pub fn underdog_probs(
    alpha: &BTreeMap<String, f64>,
    matches: &[MatchRecord],
    removed_plus: Option<&[String]>,
) -> Result<UnderdogTable, BtError> {
    let plus: Option<BTreeSet<&str>> =
        removed_plus.map(|r| r.iter().map(String::as_str).collect());
    let mut t = UnderdogTable {
        away_rplus: plus.as_ref().map(|_| UnderdogCell::default()),
        home_rplus: plus.as_ref().map(|_| UnderdogCell::default()),
        ..UnderdogTable::default()
    };
    for m in matches {
        let (Some(&ah), Some(&aa)) = (alpha.get(&m.home), alpha.get(&m.away)) else {
            t.unknown_team += 1;
            continue;
        };
        if ah == aa {
            t.equal_skill += 1;
            continue;
        }
        let underdog_home = ah < aa;
        let (won, favourite) = if underdog_home {
            (m.home_score > m.away_score, &m.away)
        } else {
            (m.away_score > m.home_score, &m.home)
        };
        t.overall.add(won);
        let in_plus = plus.as_ref().is_some_and(|p| p.contains(favourite.as_str()));
        if underdog_home {
            t.home.add(won);
            if in_plus {
                t.home_rplus.as_mut().expect("R+ cell").add(won);
            }
        } else {
            t.away.add(won);
            if in_plus {
                t.away_rplus.as_mut().expect("R+ cell").add(won);
            }
        }
    }
    if t.overall.matches == 0 {
        return Err(BtError::EmptyCondition);
    }
    for cell in [&mut t.overall, &mut t.away, &mut t.home] {
        cell.finish();
    }
    for cell in [t.away_rplus.as_mut(), t.home_rplus.as_mut()].into_iter().flatten() {
        cell.finish();
    }
    Ok(t)
}

/// Pearson correlation between skill and the number of matches won.
pub fn skill_win_correlation(alpha: &BTreeMap<String, f64>, matches: &[MatchRecord]) -> f64 {
    let mut wins: BTreeMap<&str, f64> = alpha.keys().map(|t| (t.as_str(), 0.0)).collect();
    for m in matches {
        let winner = match m.home_score.cmp(&m.away_score) {
            std::cmp::Ordering::Greater => &m.home,
            std::cmp::Ordering::Less => &m.away,
            std::cmp::Ordering::Equal => continue,
        };
        if let Some(w) = wins.get_mut(winner.as_str()) {
            *w += 1.0;
        }
    }
    let a: Vec<f64> = alpha.values().copied().collect();
    let w: Vec<f64> = wins.values().copied().collect();
    stats::pearson(&a, &w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(home: &str, away: &str, hs: u32, as_: u32) -> MatchRecord {
        MatchRecord {
            league: "L".into(),
            season: "1".into(),
            round: 1,
            home: home.into(),
            away: away.into(),
            home_score: hs,
            away_score: as_,
        }
    }

    fn alpha(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(t, a)| (t.to_string(), *a)).collect()
    }

    #[test]
    fn counts_by_venue() {
        let a = alpha(&[("A", 3.0), ("B", 1.0), ("C", 2.0)]);
        let games = [
            m("B", "A", 90, 80), // underdog home win
            m("A", "B", 70, 80), // underdog away win
            m("A", "C", 90, 80), // favourite wins
            m("C", "B", 70, 75), // underdog away win
        ];
        let t = underdog_probs(&a, &games, Some(&["A".to_string()])).unwrap();
        assert_eq!((t.overall.matches, t.overall.underdog_wins), (4, 3));
        assert_eq!(t.home.prob, Some(1.0));
        assert_eq!(t.away.prob, Some(2.0 / 3.0));
        let ar = t.away_rplus.unwrap();
        assert_eq!((ar.matches, ar.underdog_wins), (2, 1));
        assert_eq!(t.home_rplus.unwrap().matches, 1);
    }

    #[test]
    fn equal_skills_are_excluded() {
        let a = alpha(&[("A", 1.0), ("B", 1.0)]);
        let games = [m("A", "B", 1, 0), m("B", "A", 1, 0)];
        assert!(matches!(
            underdog_probs(&a, &games, None),
            Err(BtError::EmptyCondition)
        ));
    }

    #[test]
    fn draws_are_not_wins() {
        let a = alpha(&[("A", 2.0), ("B", 1.0)]);
        let t = underdog_probs(&a, &[m("A", "B", 1, 1)], None).unwrap();
        assert_eq!(t.overall.prob, Some(0.0));
        assert!(t.home.prob.is_none());
        assert!(t.away_rplus.is_none());
    }
}
