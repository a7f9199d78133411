//! Equality, novelty and retention statistics for the combined coverage of a
//! source subset. An "article" is one (source, event) interaction.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::InteractionDataset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageProfile {
    /// Articles per event from the selected sources, indexed by event.
    pub counts: Vec<usize>,
    pub total_articles: usize,
    pub unique_events: usize,
}

impl CoverageProfile {
    pub fn ratio_events_articles(&self) -> f64 {
        self.unique_events as f64 / self.total_articles as f64
    }

    /// Counts of the events the subset covered at least once.
    pub fn covered_counts(&self) -> Vec<f64> {
        self.counts.iter().filter(|&&c| c > 0).map(|&c| c as f64).collect()
    }

    pub fn all_counts(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn counts_for(&self, universe: GiniUniverse) -> Vec<f64> {
        match universe {
            GiniUniverse::Subset => self.covered_counts(),
            GiniUniverse::All => self.all_counts(),
        }
    }
}

/// Which events enter the inequality statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GiniUniverse {
    /// Only events the subset covered.
    #[default]
    Subset,
    /// Every event in the dataset, including zero-count ones.
    All,
}

impl FromStr for GiniUniverse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subset" => Ok(Self::Subset),
            "all" => Ok(Self::All),
            other => Err(Error::invalid(format!("unknown gini universe {other:?}"))),
        }
    }
}

fn check_selection(train: &InteractionDataset, selected: &[usize]) -> Result<()> {
    if selected.is_empty() {
        return Err(Error::invalid("selection is empty"));
    }
    let mut seen = vec![false; train.num_sources()];
    for &s in selected {
        if s >= train.num_sources() {
            return Err(Error::IndexOutOfRange {
                kind: "source",
                index: s,
                len: train.num_sources(),
            });
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::invalid(format!("source {s} selected twice")));
        }
    }
    Ok(())
}

pub fn coverage_profile(train: &InteractionDataset, selected: &[usize]) -> Result<CoverageProfile> {
    check_selection(train, selected)?;
    let mut counts = vec![0usize; train.num_events()];
    for &s in selected {
        for it in train.source_interactions(s) {
            counts[it.event] += 1;
        }
    }
    let total_articles = counts.iter().sum();
    let unique_events = counts.iter().filter(|&&c| c > 0).count();
    Ok(CoverageProfile {
        counts,
        total_articles,
        unique_events,
    })
}

fn check_counts(counts: &[f64]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::invalid("no counts"));
    }
    if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::invalid("counts must be finite and non-negative"));
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::Undefined("all counts are zero".into()));
    }
    Ok(total)
}

fn sorted(counts: &[f64]) -> Vec<f64> {
    let mut xs = counts.to_vec();
    xs.sort_by(f64::total_cmp);
    xs
}

/// Gini coefficient `Σ_i Σ_j |x_i - x_j| / (2 n² μ)`.
///
/// Evaluated in O(n log n) from the ascending order statistics as
/// `Σ_i (2i - n - 1) x_(i) / (n Σ x)` with 1-based i.
pub fn gini(counts: &[f64]) -> Result<f64> {
    check_counts(counts)?;
    let xs = sorted(counts);
    let n = xs.len() as f64;
    let (weighted, total) = xs
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(w, t), (i, &x)| (w + (2.0 * (i as f64 + 1.0) - n - 1.0) * x, t + x));
    Ok((weighted / (n * total)).max(0.0))
}

/// Lorenz curve of the counts: `(k/n, share of the k smallest)` for
/// k = 0..=n, so the curve starts at (0, 0) and ends at (1, 1).
pub fn lorenz_points(counts: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_counts(counts)?;
    let xs = sorted(counts);
    let n = xs.len();
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for x in &xs {
        acc += x;
        cumulative.push(acc);
    }
    let total = acc;
    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    points.extend(
        cumulative
            .iter()
            .enumerate()
            .map(|(k, c)| ((k + 1) as f64 / n as f64, c / total)),
    );
    Ok(points)
}

/// Fraction of the `top_n` most covered events of the whole dataset that the
/// subset covers at least once. Events are ranked by coverage, then index.
pub fn top_event_retention(train: &InteractionDataset, selected: &[usize], top_n: usize) -> Result<f64> {
    if top_n == 0 {
        return Err(Error::invalid("top_n must be at least 1"));
    }
    let profile = coverage_profile(train, selected)?;
    let top_n = if top_n > train.num_events() {
        log::warn!("top_n = {top_n} exceeds {} events; clamping", train.num_events());
        train.num_events()
    } else {
        top_n
    };
    let popularity = train.event_popularity();
    let mut ranked: Vec<usize> = (0..train.num_events()).collect();
    ranked.sort_by_key(|&e| (std::cmp::Reverse(popularity[e]), e));
    let kept = ranked[..top_n].iter().filter(|&&e| profile.counts[e] > 0).count();
    Ok(kept as f64 / top_n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retention {
    pub top_100: f64,
    pub top_1000: f64,
    pub top_5000: f64,
}

/// Metrics block reported alongside a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub gini: f64,
    pub ratio_events_articles: f64,
    pub total_articles: usize,
    pub unique_events: usize,
    pub retention: Retention,
}

pub fn coverage_report(
    train: &InteractionDataset,
    selected: &[usize],
    universe: GiniUniverse,
) -> Result<CoverageReport> {
    let profile = coverage_profile(train, selected)?;
    Ok(CoverageReport {
        gini: gini(&profile.counts_for(universe))?,
        ratio_events_articles: profile.ratio_events_articles(),
        total_articles: profile.total_articles,
        unique_events: profile.unique_events,
        retention: Retention {
            top_100: top_event_retention(train, selected, 100)?,
            top_1000: top_event_retention(train, selected, 1000)?,
            top_5000: top_event_retention(train, selected, 5000)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_dataset, MentionRecord, Window};
    use chrono::{Duration, TimeZone, Utc};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(coverage: &[Vec<usize>]) -> InteractionDataset {
        let t0 = Utc.with_ymd_and_hms(2016, 10, 1, 0, 0, 0).unwrap();
        let w = Window::new(t0, t0 + Duration::days(7)).unwrap();
        let recs: Vec<_> = coverage
            .iter()
            .enumerate()
            .flat_map(|(s, evs)| {
                evs.iter().map(move |&e| MentionRecord {
                    event_id: format!("e{e:04}"),
                    source_name: format!("s{s:03}"),
                    mention_time: t0,
                })
            })
            .collect();
        build_dataset(&recs, w, 1, 1).unwrap()
    }

    fn pairwise_gini(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let mut acc = 0.0;
        for a in xs {
            for b in xs {
                acc += (a - b).abs();
            }
        }
        acc / (2.0 * n * n * mean)
    }

    #[test]
    fn profile_no_overlap_and_full_overlap() {
        let ds = dataset(&[(0..5).collect(), (0..5).collect(), (5..8).collect()]);
        let one = coverage_profile(&ds, &[0]).unwrap();
        assert_eq!((one.total_articles, one.unique_events), (5, 5));
        assert_eq!(one.ratio_events_articles(), 1.0);
        let two = coverage_profile(&ds, &[0, 1]).unwrap();
        assert_eq!((two.total_articles, two.unique_events), (10, 5));
        assert_eq!(two.ratio_events_articles(), 0.5);
    }

    #[test]
    fn profile_matches_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cov: Vec<Vec<usize>> = (0..20)
            .map(|_| (0..60).filter(|_| rng.random_bool(0.2)).collect::<Vec<_>>())
            .map(|v| if v.is_empty() { vec![0] } else { v })
            .collect();
        let ds = dataset(&cov);
        for _ in 0..10 {
            let subset: Vec<usize> = (0..ds.num_sources()).filter(|_| rng.random_bool(0.4)).collect();
            if subset.is_empty() {
                continue;
            }
            let profile = coverage_profile(&ds, &subset).unwrap();
            let mut recount = std::collections::HashMap::new();
            for it in ds.interactions() {
                if subset.contains(&it.source) {
                    *recount.entry(it.event).or_insert(0usize) += 1;
                }
            }
            assert_eq!(profile.unique_events, recount.len());
            assert_eq!(profile.total_articles, recount.values().sum::<usize>());
            for (e, c) in recount {
                assert_eq!(profile.counts[e], c);
            }
        }
    }

    #[test]
    fn selection_errors() {
        let ds = dataset(&[vec![0, 1]]);
        assert!(coverage_profile(&ds, &[]).is_err());
        assert!(coverage_profile(&ds, &[3]).is_err());
        assert!(coverage_profile(&ds, &[0, 0]).is_err());
    }

    #[test]
    fn gini_reference_values() {
        assert_eq!(gini(&[3.0; 7]).unwrap(), 0.0);
        assert!((gini(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 0.25).abs() < 1e-15);
        for n in 1..10 {
            let mut xs = vec![0.0; n - 1];
            xs.push(5.0);
            assert!((gini(&xs).unwrap() - (n as f64 - 1.0) / n as f64).abs() < 1e-12);
        }
        assert!(gini(&[]).is_err());
        assert!(gini(&[0.0, 0.0]).is_err());
        assert!(gini(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn gini_matches_pairwise_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.random_range(1..=500);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..50) as f64).collect();
            if xs.iter().sum::<f64>() == 0.0 {
                continue;
            }
            assert!((gini(&xs).unwrap() - pairwise_gini(&xs)).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn gini_bounds_and_scale_invariance(
            xs in proptest::collection::vec(0u32..1000, 1..200),
            scale in 0.001f64..1000.0,
        ) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            prop_assume!(xs.iter().sum::<f64>() > 0.0);
            let g = gini(&xs).unwrap();
            let n = xs.len() as f64;
            prop_assert!(g >= 0.0 && g <= (n - 1.0) / n + 1e-12);
            let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
            prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-12);
        }

        #[test]
        fn lorenz_is_convex_monotone_and_ends_at_one(xs in proptest::collection::vec(0u32..1000, 1..200)) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            prop_assume!(xs.iter().sum::<f64>() > 0.0);
            let pts = lorenz_points(&xs).unwrap();
            prop_assert_eq!(pts[0], (0.0, 0.0));
            prop_assert_eq!(*pts.last().unwrap(), (1.0, 1.0));
            for w in pts.windows(2) {
                prop_assert!(w[1].1 >= w[0].1);
            }
            // slopes non-decreasing
            for w in pts.windows(3) {
                let s1 = w[1].1 - w[0].1;
                let s2 = w[2].1 - w[1].1;
                prop_assert!(s2 >= s1 - 1e-12);
            }
        }
    }

    #[test]
    fn lorenz_examples() {
        let pts = lorenz_points(&[0.0, 0.0, 10.0]).unwrap();
        assert_eq!(pts, vec![(0.0, 0.0), (1.0 / 3.0, 0.0), (2.0 / 3.0, 0.0), (1.0, 1.0)]);
        for (x, y) in lorenz_points(&[2.0; 5]).unwrap() {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn retention_cases() {
        // popularity: e0 by 3 sources, e1 by 2, e2..e4 by 1
        let ds = dataset(&[vec![0, 1, 2], vec![0, 1, 3], vec![0, 4]]);
        assert_eq!(top_event_retention(&ds, &[0, 1, 2], 3).unwrap(), 1.0);
        assert_eq!(top_event_retention(&ds, &[2], 2).unwrap(), 0.5);
        // clamped to 5 events; source 2 covers e0 and e4
        assert_eq!(top_event_retention(&ds, &[2], 10).unwrap(), 0.4);
        assert!(top_event_retention(&ds, &[2], 0).is_err());

        let ds = dataset(&[(0..10).collect(), (0..10).collect(), vec![20, 21]]);
        assert_eq!(top_event_retention(&ds, &[2], 10).unwrap(), 0.0);
    }

    #[test]
    fn retention_matches_intersection() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cov: Vec<Vec<usize>> = (0..25)
            .map(|_| (0..80).filter(|_| rng.random_bool(0.15)).collect::<Vec<_>>())
            .map(|v| if v.is_empty() { vec![1] } else { v })
            .collect();
        let ds = dataset(&cov);
        let pop = ds.event_popularity();
        for _ in 0..10 {
            let subset: Vec<usize> = (0..ds.num_sources()).filter(|_| rng.random_bool(0.3)).collect();
            if subset.is_empty() {
                continue;
            }
            let top_n = rng.random_range(1..=ds.num_events());
            let mut order: Vec<usize> = (0..ds.num_events()).collect();
            order.sort_by(|&a, &b| pop[b].cmp(&pop[a]).then(a.cmp(&b)));
            let top: std::collections::HashSet<usize> = order[..top_n].iter().copied().collect();
            let covered: std::collections::HashSet<usize> = ds
                .interactions()
                .iter()
                .filter(|it| subset.contains(&it.source))
                .map(|it| it.event)
                .collect();
            let want = top.intersection(&covered).count() as f64 / top_n as f64;
            assert_eq!(top_event_retention(&ds, &subset, top_n).unwrap(), want);
        }
    }

    #[test]
    fn universe_flag_changes_counts() {
        let ds = dataset(&[vec![0, 1], vec![0, 2, 3]]);
        let p = coverage_profile(&ds, &[0]).unwrap();
        assert_eq!(p.counts_for(GiniUniverse::Subset), vec![1.0, 1.0]);
        assert_eq!(p.counts_for(GiniUniverse::All).len(), 4);
        assert_eq!(gini(&p.counts_for(GiniUniverse::Subset)).unwrap(), 0.0);
        assert!(gini(&p.counts_for(GiniUniverse::All)).unwrap() > 0.0);
        assert_eq!("all".parse::<GiniUniverse>().unwrap(), GiniUniverse::All);
    }
}
