//! Non-learned scorers used as comparison points for the factor model.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::InteractionDataset;
use crate::model::FactorModel;

/// Anything that assigns a real score to a (source, event) pair.
pub trait Scorer {
    fn score(&self, source: usize, event: usize) -> f64;
}

impl Scorer for FactorModel {
    fn score(&self, source: usize, event: usize) -> f64 {
        self.score_unchecked(source, event)
    }
}

impl<F: Fn(usize, usize) -> f64> Scorer for F {
    fn score(&self, source: usize, event: usize) -> f64 {
        self(source, event)
    }
}

/// Scores an event by how many sources covered it, regardless of source.
#[derive(Debug, Clone)]
pub struct PopularityScorer {
    counts: Vec<usize>,
}

impl PopularityScorer {
    pub fn new(train: &InteractionDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            counts: train.event_popularity(),
        })
    }
}

impl Scorer for PopularityScorer {
    fn score(&self, _source: usize, event: usize) -> f64 {
        self.counts[event] as f64
    }
}

/// `1 - |A ∩ B| / |A ∪ B|` for sorted, deduplicated index sets.
/// Two empty sets are at distance 0.
pub fn jaccard_distance(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub source: usize,
    pub similarity: f64,
}

/// Source-based k-nearest-neighbour scorer under Jaccard distance.
///
/// The score of (s, e) is the summed similarity `1 - d(s, n)` of those of
/// the k nearest sources n that covered e.
#[derive(Debug, Clone)]
pub struct KnnScorer {
    neighbors: Vec<Vec<Neighbor>>,
    coverage: Vec<Vec<usize>>,
}

impl KnnScorer {
    pub fn new(train: &InteractionDataset, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = train.num_sources();
        if n - 1 < k {
            log::warn!("only {} other sources available for k = {k}; using all of them", n - 1);
        }
        let coverage: Vec<Vec<usize>> = (0..n).map(|s| train.covered_events(s)).collect();
        let mut coverers: Vec<Vec<usize>> = vec![Vec::new(); train.num_events()];
        for it in train.interactions() {
            coverers[it.event].push(it.source);
        }

        let neighbors = (0..n)
            .into_par_iter()
            .map(|s| {
                let mut inter = vec![0usize; n];
                for &e in &coverage[s] {
                    for &other in &coverers[e] {
                        inter[other] += 1;
                    }
                }
                let mut ranked: Vec<(f64, usize)> = (0..n)
                    .filter(|&o| o != s)
                    .map(|o| {
                        let union = coverage[s].len() + coverage[o].len() - inter[o];
                        let d = if union == 0 { 0.0 } else { 1.0 - inter[o] as f64 / union as f64 };
                        (d, o)
                    })
                    .collect();
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                ranked
                    .into_iter()
                    .take(k)
                    .map(|(d, o)| Neighbor {
                        source: o,
                        similarity: 1.0 - d,
                    })
                    .collect()
            })
            .collect();
        Ok(Self { neighbors, coverage })
    }

    pub fn neighbors(&self, source: usize) -> &[Neighbor] {
        &self.neighbors[source]
    }
}

impl Scorer for KnnScorer {
    fn score(&self, source: usize, event: usize) -> f64 {
        self.neighbors[source]
            .iter()
            .filter(|n| self.coverage[n.source].binary_search(&event).is_ok())
            .map(|n| n.similarity)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_dataset, MentionRecord, Window};
    use chrono::{Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn dataset(coverage: &[&[usize]]) -> InteractionDataset {
        let t0 = Utc.with_ymd_and_hms(2016, 10, 1, 0, 0, 0).unwrap();
        let w = Window::new(t0, t0 + Duration::days(7)).unwrap();
        let recs: Vec<_> = coverage
            .iter()
            .enumerate()
            .flat_map(|(s, evs)| {
                evs.iter().map(move |&e| MentionRecord {
                    event_id: format!("e{e:03}"),
                    source_name: format!("s{s:03}"),
                    mention_time: t0,
                })
            })
            .collect();
        build_dataset(&recs, w, 1, 1).unwrap()
    }

    #[test]
    fn popularity_counts_sources() {
        let cov: Vec<Vec<usize>> = (0..9).map(|s| if s < 7 { vec![0, 1] } else { vec![1, 2] }).collect();
        let refs: Vec<&[usize]> = cov.iter().map(Vec::as_slice).collect();
        let ds = dataset(&refs);
        let pop = PopularityScorer::new(&ds).unwrap();
        for s in 0..9 {
            assert_eq!(pop.score(s, 0), 7.0);
            assert_eq!(pop.score(s, 1), 9.0);
            assert_eq!(pop.score(s, 2), 2.0);
        }
    }

    #[test]
    fn popularity_ranking_matches_column_sums() {
        let ds = dataset(&[&[0, 3, 4], &[3, 4], &[1, 3], &[2, 3, 4], &[4]]);
        let pop = PopularityScorer::new(&ds).unwrap();
        // dense R, then column sums
        let mut r = vec![vec![0u8; ds.num_events()]; ds.num_sources()];
        for it in ds.interactions() {
            r[it.source][it.event] = 1;
        }
        let sums: Vec<u32> = (0..ds.num_events()).map(|e| r.iter().map(|row| row[e] as u32).sum()).collect();
        let mut by_oracle: Vec<usize> = (0..ds.num_events()).collect();
        by_oracle.sort_by_key(|&e| (std::cmp::Reverse(sums[e]), e));
        let mut by_scorer: Vec<usize> = (0..ds.num_events()).collect();
        by_scorer.sort_by(|&a, &b| pop.score(0, b).total_cmp(&pop.score(0, a)).then(a.cmp(&b)));
        assert_eq!(by_oracle, by_scorer);
    }

    #[test]
    fn jaccard_boundaries() {
        assert_eq!(jaccard_distance(&[1, 2, 3], &[1, 2, 3]), 0.0);
        assert_eq!(jaccard_distance(&[1, 2], &[3, 4]), 1.0);
        assert_eq!(jaccard_distance(&[1, 2, 3], &[2, 3, 4]), 0.5);
        assert_eq!(jaccard_distance(&[], &[]), 0.0);
    }

    proptest! {
        #[test]
        fn jaccard_is_a_symmetric_unit_distance(
            a in proptest::collection::btree_set(0usize..40, 0..20),
            b in proptest::collection::btree_set(0usize..40, 0..20),
        ) {
            let a: Vec<usize> = a.into_iter().collect();
            let b: Vec<usize> = b.into_iter().collect();
            let d = jaccard_distance(&a, &b);
            prop_assert_eq!(d, jaccard_distance(&b, &a));
            prop_assert_eq!(jaccard_distance(&a, &a), 0.0);
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }

    #[test]
    fn knn_matches_exhaustive_enumeration() {
        let cov: [&[usize]; 4] = [&[0, 1, 2], &[0, 1, 3], &[2, 4], &[0, 1, 2, 5]];
        let ds = dataset(&cov);
        let knn = KnnScorer::new(&ds, 2).unwrap();

        for s in 0..4 {
            // all pairs, sorted by (distance, index)
            let mut all: Vec<(f64, usize)> = (0..4)
                .filter(|&o| o != s)
                .map(|o| {
                    let a: std::collections::BTreeSet<_> = cov[s].iter().collect();
                    let b: std::collections::BTreeSet<_> = cov[o].iter().collect();
                    let inter = a.intersection(&b).count() as f64;
                    let union = a.union(&b).count() as f64;
                    (1.0 - inter / union, o)
                })
                .collect();
            all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
            let expected: Vec<usize> = all.iter().take(2).map(|x| x.1).collect();
            let got: Vec<usize> = knn.neighbors(s).iter().map(|n| n.source).collect();
            assert_eq!(got, expected, "source {s}");

            for e in 0..ds.num_events() {
                let want: f64 = all
                    .iter()
                    .take(2)
                    .filter(|(_, o)| cov[*o].contains(&e))
                    .map(|(d, _)| 1.0 - d)
                    .sum();
                assert!((knn.score(s, e) - want).abs() < 1e-12);
            }
        }
        // s0 = {0,1,2}: d(s0,s1) = 1 - 2/4, d(s0,s3) = 1 - 3/4
        assert_eq!(knn.neighbors(0)[0].source, 3);
        assert!((knn.neighbors(0)[0].similarity - 0.75).abs() < 1e-12);
    }

    #[test]
    fn identical_and_disjoint_neighbors() {
        let ds = dataset(&[&[0, 1], &[0, 1], &[2, 3]]);
        let knn = KnnScorer::new(&ds, 2).unwrap();
        assert_eq!(knn.neighbors(0)[0], Neighbor { source: 1, similarity: 1.0 });
        assert_eq!(knn.neighbors(0)[1].similarity, 0.0);
        assert_eq!(knn.score(0, 2), 0.0);
        assert_eq!(knn.score(0, 0), 1.0);
    }

    #[test]
    fn knn_with_too_few_sources_uses_all() {
        let ds = dataset(&[&[0, 1], &[1, 2]]);
        let knn = KnnScorer::new(&ds, 10).unwrap();
        assert_eq!(knn.neighbors(0).len(), 1);
        assert!(KnnScorer::new(&ds, 0).is_err());
    }
}
