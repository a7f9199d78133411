//! Greedy maximal-marginal-relevance selection of sources.
//!
//! ```text
//! MMR(s) = β · relevance(s) - (1 - β) · max_{b ∈ B} sim(s, b)
//! ```
//!
//! where `B` is the set already picked, `relevance` is normalised activity
//! and `sim` is the inverse Euclidean distance between source embeddings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::InteractionDataset;
use crate::model::{euclidean, FactorModel};

pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub n: usize,
    pub beta: f64,
    /// Lower bound on distances, so identical embeddings get similarity `1/epsilon`.
    pub epsilon: f64,
}

impl SelectionConfig {
    pub fn new(n: usize, beta: f64) -> Self {
        Self {
            n,
            beta,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pick {
    pub source: usize,
    /// MMR score at the time of the pick. The first pick has no selected set
    /// to compare against and records `β · relevance`.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub picks: Vec<Pick>,
}

impl SelectionResult {
    pub fn sources(&self) -> Vec<usize> {
        self.picks.iter().map(|p| p.source).collect()
    }
}

/// Distinct events covered per source, divided by the maximum over sources.
pub fn relevance_scores(train: &InteractionDataset) -> Result<Vec<f64>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let activity = train.source_activity();
    let max = *activity.iter().max().expect("non-empty dataset has sources") as f64;
    Ok(activity.into_iter().map(|a| a as f64 / max).collect())
}

/// `1 / max(‖p_i - p_j‖, epsilon)`.
pub fn similarity(model: &FactorModel, i: usize, j: usize, epsilon: f64) -> Result<f64> {
    model.check_source(i)?;
    model.check_source(j)?;
    if i == j {
        return Err(Error::invalid("similarity of a source with itself is undefined"));
    }
    Ok(similarity_unchecked(model, i, j, epsilon))
}

fn similarity_unchecked(model: &FactorModel, i: usize, j: usize, epsilon: f64) -> f64 {
    1.0 / euclidean(model.source_vec(i), model.source_vec(j)).max(epsilon)
}

/// Greedily picks `config.n` sources.
///
/// The first pick is the most relevant source. Each following pick maximises
/// the MMR score over the remaining sources. Ties go to the lower index.
pub fn mmr_select(model: &FactorModel, relevance: &[f64], config: &SelectionConfig) -> Result<SelectionResult> {
    let n_sources = model.num_sources();
    if relevance.len() != n_sources {
        return Err(Error::invalid(format!(
            "{} relevance scores for {n_sources} sources",
            relevance.len()
        )));
    }
    if relevance.iter().any(|r| !r.is_finite()) {
        return Err(Error::invalid("relevance scores must be finite"));
    }
    if config.n == 0 || config.n > n_sources {
        return Err(Error::invalid(format!(
            "cannot select {} of {n_sources} sources",
            config.n
        )));
    }
    if !(0.0..=1.0).contains(&config.beta) {
        return Err(Error::invalid(format!("beta must lie in [0, 1], got {}", config.beta)));
    }
    if config.epsilon.is_nan() || config.epsilon <= 0.0 {
        return Err(Error::invalid("epsilon must be positive"));
    }

    let beta = config.beta;
    let mut selected = vec![false; n_sources];
    // max similarity to the selected set, per source
    let mut nearest = vec![0.0f64; n_sources];
    let mut picks = Vec::with_capacity(config.n);

    let (first, _) = argmax(relevance.iter().copied().enumerate()).expect("at least one source");
    picks.push(Pick {
        source: first,
        score: beta * relevance[first],
    });
    selected[first] = true;
    let mut last = first;

    while picks.len() < config.n {
        for s in 0..n_sources {
            if !selected[s] {
                let sim = similarity_unchecked(model, s, last, config.epsilon);
                if sim > nearest[s] {
                    nearest[s] = sim;
                }
            }
        }
        let candidates = (0..n_sources)
            .filter(|&s| !selected[s])
            .map(|s| (s, beta * relevance[s] - (1.0 - beta) * nearest[s]));
        let (best, score) = argmax(candidates).expect("n <= |S| leaves a candidate");
        picks.push(Pick { source: best, score });
        selected[best] = true;
        last = best;
    }
    Ok(SelectionResult { picks })
}

/// Largest value with its index; the first one wins ties.
fn argmax(items: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in items {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_dataset, MentionRecord, Window};
    use chrono::{Duration, TimeZone, Utc};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model_1d(p: &[f64]) -> FactorModel {
        FactorModel::from_factors(1, p.to_vec(), vec![0.0]).unwrap()
    }

    fn dataset(activity: &[usize]) -> InteractionDataset {
        let t0 = Utc.with_ymd_and_hms(2016, 10, 1, 0, 0, 0).unwrap();
        let w = Window::new(t0, t0 + Duration::days(7)).unwrap();
        let recs: Vec<_> = activity
            .iter()
            .enumerate()
            .flat_map(|(s, &a)| {
                (0..a).map(move |e| MentionRecord {
                    event_id: format!("e{e:03}"),
                    source_name: format!("s{s:03}"),
                    mention_time: t0,
                })
            })
            .collect();
        build_dataset(&recs, w, 1, 1).unwrap()
    }

    #[test]
    fn relevance_normalised_by_max() {
        assert_eq!(relevance_scores(&dataset(&[3])).unwrap(), vec![1.0]);
        assert_eq!(relevance_scores(&dataset(&[10, 5, 1])).unwrap(), vec![1.0, 0.5, 0.1]);
    }

    #[test]
    fn relevance_argmax_matches_activity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let act: Vec<usize> = (0..15).map(|_| rng.random_range(1..40)).collect();
            let rel = relevance_scores(&dataset(&act)).unwrap();
            let max_act = *act.iter().max().unwrap();
            let first_raw = act.iter().position(|&a| a == max_act).unwrap();
            let first_rel = rel.iter().position(|&r| r == 1.0).unwrap();
            assert_eq!(first_raw, first_rel);
        }
    }

    #[test]
    fn similarity_values() {
        let m = FactorModel::from_factors(2, vec![3.0, 0.0, 0.0, 4.0, 3.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!((similarity(&m, 0, 1, 1e-9).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(similarity(&m, 0, 2, 1e-9).unwrap(), 1.0 / 1e-9);
        assert!(similarity(&m, 1, 1, 1e-9).is_err());
        assert!(similarity(&m, 0, 5, 1e-9).is_err());
    }

    #[test]
    fn similarity_symmetric() {
        let m = FactorModel::init(30, 1, 5, 4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let i = rng.random_range(0..30);
            let j = (i + rng.random_range(1..30)) % 30;
            assert_eq!(similarity(&m, i, j, 1e-9).unwrap(), similarity(&m, j, i, 1e-9).unwrap());
        }
    }

    #[test]
    fn hand_traced_three_sources() {
        let m = model_1d(&[0.0, 0.1, 10.0]);
        let res = mmr_select(&m, &[1.0, 0.9, 0.1], &SelectionConfig::new(2, 0.5)).unwrap();
        assert_eq!(res.sources(), vec![0, 2]);
        // s2: 0.5 * 0.1 - 0.5 * (1/10)
        assert!((res.picks[1].score - 0.0).abs() < 1e-15);
    }

    #[test]
    fn beta_one_is_relevance_order() {
        let m = FactorModel::init(6, 1, 3, 9, 1.0).unwrap();
        let rel = [0.2, 1.0, 0.5, 0.5, 0.9, 0.1];
        let res = mmr_select(&m, &rel, &SelectionConfig::new(6, 1.0)).unwrap();
        assert_eq!(res.sources(), vec![1, 4, 2, 3, 0, 5]);
    }

    #[test]
    fn duplicate_embeddings_penalised_not_fatal() {
        let m = model_1d(&[1.0, 1.0, 5.0]);
        let res = mmr_select(&m, &[1.0, 1.0, 0.1], &SelectionConfig::new(3, 0.5)).unwrap();
        assert_eq!(res.sources(), vec![0, 2, 1]);
        assert!(res.picks[2].score < -1e8);
    }

    #[test]
    fn rejects_bad_configs() {
        let m = model_1d(&[0.0, 1.0]);
        assert!(mmr_select(&m, &[1.0, 0.5], &SelectionConfig::new(3, 0.5)).is_err());
        assert!(mmr_select(&m, &[1.0, 0.5], &SelectionConfig::new(0, 0.5)).is_err());
        assert!(mmr_select(&m, &[1.0, 0.5], &SelectionConfig::new(1, 1.5)).is_err());
        assert!(mmr_select(&m, &[1.0], &SelectionConfig::new(1, 0.5)).is_err());
        let zero_eps = SelectionConfig { epsilon: 0.0, ..SelectionConfig::new(1, 0.5) };
        assert!(mmr_select(&m, &[1.0, 0.5], &zero_eps).is_err());
    }
}
