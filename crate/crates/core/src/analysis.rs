//! Embedding diagnostics: pairwise source distances and their stability
//! across independently trained models.

use std::cmp::Reverse;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{euclidean, FactorModel};

/// Euclidean distances between the embeddings of `subset`, in condensed
/// upper-triangle order: (0,1), (0,2), …, (0,m-1), (1,2), …
pub fn pairwise_distances(model: &FactorModel, subset: &[usize]) -> Result<Vec<f64>> {
    if subset.len() < 2 {
        return Err(Error::invalid("need at least two sources for pairwise distances"));
    }
    for &s in subset {
        model.check_source(s)?;
    }
    let m = subset.len();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for (i, &a) in subset.iter().enumerate() {
        for &b in &subset[i + 1..] {
            out.push(euclidean(model.source_vec(a), model.source_vec(b)));
        }
    }
    Ok(out)
}

/// Pearson correlation coefficient, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("pearson needs two equal-length vectors of length >= 2"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// A trained model together with the names and activity of its sources.
#[derive(Debug, Clone, Copy)]
pub struct WeekEmbedding<'a> {
    pub model: &'a FactorModel,
    pub source_names: &'a [String],
    pub activity: &'a [usize],
}

impl<'a> WeekEmbedding<'a> {
    pub fn new(model: &'a FactorModel, source_names: &'a [String], activity: &'a [usize]) -> Result<Self> {
        if source_names.len() != model.num_sources() || activity.len() != model.num_sources() {
            return Err(Error::invalid("names and activity must cover every model source"));
        }
        Ok(Self {
            model,
            source_names,
            activity,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub common_sources: usize,
    pub sources_used: usize,
}

/// Names present in both weeks, ranked by summed activity (then by name),
/// truncated to `top_m`. Returns `(name, index in a, index in b)`.
pub fn common_top_sources(a: &WeekEmbedding, b: &WeekEmbedding, top_m: usize) -> Vec<(String, usize, usize)> {
    let in_b: HashMap<&str, usize> = b
        .source_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut common: Vec<(String, usize, usize)> = a
        .source_names
        .iter()
        .enumerate()
        .filter_map(|(i, n)| in_b.get(n.as_str()).map(|&j| (n.clone(), i, j)))
        .collect();
    common.sort_by_key(|(name, i, j)| (Reverse(a.activity[*i] + b.activity[*j]), name.clone()));
    common.truncate(top_m);
    common
}

/// Correlation between the pairwise distance vectors of the most active
/// sources shared by two weeks, compared pair by pair on source names.
pub fn cross_week_correlation(a: &WeekEmbedding, b: &WeekEmbedding, top_m: usize) -> Result<Correlation> {
    let total_common = common_top_sources(a, b, usize::MAX).len();
    let chosen = common_top_sources(a, b, top_m);
    if chosen.len() < 2 {
        return Err(Error::invalid(format!(
            "only {} common source(s); need at least two",
            chosen.len()
        )));
    }
    let idx_a: Vec<usize> = chosen.iter().map(|c| c.1).collect();
    let idx_b: Vec<usize> = chosen.iter().map(|c| c.2).collect();
    let da = pairwise_distances(a.model, &idx_a)?;
    let db = pairwise_distances(b.model, &idx_b)?;
    Ok(Correlation {
        pearson: pearson(&da, &db)?,
        common_sources: total_common,
        sources_used: chosen.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub week_a: usize,
    pub week_b: usize,
    #[serde(flatten)]
    pub correlation: Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub pairs: Vec<PairCorrelation>,
    pub mean_all_pairs: f64,
    pub mean_consecutive: f64,
}

/// Correlations for every pair of weeks, averaged over all pairs and over
/// consecutive pairs only.
pub fn correlation_summary(weeks: &[WeekEmbedding], top_m: usize) -> Result<CorrelationSummary> {
    if weeks.len() < 2 {
        return Err(Error::invalid("need at least two weeks"));
    }
    let mut pairs = Vec::new();
    for i in 0..weeks.len() {
        for j in i + 1..weeks.len() {
            pairs.push(PairCorrelation {
                week_a: i,
                week_b: j,
                correlation: cross_week_correlation(&weeks[i], &weeks[j], top_m)?,
            });
        }
    }
    let mean = |it: &mut dyn Iterator<Item = f64>| {
        let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        sum / n as f64
    };
    let mean_all_pairs = mean(&mut pairs.iter().map(|p| p.correlation.pearson));
    let mean_consecutive = mean(
        &mut pairs
            .iter()
            .filter(|p| p.week_b == p.week_a + 1)
            .map(|p| p.correlation.pearson),
    );
    Ok(CorrelationSummary {
        pairs,
        mean_all_pairs,
        mean_consecutive,
    })
}
