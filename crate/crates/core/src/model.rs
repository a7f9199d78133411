//! Latent factor matrices and dot-product scoring.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_index_table, read_json, write_index_table, write_json};
use crate::training::TrainConfig;

pub const DEFAULT_INIT_SCALE: f64 = 0.1;

/// Source factors `P` (K × |S|) and event factors `Q` (K × |E|).
///
/// Both matrices are stored column-major: the K factors of one source (or
/// event) are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    k: usize,
    num_sources: usize,
    num_events: usize,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl FactorModel {
    /// Draws every factor i.i.d. from N(0, scale²) using a seeded stream.
    pub fn init(num_sources: usize, num_events: usize, k: usize, seed: u64, scale: f64) -> Result<Self> {
        if num_sources == 0 || num_events == 0 || k == 0 {
            return Err(Error::invalid(format!(
                "model dimensions must be positive (sources={num_sources}, events={num_events}, k={k})"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("init scale must be positive and finite, got {scale}")));
        }
        let normal = Normal::new(0.0, scale).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = (0..k * num_sources).map(|_| normal.sample(&mut rng)).collect();
        let q = (0..k * num_events).map(|_| normal.sample(&mut rng)).collect();
        Ok(Self {
            k,
            num_sources,
            num_events,
            p,
            q,
        })
    }

    /// Builds a model from explicit column-major factor matrices.
    pub fn from_factors(k: usize, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if k == 0 || p.is_empty() || q.is_empty() || !p.len().is_multiple_of(k) || !q.len().is_multiple_of(k) {
            return Err(Error::invalid(format!(
                "factor lengths ({}, {}) are not positive multiples of k={k}",
                p.len(),
                q.len()
            )));
        }
        if p.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("factor matrices contain non-finite entries"));
        }
        Ok(Self {
            k,
            num_sources: p.len() / k,
            num_events: q.len() / k,
            p,
            q,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn num_events(&self) -> usize {
        self.num_events
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn check_source(&self, source: usize) -> Result<()> {
        if source < self.num_sources {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                kind: "source",
                index: source,
                len: self.num_sources,
            })
        }
    }

    pub fn check_event(&self, event: usize) -> Result<()> {
        if event < self.num_events {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                kind: "event",
                index: event,
                len: self.num_events,
            })
        }
    }

    /// Latent vector of a source. Panics when out of range.
    pub fn source_vec(&self, source: usize) -> &[f64] {
        &self.p[source * self.k..(source + 1) * self.k]
    }

    /// Latent vector of an event. Panics when out of range.
    pub fn event_vec(&self, event: usize) -> &[f64] {
        &self.q[event * self.k..(event + 1) * self.k]
    }

    /// Mutable views of one source vector and two distinct event vectors.
    pub(crate) fn triplet_views_mut(
        &mut self,
        source: usize,
        a: usize,
        b: usize,
    ) -> (&mut [f64], &mut [f64], &mut [f64]) {
        assert_ne!(a, b, "event vectors must be distinct");
        let k = self.k;
        let p = &mut self.p[source * k..(source + 1) * k];
        let (qa, qb) = if a < b {
            let (lo, hi) = self.q.split_at_mut(b * k);
            (&mut lo[a * k..(a + 1) * k], &mut hi[..k])
        } else {
            let (lo, hi) = self.q.split_at_mut(a * k);
            (&mut hi[..k], &mut lo[b * k..(b + 1) * k])
        };
        (p, qa, qb)
    }

    /// Raw preference score `p_sᵀ q_e`. Unbounded.
    pub fn score(&self, source: usize, event: usize) -> Result<f64> {
        self.check_source(source)?;
        self.check_event(event)?;
        Ok(self.score_unchecked(source, event))
    }

    pub(crate) fn score_unchecked(&self, source: usize, event: usize) -> f64 {
        dot(self.source_vec(source), self.event_vec(event))
    }

    /// `score(s, pos) - score(s, neg)`.
    pub fn score_triplet(&self, source: usize, pos_event: usize, neg_event: usize) -> Result<f64> {
        self.check_source(source)?;
        self.check_event(pos_event)?;
        self.check_event(neg_event)?;
        Ok(self.score_triplet_unchecked(source, pos_event, neg_event))
    }

    pub(crate) fn score_triplet_unchecked(&self, source: usize, pos_event: usize, neg_event: usize) -> f64 {
        let p = self.source_vec(source);
        let qp = self.event_vec(pos_event);
        let qn = self.event_vec(neg_event);
        p.iter()
            .zip(qp.iter().zip(qn))
            .map(|(pf, (a, b))| pf * (a - b))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.q.iter()).all(|v| v.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Logistic function, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)`, stable for large negative x.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Contents of `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub k: usize,
    pub num_sources: usize,
    pub num_events: usize,
    pub seed: u64,
    pub config: Option<TrainConfig>,
    pub p_file: String,
    pub q_file: String,
    pub layout: String,
}

const LAYOUT: &str = "f64-le column-major";

/// A model together with the index tables it was trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: FactorModel,
    pub header: ModelHeader,
    pub sources: Vec<String>,
    pub events: Vec<String>,
}

impl ModelBundle {
    pub fn new(model: FactorModel, seed: u64, config: Option<TrainConfig>, sources: Vec<String>, events: Vec<String>) -> Result<Self> {
        if sources.len() != model.num_sources() || events.len() != model.num_events() {
            return Err(Error::invalid(format!(
                "index tables ({} sources, {} events) do not match model ({} × {})",
                sources.len(),
                events.len(),
                model.num_sources(),
                model.num_events()
            )));
        }
        let header = ModelHeader {
            k: model.k(),
            num_sources: model.num_sources(),
            num_events: model.num_events(),
            seed,
            config,
            p_file: "P.bin".into(),
            q_file: "Q.bin".into(),
            layout: LAYOUT.into(),
        };
        Ok(Self {
            model,
            header,
            sources,
            events,
        })
    }
}

fn write_blob(path: &Path, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_blob(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 8 {
        return Err(Error::format(
            path,
            format!("expected {} bytes, found {}", expected * 8, bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_model(dir: &Path, bundle: &ModelBundle) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("model.json"), &bundle.header)?;
    write_blob(&dir.join(&bundle.header.p_file), bundle.model.p())?;
    write_blob(&dir.join(&bundle.header.q_file), bundle.model.q())?;
    write_index_table(&dir.join("sources.tsv"), "name", &bundle.sources)?;
    write_index_table(&dir.join("events.tsv"), "id", &bundle.events)
}

pub fn read_model(dir: &Path) -> Result<ModelBundle> {
    let header: ModelHeader = read_json(&dir.join("model.json"))?;
    if header.layout != LAYOUT {
        return Err(Error::format(dir.join("model.json"), format!("unsupported layout {:?}", header.layout)));
    }
    let p = read_blob(&dir.join(&header.p_file), header.k * header.num_sources)?;
    let q = read_blob(&dir.join(&header.q_file), header.k * header.num_events)?;
    let model = FactorModel::from_factors(header.k, p, q).map_err(|e| Error::format(dir, e.to_string()))?;
    let sources = read_index_table(&dir.join("sources.tsv"))?;
    let events = read_index_table(&dir.join("events.tsv"))?;
    if sources.len() != header.num_sources || events.len() != header.num_events {
        return Err(Error::format(dir, "index tables disagree with model.json"));
    }
    Ok(ModelBundle {
        model,
        header,
        sources,
        events,
    })
}
