//! Stochastic pairwise-ranking (BPR) fitting of the factor model.
//!
//! Each step draws a covered (source, event) pair uniformly from the training
//! interactions, pairs it with a uniformly drawn event the source did not
//! cover, and moves the three involved vectors along the gradient of
//! `ln σ(x̂) - λ/2 (‖p_s‖² + ‖q⁺‖² + ‖q⁻‖²)` where `x̂ = p_sᵀ(q⁺ - q⁻)`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::InteractionDataset;
use crate::model::{log_sigmoid, sigmoid, FactorModel, DEFAULT_INIT_SCALE};

/// Number of fixed training triplets used for the per-epoch diagnostic.
pub const PROBE_SIZE: usize = 1000;

const SAMPLING_STREAM: u64 = 1;
const PROBE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub k: usize,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            lambda: 0.01,
            k: 20,
            epochs: 50,
            seed: 0,
            init_scale: DEFAULT_INIT_SCALE,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        Ok(())
    }
}

/// A source, an event it covered and an event it did not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub source: usize,
    pub pos_event: usize,
    pub neg_event: usize,
}

/// Draws a training triplet.
///
/// The positive pair is uniform over the training interactions; the negative
/// event is uniform over events and redrawn until the source has not covered
/// it.
pub fn sample_triplet<R: Rng>(train: &InteractionDataset, rng: &mut R) -> Result<Triplet> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let it = train.interactions()[rng.random_range(0..train.num_interactions())];
    if train.source_interactions(it.source).len() >= train.num_events() {
        return Err(Error::NoNegative(it.source));
    }
    let neg_event = loop {
        let e = rng.random_range(0..train.num_events());
        if !train.covers(it.source, e) {
            break e;
        }
    };
    Ok(Triplet {
        source: it.source,
        pos_event: it.event,
        neg_event,
    })
}

/// One stochastic ascent step on a single triplet.
///
/// With `g = σ(-x̂)` and all right-hand sides taken at pre-update values:
///
/// ```text
/// p_s ← p_s + α (g (q⁺ - q⁻) - λ p_s)
/// q⁺  ← q⁺  + α (g p_s - λ q⁺)
/// q⁻  ← q⁻  + α (-g p_s - λ q⁻)
/// ```
pub fn bpr_step(model: &mut FactorModel, triplet: &Triplet, alpha: f64, lambda: f64) -> Result<()> {
    model.check_source(triplet.source)?;
    model.check_event(triplet.pos_event)?;
    model.check_event(triplet.neg_event)?;
    if triplet.pos_event == triplet.neg_event {
        return Err(Error::invalid("positive and negative events coincide"));
    }
    bpr_step_unchecked(model, triplet, alpha, lambda);
    Ok(())
}

fn bpr_step_unchecked(model: &mut FactorModel, t: &Triplet, alpha: f64, lambda: f64) {
    let g = sigmoid(-model.score_triplet_unchecked(t.source, t.pos_event, t.neg_event));
    let (p, qp, qn) = model.triplet_views_mut(t.source, t.pos_event, t.neg_event);
    for f in 0..p.len() {
        let (pf, a, b) = (p[f], qp[f], qn[f]);
        p[f] = pf + alpha * (g * (a - b) - lambda * pf);
        qp[f] = a + alpha * (g * pf - lambda * a);
        qn[f] = b + alpha * (-g * pf - lambda * b);
    }
}

/// Mean `ln σ(x̂)` and mean `σ(x̂)` over a set of triplets.
pub fn probe_stats(model: &FactorModel, triplets: &[Triplet]) -> (f64, f64) {
    if triplets.is_empty() {
        return (0.0, 0.0);
    }
    let (ll, prob) = triplets.iter().fold((0.0, 0.0), |(ll, prob), t| {
        let x = model.score_triplet_unchecked(t.source, t.pos_event, t.neg_event);
        (ll + log_sigmoid(x), prob + sigmoid(x))
    });
    let n = triplets.len() as f64;
    (ll / n, prob / n)
}

/// Per-epoch training diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub probe_log_sigmoid: f64,
    pub probe_sigmoid: f64,
    pub wall_time_secs: f64,
}

/// Owns the model for the duration of training.
pub struct Trainer<'a> {
    dataset: &'a InteractionDataset,
    config: TrainConfig,
    model: FactorModel,
    rng: ChaCha8Rng,
    probe: Vec<Triplet>,
    epoch: usize,
    started: Instant,
}

impl<'a> Trainer<'a> {
    pub fn new(dataset: &'a InteractionDataset, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(s) = (0..dataset.num_sources()).find(|&s| dataset.source_interactions(s).len() >= dataset.num_events()) {
            return Err(Error::NoNegative(s));
        }
        let model = FactorModel::init(
            dataset.num_sources(),
            dataset.num_events(),
            config.k,
            config.seed,
            config.init_scale,
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(SAMPLING_STREAM);
        let mut probe_rng = ChaCha8Rng::seed_from_u64(config.seed);
        probe_rng.set_stream(PROBE_STREAM);
        let probe = (0..PROBE_SIZE.min(dataset.num_interactions()))
            .map(|_| sample_triplet(dataset, &mut probe_rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            dataset,
            config,
            model,
            rng,
            probe,
            epoch: 0,
            started: Instant::now(),
        })
    }

    /// Runs one epoch of `|interactions|` steps.
    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        for _ in 0..self.dataset.num_interactions() {
            let t = sample_triplet(self.dataset, &mut self.rng)?;
            bpr_step_unchecked(&mut self.model, &t, self.config.alpha, self.config.lambda);
        }
        self.epoch += 1;
        let (probe_log_sigmoid, probe_sigmoid) = probe_stats(&self.model, &self.probe);
        if !probe_log_sigmoid.is_finite() {
            return Err(Error::Undefined(format!("training diverged at epoch {}", self.epoch)));
        }
        Ok(EpochStats {
            epoch: self.epoch,
            probe_log_sigmoid,
            probe_sigmoid,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }

    pub fn into_model(self) -> FactorModel {
        self.model
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FactorModel,
    pub log: Vec<EpochStats>,
}

/// Initialises a model and runs `config.epochs` epochs.
pub fn train(dataset: &InteractionDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(dataset, config, |_| {})
}

/// As [`train`], calling `on_epoch` after every epoch.
pub fn train_with(
    dataset: &InteractionDataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(dataset, config.clone())?;
    let mut log = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let stats = trainer.run_epoch()?;
        on_epoch(&stats);
        log.push(stats);
    }
    Ok(TrainOutcome {
        model: trainer.into_model(),
        log,
    })
}
