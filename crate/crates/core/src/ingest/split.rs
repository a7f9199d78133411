use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{InteractionDataset, Window};
use crate::error::{Error, Result};
use crate::eval::EvalSet;
use crate::training::Triplet;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitReport {
    pub held_out: usize,
    /// Sources with no interaction in the holdout window.
    pub no_holdout_interaction: usize,
    /// Sources whose only interaction falls in the holdout window.
    pub skipped_sole_interaction: usize,
    /// Sources covering every event, for which no negative exists.
    pub skipped_no_negative: usize,
}

/// Training data and the frozen leave-one-out evaluation set derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: InteractionDataset,
    pub eval_set: EvalSet,
    pub seed: u64,
    pub holdout: Window,
    pub report: SplitReport,
}

/// Uniformly samples an event outside `covered` (sorted, deduplicated).
pub(crate) fn sample_uncovered<R: Rng>(rng: &mut R, covered: &[usize], num_events: usize) -> Option<usize> {
    let free = num_events.checked_sub(covered.len()).filter(|&n| n > 0)?;
    // r-th uncovered index: advance past every covered index <= candidate
    let mut candidate = rng.random_range(0..free);
    for &c in covered {
        if c <= candidate {
            candidate += 1;
        } else {
            break;
        }
    }
    Some(candidate)
}

/// Holds out one interaction per eligible source for evaluation.
///
/// A source is eligible when it has at least one interaction inside
/// `holdout` and at least two interactions overall. One of its holdout
/// interactions is chosen uniformly at random and paired with a uniformly
/// random event the source never covered. Sources are processed in index
/// order from a single seeded stream, so the result depends only on the
/// dataset and `seed`.
pub fn split_leave_one_out(dataset: &InteractionDataset, holdout: Window, seed: u64) -> Result<SplitPair> {
    if !dataset.window().covers(&holdout) {
        return Err(Error::invalid(format!(
            "holdout window [{}, {}) is not inside the dataset window [{}, {})",
            holdout.start,
            holdout.end,
            dataset.window().start,
            dataset.window().end
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SplitReport::default();
    let mut triplets = Vec::new();
    let mut removed = BTreeSet::new();

    for source in 0..dataset.num_sources() {
        let rows = dataset.source_interactions(source);
        let candidates: Vec<usize> = rows
            .iter()
            .filter(|it| holdout.contains(it.time))
            .map(|it| it.event)
            .collect();
        if candidates.is_empty() {
            report.no_holdout_interaction += 1;
            continue;
        }
        if rows.len() < 2 {
            report.skipped_sole_interaction += 1;
            continue;
        }
        let covered: Vec<usize> = rows.iter().map(|it| it.event).collect();
        let pos = candidates[rng.random_range(0..candidates.len())];
        let Some(neg) = sample_uncovered(&mut rng, &covered, dataset.num_events()) else {
            report.skipped_no_negative += 1;
            continue;
        };
        removed.insert((source, pos));
        triplets.push(Triplet {
            source,
            pos_event: pos,
            neg_event: neg,
        });
    }

    report.held_out = triplets.len();
    if triplets.is_empty() {
        log::warn!("no source has an interaction in the holdout window; evaluation set is empty");
    }
    if report.skipped_sole_interaction > 0 {
        log::warn!(
            "{} source(s) skipped: their only interaction is in the holdout window",
            report.skipped_sole_interaction
        );
    }

    Ok(SplitPair {
        train: dataset.without(&removed),
        eval_set: EvalSet { triplets, seed },
        seed,
        holdout,
        report,
    })
}
