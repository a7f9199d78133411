//! Leave-one-out AUC over frozen evaluation triplets.

use serde::{Deserialize, Serialize};

use crate::baselines::Scorer;
use crate::error::{Error, Result};
use crate::training::Triplet;

/// At most one (source, held-out positive, sampled negative) per source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSet {
    pub triplets: Vec<Triplet>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub auc: f64,
    pub triplets: usize,
    pub wins: usize,
    pub ties: usize,
}

/// Fraction of triplets where the positive outscores the negative, with ties
/// credited one half. Credits are tallied as integers, so the result does not
/// depend on summation order.
pub fn auc<S: Scorer + ?Sized>(scorer: &S, eval_set: &EvalSet) -> Result<AucReport> {
    if eval_set.triplets.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let (mut wins, mut ties) = (0usize, 0usize);
    for t in &eval_set.triplets {
        let pos = scorer.score(t.source, t.pos_event);
        let neg = scorer.score(t.source, t.neg_event);
        if pos > neg {
            wins += 1;
        } else if pos == neg {
            ties += 1;
        }
    }
    let n = eval_set.triplets.len();
    Ok(AucReport {
        auc: (2 * wins + ties) as f64 / (2 * n) as f64,
        triplets: n,
        wins,
        ties,
    })
}
