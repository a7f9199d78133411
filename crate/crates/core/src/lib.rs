//! Latent preference embeddings for news sources.
//!
//! Sources and events are embedded in a shared K-dimensional space by
//! pairwise-ranking matrix factorization over one-class coverage data
//! (a source either covered an event or did not). The crate covers the whole
//! pipeline: mention ingestion and filtering, leave-one-out splits, BPR
//! training, AUC evaluation against popularity and kNN baselines,
//! diversity-aware source selection and coverage inequality metrics.

pub mod analysis;
pub mod baselines;
pub mod cli;
pub mod coverage_metrics;
pub mod error;
pub mod eval;
pub mod ingest;
mod io;
pub mod model;
pub mod selection;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
