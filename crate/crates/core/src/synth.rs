//! Synthetic mention tables with known structure.
//!
//! `planted_blocks` splits sources and events into groups; a source covers
//! events of its own group with probability `p_in` and any other event with
//! probability `p_out`. Groups are equal-sized, so every event has the same
//! expected coverage and event popularity carries no signal.
//!
//! `skewed_landscape` mimics a press dominated by a handful of very active,
//! near-identical outlets: `hot_sources` share one pool of heavily covered
//! events, while the remaining sources each follow their own niche.

use std::io::Write;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{MentionRecord, Window};

fn default_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2016, 10, 1, 0, 0, 0).unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub sources: usize,
    pub events: usize,
    pub source_blocks: usize,
    pub event_blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
    pub start: DateTime<Utc>,
    pub days: u32,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            sources: 200,
            events: 2000,
            source_blocks: 4,
            event_blocks: 4,
            p_in: 0.3,
            p_out: 0.01,
            seed: 0,
            start: default_start(),
            days: 7,
        }
    }
}

impl PlantedConfig {
    pub fn window(&self) -> Window {
        Window {
            start: self.start,
            end: self.start + Duration::days(self.days as i64),
        }
    }

    /// Group of a source; source group g prefers event group `g % event_blocks`.
    pub fn source_block(&self, source: usize) -> usize {
        source * self.source_blocks / self.sources
    }

    pub fn event_block(&self, event: usize) -> usize {
        event * self.event_blocks / self.events
    }
}

pub fn source_name(index: usize) -> String {
    format!("source{index:05}.example")
}

pub fn event_id(index: usize) -> String {
    format!("{}", 700_000_000 + index)
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn random_time<R: Rng>(rng: &mut R, start: DateTime<Utc>, days: u32) -> DateTime<Utc> {
    start + Duration::seconds(rng.random_range(0..days as i64 * 86_400))
}

pub fn planted_blocks(cfg: &PlantedConfig) -> Result<Vec<MentionRecord>> {
    if cfg.sources == 0 || cfg.events == 0 || cfg.source_blocks == 0 || cfg.event_blocks == 0 {
        return Err(Error::invalid("sizes and block counts must be positive"));
    }
    if cfg.source_blocks > cfg.sources || cfg.event_blocks > cfg.events {
        return Err(Error::invalid("more blocks than members"));
    }
    if cfg.days == 0 {
        return Err(Error::invalid("days must be positive"));
    }
    check_prob("p_in", cfg.p_in)?;
    check_prob("p_out", cfg.p_out)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for s in 0..cfg.sources {
        let home = cfg.source_block(s) % cfg.event_blocks;
        for e in 0..cfg.events {
            let p = if cfg.event_block(e) == home { cfg.p_in } else { cfg.p_out };
            if rng.random_bool(p) {
                out.push(MentionRecord {
                    event_id: event_id(e),
                    source_name: source_name(s),
                    mention_time: random_time(&mut rng, cfg.start, cfg.days),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewedConfig {
    pub hot_sources: usize,
    pub niche_sources: usize,
    /// Events covered by nearly every hot source.
    pub hot_events: usize,
    pub niches: usize,
    pub events_per_niche: usize,
    /// Probability that a hot source covers a given hot event.
    pub p_hot: f64,
    /// Probability that a niche source covers an event of its niche.
    pub p_niche: f64,
    /// Probability that a niche source covers a given hot event.
    pub p_cross: f64,
    pub seed: u64,
    pub start: DateTime<Utc>,
    pub days: u32,
}

impl Default for SkewedConfig {
    fn default() -> Self {
        Self {
            hot_sources: 10,
            niche_sources: 90,
            hot_events: 300,
            niches: 9,
            events_per_niche: 150,
            p_hot: 0.9,
            p_niche: 0.15,
            p_cross: 0.02,
            seed: 0,
            start: default_start(),
            days: 7,
        }
    }
}

impl SkewedConfig {
    pub fn window(&self) -> Window {
        Window {
            start: self.start,
            end: self.start + Duration::days(self.days as i64),
        }
    }
}

/// Hot sources come first in index order, so their names sort first.
pub fn skewed_landscape(cfg: &SkewedConfig) -> Result<Vec<MentionRecord>> {
    if cfg.niches == 0 || cfg.days == 0 {
        return Err(Error::invalid("niches and days must be positive"));
    }
    check_prob("p_hot", cfg.p_hot)?;
    check_prob("p_niche", cfg.p_niche)?;
    check_prob("p_cross", cfg.p_cross)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    let mut push = |rng: &mut ChaCha8Rng, s: usize, e: usize| {
        out.push(MentionRecord {
            event_id: event_id(e),
            source_name: source_name(s),
            mention_time: random_time(rng, cfg.start, cfg.days),
        })
    };
    for s in 0..cfg.hot_sources {
        for e in 0..cfg.hot_events {
            if rng.random_bool(cfg.p_hot) {
                push(&mut rng, s, e);
            }
        }
    }
    for n in 0..cfg.niche_sources {
        let s = cfg.hot_sources + n;
        let niche = n % cfg.niches;
        let first = cfg.hot_events + niche * cfg.events_per_niche;
        for e in first..first + cfg.events_per_niche {
            if rng.random_bool(cfg.p_niche) {
                push(&mut rng, s, e);
            }
        }
        for e in 0..cfg.hot_events {
            if rng.random_bool(cfg.p_cross) {
                push(&mut rng, s, e);
            }
        }
    }
    Ok(out)
}

/// Writes records in the simple three-column layout with compact timestamps.
pub fn write_simple<W: Write>(mut w: W, records: &[MentionRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}",
            r.event_id,
            r.source_name,
            r.mention_time.format("%Y%m%d%H%M%S")
        )?;
    }
    w.flush()
}
