use std::collections::{BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{MentionRecord, SkipCounts, Window};
use crate::error::{Error, Result};

/// A covered (source, event) pair with its earliest mention time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interaction {
    pub source: usize,
    pub event: usize,
    pub time: DateTime<Utc>,
}

/// Provenance and filter settings carried alongside a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub min_events: usize,
    pub min_sources: usize,
    pub records_read: u64,
    pub records_outside_window: u64,
    pub duplicate_mentions: u64,
    pub filter_rounds: u64,
    pub skipped: SkipCounts,
}

/// Sparse one-class source × event matrix.
///
/// Sources and events are indexed densely in lexicographic order of their
/// names. Interactions are stored sorted by `(source, event)` with per-source
/// offsets, so the events a source covers form a sorted contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionDataset {
    sources: Vec<String>,
    events: Vec<String>,
    interactions: Vec<Interaction>,
    offsets: Vec<usize>,
    window: Window,
    pub meta: DatasetMeta,
}

impl InteractionDataset {
    /// Assembles a dataset from already-indexed parts, validating indexing and
    /// window invariants. Interactions may be given in any order.
    pub fn from_parts(
        sources: Vec<String>,
        events: Vec<String>,
        mut interactions: Vec<Interaction>,
        window: Window,
        meta: DatasetMeta,
    ) -> Result<Self> {
        if !is_strictly_sorted(&sources) {
            return Err(Error::invalid("source names must be unique and sorted"));
        }
        if !is_strictly_sorted(&events) {
            return Err(Error::invalid("event ids must be unique and sorted"));
        }
        interactions.sort_unstable_by_key(|it| (it.source, it.event));
        for pair in interactions.windows(2) {
            if (pair[0].source, pair[0].event) == (pair[1].source, pair[1].event) {
                return Err(Error::invalid(format!(
                    "duplicate interaction ({}, {})",
                    pair[0].source, pair[0].event
                )));
            }
        }
        for it in &interactions {
            if it.source >= sources.len() {
                return Err(Error::IndexOutOfRange {
                    kind: "source",
                    index: it.source,
                    len: sources.len(),
                });
            }
            if it.event >= events.len() {
                return Err(Error::IndexOutOfRange {
                    kind: "event",
                    index: it.event,
                    len: events.len(),
                });
            }
            if !window.contains(it.time) {
                return Err(Error::invalid(format!(
                    "interaction ({}, {}) at {} lies outside the window",
                    it.source, it.event, it.time
                )));
            }
        }
        let mut offsets = vec![0usize; sources.len() + 1];
        for it in &interactions {
            offsets[it.source + 1] += 1;
        }
        for s in 0..sources.len() {
            offsets[s + 1] += offsets[s];
        }
        Ok(Self {
            sources,
            events,
            interactions,
            offsets,
            window,
            meta,
        })
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn num_interactions(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn source_name(&self, source: usize) -> &str {
        &self.sources[source]
    }

    pub fn event_id(&self, event: usize) -> &str {
        &self.events[event]
    }

    pub fn source_index(&self, name: &str) -> Option<usize> {
        self.sources.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    /// All interactions, sorted by `(source, event)`.
    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    /// Interactions of one source, sorted by event index.
    pub fn source_interactions(&self, source: usize) -> &[Interaction] {
        &self.interactions[self.offsets[source]..self.offsets[source + 1]]
    }

    /// Sorted event indices covered by `source`.
    pub fn covered_events(&self, source: usize) -> Vec<usize> {
        self.source_interactions(source).iter().map(|it| it.event).collect()
    }

    pub fn covers(&self, source: usize, event: usize) -> bool {
        self.source_interactions(source)
            .binary_search_by_key(&event, |it| it.event)
            .is_ok()
    }

    /// Number of distinct events each source covers.
    pub fn source_activity(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Number of distinct sources covering each event.
    pub fn event_popularity(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.events.len()];
        for it in &self.interactions {
            counts[it.event] += 1;
        }
        counts
    }

    /// Expands the dataset back into one mention record per interaction.
    pub fn to_records(&self) -> Vec<MentionRecord> {
        self.interactions
            .iter()
            .map(|it| MentionRecord {
                event_id: self.events[it.event].clone(),
                source_name: self.sources[it.source].clone(),
                mention_time: it.time,
            })
            .collect()
    }

    /// Copy of this dataset with a subset of interactions removed; index tables
    /// are kept unchanged so indices stay comparable.
    pub(crate) fn without(&self, removed: &BTreeSet<(usize, usize)>) -> Self {
        let interactions = self
            .interactions
            .iter()
            .filter(|it| !removed.contains(&(it.source, it.event)))
            .copied()
            .collect();
        Self::from_parts(
            self.sources.clone(),
            self.events.clone(),
            interactions,
            self.window,
            self.meta.clone(),
        )
        .expect("subset of a valid dataset is valid")
    }
}

fn is_strictly_sorted(names: &[String]) -> bool {
    names.windows(2).all(|w| w[0] < w[1])
}

/// Builds the filtered interaction dataset from raw mentions.
///
/// Records outside `window` are dropped and repeated (source, event) mentions
/// collapse to the earliest one. The low-count filter is applied until no
/// source covers fewer than `min_events` events and no event is covered by
/// fewer than `min_sources` sources.
pub fn build_dataset(
    records: &[MentionRecord],
    window: Window,
    min_events: usize,
    min_sources: usize,
) -> Result<InteractionDataset> {
    if min_events == 0 || min_sources == 0 {
        return Err(Error::invalid("min_events and min_sources must be at least 1"));
    }
    let mut meta = DatasetMeta {
        min_events,
        min_sources,
        records_read: records.len() as u64,
        ..DatasetMeta::default()
    };

    let mut earliest: HashMap<(&str, &str), DateTime<Utc>> = HashMap::new();
    for rec in records {
        if !window.contains(rec.mention_time) {
            meta.records_outside_window += 1;
            continue;
        }
        earliest
            .entry((rec.source_name.as_str(), rec.event_id.as_str()))
            .and_modify(|t| {
                meta.duplicate_mentions += 1;
                if rec.mention_time < *t {
                    *t = rec.mention_time;
                }
            })
            .or_insert(rec.mention_time);
    }

    let mut pairs: Vec<((&str, &str), DateTime<Utc>)> = earliest.into_iter().collect();
    pairs.sort_unstable();

    loop {
        meta.filter_rounds += 1;
        let mut per_source: HashMap<&str, usize> = HashMap::new();
        let mut per_event: HashMap<&str, usize> = HashMap::new();
        for ((s, e), _) in &pairs {
            *per_source.entry(s).or_default() += 1;
            *per_event.entry(e).or_default() += 1;
        }
        let before = pairs.len();
        pairs.retain(|((s, e), _)| per_source[s] >= min_events && per_event[e] >= min_sources);
        if pairs.len() == before {
            break;
        }
    }

    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let sources: Vec<String> = pairs
        .iter()
        .map(|((s, _), _)| *s)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let events: Vec<String> = pairs
        .iter()
        .map(|((_, e), _)| *e)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let source_idx: HashMap<&str, usize> =
        sources.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let event_idx: HashMap<&str, usize> =
        events.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let interactions = pairs
        .iter()
        .map(|((s, e), t)| Interaction {
            source: source_idx[s],
            event: event_idx[e],
            time: *t,
        })
        .collect();

    InteractionDataset::from_parts(sources, events, interactions, window, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2016, 10, 1, 0, 0, 0).unwrap()
    }

    fn week() -> Window {
        Window::new(t0(), t0() + Duration::days(7)).unwrap()
    }

    fn rec(s: &str, e: &str, hours: i64) -> MentionRecord {
        MentionRecord {
            event_id: e.to_owned(),
            source_name: s.to_owned(),
            mention_time: t0() + Duration::hours(hours),
        }
    }

    #[test]
    fn no_filtering_keeps_everything() {
        let recs = vec![rec("a", "e1", 1), rec("b", "e1", 2), rec("a", "e2", 3)];
        let ds = build_dataset(&recs, week(), 1, 1).unwrap();
        assert_eq!(ds.num_interactions(), 3);
        assert_eq!(ds.sources(), ["a", "b"]);
        assert_eq!(ds.events(), ["e1", "e2"]);
    }

    #[test]
    fn duplicates_collapse_to_earliest() {
        let recs = vec![rec("a", "e1", 5), rec("a", "e1", 2), rec("a", "e1", 9)];
        let ds = build_dataset(&recs, week(), 1, 1).unwrap();
        assert_eq!(ds.num_interactions(), 1);
        assert_eq!(ds.interactions()[0].time, t0() + Duration::hours(2));
        assert_eq!(ds.meta.duplicate_mentions, 2);
    }

    #[test]
    fn records_outside_window_dropped() {
        let recs = vec![rec("a", "e1", -1), rec("a", "e2", 1), rec("a", "e3", 24 * 7)];
        let ds = build_dataset(&recs, week(), 1, 1).unwrap();
        assert_eq!(ds.num_interactions(), 1);
        assert_eq!(ds.meta.records_outside_window, 2);
    }

    #[test]
    fn source_with_four_events_removed() {
        // five sources cover e0..e4; "thin" covers only four of them
        let mut recs = Vec::new();
        for s in 0..5 {
            for e in 0..5 {
                recs.push(rec(&format!("s{s}"), &format!("e{e}"), 1));
            }
        }
        for e in 0..4 {
            recs.push(rec("thin", &format!("e{e}"), 1));
        }
        let ds = build_dataset(&recs, week(), 5, 5).unwrap();
        assert!(ds.source_index("thin").is_none());
        assert_eq!(ds.num_sources(), 5);
    }

    #[test]
    fn chain_removal_reaches_fixpoint() {
        // core: 5 sources × 5 events fully connected. Event "x" is covered by
        // four core sources plus "weak", which covers "x" and three core events.
        let mut recs = Vec::new();
        for s in 0..5 {
            for e in 0..5 {
                recs.push(rec(&format!("s{s}"), &format!("e{e}"), 1));
            }
        }
        for s in 0..4 {
            recs.push(rec(&format!("s{s}"), "x", 2));
        }
        recs.push(rec("weak", "x", 2));
        for e in 0..3 {
            recs.push(rec("weak", &format!("e{e}"), 2));
        }
        let ds = build_dataset(&recs, week(), 5, 5).unwrap();
        assert!(ds.source_index("weak").is_none());
        assert!(!ds.events().iter().any(|e| e == "x"));
        assert_eq!(ds.num_interactions(), 25);
        assert!(ds.meta.filter_rounds >= 3);
    }

    #[test]
    fn everything_filtered_is_error() {
        let recs = vec![rec("a", "e1", 1)];
        assert!(matches!(build_dataset(&recs, week(), 5, 5), Err(Error::EmptyDataset)));
    }

    #[test]
    fn zero_threshold_rejected() {
        let recs = vec![rec("a", "e1", 1)];
        assert!(build_dataset(&recs, week(), 0, 1).is_err());
    }

    #[test]
    fn covers_and_activity() {
        let recs = vec![rec("a", "e1", 1), rec("b", "e1", 2), rec("a", "e2", 3)];
        let ds = build_dataset(&recs, week(), 1, 1).unwrap();
        assert!(ds.covers(0, 1));
        assert!(!ds.covers(1, 1));
        assert_eq!(ds.source_activity(), vec![2, 1]);
        assert_eq!(ds.event_popularity(), vec![2, 1]);
        assert_eq!(ds.covered_events(0), vec![0, 1]);
    }
}
