//! Directory layout for datasets and splits.
//!
//! A dataset directory holds `sources.tsv`, `events.tsv`, `interactions.tsv`
//! and `meta.json`. A split directory holds the training dataset under
//! `train/`, the frozen evaluation triplets in `eval.tsv` and `split.json`.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{format_time, DatasetMeta, Interaction, InteractionDataset, SplitPair, SplitReport, Window};
use crate::error::{Error, Result};
use crate::eval::EvalSet;
use crate::io::{create, parse_field, read_index_table, read_json, read_lines, write_index_table, write_json};
use crate::training::Triplet;

#[derive(Serialize, Deserialize)]
struct Counts {
    sources: usize,
    events: usize,
    interactions: usize,
}

#[derive(Serialize, Deserialize)]
struct Thresholds {
    min_events: usize,
    min_sources: usize,
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    window: Window,
    thresholds: Thresholds,
    counts: Counts,
    records_read: u64,
    records_outside_window: u64,
    duplicate_mentions: u64,
    filter_rounds: u64,
    skipped: super::SkipCounts,
}

#[derive(Serialize, Deserialize)]
struct SplitFile {
    seed: u64,
    holdout: Window,
    eval_size: usize,
    report: SplitReport,
}

pub fn write_dataset(dir: &Path, ds: &InteractionDataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_index_table(&dir.join("sources.tsv"), "name", ds.sources())?;
    write_index_table(&dir.join("events.tsv"), "id", ds.events())?;

    let path = dir.join("interactions.tsv");
    let mut w = create(&path)?;
    let res = (|| {
        writeln!(w, "source_index\tevent_index\ttime")?;
        for it in ds.interactions() {
            writeln!(w, "{}\t{}\t{}", it.source, it.event, format_time(&it.time))?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(&path, e))?;

    let m = &ds.meta;
    let meta = MetaFile {
        window: ds.window(),
        thresholds: Thresholds {
            min_events: m.min_events,
            min_sources: m.min_sources,
        },
        counts: Counts {
            sources: ds.num_sources(),
            events: ds.num_events(),
            interactions: ds.num_interactions(),
        },
        records_read: m.records_read,
        records_outside_window: m.records_outside_window,
        duplicate_mentions: m.duplicate_mentions,
        filter_rounds: m.filter_rounds,
        skipped: m.skipped,
    };
    write_json(&dir.join("meta.json"), &meta)
}

pub fn read_dataset(dir: &Path) -> Result<InteractionDataset> {
    let meta: MetaFile = read_json(&dir.join("meta.json"))?;
    let sources = read_index_table(&dir.join("sources.tsv"))?;
    let events = read_index_table(&dir.join("events.tsv"))?;

    let path = dir.join("interactions.tsv");
    let mut interactions = Vec::new();
    for (i, line) in read_lines(&path)?.iter().enumerate().skip(1) {
        let mut f = line.split('\t');
        let source = parse_field(&path, i + 1, f.next())?;
        let event = parse_field(&path, i + 1, f.next())?;
        let time: DateTime<Utc> = parse_field(&path, i + 1, f.next())?;
        interactions.push(Interaction { source, event, time });
    }
    if meta.counts.interactions != interactions.len() {
        return Err(Error::format(&path, "interaction count disagrees with meta.json"));
    }
    let ds_meta = DatasetMeta {
        min_events: meta.thresholds.min_events,
        min_sources: meta.thresholds.min_sources,
        records_read: meta.records_read,
        records_outside_window: meta.records_outside_window,
        duplicate_mentions: meta.duplicate_mentions,
        filter_rounds: meta.filter_rounds,
        skipped: meta.skipped,
    };
    InteractionDataset::from_parts(sources, events, interactions, meta.window, ds_meta)
        .map_err(|e| Error::format(dir, e.to_string()))
}

pub fn write_split(dir: &Path, split: &SplitPair) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_dataset(&dir.join("train"), &split.train)?;
    write_eval_set(&dir.join("eval.tsv"), &split.eval_set)?;
    write_json(
        &dir.join("split.json"),
        &SplitFile {
            seed: split.seed,
            holdout: split.holdout,
            eval_size: split.eval_set.triplets.len(),
            report: split.report.clone(),
        },
    )
}

pub fn read_split(dir: &Path) -> Result<SplitPair> {
    let info: SplitFile = read_json(&dir.join("split.json"))?;
    let train = read_dataset(&dir.join("train"))?;
    let path = dir.join("eval.tsv");
    let mut triplets = Vec::new();
    for (i, line) in read_lines(&path)?.iter().enumerate().skip(1) {
        let mut f = line.split('\t');
        let t = Triplet {
            source: parse_field(&path, i + 1, f.next())?,
            pos_event: parse_field(&path, i + 1, f.next())?,
            neg_event: parse_field(&path, i + 1, f.next())?,
        };
        if t.source >= train.num_sources() || t.pos_event >= train.num_events() || t.neg_event >= train.num_events() {
            return Err(Error::format(&path, format!("line {}: index out of range", i + 1)));
        }
        triplets.push(t);
    }
    if triplets.len() != info.eval_size {
        return Err(Error::format(&path, "triplet count disagrees with split.json"));
    }
    Ok(SplitPair {
        train,
        eval_set: EvalSet {
            triplets,
            seed: info.seed,
        },
        seed: info.seed,
        holdout: info.holdout,
        report: info.report,
    })
}

fn write_eval_set(path: &Path, eval: &EvalSet) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| {
        writeln!(w, "source_index\tpos_event_index\tneg_event_index")?;
        for t in &eval.triplets {
            writeln!(w, "{}\t{}\t{}", t.source, t.pos_event, t.neg_event)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}
