//! Mention ingestion, the filtered one-class interaction dataset and
//! leave-one-out splitting.

mod dataset;
mod parse;
mod split;
mod store;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dataset::{build_dataset, DatasetMeta, Interaction, InteractionDataset};
pub use parse::{
    parse_mentions, FormatDescriptor, MentionRecord, ParseMode, ParseOutcome, SkipCounts, TimeFormat,
};
pub use split::{split_leave_one_out, SplitPair, SplitReport};
pub use store::{read_dataset, read_split, write_dataset, write_split};

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Window {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if start >= end {
            return Err(Error::invalid(format!("empty window [{start}, {end})")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }

    pub fn covers(&self, other: &Window) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// The final 24 hours of the window, clipped to its start.
    pub fn final_day(&self) -> Window {
        let start = (self.end - Duration::hours(24)).max(self.start);
        Window { start, end: self.end }
    }
}

pub(crate) fn format_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn final_day_is_last_24h() {
        let w = Window::new(
            Utc.with_ymd_and_hms(2016, 10, 1, 0, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2016, 10, 8, 0, 0, 0).unwrap(),
        )
        .unwrap();
        let d = w.final_day();
        assert_eq!(d.start, Utc.with_ymd_and_hms(2016, 10, 7, 0, 0, 0).unwrap());
        assert!(w.covers(&d));
        assert!(!d.contains(d.end));
    }

    #[test]
    fn short_window_final_day_is_whole_window() {
        let w = Window::new(
            Utc.with_ymd_and_hms(2016, 10, 1, 0, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2016, 10, 1, 6, 0, 0).unwrap(),
        )
        .unwrap();
        assert_eq!(w.final_day(), w);
    }

    #[test]
    fn empty_window_rejected() {
        let t = Utc.with_ymd_and_hms(2016, 10, 1, 0, 0, 0).unwrap();
        assert!(Window::new(t, t).is_err());
    }
}
