//! Line-oriented reader for mention tables.
//!
//! The GDELT v2 mentions table is tab separated with the event id in column 0,
//! the mention time in column 2 and the source domain in column 4. The simple
//! layout carries just those three fields in the order
//! `event_id<TAB>source_name<TAB>timestamp`.

use std::io::BufRead;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One (event, source, time) mention.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MentionRecord {
    pub event_id: String,
    pub source_name: String,
    pub mention_time: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeFormat {
    /// `yyyyMMddHHmmss`, as used by GDELT.
    Compact,
    Rfc3339,
    /// Compact when the field is 14 digits, RFC 3339 otherwise.
    Auto,
}

impl TimeFormat {
    pub fn parse(&self, raw: &str) -> Option<DateTime<Utc>> {
        match self {
            TimeFormat::Compact => parse_compact(raw),
            TimeFormat::Rfc3339 => DateTime::parse_from_rfc3339(raw)
                .ok()
                .map(|t| t.with_timezone(&Utc)),
            TimeFormat::Auto => {
                if raw.len() == 14 && raw.bytes().all(|b| b.is_ascii_digit()) {
                    parse_compact(raw)
                } else {
                    TimeFormat::Rfc3339.parse(raw)
                }
            }
        }
    }
}

fn parse_compact(raw: &str) -> Option<DateTime<Utc>> {
    if raw.len() != 14 {
        return None;
    }
    NaiveDateTime::parse_from_str(raw, "%Y%m%d%H%M%S")
        .ok()
        .map(|t| t.and_utc())
}

/// Column positions of the three fields a mention needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatDescriptor {
    pub event_col: usize,
    pub source_col: usize,
    pub time_col: usize,
    pub time_format: TimeFormat,
}

impl FormatDescriptor {
    pub const fn gdelt() -> Self {
        Self {
            event_col: 0,
            source_col: 4,
            time_col: 2,
            time_format: TimeFormat::Compact,
        }
    }

    pub const fn simple() -> Self {
        Self {
            event_col: 0,
            source_col: 1,
            time_col: 2,
            time_format: TimeFormat::Auto,
        }
    }

    fn min_fields(&self) -> usize {
        self.event_col.max(self.source_col).max(self.time_col) + 1
    }
}

impl Default for FormatDescriptor {
    fn default() -> Self {
        Self::gdelt()
    }
}

impl FromStr for FormatDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gdelt" => Ok(Self::gdelt()),
            "simple" => Ok(Self::simple()),
            other => Err(Error::invalid(format!(
                "unknown input format {other:?} (expected gdelt or simple)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Lenient,
    Strict,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub empty_lines: u64,
    pub malformed_lines: u64,
    pub bad_timestamps: u64,
}

impl SkipCounts {
    pub fn total(&self) -> u64 {
        self.empty_lines + self.malformed_lines + self.bad_timestamps
    }

    pub fn merge(&mut self, other: &SkipCounts) {
        self.empty_lines += other.empty_lines;
        self.malformed_lines += other.malformed_lines;
        self.bad_timestamps += other.bad_timestamps;
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<MentionRecord>,
    pub skipped: SkipCounts,
}

enum LineError {
    Malformed(String),
    Timestamp(String),
}

fn parse_line(line: &str, fmt: &FormatDescriptor) -> std::result::Result<MentionRecord, LineError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < fmt.min_fields() {
        return Err(LineError::Malformed(format!(
            "expected at least {} fields, found {}",
            fmt.min_fields(),
            fields.len()
        )));
    }
    let event_id = fields[fmt.event_col].trim();
    let source_name = fields[fmt.source_col].trim();
    if event_id.is_empty() {
        return Err(LineError::Malformed("empty event id".into()));
    }
    if source_name.is_empty() {
        return Err(LineError::Malformed("empty source name".into()));
    }
    let raw_time = fields[fmt.time_col].trim();
    let mention_time = fmt
        .time_format
        .parse(raw_time)
        .ok_or_else(|| LineError::Timestamp(format!("unparseable timestamp {raw_time:?}")))?;
    Ok(MentionRecord {
        event_id: event_id.to_owned(),
        source_name: source_name.to_owned(),
        mention_time,
    })
}

/// Reads mention records from a tab-separated stream, in file order.
///
/// Empty lines are always skipped and counted. Malformed lines and bad
/// timestamps are counted and skipped in lenient mode, and abort the parse in
/// strict mode.
pub fn parse_mentions<R: BufRead>(
    mut reader: R,
    fmt: &FormatDescriptor,
    mode: ParseMode,
) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    let mut buf = Vec::new();
    let mut lineno = 0usize;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io("<input>", e))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        if buf.iter().all(|b| b.is_ascii_whitespace()) {
            out.skipped.empty_lines += 1;
            continue;
        }
        let result = match std::str::from_utf8(&buf) {
            Ok(line) => parse_line(line, fmt),
            Err(_) => Err(LineError::Malformed("invalid UTF-8".into())),
        };
        match result {
            Ok(rec) => out.records.push(rec),
            Err(err) => {
                let reason = match err {
                    LineError::Malformed(r) => {
                        out.skipped.malformed_lines += 1;
                        r
                    }
                    LineError::Timestamp(r) => {
                        out.skipped.bad_timestamps += 1;
                        r
                    }
                };
                if mode == ParseMode::Strict {
                    return Err(Error::MalformedLine {
                        line: lineno,
                        reason,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn gdelt_line(event: &str, time: &str, source: &str) -> String {
        format!("{event}\t20161001000000\t{time}\t1\t{source}\thttp://{source}/a\t1\t0\t0\t0\t0\t100\t0\t\t0.0")
    }

    #[test]
    fn gdelt_default_columns() {
        let line = gdelt_line("912345678", "20161001120000", "example.com");
        let out = parse_mentions(line.as_bytes(), &FormatDescriptor::gdelt(), ParseMode::Strict).unwrap();
        assert_eq!(out.records.len(), 1);
        let rec = &out.records[0];
        assert_eq!(rec.event_id, "912345678");
        assert_eq!(rec.source_name, "example.com");
        assert_eq!(rec.mention_time, Utc.with_ymd_and_hms(2016, 10, 1, 12, 0, 0).unwrap());
    }

    #[test]
    fn empty_line_is_counted() {
        let input = format!("\n{}\n\n", gdelt_line("1", "20161001120000", "a.com"));
        let out = parse_mentions(input.as_bytes(), &FormatDescriptor::gdelt(), ParseMode::Strict).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.skipped.empty_lines, 2);
    }

    #[test]
    fn short_line_lenient_vs_strict() {
        let input = "1\t2\n";
        let out = parse_mentions(input.as_bytes(), &FormatDescriptor::gdelt(), ParseMode::Lenient).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.skipped.malformed_lines, 1);

        let err = parse_mentions(input.as_bytes(), &FormatDescriptor::gdelt(), ParseMode::Strict).unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn bad_timestamp_policy() {
        let input = "e1\ta.com\t2016-13-45\ne2\tb.com\t20161001120000\n";
        let out = parse_mentions(input.as_bytes(), &FormatDescriptor::simple(), ParseMode::Lenient).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.skipped.bad_timestamps, 1);
        assert!(parse_mentions(input.as_bytes(), &FormatDescriptor::simple(), ParseMode::Strict).is_err());
    }

    #[test]
    fn simple_layout_accepts_rfc3339() {
        let input = "e1\ta.com\t2016-10-01T12:00:00Z\r\n";
        let out = parse_mentions(input.as_bytes(), &FormatDescriptor::simple(), ParseMode::Strict).unwrap();
        assert_eq!(out.records[0].mention_time, Utc.with_ymd_and_hms(2016, 10, 1, 12, 0, 0).unwrap());
    }

    #[test]
    fn empty_identifiers_are_malformed() {
        let input = "\ta.com\t20161001120000\ne1\t \t20161001120000\n";
        let out = parse_mentions(input.as_bytes(), &FormatDescriptor::simple(), ParseMode::Lenient).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.skipped.malformed_lines, 2);
    }

    #[test]
    fn invalid_utf8_is_malformed() {
        let input: &[u8] = b"e1\t\xff\xfe\t20161001120000\n";
        let out = parse_mentions(input, &FormatDescriptor::simple(), ParseMode::Lenient).unwrap();
        assert_eq!(out.skipped.malformed_lines, 1);
    }

    #[test]
    fn compact_time_rejects_wrong_length() {
        assert!(TimeFormat::Compact.parse("2016100112000").is_none());
        assert!(TimeFormat::Compact.parse("20161001120000").is_some());
    }
}
