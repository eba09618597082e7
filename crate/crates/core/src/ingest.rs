//! Parsing, validation and normalization of raw alert-interval records.
//!
//! The input is a CSV with header `region,start,end` and ISO-8601
//! minute-precision timestamps; an empty `end` marks an alert still ongoing
//! at export time. Normalization clips every interval to the study window,
//! merges overlapping or touching intervals of the same region and produces
//! a canonical, sorted event list plus a region registry.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamp layout used by all text interfaces, e.g. `2022-03-25T00:10`.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

/// Index of a region in a [`RegionRegistry`]. Stable within one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub usize);

/// Minutes elapsed since the study-window origin (a naive local clock,
/// no timezone conversion).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MinuteStamp(pub u32);

impl MinuteStamp {
    pub fn minutes(self) -> u32 {
        self.0
    }
}

/// Half-open study window `[origin, origin + minutes)` at 1-minute granularity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyWindow {
    origin: NaiveDateTime,
    minutes: u32,
}

impl StudyWindow {
    pub fn new(start: NaiveDateTime, end: NaiveDateTime) -> Result<Self> {
        if start >= end {
            return Err(Error::validation(format!(
                "study window start {start} is not before end {end}"
            )));
        }
        let minutes = (end - start).num_minutes();
        let minutes = u32::try_from(minutes)
            .map_err(|_| Error::validation(format!("study window of {minutes} minutes is too long")))?;
        Ok(StudyWindow { origin: start, minutes })
    }

    pub fn origin(&self) -> NaiveDateTime {
        self.origin
    }

    pub fn len_minutes(&self) -> u32 {
        self.minutes
    }

    pub fn start(&self) -> MinuteStamp {
        MinuteStamp(0)
    }

    /// Exclusive end of the window.
    pub fn end(&self) -> MinuteStamp {
        MinuteStamp(self.minutes)
    }

    /// Wall-clock time of a minute stamp.
    pub fn datetime(&self, m: MinuteStamp) -> NaiveDateTime {
        self.origin + Duration::minutes(i64::from(m.0))
    }

    /// Minute stamp of a wall-clock time, if it falls inside the window.
    pub fn minute_of(&self, dt: NaiveDateTime) -> Option<MinuteStamp> {
        let offset = self.offset_minutes(dt);
        if (0..i64::from(self.minutes)).contains(&offset) {
            Some(MinuteStamp(offset as u32))
        } else {
            None
        }
    }

    /// Signed minute offset of `dt` from the window origin.
    pub fn offset_minutes(&self, dt: NaiveDateTime) -> i64 {
        (dt - self.origin).num_minutes()
    }

    /// Calendar-day spans covered by the window, in order. Each span is a
    /// half-open minute range; the first and last may be shorter than a full
    /// day when the window does not start or end at midnight.
    pub fn day_spans(&self) -> Vec<DaySpan> {
        let mut spans = Vec::new();
        let mut start = 0u32;
        while start < self.minutes {
            let date = self.datetime(MinuteStamp(start)).date();
            let next_midnight = date.succ_opt().expect("date overflow").and_hms_opt(0, 0, 0).unwrap();
            let end = self
                .offset_minutes(next_midnight)
                .min(i64::from(self.minutes)) as u32;
            spans.push(DaySpan { start: MinuteStamp(start), end: MinuteStamp(end), date });
            start = end;
        }
        spans
    }
}

impl Default for StudyWindow {
    /// The default study window, 2022-03-25T00:00 to 2024-11-06T00:00.
    fn default() -> Self {
        let start = NaiveDate::from_ymd_opt(2022, 3, 25).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let end = NaiveDate::from_ymd_opt(2024, 11, 6).unwrap().and_hms_opt(0, 0, 0).unwrap();
        StudyWindow::new(start, end).unwrap()
    }
}

/// One calendar day inside a study window: minutes `[start, end)` fall on `date`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DaySpan {
    pub start: MinuteStamp,
    pub end: MinuteStamp,
    pub date: NaiveDate,
}

/// Ordered, deduplicated set of region names. Ordering is lexicographic by
/// name, so it is independent of input row order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionRegistry {
    names: Vec<String>,
    partial: Vec<bool>,
}

impl RegionRegistry {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: RegionId) -> &str {
        &self.names[id.0]
    }

    pub fn id_of(&self, name: &str) -> Option<RegionId> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok().map(RegionId)
    }

    pub fn ids(&self) -> impl Iterator<Item = RegionId> {
        (0..self.names.len()).map(RegionId)
    }

    /// Whether the region's events cover only a short part of the study
    /// window (set by [`normalize_events`]; informational only).
    pub fn is_partial(&self, id: RegionId) -> bool {
        self.partial[id.0]
    }

    pub fn check(&self, id: RegionId) -> Result<RegionId> {
        if id.0 < self.names.len() {
            Ok(id)
        } else {
            Err(Error::InvalidRegion { index: id.0, n_regions: self.names.len() })
        }
    }
}

/// One parsed CSV row, before validation against a study window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEvent {
    pub region: String,
    pub start: NaiveDateTime,
    /// Absent for alerts still ongoing at dataset export time.
    pub end: Option<NaiveDateTime>,
    /// 1-based source line, 0 when the record was built programmatically.
    pub line: u64,
}

/// One normalized alert interval: half-open `[start, end)` in window minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub region: RegionId,
    pub start: MinuteStamp,
    pub end: MinuteStamp,
}

impl AlertEvent {
    pub fn duration_minutes(&self) -> u32 {
        self.end.0 - self.start.0
    }
}

fn parse_timestamp(field: &str, line: u64) -> Result<NaiveDateTime> {
    NaiveDateTime::parse_from_str(field, TIMESTAMP_FORMAT).map_err(|_| Error::Parse {
        line,
        msg: format!("malformed timestamp `{field}` (expected e.g. 2022-03-25T00:10)"),
    })
}

/// Parse alert records from CSV with header `region,start,end`.
///
/// Timestamps are ISO-8601 at minute precision; an empty `end` field marks
/// an ongoing alert. Records are returned in file order.
pub fn parse_events<R: Read>(reader: R) -> Result<Vec<RawEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.byte_headers().map_err(csv_error)?.clone();
    let expected: [&[u8]; 3] = [b"region", b"start", b"end"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(got, want)| got != want) {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "unknown column set {:?} (expected region,start,end)",
                headers.iter().map(|h| String::from_utf8_lossy(h).into_owned()).collect::<Vec<_>>()
            ),
        });
    }

    let mut events = Vec::new();
    for record in rdr.byte_records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let mut fields = [""; 3];
        for (i, slot) in fields.iter_mut().enumerate() {
            *slot = std::str::from_utf8(&record[i])
                .map_err(|_| Error::Parse { line, msg: format!("column {} is not valid UTF-8", i + 1) })?;
        }
        let [region, start, end] = fields;
        if region.is_empty() {
            return Err(Error::Parse { line, msg: "empty region name".into() });
        }
        let start = parse_timestamp(start, line)?;
        let end = if end.is_empty() { None } else { Some(parse_timestamp(end, line)?) };
        events.push(RawEvent { region: region.to_owned(), start, end, line });
    }
    Ok(events)
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    Error::Parse { line, msg: err.to_string() }
}

/// Build a registry from raw region names: deduplicated and sorted.
pub fn build_registry<S: AsRef<str>>(names: &[S]) -> Result<RegionRegistry> {
    if names.is_empty() {
        return Err(Error::validation("cannot build a region registry from no names"));
    }
    let mut sorted: Vec<String> = names.iter().map(|n| n.as_ref().to_owned()).collect();
    sorted.sort();
    sorted.dedup();
    let partial = vec![false; sorted.len()];
    Ok(RegionRegistry { names: sorted, partial })
}

/// Clip records to the window, resolve ongoing alerts, merge overlapping or
/// touching intervals per region, and build the registry of surviving regions.
///
/// Ongoing alerts (absent `end`) are clipped to the window end. Zero-length
/// intervals and intervals entirely outside the window are dropped. The
/// returned events are sorted by `(region, start)` and pairwise disjoint
/// within each region.
pub fn normalize_events(records: &[RawEvent], window: &StudyWindow) -> Result<(RegionRegistry, Vec<AlertEvent>)> {
    let window_len = i64::from(window.len_minutes());
    let mut by_region: BTreeMap<&str, Vec<(u32, u32)>> = BTreeMap::new();

    for rec in records {
        if let Some(end) = rec.end {
            if end < rec.start {
                return Err(Error::validation(format!(
                    "event for `{}` at line {}: end {} precedes start {}",
                    rec.region, rec.line, end, rec.start
                )));
            }
        }
        let start = window.offset_minutes(rec.start).max(0);
        let end = rec.end.map_or(window_len, |e| window.offset_minutes(e)).min(window_len);
        if start >= end {
            continue; // outside the window, or zero length after clipping
        }
        by_region.entry(rec.region.as_str()).or_default().push((start as u32, end as u32));
    }

    if by_region.is_empty() {
        return Err(Error::validation("no events remain inside the study window"));
    }

    let names: Vec<&str> = by_region.keys().copied().collect();
    let mut registry = build_registry(&names)?;
    let mut events = Vec::new();
    for (region_idx, intervals) in by_region.values_mut().enumerate() {
        intervals.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(intervals.len());
        for &(start, end) in intervals.iter() {
            match merged.last_mut() {
                // touching intervals merge: a zero-minute gap is not a new alert
                Some(last) if start <= last.1 => last.1 = last.1.max(end),
                _ => merged.push((start, end)),
            }
        }
        let span = merged.last().unwrap().1 - merged.first().unwrap().0;
        registry.partial[region_idx] = u64::from(span) * 2 < u64::from(window.len_minutes());
        events.extend(merged.into_iter().map(|(start, end)| AlertEvent {
            region: RegionId(region_idx),
            start: MinuteStamp(start),
            end: MinuteStamp(end),
        }));
    }
    Ok((registry, events))
}

#[derive(Serialize)]
struct EventsExport<'a> {
    regions: &'a [String],
    events: Vec<[u32; 3]>,
}

/// Serialize a normalized event list as `{"regions":[...],"events":[[region_idx,start,end],...]}`.
pub fn events_to_json(registry: &RegionRegistry, events: &[AlertEvent]) -> String {
    let export = EventsExport {
        regions: registry.names(),
        events: events.iter().map(|e| [e.region.0 as u32, e.start.0, e.end.0]).collect(),
    };
    serde_json::to_string(&export).expect("event export is serializable")
}
