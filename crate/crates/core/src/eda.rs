//! Event-level exploratory statistics: per-event durations, daily medians,
//! Tukey boxplot summaries and per-day totals.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{AlertEvent, RegionRegistry, StudyWindow};
use crate::timegrid::StatusGrid;

/// Tukey five-number summary plus whiskers and outlier count. Quartiles use
/// linear interpolation of order statistics; whiskers sit on the most
/// extreme data points within 1.5 IQR of the quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub n_outliers: usize,
}

/// One day's value in a per-region daily series. Days without events are
/// absent rather than zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DailyPoint {
    pub day: NaiveDate,
    pub value: f64,
}

/// Per-event durations in minutes, grouped by region in registry order.
pub fn event_durations(events: &[AlertEvent], registry: &RegionRegistry) -> Vec<Vec<u32>> {
    let mut durations = vec![Vec::new(); registry.len()];
    for event in events {
        durations[event.region.0].push(event.duration_minutes());
    }
    durations
}

/// Quantile by linear interpolation of order statistics over a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median of each day's event durations, per region. Events are bucketed by
/// their start date, so an alert spanning midnight counts on the day it began.
pub fn daily_median_durations(
    events: &[AlertEvent],
    registry: &RegionRegistry,
    window: &StudyWindow,
) -> Vec<Vec<DailyPoint>> {
    let mut buckets: Vec<BTreeMap<NaiveDate, Vec<f64>>> = vec![BTreeMap::new(); registry.len()];
    for event in events {
        let date = window.datetime(event.start).date();
        buckets[event.region.0].entry(date).or_default().push(f64::from(event.duration_minutes()));
    }
    buckets
        .into_iter()
        .map(|days| {
            days.into_iter()
                .map(|(day, mut durations)| {
                    durations.sort_by(f64::total_cmp);
                    DailyPoint { day, value: quantile_sorted(&durations, 0.5) }
                })
                .collect()
        })
        .collect()
}

/// Tukey boxplot statistics of a non-empty duration list.
pub fn duration_boxstats(durations: &[f64]) -> Result<BoxStats> {
    if durations.is_empty() {
        return Err(Error::validation("cannot compute boxplot statistics of an empty list"));
    }
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (low_fence, high_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let whisker_low = *sorted.iter().find(|&&v| v >= low_fence).unwrap();
    let whisker_high = *sorted.iter().rev().find(|&&v| v <= high_fence).unwrap();
    let n_outliers = sorted.iter().filter(|&&v| v < whisker_low || v > whisker_high).count();
    Ok(BoxStats {
        min: sorted[0],
        q1,
        median,
        q3,
        max: *sorted.last().unwrap(),
        whisker_low,
        whisker_high,
        n_outliers,
    })
}

/// Total alert minutes per calendar day for each region. Every day of the
/// window appears, including zero-alert days.
pub fn daily_total_minutes(grid: &StatusGrid) -> Vec<Vec<u64>> {
    let spans = grid.window().day_spans();
    grid.regions()
        .ids()
        .map(|r| {
            let col = grid.column(r);
            spans.iter().map(|s| col.count_range(s.start.0 as usize, s.end.0 as usize)).collect()
        })
        .collect()
}

/// Boxplot statistics over per-day total alert minutes, per region.
/// Zero-alert days stay in the distribution.
pub fn daily_total_stats(grid: &StatusGrid) -> Vec<BoxStats> {
    daily_total_minutes(grid)
        .into_iter()
        .map(|days| {
            let values: Vec<f64> = days.iter().map(|&v| v as f64).collect();
            duration_boxstats(&values).expect("window has at least one day")
        })
        .collect()
}
