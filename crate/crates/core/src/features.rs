//! Model dataset assembly: per-region cumulative alert-duration features,
//! calendar features, and the horizon-shifted binary target.

use chrono::{Datelike, Timelike};

use crate::error::{Error, Result};
use crate::ingest::{MinuteStamp, RegionId, StudyWindow};
use crate::timegrid::{BitColumn, StatusGrid};

/// Calendar-derived feature values for one minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalendarFeatures {
    /// 1..=12
    pub month: u32,
    /// 0..=6, Monday = 0
    pub day_of_week: u32,
    /// 0..=23
    pub hour: u32,
    /// Whole days since the window origin: `floor(minute / 1440)`.
    pub ndays: u32,
}

/// Minutes the current alert has been active so far, counting the current
/// minute: 0 while inactive, 1 on the first active minute, then +1 per minute
/// until the alert ends.
pub fn cumulative_duration_series(status: &BitColumn) -> Vec<u32> {
    let mut out = Vec::with_capacity(status.len());
    let mut run = 0u32;
    for active in status.iter() {
        run = if active { run + 1 } else { 0 };
        out.push(run);
    }
    out
}

/// Calendar features of a minute within the window.
pub fn calendar_features(window: &StudyWindow, m: MinuteStamp) -> Result<CalendarFeatures> {
    if m >= window.end() {
        return Err(Error::validation(format!(
            "minute {} outside the {}-minute study window",
            m.0,
            window.len_minutes()
        )));
    }
    let dt = window.datetime(m);
    Ok(CalendarFeatures {
        month: dt.month(),
        day_of_week: dt.weekday().num_days_from_monday(),
        hour: dt.hour(),
        ndays: m.0 / 1440,
    })
}

/// Status shifted `horizon` minutes into the future: `target[t] = status[t+H]`.
/// The final `H` minutes produce no label.
pub fn label_target(status: &BitColumn, horizon: u32) -> Result<Vec<u8>> {
    if horizon == 0 {
        return Err(Error::validation("horizon must be at least 1 minute"));
    }
    if horizon as usize >= status.len() {
        return Err(Error::validation(format!(
            "horizon {horizon} is not shorter than the {}-minute series",
            status.len()
        )));
    }
    Ok((0..status.len() - horizon as usize).map(|t| u8::from(status.get(t + horizon as usize))).collect())
}

/// The assembled model dataset: one row per retained minute, columns in
/// registry order (cumulative alert duration per region) followed by
/// `month`, `day_of_week`, `hour`, `ndays`, plus the binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    window: StudyWindow,
    column_names: Vec<String>,
    /// Column-major values; every column has one entry per row.
    columns: Vec<Vec<f64>>,
    target: Vec<u8>,
    row_stamps: Vec<MinuteStamp>,
}

impl FeatureMatrix {
    pub fn new(
        window: StudyWindow,
        column_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        target: Vec<u8>,
        row_stamps: Vec<MinuteStamp>,
    ) -> Result<Self> {
        if column_names.len() != columns.len() {
            return Err(Error::validation("column name count does not match column count"));
        }
        let n_rows = target.len();
        if row_stamps.len() != n_rows || columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::validation("column lengths do not match row count"));
        }
        if target.iter().any(|&t| t > 1) {
            return Err(Error::validation("target values must be 0 or 1"));
        }
        Ok(FeatureMatrix { window, column_names, columns, target, row_stamps })
    }

    pub fn window(&self) -> &StudyWindow {
        &self.window
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.columns[c]
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn row_stamps(&self) -> &[MinuteStamp] {
        &self.row_stamps
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    /// Materialize one row as a feature vector.
    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// New matrix containing the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            window: self.window.clone(),
            column_names: self.column_names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            target: rows.iter().map(|&r| self.target[r]).collect(),
            row_stamps: rows.iter().map(|&r| self.row_stamps[r]).collect(),
        }
    }

    /// Write the dataset as CSV: feature columns by name, then `target`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        header.push("target");
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for row in 0..self.n_rows() {
            record.clear();
            for col in &self.columns {
                let v = col[row];
                debug_assert_eq!(v.fract(), 0.0);
                record.push((v as i64).to_string());
            }
            record.push(self.target[row].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Build the dataset for one target region and horizon.
///
/// Rows are taken at minutes `0, stride, 2*stride, ...` up to
/// `window length - horizon - 1`; the target is the region's status
/// `horizon` minutes after the row minute.
pub fn assemble_dataset(
    grid: &StatusGrid,
    target_region: RegionId,
    horizon: u32,
    stride: u32,
) -> Result<FeatureMatrix> {
    grid.regions().check(target_region)?;
    if stride == 0 {
        return Err(Error::validation("stride must be at least 1"));
    }
    let n_minutes = grid.n_minutes();
    if horizon == 0 || horizon as usize >= n_minutes {
        return Err(Error::validation(format!(
            "cannot label a {n_minutes}-minute window at horizon {horizon}"
        )));
    }
    let rows: Vec<usize> = (0..n_minutes - horizon as usize).step_by(stride as usize).collect();
    if rows.is_empty() {
        return Err(Error::validation("no rows remain: window too small for this horizon"));
    }

    let mut column_names: Vec<String> = grid.regions().names().to_vec();
    column_names.extend(["month", "day_of_week", "hour", "ndays"].map(String::from));

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(column_names.len());
    for r in grid.regions().ids() {
        let cumulative = cumulative_duration_series(grid.column(r));
        columns.push(rows.iter().map(|&t| f64::from(cumulative[t])).collect());
    }
    let mut month = Vec::with_capacity(rows.len());
    let mut day_of_week = Vec::with_capacity(rows.len());
    let mut hour = Vec::with_capacity(rows.len());
    let mut ndays = Vec::with_capacity(rows.len());
    for &t in &rows {
        let cal = calendar_features(grid.window(), MinuteStamp(t as u32))?;
        month.push(f64::from(cal.month));
        day_of_week.push(f64::from(cal.day_of_week));
        hour.push(f64::from(cal.hour));
        ndays.push(f64::from(cal.ndays));
    }
    columns.extend([month, day_of_week, hour, ndays]);

    let full_target = label_target(grid.column(target_region), horizon)?;
    let target: Vec<u8> = rows.iter().map(|&t| full_target[t]).collect();
    let row_stamps: Vec<MinuteStamp> = rows.iter().map(|&t| MinuteStamp(t as u32)).collect();

    FeatureMatrix::new(grid.window().clone(), column_names, columns, target, row_stamps)
}
