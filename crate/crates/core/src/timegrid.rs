//! The minute-resolution binary status grid and its aggregate statistics.
//!
//! Columns are bit-packed per region so the whole default window fits in a
//! few megabytes and the per-column scans (totals, co-occurrence,
//! correlation) reduce to popcounts over 64-bit blocks.

use std::io::{Read, Write};

use chrono::DateTime;

use crate::error::{Error, Result};
use crate::ingest::{AlertEvent, MinuteStamp, RegionId, RegionRegistry, StudyWindow};

/// Dense bit vector for one region's minute series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitColumn {
    blocks: Vec<u64>,
    len: usize,
}

impl BitColumn {
    pub fn zeros(len: usize) -> Self {
        BitColumn { blocks: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut col = BitColumn::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                col.set(i);
            }
        }
        col
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.blocks[i / 64] >> (i % 64) & 1 == 1
    }

    pub(crate) fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.blocks[i / 64] |= 1 << (i % 64);
    }

    /// Set every bit in `[start, end)`.
    pub(crate) fn set_range(&mut self, start: usize, end: usize) {
        debug_assert!(start <= end && end <= self.len);
        if start == end {
            return;
        }
        let (first, last) = (start / 64, (end - 1) / 64);
        let head = !0u64 << (start % 64);
        let tail = !0u64 >> (63 - (end - 1) % 64);
        if first == last {
            self.blocks[first] |= head & tail;
        } else {
            self.blocks[first] |= head;
            for block in &mut self.blocks[first + 1..last] {
                *block = !0;
            }
            self.blocks[last] |= tail;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.blocks.iter().map(|b| u64::from(b.count_ones())).sum()
    }

    /// Popcount of the AND of two equal-length columns.
    pub fn and_count(&self, other: &BitColumn) -> u64 {
        assert_eq!(self.len, other.len);
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| u64::from((a & b).count_ones())).sum()
    }

    /// Popcount over `[start, end)`.
    pub fn count_range(&self, start: usize, end: usize) -> u64 {
        debug_assert!(start <= end && end <= self.len);
        let mut total = 0u64;
        let mut i = start;
        while i < end {
            let block = i / 64;
            let lo = i % 64;
            let hi = if block == (end - 1) / 64 { (end - 1) % 64 } else { 63 };
            let mask = (!0u64 << lo) & (!0u64 >> (63 - hi));
            total += u64::from((self.blocks[block] & mask).count_ones());
            i = (block + 1) * 64;
        }
        total
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub(crate) fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    pub(crate) fn from_blocks(blocks: Vec<u64>, len: usize) -> Self {
        BitColumn { blocks, len }
    }
}

/// Minute x region binary status matrix: cell `(m, r)` is 1 exactly when an
/// alert is active in region `r` at minute `m`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusGrid {
    window: StudyWindow,
    regions: RegionRegistry,
    columns: Vec<BitColumn>,
}

impl StatusGrid {
    pub fn window(&self) -> &StudyWindow {
        &self.window
    }

    pub fn regions(&self) -> &RegionRegistry {
        &self.regions
    }

    pub fn n_minutes(&self) -> usize {
        self.window.len_minutes() as usize
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn cell(&self, m: MinuteStamp, r: RegionId) -> bool {
        self.columns[r.0].get(m.0 as usize)
    }

    pub fn column(&self, r: RegionId) -> &BitColumn {
        &self.columns[r.0]
    }
}

/// Materialize the status grid from normalized events.
///
/// Coverage is half-open: an event `[start, end)` sets minutes
/// `start..end - 1` and leaves minute `end` clear.
pub fn rasterize(events: &[AlertEvent], registry: &RegionRegistry, window: &StudyWindow) -> Result<StatusGrid> {
    let n_minutes = window.len_minutes() as usize;
    let mut columns = vec![BitColumn::zeros(n_minutes); registry.len()];
    for event in events {
        registry.check(event.region)?;
        if event.start >= event.end || event.end > window.end() {
            return Err(Error::validation(format!(
                "normalization contract violated: event {event:?} outside window or empty"
            )));
        }
        columns[event.region.0].set_range(event.start.0 as usize, event.end.0 as usize);
    }
    Ok(StatusGrid { window: window.clone(), regions: registry.clone(), columns })
}

/// Total alert minutes per region (count of 1-cells per column).
pub fn total_alert_minutes(grid: &StatusGrid) -> Vec<u64> {
    grid.columns.iter().map(BitColumn::count_ones).collect()
}

/// Minutes during which each region's alert was active simultaneously with
/// `reference`. The entry for `reference` itself equals its total duration.
pub fn cooccurrence_minutes(grid: &StatusGrid, reference: RegionId) -> Result<Vec<u64>> {
    grid.regions.check(reference)?;
    let ref_col = grid.column(reference);
    Ok(grid.columns.iter().map(|col| col.and_count(ref_col)).collect())
}

/// Pairwise Pearson correlation of the binary columns (the phi coefficient).
/// Entries involving a constant column are NaN.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    names: Vec<String>,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn n_regions(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.names.len() + j]
    }
}

/// Correlation heatmap data: phi coefficient between every column pair.
pub fn binary_correlation_matrix(grid: &StatusGrid) -> CorrelationMatrix {
    let n_regions = grid.n_regions();
    let n = grid.n_minutes() as f64;
    let ones: Vec<f64> = total_alert_minutes(grid).iter().map(|&c| c as f64).collect();
    let mut values = vec![f64::NAN; n_regions * n_regions];
    for i in 0..n_regions {
        for j in i..n_regions {
            let both = grid.columns[i].and_count(&grid.columns[j]) as f64;
            let cov = n * both - ones[i] * ones[j];
            let var_i = ones[i] * (n - ones[i]);
            let var_j = ones[j] * (n - ones[j]);
            let phi = if var_i == 0.0 || var_j == 0.0 {
                f64::NAN
            } else {
                cov / (var_i.sqrt() * var_j.sqrt())
            };
            values[i * n_regions + j] = phi;
            values[j * n_regions + i] = phi;
        }
    }
    CorrelationMatrix { names: grid.regions.names().to_vec(), values }
}

/// Write the grid as CSV: header = region names, one `0`/`1` row per minute.
pub fn write_grid_csv<W: Write>(grid: &StatusGrid, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(grid.regions.names())?;
    let mut row: Vec<&str> = Vec::with_capacity(grid.n_regions());
    for m in 0..grid.n_minutes() {
        row.clear();
        row.extend(grid.columns.iter().map(|c| if c.get(m) { "1" } else { "0" }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

const GRID_MAGIC: &[u8; 8] = b"ALERTGRD";
const GRID_VERSION: u16 = 1;

/// Compact binary dump of a grid.
///
/// Layout (all integers little-endian):
/// `magic "ALERTGRD" | u16 version | i64 origin epoch-seconds | u32 n_minutes |
/// u32 n_regions | per region: u16 name length + UTF-8 bytes |
/// per region: ceil(n_minutes/64) u64 blocks`.
pub fn write_grid_binary<W: Write>(grid: &StatusGrid, mut writer: W) -> Result<()> {
    writer.write_all(GRID_MAGIC)?;
    writer.write_all(&GRID_VERSION.to_le_bytes())?;
    writer.write_all(&grid.window.origin().and_utc().timestamp().to_le_bytes())?;
    writer.write_all(&grid.window.len_minutes().to_le_bytes())?;
    writer.write_all(&(grid.n_regions() as u32).to_le_bytes())?;
    for name in grid.regions.names() {
        let bytes = name.as_bytes();
        writer.write_all(&(bytes.len() as u16).to_le_bytes())?;
        writer.write_all(bytes)?;
    }
    for column in &grid.columns {
        for block in column.blocks() {
            writer.write_all(&block.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a grid previously written by [`write_grid_binary`].
pub fn read_grid_binary<R: Read>(mut reader: R) -> Result<StatusGrid> {
    fn bad(msg: &str) -> Error {
        Error::validation(format!("grid dump: {msg}"))
    }
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut buf = [0u8; 8];
    reader.read_exact(&mut buf[..2])?;
    if u16::from_le_bytes([buf[0], buf[1]]) != GRID_VERSION {
        return Err(bad("unsupported version"));
    }
    reader.read_exact(&mut buf)?;
    let origin = DateTime::from_timestamp(i64::from_le_bytes(buf), 0)
        .ok_or_else(|| bad("origin out of range"))?
        .naive_utc();
    reader.read_exact(&mut buf[..4])?;
    let n_minutes = u32::from_le_bytes(buf[..4].try_into().unwrap());
    reader.read_exact(&mut buf[..4])?;
    let n_regions = u32::from_le_bytes(buf[..4].try_into().unwrap()) as usize;
    if n_minutes == 0 {
        return Err(bad("empty window"));
    }
    let window = StudyWindow::new(origin, origin + chrono::Duration::minutes(i64::from(n_minutes)))?;
    let mut names = Vec::with_capacity(n_regions);
    for _ in 0..n_regions {
        reader.read_exact(&mut buf[..2])?;
        let len = u16::from_le_bytes(buf[..2].try_into().unwrap()) as usize;
        let mut name = vec![0u8; len];
        reader.read_exact(&mut name)?;
        names.push(String::from_utf8(name).map_err(|_| bad("region name not UTF-8"))?);
    }
    let registry = crate::ingest::build_registry(&names)?;
    if registry.names() != names {
        return Err(bad("region names not sorted and unique"));
    }
    let n_blocks = (n_minutes as usize).div_ceil(64);
    let mut columns = Vec::with_capacity(n_regions);
    for _ in 0..n_regions {
        let mut blocks = vec![0u64; n_blocks];
        for block in &mut blocks {
            reader.read_exact(&mut buf)?;
            *block = u64::from_le_bytes(buf);
        }
        columns.push(BitColumn::from_blocks(blocks, n_minutes as usize));
    }
    Ok(StatusGrid { window, regions: registry, columns })
}
