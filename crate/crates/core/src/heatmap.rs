//! Time-bucket × system density maps, the peak service-demand overlay, queue
//! placement at the densest group boundary, and the placement anchor.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DisjointPartition;
use crate::trace::EventTrace;

/// Release tolerance around a utilization ratio of 1.
pub const DEFAULT_RELEASE_EPSILON: f64 = 0.01;
pub const DEFAULT_PEAK_QUANTILE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatMap {
    pub buckets: usize,
    pub systems: Vec<String>,
    /// `density[bucket][system]`, items per bucket.
    pub density: Vec<Vec<u64>>,
    pub peak_mask: Vec<Vec<bool>>,
    pub bucket_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementPoint {
    pub boundary_index: usize,
    pub bucket_index: usize,
    pub anchored: bool,
}

/// Binding between the queue and the disjoint set below its boundary.
/// Once released it stays released.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub group_index: usize,
    pub released: bool,
}

impl Anchor {
    pub fn new(group_index: usize) -> Self {
        Anchor {
            group_index,
            released: false,
        }
    }

    /// The anchor carried by the lower set of a placement boundary.
    pub fn for_placement(p: &PlacementPoint) -> Self {
        Anchor::new(p.boundary_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Ppm,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "ppm" => Ok(ExportFormat::Ppm),
            other => Err(Error::invalid("format", format!("unknown format {other:?}"))),
        }
    }
}

impl HeatMap {
    /// A map from precomputed counts. Every row must have one cell per system.
    pub fn from_counts(systems: Vec<String>, bucket_width: f64, density: Vec<Vec<u64>>) -> Result<Self> {
        if !(bucket_width.is_finite() && bucket_width > 0.0) {
            return Err(Error::invalid("bucket_width", format!("{bucket_width} must be > 0")));
        }
        if let Some(row) = density.iter().find(|r| r.len() != systems.len()) {
            return Err(Error::Mismatch {
                what: "density row vs systems",
                left: row.len(),
                right: systems.len(),
            });
        }
        let buckets = density.len();
        Ok(HeatMap {
            buckets,
            peak_mask: vec![vec![false; systems.len()]; buckets],
            systems,
            density,
            bucket_width,
        })
    }

    pub fn total(&self) -> u64 {
        self.density.iter().flatten().sum()
    }

    fn column(&self, system_id: &str) -> Option<usize> {
        self.systems.iter().position(|s| s == system_id)
    }

    /// Density of bucket `b` summed over the two groups adjacent to
    /// `boundary`.
    pub fn boundary_density(&self, part: &DisjointPartition, boundary: usize, b: usize) -> u64 {
        let cols = self.boundary_columns(part, boundary);
        cols.iter().map(|&c| self.density[b][c]).sum()
    }

    fn boundary_columns(&self, part: &DisjointPartition, boundary: usize) -> Vec<usize> {
        part.sets[boundary..=boundary + 1]
            .iter()
            .flatten()
            .filter_map(|s| self.column(&s.system_id))
            .collect()
    }

    /// Parses the CSV produced by [`export_heatmap`]. The peak mask is not
    /// part of the CSV and comes back all false.
    pub fn from_csv<R: Read>(reader: R, bucket_width: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("bucket") {
            return Err(Error::invalid("csv header", "first column must be `bucket`"));
        }
        let systems: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut density = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let b: usize = rec[0]
                .parse()
                .map_err(|_| Error::invalid(format!("row {i} bucket"), rec[0].to_owned()))?;
            if b != i {
                return Err(Error::invalid(
                    format!("row {i} bucket"),
                    format!("expected {i}, got {b}"),
                ));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| Error::invalid(format!("row {i} density"), v.to_owned()))
                })
                .collect::<Result<Vec<u64>>>()?;
            density.push(row);
        }
        HeatMap::from_counts(systems, bucket_width, density)
    }
}

/// Counts trace items into half-open buckets `[b·w, (b+1)·w)` per system.
/// The map spans exactly up to the last occupied bucket.
pub fn build_heatmap(trace: &EventTrace, bucket_width: f64, system_order: &[String]) -> Result<HeatMap> {
    build_heatmap_spanning(trace, bucket_width, system_order, 0)
}

/// As [`build_heatmap`], but the map has at least `min_buckets` rows.
pub fn build_heatmap_spanning(
    trace: &EventTrace,
    bucket_width: f64,
    system_order: &[String],
    min_buckets: usize,
) -> Result<HeatMap> {
    if !(bucket_width.is_finite() && bucket_width > 0.0) {
        return Err(Error::invalid("bucket_width", format!("{bucket_width} must be > 0")));
    }
    let mut cells: Vec<(usize, usize, u64)> = Vec::with_capacity(trace.len());
    let mut buckets = min_buckets;
    for (i, e) in trace.events.iter().enumerate() {
        if !(e.timestamp.is_finite() && e.timestamp >= 0.0) {
            return Err(Error::invalid(
                format!("events[{i}].timestamp"),
                format!("{} must be finite and >= 0", e.timestamp),
            ));
        }
        let col = system_order.iter().position(|s| *s == e.system_id).ok_or_else(|| {
            Error::invalid(
                format!("events[{i}].system_id"),
                format!("{} not in system order", e.system_id),
            )
        })?;
        let b = (e.timestamp / bucket_width).floor() as usize;
        buckets = buckets.max(b + 1);
        cells.push((b, col, e.item_count));
    }
    let mut density = vec![vec![0u64; system_order.len()]; buckets];
    for (b, col, n) in cells {
        density[b][col] += n;
    }
    HeatMap::from_counts(system_order.to_vec(), bucket_width, density)
}

/// Per-system peak threshold: the sorted column value at index
/// `ceil(q · (n − 1))`. This is the linear-interpolation quantile rounded up
/// to an observed value, so `demand ≥ threshold` matches `demand ≥` the
/// interpolated quantile.
fn peak_threshold(column: &mut [f64], quantile: f64) -> f64 {
    column.sort_by(f64::total_cmp);
    let idx = (quantile * (column.len() - 1) as f64).ceil() as usize;
    column[idx.min(column.len() - 1)]
}

pub fn overlay_peak_demand(hm: &HeatMap, demand: &[Vec<f64>], quantile: f64) -> Result<HeatMap> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::invalid("quantile", format!("{quantile} must lie in (0, 1]")));
    }
    if demand.len() != hm.buckets {
        return Err(Error::Mismatch {
            what: "demand rows vs buckets",
            left: demand.len(),
            right: hm.buckets,
        });
    }
    if let Some(row) = demand.iter().find(|r| r.len() != hm.systems.len()) {
        return Err(Error::Mismatch {
            what: "demand columns vs systems",
            left: row.len(),
            right: hm.systems.len(),
        });
    }
    let mut out = hm.clone();
    if hm.buckets == 0 {
        return Ok(out);
    }
    for s in 0..hm.systems.len() {
        let mut column: Vec<f64> = demand.iter().map(|row| row[s]).collect();
        let threshold = peak_threshold(&mut column, quantile);
        for (mask, row) in out.peak_mask.iter_mut().zip(demand) {
            mask[s] = row[s] >= threshold;
        }
    }
    Ok(out)
}

fn argmax_lowest<I: IntoIterator<Item = u64>>(values: I) -> Option<usize> {
    let mut best: Option<(usize, u64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Places the queue at the adjacent-group boundary carrying the most data,
/// in the bucket where that boundary peaks. Ties go to the lowest index.
pub fn select_queue_position(hm: &HeatMap, part: &DisjointPartition) -> Result<PlacementPoint> {
    if part.sets.len() < 2 {
        return Err(Error::invalid("k", "placement needs at least two groups"));
    }
    if hm.buckets == 0 {
        return Err(Error::Empty("heat map"));
    }
    let boundaries = part.sets.len() - 1;
    let totals = (0..boundaries).map(|i| (0..hm.buckets).map(|b| hm.boundary_density(part, i, b)).sum::<u64>());
    let boundary_index = argmax_lowest(totals).unwrap_or(0);
    let bucket_index =
        argmax_lowest((0..hm.buckets).map(|b| hm.boundary_density(part, boundary_index, b))).unwrap_or(0);
    Ok(PlacementPoint {
        boundary_index,
        bucket_index,
        anchored: true,
    })
}

/// Next density point after a released anchor: the densest boundary other
/// than the current one (the current one when it is the only boundary),
/// peaking in a bucket later than the current placement's bucket when one
/// exists.
pub fn next_queue_position(hm: &HeatMap, part: &DisjointPartition, current: &PlacementPoint) -> Result<PlacementPoint> {
    if part.sets.len() < 2 {
        return Err(Error::invalid("k", "placement needs at least two groups"));
    }
    if hm.buckets == 0 {
        return Err(Error::Empty("heat map"));
    }
    let boundaries = part.sets.len() - 1;
    let candidates: Vec<usize> = if boundaries == 1 {
        vec![0]
    } else {
        (0..boundaries).filter(|&i| i != current.boundary_index).collect()
    };
    let totals = candidates
        .iter()
        .map(|&i| (0..hm.buckets).map(|b| hm.boundary_density(part, i, b)).sum::<u64>());
    let boundary_index = candidates[argmax_lowest(totals).unwrap_or(0)];

    let first = current.bucket_index + 1;
    let bucket_index = if first < hm.buckets {
        first + argmax_lowest((first..hm.buckets).map(|b| hm.boundary_density(part, boundary_index, b))).unwrap_or(0)
    } else {
        hm.buckets - 1
    };
    Ok(PlacementPoint {
        boundary_index,
        bucket_index,
        anchored: true,
    })
}

/// Releases the anchor once the group's utilization ratio reaches 1, within
/// `epsilon`, or exceeds it. A released anchor is never re-held.
pub fn check_release(anchor: Anchor, ratio: f64, epsilon: f64) -> Anchor {
    if anchor.released {
        return anchor;
    }
    let reached = (ratio - 1.0).abs() <= epsilon || ratio > 1.0;
    Anchor {
        released: reached,
        ..anchor
    }
}

pub fn export_heatmap(hm: &HeatMap, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Csv => export_csv(hm),
        ExportFormat::Ppm => export_ppm(hm),
    }
}

fn export_csv(hm: &HeatMap) -> Vec<u8> {
    let mut out = String::from("bucket");
    for s in &hm.systems {
        out.push(',');
        out.push_str(s);
    }
    out.push('\n');
    for (b, row) in hm.density.iter().enumerate() {
        out.push_str(&b.to_string());
        for d in row {
            out.push(',');
            out.push_str(&d.to_string());
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Binary P6: one pixel per cell, rows are buckets. Density maps linearly to
/// grey (rounded half up against the map maximum); peak cells get a full red
/// channel.
fn export_ppm(hm: &HeatMap) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", hm.systems.len(), hm.buckets).into_bytes();
    let max = hm.density.iter().flatten().copied().max().unwrap_or(0) as u128;
    for (b, row) in hm.density.iter().enumerate() {
        for (s, &d) in row.iter().enumerate() {
            let grey = if max == 0 {
                0
            } else {
                ((d as u128 * 510 + max) / (2 * max)) as u8
            };
            let red = if hm.peak_mask[b][s] { 255 } else { grey };
            out.extend_from_slice(&[red, grey, grey]);
        }
    }
    out
}
