//! Daily fire extents from dated thermal detections.
//!
//! Each day's detections are smoothed with a truncated Gaussian kernel on the
//! analysis grid, thresholded, clipped to the official perimeter and
//! differenced against everything burned on earlier days.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rasterize_polygons, trace_mask_boundary, Point, Polygon};
use crate::grid::{mask_combine, AnalysisGrid, Mask, MaskOp, RealRaster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Low,
    Nominal,
    High,
}

impl Confidence {
    /// Accepts the FIRMS single-letter codes as well as full names.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l" | "low" => Some(Confidence::Low),
            "n" | "nominal" => Some(Confidence::Nominal),
            "h" | "high" => Some(Confidence::High),
            _ => None,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Confidence::Low => "l",
            Confidence::Nominal => "n",
            Confidence::High => "h",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub location: Point,
    pub date: NaiveDate,
    /// Fire radiative power, MW.
    pub frp: Option<f64>,
    pub confidence: Option<Confidence>,
    pub acq_time: Option<String>,
}

impl Detection {
    pub fn at(location: Point, date: NaiveDate) -> Self {
        Self {
            location,
            date,
            frp: None,
            confidence: None,
            acq_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    RelativeToDailyMax,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KdeParams {
    pub bandwidth_m: f64,
    pub cutoff_sigmas: f64,
    pub threshold_mode: ThresholdMode,
    pub threshold_value: f64,
    pub frp_weighted: bool,
}

impl Default for KdeParams {
    /// 750 m bandwidth (twice the 375 m VIIRS footprint), 4σ cutoff, 5 % of
    /// the day's peak density.
    fn default() -> Self {
        Self {
            bandwidth_m: 750.0,
            cutoff_sigmas: 4.0,
            threshold_mode: ThresholdMode::RelativeToDailyMax,
            threshold_value: 0.05,
            frp_weighted: false,
        }
    }
}

impl KdeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_m.is_finite() && self.bandwidth_m > 0.0) {
            return Err(Error::InvalidParam {
                name: "bandwidth_m",
                message: format!("must be > 0, got {}", self.bandwidth_m),
            });
        }
        if !(self.cutoff_sigmas.is_finite() && self.cutoff_sigmas >= 3.0) {
            return Err(Error::InvalidParam {
                name: "cutoff_sigmas",
                message: format!("must be >= 3, got {}", self.cutoff_sigmas),
            });
        }
        let t = self.threshold_value;
        match self.threshold_mode {
            ThresholdMode::RelativeToDailyMax if !(t > 0.0 && t < 1.0) => Err(Error::InvalidParam {
                name: "threshold_value",
                message: format!("relative threshold must lie in (0, 1), got {t}"),
            }),
            ThresholdMode::Absolute if !(t.is_finite() && t > 0.0) => Err(Error::InvalidParam {
                name: "threshold_value",
                message: format!("absolute threshold must be > 0, got {t}"),
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyPerimeter {
    pub date: NaiveDate,
    /// Thresholded, clipped extent for the day, before differencing.
    pub active: Mask,
    pub new_burn: Mask,
    pub cumulative: Mask,
    pub polygons: Vec<Polygon>,
}

fn kernel_weights(points: &[Detection], frp_weighted: bool) -> Vec<f64> {
    if !frp_weighted {
        return vec![1.0; points.len()];
    }
    let frps: Vec<f64> = points.iter().filter_map(|d| d.frp).collect();
    let mean = if frps.is_empty() {
        0.0
    } else {
        frps.iter().sum::<f64>() / frps.len() as f64
    };
    points
        .iter()
        .map(|d| match d.frp {
            Some(f) if mean > 0.0 => f / mean,
            _ => 1.0,
        })
        .collect()
}

/// Gaussian kernel density at every cell center, in detections per m².
/// Contributions beyond `cutoff_sigmas · bandwidth` are omitted.
pub fn kde_surface(points: &[Detection], grid: &AnalysisGrid, params: &KdeParams) -> Result<RealRaster> {
    params.validate()?;
    if points.is_empty() {
        return Ok(RealRaster::zeros(*grid));
    }
    let h = params.bandwidth_m;
    let radius = params.cutoff_sigmas * h;
    let r2 = radius * radius;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * h * h);
    let inv_2h2 = 1.0 / (2.0 * h * h);
    let weights = kernel_weights(points, params.frp_weighted);

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .location
            .y
            .total_cmp(&points[b].location.y)
            .then(points[a].location.x.total_cmp(&points[b].location.x))
            .then(a.cmp(&b))
    });
    let ys: Vec<f64> = order.iter().map(|&i| points[i].location.y).collect();

    let mut cells = vec![0.0; grid.len()];
    cells
        .par_chunks_mut(grid.n_cols)
        .enumerate()
        .for_each(|(row, out)| {
            let cy = grid.center_y(row);
            let lo = ys.partition_point(|&y| y < cy - radius);
            let hi = ys.partition_point(|&y| y <= cy + radius);
            for &pi in &order[lo..hi] {
                let p = points[pi].location;
                let dy2 = (p.y - cy) * (p.y - cy);
                let c0 = ((p.x - radius - grid.origin_x) / grid.cell_size - 0.5).ceil().max(0.0) as usize;
                let c1f = ((p.x + radius - grid.origin_x) / grid.cell_size - 0.5).floor();
                if c1f < 0.0 {
                    continue;
                }
                let c1 = (c1f as usize).min(grid.n_cols - 1);
                for (c, v) in out.iter_mut().enumerate().take(c1 + 1).skip(c0) {
                    let dx = p.x - grid.center_x(c);
                    let d2 = dx * dx + dy2;
                    if d2 <= r2 {
                        *v += weights[pi] * norm * (-d2 * inv_2h2).exp();
                    }
                }
            }
        });
    RealRaster::new(*grid, cells)
}

/// Cells at or above the threshold. In relative mode the cut is
/// `threshold_value × max`; an all-zero surface yields an empty mask.
pub fn threshold_surface(surface: &RealRaster, params: &KdeParams) -> Mask {
    let cut = match params.threshold_mode {
        ThresholdMode::RelativeToDailyMax => params.threshold_value * surface.max(),
        ThresholdMode::Absolute => params.threshold_value,
    };
    let bits = surface.cells.iter().map(|&v| v > 0.0 && v >= cut).collect();
    Mask {
        grid: surface.grid,
        bits,
    }
}

/// Groups detections by acquisition date. Every date in `window` (or between
/// the first and last detection when no window is given) gets an entry, so
/// detection-free days stay in the sequence.
pub fn group_by_date(
    detections: &[Detection],
    window: Option<(NaiveDate, NaiveDate)>,
) -> Result<Vec<(NaiveDate, Vec<Detection>)>> {
    let mut by_date: BTreeMap<NaiveDate, Vec<Detection>> = BTreeMap::new();
    for d in detections {
        by_date.entry(d.date).or_default().push(d.clone());
    }
    let (start, end) = match window {
        Some((s, e)) => {
            if s > e {
                return Err(Error::Validation(format!("event window {s}..{e} is reversed")));
            }
            if let Some(d) = by_date.keys().find(|d| **d < s || **d > e) {
                return Err(Error::Validation(format!(
                    "detection dated {d} lies outside the event window {s}..{e}"
                )));
            }
            (s, e)
        }
        None => match (by_date.keys().next(), by_date.keys().next_back()) {
            (Some(&s), Some(&e)) => (s, e),
            _ => return Ok(Vec::new()),
        },
    };
    Ok(start
        .iter_days()
        .take_while(|d| *d <= end)
        .map(|d| (d, by_date.remove(&d).unwrap_or_default()))
        .collect())
}

/// Daily new-burn and cumulative masks clipped to `clip`.
pub fn extract_daily_perimeters_in(
    days: &[(NaiveDate, Vec<Detection>)],
    clip: &Mask,
    params: &KdeParams,
) -> Result<Vec<DailyPerimeter>> {
    params.validate()?;
    if let Some(w) = days.windows(2).find(|w| w[0].0 >= w[1].0) {
        return Err(Error::Validation(format!(
            "dates must be strictly ascending, found {} before {}",
            w[0].0, w[1].0
        )));
    }
    let grid = clip.grid;
    let mut cumulative = Mask::empty(grid);
    let mut out = Vec::with_capacity(days.len());
    for (date, points) in days {
        let active = if points.is_empty() {
            Mask::empty(grid)
        } else {
            let surface = kde_surface(points, &grid, params)?;
            mask_combine(&threshold_surface(&surface, params), clip, MaskOp::Intersect)?
        };
        let new_burn = mask_combine(&active, &cumulative, MaskOp::Difference)?;
        cumulative = mask_combine(&cumulative, &active, MaskOp::Union)?;
        let polygons = trace_mask_boundary(&new_burn);
        out.push(DailyPerimeter {
            date: *date,
            active,
            new_burn,
            cumulative: cumulative.clone(),
            polygons,
        });
    }
    Ok(out)
}

pub fn extract_daily_perimeters(
    days: &[(NaiveDate, Vec<Detection>)],
    official: &[Polygon],
    grid: &AnalysisGrid,
    params: &KdeParams,
) -> Result<Vec<DailyPerimeter>> {
    extract_daily_perimeters_in(days, &rasterize_polygons(official, grid), params)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    /// 0 for unset cells, otherwise a label in `1..=sizes.len()`.
    pub labels: Vec<u32>,
    /// Cell count of region `l` at index `l - 1`.
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

/// 8-connected labelling. Labels are numbered in row-major order of each
/// region's first cell.
pub fn connected_components(m: &Mask) -> Components {
    let g = m.grid;
    let (rows, cols) = (g.n_rows, g.n_cols);
    let mut provisional = vec![0u32; g.len()];
    let mut parent: Vec<u32> = vec![0];
    for r in 0..rows {
        for c in 0..cols {
            let i = g.index(r, c);
            if !m.bits[i] {
                continue;
            }
            let mut neighbours = [0u32; 4];
            let mut n = 0;
            if c > 0 && provisional[i - 1] != 0 {
                neighbours[n] = provisional[i - 1];
                n += 1;
            }
            if r > 0 {
                let up = i - cols;
                for (ok, j) in [(c > 0, up.wrapping_sub(1)), (true, up), (c + 1 < cols, up + 1)] {
                    if ok && provisional[j] != 0 {
                        neighbours[n] = provisional[j];
                        n += 1;
                    }
                }
            }
            if n == 0 {
                let l = parent.len() as u32;
                parent.push(l);
                provisional[i] = l;
            } else {
                let mut root = find(&mut parent, neighbours[0]);
                for &nb in &neighbours[1..n] {
                    let other = find(&mut parent, nb);
                    if other != root {
                        let (lo, hi) = if other < root { (other, root) } else { (root, other) };
                        parent[hi as usize] = lo;
                        root = lo;
                    }
                }
                provisional[i] = root;
            }
        }
    }
    let mut dense = vec![0u32; parent.len()];
    let mut sizes = Vec::new();
    let mut labels = vec![0u32; g.len()];
    for i in 0..g.len() {
        if provisional[i] == 0 {
            continue;
        }
        let root = find(&mut parent, provisional[i]) as usize;
        if dense[root] == 0 {
            sizes.push(0);
            dense[root] = sizes.len() as u32;
        }
        labels[i] = dense[root];
        sizes[dense[root] as usize - 1] += 1;
    }
    Components { labels, sizes }
}
