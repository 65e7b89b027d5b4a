//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use blazemap::geometry::{Point, PolyLine, Polygon};
use blazemap::grid::{AnalysisGrid, Mask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Even-odd test with half-open edges: a point on a left or bottom edge is
/// inside, on a right or top edge outside.
pub fn pip(p: Point, poly: &Polygon) -> bool {
    let mut inside = false;
    for ring in poly.rings() {
        for k in 0..ring.len() - 1 {
            let (a, b) = (ring[k], ring[k + 1]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

pub fn cells_in_polygon(poly: &Polygon, grid: &AnalysisGrid) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| {
            let (r, c) = grid.row_col(i);
            pip(grid.cell_center(r, c), poly)
        })
        .collect()
}

/// Cells in any part, looking only inside the union of part bounding boxes.
pub fn cells_in_parts(parts: &[Polygon], grid: &AnalysisGrid) -> Vec<usize> {
    let mut out = Vec::new();
    for poly in parts {
        let (x0, y0, x1, y1) = poly.bbox();
        let c0 = (((x0 - grid.origin_x) / grid.cell_size).floor().max(0.0) as usize).min(grid.n_cols);
        let c1 = (((x1 - grid.origin_x) / grid.cell_size).ceil().max(0.0) as usize).min(grid.n_cols);
        let r_lo = (((grid.top() - y1) / grid.cell_size).floor().max(0.0) as usize).min(grid.n_rows);
        let r_hi = (((grid.top() - y0) / grid.cell_size).ceil().max(0.0) as usize).min(grid.n_rows);
        for r in r_lo..r_hi {
            for c in c0..c1 {
                if pip(grid.cell_center(r, c), poly) {
                    out.push(grid.index(r, c));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

pub fn shoelace(ring: &[Point]) -> f64 {
    let mut s = 0.0;
    for k in 0..ring.len() - 1 {
        s += ring[k].x * ring[k + 1].y - ring[k + 1].x * ring[k].y;
    }
    s / 2.0
}

pub fn area(poly: &Polygon) -> f64 {
    let mut a = shoelace(poly.exterior()).abs();
    for h in poly.interiors() {
        a -= shoelace(h).abs();
    }
    a.max(0.0)
}

/// Cell by floor arithmetic on the half-open cell boxes.
pub fn cell_of(p: Point, grid: &AnalysisGrid) -> Option<usize> {
    let c = ((p.x - grid.origin_x) / grid.cell_size).floor();
    let k = ((p.y - grid.origin_y) / grid.cell_size).floor();
    if c < 0.0 || k < 0.0 || c >= grid.n_cols as f64 || k >= grid.n_rows as f64 {
        return None;
    }
    Some(grid.index(grid.n_rows - 1 - k as usize, c as usize))
}

/// Per-cell lengths of one segment: split at every grid-line crossing and
/// assign each piece by its midpoint.
pub fn segment_lengths(p: Point, q: Point, grid: &AnalysisGrid, out: &mut BTreeMap<usize, f64>) {
    let len = p.distance(&q);
    if len == 0.0 {
        return;
    }
    let mut ts = vec![0.0, 1.0];
    for i in 0..=grid.n_cols {
        let x = grid.origin_x + i as f64 * grid.cell_size;
        if q.x != p.x {
            let t = (x - p.x) / (q.x - p.x);
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    for k in 0..=grid.n_rows {
        let y = grid.origin_y + k as f64 * grid.cell_size;
        if q.y != p.y {
            let t = (y - p.y) / (q.y - p.y);
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    for w in ts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let mid = Point::new(p.x + (q.x - p.x) * tm, p.y + (q.y - p.y) * tm);
        if let Some(c) = cell_of(mid, grid) {
            *out.entry(c).or_insert(0.0) += (w[1] - w[0]) * len;
        }
    }
}

pub fn polyline_lengths(line: &PolyLine, grid: &AnalysisGrid) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for w in line.vertices().windows(2) {
        segment_lengths(w[0], w[1], grid, &mut out);
    }
    out
}

/// Untruncated Gaussian KDE by a double loop over cells and points.
pub fn kde_bruteforce(points: &[Point], weights: &[f64], grid: &AnalysisGrid, h: f64) -> Vec<f64> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * h * h);
    (0..grid.len())
        .map(|i| {
            let (r, c) = grid.row_col(i);
            let ctr = grid.cell_center(r, c);
            points
                .iter()
                .zip(weights)
                .map(|(p, w)| {
                    let d2 = (p.x - ctr.x).powi(2) + (p.y - ctr.y).powi(2);
                    w * norm * (-d2 / (2.0 * h * h)).exp()
                })
                .sum()
        })
        .collect()
}

/// 8-connected components by stack flood fill; returns a label per cell
/// (0 for unset) numbered in row-major order of first appearance.
pub fn flood_fill(m: &Mask) -> (Vec<u32>, usize) {
    let (rows, cols) = (m.grid.n_rows as i64, m.grid.n_cols as i64);
    let mut labels = vec![0u32; m.bits.len()];
    let mut next = 0u32;
    for start in 0..m.bits.len() {
        if !m.bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        let mut stack = vec![start];
        labels[start] = next;
        while let Some(i) = stack.pop() {
            let (r, c) = ((i as i64) / cols, (i as i64) % cols);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= rows || cc >= cols {
                        continue;
                    }
                    let j = (rr * cols + cc) as usize;
                    if m.bits[j] && labels[j] == 0 {
                        labels[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
    }
    (labels, next as usize)
}

/// Random mask whose density is drawn from `density`.
pub fn random_mask(rng: &mut ChaCha8Rng, grid: AnalysisGrid, density: std::ops::Range<f64>) -> Mask {
    let density = if density.is_empty() { density.start } else { rng.random_range(density) };
    let bits = (0..grid.len()).map(|_| rng.random::<f64>() < density).collect();
    Mask::from_bits(grid, bits).unwrap()
}

/// Random simple polygon: a star around `center` with sorted angles.
pub fn random_star(rng: &mut ChaCha8Rng, center: Point, r_min: f64, r_max: f64, n: usize) -> Polygon {
    let mut angles: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    let ring: Vec<Point> = angles
        .iter()
        .map(|a| {
            let r = rng.random_range(r_min..r_max);
            Point::new(center.x + r * a.cos(), center.y + r * a.sin())
        })
        .collect();
    Polygon::new(ring, vec![]).unwrap()
}
