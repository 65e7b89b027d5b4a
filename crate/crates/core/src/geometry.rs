//! Planar geometry and the bridge between vectors and the analysis grid.
//!
//! Every vector/raster intersection is done on the grid: a cell belongs to a
//! polygon iff its center does. Point-in-polygon uses the even-odd crossing
//! rule with a half-open convention (a ray is cast towards +x and an edge
//! counts when exactly one endpoint lies strictly above the test point), so
//! two polygons sharing an edge never both claim a cell center lying on it.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::grid::{AnalysisGrid, Mask, PlanarFrame};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Equirectangular projection about the frame origin.
pub fn project_lonlat(lon: f64, lat: f64, frame: PlanarFrame) -> Point {
    let k = std::f64::consts::PI / 180.0;
    Point {
        x: EARTH_RADIUS_M * (lon - frame.origin_lon) * k * (frame.origin_lat * k).cos(),
        y: EARTH_RADIUS_M * (lat - frame.origin_lat) * k,
    }
}

/// Inverse of [`project_lonlat`], returning `(lon, lat)`.
pub fn unproject(p: Point, frame: PlanarFrame) -> (f64, f64) {
    let k = std::f64::consts::PI / 180.0;
    let lat = frame.origin_lat + p.y / (EARTH_RADIUS_M * k);
    let lon = frame.origin_lon + p.x / (EARTH_RADIUS_M * k * (frame.origin_lat * k).cos());
    (lon, lat)
}

/// A closed ring: first vertex repeated as the last.
pub type Ring = Vec<Point>;

fn normalize_ring(mut ring: Ring, what: &str) -> Result<Ring> {
    if ring.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::Geometry(format!("{what} has non-finite coordinates")));
    }
    ring.dedup();
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    let mut distinct: Vec<(u64, u64)> = ring.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Geometry(format!(
            "{what} has {} distinct vertices, need at least 3",
            distinct.len()
        )));
    }
    let first = ring[0];
    ring.push(first);
    Ok(ring)
}

fn ring_signed_area(ring: &[Point]) -> f64 {
    ring.windows(2)
        .map(|w| w[0].x * w[1].y - w[1].x * w[0].y)
        .sum::<f64>()
        / 2.0
}

/// Toggles `inside` for every edge of `ring` crossed by the +x ray from `p`.
#[inline]
fn ring_crossings(ring: &[Point], p: Point, inside: &mut bool) {
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) && p.x < edge_x_at(a, b, p.y) {
            *inside = !*inside;
        }
    }
}

#[inline]
fn edge_x_at(a: Point, b: Point, y: f64) -> f64 {
    a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Ring,
    interiors: Vec<Ring>,
}

impl Polygon {
    /// Builds a polygon, closing open rings and rejecting rings with fewer
    /// than three distinct vertices.
    pub fn new(exterior: Vec<Point>, interiors: Vec<Vec<Point>>) -> Result<Self> {
        let exterior = normalize_ring(exterior, "exterior ring")?;
        let interiors = interiors
            .into_iter()
            .map(|r| normalize_ring(r, "interior ring"))
            .collect::<Result<_>>()?;
        Ok(Self {
            exterior,
            interiors,
        })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(
            vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
            vec![],
        )
    }

    pub fn exterior(&self) -> &[Point] {
        &self.exterior
    }

    pub fn interiors(&self) -> &[Ring] {
        &self.interiors
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.interiors.iter())
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.exterior.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(x0, y0, x1, y1), p| (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y)),
        )
    }

    /// Area-weighted centroid of the exterior minus holes; falls back to the
    /// vertex mean for zero-area rings.
    pub fn centroid(&self) -> (Point, f64) {
        let (mut cx, mut cy, mut area) = (0.0, 0.0, 0.0);
        for (i, ring) in self.rings().enumerate() {
            let sign = if i == 0 { 1.0 } else { -1.0 };
            let a = ring_signed_area(ring);
            let orient = if a < 0.0 { -1.0 } else { 1.0 };
            for w in ring.windows(2) {
                let cross = w[0].x * w[1].y - w[1].x * w[0].y;
                cx += sign * orient * (w[0].x + w[1].x) * cross;
                cy += sign * orient * (w[0].y + w[1].y) * cross;
            }
            area += sign * a.abs();
        }
        if area > 0.0 {
            (Point::new(cx / (6.0 * area), cy / (6.0 * area)), area)
        } else {
            let n = (self.exterior.len() - 1) as f64;
            let (sx, sy) = self.exterior[..self.exterior.len() - 1]
                .iter()
                .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
            (Point::new(sx / n, sy / n), 0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyLine {
    vertices: Vec<Point>,
}

impl PolyLine {
    /// Drops repeated consecutive vertices; at least two must remain.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::Geometry("polyline has non-finite coordinates".into()));
        }
        vertices.dedup();
        if vertices.len() < 2 {
            return Err(Error::Geometry(
                "polyline needs at least two distinct vertices".into(),
            ));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }
}

pub fn point_in_polygon(p: Point, poly: &Polygon) -> bool {
    let mut inside = false;
    for ring in poly.rings() {
        ring_crossings(ring, p, &mut inside);
    }
    inside
}

/// Shoelace area of the exterior minus the holes.
pub fn polygon_area(poly: &Polygon) -> f64 {
    let ext = ring_signed_area(&poly.exterior).abs();
    let holes: f64 = poly.interiors.iter().map(|r| ring_signed_area(r).abs()).sum();
    (ext - holes).max(0.0)
}

/// Calls `f(row, col_start, col_end)` for each run of cells in `row` whose
/// centers lie inside the polygon. Agrees exactly with [`point_in_polygon`]
/// evaluated at every cell center.
pub fn for_each_polygon_span(
    poly: &Polygon,
    grid: &AnalysisGrid,
    mut f: impl FnMut(usize, usize, usize),
) {
    let (min_y, max_y) = poly
        .rings()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    if !(min_y.is_finite() && max_y.is_finite()) {
        return;
    }
    // rows whose center could be within [min_y, max_y]
    let k_lo = (((min_y - grid.origin_y) / grid.cell_size - 0.5).floor().max(0.0)) as usize;
    let k_hi_f = ((max_y - grid.origin_y) / grid.cell_size - 0.5).ceil();
    if k_hi_f < 0.0 || k_lo >= grid.n_rows {
        return;
    }
    let k_hi = (k_hi_f as usize).min(grid.n_rows - 1);
    let mut xs: Vec<f64> = Vec::new();
    for k in k_lo..=k_hi {
        let row = grid.n_rows - 1 - k;
        let cy = grid.center_y(row);
        xs.clear();
        for ring in poly.rings() {
            for w in ring.windows(2) {
                let (a, b) = (w[0], w[1]);
                if (a.y > cy) != (b.y > cy) {
                    xs.push(edge_x_at(a, b, cy));
                }
            }
        }
        if xs.is_empty() {
            continue;
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let c0 = first_col_at_or_after(grid, pair[0]);
            let c1 = first_col_at_or_after(grid, pair[1]);
            if c0 < c1 {
                f(row, c0, c1);
            }
        }
    }
}

/// Smallest column whose center x is `>= x` (may be `n_cols`).
fn first_col_at_or_after(grid: &AnalysisGrid, x: f64) -> usize {
    let est = ((x - grid.origin_x) / grid.cell_size - 0.5).ceil();
    let mut c = if est <= 0.0 {
        0
    } else {
        (est as usize).min(grid.n_cols)
    };
    while c > 0 && grid.center_x(c - 1) >= x {
        c -= 1;
    }
    while c < grid.n_cols && grid.center_x(c) < x {
        c += 1;
    }
    c
}

/// Row-major cell indices whose centers lie in the polygon.
pub fn polygon_cells(poly: &Polygon, grid: &AnalysisGrid) -> Vec<usize> {
    let mut spans = Vec::new();
    for_each_polygon_span(poly, grid, |row, c0, c1| spans.push((row, c0, c1)));
    spans.sort_unstable();
    spans
        .into_iter()
        .flat_map(|(row, c0, c1)| (c0..c1).map(move |c| grid.index(row, c)))
        .collect()
}

/// Row-major cell indices covered by any part, without duplicates.
pub fn multipolygon_cells(parts: &[Polygon], grid: &AnalysisGrid) -> Vec<usize> {
    let mut cells: Vec<usize> = parts.iter().flat_map(|p| polygon_cells(p, grid)).collect();
    if parts.len() > 1 {
        cells.sort_unstable();
        cells.dedup();
    }
    cells
}

pub fn rasterize_polygon(poly: &Polygon, grid: &AnalysisGrid) -> Mask {
    let mut mask = Mask::empty(*grid);
    for_each_polygon_span(poly, grid, |row, c0, c1| {
        let base = grid.index(row, 0);
        mask.bits[base + c0..base + c1].fill(true);
    });
    mask
}

pub fn rasterize_polygons(polys: &[Polygon], grid: &AnalysisGrid) -> Mask {
    let mut mask = Mask::empty(*grid);
    for poly in polys {
        for_each_polygon_span(poly, grid, |row, c0, c1| {
            let base = grid.index(row, 0);
            mask.bits[base + c0..base + c1].fill(true);
        });
    }
    mask
}

/// Length of the polyline inside each cell, keyed by row-major cell index.
/// Portions outside the grid extent are dropped.
pub fn rasterize_polyline(line: &PolyLine, grid: &AnalysisGrid) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    let mut ts = Vec::new();
    for w in line.vertices.windows(2) {
        clip_segment(w[0], w[1], grid, &mut ts, |cell, len| {
            *out.entry(cell).or_insert(0.0) += len;
        });
    }
    out
}

fn clip_segment(
    p: Point,
    q: Point,
    grid: &AnalysisGrid,
    ts: &mut Vec<(f64, Point)>,
    mut emit: impl FnMut(usize, f64),
) {
    let (dx, dy) = (q.x - p.x, q.y - p.y);
    if dx == 0.0 && dy == 0.0 {
        return;
    }
    let at = |t: f64| Point::new(p.x + dx * t, p.y + dy * t);
    // Liang-Barsky against the grid extent
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let (mut p0, mut p1) = (p, q);
    for (d, lo, hi, s, is_x) in [
        (dx, grid.origin_x, grid.right(), p.x, true),
        (dy, grid.origin_y, grid.top(), p.y, false),
    ] {
        if d == 0.0 {
            if s < lo || s > hi {
                return;
            }
            continue;
        }
        let (ta, tb, va, vb) = if d > 0.0 {
            ((lo - s) / d, (hi - s) / d, lo, hi)
        } else {
            ((hi - s) / d, (lo - s) / d, hi, lo)
        };
        if ta > t0 {
            t0 = ta;
            p0 = if is_x { Point::new(va, at(ta).y) } else { Point::new(at(ta).x, va) };
        }
        if tb < t1 {
            t1 = tb;
            p1 = if is_x { Point::new(vb, at(tb).y) } else { Point::new(at(tb).x, vb) };
        }
    }
    if t0 >= t1 {
        return;
    }
    ts.clear();
    ts.push((t0, p0));
    ts.push((t1, p1));
    let cs = grid.cell_size;
    // crossings carry the exact grid-line coordinate on their crossing axis
    if dx != 0.0 {
        let (lo, hi) = (p.x.min(q.x), p.x.max(q.x));
        let i0 = ((lo - grid.origin_x) / cs).ceil().max(0.0) as usize;
        let i1 = (((hi - grid.origin_x) / cs).floor().max(0.0) as usize).min(grid.n_cols);
        for i in i0..=i1 {
            let x = grid.line_x(i);
            let t = (x - p.x) / dx;
            if t > t0 && t < t1 {
                ts.push((t, Point::new(x, if dy == 0.0 { p.y } else { at(t).y })));
            }
        }
    }
    if dy != 0.0 {
        let (lo, hi) = (p.y.min(q.y), p.y.max(q.y));
        let k0 = ((lo - grid.origin_y) / cs).ceil().max(0.0) as usize;
        let k1 = (((hi - grid.origin_y) / cs).floor().max(0.0) as usize).min(grid.n_rows);
        for k in k0..=k1 {
            let y = grid.line_y(k);
            let t = (y - p.y) / dy;
            if t > t0 && t < t1 {
                ts.push((t, Point::new(if dx == 0.0 { p.x } else { at(t).x }, y)));
            }
        }
    }
    ts.sort_by(|a, b| a.0.total_cmp(&b.0));
    ts.dedup_by(|a, b| a.0 == b.0);
    for w in ts.windows(2) {
        let mid = at(0.5 * (w[0].0 + w[1].0));
        if let Some(cell) = grid.cell_index_containing(mid.x, mid.y) {
            emit(cell, w[0].1.distance(&w[1].1));
        }
    }
}

/// In-grid length of a polyline, by clipping each segment to the grid extent.
pub fn polyline_length_in_grid(line: &PolyLine, grid: &AnalysisGrid) -> f64 {
    rasterize_polyline(line, grid).values().sum()
}

type LatticeRing = (Vec<(i64, i64)>, i64, (f64, f64));

// Lattice directions, counter-clockwise order.
const EAST: u8 = 0;
const NORTH: u8 = 1;
const WEST: u8 = 2;
const SOUTH: u8 = 3;

#[derive(Clone, Copy)]
struct Edge {
    start: (i64, i64),
    dir: u8,
}

impl Edge {
    fn end(&self) -> (i64, i64) {
        let (x, y) = self.start;
        match self.dir {
            EAST => (x + 1, y),
            NORTH => (x, y + 1),
            WEST => (x - 1, y),
            _ => (x, y - 1),
        }
    }
}

/// Vectorizes a mask into polygons along cell edges. Shared edges between
/// set cells dissolve; diagonally touching cells yield separate rings.
/// Rasterizing the result reproduces the mask exactly.
pub fn trace_mask_boundary(m: &Mask) -> Vec<Polygon> {
    let g = &m.grid;
    let (rows, cols) = (g.n_rows as i64, g.n_cols as i64);
    // lattice coordinates: x = column line, y = row line counted from the south
    let set = |c: i64, k: i64| -> bool {
        c >= 0 && k >= 0 && c < cols && k < rows && m.bits[g.index((rows - 1 - k) as usize, c as usize)]
    };

    // directed boundary edges with the set region on the left
    let mut edges: Vec<Edge> = Vec::new();
    for row in 0..g.n_rows {
        let k = rows - 1 - row as i64;
        for col in 0..g.n_cols {
            if !m.bits[g.index(row, col)] {
                continue;
            }
            let c = col as i64;
            if !set(c, k - 1) {
                edges.push(Edge { start: (c, k), dir: EAST });
            }
            if !set(c + 1, k) {
                edges.push(Edge { start: (c + 1, k), dir: NORTH });
            }
            if !set(c, k + 1) {
                edges.push(Edge { start: (c + 1, k + 1), dir: WEST });
            }
            if !set(c - 1, k) {
                edges.push(Edge { start: (c, k + 1), dir: SOUTH });
            }
        }
    }
    if edges.is_empty() {
        return Vec::new();
    }

    let mut by_start: HashMap<(i64, i64), [Option<usize>; 2]> = HashMap::with_capacity(edges.len());
    for (i, e) in edges.iter().enumerate() {
        let slot = by_start.entry(e.start).or_insert([None, None]);
        if slot[0].is_none() {
            slot[0] = Some(i);
        } else {
            slot[1] = Some(i);
        }
    }

    // Successor prefers the left turn, which keeps diagonal neighbours apart.
    let next = |e: &Edge| -> usize {
        let slot = by_start[&e.end()];
        let (a, b) = match slot {
            [Some(a), None] => return a,
            [Some(a), Some(b)] => (a, b),
            _ => unreachable!("boundary edges always chain"),
        };
        let left = (e.dir + 1) % 4;
        if edges[a].dir == left {
            a
        } else if edges[b].dir == left {
            b
        } else if edges[a].dir == e.dir {
            a
        } else if edges[b].dir == e.dir {
            b
        } else {
            a
        }
    };

    let mut used = vec![false; edges.len()];
    // (lattice vertices, twice the signed area, probe cell center)
    let mut rings: Vec<LatticeRing> = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut verts = Vec::new();
        let mut e = start;
        loop {
            used[e] = true;
            let n = next(&edges[e]);
            if edges[n].dir != edges[e].dir {
                verts.push(edges[e].end());
            }
            e = n;
            if e == start {
                break;
            }
        }
        // twice the signed area in lattice units
        let twice_area: i64 = (0..verts.len())
            .map(|i| {
                let (a, b) = (verts[i], verts[(i + 1) % verts.len()]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum();
        // point just right of the first edge, i.e. the center of the cell outside the region
        let e0 = edges[start];
        let (sx, sy) = (e0.start.0 as f64, e0.start.1 as f64);
        let probe = match e0.dir {
            EAST => (sx + 0.5, sy - 0.5),
            NORTH => (sx + 0.5, sy + 0.5),
            WEST => (sx - 0.5, sy + 0.5),
            _ => (sx - 0.5, sy - 0.5),
        };
        rings.push((verts, twice_area, probe));
    }

    let to_points = |verts: &[(i64, i64)]| -> Vec<Point> {
        verts
            .iter()
            .map(|&(i, k)| Point::new(g.line_x(i as usize), g.line_y(k as usize)))
            .collect()
    };

    let lattice_ring = |verts: &[(i64, i64)]| -> Vec<Point> {
        let mut r: Vec<Point> = verts.iter().map(|&(i, k)| Point::new(i as f64, k as f64)).collect();
        r.push(r[0]);
        r
    };

    let exteriors: Vec<usize> = (0..rings.len()).filter(|&i| rings[i].1 > 0).collect();
    let exterior_lattice: Vec<Vec<Point>> = exteriors.iter().map(|&i| lattice_ring(&rings[i].0)).collect();
    let mut holes_of: Vec<Vec<usize>> = vec![Vec::new(); exteriors.len()];
    for (i, ring) in rings.iter().enumerate() {
        if ring.1 > 0 {
            continue;
        }
        let probe = Point::new(ring.2 .0, ring.2 .1);
        let owner = exteriors
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let mut inside = false;
                ring_crossings(&exterior_lattice[*j], probe, &mut inside);
                inside
            })
            .min_by_key(|(_, &ei)| rings[ei].1)
            .map(|(j, _)| j);
        match owner {
            Some(j) => holes_of[j].push(i),
            None => debug_assert!(false, "hole ring without an enclosing exterior"),
        }
    }

    exteriors
        .iter()
        .zip(holes_of)
        .map(|(&ei, holes)| {
            Polygon::new(
                to_points(&rings[ei].0),
                holes.iter().map(|&h| to_points(&rings[h].0)).collect(),
            )
            .expect("traced rings have at least four corners")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::rectangle(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn square_with_hole() -> Polygon {
        Polygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(10.0, 0.0),
                Point::new(10.0, 10.0),
                Point::new(0.0, 10.0),
            ],
            vec![vec![
                Point::new(3.0, 3.0),
                Point::new(7.0, 3.0),
                Point::new(7.0, 7.0),
                Point::new(3.0, 7.0),
            ]],
        )
        .unwrap()
    }

    #[test]
    fn projection_origin_and_offsets() {
        let frame = PlanarFrame::new(-118.3, 34.1);
        assert_eq!(project_lonlat(-118.3, 34.1, frame), Point::new(0.0, 0.0));

        let north = project_lonlat(-118.3, 34.11, frame);
        assert!(north.x.abs() < 1e-12);
        let arc = 6_371_000.0 * 0.01f64.to_radians();
        assert!((north.y - arc).abs() < 1e-6, "{}", north.y);

        let east = project_lonlat(10.01, 60.0, PlanarFrame::new(10.0, 60.0));
        // cos 60° halves the east-west scale
        assert!((east.x - arc / 2.0).abs() < 1e-6, "{}", east.x);
    }

    #[test]
    fn unproject_inverts_projection() {
        let frame = PlanarFrame::new(-118.5, 34.05);
        let p = Point::new(1234.5, -987.25);
        let (lon, lat) = unproject(p, frame);
        let q = project_lonlat(lon, lat, frame);
        assert!((q.x - p.x).abs() < 1e-8 && (q.y - p.y).abs() < 1e-8);
    }

    #[test]
    fn pip_basic_cases() {
        assert!(point_in_polygon(Point::new(0.5, 0.5), &unit_square()));
        assert!(!point_in_polygon(Point::new(2.0, 2.0), &unit_square()));
        let holed = square_with_hole();
        assert!(!point_in_polygon(Point::new(5.0, 5.0), &holed));
        assert!(point_in_polygon(Point::new(1.0, 5.0), &holed));
    }

    #[test]
    fn pip_boundary_is_half_open() {
        let sq = unit_square();
        assert!(point_in_polygon(Point::new(0.0, 0.5), &sq));
        assert!(!point_in_polygon(Point::new(1.0, 0.5), &sq));
        assert!(point_in_polygon(Point::new(0.5, 0.0), &sq));
        assert!(!point_in_polygon(Point::new(0.5, 1.0), &sq));
        // adjacent squares partition their shared edge
        let right = Polygon::rectangle(1.0, 0.0, 2.0, 1.0).unwrap();
        let p = Point::new(1.0, 0.5);
        assert_ne!(point_in_polygon(p, &sq), point_in_polygon(p, &right));
    }

    #[test]
    fn degenerate_rings_are_rejected() {
        let two = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 0.0)];
        assert!(matches!(Polygon::new(two, vec![]), Err(Error::Geometry(_))));
        assert!(PolyLine::new(vec![Point::new(1.0, 1.0), Point::new(1.0, 1.0)]).is_err());
    }

    #[test]
    fn open_ring_is_closed() {
        let p = unit_square();
        assert_eq!(p.exterior().first(), p.exterior().last());
        assert_eq!(p.exterior().len(), 5);
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&unit_square()), 1.0);
        assert_eq!(polygon_area(&Polygon::rectangle(0.0, 0.0, 20.0, 20.0).unwrap()), 400.0);
        let tri = Polygon::new(
            vec![Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(0.0, 4.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(polygon_area(&tri), 6.0);
        assert_eq!(polygon_area(&square_with_hole()), 84.0);
    }

    #[test]
    fn centroid_of_rectangle() {
        let (c, a) = Polygon::rectangle(0.0, 0.0, 4.0, 2.0).unwrap().centroid();
        assert_eq!(a, 8.0);
        assert!((c.x - 2.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rasterize_whole_grid() {
        let g = AnalysisGrid::new(0.0, 0.0, 20.0, 5, 7).unwrap();
        let cover = Polygon::rectangle(-1.0, -1.0, 200.0, 200.0).unwrap();
        assert_eq!(rasterize_polygon(&cover, &g), Mask::full(g));
        let outside = Polygon::rectangle(500.0, 500.0, 600.0, 600.0).unwrap();
        assert!(rasterize_polygon(&outside, &g).is_empty());
    }

    #[test]
    fn polyline_horizontal_three_cells() {
        let g = AnalysisGrid::new(0.0, 0.0, 20.0, 1, 5).unwrap();
        let line = PolyLine::new(vec![Point::new(20.0, 10.0), Point::new(80.0, 10.0)]).unwrap();
        let lengths = rasterize_polyline(&line, &g);
        assert_eq!(lengths, BTreeMap::from([(1, 20.0), (2, 20.0), (3, 20.0)]));
    }

    #[test]
    fn polyline_inside_one_cell() {
        let g = AnalysisGrid::new(0.0, 0.0, 20.0, 2, 2).unwrap();
        let line = PolyLine::new(vec![Point::new(2.0, 25.0), Point::new(9.0, 25.0)]).unwrap();
        assert_eq!(rasterize_polyline(&line, &g), BTreeMap::from([(0, 7.0)]));
    }

    #[test]
    fn polyline_outside_grid_is_dropped() {
        let g = AnalysisGrid::new(0.0, 0.0, 20.0, 2, 2).unwrap();
        let line = PolyLine::new(vec![Point::new(-50.0, -5.0), Point::new(100.0, -5.0)]).unwrap();
        assert!(rasterize_polyline(&line, &g).is_empty());
        let partial = PolyLine::new(vec![Point::new(-10.0, 5.0), Point::new(30.0, 5.0)]).unwrap();
        let l = rasterize_polyline(&partial, &g);
        assert_eq!(l.get(&2), Some(&20.0));
        assert_eq!(l.get(&3), Some(&10.0));
    }

    #[test]
    fn trace_empty_and_single_cell() {
        let g = AnalysisGrid::new(100.0, 200.0, 20.0, 3, 3).unwrap();
        assert!(trace_mask_boundary(&Mask::empty(g)).is_empty());
        let m = Mask::from_indices(g, [4]);
        let polys = trace_mask_boundary(&m);
        assert_eq!(polys.len(), 1);
        assert!(polys[0].interiors().is_empty());
        assert_eq!(polys[0].exterior().len(), 5);
        assert_eq!(polygon_area(&polys[0]), 400.0);
        assert_eq!(polys[0].bbox(), (120.0, 220.0, 140.0, 240.0));
    }

    #[test]
    fn trace_ring_of_cells_has_hole() {
        let g = AnalysisGrid::new(0.0, 0.0, 20.0, 3, 3).unwrap();
        let m = Mask::from_indices(g, [0, 1, 2, 3, 5, 6, 7, 8]);
        let polys = trace_mask_boundary(&m);
        assert_eq!(polys.len(), 1);
        assert_eq!(polys[0].interiors().len(), 1);
        assert_eq!(polygon_area(&polys[0]), 8.0 * 400.0);
        assert_eq!(rasterize_polygons(&polys, &g), m);
    }

    #[test]
    fn trace_diagonal_cells_are_separate() {
        let g = AnalysisGrid::new(0.0, 0.0, 20.0, 2, 2).unwrap();
        let m = Mask::from_indices(g, [0, 3]);
        let polys = trace_mask_boundary(&m);
        assert_eq!(polys.len(), 2);
        assert_eq!(rasterize_polygons(&polys, &g), m);
    }

    #[test]
    fn trace_round_trips_every_3x3_mask() {
        let g = AnalysisGrid::new(-7.0, 3.0, 20.0, 3, 3).unwrap();
        for bits in 0u32..(1 << 9) {
            let m = Mask::from_indices(g, (0..9).filter(|i| bits & (1 << i) != 0));
            assert_eq!(rasterize_polygons(&trace_mask_boundary(&m), &g), m, "mask {bits:#b}");
        }
    }
}
