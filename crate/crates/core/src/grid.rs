//! The analysis grid and the raster containers that live on it.
//!
//! Rasters are stored row-major and north-up: row 0 is the northernmost row,
//! column 0 the westernmost. A grid's `origin_x`/`origin_y` is its lower-left
//! (south-west) corner, as in an ESRI ASCII header. A cell covers the
//! half-open box `[x0, x0 + cell_size) × [y0, y0 + cell_size)`, so every
//! planar point inside the grid extent belongs to exactly one cell.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Anchor of the local planar frame: the lon/lat that projects to (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarFrame {
    pub origin_lon: f64,
    pub origin_lat: f64,
}

impl PlanarFrame {
    pub fn new(origin_lon: f64, origin_lat: f64) -> Self {
        Self {
            origin_lon,
            origin_lat,
        }
    }
}

pub const DEFAULT_CELL_SIZE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisGrid {
    pub frame: PlanarFrame,
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl AnalysisGrid {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        cell_size: f64,
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidParam {
                name: "cell_size",
                message: format!("must be positive and finite, got {cell_size}"),
            });
        }
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidParam {
                name: "n_rows/n_cols",
                message: format!("grid must have at least one cell, got {n_rows}x{n_cols}"),
            });
        }
        if !(origin_x.is_finite() && origin_y.is_finite()) {
            return Err(Error::InvalidParam {
                name: "origin",
                message: "grid origin must be finite".into(),
            });
        }
        Ok(Self {
            frame: PlanarFrame::default(),
            origin_x,
            origin_y,
            cell_size,
            n_rows,
            n_cols,
        })
    }

    pub fn with_frame(mut self, frame: PlanarFrame) -> Self {
        self.frame = frame;
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Area of one cell in m² (400 for the default 20 m cell).
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    #[inline]
    pub fn top(&self) -> f64 {
        self.origin_y + self.n_rows as f64 * self.cell_size
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.origin_x + self.n_cols as f64 * self.cell_size
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_cols + col
    }

    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.n_cols, index % self.n_cols)
    }

    #[inline]
    pub fn center_x(&self, col: usize) -> f64 {
        self.origin_x + (col as f64 + 0.5) * self.cell_size
    }

    #[inline]
    pub fn center_y(&self, row: usize) -> f64 {
        self.origin_y + ((self.n_rows - 1 - row) as f64 + 0.5) * self.cell_size
    }

    #[inline]
    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        Point::new(self.center_x(col), self.center_y(row))
    }

    /// Planar x of the vertical grid line `i` (0 ..= n_cols).
    #[inline]
    pub fn line_x(&self, i: usize) -> f64 {
        self.origin_x + i as f64 * self.cell_size
    }

    /// Planar y of the horizontal grid line `k` counted from the south edge (0 ..= n_rows).
    #[inline]
    pub fn line_y(&self, k: usize) -> f64 {
        self.origin_y + k as f64 * self.cell_size
    }

    /// Cell containing the planar point, or `None` outside the grid extent.
    pub fn cell_containing(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.origin_x) / self.cell_size).floor();
        let fy = ((y - self.origin_y) / self.cell_size).floor();
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (col, k) = (fx as usize, fy as usize);
        if col >= self.n_cols || k >= self.n_rows {
            return None;
        }
        Some((self.n_rows - 1 - k, col))
    }

    pub fn cell_index_containing(&self, x: f64, y: f64) -> Option<usize> {
        self.cell_containing(x, y).map(|(r, c)| self.index(r, c))
    }

    pub fn ensure_aligned(&self, other: &AnalysisGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Alignment(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Integer class codes (NLCD legend) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryRaster {
    pub grid: AnalysisGrid,
    pub cells: Vec<i32>,
    pub nodata: i32,
}

impl CategoryRaster {
    pub fn new(grid: AnalysisGrid, cells: Vec<i32>, nodata: i32) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(Error::Alignment(format!(
                "{} cells for a {}x{} grid",
                cells.len(),
                grid.n_rows,
                grid.n_cols
            )));
        }
        Ok(Self {
            grid,
            cells,
            nodata,
        })
    }

    pub fn filled(grid: AnalysisGrid, code: i32, nodata: i32) -> Self {
        Self {
            grid,
            cells: vec![code; grid.len()],
            nodata,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.cells[self.grid.index(row, col)]
    }
}

/// Real-valued raster. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RealRaster {
    pub grid: AnalysisGrid,
    pub cells: Vec<f64>,
}

impl RealRaster {
    pub fn new(grid: AnalysisGrid, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(Error::Alignment(format!(
                "{} cells for a {}x{} grid",
                cells.len(),
                grid.n_rows,
                grid.n_cols
            )));
        }
        if let Some(i) = cells.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite raster value {} at cell {i}",
                cells[i]
            )));
        }
        Ok(Self { grid, cells })
    }

    pub fn zeros(grid: AnalysisGrid) -> Self {
        Self {
            grid,
            cells: vec![0.0; grid.len()],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[self.grid.index(row, col)]
    }

    pub fn max(&self) -> f64 {
        self.cells.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.cells.iter().fold(0.0, |a, v| a + v)
    }

    /// Sum over the cells set in `mask`, in row-major order.
    pub fn sum_masked(&self, mask: &Mask) -> Result<f64> {
        self.grid.ensure_aligned(&mask.grid)?;
        Ok(self
            .cells
            .iter()
            .zip(&mask.bits)
            .filter(|(_, &b)| b)
            .fold(0.0, |a, (v, _)| a + v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub grid: AnalysisGrid,
    pub bits: Vec<bool>,
}

// AnalysisGrid holds floats but is never NaN after construction.
impl Eq for AnalysisGrid {}

impl Mask {
    pub fn empty(grid: AnalysisGrid) -> Self {
        Self {
            grid,
            bits: vec![false; grid.len()],
        }
    }

    pub fn full(grid: AnalysisGrid) -> Self {
        Self {
            grid,
            bits: vec![true; grid.len()],
        }
    }

    pub fn from_bits(grid: AnalysisGrid, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::Alignment(format!(
                "{} mask bits for a {}x{} grid",
                bits.len(),
                grid.n_rows,
                grid.n_cols
            )));
        }
        Ok(Self { grid, bits })
    }

    pub fn from_indices(grid: AnalysisGrid, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(grid);
        for i in indices {
            m.bits[i] = true;
        }
        m
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[self.grid.index(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let i = self.grid.index(row, col);
        self.bits[i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    /// True when every set cell of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.grid == other.grid && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskOp {
    Union,
    Intersect,
    Difference,
}

pub fn mask_combine(a: &Mask, b: &Mask, op: MaskOp) -> Result<Mask> {
    a.grid.ensure_aligned(&b.grid)?;
    let f: fn(bool, bool) -> bool = match op {
        MaskOp::Union => |x, y| x || y,
        MaskOp::Intersect => |x, y| x && y,
        MaskOp::Difference => |x, y| x && !y,
    };
    let bits = a.bits.iter().zip(&b.bits).map(|(&x, &y)| f(x, y)).collect();
    Ok(Mask { grid: a.grid, bits })
}

/// Nearest-neighbour resampling of a categorical raster: every target cell
/// takes the class of the source cell containing its center. Target cells
/// whose center falls outside the source extent become nodata.
pub fn resample_nearest(src: &CategoryRaster, target: &AnalysisGrid) -> Result<CategoryRaster> {
    if src.grid.frame != target.frame {
        return Err(Error::Frame(format!(
            "{:?} vs {:?}",
            src.grid.frame, target.frame
        )));
    }
    if src.grid == *target {
        return Ok(src.clone());
    }
    let mut cells = Vec::with_capacity(target.len());
    for row in 0..target.n_rows {
        let y = target.center_y(row);
        for col in 0..target.n_cols {
            let x = target.center_x(col);
            cells.push(match src.grid.cell_containing(x, y) {
                Some((r, c)) => src.get(r, c),
                None => src.nodata,
            });
        }
    }
    Ok(CategoryRaster {
        grid: *target,
        cells,
        nodata: src.nodata,
    })
}

/// Pixel count per class inside each zone. Nodata cells are counted under the
/// nodata code so that each zone's counts sum to its cell count.
pub fn tabulate_area(classes: &CategoryRaster, zones: &[Mask]) -> Result<Vec<BTreeMap<i32, u64>>> {
    zones
        .iter()
        .map(|zone| {
            classes.grid.ensure_aligned(&zone.grid)?;
            let mut counts = BTreeMap::new();
            for i in zone.indices() {
                *counts.entry(classes.cells[i]).or_insert(0) += 1;
            }
            Ok(counts)
        })
        .collect()
}
