//! Land-cover-weighted dasymetric downscaling of census block populations.
//!
//! Each land-cover class carries a relative weight RA. Within a census block
//! the block population is shared among its cells in proportion to RA:
//!
//! ```text
//! pop(i) = Pop_b · RA(class(i)) / Σ_{j ∈ b} RA(class(j))
//! ```
//!
//! This is the mass-preserving reading of the adjusted-population formula
//! `(RA × Pop × 400) / (TotalPixel × ExpectedPopulation)`: with the expected
//! population taken per class from the block's pixel tabulation, the cell
//! area and pixel totals cancel and only the weight ratios remain.
//!
//! Blocks whose weights sum to zero spread their population uniformly; blocks
//! too small to capture a cell center put it in the cell under their centroid.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{multipolygon_cells, Point, Polygon};
use crate::grid::{AnalysisGrid, CategoryRaster, RealRaster};

pub const NLCD_OPEN_WATER: i32 = 11;
pub const NLCD_BARREN: i32 = 31;

/// Relative population weight per land-cover class code.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable(BTreeMap<i32, f64>);

impl WeightTable {
    pub fn new(weights: BTreeMap<i32, f64>) -> Result<Self> {
        if let Some((code, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Validation(format!(
                "weight for class {code} must be finite and non-negative, got {w}"
            )));
        }
        if !weights.values().any(|&w| w > 0.0) {
            return Err(Error::Validation("weight table has no positive weight".into()));
        }
        for code in [NLCD_OPEN_WATER, NLCD_BARREN] {
            if weights.get(&code).is_some_and(|&w| w != 0.0) {
                return Err(Error::Validation(format!(
                    "class {code} (open water / barren) must have weight 0"
                )));
            }
        }
        Ok(Self(weights))
    }

    /// Weights for the standard NLCD legend.
    pub fn nlcd_default() -> Self {
        Self(BTreeMap::from([
            (11, 0.0),  // open water
            (21, 26.0), // developed, open space
            (22, 10.0), // developed, low intensity
            (23, 15.0), // developed, medium intensity
            (24, 46.0), // developed, high intensity
            (31, 0.0),  // barren land
            (41, 3.0),  // deciduous forest
            (42, 3.0),  // evergreen forest
            (43, 4.0),  // mixed forest
            (52, 3.0),  // shrub/scrub
            (71, 4.0),  // grassland/herbaceous
            (81, 5.0),  // pasture/hay
            (82, 10.0), // cultivated crops
            (90, 1.0),  // woody wetlands
            (95, 1.0),  // emergent herbaceous wetlands
        ]))
    }

    pub fn get(&self, code: i32) -> Option<f64> {
        self.0.get(&code).copied()
    }

    pub fn lookup(&self, code: i32) -> Result<f64> {
        self.get(code).ok_or(Error::UnknownClass(code))
    }

    pub fn as_map(&self) -> &BTreeMap<i32, f64> {
        &self.0
    }

    /// Every weight multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|(&c, &w)| (c, w * k)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusBlock {
    pub block_id: String,
    /// One or more parts sharing the block population.
    pub boundary: Vec<Polygon>,
    pub pop: f64,
    pub tract_id: String,
}

impl CensusBlock {
    pub fn new(
        block_id: impl Into<String>,
        boundary: Vec<Polygon>,
        pop: f64,
        tract_id: impl Into<String>,
    ) -> Result<Self> {
        let block_id = block_id.into();
        if !(pop.is_finite() && pop >= 0.0) {
            return Err(Error::Validation(format!(
                "block {block_id}: population must be finite and >= 0, got {pop}"
            )));
        }
        if boundary.is_empty() {
            return Err(Error::Geometry(format!("block {block_id} has no boundary")));
        }
        Ok(Self {
            block_id,
            boundary,
            pop,
            tract_id: tract_id.into(),
        })
    }

    /// Area-weighted centroid over all parts.
    pub fn centroid(&self) -> Point {
        let (mut sx, mut sy, mut sa) = (0.0, 0.0, 0.0);
        for part in &self.boundary {
            let (c, a) = part.centroid();
            sx += c.x * a;
            sy += c.y * a;
            sa += a;
        }
        if sa > 0.0 {
            Point::new(sx / sa, sy / sa)
        } else {
            self.boundary[0].centroid().0
        }
    }
}

/// RA of every cell; nodata cells get 0.
pub fn allocation_factor_raster(landcover: &CategoryRaster, weights: &WeightTable) -> Result<RealRaster> {
    let cells = landcover
        .cells
        .iter()
        .map(|&code| {
            if code == landcover.nodata {
                Ok(0.0)
            } else {
                weights.lookup(code)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    RealRaster::new(landcover.grid, cells)
}

pub const NO_BLOCK: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockTabulation {
    /// Owning block index per cell, or [`NO_BLOCK`].
    pub owner: Vec<u32>,
    /// Row-major cells owned by each block.
    pub cells: Vec<Vec<usize>>,
    /// Pixel count per land-cover class per block.
    pub counts: Vec<BTreeMap<i32, u64>>,
    /// Cells claimed by more than one block (kept by the first).
    pub overlaps: usize,
}

impl BlockTabulation {
    /// Blocks whose boundary captures no cell center.
    pub fn tiny_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, c)| c.is_empty()).map(|(i, _)| i)
    }
}

/// Assigns cells to blocks by the center rule and counts classes per block.
/// A cell inside several blocks belongs to the first one listed.
pub fn tabulate_block_classes(
    landcover: &CategoryRaster,
    blocks: &[CensusBlock],
    grid: &AnalysisGrid,
) -> Result<BlockTabulation> {
    landcover.grid.ensure_aligned(grid)?;
    if blocks.len() >= NO_BLOCK as usize {
        return Err(Error::Validation(format!("too many blocks: {}", blocks.len())));
    }
    let candidates: Vec<Vec<usize>> = blocks
        .par_iter()
        .map(|b| multipolygon_cells(&b.boundary, grid))
        .collect();
    let mut owner = vec![NO_BLOCK; grid.len()];
    let mut overlaps = 0;
    let mut cells = Vec::with_capacity(blocks.len());
    let mut counts = Vec::with_capacity(blocks.len());
    for (b, cand) in candidates.into_iter().enumerate() {
        let mut mine = Vec::with_capacity(cand.len());
        let mut tally = BTreeMap::new();
        for i in cand {
            if owner[i] == NO_BLOCK {
                owner[i] = b as u32;
                mine.push(i);
                *tally.entry(landcover.cells[i]).or_insert(0) += 1;
            } else {
                overlaps += 1;
            }
        }
        if mine.is_empty() {
            log::debug!("block {} captures no cell center", blocks[b].block_id);
        }
        cells.push(mine);
        counts.push(tally);
    }
    if overlaps > 0 {
        log::warn!("{overlaps} cell(s) claimed by more than one block; first block kept");
    }
    Ok(BlockTabulation {
        owner,
        cells,
        counts,
        overlaps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// Weights summed to zero; population spread uniformly.
    UniformZeroWeight,
    /// No cell center captured; population placed in the centroid cell.
    CentroidCell,
    /// No cell center captured and the centroid lies off the grid; population dropped.
    OutsideGrid,
}

impl Fallback {
    pub fn as_str(&self) -> &'static str {
        match self {
            Fallback::UniformZeroWeight => "uniform_zero_weight",
            Fallback::CentroidCell => "centroid_cell",
            Fallback::OutsideGrid => "outside_grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockAllocation {
    pub fallback: Option<Fallback>,
    /// Population the block's owned cells must hold: its own plus any
    /// centroid-fallback blocks that landed in them.
    pub expected: f64,
    /// For centroid-fallback blocks whose cell belongs to another block.
    pub host: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGrid {
    /// Persons per cell.
    pub raster: RealRaster,
    /// Block index owning each cell, or [`NO_BLOCK`].
    pub owner: Vec<u32>,
    pub allocations: Vec<BlockAllocation>,
}

impl PopulationGrid {
    pub fn grid(&self) -> &AnalysisGrid {
        &self.raster.grid
    }
}

pub fn downscale(
    blocks: &[CensusBlock],
    landcover: &CategoryRaster,
    weights: &WeightTable,
    grid: &AnalysisGrid,
) -> Result<PopulationGrid> {
    let tab = tabulate_block_classes(landcover, blocks, grid)?;
    downscale_tabulated(blocks, landcover, weights, tab)
}

pub fn downscale_tabulated(
    blocks: &[CensusBlock],
    landcover: &CategoryRaster,
    weights: &WeightTable,
    tab: BlockTabulation,
) -> Result<PopulationGrid> {
    let grid = landcover.grid;
    let BlockTabulation { mut owner, cells, .. } = tab;
    let ra = |i: usize| -> Result<f64> {
        let code = landcover.cells[i];
        if code == landcover.nodata {
            Ok(0.0)
        } else {
            weights.lookup(code)
        }
    };

    let mut pop = vec![0.0; grid.len()];
    let mut allocations: Vec<BlockAllocation> = blocks
        .iter()
        .map(|b| BlockAllocation {
            fallback: None,
            expected: b.pop,
            host: None,
        })
        .collect();

    for (b, block) in blocks.iter().enumerate() {
        let mine = &cells[b];
        if mine.is_empty() {
            continue;
        }
        let ras = mine.iter().map(|&i| ra(i)).collect::<Result<Vec<_>>>()?;
        if block.pop == 0.0 {
            continue;
        }
        let total: f64 = ras.iter().sum();
        if total > 0.0 {
            for (&i, &w) in mine.iter().zip(&ras) {
                pop[i] = block.pop * w / total;
            }
        } else {
            log::warn!(
                "block {}: all cells have zero weight; spreading {} persons uniformly",
                block.block_id,
                block.pop
            );
            allocations[b].fallback = Some(Fallback::UniformZeroWeight);
            let each = block.pop / mine.len() as f64;
            for &i in mine {
                pop[i] = each;
            }
        }
    }

    // centroid fallback runs after every regular block has its cells
    for (b, block) in blocks.iter().enumerate() {
        if !cells[b].is_empty() {
            continue;
        }
        let c = block.centroid();
        match grid.cell_index_containing(c.x, c.y) {
            Some(i) => {
                allocations[b].fallback = Some(Fallback::CentroidCell);
                pop[i] += block.pop;
                if owner[i] == NO_BLOCK {
                    owner[i] = b as u32;
                } else {
                    let host = owner[i] as usize;
                    allocations[b].host = Some(host);
                    allocations[host].expected += block.pop;
                }
            }
            None => {
                if block.pop > 0.0 {
                    log::warn!(
                        "block {}: centroid outside the grid; {} persons not placed",
                        block.block_id,
                        block.pop
                    );
                }
                allocations[b].fallback = Some(Fallback::OutsideGrid);
            }
        }
    }

    Ok(PopulationGrid {
        raster: RealRaster::new(grid, pop)?,
        owner,
        allocations,
    })
}

pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MassEntry {
    pub block_id: String,
    pub expected: f64,
    pub allocated: f64,
    pub rel_error: f64,
    pub fallback: Option<Fallback>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub entries: Vec<MassEntry>,
}

impl MassReport {
    /// Non-fallback blocks whose relative error exceeds [`MASS_TOLERANCE`].
    pub fn failures(&self) -> impl Iterator<Item = &MassEntry> {
        self.entries
            .iter()
            .filter(|e| e.fallback.is_none() && !(e.rel_error <= MASS_TOLERANCE))
    }

    pub fn max_rel_error(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.fallback.is_none())
            .map(|e| e.rel_error)
            .fold(0.0, f64::max)
    }

    pub fn fallback_count(&self) -> usize {
        self.entries.iter().filter(|e| e.fallback.is_some()).count()
    }

    pub fn is_ok(&self) -> bool {
        self.failures().next().is_none()
    }
}

/// Per-block `|Σ cells − expected| / max(expected, 1)`.
pub fn validate_mass(blocks: &[CensusBlock], popgrid: &PopulationGrid) -> Result<MassReport> {
    if blocks.len() != popgrid.allocations.len() {
        return Err(Error::Validation(format!(
            "{} blocks but population grid was built from {}",
            blocks.len(),
            popgrid.allocations.len()
        )));
    }
    let mut sums = vec![0.0; blocks.len()];
    for (&o, &v) in popgrid.owner.iter().zip(&popgrid.raster.cells) {
        if o != NO_BLOCK {
            sums[o as usize] += v;
        }
    }
    let entries = blocks
        .iter()
        .zip(&popgrid.allocations)
        .zip(sums)
        .map(|((block, alloc), sum)| {
            let allocated = match alloc.fallback {
                Some(Fallback::CentroidCell) if alloc.host.is_some() => alloc.expected,
                Some(Fallback::OutsideGrid) => 0.0,
                _ => sum,
            };
            MassEntry {
                block_id: block.block_id.clone(),
                expected: alloc.expected,
                allocated,
                rel_error: (allocated - alloc.expected).abs() / alloc.expected.max(1.0),
                fallback: alloc.fallback,
            }
        })
        .collect();
    Ok(MassReport { entries })
}
