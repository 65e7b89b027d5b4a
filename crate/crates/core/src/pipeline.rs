//! Manifest-driven runs of the three assessment steps: daily perimeters,
//! population downscaling and impact accounting.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dasymetric::{downscale, validate_mass, CensusBlock, MassReport, PopulationGrid, WeightTable};
use crate::error::{Error, Result};
use crate::fire::{extract_daily_perimeters_in, group_by_date, DailyPerimeter, KdeParams};
use crate::geometry::{rasterize_polygons, trace_mask_boundary, Polygon};
use crate::grid::{mask_combine, resample_nearest, AnalysisGrid, CategoryRaster, Mask, MaskOp};
use crate::impact::{
    assess_district, BuildingIndex, CostModel, DailyImpactRecord, District, ExposureMode, ImpactInputs, RoadIndex,
    TractDemographics,
};
use crate::io::{self, Manifest};

/// Land cover on the analysis grid, resampled when the file uses another
/// lattice.
pub fn load_landcover(m: &Manifest, grid: &AnalysisGrid) -> Result<CategoryRaster> {
    let lc = io::read_category_grid(&m.resolve(&m.landcover), m.frame())?;
    if lc.grid == *grid {
        Ok(lc)
    } else {
        log::info!("resampling land cover from {}x{} to the analysis grid", lc.grid.n_rows, lc.grid.n_cols);
        resample_nearest(&lc, grid)
    }
}

pub fn load_weights(m: &Manifest, override_path: Option<&std::path::Path>) -> Result<WeightTable> {
    match (override_path, &m.weights) {
        (Some(p), _) => io::read_weights(p),
        (None, Some(p)) => io::read_weights(&m.resolve(p)),
        (None, None) => Ok(WeightTable::nlcd_default()),
    }
}

pub fn load_costs(m: &Manifest, override_path: Option<&std::path::Path>) -> Result<CostModel> {
    match (override_path, &m.costs) {
        (Some(p), _) => io::read_costs(p),
        (None, Some(p)) => io::read_costs(&m.resolve(p)),
        (None, None) => Err(Error::Validation(
            "no cost model: declare `costs` in the manifest or pass --costs".into(),
        )),
    }
}

/// Manifest KDE settings, or the defaults when the manifest has none.
pub fn kde_params(m: &Manifest) -> KdeParams {
    m.kde.unwrap_or_default()
}

/// One mask per district; districts may not share cells.
pub fn district_masks(districts: &[District], grid: &AnalysisGrid) -> Result<Vec<Mask>> {
    let masks: Vec<Mask> = districts.iter().map(|d| rasterize_polygons(&d.perimeter, grid)).collect();
    let mut seen = Mask::empty(*grid);
    for (d, m) in districts.iter().zip(&masks) {
        if let Some(i) = m.indices().find(|&i| seen.bits[i]) {
            let (r, c) = grid.row_col(i);
            return Err(Error::Validation(format!(
                "district `{}` overlaps another district at cell ({r}, {c})",
                d.name
            )));
        }
        seen = mask_combine(&seen, m, MaskOp::Union)?;
    }
    Ok(masks)
}

#[derive(Debug, Clone)]
pub struct PerimeterRun {
    pub grid: AnalysisGrid,
    pub districts: Vec<District>,
    pub masks: Vec<Mask>,
    /// Event-wide daily masks clipped to the union of all districts.
    pub days: Vec<DailyPerimeter>,
}

impl PerimeterRun {
    /// Traced new-burn polygons of `day` inside district `d`.
    pub fn district_polygons(&self, d: usize, day: usize) -> Result<Vec<Polygon>> {
        Ok(trace_mask_boundary(&mask_combine(&self.days[day].new_burn, &self.masks[d], MaskOp::Intersect)?))
    }
}

/// Step 1: daily new-burn and cumulative extents. Detections are smoothed
/// over the whole grid, so the relative threshold refers to the day's
/// event-wide peak density.
pub fn run_perimeters(m: &Manifest, params: &KdeParams) -> Result<PerimeterRun> {
    let grid = m.grid()?;
    let detections = io::read_detections(&m.resolve(&m.detections), m.frame())?;
    let districts = io::read_districts(&m.resolve(&m.official_perimeter), m.frame())?;
    let masks = district_masks(&districts, &grid)?;
    let clip = masks
        .iter()
        .try_fold(Mask::empty(grid), |acc, mk| mask_combine(&acc, mk, MaskOp::Union))?;
    let by_day = group_by_date(&detections, m.window())?;
    let days = extract_daily_perimeters_in(&by_day, &clip, params)?;
    log::info!("{} detections over {} days", detections.len(), days.len());
    Ok(PerimeterRun {
        grid,
        districts,
        masks,
        days,
    })
}

#[derive(Debug, Clone)]
pub struct DownscaleRun {
    pub blocks: Vec<CensusBlock>,
    pub landcover: CategoryRaster,
    pub population: PopulationGrid,
    pub mass: MassReport,
}

/// Step 2: block populations onto the analysis grid.
pub fn run_downscale(m: &Manifest, weights: &WeightTable) -> Result<DownscaleRun> {
    let grid = m.grid()?;
    let landcover = load_landcover(m, &grid)?;
    let blocks = io::read_blocks(&m.resolve(&m.blocks), m.frame())?;
    let population = downscale(&blocks, &landcover, weights, &grid)?;
    let mass = validate_mass(&blocks, &population)?;
    Ok(DownscaleRun {
        blocks,
        landcover,
        population,
        mass,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssessOptions {
    pub exposure: ExposureMode,
}

/// Step 3: daily records for every district, ordered by (date, district).
pub fn run_assess(
    perims: &PerimeterRun,
    pop: &DownscaleRun,
    m: &Manifest,
    costs: &CostModel,
    opts: AssessOptions,
) -> Result<Vec<DailyImpactRecord>> {
    let grid = perims.grid;
    let frame = m.frame();
    let roads = match &m.roads {
        Some(p) => io::read_roads(&m.resolve(p), frame)?,
        None => Vec::new(),
    };
    let buildings = match &m.buildings {
        Some(p) => io::read_buildings(&m.resolve(p), frame)?,
        None => Vec::new(),
    };
    let pois = match &m.pois {
        Some(p) => io::read_pois(&m.resolve(p), frame)?,
        None => Vec::new(),
    };
    let tracts: BTreeMap<String, TractDemographics> = match &m.demographics {
        Some(p) => io::read_demographics(&m.resolve(p))?,
        None => BTreeMap::new(),
    };
    let road_index = RoadIndex::new(&roads, &grid);
    let building_index = BuildingIndex::new(&buildings, &grid);
    let inputs = ImpactInputs {
        landcover: &pop.landcover,
        popgrid: &pop.population,
        blocks: &pop.blocks,
        roads: &road_index,
        buildings: &building_index,
        pois: &pois,
        tracts: &tracts,
        costs,
    };
    let per_district: Vec<Vec<DailyImpactRecord>> = perims
        .districts
        .par_iter()
        .zip(&perims.masks)
        .map(|(d, mask)| assess_district(&d.name, mask, &perims.days, &inputs, opts.exposure))
        .collect::<Result<_>>()?;
    let mut records: Vec<DailyImpactRecord> = per_district.into_iter().flatten().collect();
    records.sort_by(|a, b| (a.date, &a.district).cmp(&(b.date, &b.district)));
    Ok(records)
}

/// Running totals per district: each record holds everything from the
/// first day through its own date.
pub fn cumulative_records(records: &[DailyImpactRecord]) -> Vec<DailyImpactRecord> {
    let mut sorted: Vec<&DailyImpactRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.district, a.date).cmp(&(&b.district, b.date)));
    let mut out: Vec<DailyImpactRecord> = Vec::with_capacity(records.len());
    let mut acc: Option<DailyImpactRecord> = None;
    for r in sorted {
        let mut next = match acc.take() {
            Some(prev) if prev.district == r.district => prev,
            _ => DailyImpactRecord::empty(r.date, r.district.clone()),
        };
        next.date = r.date;
        next.burned_cells += r.burned_cells;
        for (k, v) in &r.land_loss {
            *next.land_loss.entry(*k).or_default() += *v;
        }
        for (k, v) in &r.road_loss {
            *next.road_loss.entry(k.clone()).or_default() += *v;
        }
        for (k, v) in &r.road_length_m {
            *next.road_length_m.entry(k.clone()).or_default() += *v;
        }
        next.building_loss += r.building_loss;
        next.building_count += r.building_count;
        for (k, v) in &r.poi_count {
            *next.poi_count.entry(k.clone()).or_default() += *v;
        }
        next.exposed_population += r.exposed_population;
        let mut d = next.demographics.values();
        for (a, b) in d.iter_mut().zip(r.demographics.values()) {
            *a += b;
        }
        next.demographics = crate::impact::DemographicCounts::from_values(d);
        out.push(next.clone());
        acc = Some(next);
    }
    out.sort_by(|a, b| (a.date, &a.district).cmp(&(b.date, &b.district)));
    out
}
