//! Natural-, built- and social-environment accounting for daily burn masks.
//!
//! Money is kept in integer cents. Unit prices are converted to cents per
//! priced piece (one land cell, one road piece inside one cell, one building)
//! and rounded once, so every loss is additive over any partition of the burn.

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dasymetric::{CensusBlock, PopulationGrid, NO_BLOCK};
use crate::error::{Error, Result};
use crate::fire::DailyPerimeter;
use crate::geometry::{polygon_area, polygon_cells, rasterize_polyline, Point, PolyLine, Polygon};
use crate::grid::{AnalysisGrid, CategoryRaster, Mask};

/// An amount of US dollars held as whole cents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cents(pub i64);

impl Cents {
    pub const ZERO: Cents = Cents(0);

    /// Rounds a dollar amount to the nearest cent (half away from zero).
    pub fn from_dollars(dollars: f64) -> Self {
        Cents((dollars * 100.0).round() as i64)
    }

    pub fn dollars(&self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl Add for Cents {
    type Output = Cents;
    fn add(self, rhs: Cents) -> Cents {
        Cents(self.0 + rhs.0)
    }
}

impl AddAssign for Cents {
    fn add_assign(&mut self, rhs: Cents) {
        self.0 += rhs.0;
    }
}

impl Sum for Cents {
    fn sum<I: Iterator<Item = Cents>>(iter: I) -> Cents {
        Cents(iter.map(|c| c.0).sum())
    }
}

impl<'a> Sum<&'a Cents> for Cents {
    fn sum<I: Iterator<Item = &'a Cents>>(iter: I) -> Cents {
        Cents(iter.map(|c| c.0).sum())
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl FromStr for Cents {
    type Err = String;

    /// Parses `123`, `123.4` or `123.45` (optionally negative) exactly.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
        if whole.is_empty() || frac.len() > 2 || !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("not a dollar amount: `{s}`"));
        }
        let whole: i64 = whole.parse().map_err(|_| format!("dollar amount out of range: `{s}`"))?;
        let frac: i64 = match frac.len() {
            0 => 0,
            1 => frac.parse::<i64>().unwrap() * 10,
            _ => frac.parse().unwrap(),
        };
        let v = whole
            .checked_mul(100)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(|| format!("dollar amount out of range: `{s}`"))?;
        Ok(Cents(if neg { -v } else { v }))
    }
}

/// Unit costs used to turn burned area, length and footprint into dollars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// $/m² per land-cover class.
    pub land_cost: BTreeMap<i32, f64>,
    /// $/m per road class.
    pub road_cost: BTreeMap<String, f64>,
    /// $/m² of building footprint.
    pub building_cost: f64,
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String, v: f64| {
            Error::Validation(format!("cost for {what} must be finite and >= 0, got {v}"))
        };
        for (c, &v) in &self.land_cost {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(format!("land class {c}"), v));
            }
        }
        for (c, &v) in &self.road_cost {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(format!("road class {c}"), v));
            }
        }
        if !(self.building_cost.is_finite() && self.building_cost >= 0.0) {
            return Err(bad("buildings".into(), self.building_cost));
        }
        Ok(())
    }

    /// Illustrative prices for demos and synthetic scenarios. Not calibrated
    /// to any real event.
    pub fn demo_default() -> Self {
        let land = [
            (11, 0.0),
            (21, 150.0),
            (22, 300.0),
            (23, 450.0),
            (24, 600.0),
            (31, 0.0),
            (41, 2.0),
            (42, 2.0),
            (43, 2.0),
            (52, 1.5),
            (71, 1.0),
            (81, 3.0),
            (82, 4.0),
            (90, 1.0),
            (95, 1.0),
        ];
        let roads = [
            ("footway", 120.0),
            ("pedestrian", 150.0),
            ("primary", 1200.0),
            ("residential", 400.0),
            ("secondary", 900.0),
            ("service", 250.0),
            ("tertiary", 700.0),
            ("track", 60.0),
            ("unclassified", 300.0),
        ];
        Self {
            land_cost: land.into_iter().collect(),
            road_cost: roads.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            building_cost: 3000.0,
        }
    }

    /// Cost of one fully burned cell of `class`, in cents.
    pub fn land_cell_cents(&self, class: i32, cell_area: f64) -> Result<Cents> {
        let unit = self.land_cost.get(&class).ok_or(Error::UnpricedLandClass(class))?;
        Ok(Cents::from_dollars(cell_area * unit))
    }

    pub fn road_unit(&self, class: &str) -> Result<f64> {
        self.road_cost
            .get(class)
            .copied()
            .ok_or_else(|| Error::UnpricedRoadClass(class.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadFeature {
    pub class: String,
    pub line: PolyLine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingFeature {
    pub id: String,
    pub footprint: Polygon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoiFeature {
    pub category: String,
    pub location: Point,
}

/// A named study area and its official fire perimeter.
#[derive(Debug, Clone, PartialEq)]
pub struct District {
    pub name: String,
    pub perimeter: Vec<Polygon>,
}

/// Burned land value by land-cover class.
pub fn land_use_loss(new_burn: &Mask, landcover: &CategoryRaster, costs: &CostModel) -> Result<BTreeMap<i32, Cents>> {
    landcover.grid.ensure_aligned(&new_burn.grid)?;
    let mut counts: BTreeMap<i32, i64> = BTreeMap::new();
    for i in new_burn.indices() {
        let class = landcover.cells[i];
        if class != landcover.nodata {
            *counts.entry(class).or_insert(0) += 1;
        }
    }
    let area = landcover.grid.cell_area();
    counts
        .into_iter()
        .map(|(class, n)| Ok((class, Cents(n * costs.land_cell_cents(class, area)?.0))))
        .collect()
}

/// Roads cut into per-cell pieces once, reused across days.
#[derive(Debug, Clone)]
pub struct RoadIndex {
    grid: AnalysisGrid,
    /// (road class, cell, length in m)
    pieces: Vec<(usize, usize, f64)>,
    classes: Vec<String>,
}

impl RoadIndex {
    pub fn new(roads: &[RoadFeature], grid: &AnalysisGrid) -> Self {
        let mut classes: Vec<String> = roads.iter().map(|r| r.class.clone()).collect();
        classes.sort();
        classes.dedup();
        let mut pieces = Vec::new();
        for road in roads {
            let ci = classes.binary_search(&road.class).unwrap();
            for (cell, len) in rasterize_polyline(&road.line, grid) {
                pieces.push((ci, cell, len));
            }
        }
        Self {
            grid: *grid,
            pieces,
            classes,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RoadLoss {
    pub length_m: f64,
    pub loss: Cents,
}

pub fn road_loss(new_burn: &Mask, roads: &[RoadFeature], costs: &CostModel) -> Result<BTreeMap<String, RoadLoss>> {
    road_loss_indexed(new_burn, &RoadIndex::new(roads, &new_burn.grid), costs)
}

/// Burned road length and value by road class. Each road piece inside a
/// burned cell is priced and rounded to cents separately.
pub fn road_loss_indexed(new_burn: &Mask, index: &RoadIndex, costs: &CostModel) -> Result<BTreeMap<String, RoadLoss>> {
    index.grid.ensure_aligned(&new_burn.grid)?;
    let mut per_class: BTreeMap<usize, RoadLoss> = BTreeMap::new();
    for &(ci, cell, len) in &index.pieces {
        if !new_burn.bits[cell] {
            continue;
        }
        let unit = costs.road_unit(&index.classes[ci])?;
        let e = per_class.entry(ci).or_default();
        e.length_m += len;
        e.loss += Cents::from_dollars(len * unit);
    }
    Ok(per_class
        .into_iter()
        .map(|(ci, l)| (index.classes[ci].clone(), l))
        .collect())
}

/// Footprint cells and prices per building.
#[derive(Debug, Clone)]
pub struct BuildingIndex {
    grid: AnalysisGrid,
    cells: Vec<Vec<usize>>,
    areas: Vec<f64>,
}

impl BuildingIndex {
    /// Footprints that capture no cell center are represented by the cell
    /// under their centroid.
    pub fn new(buildings: &[BuildingFeature], grid: &AnalysisGrid) -> Self {
        let mut cells = Vec::with_capacity(buildings.len());
        let mut areas = Vec::with_capacity(buildings.len());
        for b in buildings {
            let mut c = polygon_cells(&b.footprint, grid);
            if c.is_empty() {
                let (centroid, _) = b.footprint.centroid();
                c.extend(grid.cell_index_containing(centroid.x, centroid.y));
            }
            cells.push(c);
            areas.push(polygon_area(&b.footprint));
        }
        Self {
            grid: *grid,
            cells,
            areas,
        }
    }

    pub fn cells(&self, building: usize) -> &[usize] {
        &self.cells[building]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildingLoss {
    pub count: u64,
    pub loss: Cents,
}

pub fn building_loss(
    cumulative_before: &Mask,
    new_burn: &Mask,
    buildings: &[BuildingFeature],
    costs: &CostModel,
) -> Result<BuildingLoss> {
    building_loss_indexed(cumulative_before, new_burn, &BuildingIndex::new(buildings, &new_burn.grid), costs)
}

/// Buildings first reached by fire in `new_burn`. A building with any cell
/// in `cumulative_before` was already counted on an earlier day.
pub fn building_loss_indexed(
    cumulative_before: &Mask,
    new_burn: &Mask,
    index: &BuildingIndex,
    costs: &CostModel,
) -> Result<BuildingLoss> {
    index.grid.ensure_aligned(&new_burn.grid)?;
    index.grid.ensure_aligned(&cumulative_before.grid)?;
    let mut out = BuildingLoss::default();
    for (cells, &area) in index.cells.iter().zip(&index.areas) {
        let hit = cells.iter().any(|&i| new_burn.bits[i]);
        if hit && !cells.iter().any(|&i| cumulative_before.bits[i]) {
            out.count += 1;
            out.loss += Cents::from_dollars(area * costs.building_cost);
        }
    }
    Ok(out)
}

/// POIs whose cell is burned, by category.
pub fn poi_exposure(new_burn: &Mask, pois: &[PoiFeature]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for poi in pois {
        if let Some(i) = new_burn.grid.cell_index_containing(poi.location.x, poi.location.y) {
            if new_burn.bits[i] {
                *counts.entry(poi.category.clone()).or_insert(0) += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exposure {
    pub persons: f64,
}

impl Exposure {
    /// Nearest whole person, for display.
    pub fn rounded(&self) -> u64 {
        self.persons.round() as u64
    }
}

pub fn population_exposure(new_burn: &Mask, popgrid: &PopulationGrid) -> Result<Exposure> {
    Ok(Exposure {
        persons: popgrid.raster.sum_masked(new_burn)?,
    })
}

/// Exposed persons per owning block index.
pub fn exposure_by_block(new_burn: &Mask, popgrid: &PopulationGrid) -> Result<BTreeMap<usize, f64>> {
    popgrid.raster.grid.ensure_aligned(&new_burn.grid)?;
    let mut out = BTreeMap::new();
    for i in new_burn.indices() {
        let o = popgrid.owner[i];
        if o != NO_BLOCK {
            *out.entry(o as usize).or_insert(0.0) += popgrid.raster.cells[i];
        }
    }
    Ok(out)
}

/// Population shares for one census tract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractDemographics {
    pub tract_id: String,
    pub female_share: f64,
    pub male_share: f64,
    pub age_0_17: f64,
    pub age_18_64: f64,
    pub age_65_plus: f64,
    pub white: f64,
    pub asian: f64,
    pub black: f64,
    pub multiracial: f64,
    pub other: f64,
}

pub const SHARE_TOLERANCE: f64 = 1e-6;

impl TractDemographics {
    pub fn validate(&self) -> Result<()> {
        let groups: [(&str, &[f64]); 3] = [
            ("gender", &[self.female_share, self.male_share]),
            ("age", &[self.age_0_17, self.age_18_64, self.age_65_plus]),
            ("race", &[self.white, self.asian, self.black, self.multiracial, self.other]),
        ];
        for (name, shares) in groups {
            if shares.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err(Error::Validation(format!(
                    "tract {}: {name} shares must lie in [0, 1]",
                    self.tract_id
                )));
            }
            let sum: f64 = shares.iter().sum();
            if (sum - 1.0).abs() > SHARE_TOLERANCE {
                return Err(Error::Validation(format!(
                    "tract {}: {name} shares sum to {sum}, expected 1",
                    self.tract_id
                )));
            }
        }
        Ok(())
    }
}

/// Exposed persons split by gender, age band and race.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DemographicCounts {
    pub female: f64,
    pub male: f64,
    pub age_0_17: f64,
    pub age_18_64: f64,
    pub age_65_plus: f64,
    pub white: f64,
    pub asian: f64,
    pub black: f64,
    pub multiracial: f64,
    pub other: f64,
}

impl DemographicCounts {
    pub const FIELDS: [&'static str; 10] = [
        "female",
        "male",
        "age_0_17",
        "age_18_64",
        "age_65_plus",
        "white",
        "asian",
        "black",
        "multiracial",
        "other",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.female,
            self.male,
            self.age_0_17,
            self.age_18_64,
            self.age_65_plus,
            self.white,
            self.asian,
            self.black,
            self.multiracial,
            self.other,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        Self {
            female: v[0],
            male: v[1],
            age_0_17: v[2],
            age_18_64: v[3],
            age_65_plus: v[4],
            white: v[5],
            asian: v[6],
            black: v[7],
            multiracial: v[8],
            other: v[9],
        }
    }

    /// Totals of the gender, age and race groups.
    pub fn group_sums(&self) -> [f64; 3] {
        [
            self.female + self.male,
            self.age_0_17 + self.age_18_64 + self.age_65_plus,
            self.white + self.asian + self.black + self.multiracial + self.other,
        ]
    }

    fn add_scaled(&mut self, t: &TractDemographics, persons: f64) {
        // shares are renormalised per group so each group sums to `persons`
        let g = t.female_share + t.male_share;
        let a = t.age_0_17 + t.age_18_64 + t.age_65_plus;
        let r = t.white + t.asian + t.black + t.multiracial + t.other;
        self.female += persons * t.female_share / g;
        self.male += persons * t.male_share / g;
        self.age_0_17 += persons * t.age_0_17 / a;
        self.age_18_64 += persons * t.age_18_64 / a;
        self.age_65_plus += persons * t.age_65_plus / a;
        self.white += persons * t.white / r;
        self.asian += persons * t.asian / r;
        self.black += persons * t.black / r;
        self.multiracial += persons * t.multiracial / r;
        self.other += persons * t.other / r;
    }
}

/// Applies each tract's shares to the persons exposed in its blocks.
pub fn demographic_breakdown(
    exposure_by_block: &BTreeMap<usize, f64>,
    blocks: &[CensusBlock],
    tracts: &BTreeMap<String, TractDemographics>,
) -> Result<DemographicCounts> {
    let mut by_tract: BTreeMap<&str, f64> = BTreeMap::new();
    for (&b, &persons) in exposure_by_block {
        let block = blocks
            .get(b)
            .ok_or_else(|| Error::Validation(format!("block index {b} out of range")))?;
        if persons > 0.0 {
            *by_tract.entry(block.tract_id.as_str()).or_insert(0.0) += persons;
        }
    }
    let mut counts = DemographicCounts::default();
    for (tract, persons) in by_tract {
        let t = tracts
            .get(tract)
            .ok_or_else(|| Error::MissingTract(tract.to_string()))?;
        counts.add_scaled(t, persons);
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyImpactRecord {
    pub date: NaiveDate,
    pub district: String,
    pub burned_cells: u64,
    pub land_loss: BTreeMap<i32, Cents>,
    pub road_loss: BTreeMap<String, Cents>,
    pub road_length_m: BTreeMap<String, f64>,
    pub building_loss: Cents,
    pub building_count: u64,
    pub poi_count: BTreeMap<String, u64>,
    pub exposed_population: f64,
    pub demographics: DemographicCounts,
}

impl DailyImpactRecord {
    pub fn empty(date: NaiveDate, district: impl Into<String>) -> Self {
        Self {
            date,
            district: district.into(),
            burned_cells: 0,
            land_loss: BTreeMap::new(),
            road_loss: BTreeMap::new(),
            road_length_m: BTreeMap::new(),
            building_loss: Cents::ZERO,
            building_count: 0,
            poi_count: BTreeMap::new(),
            exposed_population: 0.0,
            demographics: DemographicCounts::default(),
        }
    }

    pub fn land_loss_total(&self) -> Cents {
        self.land_loss.values().sum()
    }

    pub fn road_loss_total(&self) -> Cents {
        self.road_loss.values().sum()
    }

    pub fn poi_total(&self) -> u64 {
        self.poi_count.values().sum()
    }

    pub fn total_loss(&self) -> Cents {
        self.land_loss_total() + self.road_loss_total() + self.building_loss
    }
}

/// Which daily mask drives exposure (population, demographics, POIs).
/// Dollar losses always use the new-burn mask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ExposureMode {
    #[default]
    NewBurn,
    ActiveExtent,
}

/// Every layer the daily accounting reads.
pub struct ImpactInputs<'a> {
    pub landcover: &'a CategoryRaster,
    pub popgrid: &'a PopulationGrid,
    pub blocks: &'a [CensusBlock],
    pub roads: &'a RoadIndex,
    pub buildings: &'a BuildingIndex,
    pub pois: &'a [PoiFeature],
    pub tracts: &'a BTreeMap<String, TractDemographics>,
    pub costs: &'a CostModel,
}

/// One record per day for the district covering `district_mask`.
pub fn assess_district(
    name: &str,
    district_mask: &Mask,
    perimeters: &[DailyPerimeter],
    inputs: &ImpactInputs<'_>,
    mode: ExposureMode,
) -> Result<Vec<DailyImpactRecord>> {
    use crate::grid::{mask_combine, MaskOp};
    let grid = district_mask.grid;
    let mut before = Mask::empty(grid);
    let mut out = Vec::with_capacity(perimeters.len());
    for day in perimeters {
        let burn = mask_combine(&day.new_burn, district_mask, MaskOp::Intersect)?;
        let exposure_mask = match mode {
            ExposureMode::NewBurn => burn.clone(),
            ExposureMode::ActiveExtent => mask_combine(&day.active, district_mask, MaskOp::Intersect)?,
        };
        let roads = road_loss_indexed(&burn, inputs.roads, inputs.costs)?;
        let buildings = building_loss_indexed(&before, &burn, inputs.buildings, inputs.costs)?;
        let by_block = exposure_by_block(&exposure_mask, inputs.popgrid)?;
        out.push(DailyImpactRecord {
            date: day.date,
            district: name.to_string(),
            burned_cells: burn.count() as u64,
            land_loss: land_use_loss(&burn, inputs.landcover, inputs.costs)?,
            road_loss: roads.iter().map(|(k, v)| (k.clone(), v.loss)).collect(),
            road_length_m: roads.iter().map(|(k, v)| (k.clone(), v.length_m)).collect(),
            building_loss: buildings.loss,
            building_count: buildings.count,
            poi_count: poi_exposure(&exposure_mask, inputs.pois),
            exposed_population: population_exposure(&exposure_mask, inputs.popgrid)?.persons,
            demographics: demographic_breakdown(&by_block, inputs.blocks, inputs.tracts)?,
        });
        before = day.cumulative.clone();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub date: NaiveDate,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Totals {
    pub burned_cells: u64,
    pub land_loss: BTreeMap<i32, Cents>,
    pub road_loss: BTreeMap<String, Cents>,
    pub building_loss: Cents,
    pub building_count: u64,
    pub poi_count: BTreeMap<String, u64>,
    pub exposed_population: f64,
}

impl Totals {
    fn add(&mut self, r: &DailyImpactRecord) {
        self.burned_cells += r.burned_cells;
        for (k, v) in &r.land_loss {
            *self.land_loss.entry(*k).or_default() += *v;
        }
        for (k, v) in &r.road_loss {
            *self.road_loss.entry(k.clone()).or_default() += *v;
        }
        self.building_loss += r.building_loss;
        self.building_count += r.building_count;
        for (k, v) in &r.poi_count {
            *self.poi_count.entry(k.clone()).or_default() += *v;
        }
        self.exposed_population += r.exposed_population;
    }

    pub fn land_total(&self) -> Cents {
        self.land_loss.values().sum()
    }

    pub fn road_total(&self) -> Cents {
        self.road_loss.values().sum()
    }

    pub fn poi_total(&self) -> u64 {
        self.poi_count.values().sum()
    }

    pub fn total_loss(&self) -> Cents {
        self.land_total() + self.road_total() + self.building_loss
    }
}

/// Percentage share of each key in its category total.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Composition {
    pub land: BTreeMap<String, f64>,
    pub road: BTreeMap<String, f64>,
    pub poi: BTreeMap<String, f64>,
}

fn percentages<K: ToString>(parts: impl Iterator<Item = (K, f64)>) -> BTreeMap<String, f64> {
    let parts: Vec<(String, f64)> = parts.map(|(k, v)| (k.to_string(), v)).collect();
    let total: f64 = parts.iter().map(|(_, v)| v).sum();
    if total <= 0.0 {
        return BTreeMap::new();
    }
    parts
        .into_iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(k, v)| (k, 100.0 * v / total))
        .collect()
}

impl Composition {
    fn of(t: &Totals) -> Self {
        Self {
            land: percentages(t.land_loss.iter().map(|(k, v)| (*k, v.0 as f64))),
            road: percentages(t.road_loss.iter().map(|(k, v)| (k.clone(), v.0 as f64))),
            poi: percentages(t.poi_count.iter().map(|(k, v)| (k.clone(), *v as f64))),
        }
    }
}

pub const PEAK_METRICS: [&str; 7] = [
    "burned_cells",
    "land_loss_usd",
    "road_loss_usd",
    "building_loss_usd",
    "total_loss_usd",
    "poi_count",
    "exposed_population",
];

fn metric(r: &DailyImpactRecord, name: &str) -> f64 {
    match name {
        "burned_cells" => r.burned_cells as f64,
        "land_loss_usd" => r.land_loss_total().dollars(),
        "road_loss_usd" => r.road_loss_total().dollars(),
        "building_loss_usd" => r.building_loss.dollars(),
        "total_loss_usd" => r.total_loss().dollars(),
        "poi_count" => r.poi_total() as f64,
        "exposed_population" => r.exposed_population,
        _ => unreachable!("unknown metric {name}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistrictSummary {
    pub name: String,
    pub totals: Totals,
    /// Highest daily value per metric (earliest date on ties); absent when
    /// the metric is zero on every day.
    pub peaks: BTreeMap<&'static str, Peak>,
    pub composition: Composition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSummary {
    pub totals: Totals,
    pub composition: Composition,
    pub districts: Vec<DistrictSummary>,
}

pub fn summarize(records: &[DailyImpactRecord]) -> Result<EventSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no impact records to summarize"));
    }
    let mut totals = Totals::default();
    let mut by_district: BTreeMap<&str, Vec<&DailyImpactRecord>> = BTreeMap::new();
    for r in records {
        totals.add(r);
        by_district.entry(r.district.as_str()).or_default().push(r);
    }
    let districts = by_district
        .into_iter()
        .map(|(name, mut rs)| {
            rs.sort_by_key(|r| r.date);
            let mut t = Totals::default();
            rs.iter().for_each(|r| t.add(r));
            let mut peaks = BTreeMap::new();
            for m in PEAK_METRICS {
                let mut best: Option<Peak> = None;
                for r in &rs {
                    let v = metric(r, m);
                    if v > 0.0 && best.as_ref().is_none_or(|b| v > b.value) {
                        best = Some(Peak { date: r.date, value: v });
                    }
                }
                if let Some(p) = best {
                    peaks.insert(m, p);
                }
            }
            DistrictSummary {
                name: name.to_string(),
                composition: Composition::of(&t),
                totals: t,
                peaks,
            }
        })
        .collect();
    Ok(EventSummary {
        composition: Composition::of(&totals),
        totals,
        districts,
    })
}

/// Percentages in hundredths, rounded by largest remainder so the printed
/// shares still total 100.00.
fn rounded_hundredths(parts: &BTreeMap<String, f64>) -> Vec<(&str, i64)> {
    let total: f64 = parts.values().sum();
    let scaled: Vec<f64> = parts.values().map(|v| v * 10_000.0 / total).collect();
    let mut out: Vec<i64> = scaled.iter().map(|v| v.floor() as i64).collect();
    let short = 10_000 - out.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())));
    for &i in order.iter().take(short.max(0) as usize) {
        out[i] += 1;
    }
    parts.keys().map(String::as_str).zip(out).collect()
}

fn write_composition(f: &mut fmt::Formatter<'_>, c: &Composition, indent: &str) -> fmt::Result {
    for (label, parts) in [("land", &c.land), ("road", &c.road), ("poi", &c.poi)] {
        if parts.is_empty() {
            continue;
        }
        let body: Vec<String> = rounded_hundredths(parts)
            .into_iter()
            .map(|(k, h)| format!("{k} {}.{:02}%", h / 100, h % 100))
            .collect();
        writeln!(f, "{indent}{label} composition: {}", body.join(", "))?;
    }
    Ok(())
}

fn write_totals(f: &mut fmt::Formatter<'_>, t: &Totals, indent: &str) -> fmt::Result {
    writeln!(f, "{indent}burned cells: {}", t.burned_cells)?;
    writeln!(f, "{indent}land loss usd: {}", t.land_total())?;
    writeln!(f, "{indent}road loss usd: {}", t.road_total())?;
    writeln!(f, "{indent}building loss usd: {} ({} buildings)", t.building_loss, t.building_count)?;
    writeln!(f, "{indent}total loss usd: {}", t.total_loss())?;
    writeln!(f, "{indent}poi count: {}", t.poi_total())?;
    writeln!(
        f,
        "{indent}exposed population: {:.3} (~{})",
        t.exposed_population,
        t.exposed_population.round() as u64
    )
}

impl fmt::Display for EventSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "event totals")?;
        write_totals(f, &self.totals, "  ")?;
        write_composition(f, &self.composition, "  ")?;
        for d in &self.districts {
            writeln!(f, "district {}", d.name)?;
            write_totals(f, &d.totals, "  ")?;
            for m in PEAK_METRICS {
                match d.peaks.get(m) {
                    Some(p) => writeln!(f, "  peak {m}: {} ({})", p.date, p.value)?,
                    None => writeln!(f, "  peak {m}: none")?,
                }
            }
            write_composition(f, &d.composition, "  ")?;
        }
        Ok(())
    }
}
