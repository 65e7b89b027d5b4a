//! Seeded synthetic scenarios with known answers.
//!
//! Districts are side-by-side column bands, each with a rectangular official
//! perimeter inset from the band edge. Fire spreads breadth-first from an
//! ignition cell; each day burns a scripted number of cells, peaking on the
//! district's `peak_day`. One detection sits on every scripted cell center
//! and the manifest's kernel is narrow enough that thresholding recovers
//! exactly those cells, so the ground truth can be enumerated directly.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::dasymetric::WeightTable;
use crate::error::{Error, Result};
use crate::fire::{Confidence, Detection, KdeParams, ThresholdMode};
use crate::geometry::{Point, PolyLine, Polygon};
use crate::grid::{AnalysisGrid, CategoryRaster, PlanarFrame};
use crate::impact::{Cents, CostModel, TractDemographics};
use crate::io::{self, EventWindow, Feature, Geometry, GridSpec, Manifest};

pub const RNG_NAME: &str = "ChaCha8Rng";

/// Cells between a band edge and its district perimeter.
const MARGIN: usize = 2;
const BLOCK_CELLS: usize = 5;
const POI_CATEGORIES: [&str; 5] = ["Healthcare", "Restaurant", "Retail", "School", "Worship"];

#[derive(Debug, Clone, PartialEq)]
pub struct DistrictSpec {
    pub name: String,
    /// Width of the district's column band, in cells.
    pub n_cols: usize,
    /// 1-based day of the event window with the most new burn.
    pub peak_day: u32,
    pub population_total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub frame: PlanarFrame,
    pub start: NaiveDate,
    pub n_days: u32,
    pub n_rows: usize,
    pub cell_size: f64,
    pub districts: Vec<DistrictSpec>,
    /// Land-cover class proportions.
    pub class_mix: Vec<(i32, f64)>,
    /// New-burn cells on a district's peak day.
    pub peak_cells: usize,
}

impl ScenarioSpec {
    /// Two districts over a week: `A` burns hardest on day 1, `B` on day 5.
    pub fn demo(seed: u64) -> Self {
        Self {
            seed,
            frame: PlanarFrame::new(-118.55, 34.05),
            start: NaiveDate::from_ymd_opt(2025, 1, 7).unwrap(),
            n_days: 7,
            n_rows: 60,
            cell_size: 20.0,
            districts: vec![
                DistrictSpec {
                    name: "A".into(),
                    n_cols: 60,
                    peak_day: 1,
                    population_total: 12_000,
                },
                DistrictSpec {
                    name: "B".into(),
                    n_cols: 60,
                    peak_day: 5,
                    population_total: 9_000,
                },
            ],
            class_mix: vec![
                (11, 0.03),
                (21, 0.12),
                (22, 0.25),
                (23, 0.12),
                (24, 0.05),
                (41, 0.1),
                (42, 0.05),
                (52, 0.15),
                (71, 0.08),
                (95, 0.05),
            ],
            peak_cells: 400,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::Validation(m));
        if self.districts.is_empty() {
            return invalid("scenario needs at least one district".into());
        }
        if self.n_days == 0 {
            return invalid("event window must span at least one day".into());
        }
        let inner_rows = self.n_rows.saturating_sub(2 * MARGIN);
        for d in &self.districts {
            if d.peak_day == 0 || d.peak_day > self.n_days {
                return invalid(format!("district {}: peak_day {} outside 1..={}", d.name, d.peak_day, self.n_days));
            }
            let inner = inner_rows * d.n_cols.saturating_sub(2 * MARGIN);
            if !d.n_cols.is_multiple_of(BLOCK_CELLS) || !self.n_rows.is_multiple_of(BLOCK_CELLS) {
                return invalid(format!("district {}: dimensions must be multiples of {BLOCK_CELLS} cells", d.name));
            }
            if self.daily_counts(d).iter().sum::<usize>() > inner {
                return invalid(format!("district {}: scripted burn exceeds the perimeter", d.name));
            }
        }
        let total: f64 = self.class_mix.iter().map(|(_, p)| p).sum();
        if self.class_mix.iter().any(|(_, p)| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return invalid(format!("class proportions must be non-negative and sum to 1, got {total}"));
        }
        if !(self.cell_size > 0.0) {
            return invalid("cell_size must be positive".into());
        }
        Ok(())
    }

    fn n_cols(&self) -> usize {
        self.districts.iter().map(|d| d.n_cols).sum()
    }

    pub fn grid(&self) -> Result<AnalysisGrid> {
        Ok(AnalysisGrid::new(0.0, 0.0, self.cell_size, self.n_rows, self.n_cols())?.with_frame(self.frame))
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        (0..self.n_days).map(|k| self.start + Days::new(k as u64)).collect()
    }

    /// New-burn cell count per day, strictly largest on `peak_day`.
    pub fn daily_counts(&self, d: &DistrictSpec) -> Vec<usize> {
        (1..=self.n_days)
            .map(|k| {
                let dist = (k as f64 - d.peak_day as f64).abs();
                ((self.peak_cells as f64 / (1.0 + dist).powi(2)).round() as usize).max(1)
            })
            .collect()
    }

    /// KDE settings under which thresholding reproduces the scripted cells:
    /// the kernel support (bandwidth × cutoff) is shorter than one cell.
    pub fn kde_params(&self) -> KdeParams {
        KdeParams {
            bandwidth_m: self.cell_size / 5.0,
            cutoff_sigmas: 4.0,
            threshold_mode: ThresholdMode::RelativeToDailyMax,
            threshold_value: 0.05,
            frp_weighted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRow {
    pub date: NaiveDate,
    pub district: String,
    pub burned_cells: u64,
    pub land_loss: Cents,
    pub road_loss: Cents,
    pub building_loss: Cents,
    pub building_count: u64,
    pub poi_count: u64,
    pub exposed_population: f64,
    pub road_length_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub generator: String,
    pub rows: Vec<GroundTruthRow>,
}

const TRUTH_COLUMNS: [&str; 10] = [
    "date",
    "district",
    "burned_cells",
    "land_loss_usd",
    "road_loss_usd",
    "building_loss_usd",
    "building_count",
    "poi_count",
    "exposed_population",
    "road_length_m",
];

impl GroundTruth {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# generator: {}\n{}\r\n", self.generator, TRUTH_COLUMNS.join(","));
        for r in &self.rows {
            write!(
                s,
                "{},{},{},{},{},{},{},{},{:?},{:?}\r\n",
                r.date,
                r.district,
                r.burned_cells,
                r.land_loss,
                r.road_loss,
                r.building_loss,
                r.building_count,
                r.poi_count,
                r.exposed_population,
                r.road_length_m
            )
            .unwrap();
        }
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let generator = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# generator: "))
            .ok_or_else(|| Error::schema(path, "generator", "missing `# generator:` line"))?
            .to_string();
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let headers = r.headers().map_err(|e| Error::format(path, 0, e.to_string()))?.clone();
        if headers.iter().ne(TRUTH_COLUMNS) {
            return Err(Error::schema(path, "header", "unexpected ground-truth columns"));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::format(path, 0, e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let bad = |i: usize| Error::format(path, line, format!("cannot parse {} `{}`", TRUTH_COLUMNS[i], &rec[i]));
            rows.push(GroundTruthRow {
                date: rec[0].parse().map_err(|_| bad(0))?,
                district: rec[1].to_string(),
                burned_cells: rec[2].parse().map_err(|_| bad(2))?,
                land_loss: rec[3].parse().map_err(|_| bad(3))?,
                road_loss: rec[4].parse().map_err(|_| bad(4))?,
                building_loss: rec[5].parse().map_err(|_| bad(5))?,
                building_count: rec[6].parse().map_err(|_| bad(6))?,
                poi_count: rec[7].parse().map_err(|_| bad(7))?,
                exposed_population: rec[8].parse().map_err(|_| bad(8))?,
                road_length_m: rec[9].parse().map_err(|_| bad(9))?,
            });
        }
        Ok(Self { generator, rows })
    }
}

/// Everything the generator placed, in planar coordinates.
struct World {
    grid: AnalysisGrid,
    classes: Vec<i32>,
    /// (block id, tract id, first row, first col, pop)
    blocks: Vec<(String, String, usize, usize, u64)>,
    /// (class, cells crossed, fixed coordinate, start, end) along a row or column center.
    roads: Vec<Road>,
    /// cell index per building
    buildings: Vec<usize>,
    /// (category, location)
    pois: Vec<(String, Point)>,
    /// per district, per day: scripted cells
    burns: Vec<Vec<Vec<usize>>>,
    detections: Vec<Detection>,
    tracts: BTreeMap<String, TractDemographics>,
}

struct Road {
    class: String,
    horizontal: bool,
    /// row (horizontal) or column (vertical) it runs along
    line: usize,
    /// first and last cell crossed along the other axis, inclusive
    from: usize,
    to: usize,
}

impl Road {
    fn cells(&self, g: &AnalysisGrid) -> Vec<usize> {
        (self.from..=self.to)
            .map(|k| if self.horizontal { g.index(self.line, k) } else { g.index(k, self.line) })
            .collect()
    }

    fn polyline(&self, g: &AnalysisGrid) -> PolyLine {
        let cs = g.cell_size;
        let pts = if self.horizontal {
            let y = g.center_y(self.line);
            vec![Point::new(self.from as f64 * cs, y), Point::new((self.to + 1) as f64 * cs, y)]
        } else {
            let x = g.center_x(self.line);
            // rows count from the north, so `to` is the southernmost
            vec![
                Point::new(x, (g.n_rows - 1 - self.to) as f64 * cs),
                Point::new(x, (g.n_rows - self.from) as f64 * cs),
            ]
        };
        PolyLine::new(pts).expect("road has two distinct vertices")
    }
}

fn pick_class(rng: &mut ChaCha8Rng, mix: &[(i32, f64)]) -> i32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(c, p) in mix {
        acc += p;
        if u < acc {
            return c;
        }
    }
    mix.last().unwrap().0
}

fn random_shares(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

fn build_world(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<World> {
    let grid = spec.grid()?;
    let (rows, cols) = (grid.n_rows, grid.n_cols);
    let classes: Vec<i32> = (0..grid.len()).map(|_| pick_class(rng, &spec.class_mix)).collect();

    let mut blocks = Vec::new();
    let mut tracts = BTreeMap::new();
    let mut band_start = 0;
    for d in &spec.districts {
        let mut origins = Vec::new();
        for br in (0..rows).step_by(BLOCK_CELLS) {
            for bc in (band_start..band_start + d.n_cols).step_by(BLOCK_CELLS) {
                origins.push((br, bc));
            }
        }
        let weights: Vec<f64> = origins.iter().map(|_| rng.random::<f64>()).collect();
        let wsum: f64 = weights.iter().sum();
        let mut pops: Vec<u64> = weights
            .iter()
            .map(|w| (d.population_total as f64 * w / wsum).floor() as u64)
            .collect();
        let short = d.population_total - pops.iter().sum::<u64>();
        for p in pops.iter_mut().take(short as usize) {
            *p += 1;
        }
        for (&(br, bc), pop) in origins.iter().zip(pops) {
            let tract = format!("{}{:02}{:02}", d.name, br / (3 * BLOCK_CELLS), (bc - band_start) / (4 * BLOCK_CELLS));
            let id = format!("{}{:03}{:03}", d.name, br, bc);
            tracts.entry(tract.clone()).or_insert_with(|| {
                let g = random_shares(rng, 2);
                let a = random_shares(rng, 3);
                let r = random_shares(rng, 5);
                TractDemographics {
                    tract_id: tract.clone(),
                    female_share: g[0],
                    male_share: g[1],
                    age_0_17: a[0],
                    age_18_64: a[1],
                    age_65_plus: a[2],
                    white: r[0],
                    asian: r[1],
                    black: r[2],
                    multiracial: r[3],
                    other: r[4],
                }
            });
            blocks.push((id, tract, br, bc, pop));
        }
        band_start += d.n_cols;
    }

    let road_classes: Vec<String> = CostModel::demo_default().road_cost.into_keys().collect();
    let mut roads = Vec::new();
    for _ in 0..(rows / 4) {
        let from = rng.random_range(0..cols / 2);
        let to = rng.random_range(from + 1..cols);
        roads.push(Road {
            class: road_classes.choose(rng).unwrap().clone(),
            horizontal: true,
            line: rng.random_range(0..rows),
            from,
            to,
        });
    }
    for _ in 0..(cols / 8) {
        let from = rng.random_range(0..rows / 2);
        let to = rng.random_range(from + 1..rows);
        roads.push(Road {
            class: road_classes.choose(rng).unwrap().clone(),
            horizontal: false,
            line: rng.random_range(0..cols),
            from,
            to,
        });
    }

    let buildings: Vec<usize> = (0..grid.len()).filter(|_| rng.random::<f64>() < 0.3).collect();
    let mut pois = Vec::new();
    for i in 0..grid.len() {
        if rng.random::<f64>() < 0.08 {
            let (r, c) = grid.row_col(i);
            let x = (c as f64 + rng.random_range(0.05..0.95)) * grid.cell_size;
            let y = ((rows - 1 - r) as f64 + rng.random_range(0.05..0.95)) * grid.cell_size;
            pois.push((POI_CATEGORIES.choose(rng).unwrap().to_string(), Point::new(x, y)));
        }
    }

    let dates = spec.dates();
    let mut burns = Vec::new();
    let mut detections = Vec::new();
    let mut inside = vec![false; grid.len()];
    band_start = 0;
    for d in &spec.districts {
        let (r0, r1) = (MARGIN, rows - MARGIN);
        let (c0, c1) = (band_start + MARGIN, band_start + d.n_cols - MARGIN);
        for r in r0..r1 {
            for c in c0..c1 {
                inside[grid.index(r, c)] = true;
            }
        }
        let counts = spec.daily_counts(d);
        let order = spread_order(
            rng,
            &grid,
            (r0, r1, c0, c1),
            counts.iter().sum(),
        );
        let mut it = order.into_iter();
        let per_day: Vec<Vec<usize>> = counts.iter().map(|&n| it.by_ref().take(n).collect()).collect();
        for (k, cells) in per_day.iter().enumerate() {
            for &i in cells {
                detections.push(detection(rng, &grid, i, dates[k]));
            }
            if k > 0 {
                // smoldering cells seen again the next day
                for &i in &per_day[k - 1] {
                    if rng.random::<f64>() < 0.1 {
                        detections.push(detection(rng, &grid, i, dates[k]));
                    }
                }
            }
        }
        burns.push(per_day);
        band_start += d.n_cols;
    }
    let outside: Vec<usize> = (0..grid.len()).filter(|&i| !inside[i]).collect();
    for &date in &dates {
        for _ in 0..rng.random_range(0..12) {
            let i = *outside.choose(rng).unwrap();
            detections.push(detection(rng, &grid, i, date));
        }
    }
    detections.sort_by_key(|d| d.date);

    Ok(World {
        grid,
        classes,
        blocks,
        roads,
        buildings,
        pois,
        burns,
        detections,
        tracts,
    })
}

fn detection(rng: &mut ChaCha8Rng, grid: &AnalysisGrid, cell: usize, date: NaiveDate) -> Detection {
    let (r, c) = grid.row_col(cell);
    let conf = [Confidence::Low, Confidence::Nominal, Confidence::High];
    Detection {
        location: grid.cell_center(r, c),
        date,
        frp: Some((rng.random_range(1.0..400.0) * 10.0f64).round() / 10.0),
        confidence: Some(*conf.choose(rng).unwrap()),
        acq_time: Some(format!("{:02}{:02}", rng.random_range(0..24), rng.random_range(0..60))),
    }
}

/// Breadth-first spread from a random ignition cell inside the rectangle.
fn spread_order(
    rng: &mut ChaCha8Rng,
    grid: &AnalysisGrid,
    (r0, r1, c0, c1): (usize, usize, usize, usize),
    n: usize,
) -> Vec<usize> {
    let start = (rng.random_range(r0 + (r1 - r0) / 4..r1 - (r1 - r0) / 4), rng.random_range(c0 + (c1 - c0) / 4..c1 - (c1 - c0) / 4));
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::from([start]);
    seen[grid.index(start.0, start.1)] = true;
    let mut order = Vec::with_capacity(n);
    while let Some((r, c)) = queue.pop_front() {
        order.push(grid.index(r, c));
        if order.len() == n {
            break;
        }
        let mut next: Vec<(usize, usize)> = [(0i64, 1i64), (1, 0), (0, -1), (-1, 0)]
            .iter()
            .map(|(dr, dc)| (r as i64 + dr, c as i64 + dc))
            .filter(|&(rr, cc)| rr >= r0 as i64 && rr < r1 as i64 && cc >= c0 as i64 && cc < c1 as i64)
            .map(|(rr, cc)| (rr as usize, cc as usize))
            .collect();
        next.shuffle(rng);
        for (rr, cc) in next {
            let i = grid.index(rr, cc);
            if !seen[i] {
                seen[i] = true;
                queue.push_back((rr, cc));
            }
        }
    }
    order
}

/// Persons per cell by direct enumeration of each block's cells.
fn truth_population(world: &World, weights: &WeightTable) -> Result<Vec<f64>> {
    let g = &world.grid;
    let mut pop = vec![0.0; g.len()];
    for (_, _, br, bc, p) in &world.blocks {
        let cells: Vec<usize> = (*br..br + BLOCK_CELLS)
            .flat_map(|r| (*bc..bc + BLOCK_CELLS).map(move |c| (r, c)))
            .map(|(r, c)| g.index(r, c))
            .collect();
        let ras: Vec<f64> = cells.iter().map(|&i| weights.lookup(world.classes[i])).collect::<Result<_>>()?;
        let total: f64 = ras.iter().sum();
        let p = *p as f64;
        for (&i, &w) in cells.iter().zip(&ras) {
            pop[i] = if p == 0.0 {
                0.0
            } else if total > 0.0 {
                p * w / total
            } else {
                p / cells.len() as f64
            };
        }
    }
    Ok(pop)
}

fn ground_truth(spec: &ScenarioSpec, world: &World, weights: &WeightTable, costs: &CostModel) -> Result<GroundTruth> {
    let g = &world.grid;
    let pop = truth_population(world, weights)?;
    let dates = spec.dates();
    let building_cents = Cents::from_dollars(144.0 * costs.building_cost);
    let mut rows = Vec::new();
    for (k, date) in dates.iter().enumerate() {
        for (d, spec_d) in spec.districts.iter().enumerate() {
            let mut cells = world.burns[d][k].clone();
            cells.sort_unstable();
            let burned: std::collections::BTreeSet<usize> = cells.iter().copied().collect();
            let mut row = GroundTruthRow {
                date: *date,
                district: spec_d.name.clone(),
                burned_cells: cells.len() as u64,
                land_loss: Cents::ZERO,
                road_loss: Cents::ZERO,
                building_loss: Cents::ZERO,
                building_count: 0,
                poi_count: 0,
                exposed_population: 0.0,
                road_length_m: 0.0,
            };
            for &i in &cells {
                row.land_loss += costs.land_cell_cents(world.classes[i], g.cell_area())?;
                row.exposed_population += pop[i];
            }
            for road in &world.roads {
                let unit = costs.road_unit(&road.class)?;
                for i in road.cells(g) {
                    if burned.contains(&i) {
                        row.road_loss += Cents::from_dollars(g.cell_size * unit);
                        row.road_length_m += g.cell_size;
                    }
                }
            }
            for &i in &world.buildings {
                if burned.contains(&i) {
                    row.building_count += 1;
                    row.building_loss += building_cents;
                }
            }
            for (_, p) in &world.pois {
                if g.cell_index_containing(p.x, p.y).is_some_and(|i| burned.contains(&i)) {
                    row.poi_count += 1;
                }
            }
            rows.push(row);
        }
    }
    Ok(GroundTruth {
        generator: format!("{RNG_NAME} seed={}", spec.seed),
        rows,
    })
}

fn rect(g: &AnalysisGrid, r0: usize, r1: usize, c0: usize, c1: usize) -> Polygon {
    let cs = g.cell_size;
    Polygon::rectangle(
        c0 as f64 * cs,
        (g.n_rows - r1) as f64 * cs,
        c1 as f64 * cs,
        (g.n_rows - r0) as f64 * cs,
    )
    .expect("non-degenerate rectangle")
}

/// Writes a complete scenario into `out_dir` and returns its manifest and
/// ground truth.
pub fn generate(spec: &ScenarioSpec, out_dir: &Path) -> Result<(Manifest, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let world = build_world(spec, &mut rng)?;
    let g = world.grid;
    let frame = spec.frame;
    let weights = WeightTable::nlcd_default();
    let costs = CostModel::demo_default();
    let truth = ground_truth(spec, &world, &weights, &costs)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let p = |name: &str| out_dir.join(name);

    io::write_category_grid(&CategoryRaster::new(g, world.classes.clone(), io::DEFAULT_NODATA)?, &p("landcover.asc"))?;
    io::write_detections(&p("detections.csv"), &world.detections, frame)?;

    let mut band_start = 0;
    let mut perimeters = Vec::new();
    for d in &spec.districts {
        let poly = rect(&g, MARGIN, g.n_rows - MARGIN, band_start + MARGIN, band_start + d.n_cols - MARGIN);
        perimeters.push(Feature::new(Geometry::Polygon(poly)).with("name", d.name.as_str()));
        band_start += d.n_cols;
    }
    io::write_vector(&p("official_perimeter.geojson"), &perimeters, frame)?;

    let blocks: Vec<Feature> = world
        .blocks
        .iter()
        .map(|(id, tract, br, bc, pop)| {
            Feature::new(Geometry::Polygon(rect(&g, *br, br + BLOCK_CELLS, *bc, bc + BLOCK_CELLS)))
                .with("block_id", id.as_str())
                .with("pop", *pop)
                .with("tract_id", tract.as_str())
        })
        .collect();
    io::write_vector(&p("blocks.geojson"), &blocks, frame)?;

    let roads: Vec<Feature> = world
        .roads
        .iter()
        .map(|r| Feature::new(Geometry::LineString(r.polyline(&g))).with("class", r.class.as_str()))
        .collect();
    io::write_vector(&p("roads.geojson"), &roads, frame)?;

    let half = 6.0;
    let buildings: Vec<Feature> = world
        .buildings
        .iter()
        .enumerate()
        .map(|(n, &i)| {
            let (r, c) = g.row_col(i);
            let ctr = g.cell_center(r, c);
            let fp = Polygon::rectangle(ctr.x - half, ctr.y - half, ctr.x + half, ctr.y + half).unwrap();
            Feature::new(Geometry::Polygon(fp)).with("id", format!("bldg{n:05}"))
        })
        .collect();
    io::write_vector(&p("buildings.geojson"), &buildings, frame)?;

    let pois: Vec<Feature> = world
        .pois
        .iter()
        .map(|(cat, pt)| Feature::new(Geometry::Point(*pt)).with("category", Value::from(cat.as_str())))
        .collect();
    io::write_vector(&p("pois.geojson"), &pois, frame)?;

    io::write_weights(&p("weights.json"), &weights)?;
    io::write_costs(&p("costs.json"), &costs)?;
    io::write_demographics(&p("demographics.csv"), &world.tracts)?;
    io::write_text(&p("ground_truth.csv"), &truth.to_csv())?;

    let dates = spec.dates();
    let manifest = Manifest {
        origin_lon: frame.origin_lon,
        origin_lat: frame.origin_lat,
        grid: GridSpec {
            cell_size: g.cell_size,
            n_rows: g.n_rows,
            n_cols: g.n_cols,
            origin_x: g.origin_x,
            origin_y: g.origin_y,
        },
        event_window: Some(EventWindow {
            start: dates[0],
            end: *dates.last().unwrap(),
        }),
        kde: Some(spec.kde_params()),
        detections: "detections.csv".into(),
        landcover: "landcover.asc".into(),
        official_perimeter: "official_perimeter.geojson".into(),
        blocks: "blocks.geojson".into(),
        roads: Some("roads.geojson".into()),
        buildings: Some("buildings.geojson".into()),
        pois: Some("pois.geojson".into()),
        weights: Some("weights.json".into()),
        costs: Some("costs.json".into()),
        demographics: Some("demographics.csv".into()),
        base_dir: out_dir.to_path_buf(),
    };
    manifest.save(&p("manifest.json"))?;
    Ok((manifest, truth))
}
