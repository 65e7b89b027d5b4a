//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use blazemap::dasymetric::{downscale, validate_mass, CensusBlock, PopulationGrid, WeightTable, NO_BLOCK};
use blazemap::fire::{extract_daily_perimeters, kde_surface, Detection, KdeParams, ThresholdMode};
use blazemap::geometry::{rasterize_polygons, rasterize_polyline, trace_mask_boundary, Point, PolyLine, Polygon};
use blazemap::grid::{mask_combine, AnalysisGrid, CategoryRaster, Mask, MaskOp, RealRaster};
use blazemap::impact::{
    building_loss, demographic_breakdown, land_use_loss, poi_exposure, population_exposure, road_loss, summarize,
    BuildingFeature, Cents, Composition, CostModel, DailyImpactRecord, PoiFeature, RoadFeature, TractDemographics,
};
use blazemap::io::read_report;
use blazemap::synth::GroundTruth;
use chrono::NaiveDate;
use common::*;
use rand::seq::IndexedRandom;
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

const NLCD: [i32; 15] = [11, 21, 22, 23, 24, 31, 41, 42, 43, 52, 71, 81, 82, 90, 95];

// 1 ------------------------------------------------------------------------

fn mass_preservation() -> Outcome {
    let mut rng = rng(101);
    let grid = ok(AnalysisGrid::new(0.0, 0.0, 20.0, 2000, 2000))?;
    let (nr, nc) = (50usize, 100usize);
    let (bw, bh) = (grid.right() / nc as f64, grid.top() / nr as f64);
    let mut nodes = vec![Point::new(0.0, 0.0); (nr + 1) * (nc + 1)];
    for i in 0..=nr {
        for j in 0..=nc {
            let interior = i > 0 && i < nr && j > 0 && j < nc;
            let (jx, jy) = if interior {
                (rng.random_range(-0.25..0.25) * bw, rng.random_range(-0.25..0.25) * bh)
            } else {
                (0.0, 0.0)
            };
            nodes[i * (nc + 1) + j] = Point::new(j as f64 * bw + jx, i as f64 * bh + jy);
        }
    }
    let node = |i: usize, j: usize| nodes[i * (nc + 1) + j];
    let mut blocks = Vec::with_capacity(nr * nc);
    for i in 0..nr {
        for j in 0..nc {
            let ring = vec![node(i, j), node(i, j + 1), node(i + 1, j + 1), node(i + 1, j)];
            let pop = if rng.random::<f64>() < 0.05 { 0.0 } else { rng.random_range(1.0..5000.0f64).round() };
            blocks.push(ok(CensusBlock::new(
                format!("b{i:02}{j:03}"),
                vec![ok(Polygon::new(ring, vec![]))?],
                pop,
                format!("t{i:02}"),
            ))?);
        }
    }
    let mut cells: Vec<i32> = (0..grid.len()).map(|_| *NLCD.choose(&mut rng).unwrap()).collect();
    // lakes drown whole blocks so their weights sum to zero
    for b in &blocks {
        if rng.random::<f64>() < 0.03 {
            for i in cells_in_parts(&b.boundary, &grid) {
                cells[i] = 11;
            }
        }
    }
    let landcover = ok(CategoryRaster::new(grid, cells, -9999))?;
    let weights = WeightTable::nlcd_default();

    let t = Instant::now();
    let pg = ok(downscale(&blocks, &landcover, &weights, &grid))?;
    let report = ok(validate_mass(&blocks, &pg))?;
    let secs = t.elapsed().as_secs_f64();

    let mut owned = vec![false; grid.len()];
    let mut worst: f64 = 0.0;
    let mut uniform = 0;
    for b in &blocks {
        let mine = cells_in_parts(&b.boundary, &grid);
        ensure!(!mine.is_empty(), "block {} owns no cells", b.block_id);
        let ra: Vec<f64> = mine.iter().map(|&i| weights.get(landcover.cells[i]).unwrap()).collect();
        let total: f64 = ra.iter().sum();
        if total == 0.0 && b.pop > 0.0 {
            uniform += 1;
        }
        let mut sum = 0.0;
        for (&i, &w) in mine.iter().zip(&ra) {
            ensure!(!owned[i], "cell {i} claimed twice by the oracle");
            owned[i] = true;
            let expect = if total > 0.0 { b.pop * w / total } else { b.pop / mine.len() as f64 };
            let got = pg.raster.cells[i];
            ensure!(
                (got - expect).abs() <= 1e-12 * expect.max(1.0),
                "block {} cell {i}: {got} vs {expect}",
                b.block_id
            );
            sum += got;
        }
        worst = worst.max((sum - b.pop).abs() / b.pop.max(1.0));
    }
    for (i, &o) in owned.iter().enumerate() {
        ensure!(o || pg.raster.cells[i] == 0.0, "unowned cell {i} holds population");
    }
    ensure!(worst <= 1e-9, "max relative mass error {worst:e}");
    ensure!(report.is_ok(), "engine mass report flags {} blocks", report.failures().count());
    ensure!(report.fallback_count() == uniform, "{} fallbacks vs {uniform} zero-weight blocks", report.fallback_count());
    ensure!(secs < 10.0, "downscale took {secs:.2} s");
    Ok(format!(
        "{} blocks on 2000x2000, max rel err {worst:.1e}, {uniform} uniform fallbacks, {secs:.2} s",
        blocks.len()
    ))
}

// 2 ------------------------------------------------------------------------

fn hand_oracle() -> Outcome {
    let grid = ok(AnalysisGrid::new(0.0, 0.0, 20.0, 2, 2))?;
    let landcover = ok(CategoryRaster::new(grid, vec![24, 24, 24, 11], -9999))?;
    let block = ok(CensusBlock::new("b", vec![ok(Polygon::rectangle(0.0, 0.0, 40.0, 40.0))?], 100.0, "t"))?;
    let weights = WeightTable::nlcd_default();
    ensure!(weights.get(24) == Some(46.0) && weights.get(11) == Some(0.0), "weight table changed");
    let pg = ok(downscale(&[block], &landcover, &weights, &grid))?;
    let developed = 100.0 * 46.0 / (3.0 * 46.0);
    for i in 0..3 {
        let v = pg.raster.cells[i];
        ensure!((v - developed).abs() <= 1e-12, "cell {i}: {v}");
    }
    ensure!(pg.raster.cells[3] == 0.0, "water cell holds {}", pg.raster.cells[3]);
    Ok(format!("developed cells {:.12}, water 0", pg.raster.cells[0]))
}

// 3 ------------------------------------------------------------------------

fn kde_oracle() -> Outcome {
    let mut rng = rng(303);
    let grid = ok(AnalysisGrid::new(0.0, 0.0, 20.0, 100, 100))?;
    let params = KdeParams::default();
    let date = NaiveDate::from_ymd_opt(2025, 1, 7).unwrap();
    let pts: Vec<Point> = (0..50)
        .map(|_| Point::new(rng.random_range(0.0..grid.right()), rng.random_range(0.0..grid.top())))
        .collect();
    let dets: Vec<Detection> = pts.iter().map(|&p| Detection::at(p, date)).collect();
    let engine = ok(kde_surface(&dets, &grid, &params))?;
    let brute = kde_bruteforce(&pts, &vec![1.0; pts.len()], &grid, params.bandwidth_m);
    let mut worst: f64 = 0.0;
    for (i, (&e, &b)) in engine.cells.iter().zip(&brute).enumerate() {
        let rel = (e - b).abs() / b;
        ensure!(rel <= 1e-4, "cell {i}: engine {e:e} vs brute force {b:e} (rel {rel:e})");
        worst = worst.max(rel);
    }

    let pad = params.cutoff_sigmas * params.bandwidth_m;
    let n = ((grid.right() + 2.0 * pad) / grid.cell_size).round() as usize;
    let padded = ok(AnalysisGrid::new(-pad, -pad, grid.cell_size, n, n))?;
    let surface = ok(kde_surface(&dets, &padded, &params))?;
    let mass = surface.sum() * padded.cell_area();
    let mass_err = (mass - pts.len() as f64).abs() / pts.len() as f64;
    ensure!(mass_err <= 0.02, "padded mass {mass} for {} points", pts.len());
    Ok(format!("max rel diff {worst:.1e} over 10000 cells, padded mass {mass:.4} of 50"))
}

// 4 ------------------------------------------------------------------------

fn perimeter_bookkeeping() -> Outcome {
    let mut rng = rng(404);
    let start = NaiveDate::from_ymd_opt(2025, 1, 7).unwrap();
    let mut total_days = 0;
    for case in 0..150 {
        let (rows, cols) = (rng.random_range(8..48), rng.random_range(8..48));
        let grid = ok(AnalysisGrid::new(0.0, 0.0, 20.0, rows, cols))?;
        let center = Point::new(grid.right() * rng.random_range(0.3..0.7), grid.top() * rng.random_range(0.3..0.7));
        let reach = grid.right().min(grid.top());
        let n_vertices = rng.random_range(3..12);
        let official = random_star(&mut rng, center, 0.2 * reach, 0.7 * reach, n_vertices);
        let params = KdeParams {
            bandwidth_m: rng.random_range(10.0..120.0),
            cutoff_sigmas: 4.0,
            threshold_mode: ThresholdMode::RelativeToDailyMax,
            threshold_value: rng.random_range(0.02..0.6),
            frp_weighted: false,
        };
        let n_days = rng.random_range(1..8);
        let days: Vec<(NaiveDate, Vec<Detection>)> = (0..n_days)
            .map(|k| {
                let n = if rng.random::<f64>() < 0.15 { 0 } else { rng.random_range(1..30) };
                let dets = (0..n)
                    .map(|_| {
                        let p = Point::new(
                            rng.random_range(-40.0..grid.right() + 40.0),
                            rng.random_range(-40.0..grid.top() + 40.0),
                        );
                        Detection::at(p, start + chrono::Days::new(k))
                    })
                    .collect();
                (start + chrono::Days::new(k), dets)
            })
            .collect();
        let perims = ok(extract_daily_perimeters(&days, std::slice::from_ref(&official), &grid, &params))?;
        let inside: BTreeSet<usize> = cells_in_polygon(&official, &grid).into_iter().collect();
        let mut seen = Mask::empty(grid);
        let mut new_total = 0;
        for (k, day) in perims.iter().enumerate() {
            new_total += day.new_burn.count();
            for i in day.new_burn.indices() {
                ensure!(inside.contains(&i), "case {case} day {k}: new-burn cell {i} outside the perimeter");
                ensure!(!seen.bits[i], "case {case} day {k}: cell {i} burned twice");
            }
            ensure!(seen.is_subset_of(&day.cumulative), "case {case} day {k}: cumulative shrank");
            seen = ok(mask_combine(&seen, &day.new_burn, MaskOp::Union))?;
            ensure!(seen == day.cumulative, "case {case} day {k}: cumulative is not the union of new burn");
        }
        let last = perims.last().map_or(0, |d| d.cumulative.count());
        ensure!(new_total == last, "case {case}: {new_total} new-burn cells vs {last} cumulative");
        total_days += perims.len();
    }
    Ok(format!("150 random sequences, {total_days} days"))
}

// 5 ------------------------------------------------------------------------

fn random_polyline(rng: &mut rand_chacha::ChaCha8Rng, extent: f64, snap: bool) -> PolyLine {
    let n = rng.random_range(2..6);
    let pts = (0..n)
        .map(|_| {
            let (x, y) = (rng.random_range(-60.0..extent + 60.0), rng.random_range(-60.0..extent + 60.0));
            if snap {
                Point::new((x / 10.0).round() * 10.0, (y / 10.0).round() * 10.0)
            } else {
                Point::new(x, y)
            }
        })
        .collect();
    PolyLine::new(pts).unwrap_or_else(|_| PolyLine::new(vec![Point::new(1.0, 1.0), Point::new(33.0, 17.0)]).unwrap())
}

fn polygon_centroid(poly: &Polygon) -> Point {
    let ring = poly.exterior();
    let (mut cx, mut cy) = (0.0, 0.0);
    for k in 0..ring.len() - 1 {
        let cross = ring[k].x * ring[k + 1].y - ring[k + 1].x * ring[k].y;
        cx += (ring[k].x + ring[k + 1].x) * cross;
        cy += (ring[k].y + ring[k + 1].y) * cross;
    }
    let a = shoelace(ring);
    Point::new(cx / (6.0 * a), cy / (6.0 * a))
}

fn cents(dollars: f64) -> i64 {
    (dollars * 100.0).round() as i64
}

fn overlay_oracles() -> Outcome {
    let mut rng = rng(505);
    let costs = CostModel::demo_default();
    let classes: Vec<i32> = costs.land_cost.keys().copied().collect();
    let road_classes: Vec<String> = costs.road_cost.keys().cloned().collect();
    let poi_kinds = ["retail", "school", "clinic", "dining"];
    let grid = ok(AnalysisGrid::new(0.0, 0.0, 20.0, 32, 32))?;
    let extent = grid.right();
    let (mut roads_seen, mut buildings_hit, mut pois_hit) = (0usize, 0u64, 0u64);
    for case in 0..200 {
        let cells: Vec<i32> = (0..grid.len())
            .map(|_| if rng.random::<f64>() < 0.03 { -9999 } else { *classes.choose(&mut rng).unwrap() })
            .collect();
        let landcover = ok(CategoryRaster::new(grid, cells, -9999))?;
        let before = random_mask(&mut rng, grid, 0.0..0.4);
        let fresh = random_mask(&mut rng, grid, 0.05..0.6);
        let burn = ok(mask_combine(&fresh, &before, MaskOp::Difference))?;

        // land
        let land = ok(land_use_loss(&burn, &landcover, &costs))?;
        let mut expect_land: BTreeMap<i32, i64> = BTreeMap::new();
        for i in 0..grid.len() {
            let class = landcover.cells[i];
            if burn.bits[i] && class != -9999 {
                *expect_land.entry(class).or_insert(0) += cents(grid.cell_area() * costs.land_cost[&class]);
            }
        }
        let got_land: BTreeMap<i32, i64> = land.iter().map(|(k, v)| (*k, v.0)).collect();
        ensure!(got_land == expect_land, "case {case}: land {got_land:?} vs {expect_land:?}");

        // roads
        let roads: Vec<RoadFeature> = (0..rng.random_range(0..8))
            .map(|_| {
                let snap = rng.random::<bool>();
                RoadFeature {
                    class: road_classes.choose(&mut rng).unwrap().clone(),
                    line: random_polyline(&mut rng, extent, snap),
                }
            })
            .collect();
        roads_seen += roads.len();
        let mut expect_len: BTreeMap<String, f64> = BTreeMap::new();
        let mut expect_road: BTreeMap<String, i64> = BTreeMap::new();
        for r in &roads {
            for (cell, len) in polyline_lengths(&r.line, &grid) {
                if burn.bits[cell] {
                    *expect_len.entry(r.class.clone()).or_insert(0.0) += len;
                    *expect_road.entry(r.class.clone()).or_insert(0) += cents(len * costs.road_cost[&r.class]);
                }
            }
        }
        let got = ok(road_loss(&burn, &roads, &costs))?;
        for (class, want) in &expect_road {
            let g = got.get(class).ok_or(format!("case {case}: road class {class} missing"))?;
            ensure!(g.loss.0 == *want, "case {case}: road {class} {} vs {want} cents", g.loss.0);
            let wl = expect_len[class];
            ensure!((g.length_m - wl).abs() <= 1e-9, "case {case}: road {class} length {} vs {wl}", g.length_m);
        }
        for (class, g) in &got {
            ensure!(
                expect_road.contains_key(class) || (g.loss.0 == 0 && g.length_m <= 1e-9),
                "case {case}: unexpected road class {class}"
            );
        }

        // buildings, some smaller than a cell
        let buildings: Vec<BuildingFeature> = (0..rng.random_range(0..25))
            .map(|k| {
                let c = Point::new(rng.random_range(0.0..extent), rng.random_range(0.0..extent));
                let r = if rng.random::<bool>() { rng.random_range(2.0..8.0) } else { rng.random_range(8.0..45.0) };
                let n = rng.random_range(3..9);
                BuildingFeature {
                    id: k.to_string(),
                    footprint: random_star(&mut rng, c, 0.4 * r, r, n),
                }
            })
            .collect();
        let (mut count, mut loss) = (0u64, 0i64);
        for b in &buildings {
            let mut cells = cells_in_polygon(&b.footprint, &grid);
            if cells.is_empty() {
                cells.extend(cell_of(polygon_centroid(&b.footprint), &grid));
            }
            if cells.iter().any(|&i| burn.bits[i]) && !cells.iter().any(|&i| before.bits[i]) {
                count += 1;
                loss += cents(area(&b.footprint) * costs.building_cost);
            }
        }
        let got = ok(building_loss(&before, &burn, &buildings, &costs))?;
        ensure!(
            got.count == count && got.loss.0 == loss,
            "case {case}: buildings {} / {} vs {count} / {loss}",
            got.count,
            got.loss.0
        );
        buildings_hit += count;

        // POIs, some exactly on grid lines
        let pois: Vec<PoiFeature> = (0..rng.random_range(0..40))
            .map(|_| {
                let mut p = Point::new(rng.random_range(-10.0..extent + 10.0), rng.random_range(-10.0..extent + 10.0));
                if rng.random::<f64>() < 0.3 {
                    p = Point::new((p.x / 20.0).round() * 20.0, (p.y / 20.0).round() * 20.0);
                }
                PoiFeature {
                    category: poi_kinds.choose(&mut rng).unwrap().to_string(),
                    location: p,
                }
            })
            .collect();
        let mut expect_poi: BTreeMap<String, u64> = BTreeMap::new();
        for p in &pois {
            if cell_of(p.location, &grid).is_some_and(|i| burn.bits[i]) {
                *expect_poi.entry(p.category.clone()).or_insert(0) += 1;
            }
        }
        let got_poi = poi_exposure(&burn, &pois);
        ensure!(got_poi == expect_poi, "case {case}: pois {got_poi:?} vs {expect_poi:?}");
        pois_hit += expect_poi.values().sum::<u64>();

        // population
        let values: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.0..50.0)).collect();
        let pg = PopulationGrid {
            raster: ok(RealRaster::new(grid, values.clone()))?,
            owner: vec![NO_BLOCK; grid.len()],
            allocations: vec![],
        };
        let mut expect_pop = 0.0;
        for (i, v) in values.iter().enumerate() {
            if burn.bits[i] {
                expect_pop += v;
            }
        }
        let got_pop = ok(population_exposure(&burn, &pg))?.persons;
        ensure!(got_pop == expect_pop, "case {case}: population {got_pop} vs {expect_pop}");
    }
    Ok(format!(
        "200 scenarios, {roads_seen} roads, {buildings_hit} buildings lost, {pois_hit} POIs hit"
    ))
}

// 6 ------------------------------------------------------------------------

fn geometry_round_trip() -> Outcome {
    let mut rng = rng(606);
    let mut cells = 0;
    for case in 0..500 {
        let grid = ok(AnalysisGrid::new(
            rng.random_range(-500.0..500.0),
            rng.random_range(-500.0..500.0),
            [1.0, 10.0, 20.0, 30.0][case % 4],
            rng.random_range(1..=64),
            rng.random_range(1..=64),
        ))?;
        let m = random_mask(&mut rng, grid, 0.05..0.95);
        let back = rasterize_polygons(&trace_mask_boundary(&m), &grid);
        ensure!(back == m, "case {case}: {}x{} mask differs after trace", grid.n_rows, grid.n_cols);
        cells += m.count();
    }
    let mut worst: f64 = 0.0;
    for case in 0..500 {
        let grid = ok(AnalysisGrid::new(0.0, 0.0, 20.0, rng.random_range(1..=64), rng.random_range(1..=64)))?;
        let line = random_polyline(&mut rng, grid.right().max(grid.top()), case % 3 == 0);
        let pieces: f64 = rasterize_polyline(&line, &grid).values().sum();
        let oracle: f64 = polyline_lengths(&line, &grid).values().sum();
        let rel = (pieces - oracle).abs() / oracle.max(1e-300);
        ensure!(
            (oracle == 0.0 && pieces == 0.0) || rel <= 1e-9,
            "polyline case {case}: {pieces} vs {oracle}"
        );
        if oracle > 0.0 {
            worst = worst.max(rel);
        }
    }
    Ok(format!("500 masks ({cells} set cells) round-trip; 500 polylines, max rel err {worst:.1e}"))
}

// 7 ------------------------------------------------------------------------

struct Golden {
    records: Vec<DailyImpactRecord>,
    report_text: String,
}

fn cli(args: &[&str]) -> Result<String, String> {
    let mut out = Vec::new();
    let mut full = vec!["blazemap"];
    full.extend_from_slice(args);
    let code = blazemap::cli::run(full, &mut out);
    ensure!(code == 0, "`{}` exited with {code}", args.join(" "));
    String::from_utf8(out).map_err(|e| e.to_string())
}

fn pipeline_in(root: &Path) -> Result<String, String> {
    let scenario = root.join("scenario");
    let run = root.join("run");
    let (s, r) = (scenario.to_str().unwrap(), run.to_str().unwrap());
    let manifest = scenario.join("manifest.json");
    let m = manifest.to_str().unwrap();
    cli(&["synth", "--seed", "7", "--out", s])?;
    cli(&["perimeters", "--manifest", m, "--out", r])?;
    cli(&["downscale", "--manifest", m, "--out", r])?;
    cli(&["assess", "--manifest", m, "--out", r])?;
    cli(&["report", "--out", r])
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn golden_run() -> Result<(String, Golden), String> {
    let a = ok(tempfile::tempdir())?;
    let b = ok(tempfile::tempdir())?;
    let text = pipeline_in(a.path())?;
    let again = pipeline_in(b.path())?;

    let truth = ok(GroundTruth::read(&a.path().join("scenario/ground_truth.csv")))?;
    let records = ok(read_report(&a.path().join("run/report.csv")))?;
    ensure!(
        records.len() == truth.rows.len(),
        "{} report rows vs {} ground-truth rows",
        records.len(),
        truth.rows.len()
    );
    for (r, t) in records.iter().zip(&truth.rows) {
        let at = format!("{} {}", t.date, t.district);
        ensure!(r.date == t.date && r.district == t.district, "row order differs at {at}");
        ensure!(r.burned_cells == t.burned_cells, "{at}: burned cells {} vs {}", r.burned_cells, t.burned_cells);
        ensure!(r.land_loss_total() == t.land_loss, "{at}: land {} vs {}", r.land_loss_total(), t.land_loss);
        ensure!(r.road_loss_total() == t.road_loss, "{at}: road {} vs {}", r.road_loss_total(), t.road_loss);
        ensure!(r.building_loss == t.building_loss, "{at}: building {} vs {}", r.building_loss, t.building_loss);
        ensure!(r.building_count == t.building_count, "{at}: buildings {} vs {}", r.building_count, t.building_count);
        ensure!(r.poi_total() == t.poi_count, "{at}: pois {} vs {}", r.poi_total(), t.poi_count);
        ensure!(
            r.exposed_population == t.exposed_population,
            "{at}: exposure {} vs {}",
            r.exposed_population,
            t.exposed_population
        );
        let len: f64 = r.road_length_m.values().sum();
        ensure!(
            (len - t.road_length_m).abs() <= 1e-9 * t.road_length_m.max(1.0),
            "{at}: road length {len} vs {}",
            t.road_length_m
        );
    }

    let (ta, tb) = (tree(a.path()), tree(b.path()));
    ensure!(ta.keys().eq(tb.keys()), "repeated run wrote a different file set");
    for (p, bytes) in &ta {
        ensure!(tb[p] == *bytes, "{} differs between runs", p.display());
    }
    ensure!(text == again, "report output differs between runs");

    let peak = |district: &str| -> Option<String> {
        let mut lines = text.lines().skip_while(|l| *l != format!("district {district}"));
        lines.find_map(|l| l.trim().strip_prefix("peak burned_cells: ").map(|s| s[..10].to_string()))
    };
    ensure!(peak("A").as_deref() == Some("2025-01-07"), "district A peaks on {:?}", peak("A"));
    ensure!(peak("B").as_deref() == Some("2025-01-11"), "district B peaks on {:?}", peak("B"));
    let total: Cents = records.iter().map(|r| r.total_loss()).sum();
    Ok((
        format!(
            "{} rows match ground truth, {} files byte-identical on rerun, peaks A 2025-01-07 / B 2025-01-11, total ${total}",
            records.len(),
            ta.len()
        ),
        Golden {
            records,
            report_text: text,
        },
    ))
}

// 8 ------------------------------------------------------------------------

fn random_tract(rng: &mut rand_chacha::ChaCha8Rng, id: &str) -> TractDemographics {
    let mut split = |n: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    };
    let (g, a, r) = (split(2), split(3), split(5));
    TractDemographics {
        tract_id: id.into(),
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
}

fn demographic_consistency(golden: &Golden) -> Outcome {
    let check = |sums: [f64; 3], total: f64, at: &str| -> Result<(), String> {
        for (g, s) in ["gender", "age", "race"].iter().zip(sums) {
            ensure!(
                (s - total).abs() <= 1e-6 * total.max(f64::MIN_POSITIVE) || (total == 0.0 && s == 0.0),
                "{at}: {g} group sums to {s}, exposure {total}"
            );
        }
        Ok(())
    };
    for r in &golden.records {
        check(r.demographics.group_sums(), r.exposed_population, &format!("{} {}", r.date, r.district))?;
    }

    let mut rng = rng(808);
    let square = ok(Polygon::rectangle(0.0, 0.0, 1.0, 1.0))?;
    for case in 0..300 {
        let n_tracts = rng.random_range(1..6);
        let tracts: BTreeMap<String, TractDemographics> = (0..n_tracts)
            .map(|t| (format!("t{t}"), random_tract(&mut rng, &format!("t{t}"))))
            .collect();
        let blocks: Vec<CensusBlock> = (0..rng.random_range(1..20))
            .map(|b| {
                CensusBlock::new(format!("b{b}"), vec![square.clone()], 1.0, format!("t{}", rng.random_range(0..n_tracts)))
                    .unwrap()
            })
            .collect();
        let exposure: BTreeMap<usize, f64> = (0..blocks.len())
            .filter(|_| rng.random::<bool>())
            .collect::<Vec<_>>()
            .into_iter()
            .map(|b| (b, rng.random_range(0.0..2000.0)))
            .collect();
        let total: f64 = exposure.values().sum();
        let counts = ok(demographic_breakdown(&exposure, &blocks, &tracts))?;
        check(counts.group_sums(), total, &format!("random case {case}"))?;
    }

    let tract = TractDemographics {
        tract_id: "t".into(),
        female_share: 0.523,
        male_share: 0.477,
        age_0_17: 0.2,
        age_18_64: 0.6,
        age_65_plus: 0.2,
        white: 1.0,
        asian: 0.0,
        black: 0.0,
        multiracial: 0.0,
        other: 0.0,
    };
    let blocks = [ok(CensusBlock::new("b", vec![square], 1000.0, "t"))?];
    let counts = ok(demographic_breakdown(
        &BTreeMap::from([(0, 1000.0)]),
        &blocks,
        &BTreeMap::from([("t".to_string(), tract)]),
    ))?;
    ensure!((counts.female - 523.0).abs() <= 1e-9, "worked example gives {} female", counts.female);
    ensure!(counts.female.round() == 523.0 && counts.male.round() == 477.0, "worked example rounding");
    Ok(format!(
        "{} golden records and 300 random breakdowns consistent; 52.3% of 1000 -> {}",
        golden.records.len(),
        counts.female.round()
    ))
}

// 9 ------------------------------------------------------------------------

fn composition_sums(c: &Composition, at: &str) -> Result<usize, String> {
    let mut n = 0;
    for (label, parts) in [("land", &c.land), ("road", &c.road), ("poi", &c.poi)] {
        if parts.is_empty() {
            continue;
        }
        let s: f64 = parts.values().sum();
        ensure!((s - 100.0).abs() <= 0.01, "{at}: {label} composition sums to {s}");
        n += 1;
    }
    Ok(n)
}

fn printed_sums(text: &str) -> Result<usize, String> {
    let mut n = 0;
    for line in text.lines().filter(|l| l.contains(" composition: ")) {
        let body = line.split(" composition: ").nth(1).unwrap();
        let s: f64 = body
            .split(", ")
            .map(|part| part.rsplit(' ').next().unwrap().trim_end_matches('%').parse::<f64>().unwrap())
            .sum();
        ensure!((s - 100.0).abs() <= 0.01, "printed `{line}` sums to {s}");
        n += 1;
    }
    Ok(n)
}

fn compositions(golden: &Golden) -> Outcome {
    let summary = ok(summarize(&golden.records))?;
    let mut checked = composition_sums(&summary.composition, "event")?;
    for d in &summary.districts {
        checked += composition_sums(&d.composition, &d.name)?;
    }
    let printed = printed_sums(&golden.report_text)?;
    ensure!(printed == checked, "{printed} printed composition lines vs {checked} categories");

    let mut rng = rng(909);
    let date = NaiveDate::from_ymd_opt(2025, 1, 7).unwrap();
    for case in 0..300 {
        let records: Vec<DailyImpactRecord> = (0..rng.random_range(1..12))
            .map(|k| {
                let mut r = DailyImpactRecord::empty(
                    date + chrono::Days::new(rng.random_range(0..5)),
                    format!("D{}", k % 3),
                );
                for code in NLCD {
                    if rng.random::<f64>() < 0.6 {
                        r.land_loss.insert(code, Cents(rng.random_range(0..10_000_000)));
                    }
                }
                for class in ["primary", "residential", "service", "track"] {
                    if rng.random::<bool>() {
                        r.road_loss.insert(class.into(), Cents(rng.random_range(1..500_000)));
                    }
                }
                for kind in ["retail", "school", "clinic", "dining", "worship", "transit", "park"] {
                    if rng.random::<bool>() {
                        r.poi_count.insert(kind.into(), rng.random_range(0..40));
                    }
                }
                r
            })
            .collect();
        let s = ok(summarize(&records))?;
        let mut n = composition_sums(&s.composition, &format!("case {case}"))?;
        for d in &s.districts {
            n += composition_sums(&d.composition, &format!("case {case} {}", d.name))?;
        }
        let p = printed_sums(&s.to_string())?;
        ensure!(p == n, "case {case}: {p} printed lines vs {n} categories");
    }
    Ok(format!("{checked} golden categories and 300 random summaries sum to 100 +- 0.01"))
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |n: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().cloned().unwrap_or_default())));
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(e) => ("FAIL", e.as_str()),
        };
        println!("{tag} [{n}] {name}: {detail}");
        results.push((n, name, outcome));
    };
    run(1, "mass preservation", &mass_preservation);
    run(2, "dasymetric hand oracle", &hand_oracle);
    run(3, "KDE oracle", &kde_oracle);
    run(4, "perimeter bookkeeping", &perimeter_bookkeeping);
    run(5, "overlay oracles", &overlay_oracles);
    run(6, "geometry round trip", &geometry_round_trip);
    let golden = match golden_run() {
        Ok((detail, g)) => {
            run(7, "golden scenario", &|| Ok(detail.clone()));
            Some(g)
        }
        Err(e) => {
            run(7, "golden scenario", &|| Err(e.clone()));
            None
        }
    };
    match &golden {
        Some(g) => {
            run(8, "demographic consistency", &|| demographic_consistency(g));
            run(9, "composition percentages", &|| compositions(g));
        }
        None => {
            run(8, "demographic consistency", &|| Err("golden run unavailable".into()));
            run(9, "composition percentages", &|| Err("golden run unavailable".into()));
        }
    }
    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
