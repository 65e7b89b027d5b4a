//! Python bindings: projection, polygon area, kernel density, dasymetric
//! downscaling, scenario synthesis and the manifest-driven pipeline.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::NaiveDate;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use engine::dasymetric::{self, CensusBlock, WeightTable};
use engine::error::Error;
use engine::fire::{self, Detection, KdeParams};
use engine::geometry::{self, Point, Polygon};
use engine::grid::{AnalysisGrid, CategoryRaster, PlanarFrame};
use engine::impact::ExposureMode;
use engine::io::{self, Manifest};
use engine::pipeline::{self, AssessOptions};
use engine::synth::{generate, ScenarioSpec};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows_of(values: &[f64], n_cols: usize) -> Vec<Vec<f64>> {
    values.chunks(n_cols).map(<[f64]>::to_vec).collect()
}

fn polygon(ring: Vec<(f64, f64)>) -> PyResult<Polygon> {
    Polygon::new(ring.into_iter().map(|(x, y)| Point::new(x, y)).collect(), vec![]).map_err(py_err)
}

/// Planar (x, y) in metres of a lon/lat pair about the given origin.
#[pyfunction]
fn project_lonlat(lon: f64, lat: f64, origin_lon: f64, origin_lat: f64) -> (f64, f64) {
    let p = geometry::project_lonlat(lon, lat, PlanarFrame::new(origin_lon, origin_lat));
    (p.x, p.y)
}

/// Area in m² of a planar ring given as [(x, y), ...].
#[pyfunction]
fn polygon_area(ring: Vec<(f64, f64)>) -> PyResult<f64> {
    Ok(geometry::polygon_area(&polygon(ring)?))
}

/// Gaussian kernel density at cell centers, as a list of rows (north first).
#[pyfunction]
#[pyo3(signature = (points, origin_x, origin_y, cell_size, n_rows, n_cols, bandwidth_m=750.0, cutoff_sigmas=4.0))]
#[allow(clippy::too_many_arguments)]
fn kde_surface(
    points: Vec<(f64, f64)>,
    origin_x: f64,
    origin_y: f64,
    cell_size: f64,
    n_rows: usize,
    n_cols: usize,
    bandwidth_m: f64,
    cutoff_sigmas: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let grid = AnalysisGrid::new(origin_x, origin_y, cell_size, n_rows, n_cols).map_err(py_err)?;
    let date = NaiveDate::default();
    let dets: Vec<Detection> = points.into_iter().map(|(x, y)| Detection::at(Point::new(x, y), date)).collect();
    let params = KdeParams {
        bandwidth_m,
        cutoff_sigmas,
        ..KdeParams::default()
    };
    let surface = fire::kde_surface(&dets, &grid, &params).map_err(py_err)?;
    Ok(rows_of(&surface.cells, n_cols))
}

type BlockArg = (String, Vec<(f64, f64)>, f64);

/// Spreads block populations over land-cover cells.
///
/// `landcover` is a list of rows (north first); `blocks` holds
/// `(block_id, ring, pop)` tuples with planar rings. Returns persons per
/// cell as a list of rows.
#[pyfunction]
#[pyo3(signature = (landcover, blocks, origin_x=0.0, origin_y=0.0, cell_size=20.0, weights=None))]
fn downscale(
    landcover: Vec<Vec<i32>>,
    blocks: Vec<BlockArg>,
    origin_x: f64,
    origin_y: f64,
    cell_size: f64,
    weights: Option<BTreeMap<i32, f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let n_rows = landcover.len();
    let n_cols = landcover.first().map_or(0, Vec::len);
    if landcover.iter().any(|r| r.len() != n_cols) {
        return Err(PyValueError::new_err("landcover rows differ in length"));
    }
    let grid = AnalysisGrid::new(origin_x, origin_y, cell_size, n_rows, n_cols).map_err(py_err)?;
    let lc = CategoryRaster::new(grid, landcover.into_iter().flatten().collect(), -9999).map_err(py_err)?;
    let weights = match weights {
        Some(w) => WeightTable::new(w).map_err(py_err)?,
        None => WeightTable::nlcd_default(),
    };
    let blocks = blocks
        .into_iter()
        .map(|(id, ring, pop)| CensusBlock::new(id, vec![polygon(ring)?], pop, "").map_err(py_err))
        .collect::<PyResult<Vec<_>>>()?;
    let pg = dasymetric::downscale(&blocks, &lc, &weights, &grid).map_err(py_err)?;
    Ok(rows_of(&pg.raster.cells, n_cols))
}

/// Writes the demo scenario for `seed` into `out_dir` and returns the
/// ground-truth rows as dicts.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=7))]
fn synth<'py>(py: Python<'py>, out_dir: PathBuf, seed: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let (_, truth) = generate(&ScenarioSpec::demo(seed), &out_dir).map_err(py_err)?;
    truth
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("date", r.date.to_string())?;
            d.set_item("district", &r.district)?;
            d.set_item("burned_cells", r.burned_cells)?;
            d.set_item("land_loss_usd", r.land_loss.dollars())?;
            d.set_item("road_loss_usd", r.road_loss.dollars())?;
            d.set_item("building_loss_usd", r.building_loss.dollars())?;
            d.set_item("building_count", r.building_count)?;
            d.set_item("poi_count", r.poi_count)?;
            d.set_item("exposed_population", r.exposed_population)?;
            d.set_item("road_length_m", r.road_length_m)?;
            Ok(d)
        })
        .collect()
}

/// Perimeters, downscaling and assessment for a manifest. Writes
/// `report.csv` under `out_dir` and returns one dict per (date, district).
#[pyfunction]
#[pyo3(signature = (manifest, out_dir, active_extent=false))]
fn run_pipeline<'py>(
    py: Python<'py>,
    manifest: PathBuf,
    out_dir: PathBuf,
    active_extent: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let m = Manifest::load(&manifest).map_err(py_err)?;
    let records = py
        .detach(|| -> Result<_, Error> {
            let perims = pipeline::run_perimeters(&m, &pipeline::kde_params(&m))?;
            let pop = pipeline::run_downscale(&m, &pipeline::load_weights(&m, None)?)?;
            let costs = pipeline::load_costs(&m, None)?;
            let opts = AssessOptions {
                exposure: if active_extent { ExposureMode::ActiveExtent } else { ExposureMode::NewBurn },
            };
            let records = pipeline::run_assess(&perims, &pop, &m, &costs, opts)?;
            io::write_report(&records, &out_dir.join("report.csv"))?;
            Ok(records)
        })
        .map_err(py_err)?;
    records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("date", r.date.to_string())?;
            d.set_item("district", &r.district)?;
            d.set_item("burned_cells", r.burned_cells)?;
            d.set_item("land_loss_usd", r.land_loss_total().dollars())?;
            d.set_item("road_loss_usd", r.road_loss_total().dollars())?;
            d.set_item("building_loss_usd", r.building_loss.dollars())?;
            d.set_item("building_count", r.building_count)?;
            d.set_item("poi_count", r.poi_total())?;
            d.set_item("exposed_population", r.exposed_population)?;
            d.set_item("total_loss_usd", r.total_loss().dollars())?;
            Ok(d)
        })
        .collect()
}

/// Totals, peak days and compositions for a report, as printed by the CLI.
#[pyfunction]
fn summarize(report_csv: PathBuf) -> PyResult<String> {
    let records = io::read_report(&report_csv).map_err(py_err)?;
    Ok(engine::impact::summarize(&records).map_err(py_err)?.to_string())
}

#[pymodule(name = "blazemap")]
fn blazemap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(project_lonlat, m)?)?;
    m.add_function(wrap_pyfunction!(polygon_area, m)?)?;
    m.add_function(wrap_pyfunction!(kde_surface, m)?)?;
    m.add_function(wrap_pyfunction!(downscale, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    Ok(())
}
