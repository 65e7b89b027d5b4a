//! On-disk formats: the run manifest, ESRI ASCII grids, a GeoJSON subset,
//! CSV tables, JSON configs and SVG map renders.
//!
//! Every writer is deterministic. Maps are ordered, floats are written in
//! shortest round-trip form (grids use 17 significant digits) and nothing
//! time-dependent is emitted.

mod ascii;
mod geojson;
mod svg;
mod tables;

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use ascii::*;
pub use geojson::*;
pub use svg::*;
pub use tables::*;

use crate::error::{Error, Result};
use crate::fire::KdeParams;
use crate::grid::{AnalysisGrid, PlanarFrame};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents`, creating parent directories as needed.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn json_error(path: &Path, e: serde_json::Error) -> Error {
    if e.is_data() {
        Error::schema(path, format!("line {}", e.line()), e.to_string())
    } else {
        Error::format(path, e.line(), e.to_string())
    }
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| json_error(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    write_text(path, &s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub origin_x: f64,
    pub origin_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// A run's inputs: planar frame, analysis grid and one file per data role.
/// Relative paths are resolved against the manifest's own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub origin_lon: f64,
    pub origin_lat: f64,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_window: Option<EventWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kde: Option<KdeParams>,
    pub detections: PathBuf,
    pub landcover: PathBuf,
    pub official_perimeter: PathBuf,
    pub blocks: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roads: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buildings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pois: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demographics: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    /// Parses the manifest and checks that every declared file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: Manifest = read_json(path)?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        m.grid()?;
        if !(m.origin_lon.is_finite() && (-180.0..=180.0).contains(&m.origin_lon)) {
            return Err(Error::schema(path, "origin_lon", "must lie in [-180, 180]"));
        }
        if !(m.origin_lat.is_finite() && (-90.0..90.0).contains(&m.origin_lat)) {
            return Err(Error::schema(path, "origin_lat", "must lie in [-90, 90)"));
        }
        if let Some(w) = m.event_window {
            if w.start > w.end {
                return Err(Error::schema(path, "event_window", "start is after end"));
            }
        }
        if let Some(k) = &m.kde {
            k.validate()?;
        }
        for (role, p) in m.roles() {
            let full = m.resolve(p);
            if !full.is_file() {
                return Err(Error::schema(
                    path,
                    role,
                    format!("{} does not exist", full.display()),
                ));
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Declared (role, path) pairs in a fixed order.
    pub fn roles(&self) -> Vec<(&'static str, &Path)> {
        let mut out: Vec<(&'static str, &Path)> = vec![
            ("detections", &self.detections),
            ("landcover", &self.landcover),
            ("official_perimeter", &self.official_perimeter),
            ("blocks", &self.blocks),
        ];
        let optional = [
            ("roads", &self.roads),
            ("buildings", &self.buildings),
            ("pois", &self.pois),
            ("weights", &self.weights),
            ("costs", &self.costs),
            ("demographics", &self.demographics),
        ];
        out.extend(optional.into_iter().filter_map(|(r, p)| p.as_deref().map(|p| (r, p))));
        out
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn frame(&self) -> PlanarFrame {
        PlanarFrame::new(self.origin_lon, self.origin_lat)
    }

    pub fn grid(&self) -> Result<AnalysisGrid> {
        let g = self.grid;
        Ok(AnalysisGrid::new(g.origin_x, g.origin_y, g.cell_size, g.n_rows, g.n_cols)?.with_frame(self.frame()))
    }

    pub fn window(&self) -> Option<(NaiveDate, NaiveDate)> {
        self.event_window.map(|w| (w.start, w.end))
    }
}
