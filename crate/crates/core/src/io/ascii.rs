use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::grid::{AnalysisGrid, CategoryRaster, Mask, PlanarFrame, RealRaster};

pub const DEFAULT_NODATA: i32 = -9999;

/// A grid file whose value type was inferred from its contents.
#[derive(Debug, Clone, PartialEq)]
pub enum AsciiRaster {
    Category(CategoryRaster),
    Real(RealRaster),
}

struct Parsed<'a> {
    grid: AnalysisGrid,
    nodata: Option<&'a str>,
    /// (line number, tokens) for each data row.
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn parse<'a>(path: &Path, text: &'a str, frame: PlanarFrame) -> Result<Parsed<'a>> {
    let mut header: [Option<&str>; 6] = [None; 6];
    const KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"];
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        let mut it = line.split_whitespace();
        let Some(key) = it.next() else {
            lines.next();
            continue;
        };
        let key = key.to_ascii_lowercase();
        let Some(k) = KEYS.iter().position(|k| *k == key) else {
            if key == "xllcenter" || key == "yllcenter" {
                return Err(Error::format(path, lines.peek().unwrap().0 + 1, "cell-center origins are not supported; use xllcorner/yllcorner"));
            }
            break;
        };
        let (n, _) = lines.next().unwrap();
        let value = it.next().ok_or_else(|| Error::format(path, n + 1, format!("header `{key}` has no value")))?;
        if header[k].replace(value).is_some() {
            return Err(Error::format(path, n + 1, format!("duplicate header `{key}`")));
        }
    }
    let need = |k: usize| header[k].ok_or_else(|| Error::schema(path, KEYS[k], "missing header"));
    let int = |k: usize| -> Result<usize> {
        need(k)?.parse().map_err(|_| Error::schema(path, KEYS[k], "not a non-negative integer"))
    };
    let real = |k: usize| -> Result<f64> {
        need(k)?.parse().map_err(|_| Error::schema(path, KEYS[k], "not a number"))
    };
    let (n_cols, n_rows) = (int(0)?, int(1)?);
    let grid = AnalysisGrid::new(real(2)?, real(3)?, real(4)?, n_rows, n_cols)?.with_frame(frame);
    let rows: Vec<(usize, Vec<&str>)> = lines
        .map(|(n, l)| (n + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty())
        .collect();
    if rows.len() != n_rows {
        let line = rows.last().map_or(text.lines().count(), |r| r.0);
        return Err(Error::format(path, line, format!("expected {n_rows} data rows, found {}", rows.len())));
    }
    if let Some((n, t)) = rows.iter().find(|(_, t)| t.len() != n_cols) {
        return Err(Error::format(path, *n, format!("expected {n_cols} values, found {}", t.len())));
    }
    Ok(Parsed {
        grid,
        nodata: header[5],
        rows,
    })
}

fn parse_cells<T: std::str::FromStr>(path: &Path, p: &Parsed<'_>, what: &str) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(p.grid.len());
    for (n, tokens) in &p.rows {
        for t in tokens {
            out.push(t.parse().map_err(|_| Error::format(path, *n, format!("`{t}` is not {what}")))?);
        }
    }
    Ok(out)
}

pub fn read_category_grid(path: &Path, frame: PlanarFrame) -> Result<CategoryRaster> {
    let text = read_text(path)?;
    let p = parse(path, &text, frame)?;
    let nodata = match p.nodata {
        Some(s) => s.parse().map_err(|_| Error::schema(path, "NODATA_value", "not an integer"))?,
        None => DEFAULT_NODATA,
    };
    CategoryRaster::new(p.grid, parse_cells(path, &p, "an integer class code")?, nodata)
}

/// Reads a real-valued grid. NODATA markers are kept as their numeric value.
pub fn read_real_grid(path: &Path, frame: PlanarFrame) -> Result<RealRaster> {
    let text = read_text(path)?;
    let p = parse(path, &text, frame)?;
    RealRaster::new(p.grid, parse_cells(path, &p, "a finite number")?)
}

/// Reads a grid as categories when every value is an integer, else as reals.
pub fn read_ascii_grid(path: &Path, frame: PlanarFrame) -> Result<AsciiRaster> {
    let text = read_text(path)?;
    let p = parse(path, &text, frame)?;
    let integral = p.nodata.is_none_or(|s| s.parse::<i32>().is_ok())
        && p.rows.iter().all(|(_, t)| t.iter().all(|v| v.parse::<i32>().is_ok()));
    if integral {
        let nodata = p.nodata.map_or(DEFAULT_NODATA, |s| s.parse().unwrap());
        Ok(AsciiRaster::Category(CategoryRaster::new(p.grid, parse_cells(path, &p, "an integer")?, nodata)?))
    } else {
        Ok(AsciiRaster::Real(RealRaster::new(p.grid, parse_cells(path, &p, "a finite number")?)?))
    }
}

fn header(grid: &AnalysisGrid, nodata: &str) -> String {
    format!(
        "ncols        {}\nnrows        {}\nxllcorner    {:?}\nyllcorner    {:?}\ncellsize     {:?}\nNODATA_value {nodata}\n",
        grid.n_cols, grid.n_rows, grid.origin_x, grid.origin_y, grid.cell_size
    )
}

fn body<T>(grid: &AnalysisGrid, cells: &[T], mut fmt: impl FnMut(&mut String, &T)) -> String {
    let mut s = String::with_capacity(cells.len() * 4);
    for row in cells.chunks(grid.n_cols) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            fmt(&mut s, v);
        }
        s.push('\n');
    }
    s
}

pub fn category_grid_string(r: &CategoryRaster) -> String {
    header(&r.grid, &r.nodata.to_string()) + &body(&r.grid, &r.cells, |s, v| write!(s, "{v}").unwrap())
}

/// Reals are written with 17 significant digits, enough to read back the
/// identical `f64`.
pub fn real_grid_string(r: &RealRaster) -> String {
    header(&r.grid, &DEFAULT_NODATA.to_string()) + &body(&r.grid, &r.cells, |s, v| write!(s, "{v:.16e}").unwrap())
}

pub fn write_category_grid(r: &CategoryRaster, path: &Path) -> Result<()> {
    write_text(path, &category_grid_string(r))
}

pub fn write_real_grid(r: &RealRaster, path: &Path) -> Result<()> {
    write_text(path, &real_grid_string(r))
}

/// A mask as a 0/1 category grid.
pub fn write_mask_grid(m: &Mask, path: &Path) -> Result<()> {
    let cells = m.bits.iter().map(|&b| b as i32).collect();
    write_category_grid(&CategoryRaster::new(m.grid, cells, DEFAULT_NODATA)?, path)
}

pub fn read_mask_grid(path: &Path, frame: PlanarFrame) -> Result<Mask> {
    let r = read_category_grid(path, frame)?;
    if let Some(v) = r.cells.iter().find(|&&v| v != 0 && v != 1) {
        return Err(Error::format(path, 0, format!("mask grids hold 0 or 1, found {v}")));
    }
    Mask::from_bits(r.grid, r.cells.iter().map(|&v| v == 1).collect())
}
