use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;

use super::{read_json, read_text, write_json, write_text};
use crate::dasymetric::{MassReport, WeightTable};
use crate::error::{Error, Result, RowError};
use crate::fire::{Confidence, Detection};
use crate::geometry::{project_lonlat, unproject};
use crate::grid::PlanarFrame;
use crate::impact::{Cents, CostModel, DailyImpactRecord, DemographicCounts, TractDemographics};

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::format(path, line, e.to_string())
}

/// Column positions by lowercased header name.
fn header_index(path: &Path, r: &mut csv::Reader<&[u8]>) -> Result<BTreeMap<String, usize>> {
    let headers = r.headers().map_err(|e| csv_err(path, e))?;
    Ok(headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_ascii_lowercase(), i))
        .collect())
}

fn require(path: &Path, cols: &BTreeMap<String, usize>, name: &str) -> Result<usize> {
    cols.get(name)
        .copied()
        .ok_or_else(|| Error::schema(path, name, "missing required column"))
}

/// FIRMS-style detections CSV. Required columns: `latitude`, `longitude`,
/// `acq_date`; optional `frp`, `confidence`, `acq_time`. All bad rows are
/// reported together.
pub fn read_detections(path: &Path, frame: PlanarFrame) -> Result<Vec<Detection>> {
    let text = read_text(path)?;
    let mut r = csv_reader(&text);
    let cols = header_index(path, &mut r)?;
    let lat_i = require(path, &cols, "latitude")?;
    let lon_i = require(path, &cols, "longitude")?;
    let date_i = require(path, &cols, "acq_date")?;
    let (frp_i, conf_i, time_i) = (cols.get("frp"), cols.get("confidence"), cols.get("acq_time"));

    let mut out = Vec::new();
    let mut errors = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut bad = |field: &str, message: String| {
            errors.push(RowError {
                line,
                field: field.to_string(),
                message,
            })
        };
        let get = |i: usize| rec.get(i).unwrap_or("");
        let coord = |i: usize, lim: f64| get(i).parse::<f64>().ok().filter(|v| v.is_finite() && v.abs() <= lim);
        let lat = coord(lat_i, 90.0);
        let lon = coord(lon_i, 180.0);
        let date = NaiveDate::parse_from_str(get(date_i), "%Y-%m-%d").ok();
        if lat.is_none() {
            bad("latitude", format!("`{}` is not a latitude", get(lat_i)));
        }
        if lon.is_none() {
            bad("longitude", format!("`{}` is not a longitude", get(lon_i)));
        }
        if date.is_none() {
            bad("acq_date", format!("`{}` is not a YYYY-MM-DD date", get(date_i)));
        }
        let frp = match frp_i.map(|&i| get(i)).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
                _ => {
                    bad("frp", format!("`{s}` is not a non-negative number"));
                    None
                }
            },
        };
        let confidence = match conf_i.map(|&i| get(i)).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => {
                let c = Confidence::parse(s);
                if c.is_none() {
                    bad("confidence", format!("`{s}` is not l/n/h"));
                }
                c
            }
        };
        let acq_time = time_i.map(|&i| get(i).to_string()).filter(|s| !s.is_empty());
        if let (Some(lat), Some(lon), Some(date)) = (lat, lon, date) {
            out.push(Detection {
                location: project_lonlat(lon, lat, frame),
                date,
                frp,
                confidence,
                acq_time,
            });
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Error::Rows {
            path: path.to_path_buf(),
            errors,
        })
    }
}

pub fn detections_string(dets: &[Detection], frame: PlanarFrame) -> String {
    let mut w = csv_writer();
    w.write_record(["latitude", "longitude", "acq_date", "frp", "confidence", "acq_time"]).unwrap();
    for d in dets {
        let (lon, lat) = unproject(d.location, frame);
        w.write_record([
            format!("{lat:?}"),
            format!("{lon:?}"),
            d.date.to_string(),
            d.frp.map(|f| format!("{f:?}")).unwrap_or_default(),
            d.confidence.map(|c| c.code().to_string()).unwrap_or_default(),
            d.acq_time.clone().unwrap_or_default(),
        ])
        .unwrap();
    }
    finish(w)
}

pub fn write_detections(path: &Path, dets: &[Detection], frame: PlanarFrame) -> Result<()> {
    write_text(path, &detections_string(dets, frame))
}

/// `{"<class code>": weight, ...}`
pub fn read_weights(path: &Path) -> Result<WeightTable> {
    let raw: BTreeMap<String, f64> = read_json(path)?;
    let mut map = BTreeMap::new();
    for (k, v) in raw {
        let code = k
            .trim()
            .parse::<i32>()
            .map_err(|_| Error::schema(path, k.clone(), "class codes must be integers"))?;
        map.insert(code, v);
    }
    WeightTable::new(map)
}

pub fn write_weights(path: &Path, weights: &WeightTable) -> Result<()> {
    let map: BTreeMap<String, f64> = weights.as_map().iter().map(|(k, v)| (k.to_string(), *v)).collect();
    write_json(path, &map)
}

/// `{"land_cost": {code: $/m²}, "road_cost": {class: $/m}, "building_cost": $/m²}`
pub fn read_costs(path: &Path) -> Result<CostModel> {
    let c: CostModel = read_json(path)?;
    c.validate()?;
    Ok(c)
}

pub fn write_costs(path: &Path, costs: &CostModel) -> Result<()> {
    write_json(path, costs)
}

pub fn read_demographics(path: &Path) -> Result<BTreeMap<String, TractDemographics>> {
    let text = read_text(path)?;
    let mut r = csv_reader(&text);
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut out = BTreeMap::new();
    let mut errors = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        match rec.deserialize::<TractDemographics>(Some(&headers)) {
            Ok(t) => {
                if let Err(e) = t.validate() {
                    errors.push(RowError { line, field: "shares".into(), message: e.to_string() });
                } else if out.contains_key(&t.tract_id) {
                    errors.push(RowError { line, field: "tract_id".into(), message: format!("duplicate tract `{}`", t.tract_id) });
                } else {
                    out.insert(t.tract_id.clone(), t);
                }
            }
            Err(e) => {
                let field = match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.field().and_then(|i| headers.get(i as usize)).unwrap_or("row").to_string(),
                    _ => "row".to_string(),
                };
                errors.push(RowError { line, field, message: e.to_string() });
            }
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Error::Rows { path: path.to_path_buf(), errors })
    }
}

pub fn write_demographics(path: &Path, tracts: &BTreeMap<String, TractDemographics>) -> Result<()> {
    let mut w = csv_writer();
    for t in tracts.values() {
        w.serialize(t).unwrap();
    }
    write_text(path, &finish(w))
}

pub const REPORT_COLUMNS: [&str; 8] = [
    "date",
    "district",
    "land_loss_usd",
    "road_loss_usd",
    "building_loss_usd",
    "building_count",
    "poi_count",
    "exposed_population",
];

fn report_extras(r: &DailyImpactRecord) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("burned_cells".to_string(), r.burned_cells.to_string());
    m.insert("exposed_population_rounded".to_string(), (r.exposed_population.round() as u64).to_string());
    for (name, v) in DemographicCounts::FIELDS.iter().zip(r.demographics.values()) {
        m.insert(format!("demographics[{name}]"), format!("{v:?}"));
    }
    for (k, v) in &r.land_loss {
        m.insert(format!("land_loss_usd[{k}]"), v.to_string());
    }
    for (k, v) in &r.road_loss {
        m.insert(format!("road_loss_usd[{k}]"), v.to_string());
    }
    for (k, v) in &r.road_length_m {
        m.insert(format!("road_length_m[{k}]"), format!("{v:?}"));
    }
    for (k, v) in &r.poi_count {
        m.insert(format!("poi_count[{k}]"), v.to_string());
    }
    m
}

/// Long-format report: one row per (date, district), fixed leading columns
/// then per-class columns in sorted order, absent values written as 0.
pub fn report_string(records: &[DailyImpactRecord]) -> String {
    let mut rows: Vec<&DailyImpactRecord> = records.iter().collect();
    rows.sort_by(|a, b| (a.date, &a.district).cmp(&(b.date, &b.district)));
    let extras: Vec<BTreeMap<String, String>> = rows.iter().map(|r| report_extras(r)).collect();
    let columns: BTreeSet<&String> = extras.iter().flat_map(|m| m.keys()).collect();

    let mut w = csv_writer();
    w.write_record(REPORT_COLUMNS.iter().copied().chain(columns.iter().map(|s| s.as_str())))
        .unwrap();
    for (r, extra) in rows.iter().zip(&extras) {
        let mut rec = vec![
            r.date.to_string(),
            r.district.clone(),
            r.land_loss_total().to_string(),
            r.road_loss_total().to_string(),
            r.building_loss.to_string(),
            r.building_count.to_string(),
            r.poi_total().to_string(),
            format!("{:?}", r.exposed_population),
        ];
        rec.extend(columns.iter().map(|c| extra.get(*c).cloned().unwrap_or_else(|| zero(c))));
        w.write_record(&rec).unwrap();
    }
    finish(w)
}

fn zero(column: &str) -> String {
    if column.starts_with("land_loss_usd[") || column.starts_with("road_loss_usd[") {
        Cents::ZERO.to_string()
    } else if column.starts_with("road_length_m[") {
        "0.0".to_string()
    } else {
        "0".to_string()
    }
}

pub fn write_report(records: &[DailyImpactRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no impact records to write"));
    }
    write_text(path, &report_string(records))
}

fn bracket<'a>(column: &'a str, prefix: &str) -> Option<&'a str> {
    column.strip_prefix(prefix)?.strip_prefix('[')?.strip_suffix(']')
}

/// Reads a report written by [`write_report`]. Zero-filled per-class cells
/// are dropped so the records compare equal to the originals.
pub fn read_report(path: &Path) -> Result<Vec<DailyImpactRecord>> {
    let text = read_text(path)?;
    let mut r = csv_reader(&text);
    let headers: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    if headers.len() < REPORT_COLUMNS.len() || headers.iter().zip(REPORT_COLUMNS).any(|(h, c)| h != c) {
        return Err(Error::schema(path, "header", format!("report must start with {}", REPORT_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != headers.len() {
            errors.push(RowError { line, field: "row".into(), message: format!("expected {} fields, found {}", headers.len(), rec.len()) });
            continue;
        }
        match parse_report_row(&headers, &rec) {
            Ok(row) => out.push(row),
            Err((field, message)) => errors.push(RowError { line, field, message }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Error::Rows { path: path.to_path_buf(), errors })
    }
}

fn parse_report_row(headers: &[String], rec: &csv::StringRecord) -> std::result::Result<DailyImpactRecord, (String, String)> {
    let fail = |h: &str, v: &str| (h.to_string(), format!("cannot parse `{v}`"));
    let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|_| fail("date", &rec[0]))?;
    let mut r = DailyImpactRecord::empty(date, &rec[1]);
    r.building_loss = rec[4].parse().map_err(|_| fail("building_loss_usd", &rec[4]))?;
    r.building_count = rec[5].parse().map_err(|_| fail("building_count", &rec[5]))?;
    r.exposed_population = rec[7].parse().map_err(|_| fail("exposed_population", &rec[7]))?;
    let mut demo = [0.0; 10];
    for (h, v) in headers.iter().zip(rec.iter()).skip(REPORT_COLUMNS.len()) {
        let f = || fail(h, v);
        if h == "burned_cells" {
            r.burned_cells = v.parse().map_err(|_| f())?;
        } else if h == "exposed_population_rounded" {
            v.parse::<u64>().map_err(|_| f())?;
        } else if let Some(k) = bracket(h, "demographics") {
            let i = DemographicCounts::FIELDS.iter().position(|n| *n == k).ok_or_else(|| (h.clone(), "unknown demographic group".to_string()))?;
            demo[i] = v.parse().map_err(|_| f())?;
        } else if let Some(k) = bracket(h, "land_loss_usd") {
            let c: Cents = v.parse().map_err(|_| f())?;
            if c != Cents::ZERO {
                r.land_loss.insert(k.parse().map_err(|_| (h.clone(), "land class must be an integer".to_string()))?, c);
            }
        } else if let Some(k) = bracket(h, "road_loss_usd") {
            let c: Cents = v.parse().map_err(|_| f())?;
            if c != Cents::ZERO {
                r.road_loss.insert(k.to_string(), c);
            }
        } else if let Some(k) = bracket(h, "road_length_m") {
            let l: f64 = v.parse().map_err(|_| f())?;
            if l != 0.0 {
                r.road_length_m.insert(k.to_string(), l);
            }
        } else if let Some(k) = bracket(h, "poi_count") {
            let n: u64 = v.parse().map_err(|_| f())?;
            if n != 0 {
                r.poi_count.insert(k.to_string(), n);
            }
        } else {
            return Err((h.clone(), "unknown report column".to_string()));
        }
    }
    r.demographics = DemographicCounts::from_values(demo);
    let check = |name: &str, col: usize, actual: String| {
        if rec[col] == actual {
            Ok(())
        } else {
            Err((name.to_string(), format!("total {} disagrees with per-class sum {actual}", &rec[col])))
        }
    };
    check("land_loss_usd", 2, r.land_loss_total().to_string())?;
    check("road_loss_usd", 3, r.road_loss_total().to_string())?;
    check("poi_count", 6, r.poi_total().to_string())?;
    Ok(r)
}

pub fn mass_report_string(report: &MassReport) -> String {
    let mut w = csv_writer();
    w.write_record(["block_id", "expected", "allocated", "rel_error", "fallback"]).unwrap();
    for e in &report.entries {
        w.write_record([
            e.block_id.clone(),
            format!("{:?}", e.expected),
            format!("{:?}", e.allocated),
            format!("{:e}", e.rel_error),
            e.fallback.map(|f| f.as_str().to_string()).unwrap_or_default(),
        ])
        .unwrap();
    }
    finish(w)
}

pub fn write_mass_report(report: &MassReport, path: &Path) -> Result<()> {
    write_text(path, &mass_report_string(report))
}
