use std::path::Path;

use serde_json::{json, Map, Value};

use super::{read_text, write_text};
use crate::dasymetric::CensusBlock;
use crate::error::{Error, Result};
use crate::geometry::{project_lonlat, unproject, Point, PolyLine, Polygon};
use crate::grid::PlanarFrame;
use crate::impact::{BuildingFeature, District, PoiFeature, RoadFeature};

/// Planar geometry of one GeoJSON feature.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Point),
    LineString(PolyLine),
    Polygon(Polygon),
    MultiPolygon(Vec<Polygon>),
}

impl Geometry {
    fn type_name(&self) -> &'static str {
        match self {
            Geometry::Point(_) => "Point",
            Geometry::LineString(_) => "LineString",
            Geometry::Polygon(_) => "Polygon",
            Geometry::MultiPolygon(_) => "MultiPolygon",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub geometry: Geometry,
    pub properties: Map<String, Value>,
}

impl Feature {
    pub fn new(geometry: Geometry) -> Self {
        Self {
            geometry,
            properties: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.properties.insert(key.to_string(), value.into());
        self
    }
}

struct Ctx<'a> {
    path: &'a Path,
    frame: PlanarFrame,
}

impl Ctx<'_> {
    fn err(&self, field: String, message: impl Into<String>) -> Error {
        Error::schema(self.path, field, message)
    }

    fn position(&self, v: &Value, field: &str) -> Result<Point> {
        let a = v.as_array().filter(|a| a.len() >= 2);
        let coords = a.and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)));
        match coords {
            Some((lon, lat)) if lon.is_finite() && lat.is_finite() => Ok(project_lonlat(lon, lat, self.frame)),
            _ => Err(self.err(field.to_string(), "expected a [lon, lat] position")),
        }
    }

    fn positions(&self, v: &Value, field: &str) -> Result<Vec<Point>> {
        let a = v
            .as_array()
            .ok_or_else(|| self.err(field.to_string(), "expected an array of positions"))?;
        a.iter()
            .enumerate()
            .map(|(i, p)| self.position(p, &format!("{field}[{i}]")))
            .collect()
    }

    fn polygon(&self, v: &Value, field: &str) -> Result<Polygon> {
        let rings = v
            .as_array()
            .filter(|a| !a.is_empty())
            .ok_or_else(|| self.err(field.to_string(), "expected a non-empty array of rings"))?;
        let mut rings = rings
            .iter()
            .enumerate()
            .map(|(i, r)| self.positions(r, &format!("{field}[{i}]")));
        let exterior = rings.next().unwrap()?;
        let interiors = rings.collect::<Result<Vec<_>>>()?;
        Polygon::new(exterior, interiors).map_err(|e| self.err(field.to_string(), e.to_string()))
    }

    fn geometry(&self, v: &Value, field: &str) -> Result<Geometry> {
        let ty = v
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| self.err(format!("{field}.type"), "missing geometry type"))?;
        let coords = v
            .get("coordinates")
            .ok_or_else(|| self.err(format!("{field}.coordinates"), "missing coordinates"))?;
        let cf = format!("{field}.coordinates");
        Ok(match ty {
            "Point" => Geometry::Point(self.position(coords, &cf)?),
            "LineString" => Geometry::LineString(
                PolyLine::new(self.positions(coords, &cf)?).map_err(|e| self.err(cf.clone(), e.to_string()))?,
            ),
            "Polygon" => Geometry::Polygon(self.polygon(coords, &cf)?),
            "MultiPolygon" => {
                let parts = coords
                    .as_array()
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| self.err(cf.clone(), "expected a non-empty array of polygons"))?;
                Geometry::MultiPolygon(
                    parts
                        .iter()
                        .enumerate()
                        .map(|(i, p)| self.polygon(p, &format!("{cf}[{i}]")))
                        .collect::<Result<_>>()?,
                )
            }
            other => return Err(self.err(format!("{field}.type"), format!("unsupported geometry type `{other}`"))),
        })
    }
}

/// Reads a FeatureCollection of Point, LineString, Polygon and MultiPolygon
/// features, projecting lon/lat positions into the planar frame.
pub fn read_vector(path: &Path, frame: PlanarFrame) -> Result<Vec<Feature>> {
    let text = read_text(path)?;
    let root: Value = serde_json::from_str(&text).map_err(|e| Error::format(path, e.line(), e.to_string()))?;
    let ctx = Ctx { path, frame };
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(ctx.err("type".into(), "expected a FeatureCollection"));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| ctx.err("features".into(), "missing features array"))?;
    features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let field = format!("features[{i}]");
            let geometry = ctx.geometry(
                f.get("geometry").filter(|g| !g.is_null()).ok_or_else(|| ctx.err(format!("{field}.geometry"), "missing geometry"))?,
                &format!("{field}.geometry"),
            )?;
            let properties = match f.get("properties") {
                None | Some(Value::Null) => Map::new(),
                Some(Value::Object(m)) => m.clone(),
                Some(_) => return Err(ctx.err(format!("{field}.properties"), "expected an object")),
            };
            Ok(Feature { geometry, properties })
        })
        .collect()
}

fn position_json(p: Point, frame: PlanarFrame) -> Value {
    let (lon, lat) = unproject(p, frame);
    json!([lon, lat])
}

fn ring_json(ring: &[Point], frame: PlanarFrame) -> Value {
    Value::Array(ring.iter().map(|&p| position_json(p, frame)).collect())
}

fn polygon_json(poly: &Polygon, frame: PlanarFrame) -> Value {
    Value::Array(poly.rings().map(|r| ring_json(r, frame)).collect())
}

fn geometry_json(g: &Geometry, frame: PlanarFrame) -> Value {
    let coordinates = match g {
        Geometry::Point(p) => position_json(*p, frame),
        Geometry::LineString(l) => ring_json(l.vertices(), frame),
        Geometry::Polygon(p) => polygon_json(p, frame),
        Geometry::MultiPolygon(ps) => Value::Array(ps.iter().map(|p| polygon_json(p, frame)).collect()),
    };
    json!({ "type": g.type_name(), "coordinates": coordinates })
}

/// Serializes features as lon/lat GeoJSON, one feature per line.
pub fn vector_string(features: &[Feature], frame: PlanarFrame) -> String {
    let mut s = String::from("{\"type\":\"FeatureCollection\",\"features\":[");
    for (i, f) in features.iter().enumerate() {
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        let v = json!({
            "type": "Feature",
            "properties": Value::Object(f.properties.clone()),
            "geometry": geometry_json(&f.geometry, frame),
        });
        s.push_str(&v.to_string());
    }
    s.push_str("\n]}\n");
    s
}

pub fn write_vector(path: &Path, features: &[Feature], frame: PlanarFrame) -> Result<()> {
    write_text(path, &vector_string(features, frame))
}

fn prop<'a>(path: &Path, i: usize, f: &'a Feature, key: &str) -> Result<&'a Value> {
    f.properties
        .get(key)
        .filter(|v| !v.is_null())
        .ok_or_else(|| Error::schema(path, format!("features[{i}].properties.{key}"), "missing required property"))
}

fn prop_string(path: &Path, i: usize, f: &Feature, key: &str) -> Result<String> {
    match prop(path, i, f, key)? {
        Value::String(s) if !s.is_empty() => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Error::schema(path, format!("features[{i}].properties.{key}"), "expected a non-empty string")),
    }
}

fn polygons(path: &Path, i: usize, f: &Feature) -> Result<Vec<Polygon>> {
    match &f.geometry {
        Geometry::Polygon(p) => Ok(vec![p.clone()]),
        Geometry::MultiPolygon(ps) => Ok(ps.clone()),
        g => Err(Error::schema(
            path,
            format!("features[{i}].geometry.type"),
            format!("expected Polygon or MultiPolygon, found {}", g.type_name()),
        )),
    }
}

/// Census blocks. Properties: `block_id`, `pop`, `tract_id`.
pub fn read_blocks(path: &Path, frame: PlanarFrame) -> Result<Vec<CensusBlock>> {
    read_vector(path, frame)?
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let id = prop_string(path, i, f, "block_id")?;
            let pop = prop(path, i, f, "pop")?
                .as_f64()
                .ok_or_else(|| Error::schema(path, format!("features[{i}].properties.pop"), "expected a number"))?;
            let tract = prop_string(path, i, f, "tract_id")?;
            CensusBlock::new(id, polygons(path, i, f)?, pop, tract)
                .map_err(|e| Error::schema(path, format!("features[{i}]"), e.to_string()))
        })
        .collect()
}

/// Road centerlines. Property: `class`.
pub fn read_roads(path: &Path, frame: PlanarFrame) -> Result<Vec<RoadFeature>> {
    read_vector(path, frame)?
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let class = prop_string(path, i, &f, "class")?;
            match f.geometry {
                Geometry::LineString(line) => Ok(RoadFeature { class, line }),
                g => Err(Error::schema(
                    path,
                    format!("features[{i}].geometry.type"),
                    format!("expected LineString, found {}", g.type_name()),
                )),
            }
        })
        .collect()
}

/// Building footprints. Property `id` is optional and defaults to the
/// feature index.
pub fn read_buildings(path: &Path, frame: PlanarFrame) -> Result<Vec<BuildingFeature>> {
    read_vector(path, frame)?
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let id = match f.properties.get("id") {
                None | Some(Value::Null) => i.to_string(),
                Some(_) => prop_string(path, i, &f, "id")?,
            };
            match f.geometry {
                Geometry::Polygon(footprint) => Ok(BuildingFeature { id, footprint }),
                g => Err(Error::schema(
                    path,
                    format!("features[{i}].geometry.type"),
                    format!("expected Polygon, found {}", g.type_name()),
                )),
            }
        })
        .collect()
}

/// Points of interest. Property: `category`.
pub fn read_pois(path: &Path, frame: PlanarFrame) -> Result<Vec<PoiFeature>> {
    read_vector(path, frame)?
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let category = prop_string(path, i, &f, "category")?;
            match f.geometry {
                Geometry::Point(location) => Ok(PoiFeature { category, location }),
                g => Err(Error::schema(
                    path,
                    format!("features[{i}].geometry.type"),
                    format!("expected Point, found {}", g.type_name()),
                )),
            }
        })
        .collect()
}

/// Official perimeters, one feature per district. Property: `name`.
pub fn read_districts(path: &Path, frame: PlanarFrame) -> Result<Vec<District>> {
    let fc = read_vector(path, frame)?;
    let mut out: Vec<District> = Vec::with_capacity(fc.len());
    for (i, f) in fc.iter().enumerate() {
        let name = prop_string(path, i, f, "name")?;
        if out.iter().any(|d| d.name == name) {
            return Err(Error::schema(path, format!("features[{i}].properties.name"), format!("duplicate district `{name}`")));
        }
        out.push(District {
            name,
            perimeter: polygons(path, i, f)?,
        });
    }
    Ok(out)
}
