//! GeoJSON zone geometry: loading, joining to zones by the `zone_id`
//! property, point containment, and writing analysis attributes back out.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use geoaccess_core::EARTH_RADIUS_MILES;

use crate::error::{CliError, CliResult};
use crate::format::{write_bytes, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneFeature {
    /// GeoJSON geometry object, or `null`.
    pub geometry: Value,
    /// Input properties, `zone_id` included.
    pub properties: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneGeometry {
    pub features: BTreeMap<String, ZoneFeature>,
}

fn zone_id_of(props: &Map<String, Value>) -> Option<String> {
    match props.get("zone_id")? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

pub fn load_geometry(path: &Path) -> CliResult<ZoneGeometry> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::input(path, format!("line {}", e.line()), e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(CliError::input(path, "root", "expected a GeoJSON FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::input(path, "root", "missing `features` array"))?;
    let mut out = ZoneGeometry::default();
    for (i, f) in features.iter().enumerate() {
        let at = format!("feature {i}");
        let props = f
            .get("properties")
            .and_then(Value::as_object)
            .ok_or_else(|| CliError::input(path, &at, "feature has no properties object"))?;
        let id = zone_id_of(props).ok_or_else(|| CliError::input(path, &at, "feature has no `zone_id` property"))?;
        let geometry = f.get("geometry").cloned().unwrap_or(Value::Null);
        if !(geometry.is_null() || geometry.get("type").is_some_and(Value::is_string)) {
            return Err(CliError::input(path, &at, format!("zone `{id}` has an invalid geometry")));
        }
        let feature = ZoneFeature {
            geometry,
            properties: props.clone(),
        };
        if out.features.insert(id.clone(), feature).is_some() {
            return Err(CliError::input(path, &at, format!("duplicate zone_id `{id}`")));
        }
    }
    Ok(out)
}

impl ZoneGeometry {
    /// Every feature must match a zone row.
    pub fn check_join<'a>(&self, path: &Path, zone_ids: impl Iterator<Item = &'a str>) -> CliResult<()> {
        let known: std::collections::HashSet<&str> = zone_ids.collect();
        for id in self.features.keys() {
            if !known.contains(id.as_str()) {
                return Err(CliError::input(path, format!("zone_id `{id}`"), "feature has no row in the zones file"));
            }
        }
        let missing = known.iter().filter(|id| !self.features.contains_key(**id)).count();
        if missing > 0 {
            log::warn!("{missing} zones have no geometry; they are written with null geometry");
        }
        Ok(())
    }
}

/// Converts one CSV cell to a JSON value: numbers stay numbers, empty cells
/// become null.
fn cell_value(cell: &str) -> Value {
    if cell.is_empty() {
        return Value::Null;
    }
    match cell.parse::<f64>() {
        Ok(x) if x.is_finite() => serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number),
        _ => Value::String(cell.to_string()),
    }
}

/// Zone attributes gathered from `zone_id`-keyed tables, later tables
/// overriding earlier ones on shared column names.
pub fn attributes_from_tables(tables: &[(&str, &Table)]) -> BTreeMap<String, Map<String, Value>> {
    let mut out: BTreeMap<String, Map<String, Value>> = BTreeMap::new();
    for (prefix, t) in tables {
        debug_assert_eq!(t.header[0], "zone_id");
        for row in &t.rows {
            let props = out.entry(row[0].clone()).or_default();
            for (name, cell) in t.header.iter().zip(row).skip(1) {
                let key = if prefix.is_empty() { name.clone() } else { format!("{prefix}{name}") };
                props.insert(key, cell_value(cell));
            }
        }
    }
    out
}

/// FeatureCollection with one feature per zone id (sorted), the input
/// properties overlaid with `attributes`.
pub fn to_geojson(ids: &[&str], geometry: &ZoneGeometry, attributes: &BTreeMap<String, Map<String, Value>>) -> Value {
    let mut ids: Vec<&str> = ids.to_vec();
    ids.sort_unstable();
    let features: Vec<Value> = ids
        .into_iter()
        .map(|id| {
            let (geom, mut props) = match geometry.features.get(id) {
                Some(f) => (f.geometry.clone(), f.properties.clone()),
                None => (Value::Null, Map::new()),
            };
            props.insert("zone_id".into(), Value::String(id.to_string()));
            if let Some(extra) = attributes.get(id) {
                for (k, v) in extra {
                    props.insert(k.clone(), v.clone());
                }
            }
            json!({"type": "Feature", "geometry": geom, "properties": props})
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

pub fn write_geojson(path: &Path, doc: &Value) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(doc).expect("json values serialize");
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// Square polygon of half-width `half_deg` degrees around a point.
pub fn square(lat: f64, lon: f64, half_deg: f64) -> Value {
    let r = |x: f64| (x * 1e6).round() / 1e6;
    let ring = vec![
        [r(lon - half_deg), r(lat - half_deg)],
        [r(lon + half_deg), r(lat - half_deg)],
        [r(lon + half_deg), r(lat + half_deg)],
        [r(lon - half_deg), r(lat + half_deg)],
        [r(lon - half_deg), r(lat - half_deg)],
    ];
    json!({"type": "Polygon", "coordinates": [ring]})
}

type Ring = Vec<(f64, f64)>;

/// Polygons as lists of rings of (lon, lat); empty for other geometry types.
fn polygons(geometry: &Value) -> Vec<Vec<Ring>> {
    let ring = |v: &Value| -> Option<Ring> {
        v.as_array()?
            .iter()
            .map(|p| Some((p.get(0)?.as_f64()?, p.get(1)?.as_f64()?)))
            .collect()
    };
    let poly = |v: &Value| -> Option<Vec<Ring>> { v.as_array()?.iter().map(ring).collect() };
    let coords = geometry.get("coordinates");
    match (geometry.get("type").and_then(Value::as_str), coords) {
        (Some("Polygon"), Some(c)) => poly(c).into_iter().collect(),
        (Some("MultiPolygon"), Some(c)) => c
            .as_array()
            .map(|ps| ps.iter().filter_map(poly).collect())
            .unwrap_or_default(),
        _ => Vec::new(),
    }
}

fn in_ring(ring: &[(f64, f64)], lon: f64, lat: f64) -> bool {
    let mut inside = false;
    let n = ring.len();
    for i in 0..n {
        let (x1, y1) = ring[i];
        let (x2, y2) = ring[(i + n - 1) % n];
        if (y1 > lat) != (y2 > lat) && lon < (x2 - x1) * (lat - y1) / (y2 - y1) + x1 {
            inside = !inside;
        }
    }
    inside
}

/// Distance in miles from a point to a segment, on a local equirectangular
/// projection (adequate at zone scale).
fn segment_miles(lat: f64, lon: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let deg = EARTH_RADIUS_MILES.to_radians();
    let kx = deg * lat.to_radians().cos();
    let p = (0.0, 0.0);
    let a = ((a.0 - lon) * kx, (a.1 - lat) * deg);
    let b = ((b.0 - lon) * kx, (b.1 - lat) * deg);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    (cx * cx + cy * cy).sqrt()
}

/// Whether the point lies inside the geometry or within `tol_miles` of its
/// boundary.
pub fn covers(geometry: &Value, lat: f64, lon: f64, tol_miles: f64) -> bool {
    polygons(geometry).iter().any(|rings| {
        let Some((outer, holes)) = rings.split_first() else {
            return false;
        };
        let inside = in_ring(outer, lon, lat) && !holes.iter().any(|h| in_ring(h, lon, lat));
        inside
            || rings.iter().any(|r| {
                r.windows(2)
                    .any(|w| segment_miles(lat, lon, w[0], w[1]) <= tol_miles)
            })
    })
}
