//! CSV loaders and writers for zones, facilities, county outcomes and
//! patient records. Headers must match the schemas exactly; every rejection
//! names the file and line.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use geoaccess_core::{County, GeoPoint, Hospital, Zone};

use crate::error::{CliError, CliResult};
use crate::format::Table;
use crate::geometry::{self, ZoneGeometry};

pub const ZONE_COLUMNS: [&str; 6] = ["zone_id", "lat", "lon", "population", "adrd_patients", "urban"];
pub const FACILITY_COLUMNS: [&str; 4] = ["facility_id", "lat", "lon", "beds"];
pub const COUNTY_COLUMNS: [&str; 5] = ["county_id", "year", "adrd_deaths", "adrd_patients", "population_50plus"];
pub const PATIENT_COLUMNS: [&str; 7] = ["record_id", "zone_id", "age", "sex", "race", "diagnosis_code", "total_charge"];

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub record_id: String,
    pub zone_id: String,
    pub age: f64,
    pub sex: String,
    pub race: String,
    /// Trimmed and uppercased.
    pub diagnosis_code: String,
    pub total_charge: f64,
}

#[derive(Debug, Clone)]
pub struct ZoneSet {
    /// Sorted by zone id.
    pub zones: Vec<Zone>,
    /// Attribute columns in file order.
    pub attributes: Vec<String>,
    pub geometry: Option<ZoneGeometry>,
}

impl ZoneSet {
    pub fn ids(&self) -> Vec<&str> {
        self.zones.iter().map(|z| z.zone_id.as_str()).collect()
    }
}

/// One open CSV file with its checked header.
struct Sheet {
    path: PathBuf,
    header: Vec<String>,
    reader: csv::Reader<File>,
}

impl Sheet {
    fn open(path: &Path, required: &[&str], extra_allowed: bool) -> CliResult<Self> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::from_csv(path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let prefix_ok = header.len() >= required.len() && header.iter().zip(required).all(|(h, r)| h == r);
        if !prefix_ok || (!extra_allowed && header.len() != required.len()) {
            let expect = if extra_allowed { " (then attribute columns)" } else { "" };
            return Err(CliError::input(
                path,
                "line 1",
                format!("header must be `{}`{expect}, got `{}`", required.join(","), header.join(",")),
            ));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
            return Err(CliError::input(path, "line 1", format!("duplicate column `{dup}`")));
        }
        Ok(Self {
            path: path.to_path_buf(),
            header,
            reader,
        })
    }

    /// Rows as trimmed strings with their 1-based line numbers.
    fn rows(&mut self) -> CliResult<Vec<(u64, Vec<String>)>> {
        let mut out = Vec::new();
        for rec in self.reader.records() {
            let rec = rec.map_err(|e| CliError::from_csv(&self.path, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            out.push((line, rec.iter().map(|s| s.trim().to_string()).collect()));
        }
        Ok(out)
    }
}

struct Row<'a> {
    path: &'a Path,
    line: u64,
    header: &'a [String],
    cells: &'a [String],
}

impl Row<'_> {
    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::input(self.path, format!("line {}", self.line), message)
    }

    fn text(&self, col: usize) -> CliResult<&str> {
        let v = self.cells[col].as_str();
        if v.is_empty() {
            return Err(self.err(format!("empty `{}`", self.header[col])));
        }
        Ok(v)
    }

    fn real(&self, col: usize) -> CliResult<f64> {
        let v = self.text(col)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.err(format!("`{}` is not a finite number: `{v}`", self.header[col]))),
        }
    }

    fn non_negative(&self, col: usize) -> CliResult<f64> {
        let x = self.real(col)?;
        if x < 0.0 {
            return Err(self.err(format!("`{}` must be >= 0, got {x}", self.header[col])));
        }
        Ok(x)
    }

    fn point(&self, lat: usize, lon: usize) -> CliResult<GeoPoint<f64>> {
        GeoPoint::new(self.real(lat)?, self.real(lon)?).map_err(|e| self.err(e.to_string()))
    }
}

fn each_row<F>(sheet: &mut Sheet, mut f: F) -> CliResult<()>
where
    F: FnMut(&Row<'_>) -> CliResult<()>,
{
    let rows = sheet.rows()?;
    for (line, cells) in &rows {
        f(&Row {
            path: &sheet.path,
            line: *line,
            header: &sheet.header,
            cells,
        })?;
    }
    Ok(())
}

fn parse_urban(row: &Row<'_>, col: usize) -> CliResult<bool> {
    match row.text(col)?.to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(row.err(format!("`urban` must be 0/1 or true/false, got `{other}`"))),
    }
}

pub fn load_zones(path: &Path, geometry_path: Option<&Path>) -> CliResult<ZoneSet> {
    let mut sheet = Sheet::open(path, &ZONE_COLUMNS, true)?;
    let attributes: Vec<String> = sheet.header[ZONE_COLUMNS.len()..].to_vec();
    let mut zones = Vec::new();
    let mut lines: HashMap<String, u64> = HashMap::new();
    each_row(&mut sheet, |row| {
        let id = row.text(0)?.to_string();
        if let Some(first) = lines.get(&id) {
            return Err(row.err(format!("duplicate zone_id `{id}` (first on line {first})")));
        }
        lines.insert(id.clone(), row.line);
        let mut zone = Zone::new(id, row.point(1, 2)?, row.non_negative(3)?, row.non_negative(4)?, parse_urban(row, 5)?)
            .map_err(|e| row.err(e.to_string()))?;
        for (k, name) in attributes.iter().enumerate() {
            zone.attributes.insert(name.clone(), row.real(ZONE_COLUMNS.len() + k)?);
        }
        zones.push(zone);
        Ok(())
    })?;
    zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
    let geometry = match geometry_path {
        Some(g) => {
            let geo = geometry::load_geometry(g)?;
            geo.check_join(g, lines.keys().map(String::as_str))?;
            Some(geo)
        }
        None => None,
    };
    Ok(ZoneSet {
        zones,
        attributes,
        geometry,
    })
}

pub fn load_facilities(path: &Path) -> CliResult<Vec<Hospital>> {
    let mut sheet = Sheet::open(path, &FACILITY_COLUMNS, false)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    each_row(&mut sheet, |row| {
        let id = row.text(0)?.to_string();
        if !seen.insert(id.clone()) {
            return Err(row.err(format!("duplicate facility_id `{id}`")));
        }
        let f = Hospital::new(id, row.point(1, 2)?, row.real(3)?).map_err(|e| row.err(e.to_string()))?;
        out.push(f);
        Ok(())
    })?;
    Ok(out)
}

pub fn load_counties(path: &Path) -> CliResult<Vec<County>> {
    let mut sheet = Sheet::open(path, &COUNTY_COLUMNS, false)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    each_row(&mut sheet, |row| {
        let id = row.text(0)?.to_string();
        let year: i32 = row
            .text(1)?
            .parse()
            .map_err(|_| row.err(format!("`year` is not an integer: `{}`", row.cells[1])))?;
        if !seen.insert((id.clone(), year)) {
            return Err(row.err(format!("duplicate county/year `{id}` {year}")));
        }
        out.push(County {
            county_id: id,
            year,
            adrd_deaths: row.non_negative(2)?,
            adrd_patients: row.non_negative(3)?,
            population_50plus: row.non_negative(4)?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_patients(path: &Path) -> CliResult<Vec<PatientRecord>> {
    let mut sheet = Sheet::open(path, &PATIENT_COLUMNS, false)?;
    let mut out = Vec::new();
    each_row(&mut sheet, |row| {
        out.push(PatientRecord {
            record_id: row.text(0)?.to_string(),
            zone_id: row.text(1)?.to_string(),
            age: row.non_negative(2)?,
            sex: row.cells[3].clone(),
            race: row.cells[4].clone(),
            diagnosis_code: row.text(5)?.to_ascii_uppercase(),
            total_charge: row.non_negative(6)?,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Any CSV keyed by `zone_id` in its first column, read as text and parsed
/// per column on demand. Used to feed one command's output to another.
#[derive(Debug, Clone)]
pub struct ValueTable {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: BTreeMap<String, Vec<String>>,
}

impl ValueTable {
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut sheet = Sheet::open(path, &["zone_id"], true)?;
        let mut rows = BTreeMap::new();
        each_row(&mut sheet, |row| {
            let id = row.text(0)?.to_string();
            if rows.insert(id.clone(), row.cells.to_vec()).is_some() {
                return Err(row.err(format!("duplicate zone_id `{id}`")));
            }
            Ok(())
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            header: sheet.header,
            rows,
        })
    }

    /// Numeric column by zone id; empty cells are undefined.
    pub fn column(&self, name: &str) -> CliResult<Option<BTreeMap<String, Option<f64>>>> {
        let Some(col) = self.header.iter().position(|h| h == name) else {
            return Ok(None);
        };
        let mut out = BTreeMap::new();
        for (id, cells) in &self.rows {
            let v = cells[col].as_str();
            let x = if v.is_empty() {
                None
            } else {
                Some(v.parse::<f64>().map_err(|_| {
                    CliError::input(&self.path, format!("zone `{id}`"), format!("`{name}` is not numeric: `{v}`"))
                })?)
            };
            out.insert(id.clone(), x);
        }
        Ok(Some(out))
    }
}

/// Looks up a named numeric column: first in the value tables (in order),
/// then among the zone fields and attributes. Every zone must have a value.
pub fn resolve_column(name: &str, zones: &ZoneSet, tables: &[ValueTable]) -> CliResult<Vec<f64>> {
    for t in tables {
        if let Some(col) = t.column(name)? {
            return zones
                .zones
                .iter()
                .map(|z| match col.get(&z.zone_id) {
                    Some(Some(v)) => Ok(*v),
                    Some(None) => Err(CliError::input(&t.path, format!("zone `{}`", z.zone_id), format!("`{name}` is undefined"))),
                    None => Err(CliError::input(&t.path, format!("zone `{}`", z.zone_id), "missing row")),
                })
                .collect();
        }
    }
    let pick = |z: &Zone| match name {
        "population" => Some(z.population),
        "adrd_patients" => Some(z.adrd_patients),
        "lat" => Some(z.centroid.lat()),
        "lon" => Some(z.centroid.lon()),
        "urban" => Some(f64::from(u8::from(z.urban))),
        _ => z.attributes.get(name).copied(),
    };
    zones
        .zones
        .iter()
        .map(|z| pick(z).ok_or_else(|| CliError::invalid(format!("no column `{name}` in the zones or value files"))))
        .collect()
}

/// Rust's shortest round-trip rendering, so re-reading yields the same bits.
fn exact(x: f64) -> String {
    format!("{x}")
}

pub fn zones_table(set: &ZoneSet) -> Table {
    let mut t = Table::new(ZONE_COLUMNS.iter().map(|s| s.to_string()).chain(set.attributes.iter().cloned()));
    for z in &set.zones {
        let mut row = vec![
            z.zone_id.clone(),
            exact(z.centroid.lat()),
            exact(z.centroid.lon()),
            exact(z.population),
            exact(z.adrd_patients),
            crate::format::flag(z.urban).to_string(),
        ];
        row.extend(set.attributes.iter().map(|a| exact(z.attributes[a])));
        t.push(row);
    }
    t
}

pub fn facilities_table(facilities: &[Hospital]) -> Table {
    let mut t = Table::new(FACILITY_COLUMNS);
    for f in facilities {
        t.push(vec![f.facility_id.clone(), exact(f.location.lat()), exact(f.location.lon()), exact(f.beds)]);
    }
    t
}

pub fn counties_table(counties: &[County]) -> Table {
    let mut t = Table::new(COUNTY_COLUMNS);
    for c in counties {
        t.push(vec![
            c.county_id.clone(),
            c.year.to_string(),
            exact(c.adrd_deaths),
            exact(c.adrd_patients),
            exact(c.population_50plus),
        ]);
    }
    t
}

pub fn patients_table(patients: &[PatientRecord]) -> Table {
    let mut t = Table::new(PATIENT_COLUMNS);
    for p in patients {
        t.push(vec![
            p.record_id.clone(),
            p.zone_id.clone(),
            exact(p.age),
            p.sex.clone(),
            p.race.clone(),
            p.diagnosis_code.clone(),
            exact(p.total_charge),
        ]);
    }
    t
}
