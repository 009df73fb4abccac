//! Seeded synthetic region: a dense urban core with most of the hospital
//! capacity, dispersed rural zones, county aggregates over a spatial grid,
//! and patient records consistent with the zone counts.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use geoaccess_core::risk::DEFAULT_PREVALENCE_COLUMNS;
use geoaccess_core::{County, GeoPoint, Hospital, Zone};

use crate::error::{CliError, CliResult};
use crate::geometry::{self, ZoneFeature, ZoneGeometry};
use crate::ingest::{self, PatientRecord, ZoneSet};

pub const CORE_LAT: f64 = 39.30;
pub const CORE_LON: f64 = -76.60;
pub const DEFAULT_URBAN_ZONES: usize = 60;
pub const DEFAULT_RURAL_ZONES: usize = 140;
pub const DEFAULT_FACILITIES: usize = 24;
pub const YEARS: std::ops::RangeInclusive<i32> = 2018..=2022;

const URBAN_RADIUS_MILES: f64 = 8.0;
const RURAL_MIN_MILES: f64 = 14.0;
const RURAL_LAT: (f64, f64) = (38.65, 39.95);
const RURAL_LON: (f64, f64) = (-77.45, -75.75);
const URBAN_FACILITY_SHARE: f64 = 0.7;
const COUNTY_GRID: usize = 4;
const MILES_PER_DEG_LAT: f64 = 69.09;

/// (column, mean, loadings on two latent health factors, noise half-width),
/// in percent. The first factor is cardiometabolic and runs higher in rural
/// zones; the second is respiratory and mental health.
const PREVALENCE: [(&str, f64, f64, f64, f64); 7] = [
    ("diabetes", 11.0, 1.4, 0.2, 1.2),
    ("obesity", 32.0, 2.2, 1.2, 2.5),
    ("asthma", 9.5, 0.2, 0.9, 0.9),
    ("depression", 19.0, 0.3, 2.0, 2.0),
    ("hyperlipidemia", 30.0, 2.0, 0.0, 2.5),
    ("hypertension", 33.0, 2.8, 0.2, 2.5),
    ("heart_disease", 6.5, 0.8, 0.0, 0.7),
];

const ADRD_CODES: [&str; 7] = ["G30.9", "G30.1", "F03.90", "F01.50", "G31.84", "G309", "F0390"];
const OTHER_CODES: [&str; 6] = ["I10", "E11.9", "F10.20", "J45.909", "F32.9", "G40.909"];
const RACES: [(&str, f64); 4] = [("White", 0.55), ("Black", 0.30), ("Hispanic", 0.09), ("Asian", 0.06)];

#[derive(Debug, Clone)]
pub struct SyntheticRegion {
    pub zones: ZoneSet,
    pub facilities: Vec<Hospital>,
    pub counties: Vec<County>,
    pub patients: Vec<PatientRecord>,
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

/// Point `miles_north`, `miles_east` of the core.
fn offset(miles_north: f64, miles_east: f64) -> (f64, f64) {
    let lat = CORE_LAT + miles_north / MILES_PER_DEG_LAT;
    let lon = CORE_LON + miles_east / (MILES_PER_DEG_LAT * CORE_LAT.to_radians().cos());
    (round_to(lat, 6), round_to(lon, 6))
}

fn in_disk(rng: &mut ChaCha8Rng, radius: f64) -> (f64, f64) {
    let r = radius * rng.gen::<f64>().sqrt();
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    offset(r * a.sin(), r * a.cos())
}

fn core_miles(lat: f64, lon: f64) -> f64 {
    let core = GeoPoint::new(CORE_LAT, CORE_LON).expect("valid core");
    geoaccess_core::haversine_miles(core, GeoPoint::new(lat, lon).expect("valid point"))
}

/// Roughly standard-normal draw (sum of twelve uniforms).
fn normalish(rng: &mut ChaCha8Rng) -> f64 {
    (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0
}

fn pick_race(rng: &mut ChaCha8Rng) -> &'static str {
    let mut u = rng.gen::<f64>();
    for (race, w) in RACES {
        if u < w {
            return race;
        }
        u -= w;
    }
    RACES[RACES.len() - 1].0
}

pub fn generate_synthetic_region(
    seed: u64,
    n_urban: usize,
    n_rural: usize,
    n_facilities: usize,
) -> CliResult<SyntheticRegion> {
    if n_urban == 0 || n_rural == 0 || n_facilities == 0 {
        return Err(CliError::invalid(format!(
            "synthetic region needs at least one urban zone, rural zone and facility; got {n_urban}/{n_rural}/{n_facilities}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zones = Vec::with_capacity(n_urban + n_rural);
    let mut features = BTreeMap::new();
    for i in 0..n_urban + n_rural {
        let urban = i < n_urban;
        let (lat, lon) = if urban {
            in_disk(&mut rng, URBAN_RADIUS_MILES)
        } else {
            loop {
                let lat = round_to(rng.gen_range(RURAL_LAT.0..RURAL_LAT.1), 6);
                let lon = round_to(rng.gen_range(RURAL_LON.0..RURAL_LON.1), 6);
                if core_miles(lat, lon) >= RURAL_MIN_MILES {
                    break (lat, lon);
                }
            }
        };
        let population: f64 = if urban {
            rng.gen_range(8_000..30_000) as f64
        } else {
            rng.gen_range(1_500..9_000) as f64
        };
        // Rural detection runs lower than urban.
        let rate = if urban { rng.gen_range(0.011..0.016) } else { rng.gen_range(0.008..0.013) };
        let patients = (population * rate).round().max(1.0);
        let cardio = normalish(&mut rng) + if urban { 0.0 } else { 0.4 };
        let respiratory = normalish(&mut rng);
        let poverty = (0.13 + 0.02 * cardio + rng.gen_range(-0.04..0.04)).clamp(0.02, 0.6);
        let id = format!("Z{:04}", i + 1);
        let mut zone = Zone::new(id.clone(), GeoPoint::new(lat, lon)?, population, patients, urban)?
            .with_attribute("poverty_rate", round_to(poverty, 4));
        for (name, mean, l1, l2, noise) in PREVALENCE {
            let v = mean + l1 * cardio + l2 * respiratory + rng.gen_range(-noise..noise);
            zone = zone.with_attribute(name, round_to(v.max(0.1), 4));
        }
        let mut props = Map::new();
        props.insert("zone_id".into(), Value::String(id.clone()));
        props.insert("urban".into(), json!(urban));
        let half = if urban { 0.02 } else { 0.06 };
        features.insert(
            id,
            ZoneFeature {
                geometry: geometry::square(lat, lon, half),
                properties: props,
            },
        );
        zones.push(zone);
    }
    debug_assert_eq!(PREVALENCE.map(|p| p.0), DEFAULT_PREVALENCE_COLUMNS);

    let rural_points: Vec<(f64, f64)> = zones[n_urban..].iter().map(|z| (z.centroid.lat(), z.centroid.lon())).collect();
    let mut facilities = Vec::with_capacity(n_facilities);
    for j in 0..n_facilities {
        let urban = j == 0 || rng.gen_bool(URBAN_FACILITY_SHARE);
        let ((lat, lon), beds) = if urban {
            (in_disk(&mut rng, URBAN_RADIUS_MILES * 0.75), rng.gen_range(150..600))
        } else {
            let (lat, lon) = rural_points[rng.gen_range(0..rural_points.len())];
            let lat = round_to(lat + rng.gen_range(-0.03..0.03), 6);
            let lon = round_to(lon + rng.gen_range(-0.03..0.03), 6);
            ((lat, lon), rng.gen_range(15..90))
        };
        facilities.push(Hospital::new(format!("H{:03}", j + 1), GeoPoint::new(lat, lon)?, beds as f64)?);
    }

    let counties = county_records(&mut rng, &zones);
    let patients = patient_records(&mut rng, &zones);
    let attributes = std::iter::once("poverty_rate".to_string())
        .chain(PREVALENCE.iter().map(|p| p.0.to_string()))
        .collect();
    Ok(SyntheticRegion {
        zones: ZoneSet {
            zones,
            attributes,
            geometry: Some(ZoneGeometry { features }),
        },
        facilities,
        counties,
        patients,
    })
}

/// Groups zones on a grid over their bounding box and draws yearly county
/// totals. Mortality per patient rises with the rural share of a county.
fn county_records(rng: &mut ChaCha8Rng, zones: &[Zone]) -> Vec<County> {
    let (mut lat0, mut lat1, mut lon0, mut lon1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for z in zones {
        lat0 = lat0.min(z.centroid.lat());
        lat1 = lat1.max(z.centroid.lat());
        lon0 = lon0.min(z.centroid.lon());
        lon1 = lon1.max(z.centroid.lon());
    }
    let cell = |v: f64, lo: f64, hi: f64| (((v - lo) / (hi - lo) * COUNTY_GRID as f64) as usize).min(COUNTY_GRID - 1);
    // (patients, population, rural patients) per grid cell.
    let mut groups: BTreeMap<String, (f64, f64, f64)> = BTreeMap::new();
    for z in zones {
        let r = cell(z.centroid.lat(), lat0, lat1);
        let c = cell(z.centroid.lon(), lon0, lon1);
        let g = groups.entry(format!("C{r}{c}")).or_default();
        g.0 += z.adrd_patients;
        g.1 += z.population;
        if !z.urban {
            g.2 += z.adrd_patients;
        }
    }
    let mut out = Vec::new();
    for (id, (patients, population, rural)) in groups {
        let rural_share = rural / patients;
        let base_mortality = 0.16 + 0.12 * rural_share;
        for year in YEARS {
            let p = (patients * rng.gen_range(0.93..1.07)).round().max(1.0);
            let deaths = (p * (base_mortality + rng.gen_range(-0.02..0.02))).round();
            out.push(County {
                county_id: id.clone(),
                year,
                adrd_deaths: deaths,
                adrd_patients: p,
                population_50plus: (population * rng.gen_range(0.34..0.38)).round(),
            });
        }
    }
    out
}

fn patient_records(rng: &mut ChaCha8Rng, zones: &[Zone]) -> Vec<PatientRecord> {
    let mut out = Vec::new();
    for z in zones {
        let adrd = z.adrd_patients as usize;
        let others = adrd / 2;
        for k in 0..adrd + others {
            let is_adrd = k < adrd;
            let code = if is_adrd {
                ADRD_CODES[rng.gen_range(0..ADRD_CODES.len())]
            } else {
                OTHER_CODES[rng.gen_range(0..OTHER_CODES.len())]
            };
            let age = if is_adrd { rng.gen_range(65..96) } else { rng.gen_range(50..91) };
            let female = rng.gen_bool(if is_adrd { 0.62 } else { 0.5 });
            let charge = if is_adrd { rng.gen_range(8_000.0..60_000.0) } else { rng.gen_range(2_000.0..40_000.0) };
            out.push(PatientRecord {
                record_id: format!("P{:06}", out.len() + 1),
                zone_id: z.zone_id.clone(),
                age: age as f64,
                sex: if female { "F" } else { "M" }.into(),
                race: pick_race(rng).into(),
                diagnosis_code: code.into(),
                total_charge: round_to(charge, 2),
            });
        }
    }
    out
}

pub const ZONES_FILE: &str = "zones.csv";
pub const FACILITIES_FILE: &str = "facilities.csv";
pub const COUNTIES_FILE: &str = "counties.csv";
pub const PATIENTS_FILE: &str = "patients.csv";
pub const GEOMETRY_FILE: &str = "zones.geojson";

pub fn write_region(region: &SyntheticRegion, dir: &Path) -> CliResult<()> {
    ingest::zones_table(&region.zones).write(&dir.join(ZONES_FILE))?;
    ingest::facilities_table(&region.facilities).write(&dir.join(FACILITIES_FILE))?;
    ingest::counties_table(&region.counties).write(&dir.join(COUNTIES_FILE))?;
    ingest::patients_table(&region.patients).write(&dir.join(PATIENTS_FILE))?;
    if let Some(geo) = &region.zones.geometry {
        let ids = region.zones.ids();
        let doc = geometry::to_geojson(&ids, geo, &BTreeMap::new());
        geometry::write_geojson(&dir.join(GEOMETRY_FILE), &doc)?;
    }
    Ok(())
}
