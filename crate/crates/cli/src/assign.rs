//! Hospital-to-zone assignment for descriptive reports. A facility belongs
//! to every zone whose polygon covers it (boundary tolerance included) and
//! to its nearest zone centroid, ties within the tolerance counting for
//! each tied zone.

use std::collections::BTreeMap;

use geoaccess_core::{haversine_miles, Hospital};

use crate::format::{num, Table};
use crate::geometry;
use crate::ingest::ZoneSet;

pub const DEFAULT_TOLERANCE_MILES: f64 = 0.05;

/// Facility ids per zone id; every zone is present.
pub fn assign_facilities(zones: &ZoneSet, facilities: &[Hospital], tol_miles: f64) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = zones.zones.iter().map(|z| (z.zone_id.clone(), Vec::new())).collect();
    if zones.zones.is_empty() {
        return out;
    }
    for f in facilities {
        let (lat, lon) = (f.location.lat(), f.location.lon());
        let d: Vec<f64> = zones.zones.iter().map(|z| haversine_miles(z.centroid, f.location)).collect();
        let best = d.iter().copied().fold(f64::INFINITY, f64::min);
        for (z, dist) in zones.zones.iter().zip(&d) {
            let covered = zones
                .geometry
                .as_ref()
                .and_then(|g| g.features.get(&z.zone_id))
                .is_some_and(|feat| geometry::covers(&feat.geometry, lat, lon, tol_miles));
            if covered || *dist <= best + tol_miles {
                out.get_mut(&z.zone_id).expect("zone present").push(f.facility_id.clone());
            }
        }
    }
    out
}

pub fn zone_facilities_table(zones: &ZoneSet, facilities: &[Hospital], tol_miles: f64) -> Table {
    let assigned = assign_facilities(zones, facilities, tol_miles);
    let beds: BTreeMap<&str, f64> = facilities.iter().map(|f| (f.facility_id.as_str(), f.beds)).collect();
    let mut t = Table::new(["zone_id", "facilities", "beds", "adrd_patients", "population"]);
    for z in &zones.zones {
        let ids = &assigned[&z.zone_id];
        let total: f64 = ids.iter().map(|id| beds[id.as_str()]).sum();
        t.push(vec![
            z.zone_id.clone(),
            ids.len().to_string(),
            num(total),
            num(z.adrd_patients),
            num(z.population),
        ]);
    }
    t
}
