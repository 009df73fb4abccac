//! Coordinates, great-circle distance in miles, and a radius-query index.
//!
//! The index keeps entries sorted by latitude and prunes a radius query to a
//! latitude band before computing exact haversine distances, so its answers
//! are always identical to a linear scan.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Earth mean radius (IUGG) in statute miles.
pub const EARTH_RADIUS_MILES: f64 = 3958.7613;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint<T> {
    lat: T,
    lon: T,
}

impl<T: Scalar> GeoPoint<T> {
    pub fn new(lat: T, lon: T) -> Result<Self> {
        let ok = lat.is_finite()
            && lon.is_finite()
            && lat.abs() <= T::lit(90.0)
            && lon.abs() <= T::lit(180.0);
        if !ok {
            return Err(Error::InvalidCoordinate {
                lat: lat.as_f64(),
                lon: lon.as_f64(),
            });
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> T {
        self.lat
    }

    pub fn lon(&self) -> T {
        self.lon
    }
}

/// Great-circle distance between two points in miles.
pub fn haversine_miles<T: Scalar>(a: GeoPoint<T>, b: GeoPoint<T>) -> T {
    let two = T::lit(2.0);
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let s1 = (dphi / two).sin();
    let s2 = (dlambda / two).sin();
    let h = s1 * s1 + phi1.cos() * phi2.cos() * s2 * s2;
    two * T::lit(EARTH_RADIUS_MILES) * h.min(T::one()).sqrt().asin()
}

/// One radius-query result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<'a, T> {
    /// Position of the entry in the slice the index was built from.
    pub index: usize,
    pub id: &'a str,
    pub distance: T,
}

/// Immutable point index answering exact radius and k-nearest queries.
#[derive(Debug, Clone)]
pub struct SpatialIndex<T> {
    ids: Vec<String>,
    points: Vec<GeoPoint<T>>,
    /// Entry positions sorted by latitude.
    by_lat: Vec<usize>,
}

impl<T: Scalar> SpatialIndex<T> {
    /// Builds an index; ids must be unique.
    pub fn build<S: AsRef<str>>(entries: &[(S, GeoPoint<T>)]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for (id, _) in entries {
            if !seen.insert(id.as_ref()) {
                return Err(Error::DuplicateId(id.as_ref().to_string()));
            }
        }
        let ids: Vec<String> = entries.iter().map(|(id, _)| id.as_ref().to_string()).collect();
        let points: Vec<GeoPoint<T>> = entries.iter().map(|(_, p)| *p).collect();
        let mut by_lat: Vec<usize> = (0..points.len()).collect();
        by_lat.sort_by(|&a, &b| {
            points[a]
                .lat
                .partial_cmp(&points[b].lat)
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        Ok(Self { ids, points, by_lat })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn point(&self, index: usize) -> GeoPoint<T> {
        self.points[index]
    }

    /// All entries with `haversine_miles(center, p) <= radius`, ordered by
    /// distance and then id.
    pub fn within_radius(&self, center: GeoPoint<T>, radius: T) -> Result<Vec<Hit<'_, T>>> {
        if !(radius >= T::zero()) {
            return Err(Error::param("radius", format!("must be >= 0, got {radius}")));
        }
        // Any point within `radius` differs in latitude by at most radius / R
        // radians; widen the band so rounding never drops a candidate.
        let band = (radius / T::lit(EARTH_RADIUS_MILES)).to_degrees();
        let band = band * T::lit(1.001) + T::lit(1e-6);
        let lo = center.lat - band;
        let hi = center.lat + band;
        let start = self.by_lat.partition_point(|&i| self.points[i].lat < lo);
        let mut hits: Vec<Hit<'_, T>> = self.by_lat[start..]
            .iter()
            .take_while(|&&i| self.points[i].lat <= hi)
            .filter_map(|&i| {
                let distance = haversine_miles(center, self.points[i]);
                (distance <= radius).then(|| Hit {
                    index: i,
                    id: self.ids[i].as_str(),
                    distance,
                })
            })
            .collect();
        sort_hits(&mut hits);
        Ok(hits)
    }

    /// The `k` nearest entries to `center` (distance, then id), skipping the
    /// entry at position `exclude`.
    pub fn nearest(&self, center: GeoPoint<T>, k: usize, exclude: Option<usize>) -> Vec<Hit<'_, T>> {
        let available = self.len() - usize::from(exclude.is_some_and(|e| e < self.len()));
        let want = k.min(available);
        if want == 0 {
            return Vec::new();
        }
        let max_radius = T::lit(EARTH_RADIUS_MILES * std::f64::consts::PI * 1.01);
        let mut radius = T::one();
        loop {
            let mut hits = self
                .within_radius(center, radius)
                .expect("radius is positive");
            hits.retain(|h| Some(h.index) != exclude);
            // Ties at the k-th distance are resolved by id, which the sorted
            // hit list already encodes; every entry at that distance is present.
            if hits.len() >= want || radius >= max_radius {
                hits.truncate(want);
                return hits;
            }
            radius = (radius * T::lit(2.0)).min(max_radius);
        }
    }
}

fn sort_hits<T: Scalar>(hits: &mut [Hit<'_, T>]) {
    hits.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.id.cmp(b.id))
    });
}
