//! Kernel-density two-step floating catchment area (KD2SFCA) accessibility.
//!
//! Step one gives every facility a supply-to-demand ratio
//! `D_j = S_j / sum_k P_k f(d_kj)` over the zones inside its catchment. Step
//! two gives every zone `A_i = sum_j D_j f(d_ij)` over the facilities inside
//! its catchment. `f` is a distance-decay kernel that reaches zero at the
//! catchment radius.
//!
//! All reductions run in ascending id order, so results do not depend on
//! the rayon worker count.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, SpatialIndex};
use crate::scalar::Scalar;

/// Default catchment radius in miles.
pub const DEFAULT_CATCHMENT_MILES: f64 = 15.0;

/// A demand unit (ZIP code area) represented by its centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandZone<T> {
    pub zone_id: String,
    pub centroid: GeoPoint<T>,
    pub population: T,
    pub adrd_patients: T,
    pub urban: bool,
    pub attributes: BTreeMap<String, T>,
}

impl<T: Scalar> DemandZone<T> {
    pub fn new(
        zone_id: impl Into<String>,
        centroid: GeoPoint<T>,
        population: T,
        adrd_patients: T,
        urban: bool,
    ) -> Result<Self> {
        let zone = Self {
            zone_id: zone_id.into(),
            centroid,
            population,
            adrd_patients,
            urban,
            attributes: BTreeMap::new(),
        };
        zone.validate()?;
        Ok(zone)
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: T) -> Self {
        self.attributes.insert(name.into(), value);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("population", self.population), ("adrd_patients", self.adrd_patients)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::param(
                    "zone counts",
                    format!("zone `{}` has {name} = {v}; counts must be finite and >= 0", self.zone_id),
                ));
            }
        }
        Ok(())
    }

    pub fn demand(&self, measure: DemandMeasure) -> T {
        match measure {
            DemandMeasure::Patients => self.adrd_patients,
            DemandMeasure::Population => self.population,
        }
    }
}

/// A hospital with capacity measured in beds.
#[derive(Debug, Clone, PartialEq)]
pub struct Facility<T> {
    pub facility_id: String,
    pub location: GeoPoint<T>,
    pub beds: T,
}

impl<T: Scalar> Facility<T> {
    pub fn new(facility_id: impl Into<String>, location: GeoPoint<T>, beds: T) -> Result<Self> {
        let facility_id = facility_id.into();
        if !beds.is_finite() || beds <= T::zero() {
            return Err(Error::param(
                "beds",
                format!("facility `{facility_id}` has {beds} beds; capacity must be > 0"),
            ));
        }
        Ok(Self {
            facility_id,
            location,
            beds,
        })
    }
}

/// Which zone count is used as demand `P_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemandMeasure {
    #[default]
    Patients,
    Population,
}

/// Distance-decay kernel, each variant shifted so it is exactly zero at the
/// catchment radius and zero beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Impedance<T> {
    /// `exp(-(d/d0)^2 / 2) - exp(-1/2)`.
    #[default]
    Gaussian,
    /// `exp(-beta d/d0) - exp(-beta)`.
    Exponential { beta: T },
    /// `(1 + d/d0)^-beta - 2^-beta`.
    InversePower { beta: T },
}

impl<T: Scalar> Impedance<T> {
    pub fn weight(&self, d: T, d0: T) -> Result<T> {
        check_catchment(d0)?;
        Ok(self.weight_unchecked(d, d0))
    }

    pub(crate) fn weight_unchecked(&self, d: T, d0: T) -> T {
        if d > d0 {
            return T::zero();
        }
        let r = d / d0;
        match *self {
            Impedance::Gaussian => {
                let half = T::lit(0.5);
                (-(r * r) * half).exp() - (-half).exp()
            }
            Impedance::Exponential { beta } => (-beta * r).exp() - (-beta).exp(),
            Impedance::InversePower { beta } => {
                (T::one() + r).powf(-beta) - T::lit(2.0).powf(-beta)
            }
        }
    }
}

/// Truncated-Gaussian impedance `f(d)` for catchment radius `d0`.
pub fn impedance<T: Scalar>(d: T, d0: T) -> Result<T> {
    Impedance::Gaussian.weight(d, d0)
}

fn check_catchment<T: Scalar>(d0: T) -> Result<()> {
    if !(d0 > T::zero()) || !d0.is_finite() {
        return Err(Error::param("catchment_miles", format!("must be > 0, got {d0}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessParams<T> {
    pub catchment_miles: T,
    pub impedance: Impedance<T>,
    pub demand: DemandMeasure,
}

impl<T: Scalar> Default for AccessParams<T> {
    fn default() -> Self {
        Self {
            catchment_miles: T::lit(DEFAULT_CATCHMENT_MILES),
            impedance: Impedance::Gaussian,
            demand: DemandMeasure::Patients,
        }
    }
}

impl<T: Scalar> AccessParams<T> {
    pub fn with_catchment(catchment_miles: T) -> Self {
        Self {
            catchment_miles,
            ..Self::default()
        }
    }
}

/// Result of step one for one facility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FacilityRatio<T> {
    Ratio(T),
    /// Nothing demands this facility; it is left out of step two.
    NoDemand(SkipReason),
}

impl<T: Copy> FacilityRatio<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            FacilityRatio::Ratio(v) => Some(*v),
            FacilityRatio::NoDemand(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    /// No zone centroid lies within the catchment.
    NoZoneInRange,
    /// Zones are in range but their weighted demand sums to zero.
    ZeroWeightedDemand,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkipReason::NoZoneInRange => "no_zone_in_range",
            SkipReason::ZeroWeightedDemand => "zero_weighted_demand",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFacility {
    pub facility_id: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessibilityField<T> {
    pub catchment_miles: T,
    pub facility_ratios: BTreeMap<String, T>,
    pub zone_scores: BTreeMap<String, T>,
    pub skipped_facilities: Vec<SkippedFacility>,
}

impl<T: Scalar> AccessibilityField<T> {
    pub fn score(&self, zone_id: &str) -> Option<T> {
        self.zone_scores.get(zone_id).copied()
    }
}

/// Step one: the supply-to-demand ratio of a single facility.
pub fn facility_ratio<T: Scalar>(
    facility: &Facility<T>,
    zones: &[DemandZone<T>],
    params: &AccessParams<T>,
) -> Result<FacilityRatio<T>> {
    check_catchment(params.catchment_miles)?;
    let entries: Vec<(&str, GeoPoint<T>)> =
        zones.iter().map(|z| (z.zone_id.as_str(), z.centroid)).collect();
    let index = SpatialIndex::build(&entries)?;
    Ok(ratio_with_index(facility, zones, &index, params))
}

fn ratio_with_index<T: Scalar>(
    facility: &Facility<T>,
    zones: &[DemandZone<T>],
    zone_index: &SpatialIndex<T>,
    params: &AccessParams<T>,
) -> FacilityRatio<T> {
    let d0 = params.catchment_miles;
    let mut hits = zone_index
        .within_radius(facility.location, d0)
        .expect("catchment validated");
    if hits.is_empty() {
        return FacilityRatio::NoDemand(SkipReason::NoZoneInRange);
    }
    hits.sort_by(|a, b| a.id.cmp(b.id));
    let weighted_demand: T = hits
        .iter()
        .map(|h| zones[h.index].demand(params.demand) * params.impedance.weight_unchecked(h.distance, d0))
        .fold(T::zero(), |acc, v| acc + v);
    if weighted_demand > T::zero() {
        FacilityRatio::Ratio(facility.beds / weighted_demand)
    } else {
        FacilityRatio::NoDemand(SkipReason::ZeroWeightedDemand)
    }
}

/// Both KD2SFCA steps over every zone and facility.
pub fn accessibility_scores<T: Scalar>(
    zones: &[DemandZone<T>],
    facilities: &[Facility<T>],
    params: &AccessParams<T>,
) -> Result<AccessibilityField<T>> {
    check_catchment(params.catchment_miles)?;
    if zones.is_empty() {
        return Err(Error::EmptyInput("zones"));
    }
    for z in zones {
        z.validate()?;
    }
    let mut seen = HashSet::with_capacity(facilities.len());
    for f in facilities {
        if !seen.insert(f.facility_id.as_str()) {
            return Err(Error::DuplicateId(f.facility_id.clone()));
        }
    }
    let d0 = params.catchment_miles;
    let zone_entries: Vec<(&str, GeoPoint<T>)> =
        zones.iter().map(|z| (z.zone_id.as_str(), z.centroid)).collect();
    let zone_index = SpatialIndex::build(&zone_entries)?;

    let ratios: Vec<FacilityRatio<T>> = facilities
        .par_iter()
        .map(|f| ratio_with_index(f, zones, &zone_index, params))
        .collect();

    let mut facility_ratios = BTreeMap::new();
    let mut skipped_facilities = Vec::new();
    let mut active: Vec<(&str, GeoPoint<T>)> = Vec::new();
    let mut active_ratio: Vec<T> = Vec::new();
    for (f, r) in facilities.iter().zip(&ratios) {
        match r {
            FacilityRatio::Ratio(v) => {
                facility_ratios.insert(f.facility_id.clone(), *v);
                active.push((f.facility_id.as_str(), f.location));
                active_ratio.push(*v);
            }
            FacilityRatio::NoDemand(reason) => {
                log::warn!("facility `{}` excluded: {reason}", f.facility_id);
                skipped_facilities.push(SkippedFacility {
                    facility_id: f.facility_id.clone(),
                    reason: *reason,
                });
            }
        }
    }
    skipped_facilities.sort_by(|a, b| a.facility_id.cmp(&b.facility_id));
    let facility_index = SpatialIndex::build(&active)?;

    let scores: Vec<T> = zones
        .par_iter()
        .map(|z| {
            let mut hits = facility_index
                .within_radius(z.centroid, d0)
                .expect("catchment validated");
            hits.sort_by(|a, b| a.id.cmp(b.id));
            hits.iter()
                .map(|h| active_ratio[h.index] * params.impedance.weight_unchecked(h.distance, d0))
                .fold(T::zero(), |acc, v| acc + v)
        })
        .collect();

    let zone_scores = zones
        .iter()
        .zip(scores)
        .map(|(z, a)| (z.zone_id.clone(), a))
        .collect();
    Ok(AccessibilityField {
        catchment_miles: d0,
        facility_ratios,
        zone_scores,
        skipped_facilities,
    })
}
