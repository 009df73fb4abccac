//! County mortality ratios, multi-year averaging and service-status labels.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct CountyOutcome<T> {
    pub county_id: String,
    /// Calendar year; 0 for a multi-year average.
    pub year: i32,
    pub adrd_deaths: T,
    pub adrd_patients: T,
    pub population_50plus: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MortalityRatios<T> {
    pub deaths_per_patient: Option<T>,
    pub deaths_per_pop50: Option<T>,
    pub diagnosis_rate: Option<T>,
}

fn ratio<T: Scalar>(num: T, den: T) -> Option<T> {
    (den > T::zero()).then(|| num / den)
}

pub fn mortality_ratios<T: Scalar>(c: &CountyOutcome<T>) -> MortalityRatios<T> {
    MortalityRatios {
        deaths_per_patient: ratio(c.adrd_deaths, c.adrd_patients),
        deaths_per_pop50: ratio(c.adrd_deaths, c.population_50plus),
        diagnosis_rate: ratio(c.adrd_patients, c.population_50plus),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedCounty<T> {
    pub outcome: CountyOutcome<T>,
    pub contributing_years: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation<T> {
    /// Sorted by county id.
    pub counties: Vec<AggregatedCounty<T>>,
    /// Counties with records, none of them inside the year range.
    pub omitted: Vec<String>,
}

/// Per-county mean deaths, patients and 50+ population over the years each
/// county reports inside `years`. Ratios taken from the result are
/// ratios of means.
pub fn aggregate_years<T: Scalar>(
    records: &[CountyOutcome<T>],
    years: RangeInclusive<i32>,
) -> Result<Aggregation<T>> {
    if years.is_empty() {
        return Err(Error::param("years", "empty year range"));
    }
    let mut seen = HashSet::new();
    let mut sums: BTreeMap<&str, (T, T, T, usize)> = BTreeMap::new();
    let mut all_ids = Vec::new();
    for r in records {
        if !seen.insert((r.county_id.as_str(), r.year)) {
            return Err(Error::DuplicateId(format!("{} / {}", r.county_id, r.year)));
        }
        all_ids.push(r.county_id.as_str());
        if years.contains(&r.year) {
            let e = sums
                .entry(r.county_id.as_str())
                .or_insert((T::zero(), T::zero(), T::zero(), 0));
            e.0 += r.adrd_deaths;
            e.1 += r.adrd_patients;
            e.2 += r.population_50plus;
            e.3 += 1;
        }
    }
    all_ids.sort_unstable();
    all_ids.dedup();
    let omitted: Vec<String> = all_ids
        .into_iter()
        .filter(|id| !sums.contains_key(id))
        .map(str::to_string)
        .collect();
    for id in &omitted {
        log::warn!("county `{id}` has no records in {}..={}", years.start(), years.end());
    }
    let counties = sums
        .into_iter()
        .map(|(id, (d, p, pop, k))| {
            let kf = T::from_count(k);
            AggregatedCounty {
                outcome: CountyOutcome {
                    county_id: id.to_string(),
                    year: 0,
                    adrd_deaths: d / kf,
                    adrd_patients: p / kf,
                    population_50plus: pop / kf,
                },
                contributing_years: k,
            }
        })
        .collect();
    Ok(Aggregation { counties, omitted })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServiceLabel {
    /// Mortality per patient above the cutoff, diagnosis rate below it.
    Underserved,
    /// Mortality per patient below the cutoff, diagnosis rate above it.
    Overserved,
    Typical,
    InsufficientData,
}

impl fmt::Display for ServiceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cutoff {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceThresholds<T> {
    pub cutoff: Cutoff,
    /// `elevated` when deaths per 50+ exceed mean + this many sample sds.
    pub elevated_sd: T,
}

impl<T: Scalar> Default for ServiceThresholds<T> {
    fn default() -> Self {
        Self {
            cutoff: Cutoff::Mean,
            elevated_sd: T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceStatus<T> {
    pub county_id: String,
    pub ratios: MortalityRatios<T>,
    pub label: ServiceLabel,
    pub elevated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceReport<T> {
    pub statuses: Vec<ServiceStatus<T>>,
    /// Cutoffs used for the labels (means, or medians with `Cutoff::Median`).
    pub mortality_cutoff: T,
    pub diagnosis_cutoff: T,
    pub mean_deaths_per_pop50: T,
    pub sd_deaths_per_pop50: T,
    pub defined_counties: usize,
}

fn center<T: Scalar>(v: &[T], cutoff: Cutoff) -> T {
    match cutoff {
        Cutoff::Mean => v.iter().copied().sum::<T>() / T::from_count(v.len()),
        Cutoff::Median => {
            let mut s = v.to_vec();
            s.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
            let n = s.len();
            if n % 2 == 1 {
                s[n / 2]
            } else {
                (s[n / 2 - 1] + s[n / 2]) / T::lit(2.0)
            }
        }
    }
}

pub fn classify_service_status<T: Scalar>(
    counties: &[CountyOutcome<T>],
    thresholds: &ServiceThresholds<T>,
) -> Result<ServiceReport<T>> {
    let ratios: Vec<MortalityRatios<T>> = counties.iter().map(mortality_ratios).collect();
    let defined: Vec<(T, T, T)> = ratios
        .iter()
        .filter_map(|r| Some((r.deaths_per_patient?, r.diagnosis_rate?, r.deaths_per_pop50?)))
        .collect();
    if defined.len() < 2 {
        return Err(Error::param(
            "counties",
            format!("need at least 2 with defined ratios, got {}", defined.len()),
        ));
    }
    let mort: Vec<T> = defined.iter().map(|d| d.0).collect();
    let diag: Vec<T> = defined.iter().map(|d| d.1).collect();
    let pop: Vec<T> = defined.iter().map(|d| d.2).collect();
    let mortality_cutoff = center(&mort, thresholds.cutoff);
    let diagnosis_cutoff = center(&diag, thresholds.cutoff);
    let nf = T::from_count(pop.len());
    let mean_pop = pop.iter().copied().sum::<T>() / nf;
    let sd_pop = (pop.iter().map(|&v| (v - mean_pop) * (v - mean_pop)).sum::<T>() / (nf - T::one())).sqrt();
    let elevated_line = mean_pop + thresholds.elevated_sd * sd_pop;

    let statuses = counties
        .iter()
        .zip(ratios)
        .map(|(c, r)| {
            let (label, elevated) = match (r.deaths_per_patient, r.diagnosis_rate, r.deaths_per_pop50) {
                (Some(m), Some(d), Some(p)) => {
                    let label = if m > mortality_cutoff && d < diagnosis_cutoff {
                        ServiceLabel::Underserved
                    } else if m < mortality_cutoff && d > diagnosis_cutoff {
                        ServiceLabel::Overserved
                    } else {
                        ServiceLabel::Typical
                    };
                    (label, p > elevated_line)
                }
                _ => (ServiceLabel::InsufficientData, false),
            };
            ServiceStatus {
                county_id: c.county_id.clone(),
                ratios: r,
                label,
                elevated,
            }
        })
        .collect();
    Ok(ServiceReport {
        statuses,
        mortality_cutoff,
        diagnosis_cutoff,
        mean_deaths_per_pop50: mean_pop,
        sd_deaths_per_pop50: sd_pop,
        defined_counties: defined.len(),
    })
}
