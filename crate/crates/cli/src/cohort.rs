//! ADRD cohort selection by ICD-10 category and descriptive group statistics.

use std::collections::BTreeMap;

use crate::format::{num, Table};
use crate::ingest::PatientRecord;

/// ICD-10 categories that define the ADRD cohort.
pub const ADRD_CATEGORIES: [&str; 4] = ["F01", "F03", "G30", "G31"];

/// True when the code is one of the ADRD categories or a subcode of one,
/// written with or without the dot ("G30", "G30.9", "G309").
pub fn is_adrd_code(code: &str) -> bool {
    let code = code.trim().to_ascii_uppercase();
    ADRD_CATEGORIES.iter().any(|cat| match code.strip_prefix(cat) {
        Some(rest) => {
            let rest = rest.strip_prefix('.').unwrap_or(rest);
            rest.chars().all(|c| c.is_ascii_alphanumeric())
        }
        None => false,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupStats {
    pub count: usize,
    /// Undefined for an empty group.
    pub mean_age: Option<f64>,
    pub percent_female: Option<f64>,
    /// Percent of the group per race label.
    pub percent_by_race: BTreeMap<String, f64>,
    pub mean_total_charge: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSummary {
    pub adrd: GroupStats,
    pub all: GroupStats,
    /// ADRD record counts per zone id.
    pub adrd_by_zone: BTreeMap<String, usize>,
}

fn is_female(sex: &str) -> bool {
    matches!(sex.trim().to_ascii_uppercase().as_str(), "F" | "FEMALE")
}

fn group_stats<'a>(records: impl Iterator<Item = &'a PatientRecord>) -> GroupStats {
    let mut count = 0usize;
    let (mut age, mut charge, mut female) = (0.0, 0.0, 0usize);
    let mut races: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        count += 1;
        age += r.age;
        charge += r.total_charge;
        female += usize::from(is_female(&r.sex));
        *races.entry(r.race.clone()).or_default() += 1;
    }
    if count == 0 {
        return GroupStats::default();
    }
    let n = count as f64;
    GroupStats {
        count,
        mean_age: Some(age / n),
        percent_female: Some(100.0 * female as f64 / n),
        percent_by_race: races.into_iter().map(|(k, c)| (k, 100.0 * c as f64 / n)).collect(),
        mean_total_charge: Some(charge / n),
    }
}

pub fn cohort_summary(patients: &[PatientRecord]) -> CohortSummary {
    let adrd: Vec<&PatientRecord> = patients.iter().filter(|p| is_adrd_code(&p.diagnosis_code)).collect();
    let mut adrd_by_zone = BTreeMap::new();
    for p in &adrd {
        *adrd_by_zone.entry(p.zone_id.clone()).or_default() += 1;
    }
    CohortSummary {
        adrd: group_stats(adrd.iter().copied()),
        all: group_stats(patients.iter()),
        adrd_by_zone,
    }
}

/// Long-form table: one row per (group, statistic).
pub fn summary_table(s: &CohortSummary) -> Table {
    let mut t = Table::new(["group", "statistic", "value"]);
    let mut races: Vec<&String> = s.all.percent_by_race.keys().collect();
    races.dedup();
    for (name, g) in [("adrd", &s.adrd), ("all", &s.all)] {
        let mut push = |stat: String, v: String| t.push(vec![name.to_string(), stat, v]);
        push("count".into(), g.count.to_string());
        push("mean_age".into(), g.mean_age.map_or_else(String::new, num));
        push("percent_female".into(), g.percent_female.map_or_else(String::new, num));
        push("mean_total_charge".into(), g.mean_total_charge.map_or_else(String::new, num));
        for race in &races {
            let v = g.percent_by_race.get(*race).copied().unwrap_or(0.0);
            push(format!("percent_race:{race}"), if g.count == 0 { String::new() } else { num(v) });
        }
    }
    t
}

pub fn zone_counts_table(s: &CohortSummary) -> Table {
    let mut t = Table::new(["zone_id", "adrd_patients"]);
    for (zone, c) in &s.adrd_by_zone {
        t.push(vec![zone.clone(), c.to_string()]);
    }
    t
}
