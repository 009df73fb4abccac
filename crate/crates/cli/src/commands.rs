//! One function per subcommand. Each reads its inputs from files and writes
//! its outputs to files, so chaining them through a directory gives exactly
//! what `pipeline` produces.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use geoaccess_core::{
    accessibility_scores, aggregate_years, build_weights, classify_hotspots, classify_service_status, getis_ord_gi_star,
    gini, health_risk_index, local_bivariate, pca_fit, standardize, welch_t_test, Cutoff, DemandMeasure,
    Matrix, ServiceThresholds,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::format::{flag, num, opt, Table};
use crate::geometry;
use crate::ingest::{self, resolve_column, ValueTable, ZoneSet};

fn load_tables(paths: &[PathBuf]) -> CliResult<Vec<ValueTable>> {
    paths.iter().map(|p| ValueTable::load(p)).collect()
}

/// Writes `table` merged into the zone geometry, when requested.
fn maybe_geojson(zones: &ZoneSet, table: &Table, out: Option<&Path>) -> CliResult<()> {
    let Some(out) = out else { return Ok(()) };
    let geo = zones
        .geometry
        .as_ref()
        .ok_or_else(|| CliError::invalid("--geojson-out needs --geometry"))?;
    let attrs = geometry::attributes_from_tables(&[("", table)]);
    geometry::write_geojson(out, &geometry::to_geojson(&zones.ids(), geo, &attrs))
}

fn points(zones: &ZoneSet) -> Vec<(String, geoaccess_core::Point)> {
    zones.zones.iter().map(|z| (z.zone_id.clone(), z.centroid)).collect()
}

pub struct AccessJob<'a> {
    pub zones: &'a Path,
    pub geometry: Option<&'a Path>,
    pub facilities: &'a Path,
    pub demand: DemandMeasure,
    pub out: &'a Path,
    pub facility_out: Option<&'a Path>,
    pub geojson_out: Option<&'a Path>,
}

pub fn access(job: &AccessJob<'_>, cfg: &RunConfig) -> CliResult<Table> {
    let zones = ingest::load_zones(job.zones, job.geometry)?;
    let facilities = ingest::load_facilities(job.facilities)?;
    let field = accessibility_scores(&zones.zones, &facilities, &cfg.access_params(job.demand))?;
    for s in &field.skipped_facilities {
        log::info!("facility `{}` skipped: {}", s.facility_id, s.reason);
    }
    let mut t = Table::new(["zone_id", "urban", "accessibility"]);
    for z in &zones.zones {
        t.push(vec![z.zone_id.clone(), flag(z.urban).into(), num(field.zone_scores[&z.zone_id])]);
    }
    t.write(job.out)?;
    if let Some(path) = job.facility_out {
        let mut ft = Table::new(["facility_id", "beds", "ratio", "status"]);
        let mut sorted: Vec<_> = facilities.iter().collect();
        sorted.sort_by(|a, b| a.facility_id.cmp(&b.facility_id));
        for f in sorted {
            let skipped = field.skipped_facilities.iter().find(|s| s.facility_id == f.facility_id);
            let (ratio, status) = match (field.facility_ratios.get(&f.facility_id), skipped) {
                (Some(r), _) => (num(*r), "ok".to_string()),
                (None, Some(s)) => (String::new(), s.reason.to_string()),
                (None, None) => unreachable!("every facility is either rated or skipped"),
            };
            ft.push(vec![f.facility_id.clone(), num(f.beds), ratio, status]);
        }
        ft.write(path)?;
    }
    maybe_geojson(&zones, &t, job.geojson_out)?;
    Ok(t)
}

/// Values of `column` split by the table's `urban` flag.
fn grouped(input: &Path, column: &str) -> CliResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let t = ValueTable::load(input)?;
    let values = t
        .column(column)?
        .ok_or_else(|| CliError::input(input, "line 1", format!("no column `{column}`")))?;
    let urban = t
        .column("urban")?
        .ok_or_else(|| CliError::input(input, "line 1", "no column `urban`"))?;
    let (mut all, mut u, mut r) = (Vec::new(), Vec::new(), Vec::new());
    for (id, v) in &values {
        let v = v.ok_or_else(|| CliError::input(input, format!("zone `{id}`"), format!("`{column}` is undefined")))?;
        all.push(v);
        match urban[id] {
            Some(x) if x != 0.0 => u.push(v),
            _ => r.push(v),
        }
    }
    Ok((all, u, r))
}

pub fn gini_report(input: &Path, column: &str, out: &Path) -> CliResult<Table> {
    let (all, urban, rural) = grouped(input, column)?;
    let mut t = Table::new(["stratum", "n", "mean", "gini"]);
    for (name, v) in [("overall", &all), ("urban", &urban), ("rural", &rural)] {
        if v.is_empty() {
            t.push(vec![name.into(), "0".into(), String::new(), String::new()]);
        } else {
            let g = gini(v)?;
            t.push(vec![name.into(), g.n.to_string(), num(g.mean), num(g.gini)]);
        }
    }
    t.write(out)?;
    Ok(t)
}

pub fn ttest_report(input: &Path, column: &str, out: &Path) -> CliResult<Table> {
    let (_, urban, rural) = grouped(input, column)?;
    let r = welch_t_test(&urban, &rural)?;
    let mut t = Table::new([
        "group_a", "group_b", "n_a", "n_b", "mean_a", "mean_b", "var_a", "var_b", "t", "df", "p", "status",
    ]);
    t.push(vec![
        "urban".into(),
        "rural".into(),
        r.n_a.to_string(),
        r.n_b.to_string(),
        num(r.mean_a),
        num(r.mean_b),
        num(r.var_a),
        num(r.var_b),
        num(r.t),
        num(r.df),
        num(r.p),
        format!("{:?}", r.status),
    ]);
    t.write(out)?;
    Ok(t)
}

pub struct ZoneJob<'a> {
    pub zones: &'a Path,
    pub geometry: Option<&'a Path>,
    pub values: &'a [PathBuf],
    pub out: &'a Path,
    pub geojson_out: Option<&'a Path>,
}

pub fn hotspot(job: &ZoneJob<'_>, column: &str, cfg: &RunConfig) -> CliResult<Table> {
    let zones = ingest::load_zones(job.zones, job.geometry)?;
    let values = resolve_column(column, &zones, &load_tables(job.values)?)?;
    let w = build_weights(&points(&zones), cfg.weight_scheme(), true)?;
    if !w.isolated().is_empty() {
        log::warn!("{} zones have no neighbors under {:?}", w.isolated().len(), cfg.weight_scheme());
    }
    let r = classify_hotspots(getis_ord_gi_star(&values, &w)?, cfg.fdr);
    let mut t = Table::new(["zone_id", "value", "neighbors", "z", "p", "category"]);
    for (i, z) in zones.zones.iter().enumerate() {
        t.push(vec![
            z.zone_id.clone(),
            num(values[i]),
            (w.neighbors(i).len() - 1).to_string(),
            num(r.z[i]),
            num(r.p[i]),
            r.category[i].to_string(),
        ]);
    }
    t.write(job.out)?;
    maybe_geojson(&zones, &t, job.geojson_out)?;
    Ok(t)
}

pub fn bivariate(job: &ZoneJob<'_>, x: &str, y: &str, cfg: &RunConfig) -> CliResult<Table> {
    let zones = ingest::load_zones(job.zones, job.geometry)?;
    let tables = load_tables(job.values)?;
    let xs = resolve_column(x, &zones, &tables)?;
    let ys = resolve_column(y, &zones, &tables)?;
    let w = build_weights(&points(&zones), cfg.weight_scheme(), false)?;
    let r = local_bivariate(&xs, &ys, &w, &cfg.bivariate_params())?;
    let mut t = Table::new(["zone_id", "neighbors", "local_r", "pseudo_p", "category"]);
    for (i, z) in zones.zones.iter().enumerate() {
        t.push(vec![
            z.zone_id.clone(),
            w.neighbors(i).len().to_string(),
            opt(r.local_r[i]),
            opt(r.pseudo_p[i]),
            r.category[i].to_string(),
        ]);
    }
    log::info!("bivariate {x} vs {y}: significant share {:.3}", r.significant_share());
    t.write(job.out)?;
    maybe_geojson(&zones, &t, job.geojson_out)?;
    Ok(t)
}

pub fn risk_index(job: &ZoneJob<'_>, columns: &[String], pca_out: Option<&Path>, cfg: &RunConfig) -> CliResult<Table> {
    let zones = ingest::load_zones(job.zones, job.geometry)?;
    let tables = load_tables(job.values)?;
    let cols: Vec<Vec<f64>> = columns.iter().map(|c| resolve_column(c, &zones, &tables)).collect::<CliResult<_>>()?;
    let rows: Vec<Vec<f64>> = (0..zones.zones.len()).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    let z = standardize(columns, &Matrix::from_rows(&rows)?)?;
    let model = pca_fit(&z)?;
    let index = health_risk_index(&model, &z, cfg.variance_target)?;
    let mut t = Table::new(["zone_id", "risk_index"]);
    for (zone, s) in zones.zones.iter().zip(&index.scores) {
        t.push(vec![zone.zone_id.clone(), num(*s)]);
    }
    t.write(job.out)?;
    if let Some(path) = pca_out {
        let header = ["component", "eigenvalue", "explained", "cumulative", "retained", "orientation"]
            .into_iter()
            .map(String::from)
            .chain(columns.iter().map(|c| format!("loading_{c}")));
        let mut pt = Table::new(header);
        let mut cum = 0.0;
        for c in 0..columns.len() {
            cum += model.explained_ratio[c];
            let retained = c < index.retained_components;
            let mut row = vec![
                (c + 1).to_string(),
                num(model.eigenvalues[c]),
                num(model.explained_ratio[c]),
                num(cum),
                flag(retained).into(),
                if retained { index.orientation[c].to_string() } else { String::new() },
            ];
            row.extend((0..columns.len()).map(|v| num(model.loading(v, c))));
            pt.push(row);
        }
        pt.write(path)?;
    }
    maybe_geojson(&zones, &t, job.geojson_out)?;
    Ok(t)
}

pub fn mortality(
    counties: &Path,
    years: std::ops::RangeInclusive<i32>,
    thresholds: &ServiceThresholds<f64>,
    out: &Path,
) -> CliResult<Table> {
    let records = ingest::load_counties(counties)?;
    let agg = aggregate_years(&records, years.clone())?;
    for id in &agg.omitted {
        log::warn!("county `{id}` has no records in {}-{}", years.start(), years.end());
    }
    let averaged: Vec<_> = agg.counties.iter().map(|c| c.outcome.clone()).collect();
    let report = classify_service_status(&averaged, thresholds)?;
    let mut t = Table::new([
        "county_id",
        "contributing_years",
        "adrd_deaths",
        "adrd_patients",
        "population_50plus",
        "deaths_per_patient",
        "deaths_per_pop50",
        "diagnosis_rate",
        "label",
        "elevated",
    ]);
    for (c, s) in agg.counties.iter().zip(&report.statuses) {
        t.push(vec![
            s.county_id.clone(),
            c.contributing_years.to_string(),
            num(c.outcome.adrd_deaths),
            num(c.outcome.adrd_patients),
            num(c.outcome.population_50plus),
            opt(s.ratios.deaths_per_patient),
            opt(s.ratios.deaths_per_pop50),
            opt(s.ratios.diagnosis_rate),
            s.label.to_string(),
            flag(s.elevated).into(),
        ]);
    }
    log::info!(
        "mortality cutoffs: deaths/patient {}, diagnosis rate {}",
        num(report.mortality_cutoff),
        num(report.diagnosis_cutoff)
    );
    t.write(out)?;
    Ok(t)
}

pub fn cohort(patients: &Path, out: &Path, zone_counts_out: Option<&Path>) -> CliResult<Table> {
    let records = ingest::load_patients(patients)?;
    if records.is_empty() {
        return Err(CliError::input(patients, "line 2", "no patient records"));
    }
    let s = crate::cohort::cohort_summary(&records);
    let t = crate::cohort::summary_table(&s);
    t.write(out)?;
    if let Some(p) = zone_counts_out {
        crate::cohort::zone_counts_table(&s).write(p)?;
    }
    Ok(t)
}

pub struct PipelineJob<'a> {
    pub zones: &'a Path,
    pub facilities: &'a Path,
    pub counties: &'a Path,
    pub geometry: Option<&'a Path>,
    pub out_dir: &'a Path,
    pub years: std::ops::RangeInclusive<i32>,
    pub demand: DemandMeasure,
    pub poverty_column: &'a str,
    pub risk_columns: &'a [String],
    pub thresholds: ServiceThresholds<f64>,
}

pub mod files {
    pub const ACCESS: &str = "access.csv";
    pub const FACILITY_RATIOS: &str = "facility_ratios.csv";
    pub const GINI: &str = "gini.csv";
    pub const TTEST: &str = "ttest.csv";
    pub const HOTSPOT: &str = "hotspot.csv";
    pub const RISK_INDEX: &str = "risk_index.csv";
    pub const PCA: &str = "pca.csv";
    pub const BIVARIATE_ACCESS: &str = "bivariate_poverty_access.csv";
    pub const BIVARIATE_RISK: &str = "bivariate_poverty_risk.csv";
    pub const MORTALITY: &str = "mortality.csv";
    pub const ZONE_FACILITIES: &str = "zone_facilities.csv";
    pub const CONFIG: &str = "run_config.json";
    pub const GEOJSON: &str = "analysis.geojson";

    pub const CSV: [&str; 11] = [
        ACCESS,
        FACILITY_RATIOS,
        GINI,
        TTEST,
        HOTSPOT,
        RISK_INDEX,
        PCA,
        BIVARIATE_ACCESS,
        BIVARIATE_RISK,
        MORTALITY,
        ZONE_FACILITIES,
    ];
}

fn zone_job<'a>(zones: &'a Path, values: &'a [PathBuf], out: &'a Path) -> ZoneJob<'a> {
    ZoneJob {
        zones,
        geometry: None,
        values,
        out,
        geojson_out: None,
    }
}

/// Runs every analysis in order, each stage reading the files the previous
/// stages wrote.
pub fn pipeline(job: &PipelineJob<'_>, cfg: &RunConfig) -> CliResult<()> {
    let d = job.out_dir;
    std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
    let at = |f: &str| d.join(f);
    let access_t = access(
        &AccessJob {
            zones: job.zones,
            geometry: job.geometry,
            facilities: job.facilities,
            demand: job.demand,
            out: &at(files::ACCESS),
            facility_out: Some(&at(files::FACILITY_RATIOS)),
            geojson_out: None,
        },
        cfg,
    )?;
    gini_report(&at(files::ACCESS), "accessibility", &at(files::GINI))?;
    ttest_report(&at(files::ACCESS), "accessibility", &at(files::TTEST))?;
    let access_values = vec![at(files::ACCESS)];
    let risk_out = at(files::RISK_INDEX);
    let risk_values = vec![risk_out.clone()];
    let (hot_out, biv_a_out, biv_r_out) = (at(files::HOTSPOT), at(files::BIVARIATE_ACCESS), at(files::BIVARIATE_RISK));
    let hot_t = hotspot(&zone_job(job.zones, &access_values, &hot_out), "accessibility", cfg)?;
    let risk_t = risk_index(&zone_job(job.zones, &[], &risk_out), job.risk_columns, Some(&at(files::PCA)), cfg)?;
    let biv_a = bivariate(&zone_job(job.zones, &access_values, &biv_a_out), job.poverty_column, "accessibility", cfg)?;
    let biv_r = bivariate(&zone_job(job.zones, &risk_values, &biv_r_out), job.poverty_column, "risk_index", cfg)?;
    mortality(job.counties, job.years.clone(), &job.thresholds, &at(files::MORTALITY))?;

    let zones = ingest::load_zones(job.zones, job.geometry)?;
    let facilities = ingest::load_facilities(job.facilities)?;
    crate::assign::zone_facilities_table(&zones, &facilities, crate::assign::DEFAULT_TOLERANCE_MILES)
        .write(&at(files::ZONE_FACILITIES))?;
    let mut cfg_json = serde_json::to_vec_pretty(cfg).expect("config serializes");
    cfg_json.push(b'\n');
    crate::format::write_bytes(&at(files::CONFIG), &cfg_json)?;

    if let Some(geo) = &zones.geometry {
        let attrs: BTreeMap<String, Map<String, Value>> = geometry::attributes_from_tables(&[
            ("", &access_t),
            ("hotspot_", &hot_t),
            ("", &risk_t),
            ("poverty_access_", &biv_a),
            ("poverty_risk_", &biv_r),
        ]);
        geometry::write_geojson(&at(files::GEOJSON), &geometry::to_geojson(&zones.ids(), geo, &attrs))?;
    }
    Ok(())
}

pub fn thresholds(cutoff: Cutoff, elevated_sd: f64) -> CliResult<ServiceThresholds<f64>> {
    if !(elevated_sd.is_finite() && elevated_sd >= 0.0) {
        return Err(CliError::invalid(format!("--elevated-sd must be >= 0, got {elevated_sd}")));
    }
    Ok(ServiceThresholds { cutoff, elevated_sd })
}
