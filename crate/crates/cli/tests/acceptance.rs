//! Acceptance checks. Each test prints one `PASS`/`FAIL` line and fails on
//! `FAIL`; run with `--nocapture` to see the lines.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use common::{read, records, run_ok, s};
use geoaccess_cli::commands::files;
use geoaccess_cli::synth::{generate_synthetic_region, CORE_LAT, CORE_LON};
use geoaccess_core::{
    accessibility_scores, aggregate_years, build_weights, classify_service_status, getis_ord_gi_star, gini,
    haversine_miles, impedance, local_bivariate, pca_fit, retained_components, standardize, welch_t_test,
    AccessParams, BivariateCategory, BivariateParams, CountyOutcome, DemandZone, Facility, GeoPoint,
    HotSpotCategory, Matrix, ServiceLabel, ServiceThresholds, SpatialWeights, TTestResult, WeightScheme,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Instance = (Vec<DemandZone<f64>>, Vec<Facility<f64>>);

fn verdict(n: u32, what: &str, check: Check) {
    match check {
        Ok(detail) => println!("PASS criterion {n:>2}: {what} ({detail})"),
        Err(why) => {
            println!("FAIL criterion {n:>2}: {what} ({why})");
            panic!("criterion {n} failed: {why}");
        }
    }
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nz = rng.gen_range(2..=50);
    let nf = rng.gen_range(1..=10);
    let zones = (0..nz)
        .map(|i| {
            let p = GeoPoint::new(rng.gen_range(38.9..39.6), rng.gen_range(-77.1..-76.2)).unwrap();
            let patients = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(1..300) as f64 };
            DemandZone::new(format!("z{i:02}"), p, patients * 40.0, patients, rng.gen_bool(0.5)).unwrap()
        })
        .collect();
    let facilities = (0..nf)
        .map(|j| {
            let p = if rng.gen_bool(0.1) {
                GeoPoint::new(40.5, -74.0).unwrap()
            } else {
                GeoPoint::new(rng.gen_range(38.9..39.6), rng.gen_range(-77.1..-76.2)).unwrap()
            };
            Facility::new(format!("h{j}"), p, rng.gen_range(5..500) as f64).unwrap()
        })
        .collect();
    (zones, facilities)
}

fn kernel(d: f64, d0: f64) -> f64 {
    if d > d0 {
        0.0
    } else {
        (-0.5 * (d / d0) * (d / d0)).exp() - (-0.5f64).exp()
    }
}

/// A_i = sum_j f(d_ij) S_j / sum_k P_k f(d_kj) in one pass, without the
/// intermediate facility ratios.
fn direct_scores(zones: &[DemandZone<f64>], facilities: &[Facility<f64>], d0: f64) -> Vec<f64> {
    zones
        .iter()
        .map(|zi| {
            facilities
                .iter()
                .map(|f| {
                    let fi = kernel(haversine_miles(zi.centroid, f.location), d0);
                    let denom: f64 = zones
                        .iter()
                        .map(|zk| zk.adrd_patients * kernel(haversine_miles(zk.centroid, f.location), d0))
                        .sum();
                    if fi > 0.0 && denom > 0.0 {
                        fi * f.beds / denom
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

#[test]
fn kd2sfca_two_step_matches_direct_evaluation() {
    let check = || -> Check {
        let start = Instant::now();
        let mut compared = 0;
        for seed in 0..25 {
            let (zones, facilities) = instance(seed);
            let field = accessibility_scores(&zones, &facilities, &AccessParams::default()).map_err(|e| e.to_string())?;
            for (z, want) in zones.iter().zip(direct_scores(&zones, &facilities, 15.0)) {
                let got = field.score(&z.zone_id).unwrap();
                ensure(rel_close(got, want, 1e-9), || format!("seed {seed} {}: {got} vs {want}", z.zone_id))?;
                compared += 1;
            }
        }
        let took = start.elapsed();
        ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
        Ok(format!("{compared} zone scores over 25 instances in {took:.2?}"))
    };
    verdict(1, "two-step scores equal direct evaluation", check());
}

#[test]
fn supply_is_conserved() {
    let check = || -> Check {
        let mut cases: Vec<Instance> = (0..25).map(instance).collect();
        let region = generate_synthetic_region(42, 60, 140, 24).map_err(|e| e.to_string())?;
        cases.push((region.zones.zones, region.facilities));
        let mut worst = 0.0f64;
        for (i, (zones, facilities)) in cases.iter().enumerate() {
            let field = accessibility_scores(zones, facilities, &AccessParams::default()).map_err(|e| e.to_string())?;
            let demand: f64 = zones.iter().map(|z| z.adrd_patients * field.score(&z.zone_id).unwrap()).sum();
            let supply: f64 = facilities
                .iter()
                .filter(|f| field.facility_ratios.contains_key(&f.facility_id))
                .map(|f| f.beds)
                .sum();
            let gap = if supply == 0.0 { demand.abs() } else { ((demand - supply) / supply).abs() };
            ensure(gap < 1e-9, || format!("instance {i}: {demand} vs {supply}"))?;
            worst = worst.max(gap);
        }
        Ok(format!("{} instances, worst relative gap {worst:.1e}", cases.len()))
    };
    verdict(2, "sum P_i A_i equals sum of served beds", check());
}

#[test]
fn impedance_pinpoints() {
    let check = || -> Check {
        let pins: [(f64, f64); 3] = [(0.0, 0.393_469_340_287_366_6), (15.0, 0.0), (7.5, 0.275_966_242_871_962)];
        for (d, want) in pins {
            let got = impedance(d, 15.0).map_err(|e| e.to_string())?;
            ensure((got - want).abs() < 1e-9, || format!("f({d}) = {got}, want {want}"))?;
        }
        ensure(impedance(15.000_001, 15.0).unwrap() == 0.0, || "nonzero past the catchment".into())?;
        Ok("f(0), f(7.5), f(15)".into())
    };
    verdict(3, "truncated Gaussian impedance values", check());
}

fn pairwise_gini(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let diffs: f64 = x.iter().flat_map(|a| x.iter().map(move |b| (a - b).abs())).sum();
    diffs / (2.0 * n * n * mean)
}

#[test]
fn gini_matches_pairwise_form() {
    let check = || -> Check {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for i in 0..100 {
            let n = rng.gen_range(2..60);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
            let got = gini(&x).map_err(|e| e.to_string())?.gini;
            let want = pairwise_gini(&x);
            ensure((got - want).abs() < 1e-12, || format!("vector {i}: {got} vs {want}"))?;
        }
        for (x, want) in [(vec![5.0f64, 5.0, 5.0], 0.0), (vec![0.0, 10.0], 0.5), (vec![1.0, 2.0, 3.0, 4.0], 0.25)] {
            let got = gini(&x).map_err(|e| e.to_string())?.gini;
            ensure((got - want).abs() < 1e-12, || format!("{x:?}: {got} vs {want}"))?;
        }
        Ok("100 random vectors and 3 fixed cases".into())
    };
    verdict(4, "Gini sorted form equals pairwise form", check());
}

#[test]
fn welch_reference_and_symmetries() {
    let check = || -> Check {
        let a = [1.0f64, 2.0, 3.0];
        let b = [2.0, 4.0, 6.0];
        let r = welch_t_test(&a, &b).map_err(|e| e.to_string())?;
        ensure((r.t + 1.549193).abs() < 1e-5, || format!("t = {}", r.t))?;
        ensure((r.df - 2.941176).abs() < 1e-5, || format!("df = {}", r.df))?;
        ensure((r.p - 0.2213).abs() < 1e-3, || format!("p = {}", r.p))?;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x: Vec<f64> = (0..rng.gen_range(2..20)).map(|_| rng.gen_range(-30.0..30.0)).collect();
            let y: Vec<f64> = (0..rng.gen_range(2..20)).map(|_| rng.gen_range(-30.0..30.0)).collect();
            let xy = welch_t_test(&x, &y).unwrap();
            let yx = welch_t_test(&y, &x).unwrap();
            ensure(xy.t == -yx.t && xy.df == yx.df && xy.p == yx.p, || "swap is not exact".into())?;
            let shift = 37.25;
            let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let ys: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let moved = welch_t_test(&xs, &ys).unwrap();
            ensure(rel_close(moved.t, xy.t, 1e-9) && rel_close(moved.df, xy.df, 1e-9), || "shift moved t".into())?;
        }
        // With integer samples of power-of-two size every mean and deviation
        // is exact, so a shift must leave the result bit-identical.
        for _ in 0..50 {
            let x: Vec<f64> = (0..1 << rng.gen_range(1..5)).map(|_| f64::from(rng.gen_range(-40..40))).collect();
            let y: Vec<f64> = (0..1 << rng.gen_range(1..5)).map(|_| f64::from(rng.gen_range(-40..40))).collect();
            let shift = f64::from(rng.gen_range(-1000..1000));
            let xy = welch_t_test(&x, &y).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let ys: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let moved = welch_t_test(&xs, &ys).unwrap();
            ensure(moved == TTestResult { mean_a: xy.mean_a + shift, mean_b: xy.mean_b + shift, ..xy }, || {
                format!("shift {shift} changed {x:?} vs {y:?}")
            })?;
        }
        Ok(format!("t = {:.6}, df = {:.6}, p = {:.6}", r.t, r.df, r.p))
    };
    verdict(5, "Welch t-test reference, swap and shift", check());
}

fn grid_weights(band: f64) -> SpatialWeights<f64> {
    let cells: Vec<(f64, f64)> = (0..9).map(|i| ((i / 3) as f64, (i % 3) as f64)).collect();
    let lists = cells
        .iter()
        .map(|a| (0..9).filter(|&j| (a.0 - cells[j].0).hypot(a.1 - cells[j].1) <= band).collect())
        .collect();
    SpatialWeights::from_neighbor_lists(lists, true).unwrap()
}

#[test]
fn gi_star_grid_constant_and_reflection() {
    let check = || -> Check {
        // Frozen output of an independent direct-formula script.
        let scripted = [
            1.118_033_988_749_894_7,
            0.707_106_781_186_547_5,
            1.118_033_988_749_894_7,
            0.707_106_781_186_547_5,
            0.0,
            0.707_106_781_186_547_5,
            1.118_033_988_749_894_7,
            0.707_106_781_186_547_5,
            1.118_033_988_749_894_7,
        ];
        let w = grid_weights(1.5);
        let mut x = [0.0; 9];
        x[4] = 10.0;
        let r = getis_ord_gi_star(&x, &w).map_err(|e| e.to_string())?;
        for (i, (z, want)) in r.z.iter().zip(scripted).enumerate() {
            ensure((z - want).abs() < 1e-9, || format!("cell {i}: {z} vs {want}"))?;
        }
        let flat = getis_ord_gi_star(&[3.25; 9], &w).unwrap();
        ensure(
            flat.z.iter().all(|&z| z == 0.0) && flat.category.iter().all(|&c| c == HotSpotCategory::NotSignificant),
            || "constant field is not flat".into(),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for band in [1.0, 1.5] {
            let v: Vec<f64> = (0..9).map(|_| rng.gen_range(-5.0..20.0)).collect();
            let neg: Vec<f64> = v.iter().map(|a| -a).collect();
            let zp = getis_ord_gi_star(&v, &grid_weights(band)).unwrap().z;
            let zn = getis_ord_gi_star(&neg, &grid_weights(band)).unwrap().z;
            ensure(zp.iter().zip(&zn).all(|(a, b)| *a == -*b), || format!("reflection not exact at band {band}"))?;
        }
        Ok("9 scripted z-scores, constant field, reflection".into())
    };
    verdict(6, "Gi* grid oracle, constant field, reflection", check());
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("v{i}")).collect()
}

#[test]
fn pca_analytic_cases() {
    let check = || -> Check {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let rows: Vec<Vec<f64>> = (0..40)
                .map(|_| {
                    let a: f64 = rng.gen_range(-1.0..1.0);
                    vec![a, 0.6 * a + rng.gen_range(-1.0..1.0)]
                })
                .collect();
            let z = standardize(&names(2), &Matrix::from_rows(&rows).unwrap()).map_err(|e| e.to_string())?;
            let m = pca_fit(&z).map_err(|e| e.to_string())?;
            let r = m.correlation[(0, 1)].abs();
            ensure((m.eigenvalues[0] - (1.0 + r)).abs() < 1e-9, || format!("{} vs 1 + {r}", m.eigenvalues[0]))?;
            ensure((m.eigenvalues[1] - (1.0 - r)).abs() < 1e-9, || format!("{} vs 1 - {r}", m.eigenvalues[1]))?;
        }
        for p in [3, 5, 7] {
            let rows: Vec<Vec<f64>> = (0..60)
                .map(|_| {
                    let f: f64 = rng.gen_range(-1.0..1.0);
                    (0..p).map(|j| f * (j as f64 + 1.0) / p as f64 + rng.gen_range(-0.5..0.5)).collect()
                })
                .collect();
            let z = standardize(&names(p), &Matrix::from_rows(&rows).unwrap()).unwrap();
            let m = pca_fit(&z).unwrap();
            let v = &m.loadings;
            let gap = v.transpose().matmul(v).unwrap().max_abs_diff(&Matrix::identity(p));
            ensure(gap < 1e-9, || format!("p = {p}: V'V off identity by {gap}"))?;
            let mut d = Matrix::zeros(p, p);
            for i in 0..p {
                d[(i, i)] = m.eigenvalues[i];
            }
            let rebuilt = v.matmul(&d).unwrap().matmul(&v.transpose()).unwrap();
            let gap = rebuilt.max_abs_diff(&m.correlation);
            ensure(gap < 1e-9, || format!("p = {p}: reconstruction off by {gap}"))?;
            let total: f64 = m.explained_ratio.iter().sum();
            ensure((total - 1.0).abs() < 1e-12, || format!("p = {p}: ratios sum to {total}"))?;
        }
        Ok("1 +/- r, orthonormality, reconstruction, ratio sum".into())
    };
    verdict(7, "PCA analytic cases", check());
}

#[test]
fn risk_index_retention_rule() {
    let check = || -> Check {
        let (k, captured) = retained_components(&[0.5f64, 0.3, 0.2], 0.75).map_err(|e| e.to_string())?;
        ensure(k == 2, || format!("retained {k}"))?;
        ensure((captured - 0.8).abs() < 1e-12, || format!("captured {captured}"))?;
        Ok(format!("{k} components, {captured}"))
    };
    verdict(8, "retention to the 75% target", check());
}

fn core_distance(row: &BTreeMap<String, String>) -> f64 {
    let p = GeoPoint::new(row["lat"].parse().unwrap(), row["lon"].parse().unwrap()).unwrap();
    haversine_miles(p, GeoPoint::new(CORE_LAT, CORE_LON).unwrap())
}

#[test]
fn synthetic_region_reproduces_the_pattern() {
    let check = || -> Check {
        let region = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let start = Instant::now();
        common::synth(region.path());
        common::pipeline(region.path(), out.path(), &[]);
        let took = start.elapsed();
        ensure(took < Duration::from_secs(30), || format!("took {took:?}"))?;

        let gini: BTreeMap<String, f64> = records(&out.path().join(files::GINI))
            .into_iter()
            .map(|r| (r["stratum"].clone(), r["gini"].parse().unwrap()))
            .collect();
        ensure(gini["rural"] > gini["urban"], || format!("rural {} <= urban {}", gini["rural"], gini["urban"]))?;

        let zones: BTreeMap<String, BTreeMap<String, String>> = records(&region.path().join("zones.csv"))
            .into_iter()
            .map(|r| (r["zone_id"].clone(), r))
            .collect();
        let (mut hot, mut cold) = (Vec::new(), Vec::new());
        for r in records(&out.path().join(files::HOTSPOT)) {
            let z = &zones[&r["zone_id"]];
            let entry = (z["urban"] == "1", core_distance(z));
            if r["category"].starts_with("HotSpot") {
                hot.push(entry);
            } else if r["category"].starts_with("ColdSpot") {
                cold.push(entry);
            }
        }
        ensure(!hot.is_empty() && !cold.is_empty(), || format!("{} hot, {} cold", hot.len(), cold.len()))?;
        let hot_urban = hot.iter().filter(|h| h.0).count() as f64 / hot.len() as f64;
        ensure(hot_urban >= 0.8, || format!("only {hot_urban:.2} of hot spots are urban"))?;
        ensure(cold.iter().all(|c| !c.0), || "urban cold spot".into())?;
        let hot_far = hot.iter().map(|h| h.1).fold(0.0, f64::max);
        let cold_near = cold.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        ensure(hot_far < cold_near, || format!("hot spot at {hot_far:.1} mi, cold spot at {cold_near:.1} mi"))?;
        Ok(format!(
            "Gini rural {:.3} > urban {:.3}; {} hot spots within {hot_far:.1} mi of the core, {} cold spots beyond {cold_near:.1} mi; {took:.2?}",
            gini["rural"],
            gini["urban"],
            hot.len(),
            cold.len()
        ))
    };
    verdict(9, "rural inequality and core/periphery clustering", check());
}

#[test]
fn bivariate_calibration() {
    let check = || -> Check {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pts: Vec<(String, GeoPoint<f64>)> = (0..150)
            .map(|i| (format!("p{i:03}"), GeoPoint::new(rng.gen_range(38.9..39.6), rng.gen_range(-77.2..-76.2)).unwrap()))
            .collect();
        let w = build_weights(&pts, WeightScheme::Knn { k: 9 }, false).map_err(|e| e.to_string())?;
        let mut total = 0.0;
        for seed in 0..20u64 {
            let mut data = ChaCha8Rng::seed_from_u64(500 + seed);
            let x: Vec<f64> = (0..150).map(|_| data.gen_range(0.0..1.0)).collect();
            let y: Vec<f64> = (0..150).map(|_| data.gen_range(0.0..1.0)).collect();
            let params = BivariateParams { seed, ..BivariateParams::default() };
            total += local_bivariate(&x, &y, &w, &params).map_err(|e| e.to_string())?.significant_share();
        }
        let mean = total / 20.0;
        ensure((0.0..=0.15).contains(&mean), || format!("mean share {mean}"))?;
        let x: Vec<f64> = (0..150).map(|_| rng.gen_range(0.0..1.0)).collect();
        let same = local_bivariate(&x, &x, &w, &BivariateParams::default()).unwrap();
        let defined = same.category.iter().filter(|c| **c != BivariateCategory::Undefined).count();
        ensure(
            defined > 0 && same.category.iter().all(|c| matches!(c, BivariateCategory::PositiveSignificant | BivariateCategory::Undefined)),
            || "y = x not all positive".into(),
        )?;
        Ok(format!("independent mean share {mean:.3}; y = x positive at {defined} features"))
    };
    verdict(10, "local bivariate calibration", check());
}

fn county(id: &str, year: i32, deaths: f64, patients: f64, pop: f64) -> CountyOutcome<f64> {
    CountyOutcome {
        county_id: id.into(),
        year,
        adrd_deaths: deaths,
        adrd_patients: patients,
        population_50plus: pop,
    }
}

#[test]
fn service_status_rules() {
    let check = || -> Check {
        let cs = [county("A", 2020, 4.0, 10.0, 1000.0), county("B", 2020, 5.0, 50.0, 1000.0)];
        let r = classify_service_status(&cs, &ServiceThresholds::default()).map_err(|e| e.to_string())?;
        let labels: Vec<ServiceLabel> = r.statuses.iter().map(|s| s.label).collect();
        ensure(labels == [ServiceLabel::Underserved, ServiceLabel::Overserved], || format!("{labels:?}"))?;
        let recs = [county("X", 2019, 10.0, 50.0, 900.0), county("X", 2020, 20.0, 50.0, 1100.0)];
        let agg = aggregate_years(&recs, 2018..=2022).map_err(|e| e.to_string())?;
        let c = &agg.counties[0].outcome;
        let ratio = c.adrd_deaths / c.adrd_patients;
        ensure(ratio == 0.3, || format!("ratio of means {ratio}"))?;
        Ok("A Underserved, B Overserved, ratio 0.3".into())
    };
    verdict(11, "service-status labels and multi-year ratio", check());
}

fn csv_bytes(dir: &Path) -> BTreeMap<&'static str, String> {
    files::CSV.iter().map(|name| (*name, read(&dir.join(name)))).collect()
}

#[test]
fn pipeline_is_deterministic() {
    let check = || -> Check {
        let region = tempfile::tempdir().unwrap();
        common::synth(region.path());
        let runs: Vec<(&str, tempfile::TempDir)> = [("default", vec![]), ("repeat", vec![]), ("1 thread", vec!["--threads", "1"]), ("8 threads", vec!["--threads", "8"])]
            .into_iter()
            .map(|(label, extra)| {
                let out = tempfile::tempdir().unwrap();
                common::pipeline(region.path(), out.path(), &extra);
                (label, out)
            })
            .collect();
        let base = csv_bytes(runs[0].1.path());
        for (label, dir) in &runs[1..] {
            let other = csv_bytes(dir.path());
            for (name, bytes) in &base {
                ensure(other[name] == *bytes, || format!("{name} differs in the {label} run"))?;
            }
        }
        // A second synth must not perturb anything either.
        let again = tempfile::tempdir().unwrap();
        run_ok(&["synth", "--seed", "42", "--out-dir", s(again.path())]);
        ensure(read(&again.path().join("zones.csv")) == read(&region.path().join("zones.csv")), || "synth differs".into())?;
        Ok(format!("{} CSVs identical across {} runs", base.len(), runs.len()))
    };
    verdict(12, "byte-identical pipeline output", check());
}
