use geoaccess_core::{
    accessibility_scores, haversine_miles, AccessParams, AccessibilityField, DemandZone, Facility, GeoPoint,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Zone and facility layout over a 60 x 60 mile box, with some zero-demand
/// zones and some far-away facilities.
fn instance(seed: u64, nz: usize, nf: usize) -> (Vec<DemandZone<f64>>, Vec<Facility<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zones = (0..nz)
        .map(|i| {
            let p = GeoPoint::new(rng.gen_range(38.8..39.7), rng.gen_range(-77.2..-76.0)).unwrap();
            let patients = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(1..200) as f64 };
            DemandZone::new(format!("z{i:03}"), p, patients * 50.0, patients, rng.gen_bool(0.5)).unwrap()
        })
        .collect();
    let facilities = (0..nf)
        .map(|j| {
            let p = if rng.gen_bool(0.1) {
                GeoPoint::new(41.0, -70.0).unwrap()
            } else {
                GeoPoint::new(rng.gen_range(38.8..39.7), rng.gen_range(-77.2..-76.0)).unwrap()
            };
            Facility::new(format!("h{j:02}"), p, rng.gen_range(10..600) as f64).unwrap()
        })
        .collect();
    (zones, facilities)
}

fn gauss(d: f64, d0: f64) -> f64 {
    if d > d0 {
        0.0
    } else {
        (-0.5 * (d / d0).powi(2)).exp() - (-0.5f64).exp()
    }
}

/// Single-pass evaluation of A_i = sum_j S_j f(d_ij) / sum_k P_k f(d_kj),
/// skipping facilities whose denominator is zero.
fn direct(zones: &[DemandZone<f64>], facilities: &[Facility<f64>], d0: f64) -> Vec<f64> {
    zones
        .iter()
        .map(|zi| {
            let mut a = 0.0;
            for f in facilities {
                let dij = haversine_miles(zi.centroid, f.location);
                if dij > d0 {
                    continue;
                }
                let denom: f64 = zones
                    .iter()
                    .map(|zk| {
                        let dkj = haversine_miles(zk.centroid, f.location);
                        if dkj <= d0 {
                            zk.adrd_patients * gauss(dkj, d0)
                        } else {
                            0.0
                        }
                    })
                    .sum();
                if denom > 0.0 {
                    a += f.beds * gauss(dij, d0) / denom;
                }
            }
            a
        })
        .collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn conservation_gap(zones: &[DemandZone<f64>], facilities: &[Facility<f64>], field: &AccessibilityField<f64>) -> f64 {
    let demand_side: f64 = zones.iter().map(|z| z.adrd_patients * field.score(&z.zone_id).unwrap()).sum();
    let supply_side: f64 = facilities
        .iter()
        .filter(|f| field.facility_ratios.contains_key(&f.facility_id))
        .map(|f| f.beds)
        .sum();
    if supply_side == 0.0 {
        return demand_side.abs();
    }
    ((demand_side - supply_side) / supply_side).abs()
}

#[test]
fn two_step_equals_direct_on_random_instances() {
    for seed in 0..25 {
        let (zones, facilities) = instance(seed, 50, 10);
        let field = accessibility_scores(&zones, &facilities, &AccessParams::default()).unwrap();
        let oracle = direct(&zones, &facilities, 15.0);
        for (z, want) in zones.iter().zip(oracle) {
            let got = field.score(&z.zone_id).unwrap();
            assert!(rel_close(got, want, 1e-9), "seed {seed} zone {}: {got} vs {want}", z.zone_id);
            assert!(got.is_finite() && got >= 0.0);
        }
    }
}

#[test]
fn serial_and_parallel_agree_bitwise() {
    let (zones, facilities) = instance(99, 300, 40);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| accessibility_scores(&zones, &facilities, &AccessParams::default()).unwrap())
    };
    assert_eq!(run(1), run(8));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn supply_is_conserved(seed in any::<u64>(), nz in 1usize..60, nf in 0usize..12) {
        let (zones, facilities) = instance(seed, nz, nf);
        let field = accessibility_scores(&zones, &facilities, &AccessParams::default()).unwrap();
        prop_assert!(conservation_gap(&zones, &facilities, &field) < 1e-9);
        prop_assert_eq!(field.zone_scores.len(), zones.len());
    }

    #[test]
    fn more_beds_never_hurt(seed in any::<u64>(), which in 0usize..8, extra in 1.0f64..500.0) {
        let (zones, mut facilities) = instance(seed, 40, 8);
        let before = accessibility_scores(&zones, &facilities, &AccessParams::default()).unwrap();
        facilities[which].beds += extra;
        let after = accessibility_scores(&zones, &facilities, &AccessParams::default()).unwrap();
        for (id, a) in &before.zone_scores {
            prop_assert!(after.zone_scores[id] >= *a * (1.0 - 1e-12));
        }
    }

    #[test]
    fn demand_scale_law(seed in any::<u64>(), c in 0.1f64..20.0) {
        let (zones, facilities) = instance(seed, 40, 8);
        let scaled: Vec<_> = zones
            .iter()
            .cloned()
            .map(|mut z| { z.adrd_patients *= c; z })
            .collect();
        let a = accessibility_scores(&zones, &facilities, &AccessParams::default()).unwrap();
        let b = accessibility_scores(&scaled, &facilities, &AccessParams::default()).unwrap();
        for (id, v) in &a.zone_scores {
            prop_assert!(rel_close(b.zone_scores[id] * c, *v, 1e-12) || *v == 0.0);
        }
    }
}
