//! Getis-Ord Gi* local statistic with normal-approximation p-values.

use std::fmt;

use rayon::prelude::*;

use super::weights::SpatialWeights;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special;

/// |z| cutoffs for 90/95/99% two-sided confidence.
pub const Z_90: f64 = 1.645;
pub const Z_95: f64 = 1.960;
pub const Z_99: f64 = 2.576;

const CONFIDENCE_ALPHAS: [(f64, u8); 3] = [(0.10, 1), (0.05, 2), (0.01, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HotSpotCategory {
    HotSpot99,
    HotSpot95,
    HotSpot90,
    NotSignificant,
    ColdSpot90,
    ColdSpot95,
    ColdSpot99,
}

impl HotSpotCategory {
    /// Signed confidence level: +3 for a 99% hot spot down to -3.
    pub fn level(self) -> i8 {
        match self {
            HotSpotCategory::HotSpot99 => 3,
            HotSpotCategory::HotSpot95 => 2,
            HotSpotCategory::HotSpot90 => 1,
            HotSpotCategory::NotSignificant => 0,
            HotSpotCategory::ColdSpot90 => -1,
            HotSpotCategory::ColdSpot95 => -2,
            HotSpotCategory::ColdSpot99 => -3,
        }
    }

    pub fn from_level(level: i8) -> Self {
        match level {
            3.. => HotSpotCategory::HotSpot99,
            2 => HotSpotCategory::HotSpot95,
            1 => HotSpotCategory::HotSpot90,
            0 => HotSpotCategory::NotSignificant,
            -1 => HotSpotCategory::ColdSpot90,
            -2 => HotSpotCategory::ColdSpot95,
            _ => HotSpotCategory::ColdSpot99,
        }
    }

    pub fn is_hot(self) -> bool {
        self.level() > 0
    }

    pub fn is_cold(self) -> bool {
        self.level() < 0
    }

    /// Category from fixed |z| thresholds.
    pub fn from_z<T: Scalar>(z: T) -> Self {
        let a = z.abs().as_f64();
        let level = if a >= Z_99 {
            3
        } else if a >= Z_95 {
            2
        } else if a >= Z_90 {
            1
        } else {
            0
        };
        Self::from_level(if z < T::zero() { -level } else { level })
    }
}

impl fmt::Display for HotSpotCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HotSpotResult<T> {
    pub z: Vec<T>,
    pub p: Vec<T>,
    pub category: Vec<HotSpotCategory>,
    pub fdr: bool,
}

/// Gi* z-score and p-value for every feature, classified by fixed
/// thresholds.
///
/// A feature whose standard error vanishes (constant values, or a
/// neighborhood covering every feature) gets z = 0 and p = 1.
pub fn getis_ord_gi_star<T: Scalar>(values: &[T], weights: &SpatialWeights<T>) -> Result<HotSpotResult<T>> {
    if !weights.include_self() {
        return Err(Error::param("weights", "Gi* requires self-inclusive weights"));
    }
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch {
            what: "values",
            got: values.len(),
            expected: weights.len(),
        });
    }
    let n = values.len();
    if n < 3 {
        return Err(Error::param("features", format!("Gi* needs at least 3, got {n}")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("hot-spot value {v}")));
    }
    let nf = T::from_count(n);
    let mean = values.iter().copied().sum::<T>() / nf;
    let constant = values.iter().all(|&v| v == values[0]);
    let s = if constant {
        T::zero()
    } else {
        let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
        (ss / nf).sqrt()
    };
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let degenerate_s = s <= scale * T::epsilon() * T::lit(16.0);

    let zp: Vec<(T, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            if degenerate_s {
                return (T::zero(), T::one());
            }
            let nb = weights.neighbors(i);
            let (mut lag, mut w_sum, mut w_sq) = (T::zero(), T::zero(), T::zero());
            for &(j, w) in nb {
                lag += w * values[j];
                w_sum += w;
                w_sq += w * w;
            }
            let bracket = (nf * w_sq - w_sum * w_sum) / (nf - T::one());
            if !(bracket > T::zero()) {
                return (T::zero(), T::one());
            }
            let z = (lag - mean * w_sum) / (s * bracket.sqrt());
            (z, T::lit(special::normal_two_sided_p(z.as_f64())))
        })
        .collect();
    let (z, p): (Vec<T>, Vec<T>) = zp.into_iter().unzip();
    Ok(classify_hotspots(
        HotSpotResult {
            category: Vec::new(),
            z,
            p,
            fdr: false,
        },
        false,
    ))
}

/// Assigns confidence categories from z thresholds; with `fdr`, each level
/// additionally requires Benjamini-Hochberg rejection at that level's alpha.
pub fn classify_hotspots<T: Scalar>(mut result: HotSpotResult<T>, fdr: bool) -> HotSpotResult<T> {
    let fixed: Vec<i8> = result.z.iter().map(|&z| HotSpotCategory::from_z(z).level()).collect();
    let levels = if fdr {
        let mut bh = vec![0u8; result.p.len()];
        for (alpha, level) in CONFIDENCE_ALPHAS {
            for i in benjamini_hochberg(&result.p, alpha) {
                bh[i] = bh[i].max(level);
            }
        }
        fixed
            .iter()
            .zip(&bh)
            .map(|(&f, &b)| f.signum() * f.abs().min(b as i8))
            .collect()
    } else {
        fixed
    };
    result.category = levels.into_iter().map(HotSpotCategory::from_level).collect();
    result.fdr = fdr;
    result
}

/// Indices rejected by the Benjamini-Hochberg step-up procedure at `alpha`.
fn benjamini_hochberg<T: Scalar>(p: &[T], alpha: f64) -> Vec<usize> {
    let n = p.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        p[a].partial_cmp(&p[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|(rank, &i)| p[i].as_f64() <= (rank + 1) as f64 * alpha / n as f64)
        .map(|(rank, _)| rank + 1)
        .unwrap_or(0);
    order.truncate(cutoff);
    order
}

#[cfg(test)]
// Scripted oracle values, not stand-ins for library constants.
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;

    fn grid_weights(band: f64) -> SpatialWeights<f64> {
        let cells: Vec<(f64, f64)> = (0..9).map(|i| ((i / 3) as f64, (i % 3) as f64)).collect();
        let lists = cells
            .iter()
            .map(|a| {
                (0..9)
                    .filter(|&j| {
                        let b = cells[j];
                        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() <= band
                    })
                    .collect()
            })
            .collect();
        SpatialWeights::from_neighbor_lists(lists, true).unwrap()
    }

    #[test]
    fn category_thresholds() {
        assert_eq!(HotSpotCategory::from_z(2.0), HotSpotCategory::HotSpot95);
        assert_eq!(HotSpotCategory::from_z(-1.7), HotSpotCategory::ColdSpot90);
        assert_eq!(HotSpotCategory::from_z(3.0), HotSpotCategory::HotSpot99);
        assert_eq!(HotSpotCategory::from_z(1.0), HotSpotCategory::NotSignificant);
        assert_eq!(HotSpotCategory::from_z(-2.6), HotSpotCategory::ColdSpot99);
    }

    #[test]
    fn center_spike_matches_direct_formula() {
        // Direct evaluation script, 3x3 grid, band 1.5, binary weights with self.
        let expected = [
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
        let mut x = [0.0; 9];
        x[4] = 10.0;
        let r = getis_ord_gi_star(&x, &grid_weights(1.5)).unwrap();
        for (z, e) in r.z.iter().zip(expected) {
            assert!((z - e).abs() < 1e-9, "{z} vs {e}");
        }
        // The center neighbors every cell, so its standard error vanishes.
        assert_eq!(r.p[4], 1.0);
    }

    #[test]
    fn rook_grid_matches_direct_formula() {
        let expected = [
            -0.707_106_781_186_547_6,
            1.118_033_988_749_894_7,
            -0.707_106_781_186_547_6,
            1.118_033_988_749_894_7,
            0.894_427_190_999_915_9,
            1.118_033_988_749_894_7,
            -0.707_106_781_186_547_6,
            1.118_033_988_749_894_7,
            -0.707_106_781_186_547_6,
        ];
        let mut x = [0.0; 9];
        x[4] = 10.0;
        let r = getis_ord_gi_star(&x, &grid_weights(1.0)).unwrap();
        for (z, e) in r.z.iter().zip(expected) {
            assert!((z - e).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_field_is_not_significant() {
        let r = getis_ord_gi_star(&[0.1; 9], &grid_weights(1.0)).unwrap();
        assert!(r.z.iter().all(|&z| z == 0.0));
        assert!(r.p.iter().all(|&p| p == 1.0));
        assert!(r.category.iter().all(|&c| c == HotSpotCategory::NotSignificant));
    }

    #[test]
    fn requires_self_inclusive_weights() {
        let w = SpatialWeights::<f64>::from_neighbor_lists(vec![vec![1], vec![2], vec![0]], false).unwrap();
        assert!(getis_ord_gi_star(&[1.0, 2.0, 3.0], &w).is_err());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(getis_ord_gi_star(&[1.0, 2.0], &grid_weights(1.0)).is_err());
    }

    #[test]
    fn fdr_never_promotes() {
        let r = HotSpotResult {
            z: vec![1.0, 1.5, -1.0],
            p: vec![0.001, 0.001, 0.001],
            category: vec![],
            fdr: false,
        };
        let c = classify_hotspots(r, true);
        assert!(c.category.iter().all(|&k| k == HotSpotCategory::NotSignificant));
    }

    #[test]
    fn bh_rejections() {
        let p = [0.01, 0.04, 0.03, 0.2];
        assert_eq!(benjamini_hochberg(&p, 0.05), [0]);
        let mut r = benjamini_hochberg(&p, 0.10);
        r.sort();
        assert_eq!(r, [0, 1, 2]);
        assert!(benjamini_hochberg(&p, 0.01).is_empty());
    }
}
