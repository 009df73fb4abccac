//! Local bivariate association: neighborhood Pearson correlation with a
//! conditional permutation test.
//!
//! For each feature the correlation of `(x_j, y_j)` is taken over the
//! feature and its neighbors. Significance holds `x` fixed and shuffles `y`
//! globally; permutation `m` draws from its own ChaCha stream (`seed`,
//! stream `m`), so results do not depend on scheduling.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::weights::SpatialWeights;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_PERMUTATIONS: usize = 199;
pub const DEFAULT_MIN_NEIGHBORS: usize = 8;
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BivariateParams {
    pub permutations: usize,
    pub seed: u64,
    /// Minimum neighborhood size, the feature itself included.
    pub min_neighbors: usize,
}

impl Default for BivariateParams {
    fn default() -> Self {
        Self {
            permutations: DEFAULT_PERMUTATIONS,
            seed: 42,
            min_neighbors: DEFAULT_MIN_NEIGHBORS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BivariateCategory {
    PositiveSignificant,
    NegativeSignificant,
    NotSignificant,
    Undefined,
}

impl fmt::Display for BivariateCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BivariateResult<T> {
    pub local_r: Vec<Option<T>>,
    pub pseudo_p: Vec<Option<T>>,
    pub category: Vec<BivariateCategory>,
}

impl<T> BivariateResult<T> {
    pub fn significant_share(&self) -> f64 {
        if self.category.is_empty() {
            return 0.0;
        }
        let sig = self
            .category
            .iter()
            .filter(|c| {
                matches!(
                    c,
                    BivariateCategory::PositiveSignificant | BivariateCategory::NegativeSignificant
                )
            })
            .count();
        sig as f64 / self.category.len() as f64
    }
}

/// Pearson correlation over `idx`; `None` when either variable is constant
/// on the subset.
fn pearson<T: Scalar>(idx: &[usize], x: &[T], y: &[T]) -> Option<T> {
    let first = idx[0];
    if idx.iter().all(|&j| x[j] == x[first]) || idx.iter().all(|&j| y[j] == y[first]) {
        return None;
    }
    let n = T::from_count(idx.len());
    let mx = idx.iter().map(|&j| x[j]).sum::<T>() / n;
    let my = idx.iter().map(|&j| y[j]).sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for &j in idx {
        let dx = x[j] - mx;
        let dy = y[j] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let denom = (sxx * syy).sqrt();
    if !(denom > T::zero()) {
        return None;
    }
    Some((sxy / denom).max(-T::one()).min(T::one()))
}

pub fn local_bivariate<T: Scalar>(
    x: &[T],
    y: &[T],
    weights: &SpatialWeights<T>,
    params: &BivariateParams,
) -> Result<BivariateResult<T>> {
    let n = weights.len();
    for (what, v) in [("x", x), ("y", y)] {
        if v.len() != n {
            return Err(Error::LengthMismatch {
                what,
                got: v.len(),
                expected: n,
            });
        }
        if v.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite(format!("bivariate variable {what}")));
        }
    }
    if params.permutations < 19 {
        return Err(Error::param(
            "permutations",
            format!("need at least 19, got {}", params.permutations),
        ));
    }

    let hoods: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut h: Vec<usize> = weights.neighbors(i).iter().map(|(j, _)| *j).collect();
            if let Err(pos) = h.binary_search(&i) {
                h.insert(pos, i);
            }
            h
        })
        .collect();
    let observed: Vec<Option<T>> = hoods
        .par_iter()
        .map(|h| {
            if h.len() < params.min_neighbors {
                None
            } else {
                pearson(h, x, y)
            }
        })
        .collect();

    let exceed = (0..params.permutations)
        .into_par_iter()
        .map(|m| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(m as u64);
            let mut shuffled = y.to_vec();
            shuffled.shuffle(&mut rng);
            hoods
                .iter()
                .zip(&observed)
                .map(|(h, obs)| match obs {
                    Some(r) => {
                        let rp = pearson(h, x, &shuffled).unwrap_or(T::zero());
                        u32::from(rp.abs() >= r.abs())
                    }
                    None => 0,
                })
                .collect::<Vec<u32>>()
        })
        .reduce(
            || vec![0u32; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(s, v)| *s += v);
                a
            },
        );

    let m1 = T::from_count(params.permutations + 1);
    let mut pseudo_p = Vec::with_capacity(n);
    let mut category = Vec::with_capacity(n);
    for (obs, count) in observed.iter().zip(&exceed) {
        match obs {
            Some(r) => {
                let p = T::from_count(*count as usize + 1) / m1;
                pseudo_p.push(Some(p));
                category.push(if p.as_f64() <= SIGNIFICANCE {
                    if *r > T::zero() {
                        BivariateCategory::PositiveSignificant
                    } else if *r < T::zero() {
                        BivariateCategory::NegativeSignificant
                    } else {
                        BivariateCategory::NotSignificant
                    }
                } else {
                    BivariateCategory::NotSignificant
                });
            }
            None => {
                pseudo_p.push(None);
                category.push(BivariateCategory::Undefined);
            }
        }
    }
    Ok(BivariateResult {
        local_r: observed,
        pseudo_p,
        category,
    })
}
