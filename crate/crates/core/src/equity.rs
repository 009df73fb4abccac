//! Inequality and group-difference statistics.

use crate::accessibility::{AccessibilityField, DemandZone};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiniResult<T> {
    pub gini: T,
    pub n: usize,
    pub mean: T,
}

/// Gini index of non-negative values, via the sorted form
/// `G = 2 sum_i i x_(i) / (n sum x) - (n + 1) / n`.
///
/// All-zero input has index 0.
pub fn gini<T: Scalar>(values: &[T]) -> Result<GiniResult<T>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("gini values"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < T::zero()) {
        return Err(Error::param("values", format!("gini requires finite values >= 0, got {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = T::from_count(sorted.len());
    let total: T = sorted.iter().copied().sum();
    let mean = total / n;
    if total == T::zero() {
        return Ok(GiniResult {
            gini: T::zero(),
            n: sorted.len(),
            mean,
        });
    }
    let ranked: T = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| T::from_count(i + 1) * x)
        .sum();
    let g = T::lit(2.0) * ranked / (n * total) - (n + T::one()) / n;
    Ok(GiniResult {
        gini: g.max(T::zero()),
        n: sorted.len(),
        mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StratumGini<T> {
    Computed(GiniResult<T>),
    EmptyStratum,
}

impl<T: Copy> StratumGini<T> {
    pub fn result(&self) -> Option<GiniResult<T>> {
        match self {
            StratumGini::Computed(r) => Some(*r),
            StratumGini::EmptyStratum => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratifiedGini<T> {
    pub overall: GiniResult<T>,
    pub urban: StratumGini<T>,
    pub rural: StratumGini<T>,
}

/// Gini of accessibility over all zones and within the urban and rural strata.
pub fn gini_stratified<T: Scalar>(
    field: &AccessibilityField<T>,
    zones: &[DemandZone<T>],
) -> Result<StratifiedGini<T>> {
    let mut all = Vec::with_capacity(zones.len());
    let mut urban = Vec::new();
    let mut rural = Vec::new();
    for z in zones {
        let a = field
            .score(&z.zone_id)
            .ok_or_else(|| Error::UnknownId(z.zone_id.clone()))?;
        all.push(a);
        if z.urban {
            urban.push(a);
        } else {
            rural.push(a);
        }
    }
    let stratum = |v: &[T]| -> Result<StratumGini<T>> {
        if v.is_empty() {
            Ok(StratumGini::EmptyStratum)
        } else {
            gini(v).map(StratumGini::Computed)
        }
    };
    Ok(StratifiedGini {
        overall: gini(&all)?,
        urban: stratum(&urban)?,
        rural: stratum(&rural)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTestStatus {
    Regular,
    /// Undersized sample, or both variances zero with equal means: t = 0, p = 1.
    Degenerate,
    /// Both variances zero with different means: |t| infinite, p = 0.
    InfiniteSeparation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult<T> {
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: T,
    pub mean_b: T,
    pub var_a: T,
    pub var_b: T,
    pub t: T,
    pub df: T,
    pub p: T,
    pub status: TTestStatus,
}

/// Mean and sample (n - 1) variance.
pub fn mean_var<T: Scalar>(x: &[T]) -> (T, T) {
    let n = T::from_count(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    if x.len() < 2 {
        return (mean, T::zero());
    }
    let ss: T = x.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - T::one()))
}

/// Welch's unequal-variance two-sample t-test (two-sided).
///
/// `t` is positive when the mean of `a` exceeds the mean of `b`.
pub fn welch_t_test<T: Scalar>(a: &[T], b: &[T]) -> Result<TTestResult<T>> {
    if let Some(v) = a.iter().chain(b).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("t-test sample value {v}")));
    }
    let (mean_a, var_a) = if a.is_empty() { (T::nan(), T::zero()) } else { mean_var(a) };
    let (mean_b, var_b) = if b.is_empty() { (T::nan(), T::zero()) } else { mean_var(b) };
    let (na, nb) = (T::from_count(a.len()), T::from_count(b.len()));
    let pooled_df = T::from_count((a.len() + b.len()).saturating_sub(2).max(1));
    let base = TTestResult {
        n_a: a.len(),
        n_b: b.len(),
        mean_a,
        mean_b,
        var_a,
        var_b,
        t: T::zero(),
        df: pooled_df,
        p: T::one(),
        status: TTestStatus::Degenerate,
    };
    if a.len() < 2 || b.len() < 2 {
        return Ok(base);
    }
    let se_a = var_a / na;
    let se_b = var_b / nb;
    let se2 = se_a + se_b;
    if se2 == T::zero() {
        if mean_a == mean_b {
            return Ok(base);
        }
        let t = if mean_a > mean_b { T::infinity() } else { T::neg_infinity() };
        return Ok(TTestResult {
            t,
            p: T::zero(),
            status: TTestStatus::InfiniteSeparation,
            ..base
        });
    }
    let t = (mean_a - mean_b) / se2.sqrt();
    let df = se2 * se2
        / (se_a * se_a / (na - T::one()) + se_b * se_b / (nb - T::one()));
    let p = special::student_t_two_sided_p(t.as_f64(), df.as_f64());
    Ok(TTestResult {
        t,
        df,
        p: T::lit(p),
        status: TTestStatus::Regular,
        ..base
    })
}
